//! Least-squares intersection of anchor rays.
//!
//! Each anchor contributes the orthogonal-complement projector of its unit
//! direction, `B = I − ξξᵀ`; the estimate solves
//! `(Σ B_i)·p = Σ B_i·p_i`, the point minimizing the summed squared
//! distances to all rays.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{DirectionAngles, Point3};

/// One anchor with the direction in which it sees the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorRay {
    pub anchor: Point3,
    pub direction: DirectionAngles,
}

fn projector(direction: &DirectionAngles) -> Matrix3<f64> {
    let u = direction.unit_vector();
    let xi = Vector3::new(u[0], u[1], u[2]);
    Matrix3::identity() - xi * xi.transpose()
}

/// Solve for the LS intersection point of the rays.
pub fn triangulate_ls(rays: &[AnchorRay]) -> Result<Point3> {
    if rays.is_empty() {
        return Err(Error::DegenerateGeometry);
    }
    let mut a = Matrix3::<f64>::zeros();
    let mut b = Vector3::<f64>::zeros();
    for ray in rays {
        let proj = projector(&ray.direction);
        let p = Vector3::new(ray.anchor.x, ray.anchor.y, ray.anchor.z);
        a += proj;
        b += proj * p;
    }
    // All rays parallel leaves a rank-2 system.
    let svd = a.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(Error::DegenerateGeometry);
    }
    let p = a.try_inverse().ok_or(Error::DegenerateGeometry)? * b;
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(Error::DegenerateGeometry);
    }
    Ok(Point3::new(p.x, p.y, p.z))
}

/// Summed squared point-to-ray distances at `p`; the LS objective.
pub fn ray_residual(rays: &[AnchorRay], p: &Point3) -> f64 {
    let pv = Vector3::new(p.x, p.y, p.z);
    rays.iter()
        .map(|ray| {
            let proj = projector(&ray.direction);
            let a = Vector3::new(ray.anchor.x, ray.anchor.y, ray.anchor.z);
            (proj * (pv - a)).norm_squared()
        })
        .sum()
}
