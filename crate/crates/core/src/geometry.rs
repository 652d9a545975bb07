//! Positions, distances, path loss, direction angles, and the
//! position-to-angle Jacobian.
//!
//! One angle convention is used everywhere: for a displacement
//! `Δ = to − from` with range `d = ‖Δ‖`,
//!
//! * azimuth `θ = atan2(Δy, Δx)` in `(−π, π]`, ties at ±π resolved to +π,
//! * elevation `φ = asin(Δz / d)` in `[−π/2, π/2]`, measured from the
//!   horizontal x-y plane.
//!
//! This is the unique convention under which both the analytic Jacobian
//! entries and the unit direction vectors used by the LS triangulation,
//! `ξ = [cos θ cos φ, sin θ cos φ, sin φ]ᵀ`, are simultaneously correct.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rxsignal::default_noise_power_w;
use crate::Complex;

/// A 3D position in Cartesian coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component-wise difference `self − other`.
    pub fn delta(&self, other: &Point3) -> [f64; 3] {
        [self.x - other.x, self.y - other.y, self.z - other.z]
    }
}

/// Azimuth/elevation pair in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionAngles {
    /// Azimuth θ in (−π, π].
    pub azimuth: f64,
    /// Elevation φ in [−π/2, π/2], measured from the horizontal plane.
    pub elevation: f64,
}

impl DirectionAngles {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    /// Unit direction vector `[cos θ cos φ, sin θ cos φ, sin φ]`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.azimuth.sin_cos();
        let (sp, cp) = self.elevation.sin_cos();
        [ct * cp, st * cp, sp]
    }
}

/// The single source of geometric and radio truth for one scene.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Base station position.
    pub p_bs: Point3,
    /// RIS position.
    pub p_ris: Point3,
    /// Receiving UE position.
    pub p_ue: Point3,
    /// Target (drone) position.
    pub p_drone: Point3,
    /// Carrier wavelength λ, meters.
    pub lambda: f64,
    /// Path-loss exponent Γ; the per-link loss is ρ = d^Γ.
    pub gamma: f64,
    /// Complex reflection coefficient (RCS) ζ of the target.
    pub zeta: Complex,
    /// Channel bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Noise power σ², watts. Zero selects exact noise-free synthesis.
    pub noise_power_w: f64,
}

impl Default for Scenario {
    /// Rooftop scene: BS (0,0,26), RIS (0,0.5,25.5), UE (2,2,24), drone
    /// (3,3,30); λ = 1 cm, Γ = 2, B = 20 MHz, thermal noise floor.
    fn default() -> Self {
        let bandwidth_hz = 20e6;
        Self {
            p_bs: Point3::new(0.0, 0.0, 26.0),
            p_ris: Point3::new(0.0, 0.5, 25.5),
            p_ue: Point3::new(2.0, 2.0, 24.0),
            p_drone: Point3::new(3.0, 3.0, 30.0),
            lambda: 0.01,
            gamma: 2.0,
            zeta: Complex::new(1.0, 0.0),
            bandwidth_hz,
            noise_power_w: default_noise_power_w(bandwidth_hz),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        for (p, name) in [
            (&self.p_bs, "bs"),
            (&self.p_ris, "ris"),
            (&self.p_ue, "ue"),
            (&self.p_drone, "drone"),
        ] {
            if !p.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "nodes",
                    reason: format!("non-finite position for {name}"),
                });
            }
        }
        let nodes = [self.p_bs, self.p_ris, self.p_ue, self.p_drone];
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                if nodes[i] == nodes[j] {
                    return Err(Error::CoincidentPoints {
                        context: "scenario nodes must be pairwise distinct",
                    });
                }
            }
        }
        if !(self.lambda > 0.0) {
            return Err(Error::NonPositive {
                name: "lambda",
                value: self.lambda,
            });
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("path-loss exponent must be >= 0, got {}", self.gamma),
            });
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::NonPositive {
                name: "bandwidth_hz",
                value: self.bandwidth_hz,
            });
        }
        if !(self.noise_power_w >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_power_w",
                reason: format!("must be >= 0 (0 = noise-free), got {}", self.noise_power_w),
            });
        }
        Ok(())
    }

    pub fn with_zeta(&self, zeta: Complex) -> Self {
        let mut s = self.clone();
        s.zeta = zeta;
        s
    }
}

/// Euclidean distance between two points.
pub fn distance(a: &Point3, b: &Point3) -> f64 {
    let [dx, dy, dz] = b.delta(a);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Path loss ρ = d^Γ.
pub fn path_loss(d: f64, gamma: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositive {
            name: "distance",
            value: d,
        });
    }
    Ok(d.powf(gamma))
}

/// Direction angles of `to` as seen from `from`.
pub fn direction_angles(from: &Point3, to: &Point3) -> Result<DirectionAngles> {
    let [dx, dy, dz] = to.delta(from);
    let d = distance(from, to);
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::CoincidentPoints {
            context: "direction_angles needs two distinct points",
        });
    }
    let mut azimuth = dy.atan2(dx);
    if azimuth == -std::f64::consts::PI {
        azimuth = std::f64::consts::PI;
    }
    let elevation = (dz / d).clamp(-1.0, 1.0).asin();
    Ok(DirectionAngles { azimuth, elevation })
}

/// 3×10 transform from the 10-entry channel parameter vector to the target
/// position. Rows are ordered (x, y, z); column order matches the parameter
/// vector of [`crate::fisher::ParamVector`]: the four gain entries first
/// (identically zero columns), then azimuth/elevation for the BS, RIS, and
/// UE links.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianT {
    pub m: nalgebra::SMatrix<f64, 3, 10>,
}

/// Analytic derivative columns of one link's (azimuth, elevation) pair with
/// respect to the target coordinates. Returns a 3×2 block:
/// column 0 = ∂θ/∂(x,y,z), column 1 = ∂φ/∂(x,y,z).
pub fn angle_position_block(
    anchor: &Point3,
    target: &Point3,
    link: &'static str,
) -> Result<[[f64; 3]; 2]> {
    let ang = direction_angles(anchor, target)?;
    let d = distance(anchor, target);
    let (st, ct) = ang.azimuth.sin_cos();
    let (sp, cp) = ang.elevation.sin_cos();
    if cp.abs() < 1e-12 {
        return Err(Error::SingularGeometry { link });
    }
    let az = [-st / (d * cp), ct / (d * cp), 0.0];
    let el = [-ct * sp / d, -st * sp / d, cp / d];
    Ok([az, el])
}

/// Build the full 3×10 transform for a scenario (RIS-assisted model).
pub fn jacobian_t(s: &Scenario) -> Result<JacobianT> {
    let mut m = nalgebra::SMatrix::<f64, 3, 10>::zeros();
    let blocks = [
        (4usize, angle_position_block(&s.p_bs, &s.p_drone, "bs-drone")?),
        (6, angle_position_block(&s.p_ris, &s.p_drone, "ris-drone")?),
        (8, angle_position_block(&s.p_ue, &s.p_drone, "ue-drone")?),
    ];
    for (col0, [az, el]) in blocks {
        for row in 0..3 {
            m[(row, col0)] = az[row];
            m[(row, col0 + 1)] = el[row];
        }
    }
    Ok(JacobianT { m })
}

/// 3×6 transform for the RIS-free benchmark: gain columns for the single
/// remaining cascade, then the BS and UE angle pairs.
pub fn jacobian_t_no_ris(s: &Scenario) -> Result<nalgebra::SMatrix<f64, 3, 6>> {
    let mut m = nalgebra::SMatrix::<f64, 3, 6>::zeros();
    let blocks = [
        (2usize, angle_position_block(&s.p_bs, &s.p_drone, "bs-drone")?),
        (4, angle_position_block(&s.p_ue, &s.p_drone, "ue-drone")?),
    ];
    for (col0, [az, el]) in blocks {
        for row in 0..3 {
            m[(row, col0)] = az[row];
            m[(row, col0 + 1)] = el[row];
        }
    }
    Ok(m)
}
