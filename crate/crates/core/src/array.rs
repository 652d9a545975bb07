//! Uniform planar array response vectors and their Kronecker compositions.
//!
//! Each axis factor has entries `exp(j·2πd/λ·(i − (m−1)/2)·g)` for
//! `i = 0…m−1`, i.e. phases centered symmetrically about the array
//! centroid. The per-axis geometry factor is `g = cos θ sin φ` on x,
//! `sin θ sin φ` on y, and `cos φ` on z. Composite responses are Kronecker
//! products with the first-axis index varying slowest, so `diag(·)` terms
//! built from them align with the same element enumeration everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DirectionAngles;
use crate::{CVector, Complex};

/// Plane an array lies in. The base station panel is vertical (y-z); the
/// RIS and UE panels face the sky (x-y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Xy,
    Yz,
}

impl Plane {
    fn name(&self) -> &'static str {
        match self {
            Plane::Xy => "xy",
            Plane::Yz => "yz",
        }
    }
}

/// Planar array dimensions and element spacings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpaConfig {
    /// Element count along the first axis (x for xy-planes, y for yz).
    pub m_a: usize,
    /// Element count along the second axis (y for xy-planes, z for yz).
    pub m_b: usize,
    /// Inter-element spacing along the first axis, meters.
    pub d_a: f64,
    /// Inter-element spacing along the second axis, meters.
    pub d_b: f64,
    pub plane: Plane,
}

impl UpaConfig {
    /// Array with half-wavelength spacing on both axes.
    pub fn half_wavelength(m_a: usize, m_b: usize, lambda: f64, plane: Plane) -> Self {
        Self {
            m_a,
            m_b,
            d_a: lambda / 2.0,
            d_b: lambda / 2.0,
            plane,
        }
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.m_a * self.m_b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_a < 1 || self.m_b < 1 {
            return Err(Error::InvalidParameter {
                name: "array dims",
                reason: format!("element counts must be >= 1, got {}x{}", self.m_a, self.m_b),
            });
        }
        if !(self.d_a > 0.0) || !(self.d_b > 0.0) {
            return Err(Error::InvalidParameter {
                name: "array spacing",
                reason: format!("spacings must be > 0, got {} and {}", self.d_a, self.d_b),
            });
        }
        Ok(())
    }
}

/// The three arrays of one scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySet {
    pub bs: UpaConfig,
    pub ris: UpaConfig,
    pub ue: UpaConfig,
}

impl ArraySet {
    /// 8×8 BS (y-z), 6×6 RIS (x-y), 4×4 UE (x-y), all half-wavelength.
    pub fn default_for(lambda: f64) -> Self {
        Self {
            bs: UpaConfig::half_wavelength(8, 8, lambda, Plane::Yz),
            ris: UpaConfig::half_wavelength(6, 6, lambda, Plane::Xy),
            ue: UpaConfig::half_wavelength(4, 4, lambda, Plane::Xy),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bs.validate()?;
        self.ris.validate()?;
        self.ue.validate()?;
        if self.bs.plane != Plane::Yz {
            return Err(Error::PlaneMismatch {
                expected: "yz",
                got: self.bs.plane.name(),
            });
        }
        for (cfg, _) in [(self.ris, "ris"), (self.ue, "ue")] {
            if cfg.plane != Plane::Xy {
                return Err(Error::PlaneMismatch {
                    expected: "xy",
                    got: cfg.plane.name(),
                });
            }
        }
        Ok(())
    }
}

/// A composite array response with the angles that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub v: CVector,
    pub angles: DirectionAngles,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Symmetric index weights `i − (m−1)/2` for one axis.
pub fn axis_offsets(m: usize) -> Vec<f64> {
    let c = (m as f64 - 1.0) / 2.0;
    (0..m).map(|i| i as f64 - c).collect()
}

/// One-axis response vector with geometry factor `g`.
pub fn alpha_axis(m: usize, d: f64, lambda: f64, g: f64) -> CVector {
    let k = 2.0 * std::f64::consts::PI * d / lambda;
    CVector::from_iterator(
        m,
        axis_offsets(m)
            .into_iter()
            .map(|n| Complex::from_polar(1.0, k * n * g)),
    )
}

fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Sky-facing composite `α_x(θ,φ) ⊗ α_y(θ,φ)`.
pub fn steering_xy(cfg: &UpaConfig, lambda: f64, ang: DirectionAngles) -> Result<SteeringVector> {
    if cfg.plane != Plane::Xy {
        return Err(Error::PlaneMismatch {
            expected: "xy",
            got: cfg.plane.name(),
        });
    }
    let (st, ct) = ang.azimuth.sin_cos();
    let sp = ang.elevation.sin();
    let ax = alpha_axis(cfg.m_a, cfg.d_a, lambda, ct * sp);
    let ay = alpha_axis(cfg.m_b, cfg.d_b, lambda, st * sp);
    Ok(SteeringVector {
        v: kron_vec(&ax, &ay),
        angles: ang,
    })
}

/// Vertical-panel composite `α_y(θ,φ) ⊗ α_z(φ)`.
pub fn steering_yz(cfg: &UpaConfig, lambda: f64, ang: DirectionAngles) -> Result<SteeringVector> {
    if cfg.plane != Plane::Yz {
        return Err(Error::PlaneMismatch {
            expected: "yz",
            got: cfg.plane.name(),
        });
    }
    let (st, _) = ang.azimuth.sin_cos();
    let (sp, cp) = ang.elevation.sin_cos();
    let ay = alpha_axis(cfg.m_a, cfg.d_a, lambda, st * sp);
    let az = alpha_axis(cfg.m_b, cfg.d_b, lambda, cp);
    Ok(SteeringVector {
        v: kron_vec(&ay, &az),
        angles: ang,
    })
}

/// Composite response for whichever plane the array lies in.
pub fn steering(cfg: &UpaConfig, lambda: f64, ang: DirectionAngles) -> Result<SteeringVector> {
    match cfg.plane {
        Plane::Xy => steering_xy(cfg, lambda, ang),
        Plane::Yz => steering_yz(cfg, lambda, ang),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const LAMBDA: f64 = 0.01;

    fn xy(m_a: usize, m_b: usize) -> UpaConfig {
        UpaConfig::half_wavelength(m_a, m_b, LAMBDA, Plane::Xy)
    }

    fn yz(m_a: usize, m_b: usize) -> UpaConfig {
        UpaConfig::half_wavelength(m_a, m_b, LAMBDA, Plane::Yz)
    }

    #[test]
    fn alpha_axis_examples() {
        let one = alpha_axis(1, LAMBDA / 2.0, LAMBDA, 0.7);
        assert_eq!(one.len(), 1);
        assert_abs_diff_eq!(one[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(one[0].im, 0.0, epsilon = 1e-15);

        let broadside = alpha_axis(5, LAMBDA / 2.0, LAMBDA, 0.0);
        for e in broadside.iter() {
            assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-15);
        }

        // m=2, d=λ/2, g=1 -> [e^{-jπ/2}, e^{+jπ/2}] = [-j, +j]
        let endfire = alpha_axis(2, LAMBDA / 2.0, LAMBDA, 1.0);
        assert_abs_diff_eq!(endfire[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(endfire[0].im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(endfire[1].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(endfire[1].im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn steering_xy_examples() {
        let single = steering_xy(&xy(1, 1), LAMBDA, DirectionAngles::new(0.3, 0.4)).unwrap();
        assert_eq!(single.len(), 1);
        assert_abs_diff_eq!(single.v[0].re, 1.0, epsilon = 1e-15);

        let flat = steering_xy(&xy(3, 2), LAMBDA, DirectionAngles::new(0.7, 0.0)).unwrap();
        for e in flat.v.iter() {
            assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-14);
        }

        let v = steering_xy(&xy(2, 2), LAMBDA, DirectionAngles::new(0.0, FRAC_PI_2))
            .unwrap()
            .v;
        let expect = [(0.0, -1.0), (0.0, -1.0), (0.0, 1.0), (0.0, 1.0)];
        for (e, (re, im)) in v.iter().zip(expect) {
            assert_abs_diff_eq!(e.re, re, epsilon = 1e-15);
            assert_abs_diff_eq!(e.im, im, epsilon = 1e-15);
        }
    }

    #[test]
    fn steering_yz_examples() {
        let single = steering_yz(&yz(1, 1), LAMBDA, DirectionAngles::new(0.1, 0.2)).unwrap();
        assert_eq!(single.len(), 1);

        // θ=0 leaves the α_y part all-ones.
        let v = steering_yz(&yz(2, 3), LAMBDA, DirectionAngles::new(0.0, 0.9))
            .unwrap()
            .v;
        for row in 0..2 {
            for col in 0..3 {
                let e = v[row * 3 + col];
                let base = v[col];
                assert_abs_diff_eq!(e.re, base.re, epsilon = 1e-14);
                assert_abs_diff_eq!(e.im, base.im, epsilon = 1e-14);
            }
        }

        let v = steering_yz(&yz(2, 2), LAMBDA, DirectionAngles::new(FRAC_PI_2, FRAC_PI_2))
            .unwrap()
            .v;
        let expect = [(0.0, -1.0), (0.0, -1.0), (0.0, 1.0), (0.0, 1.0)];
        for (e, (re, im)) in v.iter().zip(expect) {
            assert_abs_diff_eq!(e.re, re, epsilon = 1e-14);
            assert_abs_diff_eq!(e.im, im, epsilon = 1e-14);
        }
    }

    #[test]
    fn plane_mismatch_is_an_error() {
        assert!(matches!(
            steering_xy(&yz(2, 2), LAMBDA, DirectionAngles::new(0.0, 0.0)),
            Err(Error::PlaneMismatch { .. })
        ));
        assert!(matches!(
            steering_yz(&xy(2, 2), LAMBDA, DirectionAngles::new(0.0, 0.0)),
            Err(Error::PlaneMismatch { .. })
        ));
    }

    #[test]
    fn kron_matches_explicit_double_loop_up_to_3x3() {
        let ang = DirectionAngles::new(0.52, 0.71);
        for m_a in 1..=3usize {
            for m_b in 1..=3usize {
                let cfg = xy(m_a, m_b);
                let v = steering_xy(&cfg, LAMBDA, ang).unwrap().v;
                let (st, ct) = ang.azimuth.sin_cos();
                let sp = ang.elevation.sin();
                let ax = alpha_axis(m_a, cfg.d_a, LAMBDA, ct * sp);
                let ay = alpha_axis(m_b, cfg.d_b, LAMBDA, st * sp);
                for ia in 0..m_a {
                    for ib in 0..m_b {
                        let want = ax[ia] * ay[ib];
                        let got = v[ia * m_b + ib];
                        assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-15);
                        assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-15);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn entries_have_unit_modulus(
            m_a in 1usize..6, m_b in 1usize..6,
            az in -PI..PI, el in -FRAC_PI_2..FRAC_PI_2,
        ) {
            let v = steering_xy(&xy(m_a, m_b), LAMBDA, DirectionAngles::new(az, el))
                .unwrap()
                .v;
            for e in v.iter() {
                prop_assert!((e.norm() - 1.0).abs() < 1e-12);
            }
            let norm = v.norm();
            prop_assert!((norm - (v.len() as f64).sqrt()).abs() < 1e-10);
        }

        #[test]
        fn axis_factor_is_conjugate_symmetric(
            m in 1usize..9, g in -1.0f64..1.0,
        ) {
            let a = alpha_axis(m, LAMBDA / 2.0, LAMBDA, g);
            for i in 0..m {
                let mirrored = a[m - 1 - i].conj();
                prop_assert!((a[i] - mirrored).norm() < 1e-12);
            }
        }
    }
}
