//! Two-stage 2D angle extraction from an estimated channel vector.
//!
//! The estimate is correlated against the array's steering composition over
//! a coarse grid (default 1° in both axes over the admissible sector), then
//! refined on a 0.01° grid around the coarse peak. The peak location is
//! invariant to any nonzero complex scaling of the input, which is what
//! makes the factorization's scale ambiguity harmless. Ties resolve to the
//! lowest grid index (azimuth-major scan, elevation fastest).

use crate::array::{Plane, UpaConfig};
use crate::error::{Error, Result};
use crate::geometry::DirectionAngles;
use crate::{CRowVector, Complex};

/// Search sector and grid resolutions, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    /// Azimuth sector, treated as half-open `(lo, hi]`.
    pub az_range: (f64, f64),
    /// Elevation sector, inclusive.
    pub el_range: (f64, f64),
    pub coarse_step: f64,
    pub refine_step: f64,
    /// Half-width of the refinement window around the coarse peak.
    pub refine_halfwidth: f64,
}

impl Default for SearchGrid {
    /// Full azimuth, elevation [0°, 90°], 1° coarse grid, 0.01° refinement
    /// within ±1°.
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            az_range: (-std::f64::consts::PI, std::f64::consts::PI),
            el_range: (0.0, std::f64::consts::FRAC_PI_2),
            coarse_step: deg,
            refine_step: 0.01 * deg,
            refine_halfwidth: deg,
        }
    }
}

impl SearchGrid {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.coarse_step, "coarse_step"),
            (self.refine_step, "refine_step"),
            (self.refine_halfwidth, "refine_halfwidth"),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "search grid",
                    reason: format!("{name} must be > 0, got {v}"),
                });
            }
        }
        if !(self.az_range.1 > self.az_range.0) || !(self.el_range.1 >= self.el_range.0) {
            return Err(Error::InvalidParameter {
                name: "search grid",
                reason: "empty search sector".into(),
            });
        }
        Ok(())
    }
}

/// Diagnostics from one search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchInfo {
    pub coarse: DirectionAngles,
    pub peak_value: f64,
}

/// Writes `exp(j·rate·(i − (m−1)/2))` into `buf` using one phasor chain.
fn fill_axis(buf: &mut [Complex], rate: f64) {
    let m = buf.len();
    let start = Complex::from_polar(1.0, -rate * (m as f64 - 1.0) / 2.0);
    let step = Complex::from_polar(1.0, rate);
    let mut cur = start;
    for e in buf.iter_mut() {
        *e = cur;
        cur *= step;
    }
}

struct Correlator<'a> {
    h: &'a CRowVector,
    cfg: &'a UpaConfig,
    k_a: f64,
    k_b: f64,
    buf_a: Vec<Complex>,
    buf_b: Vec<Complex>,
}

impl<'a> Correlator<'a> {
    fn new(h: &'a CRowVector, cfg: &'a UpaConfig, lambda: f64) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            h,
            cfg,
            k_a: two_pi * cfg.d_a / lambda,
            k_b: two_pi * cfg.d_b / lambda,
            buf_a: vec![Complex::new(0.0, 0.0); cfg.m_a],
            buf_b: vec![Complex::new(0.0, 0.0); cfg.m_b],
        }
    }

    /// |h · steering(θ, φ)|² at one direction.
    fn eval(&mut self, az: f64, el: f64) -> f64 {
        let (st, ct) = az.sin_cos();
        let (sp, cp) = el.sin_cos();
        let (g_a, g_b) = match self.cfg.plane {
            Plane::Xy => (ct * sp, st * sp),
            Plane::Yz => (st * sp, cp),
        };
        fill_axis(&mut self.buf_a, self.k_a * g_a);
        fill_axis(&mut self.buf_b, self.k_b * g_b);
        let m_b = self.cfg.m_b;
        let mut total = Complex::new(0.0, 0.0);
        for (ia, ua) in self.buf_a.iter().enumerate() {
            let mut inner = Complex::new(0.0, 0.0);
            let base = ia * m_b;
            for (ib, vb) in self.buf_b.iter().enumerate() {
                inner += self.h[base + ib] * vb;
            }
            total += ua * inner;
        }
        total.norm_sqr()
    }
}

fn scan(
    corr: &mut Correlator<'_>,
    az_points: &[f64],
    el_points: &[f64],
) -> (DirectionAngles, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut best_dir = DirectionAngles::new(az_points[0], el_points[0]);
    for &az in az_points {
        for &el in el_points {
            let v = corr.eval(az, el);
            if v > best {
                best = v;
                best_dir = DirectionAngles::new(az, el);
            }
        }
    }
    (best_dir, best)
}

fn range_points(lo: f64, hi: f64, step: f64, include_lo: bool) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as i64;
    let start = if include_lo { 0 } else { 1 };
    (start..=n.max(start))
        .map(|i| lo + i as f64 * step)
        .filter(|v| *v <= hi + 1e-12)
        .collect()
}

fn window_points(center: f64, halfwidth: f64, step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = (halfwidth / step).round() as i64;
    (-n..=n)
        .map(|i| center + i as f64 * step)
        .filter(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12)
        .collect()
}

/// Locate the angles whose steering composition best matches `h`.
pub fn angle_search_2d(
    h: &CRowVector,
    cfg: &UpaConfig,
    lambda: f64,
    grid: &SearchGrid,
) -> Result<(DirectionAngles, SearchInfo)> {
    grid.validate()?;
    if h.len() != cfg.len() {
        return Err(Error::DimensionMismatch {
            context: format!("estimate has {} entries for a {}-element array", h.len(), cfg.len()),
        });
    }
    if h.iter().all(|e| e.re == 0.0 && e.im == 0.0) {
        return Err(Error::DegenerateInput {
            context: "all-zero channel estimate",
        });
    }

    let mut corr = Correlator::new(h, cfg, lambda);
    let az_coarse = range_points(grid.az_range.0, grid.az_range.1, grid.coarse_step, false);
    let el_coarse = range_points(grid.el_range.0, grid.el_range.1, grid.coarse_step, true);
    let (coarse, _) = scan(&mut corr, &az_coarse, &el_coarse);

    let az_fine = window_points(
        coarse.azimuth,
        grid.refine_halfwidth,
        grid.refine_step,
        grid.az_range.0,
        grid.az_range.1,
    );
    let el_fine = window_points(
        coarse.elevation,
        grid.refine_halfwidth,
        grid.refine_step,
        grid.el_range.0,
        grid.el_range.1,
    );
    let (refined, peak) = scan(&mut corr, &az_fine, &el_fine);
    Ok((
        refined,
        SearchInfo {
            coarse,
            peak_value: peak.sqrt(),
        },
    ))
}
