//! Three-stage localizer: channel factorization, angle extraction, and
//! triangulation.
//!
//! The vertical BS panel cannot tell an azimuth θ from its mirror π−θ
//! (only sin θ enters its response), so the composition evaluates both
//! candidates in the triangulation and keeps the one with the smaller ray
//! residual.

mod cgd;
mod search;
mod triangulate;

pub use cgd::{
    cgd_estimate, gradients, objective_value, CgdConfig, ChannelEstimates, InitPolicy, StepPolicy,
    TruthInit,
};
pub use search::{angle_search_2d, SearchGrid, SearchInfo};
pub use triangulate::{ray_residual, triangulate_ls, AnchorRay};

use crate::array::{steering, ArraySet, UpaConfig};
use crate::channel::build_channels;
use crate::error::{Error, Result};
use crate::geometry::{DirectionAngles, Point3, Scenario};
use crate::rxsignal::ReceivedBlock;
use crate::sounding::SoundingFrames;
use crate::{CMatrix, CRowVector, CVector, Complex};

/// Extracted angle estimates per link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimates {
    pub bs: DirectionAngles,
    /// None when the RIS path is inactive.
    pub ris: Option<DirectionAngles>,
    pub ue: DirectionAngles,
    pub bs_info: SearchInfo,
    pub ris_info: Option<SearchInfo>,
    pub ue_info: SearchInfo,
}

/// Result of one localization.
#[derive(Debug, Clone)]
pub struct LocalizationResult {
    pub p_hat: Point3,
    pub angles: Option<AngleEstimates>,
    /// Position error against the scenario's ground truth.
    pub error_m: Option<f64>,
    /// Set when the factorization carried no usable target energy.
    pub degenerate: bool,
    /// True when the mirrored BS azimuth candidate won.
    pub bs_mirror_used: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub restart_index: usize,
}

fn mirror_azimuth(az: f64) -> f64 {
    let mirrored = std::f64::consts::PI - az;
    if mirrored > std::f64::consts::PI {
        mirrored - 2.0 * std::f64::consts::PI
    } else {
        mirrored
    }
}

/// Joint minimum-norm LS refit of (RIS path gain, weak-path channel) with
/// the RIS steering structure pinned at its extracted angles.
///
/// The unstructured factorization splits the two paths' shared slot-space
/// components by coefficient cost, which buries the weak BS→drone channel
/// under leakage from the far stronger RIS cascade. Re-solving
/// `min ‖(g, h2)‖  s.t.  g·(aᴴΩ̄) + h2·F̄ = h4ᴴY/(√(P/2)·‖h4‖²)`
/// gives the structured RIS column the cheap representation, so the
/// leakage collapses and h2 comes back clean.
fn refit_weak_path(
    y: &CMatrix,
    frames: &SoundingFrames,
    h4: &CVector,
    ris_dir: DirectionAngles,
    ris_cfg: &UpaConfig,
    lambda: f64,
) -> Option<CRowVector> {
    let c = frames.pilot_amplitude();
    let h4_nsq = h4.norm_squared();
    if !(h4_nsq > 0.0) || !(c > 0.0) {
        return None;
    }
    let k = y.ncols();
    let m_b = frames.f_bar.nrows();

    // Best slot row for this left factor.
    let mut z = CVector::zeros(k);
    for col in 0..k {
        let mut acc = Complex::new(0.0, 0.0);
        for row in 0..y.nrows() {
            acc += h4[row].conj() * y[(row, col)];
        }
        z[col] = acc / Complex::new(c * h4_nsq, 0.0);
    }

    // Structured RIS slot signature at the extracted angles.
    let a_ris = steering(ris_cfg, lambda, ris_dir).ok()?.v;
    let mut r = CVector::zeros(k);
    for col in 0..k {
        let mut acc = Complex::new(0.0, 0.0);
        for row in 0..ris_cfg.len() {
            acc += a_ris[row].conj() * frames.omega_bar[(row, col)];
        }
        r[col] = acc;
    }

    // Gram of the stacked rows [r; F̄]: G[k,l] = Σ_rows A[row,k]·conj(A[row,l]).
    let mut gram = CMatrix::zeros(k, k);
    for kk in 0..k {
        for ll in 0..k {
            let mut acc = r[kk] * r[ll].conj();
            for b in 0..m_b {
                acc += frames.f_bar[(b, kk)] * frames.f_bar[(b, ll)].conj();
            }
            gram[(kk, ll)] = acc;
        }
    }
    let w = gram.lu().solve(&z)?;
    let mut h2 = CRowVector::zeros(m_b);
    for b in 0..m_b {
        let mut acc = Complex::new(0.0, 0.0);
        for kk in 0..k {
            acc += frames.f_bar[(b, kk)].conj() * w[kk];
        }
        h2[b] = acc;
    }
    Some(h2)
}

/// Run the full pipeline on one received block.
pub fn localize(
    block: &ReceivedBlock,
    s: &Scenario,
    arrays: &ArraySet,
    frames: &SoundingFrames,
    cfg: &CgdConfig,
    grid: &SearchGrid,
    seed: u64,
) -> Result<LocalizationResult> {
    let y = if cfg.subtract_known_interference {
        &block.y - &block.interference_known
    } else {
        block.y.clone()
    };

    let truth = match cfg.init_policy {
        InitPolicy::TruthPerturbed { .. } => {
            let ch = build_channels(s, arrays)?;
            Some(TruthInit {
                bs_row: ch.bs_drone.clone(),
                ris_row: ch.ris_drone.clone(),
                ue_col: &ch.drone_ue * s.zeta,
            })
        }
        InitPolicy::Random => None,
    };

    let noise_energy = if block.sigma2 > 0.0 {
        Some(block.sigma2 * (y.nrows() * y.ncols()) as f64)
    } else {
        None
    };
    let est = cgd_estimate(&y, frames, cfg, seed, truth.as_ref(), noise_energy)?;

    // Energy the fitted model explains, per path.
    let pilot = frames.pilot_amplitude();
    let h4_norm = est.ue_col.norm();
    let direct_energy = pilot * h4_norm * (&est.bs_row * &frames.f_bar).norm();
    let ris_energy = pilot * h4_norm * (&est.ris_row * &frames.omega_bar).norm();
    let y_norm = y.norm();
    if y_norm == 0.0 || direct_energy.max(ris_energy) <= 1e-12 * y_norm {
        let centroid = Point3::new(
            (s.p_bs.x + s.p_ris.x + s.p_ue.x) / 3.0,
            (s.p_bs.y + s.p_ris.y + s.p_ue.y) / 3.0,
            (s.p_bs.z + s.p_ris.z + s.p_ue.z) / 3.0,
        );
        let err = crate::geometry::distance(&centroid, &s.p_drone);
        return Ok(LocalizationResult {
            p_hat: centroid,
            angles: None,
            error_m: Some(err),
            degenerate: true,
            bs_mirror_used: false,
            iterations: est.iterations,
            final_objective: est.final_objective,
            restart_index: est.restart_index,
        });
    }

    let ris = if frames.ris_active() {
        Some(angle_search_2d(&est.ris_row, &arrays.ris, s.lambda, grid)?)
    } else {
        None
    };
    let ue_row = CRowVector::from_iterator(est.ue_col.len(), est.ue_col.iter().map(Complex::conj));
    let (ue_dir, ue_info) = angle_search_2d(&ue_row, &arrays.ue, s.lambda, grid)?;

    let bs_channel = match (&ris, cfg.structured_refit) {
        (Some((ris_dir, _)), true) => {
            refit_weak_path(&y, frames, &est.ue_col, *ris_dir, &arrays.ris, s.lambda)
                .unwrap_or_else(|| est.bs_row.clone())
        }
        _ => est.bs_row.clone(),
    };
    let (bs_dir, bs_info) = angle_search_2d(&bs_channel, &arrays.bs, s.lambda, grid)?;

    let build_rays = |bs: DirectionAngles| {
        let mut rays = vec![AnchorRay {
            anchor: s.p_bs,
            direction: bs,
        }];
        if let Some((rd, _)) = ris {
            rays.push(AnchorRay {
                anchor: s.p_ris,
                direction: rd,
            });
        }
        rays.push(AnchorRay {
            anchor: s.p_ue,
            direction: ue_dir,
        });
        rays
    };

    let primary = build_rays(bs_dir);
    let mirrored_dir = DirectionAngles::new(mirror_azimuth(bs_dir.azimuth), bs_dir.elevation);
    let mirrored = build_rays(mirrored_dir);

    let solve = |rays: &[AnchorRay]| -> Option<(Point3, f64)> {
        triangulate_ls(rays)
            .ok()
            .map(|p| (p, ray_residual(rays, &p)))
    };
    let cand_a = solve(&primary);
    let cand_b = solve(&mirrored);
    let (p_hat, bs_used, mirror_flag) = match (cand_a, cand_b) {
        (Some((pa, ra)), Some((pb, rb))) => {
            if rb < ra {
                (pb, mirrored_dir, true)
            } else {
                (pa, bs_dir, false)
            }
        }
        (Some((pa, _)), None) => (pa, bs_dir, false),
        (None, Some((pb, _))) => (pb, mirrored_dir, true),
        (None, None) => return Err(Error::DegenerateGeometry),
    };

    Ok(LocalizationResult {
        p_hat,
        angles: Some(AngleEstimates {
            bs: bs_used,
            ris: ris.map(|(d, _)| d),
            ue: ue_dir,
            bs_info,
            ris_info: ris.map(|(_, i)| i),
            ue_info,
        }),
        error_m: Some(crate::geometry::distance(&p_hat, &s.p_drone)),
        degenerate: false,
        bs_mirror_used: mirror_flag,
        iterations: est.iterations,
        final_objective: est.final_objective,
        restart_index: est.restart_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering, Plane, UpaConfig};
    use crate::channel::cascade;
    use crate::geometry::direction_angles;
    use crate::rxsignal::synthesize;
    use crate::sounding::{build_frames, RisPolicy};
    use crate::{CMatrix, CVector};
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Vector3};

    fn setup(k: usize) -> (Scenario, ArraySet, SoundingFrames) {
        let s = Scenario::default();
        let arrays = ArraySet::default_for(s.lambda);
        let frames = build_frames(&s, &arrays, k, 1.0, 17, &RisPolicy::default(), true).unwrap();
        (s, arrays, frames)
    }

    fn truth_init(s: &Scenario, arrays: &ArraySet) -> TruthInit {
        let ch = build_channels(s, arrays).unwrap();
        TruthInit {
            bs_row: ch.bs_drone.clone(),
            ris_row: ch.ris_drone.clone(),
            ue_col: &ch.drone_ue * s.zeta,
        }
    }

    fn clean_block(s: &Scenario, arrays: &ArraySet, frames: &SoundingFrames) -> ReceivedBlock {
        let mut sn = s.clone();
        sn.noise_power_w = 0.0;
        let ch = build_channels(&sn, arrays).unwrap();
        synthesize(&sn, &ch, frames, 0).unwrap()
    }

    #[test]
    fn gradients_vanish_at_the_noise_free_truth() {
        let (s, arrays, frames) = setup(12);
        let block = clean_block(&s, &arrays, &frames);
        let y = &block.y - &block.interference_known;
        let t = truth_init(&s, &arrays);
        let (g4, g2, g3) = gradients(&y, &frames, &t.bs_row, &t.ris_row, &t.ue_col);
        let y_norm = y.norm();
        assert!(g4.norm() < 1e-8 * y_norm, "h4 gradient {}", g4.norm());
        assert!(g2.norm() < 1e-8 * y_norm, "h2 gradient {}", g2.norm());
        assert!(g3.norm() < 1e-8 * y_norm, "h3 gradient {}", g3.norm());
        let f = objective_value(&y, &frames, &t.bs_row, &t.ris_row, &t.ue_col);
        assert!(f < 1e-16 * y_norm * y_norm, "objective {f}");
    }

    /// Finite differences of the objective w.r.t. stacked re/im parts. The
    /// conjugate gradient g relates to them by ∂f/∂Re = 2·Re(g) and
    /// ∂f/∂Im = 2·Im(g).
    fn fd_gradient(
        y: &CMatrix,
        frames: &SoundingFrames,
        h2: &CRowVector,
        h3: &CRowVector,
        h4: &CVector,
        which: usize,
        idx: usize,
        step: f64,
    ) -> Complex {
        let eval = |h2: &CRowVector, h3: &CRowVector, h4: &CVector| {
            objective_value(y, frames, h2, h3, h4)
        };
        let mut probe = |dre: f64, dim: f64| {
            let mut h2c = h2.clone();
            let mut h3c = h3.clone();
            let mut h4c = h4.clone();
            let bump = Complex::new(dre, dim);
            match which {
                0 => h4c[idx] += bump,
                1 => h2c[idx] += bump,
                _ => h3c[idx] += bump,
            }
            eval(&h2c, &h3c, &h4c)
        };
        let dre = (probe(step, 0.0) - probe(-step, 0.0)) / (2.0 * step);
        let dim = (probe(0.0, step) - probe(0.0, -step)) / (2.0 * step);
        Complex::new(dre / 2.0, dim / 2.0)
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let s = Scenario::default();
        let arrays = ArraySet {
            bs: UpaConfig::half_wavelength(2, 2, s.lambda, Plane::Yz),
            ris: UpaConfig::half_wavelength(2, 2, s.lambda, Plane::Xy),
            ue: UpaConfig::half_wavelength(2, 2, s.lambda, Plane::Xy),
        };
        let frames = build_frames(&s, &arrays, 5, 2.0, 3, &RisPolicy::default(), true).unwrap();
        let mut rng = crate::seeds::rng(5, &[1]);
        let mut draw = || {
            use rand::Rng;
            use rand_distr::StandardNormal;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(re, im)
        };
        let m_u = arrays.ue.len();
        let y = CMatrix::from_fn(m_u, 5, |_, _| draw());
        let h2 = CRowVector::from_fn(arrays.bs.len(), |_, _| draw());
        let h3 = CRowVector::from_fn(arrays.ris.len(), |_, _| draw());
        let h4 = CVector::from_fn(m_u, |_, _| draw());

        let (g4, g2, g3) = gradients(&y, &frames, &h2, &h3, &h4);
        for idx in 0..m_u {
            let fd = fd_gradient(&y, &frames, &h2, &h3, &h4, 0, idx, 1e-6);
            assert!((g4[idx] - fd).norm() <= 1e-6 * fd.norm().max(1e-6), "h4[{idx}]");
        }
        for idx in 0..arrays.bs.len() {
            let fd = fd_gradient(&y, &frames, &h2, &h3, &h4, 1, idx, 1e-6);
            assert!((g2[idx] - fd).norm() <= 1e-6 * fd.norm().max(1e-6), "h2[{idx}]");
        }
        for idx in 0..arrays.ris.len() {
            let fd = fd_gradient(&y, &frames, &h2, &h3, &h4, 2, idx, 1e-6);
            assert!((g3[idx] - fd).norm() <= 1e-6 * fd.norm().max(1e-6), "h3[{idx}]");
        }
    }

    #[test]
    fn objective_is_invariant_to_the_scale_ambiguity() {
        let (s, arrays, frames) = setup(6);
        let block = clean_block(&s, &arrays, &frames);
        let y = &block.y - &block.interference_known;
        let t = truth_init(&s, &arrays);
        let f0 = objective_value(&y, &frames, &t.bs_row, &t.ris_row, &t.ue_col);
        for c in [Complex::new(2.0, 0.0), Complex::new(0.3, -1.1)] {
            let h2 = &t.bs_row * c;
            let h3 = &t.ris_row * c;
            let h4 = &t.ue_col / c;
            let f = objective_value(&y, &frames, &h2, &h3, &h4);
            let scale = y.norm_squared();
            assert!(
                (f - f0).abs() <= 1e-12 * scale.max(1.0),
                "objective moved from {f0} to {f}"
            );
        }
    }

    #[test]
    fn objective_trace_is_monotone_under_backtracking() {
        let (mut s, arrays, _) = setup(2);
        s.noise_power_w = 1e-4;
        // Normalized-scale instance so a unit initial step is meaningful.
        let arrays_small = ArraySet {
            bs: UpaConfig::half_wavelength(2, 2, s.lambda, Plane::Yz),
            ris: UpaConfig::half_wavelength(2, 2, s.lambda, Plane::Xy),
            ue: UpaConfig::half_wavelength(2, 2, s.lambda, Plane::Xy),
        };
        let frames =
            build_frames(&s, &arrays_small, 8, 2.0, 3, &RisPolicy::default(), true).unwrap();
        let ch = build_channels(&s, &arrays_small).unwrap();
        let block = synthesize(&s, &ch, &frames, 7).unwrap();
        let y = &block.y - &block.interference_known;
        let cfg = CgdConfig {
            max_iters: 60,
            step_policy: StepPolicy::Backtracking { initial_step: 1.0 },
            ..CgdConfig::default()
        };
        let est = cgd_estimate(&y, &frames, &cfg, 11, None, None).unwrap();
        let trace = &est.objective_trace;
        assert!(!trace.is_empty());
        let f0 = trace[0];
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * f0, "trace increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn objective_trace_is_monotone_under_exact_steps() {
        let (s, arrays, frames) = setup(10);
        let ch = build_channels(&s, &arrays).unwrap();
        let block = synthesize(&s, &ch, &frames, 3).unwrap();
        let y = &block.y - &block.interference_known;
        let est = cgd_estimate(&y, &frames, &CgdConfig::default(), 5, None, None).unwrap();
        let f0 = est.objective_trace[0];
        for w in est.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * f0);
        }
    }

    #[test]
    fn determinism_same_seed_same_result() {
        let (s, arrays, frames) = setup(8);
        let ch = build_channels(&s, &arrays).unwrap();
        let block = synthesize(&s, &ch, &frames, 21).unwrap();
        let y = &block.y - &block.interference_known;
        let cfg = CgdConfig {
            max_iters: 40,
            ..CgdConfig::default()
        };
        let a = cgd_estimate(&y, &frames, &cfg, 3, None, None).unwrap();
        let b = cgd_estimate(&y, &frames, &cfg, 3, None, None).unwrap();
        assert_eq!(a.ue_col, b.ue_col);
        assert_eq!(a.bs_row, b.bs_row);
        assert_eq!(a.restart_index, b.restart_index);
    }

    #[test]
    fn search_returns_exact_grid_points_exactly() {
        let s = Scenario::default();
        let cfg = UpaConfig::half_wavelength(4, 4, s.lambda, Plane::Xy);
        let deg = std::f64::consts::PI / 180.0;
        let target = DirectionAngles::new(37.0 * deg, 55.0 * deg);
        let a = steering(&cfg, s.lambda, target).unwrap().v;
        let h = CRowVector::from_iterator(a.len(), a.iter().map(Complex::conj));
        let (found, _) = angle_search_2d(&h, &cfg, s.lambda, &SearchGrid::default()).unwrap();
        assert_relative_eq!(found.azimuth, target.azimuth, max_relative = 1e-12);
        assert_relative_eq!(found.elevation, target.elevation, max_relative = 1e-12);
    }

    #[test]
    fn search_is_scale_invariant() {
        let s = Scenario::default();
        let cfg = UpaConfig::half_wavelength(4, 4, s.lambda, Plane::Xy);
        let deg = std::f64::consts::PI / 180.0;
        let target = DirectionAngles::new(-102.34 * deg, 18.76 * deg);
        let a = steering(&cfg, s.lambda, target).unwrap().v;
        let h = CRowVector::from_iterator(a.len(), a.iter().map(Complex::conj));
        let (base, _) = angle_search_2d(&h, &cfg, s.lambda, &SearchGrid::default()).unwrap();
        let scaled = &h * Complex::new(-0.03, 2.7);
        let (same, _) = angle_search_2d(&scaled, &cfg, s.lambda, &SearchGrid::default()).unwrap();
        assert_eq!(base, same);
    }

    #[test]
    fn search_off_grid_error_is_within_one_refine_step() {
        let s = Scenario::default();
        let cfg = UpaConfig::half_wavelength(4, 4, s.lambda, Plane::Xy);
        let deg = std::f64::consts::PI / 180.0;
        // Exhaustive-oracle check on deliberately off-grid angles.
        for (az_deg, el_deg) in [(24.137, 61.493), (-77.772, 12.301), (141.006, 44.444)] {
            let target = DirectionAngles::new(az_deg * deg, el_deg * deg);
            let a = steering(&cfg, s.lambda, target).unwrap().v;
            let h = CRowVector::from_iterator(a.len(), a.iter().map(Complex::conj));
            let (found, _) = angle_search_2d(&h, &cfg, s.lambda, &SearchGrid::default()).unwrap();
            let tol = 0.01 * deg * 1.0001;
            assert!(
                (found.azimuth - target.azimuth).abs() <= tol,
                "azimuth error {}",
                (found.azimuth - target.azimuth).abs() / deg
            );
            assert!(
                (found.elevation - target.elevation).abs() <= tol,
                "elevation error {}",
                (found.elevation - target.elevation).abs() / deg
            );
        }
    }

    #[test]
    fn search_rejects_zero_input() {
        let s = Scenario::default();
        let cfg = UpaConfig::half_wavelength(3, 3, s.lambda, Plane::Xy);
        let h = CRowVector::zeros(9);
        assert!(matches!(
            angle_search_2d(&h, &cfg, s.lambda, &SearchGrid::default()),
            Err(Error::DegenerateInput { .. })
        ));
    }

    #[test]
    fn triangulation_recovers_the_exact_intersection() {
        let s = Scenario::default();
        let rays: Vec<AnchorRay> = [s.p_bs, s.p_ris, s.p_ue]
            .iter()
            .map(|anchor| AnchorRay {
                anchor: *anchor,
                direction: direction_angles(anchor, &s.p_drone).unwrap(),
            })
            .collect();
        let p = triangulate_ls(&rays).unwrap();
        assert!(crate::geometry::distance(&p, &s.p_drone) < 1e-9);
    }

    /// Generic normal-equations solve over explicit 3x3 accumulation; the
    /// oracle for weighting behavior.
    fn normal_equations_oracle(rays: &[AnchorRay]) -> Point3 {
        let mut a = Matrix3::<f64>::zeros();
        let mut b = Vector3::<f64>::zeros();
        for ray in rays {
            let u = ray.direction.unit_vector();
            let xi = Vector3::new(u[0], u[1], u[2]);
            let proj = Matrix3::identity() - xi * xi.transpose();
            a += proj;
            b += proj * Vector3::new(ray.anchor.x, ray.anchor.y, ray.anchor.z);
        }
        let p = a.lu().solve(&b).unwrap();
        Point3::new(p.x, p.y, p.z)
    }

    #[test]
    fn duplicated_anchor_matches_weighted_oracle() {
        let s = Scenario::default();
        let mk = |anchor: &Point3| AnchorRay {
            anchor: *anchor,
            direction: direction_angles(anchor, &s.p_drone).unwrap(),
        };
        let mut rays = vec![mk(&s.p_bs), mk(&s.p_ris), mk(&s.p_ue)];
        rays[0].direction.azimuth += 0.02; // make the system inconsistent
        let mut doubled = rays.clone();
        doubled.push(rays[0]);
        let ours = triangulate_ls(&doubled).unwrap();
        let oracle = normal_equations_oracle(&doubled);
        assert!(crate::geometry::distance(&ours, &oracle) < 1e-9);
    }

    #[test]
    fn perturbed_angle_matches_oracle() {
        let s = Scenario::default();
        let mk = |anchor: &Point3| AnchorRay {
            anchor: *anchor,
            direction: direction_angles(anchor, &s.p_drone).unwrap(),
        };
        let mut rays = vec![mk(&s.p_bs), mk(&s.p_ris), mk(&s.p_ue)];
        rays[1].direction.azimuth += 0.5f64.to_radians();
        let ours = triangulate_ls(&rays).unwrap();
        let oracle = normal_equations_oracle(&rays);
        assert!(crate::geometry::distance(&ours, &oracle) < 1e-9);
        assert!(crate::geometry::distance(&ours, &s.p_drone) > 1e-6);
    }

    #[test]
    fn parallel_rays_are_degenerate() {
        let dir = DirectionAngles::new(0.3, 0.4);
        let rays = vec![
            AnchorRay {
                anchor: Point3::new(0.0, 0.0, 0.0),
                direction: dir,
            },
            AnchorRay {
                anchor: Point3::new(1.0, 0.0, 0.0),
                direction: dir,
            },
        ];
        assert!(matches!(
            triangulate_ls(&rays),
            Err(Error::DegenerateGeometry)
        ));
    }

    #[test]
    fn triangulation_fixed_point_over_random_geometries() {
        let mut rng = crate::seeds::rng(99, &[7]);
        use rand::Rng;
        for _ in 0..1000 {
            let target = Point3::new(
                rng.random_range(-30.0..30.0),
                rng.random_range(-30.0..30.0),
                rng.random_range(20.0..80.0),
            );
            let anchors = [
                Point3::new(
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                    rng.random_range(0.0..15.0),
                ),
                Point3::new(
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                    rng.random_range(0.0..15.0),
                ),
                Point3::new(
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                    rng.random_range(0.0..15.0),
                ),
            ];
            if anchors
                .iter()
                .any(|a| crate::geometry::distance(a, &target) < 1.0)
            {
                continue;
            }
            let rays: Vec<AnchorRay> = anchors
                .iter()
                .map(|anchor| AnchorRay {
                    anchor: *anchor,
                    direction: direction_angles(anchor, &target).unwrap(),
                })
                .collect();
            match triangulate_ls(&rays) {
                Ok(p) => {
                    assert!(
                        crate::geometry::distance(&p, &target) < 1e-8,
                        "fixed point violated at {target:?}"
                    );
                }
                // Nearly collinear anchor/target draws may be rejected.
                Err(Error::DegenerateGeometry) => continue,
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn noise_free_truth_perturbed_localization_is_tight() {
        let (mut s, arrays, frames) = setup(60);
        s.noise_power_w = 0.0;
        let ch = build_channels(&s, &arrays).unwrap();
        let block = synthesize(&s, &ch, &frames, 0).unwrap();
        let cfg = CgdConfig {
            init_policy: InitPolicy::TruthPerturbed { rel_sigma: 1e-3 },
            restarts: 2,
            ..CgdConfig::default()
        };
        let res = localize(
            &block,
            &s,
            &arrays,
            &frames,
            &cfg,
            &SearchGrid::default(),
            42,
        )
        .unwrap();
        assert!(!res.degenerate);
        let err = res.error_m.unwrap();
        assert!(err < 0.1, "noise-free error {err}");
    }

    #[test]
    fn zero_target_noise_free_is_flagged_degenerate() {
        let (mut s, arrays, frames) = setup(12);
        s.noise_power_w = 0.0;
        s.zeta = Complex::new(0.0, 0.0);
        let ch = build_channels(&s, &arrays).unwrap();
        let block = synthesize(&s, &ch, &frames, 0).unwrap();
        let res = localize(
            &block,
            &s,
            &arrays,
            &frames,
            &CgdConfig::default(),
            &SearchGrid::default(),
            1,
        )
        .unwrap();
        assert!(res.degenerate);
        assert!(res.p_hat.is_finite());
    }

    #[test]
    fn localize_is_deterministic() {
        let (s, arrays, frames) = setup(20);
        let ch = build_channels(&s, &arrays).unwrap();
        let block = synthesize(&s, &ch, &frames, 5).unwrap();
        let cfg = CgdConfig {
            max_iters: 60,
            restarts: 3,
            ..CgdConfig::default()
        };
        let a = localize(&block, &s, &arrays, &frames, &cfg, &SearchGrid::default(), 9).unwrap();
        let b = localize(&block, &s, &arrays, &frames, &cfg, &SearchGrid::default(), 9).unwrap();
        assert_eq!(a.p_hat, b.p_hat);
        assert_eq!(a.error_m, b.error_m);
    }

    #[test]
    fn cascade_and_estimates_share_scale_structure() {
        // Absorbing a scalar into h4 must not change extracted angles.
        let (s, arrays, frames) = setup(8);
        let ch = build_channels(&s, &arrays).unwrap();
        let casc = cascade(&s, &ch).unwrap();
        let grid = SearchGrid::default();
        let h4_scaled = &ch.drone_ue * casc.eps_direct; // arbitrary complex scalar
        let row = CRowVector::from_iterator(h4_scaled.len(), h4_scaled.iter().map(Complex::conj));
        let (a, _) = angle_search_2d(&row, &arrays.ue, s.lambda, &grid).unwrap();
        let row_plain =
            CRowVector::from_iterator(ch.drone_ue.len(), ch.drone_ue.iter().map(Complex::conj));
        let (b, _) = angle_search_2d(&row_plain, &arrays.ue, s.lambda, &grid).unwrap();
        assert_eq!(a, b);
    }
}
