//! Fisher information analysis of the 10 unknown channel parameters and
//! the resulting position error bound.
//!
//! The unknown vector stacks the real and imaginary parts of the two
//! cascade gains followed by the three (azimuth, elevation) pairs of the
//! target links: `[Re ε̃, Im ε̃, Re ε̂, Im ε̂, θ_bs, φ_bs, θ_ris, φ_ris,
//! θ_ue, φ_ue]`. The FIM is `[J]_{mn} = (2/σ²)·Re{∂μᴴ/∂η_m · ∂μ/∂η_n}`
//! with μ the noise- and interference-free vectorized mean of the receive
//! block; every derivative is analytic, built from diagonal phase weights
//! on the per-axis array factors. The position error bound maps J through
//! the geometry transform `T` as `√tr{(T·J·Tᵀ)⁻¹}`.
//!
//! When the effective RIS matrix carries the absorbed BS→RIS constant
//! (see [`crate::sounding`]), the ε̃ entry of the parameter vector is the
//! gain that multiplies the *supplied* matrix, i.e. the ζ-and-propagation
//! remainder with that constant divided out. All angle derivatives, and
//! hence the bound, are identical under either convention.

use nalgebra::DMatrix;

use crate::array::{alpha_axis, axis_offsets, ArraySet};
use crate::channel::link_gain;
use crate::error::{Error, Result};
use crate::geometry::{
    direction_angles, distance, jacobian_t, jacobian_t_no_ris, DirectionAngles, Scenario,
};
use crate::sounding::SoundingFrames;
use crate::{CMatrix, CVector, Complex};

const J_IMAG: Complex = Complex::new(0.0, 1.0);

/// Whether the RIS cascade participates in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FimModel {
    /// Full 10-parameter model.
    WithRis,
    /// 6-parameter benchmark: the RIS gain and angles are removed and the
    /// effective RIS matrix is treated as zero.
    NoRis,
}

/// How the bound maps the information matrix to position space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PebMethod {
    /// `√tr{(T·J·Tᵀ)⁻¹}`.
    Verbatim,
    /// Comparison variant: invert the full J and read the position block
    /// through T, `√tr{T·J⁻¹·Tᵀ}`.
    Efim,
}

/// The unknown channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    /// Gain multiplying the effective RIS matrix.
    pub gain_ris: Complex,
    /// Gain of the single-bounce BS→drone→UE cascade.
    pub gain_direct: Complex,
    /// BS departure angles toward the target.
    pub bs: DirectionAngles,
    /// RIS departure angles toward the target.
    pub ris: DirectionAngles,
    /// UE arrival angles from the target.
    pub ue: DirectionAngles,
}

impl ParamVector {
    /// Ground-truth parameters for a scenario, matching the convention of
    /// the supplied frames (absorbed or not).
    pub fn from_truth(s: &Scenario, frames: &SoundingFrames) -> Result<Self> {
        let g2 = link_gain(distance(&s.p_bs, &s.p_drone), s.lambda, s.gamma)?;
        let g3 = link_gain(distance(&s.p_ris, &s.p_drone), s.lambda, s.gamma)?;
        let g4 = link_gain(distance(&s.p_ue, &s.p_drone), s.lambda, s.gamma)?;
        let gain_ris = if frames.absorbed {
            s.zeta * g3 * g4
        } else {
            s.zeta * frames.known_bs_ris_gain * g3 * g4
        };
        Ok(Self {
            gain_ris,
            gain_direct: s.zeta * g2 * g4,
            bs: direction_angles(&s.p_bs, &s.p_drone)?,
            ris: direction_angles(&s.p_ris, &s.p_drone)?,
            ue: direction_angles(&s.p_ue, &s.p_drone)?,
        })
    }

    /// Flattened layout `[Re ε̃, Im ε̃, Re ε̂, Im ε̂, θ_bs, φ_bs, θ_ris,
    /// φ_ris, θ_ue, φ_ue]`.
    pub fn to_flat(&self) -> [f64; 10] {
        [
            self.gain_ris.re,
            self.gain_ris.im,
            self.gain_direct.re,
            self.gain_direct.im,
            self.bs.azimuth,
            self.bs.elevation,
            self.ris.azimuth,
            self.ris.elevation,
            self.ue.azimuth,
            self.ue.elevation,
        ]
    }

    pub fn from_flat(v: &[f64; 10]) -> Self {
        Self {
            gain_ris: Complex::new(v[0], v[1]),
            gain_direct: Complex::new(v[2], v[3]),
            bs: DirectionAngles::new(v[4], v[5]),
            ris: DirectionAngles::new(v[6], v[7]),
            ue: DirectionAngles::new(v[8], v[9]),
        }
    }
}

/// Diagonal phase-derivative weights for every (array axis, angle) pair
/// that appears in the derivative block. Each vector holds
/// `±j·(2πd/λ)·(i−(m−1)/2)·trig(θ,φ)` per element; at half-wavelength
/// spacing the leading factor reduces to ±jπ.
#[derive(Debug, Clone)]
pub struct PhaseDerivWeights {
    pub bs_y_az: CVector,
    pub bs_y_el: CVector,
    pub bs_z_el: CVector,
    pub ris_x_az: CVector,
    pub ris_y_az: CVector,
    pub ris_x_el: CVector,
    pub ris_y_el: CVector,
    pub ue_x_az: CVector,
    pub ue_y_az: CVector,
    pub ue_x_el: CVector,
    pub ue_y_el: CVector,
}

fn weight_vec(m: usize, d: f64, lambda: f64, factor: f64, sign: f64) -> CVector {
    let k = 2.0 * std::f64::consts::PI * d / lambda;
    CVector::from_iterator(
        m,
        axis_offsets(m)
            .into_iter()
            .map(|n| Complex::new(0.0, sign * k * n * factor)),
    )
}

/// Build the full weight set at the given parameter point.
pub fn phase_derivative_weights(
    eta: &ParamVector,
    arrays: &ArraySet,
    lambda: f64,
) -> PhaseDerivWeights {
    let (bs, ris, ue) = (&arrays.bs, &arrays.ris, &arrays.ue);
    let (st2, ct2) = eta.bs.azimuth.sin_cos();
    let (sp2, cp2) = eta.bs.elevation.sin_cos();
    let (st3, ct3) = eta.ris.azimuth.sin_cos();
    let (sp3, cp3) = eta.ris.elevation.sin_cos();
    let (st4, ct4) = eta.ue.azimuth.sin_cos();
    let (sp4, cp4) = eta.ue.elevation.sin_cos();
    PhaseDerivWeights {
        bs_y_az: weight_vec(bs.m_a, bs.d_a, lambda, ct2 * sp2, -1.0),
        bs_y_el: weight_vec(bs.m_a, bs.d_a, lambda, st2 * cp2, -1.0),
        bs_z_el: weight_vec(bs.m_b, bs.d_b, lambda, sp2, 1.0),
        ris_x_az: weight_vec(ris.m_a, ris.d_a, lambda, st3 * sp3, 1.0),
        ris_y_az: weight_vec(ris.m_b, ris.d_b, lambda, ct3 * sp3, -1.0),
        ris_x_el: weight_vec(ris.m_a, ris.d_a, lambda, ct3 * cp3, -1.0),
        ris_y_el: weight_vec(ris.m_b, ris.d_b, lambda, st3 * cp3, -1.0),
        ue_x_az: weight_vec(ue.m_a, ue.d_a, lambda, st4 * sp4, -1.0),
        ue_y_az: weight_vec(ue.m_b, ue.d_b, lambda, ct4 * sp4, 1.0),
        ue_x_el: weight_vec(ue.m_a, ue.d_a, lambda, ct4 * cp4, 1.0),
        ue_y_el: weight_vec(ue.m_b, ue.d_b, lambda, st4 * cp4, 1.0),
    }
}

/// Per-axis factors of the three composite steering structures at η.
struct AxisFactors {
    bs_y_conj: CVector,
    bs_z_conj: CVector,
    ris_x_conj: CVector,
    ris_y_conj: CVector,
    ue_x: CVector,
    ue_y: CVector,
}

fn axis_factors(eta: &ParamVector, arrays: &ArraySet, lambda: f64) -> AxisFactors {
    let (bs, ris, ue) = (&arrays.bs, &arrays.ris, &arrays.ue);
    let (st2, ct2) = eta.bs.azimuth.sin_cos();
    let (sp2, cp2) = eta.bs.elevation.sin_cos();
    let (st3, ct3) = eta.ris.azimuth.sin_cos();
    let sp3 = eta.ris.elevation.sin();
    let (st4, ct4) = eta.ue.azimuth.sin_cos();
    let sp4 = eta.ue.elevation.sin();
    let _ = ct2;
    AxisFactors {
        bs_y_conj: alpha_axis(bs.m_a, bs.d_a, lambda, st2 * sp2).map(|e| e.conj()),
        bs_z_conj: alpha_axis(bs.m_b, bs.d_b, lambda, cp2).map(|e| e.conj()),
        ris_x_conj: alpha_axis(ris.m_a, ris.d_a, lambda, ct3 * sp3).map(|e| e.conj()),
        ris_y_conj: alpha_axis(ris.m_b, ris.d_b, lambda, st3 * sp3).map(|e| e.conj()),
        ue_x: alpha_axis(ue.m_a, ue.d_a, lambda, ct4 * sp4),
        ue_y: alpha_axis(ue.m_b, ue.d_b, lambda, st4 * sp4),
    }
}

fn kron(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

fn hadamard(a: &CVector, b: &CVector) -> CVector {
    CVector::from_iterator(a.len(), a.iter().zip(b.iter()).map(|(x, y)| x * y))
}

/// vec of the M_U×K outer product `left · rowᵀ`, column-major.
fn vec_outer(left: &CVector, row: &CVector) -> CVector {
    let m = left.len();
    let k = row.len();
    let mut out = CVector::zeros(m * k);
    for col in 0..k {
        let s = row[col];
        for r in 0..m {
            out[col * m + r] = left[r] * s;
        }
    }
    out
}

/// Noise- and interference-free vectorized mean of the receive block at η.
pub fn mean_signal(
    eta: &ParamVector,
    frames: &SoundingFrames,
    arrays: &ArraySet,
    lambda: f64,
) -> CVector {
    let ax = axis_factors(eta, arrays, lambda);
    let pilot = Complex::new(frames.pilot_amplitude(), 0.0);

    let ris_conj = kron(&ax.ris_x_conj, &ax.ris_y_conj);
    let bs_conj = kron(&ax.bs_y_conj, &ax.bs_z_conj);
    let ue = kron(&ax.ue_x, &ax.ue_y);

    let w_ris = frames.omega_bar.transpose() * &ris_conj;
    let w_bs = frames.f_bar.transpose() * &bs_conj;
    let row = (w_ris * eta.gain_ris + w_bs * eta.gain_direct) * pilot;
    vec_outer(&ue, &row)
}

/// Analytic derivative of μ with respect to each of the 10 parameters,
/// stacked as columns.
pub fn mean_derivatives(
    eta: &ParamVector,
    frames: &SoundingFrames,
    arrays: &ArraySet,
    lambda: f64,
) -> CMatrix {
    let ax = axis_factors(eta, arrays, lambda);
    let w = phase_derivative_weights(eta, arrays, lambda);
    let pilot = Complex::new(frames.pilot_amplitude(), 0.0);

    let ris_conj = kron(&ax.ris_x_conj, &ax.ris_y_conj);
    let bs_conj = kron(&ax.bs_y_conj, &ax.bs_z_conj);
    let ue = kron(&ax.ue_x, &ax.ue_y);

    // Angle derivatives of the composite factors.
    let d_bs_az = kron(&hadamard(&w.bs_y_az, &ax.bs_y_conj), &ax.bs_z_conj);
    let d_bs_el = kron(&hadamard(&w.bs_y_el, &ax.bs_y_conj), &ax.bs_z_conj)
        + kron(&ax.bs_y_conj, &hadamard(&w.bs_z_el, &ax.bs_z_conj));
    let d_ris_az = kron(&hadamard(&w.ris_x_az, &ax.ris_x_conj), &ax.ris_y_conj)
        + kron(&ax.ris_x_conj, &hadamard(&w.ris_y_az, &ax.ris_y_conj));
    let d_ris_el = kron(&hadamard(&w.ris_x_el, &ax.ris_x_conj), &ax.ris_y_conj)
        + kron(&ax.ris_x_conj, &hadamard(&w.ris_y_el, &ax.ris_y_conj));
    let d_ue_az = kron(&hadamard(&w.ue_x_az, &ax.ue_x), &ax.ue_y)
        + kron(&ax.ue_x, &hadamard(&w.ue_y_az, &ax.ue_y));
    let d_ue_el = kron(&hadamard(&w.ue_x_el, &ax.ue_x), &ax.ue_y)
        + kron(&ax.ue_x, &hadamard(&w.ue_y_el, &ax.ue_y));

    let omega_t = frames.omega_bar.transpose();
    let f_t = frames.f_bar.transpose();
    let w_ris = &omega_t * &ris_conj;
    let w_bs = &f_t * &bs_conj;
    let w_ris_daz = &omega_t * &d_ris_az;
    let w_ris_del = &omega_t * &d_ris_el;
    let w_bs_daz = &f_t * &d_bs_az;
    let w_bs_del = &f_t * &d_bs_el;

    let n = ue.len() * frames.slots();
    let mut dmu = CMatrix::zeros(n, 10);
    let col1 = vec_outer(&ue, &(&w_ris * pilot));
    let col3 = vec_outer(&ue, &(&w_bs * pilot));
    dmu.column_mut(0).copy_from(&col1);
    dmu.column_mut(1).copy_from(&(&col1 * J_IMAG));
    dmu.column_mut(2).copy_from(&col3);
    dmu.column_mut(3).copy_from(&(&col3 * J_IMAG));
    dmu.column_mut(4)
        .copy_from(&vec_outer(&ue, &(w_bs_daz * (pilot * eta.gain_direct))));
    dmu.column_mut(5)
        .copy_from(&vec_outer(&ue, &(w_bs_del * (pilot * eta.gain_direct))));
    dmu.column_mut(6)
        .copy_from(&vec_outer(&ue, &(&w_ris_daz * (pilot * eta.gain_ris))));
    dmu.column_mut(7)
        .copy_from(&vec_outer(&ue, &(&w_ris_del * (pilot * eta.gain_ris))));
    let combined = (&w_ris * eta.gain_ris + &w_bs * eta.gain_direct) * pilot;
    dmu.column_mut(8).copy_from(&vec_outer(&d_ue_az, &combined));
    dmu.column_mut(9).copy_from(&vec_outer(&d_ue_el, &combined));
    dmu
}

/// Fisher information matrix from the derivative columns.
pub fn fim(dmu: &CMatrix, sigma2: f64) -> Result<DMatrix<f64>> {
    if !(sigma2 > 0.0) {
        return Err(Error::NonPositive {
            name: "sigma2",
            value: sigma2,
        });
    }
    let p = dmu.ncols();
    let mut j = DMatrix::<f64>::zeros(p, p);
    for m in 0..p {
        for n in m..p {
            let mut acc = 0.0;
            for i in 0..dmu.nrows() {
                let a = dmu[(i, m)];
                let b = dmu[(i, n)];
                acc += a.re * b.re + a.im * b.im; // Re{conj(a)·b}
            }
            let v = 2.0 / sigma2 * acc;
            j[(m, n)] = v;
            j[(n, m)] = v;
        }
    }
    Ok(j)
}

/// FIM together with the mean and derivative stack it was built from.
#[derive(Debug, Clone)]
pub struct FimResult {
    pub j: DMatrix<f64>,
    pub mu: CVector,
    pub dmu: CMatrix,
}

/// Build μ, its derivatives, and J at the ground truth of a scenario.
pub fn build_fim(
    s: &Scenario,
    arrays: &ArraySet,
    frames: &SoundingFrames,
    model: FimModel,
) -> Result<FimResult> {
    let mut eta = ParamVector::from_truth(s, frames)?;
    if model == FimModel::NoRis {
        eta.gain_ris = Complex::new(0.0, 0.0);
    }
    let mu = mean_signal(&eta, frames, arrays, s.lambda);
    let dmu_full = mean_derivatives(&eta, frames, arrays, s.lambda);
    let dmu = match model {
        FimModel::WithRis => dmu_full,
        FimModel::NoRis => {
            let keep = [2usize, 3, 4, 5, 8, 9];
            let mut sub = CMatrix::zeros(dmu_full.nrows(), keep.len());
            for (out_col, &src) in keep.iter().enumerate() {
                sub.column_mut(out_col).copy_from(&dmu_full.column(src));
            }
            sub
        }
    };
    let j = fim(&dmu, s.noise_power_w)?;
    Ok(FimResult { j, mu, dmu })
}

fn invert_checked(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > 1e15 {
        return Err(Error::UnidentifiableGeometry { condition });
    }
    if condition > 1e12 {
        log::warn!("ill-conditioned position information matrix: cond = {condition:.3e}");
    }
    m.try_inverse()
        .ok_or(Error::UnidentifiableGeometry { condition })
}

/// Position error bound from an information matrix and the geometry
/// transform; `t` must be 3×P for a P×P `j`.
pub fn peb(j: &DMatrix<f64>, t: &DMatrix<f64>, method: PebMethod) -> Result<f64> {
    if t.nrows() != 3 || t.ncols() != j.nrows() || !j.is_square() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "transform is {}x{}, information matrix is {}x{}",
                t.nrows(),
                t.ncols(),
                j.nrows(),
                j.ncols()
            ),
        });
    }
    match method {
        PebMethod::Verbatim => {
            let m = t * j * t.transpose();
            let inv = invert_checked(m)?;
            Ok(inv.trace().sqrt())
        }
        PebMethod::Efim => {
            let jinv = invert_checked(j.clone())?;
            let m = t * jinv * t.transpose();
            Ok(m.trace().sqrt())
        }
    }
}

/// End-to-end bound for a scenario: build J and T for the chosen model and
/// map to meters.
pub fn position_error_bound(
    s: &Scenario,
    arrays: &ArraySet,
    frames: &SoundingFrames,
    model: FimModel,
    method: PebMethod,
) -> Result<f64> {
    let fim_result = build_fim(s, arrays, frames, model)?;
    let t = match model {
        FimModel::WithRis => {
            let jt = jacobian_t(s)?;
            DMatrix::from_iterator(3, 10, jt.m.iter().copied())
        }
        FimModel::NoRis => {
            let jt = jacobian_t_no_ris(s)?;
            DMatrix::from_iterator(3, 6, jt.iter().copied())
        }
    };
    peb(&fim_result.j, &t, method)
}
