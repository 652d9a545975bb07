//! Pilot-frame design: the fixed RIS-pointing BS beam, the per-slot sky
//! beams constrained to the null space of the known directions, the RIS
//! phase profiles, and the effective training matrices seen by the UE.
//!
//! Per slot `k` the BS transmits `f0 + f_k` (equal pilot symbols
//! `s0 = s_k = √(P/2)`), while the RIS applies the unit-modulus profile
//! `ω_k`. The effective RIS matrix stacks
//! `diag(arrival steering from the BS)·ω_k` per column; by default the
//! fully known BS→RIS constant `c₁ = M_B·e^{−j2πd₁/λ}/√ρ₁` is absorbed
//! into it, so the receiver-side bilinear model
//! `Y ≈ √(P/2)·(ζh₄)·(h₃·Ω̄ + h₂·F̄) + noise` holds with the physical
//! drone-link channels and a shared left factor `ζh₄`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{steering, ArraySet, UpaConfig};
use crate::channel::link_gain;
use crate::error::{Error, Result};
use crate::geometry::{direction_angles, distance, DirectionAngles, Scenario};
use crate::seeds::{self, domain};
use crate::{CMatrix, CVector, Complex};

/// Sky sector covered by the RIS codebook, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkySector {
    pub azimuth: (f64, f64),
    pub elevation: (f64, f64),
}

impl Default for SkySector {
    /// Azimuth [0, π/2], elevation [π/4, π/2].
    fn default() -> Self {
        Self {
            azimuth: (0.0, std::f64::consts::FRAC_PI_2),
            elevation: (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2),
        }
    }
}

/// How the per-slot RIS profiles are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum RisPolicy {
    /// Conjugate-phase beams toward a fixed grid of sky directions, cycled
    /// over the slots. The grid does not depend on the slot count, so frame
    /// sets for growing K are nested.
    Codebook { sector: SkySector, grid: (usize, usize) },
    /// I.i.d. uniform phases per element and slot.
    RandomPhase,
}

impl Default for RisPolicy {
    fn default() -> Self {
        RisPolicy::Codebook {
            sector: SkySector::default(),
            grid: (8, 8),
        }
    }
}

/// Total pilot power and its fixed equal split across the two BS beams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotPower {
    pub total_w: f64,
    /// Symbol on the RIS-pointing beam, √(P/2).
    pub s0: f64,
    /// Symbol on the sky beam, √(P/2).
    pub sk: f64,
}

impl PilotPower {
    pub fn new(total_w: f64) -> Result<Self> {
        if !(total_w > 0.0) {
            return Err(Error::NonPositive {
                name: "pilot power",
                value: total_w,
            });
        }
        let split = (total_w / 2.0).sqrt();
        Ok(Self {
            total_w,
            s0: split,
            sk: split,
        })
    }
}

/// The designed sounding frames for K slots.
#[derive(Debug, Clone)]
pub struct SoundingFrames {
    /// Fixed RIS-pointing BS beam, norm √M_B.
    pub f0: CVector,
    /// BS steering toward the UE; sky beams are orthogonal to it.
    pub g0: CVector,
    /// Per-slot sky beams, M_B×K, each of norm √M_B.
    pub fk: CMatrix,
    /// Per-slot RIS profiles, M_R×K, unit-modulus entries.
    pub omega: CMatrix,
    /// Effective RIS training matrix, M_R×K.
    pub omega_bar: CMatrix,
    /// Effective BS training matrix, column k = f0 + f_k.
    pub f_bar: CMatrix,
    /// Pilot power and symbol split.
    pub power: PilotPower,
    /// The known BS→RIS constant; folded into `omega_bar` iff `absorbed`.
    pub known_bs_ris_gain: Complex,
    /// Whether `omega_bar` carries `known_bs_ris_gain`.
    pub absorbed: bool,
}

impl SoundingFrames {
    pub fn slots(&self) -> usize {
        self.f_bar.ncols()
    }

    /// Pilot amplitude √(P/2) applied to each effective column.
    pub fn pilot_amplitude(&self) -> f64 {
        self.power.s0
    }

    /// True when the RIS path participates (the effective RIS matrix is
    /// nonzero).
    pub fn ris_active(&self) -> bool {
        self.omega_bar.iter().any(|e| e.norm_sqr() > 0.0)
    }

    /// Copy with the RIS contribution removed, for the RIS-free benchmark.
    pub fn without_ris(&self) -> Self {
        let mut f = self.clone();
        f.omega_bar.fill(Complex::new(0.0, 0.0));
        f
    }
}

/// Fixed BS beam toward the RIS (maximum ratio transmission).
pub fn design_f0(bs: &UpaConfig, s: &Scenario) -> Result<CVector> {
    let ang = direction_angles(&s.p_bs, &s.p_ris)?;
    Ok(steering(bs, s.lambda, ang)?.v)
}

/// BS steering toward the UE; the direction nulled by the sky beams.
pub fn design_g0(bs: &UpaConfig, s: &Scenario) -> Result<CVector> {
    let ang = direction_angles(&s.p_bs, &s.p_ue)?;
    Ok(steering(bs, s.lambda, ang)?.v)
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im)
}

/// Per-slot sky beams in the null space of the two known BS directions.
///
/// Columns are drawn sequentially from one seeded stream, so the first K
/// columns for a larger slot count reproduce the smaller design exactly.
pub fn design_sky_beams(bs: &UpaConfig, s: &Scenario, k: usize, seed: u64) -> Result<CMatrix> {
    let m_b = bs.len();
    if m_b <= 2 {
        return Err(Error::InfeasibleBeamDesign { antennas: m_b });
    }
    if k < 1 {
        return Err(Error::InvalidParameter {
            name: "K",
            reason: "need at least one sounding slot".into(),
        });
    }
    let f0 = design_f0(bs, s)?;
    let g0 = design_g0(bs, s)?;

    // Orthonormal basis of span{f0, g0}.
    let u1 = f0.unscale(f0.norm());
    let mut basis = vec![u1.clone()];
    let w = &g0 - &u1 * (u1.adjoint() * &g0)[(0, 0)];
    if w.norm() > 1e-8 * g0.norm() {
        let n = w.norm();
        basis.push(w.unscale(n));
    }

    let mut rng = seeds::rng(seed, &[domain::FRAMES]);
    let mut fk = CMatrix::zeros(m_b, k);
    let scale = (m_b as f64).sqrt();
    for col in 0..k {
        loop {
            let mut x = CVector::from_iterator(m_b, (0..m_b).map(|_| complex_gaussian(&mut rng)));
            for u in &basis {
                let coeff = (u.adjoint() * &x)[(0, 0)];
                x -= u * coeff;
            }
            let n = x.norm();
            if n > 1e-8 {
                fk.column_mut(col).copy_from(&x.scale(scale / n));
                break;
            }
        }
    }
    Ok(fk)
}

fn lerp(lo: f64, hi: f64, t: f64) -> f64 {
    lo + (hi - lo) * t
}

/// Directions of the fixed codebook grid, azimuth-major.
fn codebook_directions(sector: &SkySector, grid: (usize, usize)) -> Vec<DirectionAngles> {
    let (n_az, n_el) = (grid.0.max(1), grid.1.max(1));
    let mut dirs = Vec::with_capacity(n_az * n_el);
    for i_el in 0..n_el {
        let t_el = if n_el == 1 {
            0.5
        } else {
            i_el as f64 / (n_el - 1) as f64
        };
        for i_az in 0..n_az {
            let t_az = if n_az == 1 {
                0.5
            } else {
                i_az as f64 / (n_az - 1) as f64
            };
            dirs.push(DirectionAngles::new(
                lerp(sector.azimuth.0, sector.azimuth.1, t_az),
                lerp(sector.elevation.0, sector.elevation.1, t_el),
            ));
        }
    }
    dirs
}

/// Unit-modulus RIS profiles for K slots.
///
/// The codebook profile for a grid direction is the conjugate-phase pattern
/// that steers the BS-incident reflection toward that direction, i.e.
/// `ω = steering(direction) ⊙ conj(arrival steering from the BS)`.
pub fn design_ris_profiles(
    ris: &UpaConfig,
    s: &Scenario,
    k: usize,
    seed: u64,
    policy: &RisPolicy,
) -> Result<CMatrix> {
    if k < 1 {
        return Err(Error::InvalidParameter {
            name: "K",
            reason: "need at least one sounding slot".into(),
        });
    }
    let m_r = ris.len();
    let mut omega = CMatrix::zeros(m_r, k);
    match policy {
        RisPolicy::Codebook { sector, grid } => {
            let arrival = steering(ris, s.lambda, direction_angles(&s.p_ris, &s.p_bs)?)?.v;
            let dirs = codebook_directions(sector, *grid);
            for col in 0..k {
                let dir = dirs[col % dirs.len()];
                let beam = steering(ris, s.lambda, dir)?.v;
                for row in 0..m_r {
                    omega[(row, col)] = beam[row] * arrival[row].conj();
                }
            }
        }
        RisPolicy::RandomPhase => {
            let mut rng = seeds::rng(seed, &[domain::FRAMES, 1]);
            for col in 0..k {
                for row in 0..m_r {
                    let phase: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                    omega[(row, col)] = Complex::from_polar(1.0, phase);
                }
            }
        }
    }
    Ok(omega)
}

/// Stack the effective training matrices from designed beams/profiles.
pub fn assemble_effective(
    ris: &UpaConfig,
    s: &Scenario,
    f0: &CVector,
    fk: &CMatrix,
    omega: &CMatrix,
    absorb_known_gain: bool,
) -> Result<(CMatrix, CMatrix, Complex)> {
    if fk.nrows() != f0.len() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "sky beams have {} rows but f0 has {} entries",
                fk.nrows(),
                f0.len()
            ),
        });
    }
    if omega.ncols() != fk.ncols() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "RIS profiles cover {} slots but sky beams cover {}",
                omega.ncols(),
                fk.ncols()
            ),
        });
    }
    if omega.nrows() != ris.len() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "RIS profiles have {} rows for a {}-element RIS",
                omega.nrows(),
                ris.len()
            ),
        });
    }
    let arrival = steering(ris, s.lambda, direction_angles(&s.p_ris, &s.p_bs)?)?.v;
    let d1 = distance(&s.p_bs, &s.p_ris);
    let known = link_gain(d1, s.lambda, s.gamma)? * f0.len() as f64;
    let scale = if absorb_known_gain {
        known
    } else {
        Complex::new(1.0, 0.0)
    };

    let mut omega_bar = CMatrix::zeros(omega.nrows(), omega.ncols());
    for col in 0..omega.ncols() {
        for row in 0..omega.nrows() {
            omega_bar[(row, col)] = scale * arrival[row] * omega[(row, col)];
        }
    }
    let mut f_bar = CMatrix::zeros(fk.nrows(), fk.ncols());
    for col in 0..fk.ncols() {
        for row in 0..fk.nrows() {
            f_bar[(row, col)] = f0[row] + fk[(row, col)];
        }
    }
    Ok((omega_bar, f_bar, known))
}

/// Design a complete frame set: beams, profiles, and effective matrices.
pub fn build_frames(
    s: &Scenario,
    arrays: &ArraySet,
    k: usize,
    power_w: f64,
    seed: u64,
    policy: &RisPolicy,
    absorb_known_gain: bool,
) -> Result<SoundingFrames> {
    let f0 = design_f0(&arrays.bs, s)?;
    let g0 = design_g0(&arrays.bs, s)?;
    let fk = design_sky_beams(&arrays.bs, s, k, seed)?;
    let omega = design_ris_profiles(&arrays.ris, s, k, seed, policy)?;
    let (omega_bar, f_bar, known) =
        assemble_effective(&arrays.ris, s, &f0, &fk, &omega, absorb_known_gain)?;
    Ok(SoundingFrames {
        f0,
        g0,
        fk,
        omega,
        omega_bar,
        f_bar,
        power: PilotPower::new(power_w)?,
        known_bs_ris_gain: known,
        absorbed: absorb_known_gain,
    })
}
