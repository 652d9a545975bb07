//! Synthesis of the received multi-slot pilot block.
//!
//! The block stacks the per-slot receive vectors column by column:
//! `Y = √(P/2)·H̃·Ω̄ + √(P/2)·Ĥ·F̄ + √(P/2)·H₅·F̄ + N`, with i.i.d.
//! circularly-symmetric complex Gaussian noise of variance σ² per entry.
//! The direct-link term is fully known at the receiver (the BS and UE
//! positions are known and the sky beams null the direct path), so it is
//! returned separately for subtraction.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{cascade, ChannelSet};
use crate::error::{Error, Result};
use crate::geometry::Scenario;
use crate::seeds::{self, domain};
use crate::sounding::SoundingFrames;
use crate::{CMatrix, Complex};

/// One synthesized receive block.
#[derive(Debug, Clone)]
pub struct ReceivedBlock {
    /// M_U×K received samples.
    pub y: CMatrix,
    /// Noise power per entry, watts.
    pub sigma2: f64,
    /// Seed the noise was drawn from.
    pub seed: u64,
    /// The known direct-link contribution √(P/2)·H₅·F̄.
    pub interference_known: CMatrix,
}

/// Convert an SNR in dB relative to σ² into transmit power in watts.
pub fn snr_to_power(snr_db: f64, sigma2: f64) -> f64 {
    sigma2 * 10f64.powf(snr_db / 10.0)
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Thermal noise power for a bandwidth: −174 dBm/Hz + 10·log₁₀(B).
pub fn default_noise_power_w(bandwidth_hz: f64) -> f64 {
    dbm_to_watts(-174.0 + 10.0 * bandwidth_hz.log10())
}

/// Synthesize the received block for one trial.
///
/// Noise is drawn per (trial seed, slot), so any slot of any trial can be
/// reproduced independently of evaluation order.
pub fn synthesize(
    s: &Scenario,
    ch: &ChannelSet,
    frames: &SoundingFrames,
    seed: u64,
) -> Result<ReceivedBlock> {
    let k = frames.slots();
    let m_u = ch.m_ue();
    if frames.f_bar.nrows() != ch.m_bs() || frames.omega_bar.nrows() != ch.m_ris() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "frames designed for {}x{} BS/RIS, channels have {}x{}",
                frames.f_bar.nrows(),
                frames.omega_bar.nrows(),
                ch.m_bs(),
                ch.m_ris()
            ),
        });
    }
    let pilot = Complex::new(frames.pilot_amplitude(), 0.0);
    let casc = cascade(s, ch)?;

    // RIS path. With the known BS→RIS constant absorbed into the effective
    // matrix, the left factor reduces to ζh₄ and the middle to h₃·Ω̄.
    let ris_term = if frames.absorbed {
        let mid = &ch.ris_drone * &frames.omega_bar; // 1×K
        (&ch.drone_ue * mid) * (s.zeta * pilot)
    } else {
        (&casc.h_ris * &frames.omega_bar) * pilot
    };
    let direct_term = (&casc.h_direct * &frames.f_bar) * pilot;
    let interference = (&ch.bs_ue * &frames.f_bar) * pilot;

    let mut y = ris_term + direct_term + &interference;

    let sigma2 = s.noise_power_w;
    if sigma2 > 0.0 {
        let amp = (sigma2 / 2.0).sqrt();
        for slot in 0..k {
            let mut rng = seeds::rng(seed, &[domain::NOISE, domain::SLOT, slot as u64]);
            for row in 0..m_u {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                y[(row, slot)] += Complex::new(amp * re, amp * im);
            }
        }
    }

    Ok(ReceivedBlock {
        y,
        sigma2,
        seed,
        interference_known: interference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ArraySet;
    use crate::channel::build_channels;
    use crate::sounding::{build_frames, RisPolicy};
    use approx::assert_relative_eq;

    fn noiseless_scene() -> Scenario {
        let mut s = Scenario::default();
        s.noise_power_w = 0.0;
        s
    }

    fn frames_for(s: &Scenario, arrays: &ArraySet, k: usize, p: f64) -> SoundingFrames {
        build_frames(s, arrays, k, p, 11, &RisPolicy::default(), true).unwrap()
    }

    #[test]
    fn power_conversions() {
        assert_relative_eq!(snr_to_power(0.0, 1.0), 1.0);
        assert_relative_eq!(snr_to_power(10.0, 1.0), 10.0);
        assert_relative_eq!(snr_to_power(3.0, 2.0), 2.0 * 10f64.powf(0.3));
        assert_relative_eq!(dbm_to_watts(-101.0), 7.943282347242822e-14, max_relative = 1e-12);
        assert_relative_eq!(
            default_noise_power_w(20e6),
            7.96214341106994e-14,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_rcs_noise_free_leaves_only_the_direct_link() {
        let mut s = noiseless_scene();
        s.zeta = Complex::new(0.0, 0.0);
        let arrays = ArraySet::default_for(s.lambda);
        let ch = build_channels(&s, &arrays).unwrap();
        let frames = frames_for(&s, &arrays, 8, 1.0);
        let block = synthesize(&s, &ch, &frames, 0).unwrap();
        let diff = (&block.y - &block.interference_known).norm();
        assert!(diff < 1e-14 * block.y.norm().max(1.0));
    }

    /// Brute-force per-slot evaluation of the received signal for
    /// single-element arrays, straight from the per-slot model.
    #[test]
    fn matches_scalar_brute_force_for_1x1_arrays() {
        let mut s = noiseless_scene();
        let arrays = ArraySet {
            bs: crate::array::UpaConfig::half_wavelength(2, 2, s.lambda, crate::array::Plane::Yz),
            ris: crate::array::UpaConfig::half_wavelength(1, 1, s.lambda, crate::array::Plane::Xy),
            ue: crate::array::UpaConfig::half_wavelength(1, 1, s.lambda, crate::array::Plane::Xy),
        };
        s.zeta = Complex::new(0.7, -0.2);
        let ch = build_channels(&s, &arrays).unwrap();
        let frames = build_frames(&s, &arrays, 1, 2.0, 3, &RisPolicy::RandomPhase, true).unwrap();
        let block = synthesize(&s, &ch, &frames, 0).unwrap();

        // y_1 = ζ h4 (h3 diag(ω) H1 + h2) x + H5 x with x = √(P/2)(f0+f1).
        let pilot = frames.pilot_amplitude();
        let x = frames.f_bar.column(0) * Complex::new(pilot, 0.0);
        let h1x = &ch.bs_ris * &x;
        let via_ris = ch.ris_drone[0] * frames.omega[(0, 0)] * h1x[0];
        let mut h2x = Complex::new(0.0, 0.0);
        for i in 0..arrays.bs.len() {
            h2x += ch.bs_drone[i] * x[i];
        }
        let mut h5x = Complex::new(0.0, 0.0);
        for i in 0..arrays.bs.len() {
            h5x += ch.bs_ue[(0, i)] * x[i];
        }
        let want = s.zeta * ch.drone_ue[0] * (via_ris + h2x) + h5x;
        let got = block.y[(0, 0)];
        assert!(
            (got - want).norm() < 1e-10 * want.norm(),
            "got {got}, want {want}"
        );
    }

    #[test]
    fn noise_variance_is_calibrated() {
        let mut s = Scenario::default();
        s.noise_power_w = 4.0;
        s.zeta = Complex::new(0.0, 0.0);
        let arrays = ArraySet::default_for(s.lambda);
        let ch = build_channels(&s, &arrays).unwrap();
        // 16 antennas x 4000 slots x ~16 trials > 1e6 samples.
        let frames = frames_for(&s, &arrays, 4000, 1e-30);
        let mut sum = 0.0;
        let mut count = 0usize;
        for trial in 0..16u64 {
            let block = synthesize(&s, &ch, &frames, trial).unwrap();
            for e in block.y.iter() {
                sum += e.norm_sqr();
                count += 1;
            }
        }
        let var = sum / count as f64;
        assert!(count >= 1_000_000);
        assert!(
            (var - s.noise_power_w).abs() < 0.01 * s.noise_power_w,
            "empirical variance {var}"
        );
    }

    #[test]
    fn same_seed_same_noise_linearity_in_target_gain() {
        let mut s = Scenario::default();
        s.noise_power_w = 1e-14;
        let arrays = ArraySet::default_for(s.lambda);
        let frames = frames_for(&s, &arrays, 6, 1.0);

        let s1 = s.with_zeta(Complex::new(1.5, 0.0));
        let s2 = s.with_zeta(Complex::new(0.5, 0.0));
        let ch = build_channels(&s, &arrays).unwrap();
        let y1 = synthesize(&s1, &ch, &frames, 42).unwrap().y;
        let y2 = synthesize(&s2, &ch, &frames, 42).unwrap().y;

        let mut s_diff = s.clone();
        s_diff.noise_power_w = 0.0;
        let s_diff = s_diff.with_zeta(Complex::new(1.0, 0.0));
        let clean = synthesize(&s_diff, &ch, &frames, 42).unwrap();
        let clean_target_only = &clean.y - &clean.interference_known;

        let diff = &y1 - &y2;
        let err = (&diff - &clean_target_only).norm();
        assert!(
            err < 1e-10 * clean_target_only.norm().max(1e-30),
            "linearity residual {err}"
        );
    }

    #[test]
    fn sky_beams_do_not_leak_through_the_direct_link() {
        let s = noiseless_scene();
        let arrays = ArraySet::default_for(s.lambda);
        let ch = build_channels(&s, &arrays).unwrap();
        let frames = frames_for(&s, &arrays, 10, 1.0);
        let h5_norm = ch.bs_ue.norm();
        let m_b = arrays.bs.len() as f64;
        for col in 0..frames.fk.ncols() {
            let leak = (&ch.bs_ue * frames.fk.column(col)).norm();
            assert!(leak < 1e-10 * h5_norm * m_b.sqrt(), "leak {leak}");
        }
    }

    #[test]
    fn determinism_per_seed() {
        let s = Scenario::default();
        let arrays = ArraySet::default_for(s.lambda);
        let ch = build_channels(&s, &arrays).unwrap();
        let frames = frames_for(&s, &arrays, 5, 1.0);
        let a = synthesize(&s, &ch, &frames, 9).unwrap();
        let b = synthesize(&s, &ch, &frames, 9).unwrap();
        assert_eq!(a.y, b.y);
        let c = synthesize(&s, &ch, &frames, 10).unwrap();
        assert_ne!(a.y, c.y);
    }
}
