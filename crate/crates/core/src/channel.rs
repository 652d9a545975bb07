//! Ground-truth line-of-sight channels and the cascaded rank-one channels.
//!
//! Every link is a single path: a unit-modulus steering structure scaled by
//! `e^{−j2πd/λ}/√ρ` with ρ = d^Γ. Arrival and departure angles are always
//! the direction from the array toward the far endpoint of the link.

use crate::array::{steering, ArraySet};
use crate::error::Result;
use crate::geometry::{direction_angles, distance, path_loss, Scenario};
use crate::{CMatrix, CRowVector, CVector, Complex};

/// Scalar propagation gain `e^{−j2πd/λ}/√ρ` of one link.
pub fn link_gain(d: f64, lambda: f64, gamma: f64) -> Result<Complex> {
    let rho = path_loss(d, gamma)?;
    Ok(Complex::from_polar(
        1.0 / rho.sqrt(),
        -2.0 * std::f64::consts::PI * d / lambda,
    ))
}

/// The five ground-truth channels of one scene.
///
/// Shapes follow the receive-side × transmit-side convention: `bs_ris` is
/// M_R×M_B, `bs_drone` 1×M_B, `ris_drone` 1×M_R, `drone_ue` M_U×1, and
/// `bs_ue` M_U×M_B.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// BS → RIS matrix channel.
    pub bs_ris: CMatrix,
    /// BS → drone row channel (departure side only; the drone is passive).
    pub bs_drone: CRowVector,
    /// RIS → drone row channel.
    pub ris_drone: CRowVector,
    /// Drone → UE column channel.
    pub drone_ue: CVector,
    /// BS → UE direct (interference) channel.
    pub bs_ue: CMatrix,
}

impl ChannelSet {
    pub fn m_bs(&self) -> usize {
        self.bs_drone.len()
    }

    pub fn m_ris(&self) -> usize {
        self.ris_drone.len()
    }

    pub fn m_ue(&self) -> usize {
        self.drone_ue.len()
    }
}

/// Build all five channels from the scenario geometry.
pub fn build_channels(s: &Scenario, arrays: &ArraySet) -> Result<ChannelSet> {
    s.validate()?;
    arrays.validate()?;
    let lam = s.lambda;

    // BS -> RIS
    let g1 = link_gain(distance(&s.p_bs, &s.p_ris), lam, s.gamma)?;
    let ris_from_bs = steering(&arrays.ris, lam, direction_angles(&s.p_ris, &s.p_bs)?)?;
    let bs_to_ris = steering(&arrays.bs, lam, direction_angles(&s.p_bs, &s.p_ris)?)?;
    let bs_ris = (&ris_from_bs.v * bs_to_ris.v.adjoint()).scale(1.0) * g1;

    // BS -> drone (departure only)
    let g2 = link_gain(distance(&s.p_bs, &s.p_drone), lam, s.gamma)?;
    let bs_to_drone = steering(&arrays.bs, lam, direction_angles(&s.p_bs, &s.p_drone)?)?;
    let bs_drone = CRowVector::from_iterator(
        arrays.bs.len(),
        bs_to_drone.v.iter().map(|e| g2 * e.conj()),
    );

    // RIS -> drone
    let g3 = link_gain(distance(&s.p_ris, &s.p_drone), lam, s.gamma)?;
    let ris_to_drone = steering(&arrays.ris, lam, direction_angles(&s.p_ris, &s.p_drone)?)?;
    let ris_drone = CRowVector::from_iterator(
        arrays.ris.len(),
        ris_to_drone.v.iter().map(|e| g3 * e.conj()),
    );

    // Drone -> UE
    let g4 = link_gain(distance(&s.p_ue, &s.p_drone), lam, s.gamma)?;
    let ue_from_drone = steering(&arrays.ue, lam, direction_angles(&s.p_ue, &s.p_drone)?)?;
    let drone_ue = ue_from_drone.v * g4;

    // BS -> UE
    let g5 = link_gain(distance(&s.p_bs, &s.p_ue), lam, s.gamma)?;
    let ue_from_bs = steering(&arrays.ue, lam, direction_angles(&s.p_ue, &s.p_bs)?)?;
    let bs_to_ue = steering(&arrays.bs, lam, direction_angles(&s.p_bs, &s.p_ue)?)?;
    let bs_ue = (&ue_from_bs.v * bs_to_ue.v.adjoint()) * g5;

    Ok(ChannelSet {
        bs_ris,
        bs_drone,
        ris_drone,
        drone_ue,
        bs_ue,
    })
}

/// The two cascaded rank-one channels seen by the receiver, with their
/// complex gains.
#[derive(Debug, Clone)]
pub struct CascadePair {
    /// Double-bounce BS→RIS→drone→UE channel, M_U×M_R.
    pub h_ris: CMatrix,
    /// Single-bounce BS→drone→UE channel, M_U×M_B.
    pub h_direct: CMatrix,
    /// Complex gain of the double-bounce cascade.
    pub eps_ris: Complex,
    /// Complex gain of the single-bounce cascade.
    pub eps_direct: Complex,
    /// Known BS→RIS constant `M_B·e^{−j2πd₁/λ}/√ρ₁` folded into `eps_ris`.
    pub known_bs_ris_gain: Complex,
}

/// Form the cascades and their gains from the ground-truth channels.
pub fn cascade(s: &Scenario, ch: &ChannelSet) -> Result<CascadePair> {
    let lam = s.lambda;
    let g1 = link_gain(distance(&s.p_bs, &s.p_ris), lam, s.gamma)?;
    let g2 = link_gain(distance(&s.p_bs, &s.p_drone), lam, s.gamma)?;
    let g3 = link_gain(distance(&s.p_ris, &s.p_drone), lam, s.gamma)?;
    let g4 = link_gain(distance(&s.p_ue, &s.p_drone), lam, s.gamma)?;
    let known_bs_ris_gain = g1 * ch.m_bs() as f64;

    let h_ris = (&ch.drone_ue * &ch.ris_drone) * (s.zeta * known_bs_ris_gain);
    let h_direct = (&ch.drone_ue * &ch.bs_drone) * s.zeta;
    let eps_ris = s.zeta * known_bs_ris_gain * g4 * g3;
    let eps_direct = s.zeta * g4 * g2;

    Ok(CascadePair {
        h_ris,
        h_direct,
        eps_ris,
        eps_direct,
        known_bs_ris_gain,
    })
}
