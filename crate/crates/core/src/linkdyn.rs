//! Beam-pointing dynamics: how long a narrow-beam link stays aligned under
//! relative motion, how long hierarchical alignment takes, and which beamwidths
//! leave enough stable time to be worth aligning at all.

use crate::geometry::{bearing, Position, RelativeMotion};
use crate::scalar::Scalar;
use crate::{Error, Real, Result};

/// Roll-off constant shared with the antenna pattern (see channel module).
use crate::channel::SIDE_LOBE_EXPONENT;

/// Beam drift accumulated over `dt` seconds of relative motion.
///
/// Caller guarantees `d > 0` and that the drift stays small relative to `d`
/// (short-horizon linearization).
pub fn pointing_error<S: Scalar>(relative_speed: S, relative_angle: S, d: S, dt: S) -> S {
    debug_assert!(d > S::zero());
    relative_speed * dt * relative_angle.sin() / d
}

/// Residual main-lobe gain fraction at a given drift, `exp(-rho * err^2)`.
pub fn alignment_factor<S: Scalar>(pointing_error: S, beamwidth: S) -> S {
    let rho = S::c(SIDE_LOBE_EXPONENT) * S::c(10.0).ln() / (beamwidth * beamwidth);
    (-rho * pointing_error * pointing_error).exp()
}

/// Time until beam drift degrades the main-lobe gain to the fraction `alpha`.
///
/// Returns `+inf` when the relative motion has no cross-boresight component
/// (the link never drifts).
pub fn link_stability_time<S: Scalar>(
    d: S,
    rx_beamwidth: S,
    relative_speed: S,
    relative_angle: S,
    alpha: S,
) -> Result<S> {
    if !(alpha > S::zero() && alpha <= S::one()) {
        return Err(Error::InvalidParameter(format!(
            "misalignment threshold must lie in (0, 1], got {alpha}"
        )));
    }
    debug_assert!(d > S::zero() && rx_beamwidth > S::zero());
    let cross = relative_speed * relative_angle.sin();
    if cross == S::zero() {
        return Ok(S::infinity());
    }
    let scale = (alpha.recip().ln() / (S::c(SIDE_LOBE_EXPONENT) * S::c(10.0).ln())).sqrt();
    Ok(d * rx_beamwidth / cross * scale)
}

/// Stability time from a precomputed relative-motion record.
pub fn stability_for(d: Real, rx_beamwidth: Real, motion: RelativeMotion, alpha: Real) -> Result<Real> {
    link_stability_time(d, rx_beamwidth, motion.speed, motion.angle, alpha)
}

/// Sectors needed to sweep a `psi`-wide region with a `phi`-wide beam.
///
/// Ratios within 1e-9 of an integer snap to it so float noise never buys an
/// extra sector.
pub fn sector_count<S: Scalar>(psi: S, phi: S) -> S {
    let ratio = psi / phi;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= S::c(1e-9) {
        nearest
    } else {
        ratio.ceil()
    }
}

/// Two-sided hierarchical alignment duration: every sector pair gets a pilot.
pub fn alignment_time<S: Scalar>(psi_m: S, psi_n: S, phi_m: S, phi_n: S, t_pilot: S) -> Result<S> {
    for (phi, psi) in [(phi_m, psi_m), (phi_n, psi_n)] {
        if !(phi > S::zero()) || !(psi > S::zero()) {
            return Err(Error::InvalidParameter("beamwidths must be positive".into()));
        }
        if phi > psi {
            return Err(Error::InvalidParameter(format!(
                "narrow beam {phi} exceeds its sector width {psi}"
            )));
        }
    }
    if !(t_pilot > S::zero()) {
        return Err(Error::InvalidParameter("pilot time must be positive".into()));
    }
    Ok(sector_count(psi_m, phi_m) * sector_count(psi_n, phi_n) * t_pilot)
}

/// Fraction of the stability window left after alignment, `1 - T^A/T^S`.
///
/// Zero (infeasible) when alignment does not fit; one when the link never
/// drifts.
pub fn alignment_efficiency<S: Scalar>(t_align: S, t_stab: S) -> S {
    if t_stab == S::infinity() {
        return S::one();
    }
    if !(t_stab > S::zero()) || t_align >= t_stab {
        return S::zero();
    }
    S::one() - t_align / t_stab
}

/// Beamwidth pairs that leave a non-negative transmission window at the given
/// stability time: the product bound `phi_m * phi_n >= psi_m * psi_n * T_P / T^S`
/// filtered further so the realized (integer-sector) alignment fits, and
/// narrow beams never exceed their sectors.
pub fn feasible_beamwidths<S: Scalar>(
    action_set: &[S],
    psi_m: S,
    psi_n: S,
    t_pilot: S,
    stability: S,
) -> Vec<(S, S)> {
    debug_assert!(stability > S::zero());
    let bound = psi_m * psi_n * t_pilot / stability;
    let mut pairs = Vec::new();
    for &phi_m in action_set {
        for &phi_n in action_set {
            if phi_m > psi_m || phi_n > psi_n {
                continue;
            }
            if phi_m * phi_n < bound {
                continue;
            }
            let t_align = alignment_time(psi_m, psi_n, phi_m, phi_n, t_pilot)
                .expect("bounds checked above");
            if t_align <= stability {
                pairs.push((phi_m, phi_n));
            }
        }
    }
    pairs
}

/// Whether a single common beamwidth is workable at the stability time it
/// induces (pair-common actions: both endpoints adopt `action`).
pub fn common_action_feasible(action: Real, psi: Real, t_pilot: Real, stability: Real) -> bool {
    if action > psi || !(stability > 0.0) {
        return false;
    }
    if action * action < psi * psi * t_pilot / stability {
        return false;
    }
    let t_align = alignment_time(psi, psi, action, action, t_pilot).expect("action <= psi");
    t_align <= stability
}

/// Frame-level signaling durations and the misalignment threshold.
#[derive(Debug, Clone, Copy)]
pub struct TimingBudget {
    /// Pilot duration per sector pair during alignment (T_P), seconds.
    pub t_pilot: Real,
    /// Reply, decision, and acknowledgment slot durations, seconds.
    pub t_reply: Real,
    pub t_decide: Real,
    pub t_ack: Real,
    /// Gain fraction below which the link counts as misaligned (alpha).
    pub misalignment_threshold: Real,
}

impl TimingBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_pilot > 0.0) {
            return Err(Error::Config("timing.t_pilot must be positive".into()));
        }
        for (name, v) in
            [("t_reply", self.t_reply), ("t_decide", self.t_decide), ("t_ack", self.t_ack)]
        {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Config(format!("timing.{name} must be non-negative")));
            }
        }
        let a = self.misalignment_threshold;
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Config(format!(
                "timing.misalignment_threshold must lie in (0, 1], got {a}"
            )));
        }
        Ok(())
    }

    /// Per-round signaling cost of the deferred-acceptance baseline.
    pub fn handshake_time(&self) -> Real {
        self.t_reply + self.t_decide + self.t_ack
    }
}

/// An established transmitter->requester link and its beam state.
#[derive(Debug, Clone)]
pub struct D2DLink {
    pub tx: usize,
    pub rx: usize,
    pub tx_pos: Position,
    pub rx_pos: Position,
    pub distance: Real,
    pub los: bool,
    pub motion: RelativeMotion,
    /// Operating common beamwidth, radians (set at association, revised by the
    /// beamwidth game).
    pub beamwidth: Real,
    /// Stability time at the operating beamwidth, seconds.
    pub stability_time: Real,
    /// Alignment time at the operating beamwidth, seconds.
    pub alignment_time: Real,
    /// Remaining requested segments at association time.
    pub requested_segments: u32,
    /// The same demand in bits.
    pub requested_bits: u64,
}

impl D2DLink {
    /// Build a link operating at `beamwidth`, with stability/alignment derived
    /// from the geometry.
    #[allow(clippy::too_many_arguments)]
    pub fn establish(
        tx: usize,
        rx: usize,
        tx_pos: Position,
        rx_pos: Position,
        motion: RelativeMotion,
        beamwidth: Real,
        psi: Real,
        timing: &TimingBudget,
        requested_segments: u32,
        segment_bits: u64,
    ) -> Result<Self> {
        let distance = crate::geometry::distance(tx_pos, rx_pos);
        if !(distance > 0.0) {
            return Err(Error::InvalidParameter("link endpoints must be distinct".into()));
        }
        let stability_time =
            stability_for(distance, beamwidth, motion, timing.misalignment_threshold)?;
        let alignment_time = alignment_time(psi, psi, beamwidth, beamwidth, timing.t_pilot)?;
        Ok(D2DLink {
            tx,
            rx,
            tx_pos,
            rx_pos,
            distance,
            los: true,
            motion,
            beamwidth,
            stability_time,
            alignment_time,
            requested_segments,
            requested_bits: requested_segments as u64 * segment_bits,
        })
    }

    /// Transmitter boresight: aimed at the requester.
    pub fn tx_boresight(&self) -> Real {
        bearing(self.tx_pos, self.rx_pos)
    }

    /// Requester boresight: aimed at the transmitter.
    pub fn rx_boresight(&self) -> Real {
        bearing(self.rx_pos, self.tx_pos)
    }

    /// Re-derive beam state for a new operating beamwidth.
    pub fn set_beamwidth(&mut self, beamwidth: Real, psi: Real, timing: &TimingBudget) -> Result<()> {
        self.stability_time =
            stability_for(self.distance, beamwidth, self.motion, timing.misalignment_threshold)?;
        self.alignment_time = alignment_time(psi, psi, beamwidth, beamwidth, timing.t_pilot)?;
        self.beamwidth = beamwidth;
        Ok(())
    }
}
