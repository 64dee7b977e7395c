//! Millimeter-wave channel pieces: Gaussian directional antenna pattern, power-law
//! path loss, exponential blockage, Nakagami-m small-scale fading, and the
//! SINR/rate chain they feed.
//!
//! All powers and gains are linear (watts, ratios); dB/dBm conversion happens at
//! config ingestion. Angles are radians.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::geometry::{bearing, wrap_angle, Position};
use crate::rng::keyed_unit;
use crate::scalar::Scalar;
use crate::{Error, Real, Result};

/// Roll-off constant of the Gaussian main lobe; also sets the side-lobe floor
/// at `10^-SIDE_LOBE_EXPONENT` of the peak.
pub const SIDE_LOBE_EXPONENT: f64 = 2.028;

/// Slope of the peak-gain normalization denominator.
const GAIN_DENOM_SLOPE: f64 = 42.64;

/// Peak (boresight) gain of a beam `beamwidth` radians wide.
///
/// Narrower beams concentrate energy: the peak gain is strictly decreasing in
/// the beamwidth.
pub fn main_lobe_gain<S: Scalar>(beamwidth: S) -> Result<S> {
    if !(beamwidth > S::zero()) || !beamwidth.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beamwidth must be positive and finite, got {beamwidth}"
        )));
    }
    let num = S::PI() * S::c(10.0).powf(S::c(SIDE_LOBE_EXPONENT));
    Ok(num / (S::c(GAIN_DENOM_SLOPE) * beamwidth + S::PI()))
}

/// Constant side-lobe gain, `10^-2.028` of the peak.
pub fn side_lobe_gain<S: Scalar>(beamwidth: S) -> Result<S> {
    Ok(main_lobe_gain(beamwidth)? * S::c(10.0).powf(-S::c(SIDE_LOBE_EXPONENT)))
}

/// Antenna gain at `offset` radians from boresight.
///
/// Inside the main lobe (`|offset| <= beamwidth`) the gain rolls off as a
/// Gaussian chosen so the pattern is continuous at the lobe edge; outside it
/// is the flat side-lobe floor.
pub fn antenna_gain<S: Scalar>(beamwidth: S, offset: S) -> Result<S> {
    let peak = main_lobe_gain(beamwidth)?;
    if offset.abs() <= beamwidth {
        let rho = S::c(SIDE_LOBE_EXPONENT) * S::c(10.0).ln() / (beamwidth * beamwidth);
        Ok(peak * (-rho * offset * offset).exp())
    } else {
        Ok(peak * S::c(10.0).powf(-S::c(SIDE_LOBE_EXPONENT)))
    }
}

/// Power-law path loss `intercept * d^-exponent` (linear).
pub fn path_loss<S: Scalar>(intercept: S, exponent: S, d: S) -> Result<S> {
    if !(intercept > S::zero()) || !exponent.is_finite() {
        return Err(Error::InvalidParameter(
            "path-loss intercept must be positive and exponent finite".into(),
        ));
    }
    if !(d > S::zero()) {
        return Err(Error::InvalidParameter(format!(
            "path loss needs a positive distance, got {d}"
        )));
    }
    Ok(intercept * d.powf(-exponent))
}

/// Probability that a link of length `d` is line-of-sight under Boolean
/// blockage with density parameter `beta` (per meter).
pub fn los_probability<S: Scalar>(beta: S, d: S) -> Result<S> {
    if beta < S::zero() || d < S::zero() {
        return Err(Error::InvalidParameter(
            "blockage beta and distance must be non-negative".into(),
        ));
    }
    Ok((-beta * d).exp())
}

/// Shannon rate scaled by the alignment duty factor `efficiency` in `[0, 1]`.
pub fn data_rate<S: Scalar>(efficiency: S, bandwidth: S, sinr: S) -> Result<S> {
    if !(S::zero()..=S::one()).contains(&efficiency) {
        return Err(Error::InvalidParameter(format!(
            "rate efficiency must lie in [0, 1], got {efficiency}"
        )));
    }
    if sinr < S::zero() {
        return Err(Error::InvalidParameter(format!("SINR must be non-negative, got {sinr}")));
    }
    Ok(efficiency * bandwidth * (S::one() + sinr).log2())
}

/// Signal-to-interference-plus-noise ratio.
pub fn sinr<S: Scalar>(signal: S, interference: S, noise: S) -> S {
    signal / (noise + interference)
}

/// A steerable directional antenna: one beamwidth, one boresight direction.
#[derive(Debug, Clone, Copy)]
pub struct DirectionalAntenna {
    pub beamwidth: Real,
    pub boresight: Real,
}

impl DirectionalAntenna {
    pub fn new(beamwidth: Real, boresight: Real) -> Result<Self> {
        main_lobe_gain(beamwidth)?; // validates the beamwidth
        Ok(DirectionalAntenna { beamwidth, boresight: wrap_angle(boresight) })
    }

    /// Gain toward an absolute bearing.
    pub fn gain_toward(&self, target_bearing: Real) -> Real {
        let offset = wrap_angle(target_bearing - self.boresight);
        antenna_gain(self.beamwidth, offset).expect("beamwidth validated at construction")
    }

    /// True when an absolute bearing falls inside the main lobe.
    pub fn in_main_lobe(&self, target_bearing: Real) -> bool {
        wrap_angle(target_bearing - self.boresight).abs() <= self.beamwidth
    }

    pub fn peak_gain(&self) -> Real {
        main_lobe_gain(self.beamwidth).expect("beamwidth validated at construction")
    }
}

/// Which lobes an interferer/victim pair couple through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LobeCoupling {
    MainMain,
    MainSide,
    SideMain,
    SideSide,
}

/// Classify the lobe coupling between an interfering transmitter and a victim
/// receiver and return the composite (product) antenna gain.
pub fn classify_interference_gain(
    tx_pos: Position,
    tx: &DirectionalAntenna,
    rx_pos: Position,
    rx: &DirectionalAntenna,
) -> (LobeCoupling, Real) {
    let toward_rx = bearing(tx_pos, rx_pos);
    let toward_tx = bearing(rx_pos, tx_pos);
    let tx_main = tx.in_main_lobe(toward_rx);
    let rx_main = rx.in_main_lobe(toward_tx);
    let coupling = match (tx_main, rx_main) {
        (true, true) => LobeCoupling::MainMain,
        (true, false) => LobeCoupling::MainSide,
        (false, true) => LobeCoupling::SideMain,
        (false, false) => LobeCoupling::SideSide,
    };
    (coupling, tx.gain_toward(toward_rx) * rx.gain_toward(toward_tx))
}

/// One interference contribution, assembled by the caller.
#[derive(Debug, Clone, Copy)]
pub struct InterferenceTerm {
    pub tx_power: Real,
    pub fading: Real,
    pub gain: Real,
    pub path_loss: Real,
    pub los: bool,
}

/// Total interference power; blocked (non-LOS) terms contribute nothing.
pub fn interference_power(terms: &[InterferenceTerm]) -> Real {
    terms
        .iter()
        .filter(|t| t.los)
        .map(|t| t.tx_power * t.fading * t.gain * t.path_loss)
        .sum()
}

/// Static channel parameters, all linear/SI units.
#[derive(Debug, Clone, Copy)]
pub struct ChannelParams {
    /// Transmit power, watts.
    pub tx_power: Real,
    /// System bandwidth, hertz.
    pub bandwidth: Real,
    /// Noise power spectral density, watts/hertz.
    pub noise_density: Real,
    /// Path-loss value at 1 m (linear).
    pub pathloss_intercept: Real,
    /// Path-loss exponent.
    pub pathloss_exponent: Real,
    /// Nakagami fading shape (m parameter).
    pub nakagami_shape: Real,
    /// Blockage density, per meter.
    pub blockage_beta: Real,
}

impl ChannelParams {
    /// Thermal noise power over the full bandwidth, watts.
    pub fn noise_power(&self) -> Real {
        self.noise_density * self.bandwidth
    }

    pub fn path_loss(&self, d: Real) -> Result<Real> {
        path_loss(self.pathloss_intercept, self.pathloss_exponent, d)
    }

    pub fn los_probability(&self, d: Real) -> Real {
        los_probability(self.blockage_beta, d).expect("beta validated at config time")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power", self.tx_power),
            ("bandwidth", self.bandwidth),
            ("noise_density", self.noise_density),
            ("pathloss_intercept", self.pathloss_intercept),
            ("nakagami_shape", self.nakagami_shape),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("channel.{name} must be positive, got {v}")));
            }
        }
        if self.blockage_beta < 0.0 || !self.blockage_beta.is_finite() {
            return Err(Error::Config(format!(
                "channel.blockage_beta must be non-negative, got {}",
                self.blockage_beta
            )));
        }
        if !self.pathloss_exponent.is_finite() || self.pathloss_exponent < 0.0 {
            return Err(Error::Config(format!(
                "channel.pathloss_exponent must be non-negative, got {}",
                self.pathloss_exponent
            )));
        }
        Ok(())
    }
}

/// Draw a unit-mean Nakagami-m power fading coefficient, Gamma(m, 1/m).
pub fn sample_fading<R: Rng>(shape: Real, rng: &mut R) -> Result<Real> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Nakagami shape must be positive, got {shape}"
        )));
    }
    let gamma = Gamma::new(shape, 1.0 / shape)
        .map_err(|e| Error::InvalidParameter(format!("fading distribution: {e}")))?;
    Ok(gamma.sample(rng))
}

/// Frozen per-trial blockage field: every unordered node pair gets one LOS
/// coin, queryable in any order with the same outcome.
#[derive(Debug, Clone, Copy)]
pub struct LosField {
    seed: u64,
    beta: Real,
}

impl LosField {
    pub fn new(seed: u64, beta: Real) -> Self {
        LosField { seed, beta }
    }

    /// Whether nodes `a` and `b` at separation `d` see each other.
    pub fn is_los(&self, a: usize, b: usize, d: Real) -> bool {
        if self.beta == 0.0 {
            return true;
        }
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let u = keyed_unit(&[self.seed, lo as u64, hi as u64]);
        u < los_probability(self.beta, d).expect("beta non-negative")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamPurpose};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_6, PI};

    // Frozen by scripts/derived_values.py.
    const PEAK_GAIN_30DEG: f64 = 13.157024521754825;
    const SIDE_GAIN_30DEG: f64 = 0.12335526315789474;
    const LOS_P_100M: f64 = 0.763_379_494_336_853_19;

    #[test]
    fn peak_gain_matches_oracle() {
        assert_relative_eq!(
            main_lobe_gain(FRAC_PI_6).unwrap(),
            PEAK_GAIN_30DEG,
            max_relative = 1e-9
        );
    }

    #[test]
    fn side_lobe_matches_oracle_and_is_pattern_floor() {
        let g = side_lobe_gain(FRAC_PI_6).unwrap();
        assert_relative_eq!(g, SIDE_GAIN_30DEG, max_relative = 1e-9);
        assert_relative_eq!(antenna_gain(FRAC_PI_6, PI).unwrap(), g, max_relative = 1e-12);
    }

    #[test]
    fn gain_is_continuous_at_lobe_edge() {
        for &bw in &[0.1, FRAC_PI_6, 0.6, 1.2] {
            let inside = antenna_gain(bw, bw).unwrap();
            let outside = side_lobe_gain(bw).unwrap();
            assert_relative_eq!(inside, outside, max_relative = 1e-9);
        }
    }

    #[test]
    fn gain_is_even_peaked_and_decreasing_within_lobe() {
        let bw = FRAC_PI_6;
        assert_relative_eq!(antenna_gain(bw, 0.0).unwrap(), PEAK_GAIN_30DEG, max_relative = 1e-9);
        let mut prev = antenna_gain(bw, 0.0).unwrap();
        for i in 1..=20 {
            let off = bw * i as f64 / 20.0;
            let g = antenna_gain(bw, off).unwrap();
            assert!(g < prev, "gain must fall with offset");
            assert_eq!(g, antenna_gain(bw, -off).unwrap(), "pattern must be even");
            prev = g;
        }
    }

    #[test]
    fn narrower_beams_have_higher_peaks() {
        let widths = [15.0, 25.0, 35.0, 45.0].map(|d: f64| d.to_radians());
        for pair in widths.windows(2) {
            assert!(main_lobe_gain(pair[0]).unwrap() > main_lobe_gain(pair[1]).unwrap());
        }
    }

    #[test]
    fn beamwidth_must_be_positive() {
        assert!(main_lobe_gain(0.0).is_err());
        assert!(antenna_gain(-0.1, 0.0).is_err());
        assert!(DirectionalAntenna::new(0.0, 0.0).is_err());
    }

    #[test]
    fn generic_gain_works_in_f32() {
        let g = main_lobe_gain(0.5235988f32).unwrap();
        assert!((g - PEAK_GAIN_30DEG as f32).abs() < 1e-3);
    }

    #[test]
    fn path_loss_basics() {
        let c = 10f64.powf(-6.17);
        assert_relative_eq!(path_loss(c, 2.0, 1.0).unwrap(), c, max_relative = 1e-12);
        assert_relative_eq!(path_loss(c, 2.0, 10.0).unwrap(), c / 100.0, max_relative = 1e-12);
        assert!(path_loss(c, 2.0, 0.0).is_err());
        assert!(path_loss(-1.0, 2.0, 5.0).is_err());
    }

    #[test]
    fn los_probability_matches_oracle() {
        assert_relative_eq!(los_probability(0.0027, 100.0).unwrap(), LOS_P_100M, max_relative = 1e-9);
        assert_eq!(los_probability(0.0, 500.0).unwrap(), 1.0);
        assert_eq!(los_probability(0.0027, 0.0).unwrap(), 1.0);
        assert!(los_probability(-0.1, 10.0).is_err());
    }

    #[test]
    fn rate_and_sinr_chain() {
        // SINR 1 over 100 MHz at full efficiency: exactly 100 Mb/s.
        assert_relative_eq!(data_rate(1.0, 100e6, 1.0).unwrap(), 100e6, max_relative = 1e-12);
        assert_eq!(data_rate(0.0, 100e6, 7.0).unwrap(), 0.0);
        assert!(data_rate(1.2, 1e6, 1.0).is_err());
        assert!(data_rate(-0.1, 1e6, 1.0).is_err());
        // No interference: SINR reduces to S/N.
        assert_relative_eq!(sinr(2e-9, 0.0, 4e-13), 5000.0, max_relative = 1e-12);
        assert!(sinr(1e-9, 1e-9, 1e-13) < sinr(1e-9, 0.0, 1e-13));
    }

    #[test]
    fn interference_sums_only_los_terms() {
        let t = |gain, los| InterferenceTerm { tx_power: 2.0, fading: 1.0, gain, path_loss: 0.5, los };
        let total = interference_power(&[t(1.0, true), t(3.0, true), t(100.0, false)]);
        assert_relative_eq!(total, 2.0 * 0.5 * 4.0, max_relative = 1e-12);
        assert_eq!(interference_power(&[]), 0.0);
    }

    #[test]
    fn lobe_coupling_quadrants() {
        let bw = FRAC_PI_6;
        let tx_pos = Position::new(0.0, 0.0);
        let rx_pos = Position::new(100.0, 0.0);
        let aimed_tx = DirectionalAntenna::new(bw, 0.0).unwrap(); // east, at rx
        let away_tx = DirectionalAntenna::new(bw, PI).unwrap(); // west
        let aimed_rx = DirectionalAntenna::new(bw, PI).unwrap(); // west, at tx
        let away_rx = DirectionalAntenna::new(bw, 0.0).unwrap();

        let peak = aimed_tx.peak_gain();
        let side = side_lobe_gain(bw).unwrap();

        let (c, g) = classify_interference_gain(tx_pos, &aimed_tx, rx_pos, &aimed_rx);
        assert_eq!(c, LobeCoupling::MainMain);
        assert_relative_eq!(g, peak * peak, max_relative = 1e-9);

        let (c, g) = classify_interference_gain(tx_pos, &aimed_tx, rx_pos, &away_rx);
        assert_eq!(c, LobeCoupling::MainSide);
        assert_relative_eq!(g, peak * side, max_relative = 1e-9);

        let (c, g) = classify_interference_gain(tx_pos, &away_tx, rx_pos, &aimed_rx);
        assert_eq!(c, LobeCoupling::SideMain);
        assert_relative_eq!(g, side * peak, max_relative = 1e-9);

        let (c, g) = classify_interference_gain(tx_pos, &away_tx, rx_pos, &away_rx);
        assert_eq!(c, LobeCoupling::SideSide);
        assert_relative_eq!(g, side * side, max_relative = 1e-9);
    }

    #[test]
    fn gain_within_lobe_uses_actual_offset() {
        // Victim boresight 10 degrees off the interferer: still main lobe, but
        // below peak.
        let bw = FRAC_PI_6;
        let tx_pos = Position::new(0.0, 0.0);
        let rx_pos = Position::new(100.0, 0.0);
        let tx = DirectionalAntenna::new(bw, 0.0).unwrap();
        let rx = DirectionalAntenna::new(bw, PI - 10f64.to_radians()).unwrap();
        let (c, g) = classify_interference_gain(tx_pos, &tx, rx_pos, &rx);
        assert_eq!(c, LobeCoupling::MainMain);
        let expected = tx.peak_gain() * antenna_gain(bw, 10f64.to_radians()).unwrap();
        assert_relative_eq!(g, expected, max_relative = 1e-9);
        assert!(g < tx.peak_gain() * tx.peak_gain());
    }

    #[test]
    fn fading_has_unit_mean_and_shape_variance() {
        let mut rng = stream(9, 0, StreamPurpose::Fading);
        let shape = 3.0;
        let n = 200_000;
        let draws: Vec<Real> = (0..n).map(|_| sample_fading(shape, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<Real>() / n as Real;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<Real>() / n as Real;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0 / shape).abs() < 0.01, "variance {var}");
        assert!(draws.iter().all(|&x| x > 0.0));
        assert!(sample_fading(0.0, &mut rng).is_err());
    }

    #[test]
    fn noise_power_at_table_values() {
        let p = ChannelParams {
            tx_power: 10f64.powf((15.0 - 30.0) / 10.0),
            bandwidth: 100e6,
            noise_density: 10f64.powf((-174.0 - 30.0) / 10.0),
            pathloss_intercept: 10f64.powf(-6.17),
            pathloss_exponent: 2.0,
            nakagami_shape: 3.0,
            blockage_beta: 0.0027,
        };
        p.validate().unwrap();
        // -174 dBm/Hz over 100 MHz -> 10^-12.4 W.
        assert_relative_eq!(p.noise_power(), 10f64.powf(-12.4), max_relative = 1e-9);
    }

    #[test]
    fn los_field_is_symmetric_consistent_and_calibrated() {
        let field = LosField::new(77, 0.0027);
        assert_eq!(field.is_los(3, 9, 120.0), field.is_los(9, 3, 120.0));
        assert_eq!(field.is_los(3, 9, 120.0), field.is_los(3, 9, 120.0));
        // Always-LOS with beta = 0.
        let clear = LosField::new(77, 0.0);
        assert!(clear.is_los(0, 1, 1e9));
        // Empirical LOS fraction at d = 100 m close to exp(-0.27).
        let n = 100_000;
        let hits = (0..n).filter(|&i| field.is_los(2 * i, 2 * i + 1, 100.0)).count();
        let frac = hits as Real / n as Real;
        assert!((frac - LOS_P_100M).abs() < 0.005, "LOS fraction {frac}");
    }
}
