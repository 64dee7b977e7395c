//! Per-link, per-trial, and cross-trial performance metrics.
//!
//! Two delivery views are always reported side by side: the normalized
//! stability-window throughput ratio (rate × stability / requested bits) and
//! the physically delivered bits, capped by the usable transmission window
//! and the outstanding demand. Aggregation folds trials into means, standard
//! errors, and empirical CDFs.

use serde::Serialize;

use crate::Real;

/// Normalized throughput over the stability window: rate × T^S / requested.
/// Absent when nothing was requested (the ratio is undefined).
pub fn normalized_throughput(rate: Real, stability: Real, requested_bits: Real) -> Option<Real> {
    if requested_bits <= 0.0 {
        return None;
    }
    Some(rate * stability / requested_bits)
}

/// Bits the link can physically deliver: rate over the window left after
/// alignment, never more than the outstanding request.
pub fn delivered_bits(rate: Real, stability: Real, alignment: Real, requested_bits: Real) -> Real {
    if rate <= 0.0 {
        return 0.0;
    }
    if stability.is_infinite() {
        return requested_bits;
    }
    (rate * (stability - alignment).max(0.0)).min(requested_bits)
}

/// What one matched link achieved in one frame.
#[derive(Debug, Clone, Serialize)]
pub struct LinkOutcome {
    /// Realized rate with sampled fading, bits/s.
    pub rate: Real,
    /// Normalized stability-window throughput; absent for zero demand.
    pub normalized_throughput: Option<Real>,
    /// Whole-segment bits actually delivered.
    pub delivered_bits: u64,
    pub stability_time: Real,
    pub alignment_time: Real,
    /// Whether the deadline penalty was active in the selection game.
    pub penalty_active: bool,
}

/// One trial's roll-up.
#[derive(Debug, Clone, Serialize)]
pub struct TrialMetrics {
    pub trial: u64,
    /// Matched link-frames.
    pub links: u64,
    /// Requester-frames that wanted service.
    pub active_requests: u64,
    /// Sum of the normalized throughputs over matched links.
    pub sum_throughput: Real,
    /// Mean normalized throughput per matched link (0 with no links).
    pub mean_throughput: Real,
    pub delivered_segments: u64,
    pub d2d_bits: u64,
    pub cellular_bits: u64,
    pub demanded_bits: u64,
    /// Matched share of requester-frames (vacuously 1 with no demand).
    pub matched_fraction: Real,
    /// Mean learning iterations per frame game (0 without learning).
    pub lll_iterations: Real,
    /// Share of frame games that converged within budget (1 without learning).
    pub lll_converged_fraction: Real,
}

impl TrialMetrics {
    /// Exact offload conservation: every demanded bit is either delivered
    /// over D2D or falls back to cellular.
    pub fn conserves_bits(&self) -> bool {
        self.d2d_bits + self.cellular_bits == self.demanded_bits
    }
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SummaryStat {
    pub mean: Real,
    pub se: Real,
}

/// Sample mean and SE (ddof = 1; SE is 0 for fewer than two samples).
pub fn summarize(values: &[Real]) -> SummaryStat {
    let n = values.len();
    if n == 0 {
        return SummaryStat { mean: 0.0, se: 0.0 };
    }
    let mean = values.iter().sum::<Real>() / n as Real;
    if n < 2 {
        return SummaryStat { mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<Real>() / (n - 1) as Real;
    SummaryStat { mean, se: (var / n as Real).sqrt() }
}

/// Empirical CDF: sorted sample points with cumulative probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct Cdf {
    pub points: Vec<(Real, Real)>,
}

impl Cdf {
    pub fn from_values(values: &[Real]) -> Cdf {
        let mut sorted: Vec<Real> = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        let points = sorted
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, (i + 1) as Real / n as Real))
            .collect();
        Cdf { points }
    }
}

/// Cross-trial summary of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub trials: u64,
    pub mean_throughput: SummaryStat,
    pub sum_throughput: SummaryStat,
    pub delivered_segments: SummaryStat,
    pub d2d_bits: SummaryStat,
    pub cellular_bits: SummaryStat,
    pub demanded_bits: SummaryStat,
    pub matched_fraction: SummaryStat,
    pub lll_iterations: SummaryStat,
    pub throughput_cdf: Cdf,
    pub delivered_cdf: Cdf,
}

/// Fold trials into means, standard errors, and CDF grids.
pub fn aggregate(trials: &[TrialMetrics]) -> Aggregate {
    let take = |f: &dyn Fn(&TrialMetrics) -> Real| trials.iter().map(f).collect::<Vec<Real>>();
    let mean_tp = take(&|t| t.mean_throughput);
    let delivered = take(&|t| t.delivered_segments as Real);
    Aggregate {
        trials: trials.len() as u64,
        mean_throughput: summarize(&mean_tp),
        sum_throughput: summarize(&take(&|t| t.sum_throughput)),
        delivered_segments: summarize(&delivered),
        d2d_bits: summarize(&take(&|t| t.d2d_bits as Real)),
        cellular_bits: summarize(&take(&|t| t.cellular_bits as Real)),
        demanded_bits: summarize(&take(&|t| t.demanded_bits as Real)),
        matched_fraction: summarize(&take(&|t| t.matched_fraction)),
        lll_iterations: summarize(&take(&|t| t.lll_iterations)),
        throughput_cdf: Cdf::from_values(&mean_tp),
        delivered_cdf: Cdf::from_values(&delivered),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn throughput_ratio_behaves_as_printed() {
        // Exact fit: rate × stability equals the request.
        assert_relative_eq!(normalized_throughput(1e8, 2.0, 2e8).unwrap(), 1.0);
        // Linear in rate, inverse in requested size.
        assert_relative_eq!(
            normalized_throughput(2e8, 2.0, 2e8).unwrap(),
            2.0 * normalized_throughput(1e8, 2.0, 2e8).unwrap()
        );
        assert_relative_eq!(
            normalized_throughput(1e8, 2.0, 1e8).unwrap(),
            2.0 * normalized_throughput(1e8, 2.0, 2e8).unwrap()
        );
        assert!(normalized_throughput(1e8, 2.0, 0.0).is_none());
    }

    #[test]
    fn delivered_bits_caps_and_degenerates() {
        // Unbounded window delivers the full request.
        assert_relative_eq!(delivered_bits(1e8, f64::INFINITY, 3.6e-4, 5e9), 5e9);
        // No rate, no delivery (even with an unbounded window).
        assert_eq!(delivered_bits(0.0, f64::INFINITY, 0.0, 5e9), 0.0);
        // Alignment consuming the whole window leaves nothing.
        assert_eq!(delivered_bits(1e8, 2.0, 2.0, 5e9), 0.0);
        // Otherwise rate × window, capped by demand.
        assert_relative_eq!(delivered_bits(1e8, 2.0, 0.5, 5e9), 1.5e8);
        assert_relative_eq!(delivered_bits(1e8, 2.0, 0.5, 1e8), 1e8);
    }

    fn trial(i: u64, tp: Real, segs: u64) -> TrialMetrics {
        TrialMetrics {
            trial: i,
            links: 4,
            active_requests: 5,
            sum_throughput: tp * 4.0,
            mean_throughput: tp,
            delivered_segments: segs,
            d2d_bits: segs * 1000,
            cellular_bits: 10_000 - segs * 1000,
            demanded_bits: 10_000,
            matched_fraction: 0.8,
            lll_iterations: 100.0,
            lll_converged_fraction: 1.0,
        }
    }

    #[test]
    fn conservation_check_is_exact() {
        assert!(trial(0, 1.0, 3).conserves_bits());
        let mut bad = trial(0, 1.0, 3);
        bad.cellular_bits += 1;
        assert!(!bad.conserves_bits());
    }

    #[test]
    fn summaries_and_cdf_axioms() {
        // A single trial aggregates to itself with zero SE.
        let one = aggregate(&[trial(0, 2.5, 4)]);
        assert_relative_eq!(one.mean_throughput.mean, 2.5);
        assert_eq!(one.mean_throughput.se, 0.0);
        // Duplicated trials: same mean, zero variance.
        let dup = aggregate(&[trial(0, 2.5, 4), trial(1, 2.5, 4), trial(2, 2.5, 4)]);
        assert_relative_eq!(dup.mean_throughput.mean, 2.5);
        assert_eq!(dup.mean_throughput.se, 0.0);
        // CDF never decreases and ends at one.
        let agg = aggregate(&[trial(0, 3.0, 2), trial(1, 1.0, 6), trial(2, 2.0, 4)]);
        let cdf = &agg.throughput_cdf;
        assert_eq!(cdf.points.last().unwrap().1, 1.0);
        for w in cdf.points.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
        // SE of the mean shrinks like 1/sqrt(n) for i.i.d.-style replication.
        let a: Vec<Real> = vec![1.0, 2.0, 3.0, 4.0];
        let b: Vec<Real> = a.iter().chain(&a).chain(&a).chain(&a).copied().collect();
        let (sa, sb) = (summarize(&a), summarize(&b));
        assert_relative_eq!(sa.mean, sb.mean);
        assert!((sb.se - sa.se / 2.0).abs() / sa.se < 0.07, "replicated SE should halve");
    }
}
