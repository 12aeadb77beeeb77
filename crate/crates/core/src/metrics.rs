//! Campaign statistics: empirical CDFs of slot minimum rates, outage
//! probability, Jain fairness and scheduling-complexity estimators.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheduler::Allocation;

/// Tolerance on frequency vectors that should sum to one.
const FREQ_TOLERANCE: f64 = 1e-6;

/// `P{r_min <= r}` over the samples.
pub fn outage_probability(samples: &[f64], r: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::NoSamples("outage probability of an empty sample set".into()));
    }
    let hits = samples.iter().filter(|&&s| s <= r).count();
    Ok(hits as f64 / samples.len() as f64)
}

/// Empirical CDF evaluated at each grid point.
pub fn cdf_curve(samples: &[f64], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::NoSamples("CDF of an empty sample set".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&r| (r, sorted.partition_point(|&s| s <= r) as f64 / n))
        .collect())
}

/// Smallest sample `x` with empirical `P{r_min <= x} >= p`.
pub fn quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::NoSamples("quantile of an empty sample set".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((p.clamp(0.0, 1.0) * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[k - 1])
}

/// Evenly spaced grid from `lo` to `hi` inclusive, built from integer steps
/// so the points are reproducible.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || hi < lo {
        return vec![lo];
    }
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// `(sum x)^2 / (n * sum x^2)`.
pub fn jain_index(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::NoSamples("Jain index of an empty rate vector".into()));
    }
    if rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::Numeric(format!(
            "rates must be finite and non-negative: {rates:?}"
        )));
    }
    let sum: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|r| r * r).sum();
    if sum_sq == 0.0 {
        return Err(Error::Numeric("Jain index undefined for all-zero rates".into()));
    }
    if rates.iter().all(|&r| r == rates[0]) {
        return Ok(1.0);
    }
    Ok((sum * sum / (rates.len() as f64 * sum_sq)).min(1.0))
}

/// Relative cost of one schedule at depth `m` with `c` colors.
pub fn schedule_complexity(m: usize, c: usize) -> f64 {
    (m as f64).powi(4) * (c as f64 - 1.0)
}

/// Per-slot complexity of fixed-depth scheduling: `m^4 (c - 1) / m`.
pub fn complexity_estimate(m: usize, c: usize) -> f64 {
    schedule_complexity(m, c) / m as f64
}

/// Average per-slot complexity of adaptive scheduling with free-slot
/// assignment.
///
/// `freqs[i - 1]` is the fraction of slots scheduled with `i` slots per
/// schedule, for `i = 1..=m_fsa + 1`; the last entry is the free-slot share.
/// A schedule that settled at depth `i` paid for every try `1..=i`; a
/// free-slot schedule paid for `1..=m_fsa + 1` and spreads over `m_fsa`
/// generations. Frequencies are renormalized to sum to one.
pub fn complexity_fsa(freqs: &[f64], m_fsa: usize, c: usize) -> Result<f64> {
    if m_fsa == 0 {
        return Err(Error::Config("m_fsa must be at least 1".into()));
    }
    if freqs.len() > m_fsa + 1 {
        return Err(Error::Config(format!(
            "{} frequencies given for m_fsa = {m_fsa}",
            freqs.len()
        )));
    }
    if freqs.iter().any(|&f| !(f >= 0.0)) {
        return Err(Error::Config(format!("frequencies must be non-negative: {freqs:?}")));
    }
    let total: f64 = freqs.iter().sum();
    if total > 1.0 + FREQ_TOLERANCE || total == 0.0 {
        return Err(Error::Config(format!("frequencies sum to {total}, expected (0, 1]")));
    }
    let tries = |depth: usize| (1..=depth).map(|j| schedule_complexity(j, c)).sum::<f64>();
    Ok(freqs
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let f = f / total;
            let depth = k + 1;
            if depth <= m_fsa {
                f / depth as f64 * tries(depth)
            } else {
                f / m_fsa as f64 * tries(depth)
            }
        })
        .sum())
}

/// Complexity saved relative to fixed-depth scheduling at `m_fsa`.
pub fn complexity_gain(alpha_fsa: f64, m_fsa: usize, c: usize) -> f64 {
    1.0 - alpha_fsa / complexity_estimate(m_fsa, c)
}

/// First-order estimate of the free-slot share: `p_{r_th, M} / m_fsa`.
pub fn estimated_fsa_frequency(outage: f64, m_fsa: usize) -> f64 {
    outage / m_fsa as f64
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CampaignStats {
    /// Minimum per-user rate of every slot.
    pub min_rate_samples: Vec<f64>,
    /// Jain index over the served users of every slot.
    pub jain_samples: Vec<f64>,
    pub n_sched: usize,
}

impl CampaignStats {
    pub fn push_allocation(&mut self, alloc: &Allocation) -> Result<()> {
        for path in &alloc.paths {
            self.min_rate_samples.push(path.min_rate);
            self.jain_samples.push(jain_index(&path.active_rates())?);
        }
        self.n_sched += 1;
        Ok(())
    }

    pub fn from_allocations<'a>(allocs: impl IntoIterator<Item = &'a Allocation>) -> Result<Self> {
        let mut stats = Self::default();
        for a in allocs {
            stats.push_allocation(a)?;
        }
        Ok(stats)
    }

    pub fn outage_curve(&self, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        cdf_curve(&self.min_rate_samples, grid)
    }

    pub fn outage(&self, r: f64) -> Result<f64> {
        outage_probability(&self.min_rate_samples, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outage_edges() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(outage_probability(&s, 0.5).unwrap(), 0.0);
        assert_eq!(outage_probability(&s, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(outage_probability(&s, 2.0).unwrap(), 2.0 / 3.0);
        assert!(outage_probability(&[], 1.0).is_err());
    }

    #[test]
    fn cdf_is_monotone() {
        let s = [0.3, 2.2, 1.1, 1.1, 4.0];
        let c = cdf_curve(&s, &grid(0.0, 5.0, 0.1)).unwrap();
        assert!(c.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(c.last().unwrap().1, 1.0);
        assert_eq!(c[0].1, 0.0);
    }

    #[test]
    fn quantile_picks_order_statistic() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quantile(&s, 0.1).unwrap(), 1.0);
        assert_eq!(quantile(&s, 0.5).unwrap(), 5.0);
        assert_eq!(quantile(&s, 1.0).unwrap(), 10.0);
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&[2.0, 2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(jain_index(&[0.0, 3.0, 0.0, 0.0]).unwrap(), 0.25);
        assert!((jain_index(&[1.0, 2.0, 3.0]).unwrap() - 6.0 / 7.0).abs() < 1e-15);
        assert!(jain_index(&[0.0, 0.0]).is_err());
        assert!(jain_index(&[-1.0, 1.0]).is_err());
    }

    #[test]
    fn fixed_depth_complexity() {
        assert_eq!(complexity_estimate(2, 3), 16.0);
        for m in 1..=10 {
            assert_eq!(complexity_estimate(m, 3), 2.0 * (m as f64).powi(3));
        }
    }

    #[test]
    fn fsa_complexity_without_escalation() {
        assert_eq!(complexity_fsa(&[1.0, 0.0, 0.0], 2, 3).unwrap(), 2.0);
        assert_eq!(complexity_fsa(&[1.0], 4, 3).unwrap(), 2.0);
    }

    #[test]
    fn fsa_complexity_rejects_bad_input() {
        assert!(complexity_fsa(&[0.7, 0.7], 2, 3).is_err());
        assert!(complexity_fsa(&[0.5, 0.2, 0.2, 0.1], 2, 3).is_err());
        assert!(complexity_fsa(&[1.0], 0, 3).is_err());
    }
}
