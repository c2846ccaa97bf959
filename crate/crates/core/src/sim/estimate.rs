use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PreparedExperiment};
use super::stats::{chi_square_test, exponential_ks, ChiSquareResult, KsResult};
use super::trial::TrialRecord;
use crate::error::{Error, Result};
use crate::evt::{polya_aeppli_pmf, ExtremalModel};
use crate::region::{monte_carlo_measure, RegionSpec};

/// Runs declustering of one trial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster_sizes: Vec<u64>,
    /// Cluster start times in rescaled units.
    pub cluster_times: Vec<f64>,
    /// Differences of consecutive cluster times within the trial.
    pub inter_cluster_gaps: Vec<f64>,
    /// Length of the trial in rescaled units, `n / v_n`.
    pub window: f64,
}

impl ClusterSummary {
    pub fn exceedances(&self) -> u64 {
        self.cluster_sizes.iter().sum()
    }

    pub fn clusters(&self) -> usize {
        self.cluster_sizes.len()
    }
}

/// Groups exceedances whose raw times differ by at most `run_gap` into one
/// cluster, and rescales times by `v_n`.
pub fn decluster(record: &TrialRecord, run_gap: u64, v_n: f64) -> Result<ClusterSummary> {
    if !(v_n > 0.0 && v_n.is_finite()) {
        return Err(Error::InvalidConfig(format!("Kac factor must be positive, got {v_n}")));
    }
    let mut summary = ClusterSummary {
        window: record.n as f64 / v_n,
        ..Default::default()
    };
    let mut last: Option<u64> = None;
    for &t in &record.exceedance_times {
        match last {
            Some(prev) if t - prev <= run_gap => {
                *summary.cluster_sizes.last_mut().expect("open cluster") += 1;
            }
            _ => {
                summary.cluster_sizes.push(1);
                summary.cluster_times.push(t as f64 / v_n);
            }
        }
        last = Some(t);
    }
    summary.inter_cluster_gaps = summary
        .cluster_times
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    Ok(summary)
}

pub fn decluster_all(records: &[TrialRecord], run_gap: u64, v_n: f64) -> Result<Vec<ClusterSummary>> {
    records.iter().map(|r| decluster(r, run_gap, v_n)).collect()
}

/// Pooled clusters over exceedances.
pub fn empirical_extremal_index(summaries: &[ClusterSummary]) -> Result<f64> {
    let exceedances: u64 = summaries.iter().map(|s| s.exceedances()).sum();
    if exceedances == 0 {
        return Err(Error::NoExceedances);
    }
    let clusters: usize = summaries.iter().map(|s| s.clusters()).sum();
    Ok(clusters as f64 / exceedances as f64)
}

/// Counts of cluster sizes, `size -> clusters`.
pub fn cluster_size_counts(summaries: &[ClusterSummary]) -> BTreeMap<u64, u64> {
    let mut counts = BTreeMap::new();
    for size in summaries.iter().flat_map(|s| &s.cluster_sizes) {
        *counts.entry(*size).or_insert(0) += 1;
    }
    counts
}

/// Relative frequency of each cluster size.
pub fn empirical_multiplicity(summaries: &[ClusterSummary]) -> Result<BTreeMap<u64, f64>> {
    let counts = cluster_size_counts(summaries);
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::NoExceedances);
    }
    Ok(counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total as f64))
        .collect())
}

/// Inter-cluster gaps with the trial windows laid end to end.
///
/// Each trial observes an independent window of length `n / v_n`, so the
/// concatenation is one long realization and its gaps are not truncated by
/// the window length.
pub fn pooled_gaps(summaries: &[ClusterSummary]) -> Vec<f64> {
    let mut gaps = Vec::new();
    let mut offset = 0.0;
    let mut last: Option<f64> = None;
    for s in summaries {
        for &t in &s.cluster_times {
            let at = offset + t;
            if let Some(prev) = last {
                gaps.push(at - prev);
            }
            last = Some(at);
        }
        offset += s.window;
    }
    gaps
}

/// KS test of the pooled rescaled inter-cluster gaps against
/// Exponential(rate `theta`).
pub fn gap_ks_statistic(summaries: &[ClusterSummary], theta: f64) -> Result<KsResult> {
    exponential_ks(&pooled_gaps(summaries), theta)
}

/// Chi-square test of cluster sizes against `model`, sizes `1..=kmax`
/// plus a pooled tail.
pub fn multiplicity_chi_square(
    summaries: &[ClusterSummary],
    model: &ExtremalModel,
    kmax: u32,
) -> Result<ChiSquareResult> {
    let counts = cluster_size_counts(summaries);
    let mut observed = vec![0u64; kmax as usize + 1];
    for (&size, &c) in &counts {
        let bin = (size.min(kmax as u64 + 1) - 1) as usize;
        observed[bin] += c;
    }
    let mut probs = model.multiplicity_table(kmax);
    probs.push(model.survival(kmax));
    chi_square_test(&observed, &probs, 5.0)
}

/// Fraction of trials whose block maximum is at most `u_n`, with its
/// binomial standard error.
pub fn block_maxima_cdf(records: &[TrialRecord], u_n: f64) -> (f64, f64) {
    let k = records.iter().filter(|r| r.block_maximum <= u_n).count() as f64;
    let n = records.len() as f64;
    let p = k / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

pub fn estimate_block_maxima_cdf(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    if cfg.trials < 100 {
        return Err(Error::InvalidConfig(format!(
            "at least 100 trials required, got {}",
            cfg.trials
        )));
    }
    let exp = cfg.prepare()?;
    Ok(block_maxima_cdf(&exp.run(), exp.u_n))
}

/// Exceedance counts in consecutive rescaled windows `[k t, (k+1) t)`,
/// as many as fit in each trial.
pub fn repp_counts(records: &[TrialRecord], v_n: f64, t: f64) -> Result<Vec<u64>> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidConfig(format!("window length must be positive, got {t}")));
    }
    let mut counts = Vec::new();
    for r in records {
        let per_trial = (r.n as f64 / v_n / t + 1e-9).floor() as usize;
        let start = counts.len();
        counts.resize(start + per_trial, 0u64);
        for &time in &r.exceedance_times {
            let k = (time as f64 / v_n / t).floor() as usize;
            if k < per_trial {
                counts[start + k] += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "trials are shorter than one window of length {t}"
        )));
    }
    Ok(counts)
}

/// Chi-square test of window counts against the Pólya-Aeppli law.
pub fn repp_chi_square(counts: &[u64], theta: f64, t: f64) -> Result<ChiSquareResult> {
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as usize;
    let mut observed = vec![0u64; top + 2];
    for &c in counts {
        observed[c as usize] += 1;
    }
    let mut probs: Vec<f64> = (0..=top).map(|k| polya_aeppli_pmf(theta, t, k as u64)).collect();
    probs.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
    chi_square_test(&observed, &probs, 5.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Extremal index as the measure ratio of the escape set to the ball at the
/// threshold radius. Non-periodic centers give exactly one.
pub fn ei_measure_ratio_estimate(
    exp: &PreparedExperiment,
    samples: u64,
    seed: u64,
) -> Result<RatioEstimate> {
    if exp.q == 0 {
        return Ok(RatioEstimate {
            value: 1.0,
            std_error: 0.0,
        });
    }
    let metric = exp.config.metric;
    let escape = RegionSpec::escape_set(exp.zeta, exp.radius, metric, exp.q)?;
    let ball = RegionSpec::ball(exp.zeta, exp.radius, metric)?;
    let a = monte_carlo_measure(&escape, &exp.automorphism, samples, seed)?;
    let u = monte_carlo_measure(&ball, &exp.automorphism, samples, seed.wrapping_add(1))?;
    Ok(RatioEstimate {
        value: a.estimate / u.estimate,
        std_error: a.std_error / u.estimate,
    })
}

pub fn ei_measure_ratio(cfg: &ExperimentConfig, samples: u64, seed: u64) -> Result<f64> {
    Ok(ei_measure_ratio_estimate(&cfg.prepare()?, samples, seed)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::MetricKind;

    fn record(times: &[u64], n: u64) -> TrialRecord {
        TrialRecord {
            trial_id: 0,
            n,
            exceedance_times: times.to_vec(),
            exceedance_values: vec![10.0; times.len()],
            block_maximum: if times.is_empty() { 1.0 } else { 10.0 },
        }
    }

    #[test]
    fn declustering_examples() {
        let s = decluster(&record(&[5, 6, 7, 500], 1000), 2, 10.0).unwrap();
        assert_eq!(s.cluster_sizes, vec![3, 1]);
        assert_eq!(s.cluster_times, vec![0.5, 50.0]);
        assert_eq!(s.inter_cluster_gaps, vec![49.5]);
        assert_eq!(s.window, 100.0);

        let empty = decluster(&record(&[], 1000), 2, 10.0).unwrap();
        assert!(empty.cluster_sizes.is_empty() && empty.inter_cluster_gaps.is_empty());

        let all = decluster(&record(&[0, 100, 900, 999], 1000), 1000, 10.0).unwrap();
        assert_eq!(all.cluster_sizes, vec![4]);
        assert!(decluster(&record(&[1], 10), 1, 0.0).is_err());
    }

    #[test]
    fn index_and_histogram() {
        let singles = vec![decluster(&record(&[1, 10, 20], 100), 2, 1.0).unwrap()];
        assert_eq!(empirical_extremal_index(&singles).unwrap(), 1.0);
        let s = vec![
            decluster(&record(&[1, 2, 10], 100), 2, 1.0).unwrap(),
            decluster(&record(&[5], 100), 2, 1.0).unwrap(),
        ];
        assert_eq!(empirical_extremal_index(&s).unwrap(), 0.75);
        let h = empirical_multiplicity(&s).unwrap();
        assert_eq!(h[&1], 2.0 / 3.0);
        assert_eq!(h[&2], 1.0 / 3.0);
        let none = vec![ClusterSummary::default()];
        assert_eq!(empirical_extremal_index(&none), Err(Error::NoExceedances));
        assert_eq!(empirical_multiplicity(&none), Err(Error::NoExceedances));
    }

    #[test]
    fn gaps_cross_trial_boundaries() {
        let s = vec![
            decluster(&record(&[10, 80], 100), 1, 100.0).unwrap(),
            decluster(&record(&[], 100), 1, 100.0).unwrap(),
            decluster(&record(&[30], 100), 1, 100.0).unwrap(),
        ];
        let g = pooled_gaps(&s);
        assert_eq!(g.len(), 2);
        assert!((g[0] - 0.7).abs() < 1e-12);
        assert!((g[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn repp_windows() {
        let r = record(&[0, 1, 49, 50, 99, 100], 100);
        assert_eq!(repp_counts(std::slice::from_ref(&r), 25.0, 2.0).unwrap(), vec![3, 2]);
        assert_eq!(repp_counts(std::slice::from_ref(&r), 25.0, 4.0).unwrap(), vec![5]);
        assert!(repp_counts(&[r], 25.0, 5.0).is_err());
    }

    #[test]
    fn repp_chi_square_accepts_exact_frequencies() {
        let (theta, t) = (0.6, 2.0);
        let mut counts = Vec::new();
        for k in 0..60u64 {
            let m = (polya_aeppli_pmf(theta, t, k) * 100_000.0).round() as usize;
            counts.extend(std::iter::repeat_n(k, m));
        }
        let r = repp_chi_square(&counts, theta, t).unwrap();
        assert!(r.p_value > 0.99, "{r:?}");
        assert!(repp_chi_square(&counts, 0.9, t).unwrap().p_value < 1e-6);
    }

    #[test]
    fn measure_ratio_paths() {
        let cfg = ExperimentConfig::default();
        let e = ei_measure_ratio_estimate(&cfg.prepare().unwrap(), 200_000, 3).unwrap();
        assert!((e.value - 0.5354).abs() < 4.0 * e.std_error + 1e-4, "{e:?}");
        let adapted = ExperimentConfig {
            metric: MetricKind::Adapted,
            ..Default::default()
        };
        let v = ei_measure_ratio(&adapted, 200_000, 3).unwrap();
        assert!((v - 0.618).abs() < 0.005);
        let nonperiodic = ExperimentConfig {
            zeta: "0.3,0.7".parse().unwrap(),
            ..Default::default()
        };
        assert_eq!(ei_measure_ratio(&nonperiodic, 1000, 1).unwrap(), 1.0);
    }

    #[test]
    fn small_tau_rarely_exceeds() {
        let cfg = ExperimentConfig {
            tau: 0.01,
            n: 10_000,
            trials: 400,
            ..Default::default()
        };
        let (p, _) = estimate_block_maxima_cdf(&cfg).unwrap();
        assert!(p >= 0.98, "{p}");
        assert!(estimate_block_maxima_cdf(&ExperimentConfig { trials: 99, ..cfg }).is_err());
    }

    #[test]
    fn mean_exceedance_count_is_tau() {
        let cfg = ExperimentConfig {
            zeta: "0.41421356237309515,0.7320508075688772".parse().unwrap(),
            n: 20_000,
            trials: 2_000,
            ..Default::default()
        };
        let records = run_all(&cfg);
        let total: usize = records.iter().map(|r| r.exceedances()).sum();
        let mean = total as f64 / records.len() as f64;
        // Poisson counts: sd of the mean is sqrt(tau / trials).
        let sd = (cfg.tau / cfg.trials as f64).sqrt();
        assert!((mean - cfg.tau).abs() < 3.0 * sd, "{mean}");
    }

    fn run_all(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
        cfg.prepare().unwrap().run()
    }
}
