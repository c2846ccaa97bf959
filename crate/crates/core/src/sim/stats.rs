use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

pub const MIN_GAPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        // The alternating series converges slowly here; the value is 1 to
        // double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
/// asymptotic p-value (small-sample corrected argument).
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let root = n.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival((root + 0.12 + 0.11 / root) * d),
        samples: xs.len(),
    }
}

/// KS test of gaps against Exponential(rate `theta`).
pub fn exponential_ks(gaps: &[f64], theta: f64) -> Result<KsResult> {
    if gaps.len() < MIN_GAPS {
        return Err(Error::TooFewGaps(gaps.len()));
    }
    Ok(ks_test(gaps, |x| if x <= 0.0 { 0.0 } else { -(-theta * x).exp_m1() }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Observed and expected counts after pooling.
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
}

/// Pearson chi-square goodness of fit of `observed` counts against bin
/// probabilities `probs`. Bins with expected count below `min_expected` are
/// merged into their left neighbour, from the right.
pub fn chi_square_test(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::InvalidConfig(
            "observed counts and probabilities must have the same nonzero length".into(),
        ));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::NoExceedances);
    }
    let total = total as f64;
    let mut obs: Vec<f64> = Vec::new();
    let mut exp: Vec<f64> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs).rev() {
        o_acc += o as f64;
        e_acc += p * total;
        if e_acc >= min_expected {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match (obs.last_mut(), exp.last_mut()) {
            (Some(o), Some(e)) => {
                *o += o_acc;
                *e += e_acc;
            }
            _ => {
                obs.push(o_acc);
                exp.push(e_acc);
            }
        }
    }
    obs.reverse();
    exp.reverse();
    if obs.len() < 2 {
        return Err(Error::InvalidConfig("chi-square needs at least two pooled bins".into()));
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = obs.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        observed: obs,
        expected: exp,
    })
}
