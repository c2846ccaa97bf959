use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::LocalFrame;
use super::measure::{ball_measure, chunk_rng, sample_in_ball, CHUNK, MIN_SAMPLES};
use super::spec::in_escape_set;
use crate::error::{Error, Result};
use crate::evt::{wrap_time_g, ThresholdSchedule};
use crate::torus::{Direction, MetricKind, RationalPoint, ToralAutomorphism};

/// Outcome of a separation scan over sampled escape-set points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub radius: f64,
    pub j_max: u64,
    /// Escape-set points examined.
    pub points: u64,
    /// Points `z` with `T^{-j} z` back in the escape set for some `j <= j_max`.
    pub returns: u64,
    /// Ball samples drawn to find the escape-set points.
    pub draws: u64,
}

impl SeparationReport {
    pub fn separated(&self) -> bool {
        self.returns == 0
    }
}

/// Membership flags in the ball for the window `T^{-j_max} z, ..., T^q z`,
/// from which escape-set membership of every backward image follows.
fn returns_to_escape_set(
    frame: &LocalFrame,
    z: (u128, u128),
    radius: f64,
    q: u32,
    j_max: u64,
    flags: &mut Vec<bool>,
) -> bool {
    // flags[i] is the ball flag of T^{i - j_max} z for i = 0..=j_max + q.
    flags.clear();
    flags.resize(j_max as usize + q as usize + 1, false);
    let origin = j_max as usize;
    let mut p = z;
    for i in 0..=q as usize {
        flags[origin + i] = frame.in_ball(p, radius);
        p = frame.step(p, Direction::Forward);
    }
    let mut p = z;
    for j in 1..=j_max as usize {
        p = frame.step(p, Direction::Backward);
        flags[origin - j] = frame.in_ball(p, radius);
    }
    (1..=j_max as usize).any(|j| {
        let at = origin - j;
        flags[at] && (1..=q as usize).all(|i| !flags[at + i])
    })
}

/// Scans sampled escape-set points for returns under `T^{-j}`,
/// `j = 1..=j_max`. Points are found by rejection from uniform ball samples.
#[allow(clippy::too_many_arguments)]
pub fn separation_scan(
    t: &ToralAutomorphism,
    zeta: RationalPoint,
    q: u32,
    radius: f64,
    metric: MetricKind,
    j_max: u64,
    samples: u64,
    seed: u64,
) -> Result<SeparationReport> {
    if q == 0 {
        return Err(Error::InvalidRegion("separation needs a period q >= 1".into()));
    }
    if !(radius > 0.0 && radius < crate::evt::MAX_RADIUS) {
        return Err(Error::RadiusTooLarge(radius));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SAMPLES,
            got: samples,
        });
    }
    let frame = LocalFrame::new(zeta, t, metric)?;
    // Escape sets are a fixed fraction of the ball; a hard draw cap guards
    // against a degenerate center.
    let draw_cap = CHUNK * 1000;
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk: Vec<(u64, u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            let target = CHUNK.min(samples - chunk * CHUNK);
            let mut flags = Vec::new();
            let (mut found, mut returns, mut draws) = (0u64, 0u64, 0u64);
            while found < target && draws < draw_cap {
                draws += 1;
                let (dx, dy) = sample_in_ball(&mut rng, metric, radius, t);
                let z = frame.offset(dx, dy);
                if !in_escape_set(&frame, z, radius, q) {
                    continue;
                }
                found += 1;
                if returns_to_escape_set(&frame, z, radius, q, j_max, &mut flags) {
                    returns += 1;
                }
            }
            (found, returns, draws)
        })
        .collect();
    let (points, returns, draws) = per_chunk
        .iter()
        .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    Ok(SeparationReport {
        radius,
        j_max,
        points,
        returns,
        draws,
    })
}

/// Euclidean separation check at the threshold radius for `(n, tau)`:
/// true when no sampled escape-set point returns to the escape set under
/// `T^{-j}`, `j = 1..=q g(n)`.
pub fn separation_check(
    t: &ToralAutomorphism,
    zeta: RationalPoint,
    q: u32,
    n: u64,
    tau: f64,
    samples: u64,
    seed: u64,
) -> Result<bool> {
    let sched = ThresholdSchedule::for_automorphism(tau, MetricKind::Euclidean, t)?;
    let radius = sched.radius(n)?;
    let j_max = q as u64 * wrap_time_g(n, t.lambda_abs(), q, tau);
    Ok(separation_scan(t, zeta, q, radius, MetricKind::Euclidean, j_max, samples, seed)?.separated())
}

/// Monte Carlo estimate of `n sum_{j=1}^{j_max} m(A ∩ T^{-j} A)` where `A`
/// is the escape set (the ball itself when `q == 0`) at the threshold of
/// `sched`.
#[allow(clippy::too_many_arguments)]
pub fn dprime_sum_diagnostic(
    t: &ToralAutomorphism,
    zeta: RationalPoint,
    q: u32,
    n: u64,
    j_max: u64,
    sched: &ThresholdSchedule,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    let window = (n as f64).ln().powi(5);
    if j_max == 0 || j_max as f64 > window {
        return Err(Error::InvalidConfig(format!(
            "j_max must lie in 1..=(log n)^5 = {window:.1}, got {j_max}"
        )));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SAMPLES,
            got: samples,
        });
    }
    let radius = sched.radius(n)?;
    let metric = sched.metric();
    let frame = LocalFrame::new(zeta, t, metric)?;
    let chunks = samples.div_ceil(CHUNK);
    let horizon = j_max as usize + q as usize + 1;
    let pairs: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut flags = vec![false; horizon];
            let mut pairs = 0u64;
            for _ in 0..count {
                let (dx, dy) = sample_in_ball(&mut rng, metric, radius, t);
                let mut p = frame.offset(dx, dy);
                for f in flags.iter_mut() {
                    *f = frame.in_ball(p, radius);
                    p = frame.step(p, Direction::Forward);
                }
                let in_a = |i: usize| flags[i] && (1..=q as usize).all(|k| !flags[i + k]);
                if !in_a(0) {
                    continue;
                }
                pairs += (1..=j_max as usize).filter(|&j| in_a(j)).count() as u64;
            }
            pairs
        })
        .sum();
    let area = ball_measure(metric, radius, t);
    Ok(n as f64 * area * pairs as f64 / samples as f64)
}
