use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::LocalFrame;
use super::spec::{contains_in_frame, RegionKind, RegionSpec};
use crate::error::{Error, Result};
use crate::evt::{area_a_q, nested_area, strip_area_q};
use crate::torus::{compute_period, MetricKind, ToralAutomorphism};

pub const MIN_SAMPLES: u64 = 1_000;

/// Samples per random stream. Fixed so that results do not depend on how
/// the chunks are spread over workers.
pub(crate) const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub samples: u64,
}

/// Lebesgue measure of the metric ball of radius `r`.
pub fn ball_measure(metric: MetricKind, r: f64, t: &ToralAutomorphism) -> f64 {
    match metric {
        MetricKind::Euclidean => PI * r * r,
        MetricKind::Adapted => 4.0 * r * r * t.basis_det(),
    }
}

/// Uniform displacement in the plane ball of radius `r`.
#[inline]
pub(crate) fn sample_in_ball<R: Rng>(
    rng: &mut R,
    metric: MetricKind,
    r: f64,
    t: &ToralAutomorphism,
) -> (f64, f64) {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    match metric {
        MetricKind::Euclidean => {
            let rho = r * u.sqrt();
            let (s, c) = (2.0 * PI * v).sin_cos();
            (rho * c, rho * s)
        }
        MetricKind::Adapted => t.from_eigen_coordinates(r * (2.0 * u - 1.0), r * (2.0 * v - 1.0)),
    }
}

pub(crate) fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// `|lambda|^{(kappa+1) q} r`, the largest extent of the relevant preimages.
pub fn local_reach(lambda_abs: f64, q: u32, kappa: u32, r: f64) -> f64 {
    lambda_abs.powf(((kappa + 1) * q) as f64) * r
}

fn check_local_range(region: &RegionSpec, t: &ToralAutomorphism) -> Result<()> {
    let kappa = match region.kind {
        RegionKind::Ball => return Ok(()),
        RegionKind::EscapeSet => 0,
        RegionKind::Nested | RegionKind::Strip => region.kappa,
    };
    let reach = local_reach(t.lambda_abs(), region.q, kappa, region.radius);
    if reach >= 0.5 {
        return Err(Error::OutOfLocalRange {
            kappa: region.kappa,
            reach,
        });
    }
    Ok(())
}

/// Monte Carlo measure of `region`: uniform samples over the bounding ball,
/// exact membership, scaled by the ball measure.
pub fn monte_carlo_measure(
    region: &RegionSpec,
    t: &ToralAutomorphism,
    samples: u64,
    seed: u64,
) -> Result<MeasureEstimate> {
    region.validate()?;
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SAMPLES,
            got: samples,
        });
    }
    check_local_range(region, t)?;
    let frame = LocalFrame::new(region.zeta, t, region.metric)?;
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut hits = 0u64;
            for _ in 0..count {
                let (dx, dy) = sample_in_ball(&mut rng, region.metric, region.radius, t);
                if contains_in_frame(region, &frame, frame.offset(dx, dy)) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let area = ball_measure(region.metric, region.radius, t);
    let p = hits as f64 / samples as f64;
    Ok(MeasureEstimate {
        estimate: area * p,
        std_error: area * (p * (1.0 - p) / samples as f64).sqrt(),
        hits,
        samples,
    })
}

/// Closed-form measure of `region`, when one is available: `q` must be the
/// prime period of the center, and the Euclidean forms need an orthonormal eigenbasis
/// (symmetric matrix).
pub fn closed_form_measure(region: &RegionSpec, t: &ToralAutomorphism) -> Option<f64> {
    let r = region.radius;
    let lam = t.lambda_abs();
    if region.kind == RegionKind::Ball {
        return Some(ball_measure(region.metric, r, t));
    }
    let period = compute_period(region.zeta, t, region.q as u64)?;
    if period != region.q as u64 {
        return None;
    }
    let q = region.q;
    let kappa = region.kappa;
    match region.metric {
        MetricKind::Euclidean => {
            if !t.is_symmetric() {
                return None;
            }
            Some(match region.kind {
                RegionKind::Ball => unreachable!(),
                RegionKind::EscapeSet => area_a_q(r, lam, q),
                RegionKind::Nested => nested_area(r, lam, q, kappa),
                RegionKind::Strip => strip_area_q(r, lam, q, kappa),
            })
        }
        MetricKind::Adapted => {
            let ball = ball_measure(MetricKind::Adapted, r, t);
            let shrink = lam.powi(q as i32).recip();
            Some(match region.kind {
                RegionKind::Ball => unreachable!(),
                RegionKind::EscapeSet => ball * (1.0 - shrink),
                RegionKind::Nested => ball * shrink.powi(kappa as i32),
                RegionKind::Strip => ball * shrink.powi(kappa as i32) * (1.0 - shrink),
            })
        }
    }
}
