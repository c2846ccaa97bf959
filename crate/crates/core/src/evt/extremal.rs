//! Extremal index, escape and strip areas, and the cluster-size law.
//!
//! In local coordinates `(x, y)` along the unstable and stable directions of
//! a fixed point of `T^q`, the ball is `x^2 + y^2 < s^2` and its preimage
//! under `T^{kq}` is the ellipse `mu^{2k} x^2 + mu^{-2k} y^2 < s^2` with
//! `mu = |lambda|^q`. The nested sets `U^(k)` are ball-ellipse intersections
//! of measure `4 s^2 atan(mu^{-k})`, and every closed form below is a
//! difference of those.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::torus::MetricKind;

/// `arcsin(x / sqrt(1 + x^2)) - arcsin(1 / sqrt(1 + x^2))` for `x >= 1`,
/// arranged so that huge `x` does not overflow.
pub fn escape_gap(x: f64) -> f64 {
    let inv = 1.0 / x;
    let norm = (1.0 + inv * inv).sqrt();
    (1.0 / norm).asin() - (inv / norm).asin()
}

fn mu(lambda_abs: f64, q: u32) -> f64 {
    lambda_abs.powi(q as i32)
}

/// Extremal index: 1 for non-periodic centers (`q == 0`), otherwise the
/// Euclidean arcsine formula or `1 - |lambda|^{-q}` for the adapted metric.
pub fn extremal_index(lambda_abs: f64, q: u32, metric: MetricKind) -> f64 {
    if q == 0 {
        return 1.0;
    }
    match metric {
        MetricKind::Euclidean => 2.0 / PI * escape_gap(mu(lambda_abs, q)),
        MetricKind::Adapted => 1.0 - mu(lambda_abs, q).recip(),
    }
}

/// Measure of the escape set `A^(q)`: ball points leaving after `q` steps.
pub fn area_a_q(s: f64, lambda_abs: f64, q: u32) -> f64 {
    2.0 * s * s * escape_gap(mu(lambda_abs, q))
}

/// Measure of `U^(kappa)` (points staying `kappa` returns) in the Euclidean metric.
pub fn nested_area(s: f64, lambda_abs: f64, q: u32, kappa: u32) -> f64 {
    4.0 * s * s * mu(lambda_abs, q).powi(-(kappa as i32)).atan()
}

/// The bound `|lambda|^{-kappa q} s^2` on `m(U^(kappa))` as usually stated.
///
/// It does not hold: the bounding rectangle has half-sides `s` and
/// `|lambda|^{-kappa q} s`. See [`nested_area_box_bound`].
pub fn nested_area_stated_bound(s: f64, lambda_abs: f64, q: u32, kappa: u32) -> f64 {
    mu(lambda_abs, q).powi(-(kappa as i32)) * s * s
}

/// Area `4 |lambda|^{-kappa q} s^2` of the eigen-aligned rectangle containing `U^(kappa)`.
pub fn nested_area_box_bound(s: f64, lambda_abs: f64, q: u32, kappa: u32) -> f64 {
    4.0 * nested_area_stated_bound(s, lambda_abs, q, kappa)
}

/// Measure of the strip `Q^kappa = U^(kappa) \ U^(kappa+1)`.
///
/// `kappa == 0` is the escape set. For `kappa >= 1` the two arcsine
/// differences at `kappa + 1` and `kappa` are combined into arctangents,
/// which keeps the result positive and accurate for large `kappa`.
pub fn strip_area_q(s: f64, lambda_abs: f64, q: u32, kappa: u32) -> f64 {
    if kappa == 0 {
        return area_a_q(s, lambda_abs, q);
    }
    let m = mu(lambda_abs, q);
    let inner = m.powi(-(kappa as i32)).atan();
    let outer = m.powi(-(kappa as i32 + 1)).atan();
    4.0 * s * s * (inner - outer)
}

/// `atan(mu^{-k})`, with `k = 0` exact.
fn nested_angle(m: f64, k: u32) -> f64 {
    if k == 0 {
        FRAC_PI_4
    } else {
        m.powi(-(k as i32)).atan()
    }
}

/// Cluster-size probability `pi(kappa)` for `kappa >= 1`.
///
/// Euclidean: second difference of the nested areas over the escape area,
/// algebraically identical to [`multiplicity_pi_arcsin`]. Adapted:
/// geometric with parameter `1 - |lambda|^{-q}`. A non-periodic center
/// (`q == 0`) puts all mass at one.
pub fn multiplicity_pi(lambda_abs: f64, q: u32, kappa: u32, metric: MetricKind) -> f64 {
    if kappa == 0 {
        return 0.0;
    }
    if q == 0 {
        return if kappa == 1 { 1.0 } else { 0.0 };
    }
    let m = mu(lambda_abs, q);
    match metric {
        MetricKind::Euclidean => {
            let a = |k| nested_angle(m, k);
            let second = (a(kappa - 1) - a(kappa)) - (a(kappa) - a(kappa + 1));
            (second / (a(0) - a(1))).max(0.0)
        }
        MetricKind::Adapted => {
            let theta = 1.0 - m.recip();
            theta * (1.0 - theta).powi(kappa as i32 - 1)
        }
    }
}

/// The Euclidean cluster-size formula as a sum of arcsine differences.
/// Loses relative precision once `mu^kappa` exceeds about `1e7`; use
/// [`multiplicity_pi`] for evaluation.
pub fn multiplicity_pi_arcsin(lambda_abs: f64, q: u32, kappa: u32) -> f64 {
    let m = mu(lambda_abs, q);
    let hi = |k: i32| {
        let x = m.powi(k);
        (x / (1.0 + x * x).sqrt()).asin()
    };
    let lo = |k: i32| {
        let x = m.powi(k);
        (1.0 / (1.0 + x * x).sqrt()).asin()
    };
    let k = kappa as i32;
    let numerator = (lo(k - 1) - hi(k - 1)) + (lo(k + 1) - hi(k + 1));
    let denominator = hi(1) - lo(1);
    numerator / denominator + 2.0 * (hi(k) - lo(k)) / denominator
}

/// Number of steps before preimages of the ball start wrapping the torus.
///
/// `q == 0` uses `(log n - log pi) / (2 log|lambda|)`; `q >= 1` the
/// escape-set diameter version. Clamped at zero.
pub fn wrap_time_g(n: u64, lambda_abs: f64, q: u32, tau: f64) -> u64 {
    let ln_n = (n as f64).ln();
    let ln_l = lambda_abs.ln();
    let value = if q == 0 {
        (ln_n - PI.ln()) / (2.0 * ln_l)
    } else {
        let m = mu(lambda_abs, q);
        let qf = q as f64;
        (ln_n + (m * m + 1.0).ln() - 2.0 * (2.0 * m * (tau / PI).sqrt()).ln())
            / (2.0 * qf * ln_l)
    };
    if value.is_finite() && value > 0.0 {
        value.floor() as u64
    } else {
        0
    }
}

/// Limit law of the exceedance process for one center: extremal index and
/// cluster-size distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalModel {
    lambda_abs: f64,
    q: u32,
    metric: MetricKind,
    theta: f64,
}

impl ExtremalModel {
    pub fn new(lambda_abs: f64, q: u32, metric: MetricKind) -> Self {
        Self {
            lambda_abs,
            q,
            metric,
            theta: extremal_index(lambda_abs, q, metric),
        }
    }

    pub fn lambda_abs(&self) -> f64 {
        self.lambda_abs
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_periodic(&self) -> bool {
        self.q > 0
    }

    pub fn multiplicity(&self, kappa: u32) -> f64 {
        multiplicity_pi(self.lambda_abs, self.q, kappa, self.metric)
    }

    /// Successive ratio the cluster-size law approaches: `|lambda|^{-q}`.
    pub fn tail_ratio(&self) -> f64 {
        if self.q == 0 {
            0.0
        } else {
            mu(self.lambda_abs, self.q).recip()
        }
    }

    /// `[pi(1), ..., pi(kmax)]`.
    pub fn multiplicity_table(&self, kmax: u32) -> Vec<f64> {
        (1..=kmax).map(|k| self.multiplicity(k)).collect()
    }

    /// `P(cluster size > k)`.
    pub fn survival(&self, k: u32) -> f64 {
        if self.q == 0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        let m = mu(self.lambda_abs, self.q);
        match self.metric {
            // m(Q^k) / m(Q^0)
            MetricKind::Euclidean => {
                let a = |j| nested_angle(m, j);
                (a(k) - a(k + 1)) / (a(0) - a(1))
            }
            MetricKind::Adapted => m.powi(-(k as i32)),
        }
    }

    /// Total mass of the cluster-size law: terms are summed until they fall
    /// below `1e-18`, and the rest is closed with a geometric tail at the
    /// asymptotic ratio.
    pub fn total_mass(&self) -> f64 {
        if self.q == 0 {
            return 1.0;
        }
        let r = self.tail_ratio();
        let mut sum = 0.0;
        let mut last = 0.0;
        for k in 1..=10_000u32 {
            last = self.multiplicity(k);
            sum += last;
            if last < 1e-18 {
                break;
            }
        }
        sum + last * r / (1.0 - r)
    }

    /// Mean cluster size, `1 / theta`.
    pub fn mean_cluster_size(&self) -> f64 {
        1.0 / self.theta
    }
}
