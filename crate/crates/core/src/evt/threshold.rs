use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{MetricKind, ToralAutomorphism};

/// Radii at or above this are rejected: the ball would no longer be a
/// disk (or square) on the torus.
pub const MAX_RADIUS: f64 = 0.25;

/// Threshold sequence `u_n` chosen so that `n * m(X_0 > u_n) = tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    tau: f64,
    metric: MetricKind,
    basis_det: f64,
}

impl ThresholdSchedule {
    pub fn new(tau: f64, metric: MetricKind, basis_det: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {tau}")));
        }
        if !(basis_det > 0.0 && basis_det <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "basis determinant must lie in (0, 1], got {basis_det}"
            )));
        }
        Ok(Self { tau, metric, basis_det })
    }

    pub fn for_automorphism(tau: f64, metric: MetricKind, t: &ToralAutomorphism) -> Result<Self> {
        Self::new(tau, metric, t.basis_det())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn basis_det(&self) -> f64 {
        self.basis_det
    }

    /// Lebesgue measure of a ball of radius `r` (disk or eigen-aligned square).
    pub fn ball_area(&self, r: f64) -> f64 {
        match self.metric {
            MetricKind::Euclidean => PI * r * r,
            MetricKind::Adapted => 4.0 * r * r * self.basis_det,
        }
    }

    /// `u_n` without the radius check.
    pub fn level(&self, n: u64) -> f64 {
        let n = n as f64;
        let area_factor = match self.metric {
            MetricKind::Euclidean => PI,
            MetricKind::Adapted => 4.0 * self.basis_det,
        };
        0.5 * (area_factor * n).ln() - 0.5 * self.tau.ln()
    }

    pub fn u_n(&self, n: u64) -> Result<f64> {
        threshold_u_n(n, self)
    }

    /// Ball radius `e^{-u_n}`.
    pub fn radius(&self, n: u64) -> Result<f64> {
        let u = self.u_n(n)?;
        Ok((-u).exp())
    }

    pub fn kac(&self, n: u64) -> f64 {
        kac_rescale(n, self)
    }
}

pub fn threshold_u_n(n: u64, sched: &ThresholdSchedule) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let u = sched.level(n);
    let r = (-u).exp();
    if r >= MAX_RADIUS {
        return Err(Error::RadiusTooLarge(r));
    }
    Ok(u)
}

/// `sqrt(tau / (pi n))`, the Euclidean ball radius for `n` and `tau`.
pub fn radius_s_n(n: u64, tau: f64) -> f64 {
    (tau / (PI * n as f64)).sqrt()
}

/// Kac time-rescaling factor `1 / m(X_0 > u_n)`.
pub fn kac_rescale(n: u64, sched: &ThresholdSchedule) -> f64 {
    let r = (-sched.level(n)).exp();
    1.0 / sched.ball_area(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(tau: f64) -> ThresholdSchedule {
        ThresholdSchedule::new(tau, MetricKind::Euclidean, 1.0).unwrap()
    }

    #[test]
    fn euclidean_threshold_value() {
        // 0.5 * ln(1000 pi) evaluated independently.
        let expected = 0.5 * (1000.0f64.ln() + PI.ln());
        let u = threshold_u_n(1000, &euclid(1.0)).unwrap();
        assert!((u - expected).abs() < 1e-14);
        assert!((u - 4.026_242_6).abs() < 1e-6);
    }

    #[test]
    fn adapted_threshold_value() {
        let s = ThresholdSchedule::new(1.0, MetricKind::Adapted, 1.0).unwrap();
        let u = s.u_n(1000).unwrap();
        assert!((u - 0.5 * 4000.0f64.ln()).abs() < 1e-14);
        assert!((u - 4.147_025_0).abs() < 1e-6);
        assert!((1000.0 * 4.0 * (-2.0 * u).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radius_too_large_at_boundary() {
        assert!(matches!(
            threshold_u_n(1, &euclid(PI)),
            Err(Error::RadiusTooLarge(r)) if (r - 1.0).abs() < 1e-12
        ));
        assert!(ThresholdSchedule::new(0.0, MetricKind::Euclidean, 1.0).is_err());
    }

    #[test]
    fn u_n_strictly_increasing() {
        let s = euclid(1.0);
        let mut prev = f64::NEG_INFINITY;
        for n in (10..100_000).step_by(997) {
            let u = s.u_n(n).unwrap();
            assert!(u > prev);
            prev = u;
        }
    }

    #[test]
    fn radius_and_kac_identities() {
        assert!((radius_s_n(1000, 1.0) - 0.017_841_2).abs() < 1e-7);
        assert_eq!(euclid(2.0).kac(10_000).round(), 5000.0);
        // Deterministic pseudo-random (n, tau) pairs.
        let mut n = 17u64;
        let mut tau = 0.3;
        for _ in 0..20 {
            n = n * 7 + 13;
            tau = (tau * 3.7) % 4.0 + 0.05;
            let s = radius_s_n(n, tau);
            assert!((n as f64 * PI * s * s - tau).abs() < 1e-12 * tau.max(1.0));
            let sched = euclid(tau);
            if let Ok(r) = sched.radius(n) {
                assert!((r - s).abs() < 1e-12 * s);
            }
            let v = sched.kac(n);
            assert!((v / (n as f64 / tau) - 1.0).abs() < 1e-12);
            assert!((v * sched.ball_area((-sched.level(n)).exp()) - 1.0).abs() < 1e-12);
            let adapted = ThresholdSchedule::new(tau, MetricKind::Adapted, 0.8).unwrap();
            assert!((adapted.kac(n) / (n as f64 / tau) - 1.0).abs() < 1e-12);
        }
    }
}
