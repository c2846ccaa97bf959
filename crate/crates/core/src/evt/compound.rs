use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::ExtremalModel;

/// Pólya-Aeppli probability `P(N[0,t) = k)` for a compound Poisson count
/// with cluster intensity `theta` and geometric(`theta`) cluster sizes.
pub fn polya_aeppli_pmf(theta: f64, t: f64, k: u64) -> f64 {
    let rate = theta * t;
    if k == 0 {
        return (-rate).exp();
    }
    if theta >= 1.0 {
        // Only j = k survives: Poisson(t).
        return (k as f64 * t.ln() - t - ln_gamma(k as f64 + 1.0)).exp();
    }
    let ln_theta = theta.ln();
    let ln_rest = (1.0 - theta).ln();
    let ln_rate = rate.ln();
    let kf = k as f64;
    let ln_fact_km1 = ln_gamma(kf);
    let mut sum = 0.0;
    for j in 1..=k {
        let jf = j as f64;
        let ln_binom = ln_fact_km1 - ln_gamma(jf) - ln_gamma(kf - jf + 1.0);
        let ln_term =
            jf * ln_theta + (kf - jf) * ln_rest + jf * ln_rate - ln_gamma(jf + 1.0) + ln_binom;
        sum += ln_term.exp();
    }
    (-rate).exp() * sum
}

/// Compound Poisson law with cluster intensity `theta` and a cluster-size
/// distribution given on `1..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonLaw {
    theta: f64,
    /// `multiplicity[k - 1] = pi(k)`.
    multiplicity: Vec<f64>,
}

impl CompoundPoissonLaw {
    pub fn new(theta: f64, multiplicity: Vec<f64>) -> Self {
        Self { theta, multiplicity }
    }

    /// Geometric cluster sizes, truncated where the remaining mass is below `1e-16`.
    pub fn geometric(theta: f64) -> Self {
        let mut pi = Vec::new();
        let mut p = theta;
        let mut left = 1.0;
        while left > 1e-16 && pi.len() < 100_000 {
            pi.push(p);
            left -= p;
            p *= 1.0 - theta;
        }
        Self::new(theta, pi)
    }

    pub fn from_model(model: &ExtremalModel, kmax: u32) -> Self {
        Self::new(model.theta(), model.multiplicity_table(kmax))
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn multiplicity(&self) -> &[f64] {
        &self.multiplicity
    }

    /// `[P(N = 0), ..., P(N = kmax)]` by Panjer's recursion.
    pub fn pmf_table(&self, t: f64, kmax: usize) -> Vec<f64> {
        let rate = self.theta * t;
        let mut p = Vec::with_capacity(kmax + 1);
        p.push((-rate).exp());
        for k in 1..=kmax {
            let upto = k.min(self.multiplicity.len());
            let acc: f64 = (1..=upto)
                .map(|j| j as f64 * self.multiplicity[j - 1] * p[k - j])
                .sum();
            p.push(rate / k as f64 * acc);
        }
        p
    }

    pub fn pmf(&self, t: f64, k: usize) -> f64 {
        self.pmf_table(t, k)[k]
    }

    /// `E N[0,t) = theta t E[cluster size]`.
    pub fn mean(&self, t: f64) -> f64 {
        let size: f64 = self
            .multiplicity
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum();
        self.theta * t * size
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::chi_square_test;
    use crate::torus::MetricKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Geometric, Poisson};

    fn sum_until_converged(theta: f64, t: f64) -> (f64, f64) {
        let mut total = 0.0;
        let mut mean = 0.0;
        for k in 0..10_000u64 {
            let p = polya_aeppli_pmf(theta, t, k);
            total += p;
            mean += k as f64 * p;
            if k > 20 && p < 1e-20 {
                break;
            }
        }
        (total, mean)
    }

    #[test]
    fn theta_one_is_poisson() {
        let t = 2.0f64;
        let mut fact = 1.0;
        for k in 0..=10u64 {
            if k > 0 {
                fact *= k as f64;
            }
            let poisson = (-t).exp() * t.powi(k as i32) / fact;
            assert!((polya_aeppli_pmf(1.0, t, k) - poisson).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_with_mean_t() {
        let (total, _) = sum_until_converged(0.6, 3.0);
        assert!((total - 1.0).abs() < 1e-9);
        for theta in [0.3, 0.6, 0.9] {
            let (total, mean) = sum_until_converged(theta, 2.0);
            assert!((total - 1.0).abs() < 1e-9);
            assert!((mean - 2.0).abs() < 1e-6, "theta={theta}: mean {mean}");
        }
    }

    #[test]
    fn small_k_by_hand() {
        // k = 1: e^{-theta t} theta (theta t); k = 2: e^{-theta t}[theta(1-theta) theta t + theta^2 (theta t)^2 / 2]
        let (th, t) = (0.4f64, 1.5f64);
        let e = (-th * t).exp();
        assert!((polya_aeppli_pmf(th, t, 1) - e * th * th * t).abs() < 1e-15);
        let k2 = e * (th * (1.0 - th) * th * t + th * th * (th * t).powi(2) / 2.0);
        assert!((polya_aeppli_pmf(th, t, 2) - k2).abs() < 1e-15);
    }

    #[test]
    fn panjer_with_geometric_sizes_is_polya_aeppli() {
        for theta in [0.25, 0.618, 0.95] {
            let law = CompoundPoissonLaw::geometric(theta);
            let table = law.pmf_table(2.0, 30);
            for (k, p) in table.iter().enumerate() {
                assert!((p - polya_aeppli_pmf(theta, 2.0, k as u64)).abs() < 1e-12);
            }
            assert!((law.mean(2.0) - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn euclidean_law_normalizes() {
        let model = ExtremalModel::new(2.618_033_988_749_895, 1, MetricKind::Euclidean);
        let law = CompoundPoissonLaw::from_model(&model, 60);
        let table = law.pmf_table(2.0, 200);
        assert!((table.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // E N = theta t / theta = t
        assert!((law.mean(2.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn simulated_compound_poisson_matches_pmf() {
        // Poisson(theta t) clusters with sizes 1 + Geometric(theta).
        let (theta, t) = (0.618, 2.0);
        let clusters = Poisson::new(theta * t).unwrap();
        let extra = Geometric::new(theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kmax = 20usize;
        let mut observed = vec![0u64; kmax + 2];
        for _ in 0..1_000_000 {
            let m = clusters.sample(&mut rng) as u64;
            let total: u64 = (0..m).map(|_| 1 + extra.sample(&mut rng)).sum();
            observed[(total as usize).min(kmax + 1)] += 1;
        }
        let mut probs: Vec<f64> = (0..=kmax as u64).map(|k| polya_aeppli_pmf(theta, t, k)).collect();
        probs.push(1.0 - probs.iter().sum::<f64>());
        let chi = chi_square_test(&observed, &probs, 5.0).unwrap();
        assert!(chi.p_value > 0.01, "{chi:?}");
    }
}
