//! Acceptance checks, shared by the `acceptance` test target and the CLI.
//!
//! Each check returns a [`CriterionOutcome`] carrying the measured values
//! it was judged on. Tolerances on finite-`n` simulations are engineering
//! bands, not limits from the theory.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evt::{
    area_a_q, extremal_index, nested_area_box_bound, nested_area_stated_bound, polya_aeppli_pmf,
    wrap_time_g, ExtremalModel, ThresholdSchedule,
};
use crate::region::{
    closed_form_measure, monte_carlo_measure, separation_scan, RegionSpec,
};
use crate::sim::{
    block_maxima_cdf, decluster_all, ei_measure_ratio_estimate, empirical_extremal_index,
    empirical_multiplicity, gap_ks_statistic, multiplicity_chi_square, repp_chi_square,
    repp_counts, with_workers, ExperimentConfig, PreparedExperiment, ZetaSpec,
};
use crate::torus::{
    step_exact, Direction, ExactOrbitState, MetricKind, Modulus, RationalPoint, ToralAutomorphism,
};

/// Budget for the whole suite.
pub const RUNTIME_BUDGET_SECS: f64 = 30.0 * 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    fn new(id: u32, name: &str) -> Self {
        Self {
            id,
            name: name.to_string(),
            passed: true,
            measured: BTreeMap::new(),
            detail: String::new(),
            seconds: 0.0,
        }
    }

    /// Non-finite values are kept out of `measured` (JSON has no encoding
    /// for them) and noted in the detail instead.
    fn record(&mut self, key: impl Into<String>, value: f64) {
        let key = key.into();
        if value.is_finite() {
            self.measured.insert(key, value);
        } else {
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&format!("{key} = {value}"));
        }
    }

    /// Records a sub-check; the criterion fails if any sub-check fails.
    fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        if !ok {
            self.passed = false;
        }
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(what.as_ref());
        self.detail.push_str(if ok { " ok" } else { " FAILED" });
    }

    fn fail_with(&mut self, err: impl std::fmt::Display) {
        self.passed = false;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&format!("error: {err}"));
    }

    pub fn summary_line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {} ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Only the formula and oracle checks (1 to 3).
    pub quick: bool,
    pub seed: u64,
    /// Replaces the computed Euclidean extremal index; a negative control.
    pub theta_injection: Option<f64>,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Trials per simulation criterion.
    pub trials: u64,
    /// Orbit length per trial.
    pub n: u64,
    /// Monte Carlo samples per region.
    pub region_samples: u64,
    /// Escape-set points for the separation check.
    pub separation_samples: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            quick: false,
            seed: 20_240_601,
            theta_injection: None,
            threads: None,
            trials: 10_000,
            n: 100_000,
            region_samples: 10_000_000,
            separation_samples: 1_000_000,
        }
    }
}

fn cat_map() -> ToralAutomorphism {
    ToralAutomorphism::cat_map()
}

fn timed(mut f: impl FnMut() -> CriterionOutcome) -> CriterionOutcome {
    let start = Instant::now();
    let mut out = f();
    out.seconds = start.elapsed().as_secs_f64();
    out
}

/// Criterion 1: closed-form identities.
pub fn formula_identities(opts: &ValidationOptions) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(1, "formula identities");
    let lam = cat_map().lambda_abs();

    let mut worst_ratio: f64 = 0.0;
    for q in 1..=6 {
        let theta = match opts.theta_injection {
            Some(t) => t,
            None => extremal_index(lam, q, MetricKind::Euclidean),
        };
        for s in [0.01, 0.003, 1e-5] {
            let ratio = area_a_q(s, lam, q) / (PI * s * s);
            worst_ratio = worst_ratio.max((ratio - theta).abs());
        }
    }
    out.record("theta_vs_area_ratio_max_abs_diff", worst_ratio);
    out.check(worst_ratio <= 1e-12, "theta = m(A)/(pi s^2)");

    let mut worst_mass: f64 = 0.0;
    let mut worst_tail: f64 = 0.0;
    for q in 1..=3 {
        let model = ExtremalModel::new(lam, q, MetricKind::Euclidean);
        worst_mass = worst_mass.max((model.total_mass() - 1.0).abs());
        let ratio = model.multiplicity(21) / model.multiplicity(20);
        worst_tail = worst_tail.max((ratio - lam.powi(-(q as i32))).abs());
    }
    out.record("multiplicity_mass_abs_error", worst_mass);
    out.record("multiplicity_ratio_k20_abs_error", worst_tail);
    out.check(worst_mass <= 1e-9, "sum pi = 1");
    out.check(worst_tail <= 1e-3, "pi(21)/pi(20) = |lambda|^-q");

    let limit = [MetricKind::Euclidean, MetricKind::Adapted]
        .iter()
        .map(|&m| (extremal_index(lam, 50, m) - 1.0).abs())
        .fold(0.0, f64::max);
    out.record("theta_q50_abs_error", limit);
    out.check(limit <= 1e-9, "theta_50 -> 1");

    let (mut worst_sum, mut worst_mean): (f64, f64) = (0.0, 0.0);
    for (theta, t) in [(0.3, 2.0), (0.6, 2.0), (0.9, 2.0), (0.6, 3.0)] {
        let (mut sum, mut mean) = (0.0, 0.0);
        for k in 0..5_000u64 {
            let p = polya_aeppli_pmf(theta, t, k);
            sum += p;
            mean += k as f64 * p;
            if k > 20 && p < 1e-22 {
                break;
            }
        }
        worst_sum = worst_sum.max((sum - 1.0).abs());
        worst_mean = worst_mean.max((mean - t).abs());
    }
    out.record("polya_aeppli_mass_abs_error", worst_sum);
    out.record("polya_aeppli_mean_abs_error", worst_mean);
    out.check(worst_sum <= 1e-9, "Polya-Aeppli sums to 1");
    out.check(worst_mean <= 1e-6, "Polya-Aeppli mean t");
    out
}

/// Criterion 2: Monte Carlo region measures against closed forms, and the
/// stated tail bound on the nested sets.
pub fn oracle_equivalence(opts: &ValidationOptions) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(2, "oracle equivalence");
    let t = cat_map();
    let lam = t.lambda_abs();
    let s = 0.01;
    let zeta = RationalPoint::ORIGIN;
    let e = MetricKind::Euclidean;
    let mut regions: Vec<(String, RegionSpec)> = Vec::new();
    regions.push(("A1".into(), RegionSpec::escape_set(zeta, s, e, 1).expect("valid")));
    for k in 0..=3 {
        regions.push((format!("Q{k}"), RegionSpec::strip(zeta, s, e, 1, k).expect("valid")));
    }
    for k in 1..=3 {
        regions.push((format!("U{k}"), RegionSpec::nested(zeta, s, e, 1, k).expect("valid")));
    }

    let mut within = 0;
    let mut bound_ok = true;
    for (i, (label, region)) in regions.iter().enumerate() {
        let exact = closed_form_measure(region, &t).expect("closed form for the cat map");
        let est = match monte_carlo_measure(region, &t, opts.region_samples, opts.seed + i as u64) {
            Ok(m) => m,
            Err(err) => {
                out.fail_with(err);
                return out;
            }
        };
        let z = (est.estimate - exact) / est.std_error;
        out.record(format!("{label}_estimate"), est.estimate);
        out.record(format!("{label}_closed_form"), exact);
        out.record(format!("{label}_z"), z);
        if z.abs() <= 3.0 {
            within += 1;
        }
        if let Some(k) = label.strip_prefix('U') {
            let k: u32 = k.parse().expect("label");
            let stated = nested_area_stated_bound(s, lam, 1, k);
            let boxed = nested_area_box_bound(s, lam, 1, k);
            out.record(format!("{label}_stated_bound"), stated);
            out.record(format!("{label}_box_bound"), boxed);
            if est.estimate > stated + 3.0 * est.std_error {
                bound_ok = false;
            }
        }
    }
    out.check(
        within == regions.len(),
        format!("{within}/{} regions within 3 se of closed form", regions.len()),
    );
    out.check(bound_ok, "m(U^k) <= |lambda|^(-k q) s^2 + 3 se");
    out
}

/// Criterion 3: no escape-set point returns within the separation window.
pub fn separation(opts: &ValidationOptions) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(3, "separation");
    let t = cat_map();
    let n = 100_000;
    let tau = 1.0;
    let g = wrap_time_g(n, t.lambda_abs(), 1, tau);
    let radius = ThresholdSchedule::for_automorphism(tau, MetricKind::Euclidean, &t)
        .and_then(|s| s.radius(n))
        .expect("valid schedule");
    out.record("g_n", g as f64);
    out.record("radius", radius);
    let scan = separation_scan(
        &t,
        RationalPoint::ORIGIN,
        1,
        radius,
        MetricKind::Euclidean,
        g,
        opts.separation_samples,
        opts.seed,
    );
    match scan {
        Ok(r) => {
            out.record("escape_points", r.points as f64);
            out.record("returns", r.returns as f64);
            out.check(r.returns == 0 && r.points == opts.separation_samples, "zero returns");
        }
        Err(err) => {
            out.fail_with(err);
            return out;
        }
    }
    // The same scan with the radius inflated by |lambda|^g must find returns.
    let inflated = radius * t.lambda_abs().powi(g as i32);
    match separation_scan(
        &t,
        RationalPoint::ORIGIN,
        1,
        inflated,
        MetricKind::Euclidean,
        g,
        (opts.separation_samples / 10).max(1_000),
        opts.seed + 1,
    ) {
        Ok(r) => {
            out.record("control_returns", r.returns as f64);
            out.check(r.returns > 0, "inflated-radius control detects returns");
        }
        Err(err) => out.fail_with(err),
    }
    out
}

fn experiment(opts: &ValidationOptions, zeta: ZetaSpec, metric: MetricKind, tau: f64, salt: u64) -> PreparedExperiment {
    ExperimentConfig {
        zeta,
        metric,
        tau,
        n: opts.n,
        trials: opts.trials,
        seed: opts.seed.wrapping_add(salt),
        ..Default::default()
    }
    .prepare()
    .expect("built-in configuration is valid")
}

/// Criterion 4: the non-periodic center.
pub fn dichotomy_non_periodic(opts: &ValidationOptions) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(4, "dichotomy, non-periodic center");
    let zeta = ZetaSpec::Decimal(2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0);
    let exp = experiment(opts, zeta, MetricKind::Euclidean, 1.0, 4);
    out.record("q", exp.q as f64);
    let records = exp.run();
    let (p, se) = block_maxima_cdf(&records, exp.u_n);
    let target = (-1f64).exp();
    out.record("p_hat", p);
    out.record("p_hat_se", se);
    out.record("p_target", target);
    out.check((p - target).abs() <= 0.03, "|p - e^-1| <= 0.03");

    let summaries = decluster_all(&records, exp.run_gap, exp.kac).expect("positive Kac factor");
    match empirical_extremal_index(&summaries) {
        Ok(theta) => {
            out.record("theta_hat", theta);
            out.check((0.93..=1.0).contains(&theta), "theta in [0.93, 1]");
        }
        Err(err) => out.fail_with(err),
    }
    match gap_ks_statistic(&summaries, 1.0) {
        Ok(ks) => {
            out.record("gap_ks_statistic", ks.statistic);
            out.record("gap_ks_p_value", ks.p_value);
            out.record("gaps", ks.samples as f64);
            out.check(ks.p_value > 0.01, "gap KS p > 0.01");
        }
        Err(err) => out.fail_with(err),
    }
    match empirical_multiplicity(&summaries) {
        Ok(h) => {
            let one = h.get(&1).copied().unwrap_or(0.0);
            out.record("mass_at_1", one);
            out.check(one >= 0.95, "pi_hat(1) >= 0.95");
        }
        Err(err) => out.fail_with(err),
    }
    out
}

/// Criterion 5: the fixed point at the origin with the Euclidean metric.
pub fn dichotomy_periodic_euclidean(opts: &ValidationOptions) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(5, "dichotomy, periodic center, Euclidean");
    let exp = experiment(opts, ZetaSpec::default(), MetricKind::Euclidean, 1.0, 5);
    let theta = opts.theta_injection.unwrap_or(exp.model.theta());
    out.record("theta", theta);
    let records = exp.run();
    let (p, se) = block_maxima_cdf(&records, exp.u_n);
    out.record("p_hat", p);
    out.record("p_hat_se", se);
    out.record("p_target", (-theta).exp());
    out.check((p - (-theta).exp()).abs() <= 0.03, "|p - e^-theta| <= 0.03");

    let summaries = decluster_all(&records, exp.run_gap, exp.kac).expect("positive Kac factor");
    match empirical_extremal_index(&summaries) {
        Ok(hat) => {
            out.record("theta_hat_clusters", hat);
            out.check((hat - theta).abs() <= 0.04, "cluster theta within 0.04");
        }
        Err(err) => out.fail_with(err),
    }
    match ei_measure_ratio_estimate(&exp, opts.region_samples / 10, opts.seed + 55) {
        Ok(r) => {
            out.record("theta_hat_measure_ratio", r.value);
            out.record("theta_hat_measure_ratio_se", r.std_error);
            out.check((r.value - theta).abs() <= 0.04, "measure-ratio theta within 0.04");
        }
        Err(err) => out.fail_with(err),
    }
    match multiplicity_chi_square(&summaries, &exp.model, 5) {
        Ok(chi) => {
            out.record("multiplicity_chi2", chi.statistic);
            out.record("multiplicity_chi2_dof", chi.dof as f64);
            out.record("multiplicity_chi2_p_value", chi.p_value);
            out.check(chi.p_value > 0.01, "cluster sizes chi-square at 1%");
        }
        Err(err) => out.fail_with(err),
    }
    out
}

/// Criterion 6: the fixed point at the origin with the adapted metric.
pub fn dichotomy_periodic_adapted(opts: &ValidationOptions) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(6, "dichotomy, periodic center, adapted metric");
    let exp = experiment(opts, ZetaSpec::default(), MetricKind::Adapted, 1.0, 6);
    let theta = exp.model.theta();
    out.record("theta", theta);
    let records = exp.run();
    let summaries = decluster_all(&records, exp.run_gap, exp.kac).expect("positive Kac factor");
    match empirical_extremal_index(&summaries) {
        Ok(hat) => {
            out.record("theta_hat_clusters", hat);
            out.check((hat - theta).abs() <= 0.04, "theta within 0.04 of 1 - 1/lambda");
        }
        Err(err) => out.fail_with(err),
    }
    let (p, _) = block_maxima_cdf(&records, exp.u_n);
    out.record("p_hat", p);
    out.record("p_target", (-theta).exp());
    match multiplicity_chi_square(&summaries, &exp.model, 5) {
        Ok(chi) => {
            out.record("multiplicity_chi2", chi.statistic);
            out.record("multiplicity_chi2_dof", chi.dof as f64);
            out.record("multiplicity_chi2_p_value", chi.p_value);
            out.check(chi.p_value > 0.01, "geometric cluster sizes chi-square at 1%");
        }
        Err(err) => out.fail_with(err),
    }
    out
}

/// Criterion 7: exceedance counts over rescaled windows of length 2.
pub fn repp_law(opts: &ValidationOptions) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(7, "compound Poisson counts");
    let t = 2.0;
    let exp = experiment(opts, ZetaSpec::default(), MetricKind::Adapted, t, 7);
    let theta = exp.model.theta();
    let records = exp.run();
    let counts = match repp_counts(&records, exp.kac, t) {
        Ok(c) => c,
        Err(err) => {
            out.fail_with(err);
            return out;
        }
    };
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    out.record("windows", counts.len() as f64);
    out.record("mean_count", mean);
    out.check(counts.len() >= 10_000.min(opts.trials as usize), "enough windows");
    match repp_chi_square(&counts, theta, t) {
        Ok(chi) => {
            out.record("chi2", chi.statistic);
            out.record("chi2_dof", chi.dof as f64);
            out.record("chi2_p_value", chi.p_value);
            out.check(chi.p_value > 0.01, "Polya-Aeppli chi-square at 1%");
        }
        Err(err) => out.fail_with(err),
    }
    out
}

/// Criterion 8: worker-count independence, exact inversion, and runtime.
pub fn engineering(opts: &ValidationOptions, elapsed_before: f64) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(8, "engineering");
    let exp = ExperimentConfig {
        n: 20_000,
        trials: 64,
        seed: opts.seed,
        ..Default::default()
    }
    .prepare()
    .expect("valid");
    let one = with_workers(Some(1), || exp.run());
    let many = with_workers(Some(4), || exp.run());
    let region = RegionSpec::escape_set(RationalPoint::ORIGIN, 0.01, MetricKind::Euclidean, 1)
        .expect("valid");
    let t = cat_map();
    let m1 = with_workers(Some(1), || monte_carlo_measure(&region, &t, 200_000, opts.seed));
    let m4 = with_workers(Some(4), || monte_carlo_measure(&region, &t, 200_000, opts.seed));
    out.check(one == many && m1 == m4, "1 vs 4 workers identical");

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let matrices = [
        cat_map(),
        ToralAutomorphism::new(3, 2, 1, 1).expect("valid"),
        ToralAutomorphism::new(-3, 1, -1, 0).expect("valid"),
    ];
    let mut mismatches = 0u64;
    for i in 0..10_000u64 {
        let t = &matrices[(i % 3) as usize];
        let modulus = [Modulus::PowerOfTwo(61), Modulus::PowerOfTwo(64), Modulus::PowerOfTwo(128)]
            [(i % 3) as usize];
        let (x, y): (u128, u128) = (rng.random(), rng.random());
        let s = ExactOrbitState::new(modulus.reduce(x), modulus.reduce(y), modulus).expect("reduced");
        let f = step_exact(s, t, Direction::Forward);
        if step_exact(f, t, Direction::Backward) != s {
            mismatches += 1;
        }
    }
    out.record("inverse_mismatches", mismatches as f64);
    out.check(mismatches == 0, "forward then backward on 10^4 states");

    out.record("suite_seconds", elapsed_before);
    out.check(elapsed_before <= RUNTIME_BUDGET_SECS, "runtime within 30 min");
    out
}

/// Runs the suite in order, calling `report` as each criterion finishes.
pub fn run_all_with(
    opts: &ValidationOptions,
    mut report: impl FnMut(&CriterionOutcome) + Send,
) -> Vec<CriterionOutcome> {
    let start = Instant::now();
    let mut outcomes = Vec::new();
    let mut push = |o: CriterionOutcome, outcomes: &mut Vec<CriterionOutcome>| {
        report(&o);
        outcomes.push(o);
    };
    with_workers(opts.threads, || {
        push(timed(|| formula_identities(opts)), &mut outcomes);
        push(timed(|| oracle_equivalence(opts)), &mut outcomes);
        push(timed(|| separation(opts)), &mut outcomes);
        if !opts.quick {
            push(timed(|| dichotomy_non_periodic(opts)), &mut outcomes);
            push(timed(|| dichotomy_periodic_euclidean(opts)), &mut outcomes);
            push(timed(|| dichotomy_periodic_adapted(opts)), &mut outcomes);
            push(timed(|| repp_law(opts)), &mut outcomes);
            let elapsed = start.elapsed().as_secs_f64();
            push(timed(|| engineering(opts, elapsed)), &mut outcomes);
        }
    });
    outcomes
}

pub fn run_all(opts: &ValidationOptions) -> Vec<CriterionOutcome> {
    run_all_with(opts, |_| {})
}
