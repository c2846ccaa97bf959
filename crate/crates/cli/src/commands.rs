use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use extorus::evt::wrap_time_g;
use extorus::sim::{
    block_maxima_cdf, decluster_all, ei_measure_ratio_estimate, empirical_extremal_index,
    empirical_multiplicity, gap_ks_statistic, multiplicity_chi_square, threads_from_env,
    with_workers, ChiSquareResult, KsResult, RatioEstimate, MAX_PERIOD_SEARCH,
};
use extorus::torus::compute_period;
use extorus::validation::{run_all_with, ValidationOptions};
use extorus::{Error, ExtremalModel, MetricKind, ThresholdSchedule, ToralAutomorphism};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::manifest::{Derived, RunManifest, MANIFEST_FILE};
use crate::records::{load_records, save_records, EXCEEDANCES_FILE, MAXIMA_FILE};
use crate::{EstimateArgs, SimulateArgs, TheoryArgs, ValidateArgs};

pub const MULTIPLICITY_FILE: &str = "multiplicity.dat";

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    // A closed pipe downstream is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

#[derive(Debug, Serialize)]
struct TheoryReport {
    matrix: [i64; 4],
    metric: MetricKind,
    q: u32,
    lambda_abs: f64,
    theta: f64,
    multiplicity: Vec<f64>,
    tau: f64,
    n: u64,
    u_n: f64,
    s_n: f64,
    g_n: u64,
    v_n: f64,
}

pub fn theory(args: &TheoryArgs) -> CliResult<()> {
    let cfg = args.experiment.resolve()?;
    let [a, b, c, d] = cfg.matrix;
    let t = ToralAutomorphism::new(a, b, c, d)?;
    if args.kmax == 0 {
        return Err(CliError::Invalid("kmax must be at least 1".into()));
    }
    let q = match args.q {
        Some(q) => q,
        None => compute_period(cfg.zeta.to_rational(), &t, MAX_PERIOD_SEARCH).unwrap_or(0) as u32,
    };
    let lambda_abs = t.lambda_abs();
    let model = ExtremalModel::new(lambda_abs, q, cfg.metric);
    let schedule = ThresholdSchedule::for_automorphism(cfg.tau, cfg.metric, &t)?;
    let u_n = schedule.u_n(cfg.n)?;
    let report = TheoryReport {
        matrix: cfg.matrix,
        metric: cfg.metric,
        q,
        lambda_abs,
        theta: model.theta(),
        multiplicity: model.multiplicity_table(args.kmax),
        tau: cfg.tau,
        n: cfg.n,
        u_n,
        s_n: (-u_n).exp(),
        g_n: wrap_time_g(cfg.n, lambda_abs, q, cfg.tau),
        v_n: schedule.kac(cfg.n),
    };
    if args.json {
        print_json(&report);
        return Ok(());
    }
    let [a, b, c, d] = report.matrix;
    println!("matrix      {a},{b},{c},{d}");
    println!("metric      {}", report.metric);
    println!("q           {}", report.q);
    println!("|lambda|    {:.12}", report.lambda_abs);
    println!("theta       {:.12}", report.theta);
    println!("tau         {}", report.tau);
    println!("n           {}", report.n);
    println!("u_n         {:.12}", report.u_n);
    println!("s_n         {:.6e}", report.s_n);
    println!("g(n)        {}", report.g_n);
    println!("v_n         {:.6}", report.v_n);
    println!();
    println!("{:>6}  {:>16}", "kappa", "pi(kappa)");
    for (k, p) in report.multiplicity.iter().enumerate() {
        println!("{:>6}  {:>16.10e}", k + 1, p);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimulateReport<'a> {
    out: &'a Path,
    trials: u64,
    exceedances: u64,
    q: u32,
    theta: f64,
    block_max_p_hat: f64,
    block_max_target: f64,
    wall_seconds: f64,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let cfg = args.experiment.resolve()?;
    let exp = cfg.prepare()?;
    create_dir(&args.out)?;
    let start = Instant::now();
    let records = with_workers(threads_from_env(), || exp.run());
    save_records(&args.out, &records)?;
    let mut manifest = RunManifest::new("simulate");
    manifest.config = Some(cfg.clone());
    manifest.derived = Some(Derived::from_experiment(&exp));
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.save(&args.out)?;

    let (p_hat, _) = block_maxima_cdf(&records, exp.u_n);
    let report = SimulateReport {
        out: &args.out,
        trials: records.len() as u64,
        exceedances: records.iter().map(|r| r.exceedances() as u64).sum(),
        q: exp.q,
        theta: exp.model.theta(),
        block_max_p_hat: p_hat,
        block_max_target: (-exp.model.theta() * cfg.tau).exp(),
        wall_seconds: manifest.wall_seconds,
    };
    if args.json {
        print_json(&report);
    } else {
        println!(
            "{} trials, {} exceedances, q = {}, P(M_n <= u_n) = {:.4} (theory {:.4})",
            report.trials, report.exceedances, report.q, report.block_max_p_hat, report.block_max_target
        );
        for name in [EXCEEDANCES_FILE, MAXIMA_FILE, MANIFEST_FILE] {
            println!("wrote {}", args.out.join(name).display());
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MultiplicityRow {
    kappa: u32,
    observed: f64,
    theory: f64,
}

#[derive(Debug, Default, Serialize)]
struct EstimateReport {
    q: u32,
    theta: f64,
    exceedances: u64,
    clusters: u64,
    theta_hat_clusters: f64,
    theta_hat_measure_ratio: Option<RatioEstimate>,
    multiplicity: Vec<MultiplicityRow>,
    gap_ks_rate: f64,
    gap_ks: Option<KsResult>,
    multiplicity_chi2: Option<ChiSquareResult>,
    block_max_p_hat: f64,
    block_max_se: f64,
    block_max_target: f64,
    notes: Vec<String>,
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let manifest = RunManifest::load(&args.input)?;
    let cfg = manifest.config.ok_or_else(|| {
        CliError::Invalid(format!("{MANIFEST_FILE} in {} has no config", args.input.display()))
    })?;
    if args.kmax == 0 {
        return Err(CliError::Invalid("kmax must be at least 1".into()));
    }
    let exp = cfg.prepare()?;
    let records = load_records(&args.input, cfg.trials, cfg.n)?;
    let exceedances: u64 = records.iter().map(|r| r.exceedances() as u64).sum();
    if exceedances == 0 {
        return Err(Error::NoExceedances.into());
    }
    let summaries = decluster_all(&records, exp.run_gap, exp.kac)?;
    let model = &exp.model;
    let mut report = EstimateReport {
        q: exp.q,
        theta: model.theta(),
        exceedances,
        clusters: summaries.iter().map(|s| s.clusters() as u64).sum(),
        theta_hat_clusters: empirical_extremal_index(&summaries)?,
        ..Default::default()
    };

    match ei_measure_ratio_estimate(&exp, args.samples, args.seed) {
        Ok(r) => report.theta_hat_measure_ratio = Some(r),
        Err(e) => report.notes.push(format!("measure ratio unavailable: {e}")),
    }

    let hat = empirical_multiplicity(&summaries)?;
    report.multiplicity = (1..=args.kmax)
        .map(|k| MultiplicityRow {
            kappa: k,
            observed: hat.get(&(k as u64)).copied().unwrap_or(0.0),
            theory: model.multiplicity(k),
        })
        .collect();

    report.gap_ks_rate = args.theta_override.unwrap_or(model.theta());
    match gap_ks_statistic(&summaries, report.gap_ks_rate) {
        Ok(ks) => report.gap_ks = Some(ks),
        Err(e) => report.notes.push(format!("gap KS skipped: {e}")),
    }
    if model.is_periodic() {
        match multiplicity_chi_square(&summaries, model, args.kmax) {
            Ok(chi) => report.multiplicity_chi2 = Some(chi),
            Err(e) => report.notes.push(format!("multiplicity chi-square skipped: {e}")),
        }
    } else {
        report
            .notes
            .push("multiplicity chi-square skipped: clusters are single exceedances".into());
    }

    let (p, se) = block_maxima_cdf(&records, exp.u_n);
    report.block_max_p_hat = p;
    report.block_max_se = se;
    report.block_max_target = (-model.theta() * cfg.tau).exp();

    let out_dir = args.out.as_deref().unwrap_or(&args.input);
    create_dir(out_dir)?;
    let path = out_dir.join(MULTIPLICITY_FILE);
    fs::write(&path, multiplicity_dat(&report.multiplicity)).map_err(|e| CliError::io(&path, e))?;

    if args.json {
        print_json(&report);
    } else {
        print_estimate(&report);
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn multiplicity_dat(rows: &[MultiplicityRow]) -> String {
    let mut s = String::from("# kappa pi_hat pi\n");
    for r in rows {
        let _ = writeln!(s, "{} {} {}", r.kappa, r.observed, r.theory);
    }
    s
}

fn print_estimate(r: &EstimateReport) {
    println!("q                      {}", r.q);
    println!("exceedances            {}", r.exceedances);
    println!("clusters               {}", r.clusters);
    println!("theta (theory)         {:.6}", r.theta);
    println!("theta_hat (clusters)   {:.6}", r.theta_hat_clusters);
    if let Some(m) = &r.theta_hat_measure_ratio {
        println!("theta_hat (measure)    {:.6} +- {:.6}", m.value, m.std_error);
    }
    println!(
        "P(M_n <= u_n)          {:.4} +- {:.4} (theory {:.4})",
        r.block_max_p_hat, r.block_max_se, r.block_max_target
    );
    if let Some(ks) = &r.gap_ks {
        println!(
            "gap KS (rate {:.6})   D = {:.5}, p = {:.4}, {} gaps",
            r.gap_ks_rate, ks.statistic, ks.p_value, ks.samples
        );
    }
    if let Some(chi) = &r.multiplicity_chi2 {
        println!(
            "multiplicity chi2      {:.3} on {} dof, p = {:.4}",
            chi.statistic, chi.dof, chi.p_value
        );
    }
    println!();
    println!("{:>6}  {:>12}  {:>12}", "kappa", "pi_hat", "pi");
    for row in &r.multiplicity {
        println!("{:>6}  {:>12.6}  {:>12.6}", row.kappa, row.observed, row.theory);
    }
    for note in &r.notes {
        println!("note: {note}");
    }
}

pub fn validate(args: &ValidateArgs) -> CliResult<()> {
    let defaults = ValidationOptions::default();
    let opts = ValidationOptions {
        quick: args.quick,
        seed: args.seed.unwrap_or(defaults.seed),
        theta_injection: args.inject_theta,
        threads: threads_from_env(),
        trials: args.trials.unwrap_or(defaults.trials),
        n: args.n.unwrap_or(defaults.n),
        region_samples: args.region_samples.unwrap_or(defaults.region_samples),
        separation_samples: args.separation_samples.unwrap_or(defaults.separation_samples),
    };
    create_dir(&args.out)?;
    let start = Instant::now();
    let json = args.json;
    let criteria = run_all_with(&opts, |o| {
        if json {
            eprintln!("{}", o.summary_line());
        } else {
            println!("{}", o.summary_line());
        }
    });
    let mut manifest = RunManifest::new("validate");
    manifest.criteria = criteria;
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.save(&args.out)?;
    if json {
        print_json(&manifest);
    } else {
        println!(
            "{} of {} criteria passed; manifest written to {}",
            manifest.criteria.len() - manifest.failed().len(),
            manifest.criteria.len(),
            args.out.join(MANIFEST_FILE).display()
        );
    }
    if manifest.all_passed() {
        Ok(())
    } else {
        Err(CliError::ValidationFailed(manifest.failed()))
    }
}
