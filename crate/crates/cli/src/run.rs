//! `kmslab run`: one experiment per invocation.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use kmslab::analysis::{self, SweepFamily, SweepReport, MONOTONE_TOL};
use kmslab::experiments_davies::{davies_compare, mb_thermalization_demo, trajectory_probes};
use kmslab::generators::{self, bath_make, BathParams, BathSpec, Generator, System};
use kmslab::models::{build_hamiltonian, pauli_jump_set};
use kmslab::ri_sim::{self, JumpMode, OmegaMode, OmegaRule, RIConfig};
use kmslab::suite;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{BathConfig, Experiment, ExperimentConfig, GapFamily, GeneratorChoice, JumpChoice, OmegaChoice};
use crate::error::{CliError, Violation};
use crate::output::{csv, fmt_f, write_json};

pub const KMS_TOL: f64 = 1e-8;
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const TP_TOL: f64 = 1e-8;

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    /// Headline numbers, tabulated by `kmslab report`.
    pub summary: BTreeMap<String, Value>,
    pub result: Value,
    /// Data files written next to the report.
    pub files: Vec<String>,
    pub violations: Vec<Violation>,
}

struct Outcome {
    summary: BTreeMap<String, Value>,
    result: Value,
    files: Vec<(String, String)>,
    violations: Vec<Violation>,
}

impl Outcome {
    fn new(result: Value) -> Self {
        Outcome { summary: BTreeMap::new(), result, files: Vec::new(), violations: Vec::new() }
    }
    fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.into(), v.into());
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn build_system(cfg: &ExperimentConfig) -> Result<Arc<System>, CliError> {
    let h = build_hamiltonian(&cfg.model)?;
    let jumps = match cfg.jumps {
        JumpChoice::SingleSitePaulis => pauli_jump_set(h.n_qubits),
    };
    Ok(System::new(h, jumps, cfg.beta_inv_energy)?)
}

fn build_bath(b: &BathConfig, sys: &System) -> Result<BathSpec, CliError> {
    Ok(bath_make(&BathParams {
        gamma0: b.gamma0_energy,
        sigma_c_energy: b.sigma_c_energy,
        beta_inv_energy: sys.beta,
        max_freq_energy: sys.max_active_freq() + 1.0,
    })?)
}

fn sweep_violations(r: &SweepReport, out: &mut Vec<Violation>) {
    for (i, p) in r.params.iter().enumerate() {
        if r.kms_residuals[i] > KMS_TOL {
            out.push(Violation::measured("kms_symmetry", format!("{}={p}", r.parameter), r.kms_residuals[i], KMS_TOL));
        }
        if r.fixedpoint_residuals[i] > FIXED_POINT_TOL {
            out.push(Violation::measured("gibbs_fixed_point", format!("{}={p}", r.parameter), r.fixedpoint_residuals[i], FIXED_POINT_TOL));
        }
    }
    if !r.monotonic {
        out.push(Violation::new("gap_monotonicity", format!("{} sweep of the {} family is not monotone (tolerance {MONOTONE_TOL:e})", r.parameter, r.family)));
    }
}

fn sweep_summary(o: &mut Outcome, prefix: &str, r: &SweepReport) {
    o.put(&format!("{prefix}_points"), r.params.len());
    o.put(&format!("{prefix}_monotonic"), r.monotonic);
    o.put(&format!("{prefix}_gap_first"), r.gaps[0]);
    o.put(&format!("{prefix}_gap_last"), *r.gaps.last().expect("nonempty grid"));
    o.put(&format!("{prefix}_max_kms_residual"), r.kms_residuals.iter().cloned().fold(0.0, f64::max));
}

fn sorted(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g
}

fn gap_family(f: &GapFamily, sys: &System) -> Result<SweepFamily, CliError> {
    Ok(match f {
        GapFamily::GaussianKappa { kappa_grid_dimensionless } => SweepFamily::GaussianKappa { kappa_grid: sorted(kappa_grid_dimensionless) },
        GapFamily::MacroBathAlpha { alpha_grid_dimensionless, bath } => {
            SweepFamily::MacroBathAlpha { alpha_grid: sorted(alpha_grid_dimensionless), bath: build_bath(bath, sys)? }
        }
    })
}

fn run_gap_sweep(cfg: &ExperimentConfig, sweep: &GapFamily) -> Result<Outcome, CliError> {
    let sys = build_system(cfg)?;
    let r = analysis::monotonicity_sweep(&gap_family(sweep, &sys)?, &sys, cfg.seed)?;
    let mut o = Outcome::new(to_value(&r));
    sweep_summary(&mut o, &r.parameter, &r);
    sweep_violations(&r, &mut o.violations);
    o.files.push(("sweep.csv".into(), r.to_csv()));
    Ok(o)
}

fn run_monotonicity(cfg: &ExperimentConfig, kappas: &[f64], alphas: Option<&[f64]>, bath: &BathConfig) -> Result<Outcome, CliError> {
    let sys = build_system(cfg)?;
    let rk = analysis::monotonicity_sweep(&SweepFamily::GaussianKappa { kappa_grid: sorted(kappas) }, &sys, cfg.seed)?;
    let ra = match alphas {
        Some(a) => Some(analysis::monotonicity_sweep(
            &SweepFamily::MacroBathAlpha { alpha_grid: sorted(a), bath: build_bath(bath, &sys)? },
            &sys,
            cfg.seed,
        )?),
        None => None,
    };
    let mut o = Outcome::new(json!({ "kappa_sweep": to_value(&rk), "alpha_sweep": ra.as_ref().map(to_value) }));
    sweep_summary(&mut o, "kappa", &rk);
    sweep_violations(&rk, &mut o.violations);
    o.files.push(("kappa_sweep.csv".into(), rk.to_csv()));
    if let Some(ra) = &ra {
        sweep_summary(&mut o, "alpha", ra);
        sweep_violations(ra, &mut o.violations);
        o.files.push(("alpha_sweep.csv".into(), ra.to_csv()));
    }
    Ok(o)
}

fn ri_base(cfg: &ExperimentConfig, alpha: f64, kappa: f64, pulse_factor: f64) -> RIConfig {
    let mut rc = RIConfig::new(alpha, kappa, cfg.beta_inv_energy);
    rc.t_pulse_time = pulse_factor * kappa * cfg.beta_inv_energy;
    rc
}

fn seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed.expect("validated: stochastic experiments carry a seed")
}

fn run_ri_scaling(cfg: &ExperimentConfig, alphas: &[f64], kappa: f64, pulse_factor: f64, max_phase: f64, omega: &OmegaChoice) -> Result<Outcome, CliError> {
    let sys = build_system(cfg)?;
    let mut rc = ri_base(cfg, alphas[0], kappa, pulse_factor);
    rc.max_phase_per_step = max_phase;
    match omega {
        OmegaChoice::Quadrature { n_nodes } => rc.omega_mode = OmegaMode::Quadrature { rule: OmegaRule::CompositeLegendre, n_nodes: *n_nodes },
        OmegaChoice::MonteCarlo { n_samples } => {
            rc.omega_mode = OmegaMode::MonteCarlo { n_samples: *n_samples, seed: seed(cfg) };
            rc.jump_mode = JumpMode::Sampled;
        }
    }
    let r = ri_sim::channel_vs_semigroup(&sys, &rc, &sorted(alphas), seed(cfg))?;
    let mut o = Outcome::new(to_value(&r));
    o.put("slope", r.fit.slope);
    o.put("slope_ci95_low", r.fit.slope_ci95.0);
    o.put("slope_ci95_high", r.fit.slope_ci95.1);
    o.put("n_probes", r.n_probes);
    let rows: Vec<Vec<String>> = r.alphas.iter().zip(&r.distances).map(|(a, d)| vec![fmt_f(*a), fmt_f(*d)]).collect();
    o.files.push(("scaling.csv".into(), csv(&["alpha", "distance"], &rows)));
    Ok(o)
}

fn run_ri_fixed_point(cfg: &ExperimentConfig, alpha: f64, kappas: &[f64], eps: f64, pulse_factor: f64) -> Result<Outcome, CliError> {
    let sys = build_system(cfg)?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &k in &sorted(kappas) {
        let ch = ri_sim::ri_channel(&sys, &ri_base(cfg, alpha, k, pulse_factor))?;
        if ch.tp_residual > TP_TOL {
            violations.push(Violation::measured("trace_preservation", format!("kappa={k}"), ch.tp_residual, TP_TOL));
        }
        let (_, rep) = ri_sim::fixed_point_and_therm_index(&ch, eps, seed(cfg))?;
        rows.push(vec![
            fmt_f(k),
            fmt_f(rep.fixed_point_error),
            rep.t_therm.to_string(),
            fmt_f(rep.predicted_t_therm),
            fmt_f(ch.cp_residual),
            fmt_f(ch.tp_residual),
        ]);
        reports.push(json!({ "report": to_value(&rep), "cp_residual": ch.cp_residual, "tp_residual": ch.tp_residual }));
    }
    let errors: Vec<f64> = reports.iter().map(|r| r["report"]["fixed_point_error"].as_f64().expect("number")).collect();
    let mut o = Outcome::new(Value::Array(reports));
    o.put("strictly_decreasing", errors.windows(2).all(|w| w[1] < w[0]));
    o.put("fixed_point_error_first", errors[0]);
    o.put("fixed_point_error_last", *errors.last().expect("nonempty grid"));
    if errors.len() >= 2 {
        let ks = sorted(kappas);
        if let Ok(fit) = analysis::loglog_fit(&ks, &errors) {
            o.put("slope", fit.slope);
            o.put("slope_ci95_low", fit.slope_ci95.0);
            o.put("slope_ci95_high", fit.slope_ci95.1);
        }
    }
    o.violations = violations;
    o.files.push((
        "fixed_point.csv".into(),
        csv(&["kappa", "fixed_point_error", "t_therm", "predicted_t_therm", "cp_residual", "tp_residual"], &rows),
    ));
    Ok(o)
}

fn run_mb_demo(cfg: &ExperimentConfig, alpha: f64, t_max: f64, n_t: usize, bath: &BathConfig) -> Result<Outcome, CliError> {
    let sys = build_system(cfg)?;
    let bath = build_bath(bath, &sys)?;
    let probes = trajectory_probes(sys.dim(), 1, seed(cfg));
    let sigma0 = probes.last().expect("one random probe");
    let demo = mb_thermalization_demo(&sys, &bath, alpha, t_max, n_t, sigma0)?;
    let mut o = Outcome::new(to_value(&demo));
    for p in &demo.trajectory {
        if p.distance > p.bound + 1e-12 {
            o.violations.push(Violation::measured("mixing_bound", format!("t={}", p.t), p.distance, p.bound));
        }
    }
    let last = demo.trajectory.last().expect("n_t >= 1");
    o.put("gap", demo.gap);
    o.put("final_distance", last.distance);
    o.put("final_bound", last.bound);
    o.put("certificate_total", demo.certificate.total);
    o.files.push(("trajectory.csv".into(), demo.to_csv()));
    Ok(o)
}

fn run_davies_compare(cfg: &ExperimentConfig, alphas: &[f64], t_max: Option<f64>, n_t: usize, n_random: usize, bath: &BathConfig) -> Result<Outcome, CliError> {
    let sys = build_system(cfg)?;
    let bath = build_bath(bath, &sys)?;
    let alphas = sorted(alphas);
    let t_max = match t_max {
        Some(t) => t,
        None => {
            let d = generators::build_davies_from_bath(&sys, &bath)?;
            let gap = analysis::generator_gap(&d)?.gap;
            let a = alphas.last().expect("nonempty grid");
            5.0 / (a * a * gap)
        }
    };
    let t_grid: Vec<f64> = (0..=n_t).map(|k| t_max * k as f64 / n_t as f64).collect();
    let probes = trajectory_probes(sys.dim(), n_random, seed(cfg));
    let r = davies_compare(&sys, &bath, &alphas, &t_grid, &probes)?;
    let mut o = Outcome::new(to_value(&r));
    if r.fixed_point_residual > FIXED_POINT_TOL {
        o.violations.push(Violation::measured("gibbs_fixed_point", "macroscopic-bath or Davies generator", r.fixed_point_residual, FIXED_POINT_TOL));
    }
    o.put("davies_gap", r.davies_gap);
    o.put("monotone", r.monotone);
    o.put("t_max", t_max);
    if let Some(f) = &r.trajectory_fit {
        o.put("slope", f.slope);
        o.put("slope_ci95_low", f.slope_ci95.0);
        o.put("slope_ci95_high", f.slope_ci95.1);
    }
    let rows: Vec<Vec<String>> = (0..r.alphas.len())
        .map(|i| vec![fmt_f(r.alphas[i]), fmt_f(r.observation_times[i]), fmt_f(r.generator_distances[i]), fmt_f(r.trajectory_distances[i])])
        .collect();
    o.files.push((
        "davies_compare.csv".into(),
        csv(&["alpha", "observation_time", "generator_distance", "trajectory_distance"], &rows),
    ));
    Ok(o)
}

fn build_generator(sys: &Arc<System>, g: &GeneratorChoice) -> Result<Generator, CliError> {
    Ok(match g {
        GeneratorChoice::Gaussian { kappa_dimensionless } => generators::build_gaussian_generator(sys, *kappa_dimensionless, true)?,
        GeneratorChoice::MacroBath { alpha_dimensionless, bath } => generators::build_mb_generator(sys, &build_bath(bath, sys)?, *alpha_dimensionless, true)?,
        GeneratorChoice::Davies => {
            let beta = sys.beta;
            generators::build_davies(sys, |nu| generators::davies_default_rate(beta, nu))?
        }
    })
}

fn run_mlsi(cfg: &ExperimentConfig, gen: &GeneratorChoice, n_probes: usize) -> Result<Outcome, CliError> {
    let sys = build_system(cfg)?;
    let g = build_generator(&sys, gen)?;
    let kms = analysis::kms_symmetry_residual(&g.superop, &sys.gibbs.rho)?;
    let gap = analysis::generator_gap(&g)?;
    let est = analysis::mlsi_estimate(&g, n_probes, seed(cfg))?;
    let mut o = Outcome::new(json!({ "mlsi": to_value(&est), "gap": to_value(&gap), "kms_residual": kms }));
    if kms > KMS_TOL {
        o.violations.push(Violation::measured("kms_symmetry", "generator", kms, KMS_TOL));
    }
    o.put("mlsi_upper_bound", est.value);
    o.put("gap", gap.gap);
    o.put("kms_residual", kms);
    Ok(o)
}

fn run_validate() -> Outcome {
    let models = suite::suite_models();
    let outcomes: Vec<suite::CheckOutcome> = suite::CHECK_NAMES.iter().map(|n| suite::run_check(n, Some(&models)).expect("known check")).collect();
    let mut o = Outcome::new(to_value(&outcomes));
    for c in &outcomes {
        if !c.passed {
            o.violations.push(Violation::new(&c.name, c.detail.clone()));
        }
    }
    o.put("checks", outcomes.len());
    o.put("passed", outcomes.iter().filter(|c| c.passed).count());
    let rows: Vec<Vec<String>> = outcomes.iter().map(|c| vec![c.name.clone(), c.passed.to_string()]).collect();
    o.files.push(("checks.csv".into(), csv(&["check", "passed"], &rows)));
    o
}

fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match &cfg.experiment {
        Experiment::GapSweep { sweep } => run_gap_sweep(cfg, sweep),
        Experiment::Monotonicity { kappa_grid_dimensionless, alpha_grid_dimensionless, bath } => {
            run_monotonicity(cfg, kappa_grid_dimensionless, alpha_grid_dimensionless.as_deref(), bath)
        }
        Experiment::RiScaling {
            alpha_grid_dimensionless,
            kappa_dimensionless,
            t_pulse_over_kappa_beta_dimensionless,
            max_phase_per_step_dimensionless,
            omega,
        } => run_ri_scaling(
            cfg,
            alpha_grid_dimensionless,
            *kappa_dimensionless,
            *t_pulse_over_kappa_beta_dimensionless,
            *max_phase_per_step_dimensionless,
            omega,
        ),
        Experiment::RiFixedPoint { alpha_dimensionless, kappa_grid_dimensionless, epsilon_dimensionless, t_pulse_over_kappa_beta_dimensionless } => run_ri_fixed_point(
            cfg,
            *alpha_dimensionless,
            kappa_grid_dimensionless,
            *epsilon_dimensionless,
            *t_pulse_over_kappa_beta_dimensionless,
        ),
        Experiment::MbDemo { alpha_dimensionless, t_max_time, n_time_points, bath } => {
            run_mb_demo(cfg, *alpha_dimensionless, *t_max_time, *n_time_points, bath)
        }
        Experiment::DaviesCompare { alpha_grid_dimensionless, t_max_time, n_time_points, n_random_probes, bath } => {
            run_davies_compare(cfg, alpha_grid_dimensionless, *t_max_time, *n_time_points, *n_random_probes, bath)
        }
        Experiment::Mlsi { generator, n_probes } => run_mlsi(cfg, generator, *n_probes),
        Experiment::Validate {} => Ok(run_validate()),
    }
}

pub fn write_violations(out_dir: &Path, violations: &[Violation]) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("violations.json"), &violations)?;
    Ok(())
}

/// Runs the experiment and writes `report.json` plus its data files into `out_dir`.
/// Invariant failures still write every output before returning the error.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let o = match execute(cfg) {
        Ok(o) => o,
        Err(CliError::Invariant(v)) => {
            write_violations(out_dir, &v)?;
            return Err(CliError::Invariant(v));
        }
        Err(e) => return Err(e),
    };
    std::fs::create_dir_all(out_dir)?;
    let report = RunReport {
        experiment: cfg.experiment.kind().into(),
        config: cfg.clone(),
        summary: o.summary,
        result: o.result,
        files: o.files.iter().map(|(n, _)| n.clone()).collect(),
        violations: o.violations.clone(),
    };
    for (name, body) in &o.files {
        std::fs::write(out_dir.join(name), body)?;
    }
    write_json(&out_dir.join("report.json"), &report)?;
    let stale = out_dir.join("violations.json");
    if o.violations.is_empty() {
        if stale.exists() {
            std::fs::remove_file(stale)?;
        }
        Ok(report)
    } else {
        write_json(&stale, &o.violations)?;
        Err(CliError::Invariant(o.violations))
    }
}
