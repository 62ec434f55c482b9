//! The invariant suite: a fixed family of small random models and the checks
//! run on it. Every check is deterministic and returns a plain-text detail line
//! so repeated runs can be compared byte for byte.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, EntropyContext, Propagator, SweepFamily};
use crate::experiments_davies::{davies_compare, davies_limit_check, trajectory_probes};
use crate::generators::{
    bath_make, build_davies, build_gaussian_generator, build_mb_generator, davies_default_rate, lambda_gaussian, BathParams, BathSpec, Generator, System,
};
use crate::models::{build_hamiltonian, pauli_jump_set, random_kl_local, ModelSpec};
use crate::numlin;
use crate::ri_sim::{self, RIConfig};

pub const SUITE_SIZE: usize = 25;
pub const SUITE_BETAS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
pub const SUITE_KAPPA: f64 = 2.0;
pub const SUITE_ALPHA: f64 = 0.5;
pub const KAPPA_GRID: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0];
pub const ALPHA_GRID: [f64; 4] = [0.1, 0.2, 0.5, 1.0];

/// One suite model with its matched bath.
pub struct SuiteModel {
    pub label: String,
    pub system: Arc<System>,
    pub bath: BathSpec,
}

/// Default bath used with suite models: `γ0 = 0.1`, `σ_c = 1`.
pub fn default_bath(sys: &System) -> BathSpec {
    bath_make(&BathParams { gamma0: 0.1, sigma_c_energy: 1.0, beta_inv_energy: sys.beta, max_freq_energy: sys.max_active_freq() + 1.0 })
        .expect("default bath parameters are valid")
}

/// Model `i` has `1 + i mod 3` qubits, `β = SUITE_BETAS[i mod 4]` and a random
/// (2,3)-local Hamiltonian with seed `1000 + i`; jumps are all single-site Paulis.
pub fn suite_model(i: usize) -> SuiteModel {
    let n = 1 + i % 3;
    let beta = SUITE_BETAS[i % 4];
    let seed = 1000 + i as u64;
    let h = random_kl_local(n, n.min(2), 3, 1.0, seed).expect("valid suite parameters");
    let system = System::new(h, pauli_jump_set(n), beta).expect("suite system");
    let bath = default_bath(&system);
    SuiteModel { label: format!("n={n},beta={beta},seed={seed}"), system, bath }
}

pub fn suite_models() -> Vec<SuiteModel> {
    (0..SUITE_SIZE).map(suite_model).collect()
}

/// Gaussian (`κ = 2`), macroscopic-bath (`α = 0.5`) and Davies generators of a suite model.
pub fn suite_generators(m: &SuiteModel) -> Vec<Generator> {
    let sys = &m.system;
    let beta = sys.beta;
    vec![
        build_gaussian_generator(sys, SUITE_KAPPA, true).expect("gaussian"),
        build_mb_generator(sys, &m.bath, SUITE_ALPHA, true).expect("macro bath"),
        build_davies(sys, |nu| davies_default_rate(beta, nu)).expect("davies"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome { name: name.into(), passed, detail }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        CheckOutcome { name: name.into(), passed: false, detail: format!("error: {err}") }
    }
}

fn all_generators(models: &[SuiteModel]) -> Vec<Generator> {
    models.par_iter().flat_map_iter(|m| suite_generators(m).into_iter()).collect()
}

pub fn check_kms_fixed_point(models: &[SuiteModel]) -> CheckOutcome {
    let name = "kms_symmetry_and_fixed_point";
    let gens = all_generators(models);
    let rows: Vec<Result<(f64, f64), analysis::AnalysisError>> = gens
        .par_iter()
        .map(|g| Ok((analysis::kms_symmetry_residual(&g.superop, &g.system.gibbs.rho)?, g.fixed_point_residual())))
        .collect();
    let mut kms: f64 = 0.0;
    let mut fp: f64 = 0.0;
    for r in rows {
        match r {
            Ok((a, b)) => {
                kms = kms.max(a);
                fp = fp.max(b);
            }
            Err(e) => return CheckOutcome::failed(name, e),
        }
    }
    CheckOutcome::new(name, kms < 1e-8 && fp < 1e-9, format!("generators={} max_kms_residual={kms:e} max_fixed_point_residual={fp:e}", gens.len()))
}

pub fn check_monotonicity(models: &[SuiteModel]) -> CheckOutcome {
    let name = "gap_monotonicity";
    let mut bad = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let fams = [
            SweepFamily::GaussianKappa { kappa_grid: KAPPA_GRID.to_vec() },
            SweepFamily::MacroBathAlpha { alpha_grid: ALPHA_GRID.to_vec(), bath: m.bath.clone() },
        ];
        for f in &fams {
            match analysis::monotonicity_sweep(f, &m.system, None) {
                Ok(r) if r.monotonic => {}
                Ok(r) => bad.push(format!("model {i} {}", r.family)),
                Err(e) => return CheckOutcome::failed(name, e),
            }
        }
    }
    let detail = if bad.is_empty() { format!("models={} sweeps={} all monotone", models.len(), 2 * models.len()) } else { format!("non-monotone: {}", bad.join("; ")) };
    CheckOutcome::new(name, bad.is_empty(), detail)
}

/// Three-qubit commuting ZZ chain used by the Davies comparisons.
pub fn zz_chain_system() -> Arc<System> {
    let h = build_hamiltonian(&ModelSpec::CommutingZzChain { n_qubits: 3, j_energy: 1.0, g_z_energy: 0.3 }).expect("zz chain");
    System::new(h, pauli_jump_set(3), 1.0).expect("zz chain system")
}

pub fn check_davies_limit() -> CheckOutcome {
    let name = "davies_limit";
    match davies_limit_check(&zz_chain_system(), 20.0) {
        Ok(r) => CheckOutcome::new(
            name,
            r.relative_gap_difference < 1e-2 && r.suppression_ratio_residual < 1e-6 && r.n_ratio_pairs > 0,
            format!(
                "gap_gaussian={:e} gap_davies={:e} rel_diff={:e} ratio_residual={:e} pairs={}",
                r.gap_gaussian, r.gap_davies, r.relative_gap_difference, r.suppression_ratio_residual, r.n_ratio_pairs
            ),
        ),
        Err(e) => CheckOutcome::failed(name, e),
    }
}

/// Single qubit `H = Z/2` with Pauli jumps at `β = 1`.
pub fn qubit_system() -> Arc<System> {
    let h = build_hamiltonian(&ModelSpec::SingleQubit { omega0_energy: 1.0 }).expect("qubit");
    System::new(h, pauli_jump_set(1), 1.0).expect("qubit system")
}

pub const QUARTIC_ALPHAS: [f64; 4] = [0.02, 0.04, 0.08, 0.16];

pub fn check_quartic_channel_error() -> CheckOutcome {
    let name = "ri_quartic_channel_error";
    let cfg = RIConfig::new(QUARTIC_ALPHAS[0], 2.0, 1.0);
    match ri_sim::channel_vs_semigroup(&qubit_system(), &cfg, &QUARTIC_ALPHAS, 7) {
        Ok(r) => {
            let mut d = String::new();
            for (a, x) in r.alphas.iter().zip(&r.distances) {
                let _ = write!(d, "d({a})={x:e} ");
            }
            let s = r.fit.slope;
            let decreasing = r.distances.windows(2).all(|w| w[1] > w[0]);
            CheckOutcome::new(name, (3.5..=4.5).contains(&s) && decreasing, format!("{d}slope={s} ci95=[{},{}]", r.fit.slope_ci95.0, r.fit.slope_ci95.1))
        }
        Err(e) => CheckOutcome::failed(name, e),
    }
}

pub const FIXED_POINT_KAPPAS: [f64; 3] = [2.0, 4.0, 8.0];

pub fn check_fixed_point_kappa() -> CheckOutcome {
    let name = "ri_fixed_point_error_in_kappa";
    let sys = qubit_system();
    let mut errs = Vec::new();
    for &kappa in &FIXED_POINT_KAPPAS {
        let res = ri_sim::ri_channel(&sys, &RIConfig::new(0.05, kappa, 1.0)).and_then(|ch| ri_sim::channel_fixed_point(&ch.superop));
        match res {
            Ok(rho) => errs.push(numlin::trace_norm(&(&rho - &sys.gibbs.rho))),
            Err(e) => return CheckOutcome::failed(name, e),
        }
    }
    let detail = FIXED_POINT_KAPPAS.iter().zip(&errs).map(|(k, e)| format!("err(kappa={k})={e:e}")).collect::<Vec<_>>().join(" ");
    CheckOutcome::new(name, errs.windows(2).all(|w| w[1] < w[0]), detail)
}

pub fn check_mixing_bound(models: &[SuiteModel]) -> CheckOutcome {
    let name = "mixing_bound";
    let gens = all_generators(models);
    let rows: Vec<Result<(usize, f64), analysis::AnalysisError>> = gens
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let gap = analysis::generator_gap(g)?.gap;
            let rho = &g.system.gibbs.rho;
            let lin = g.system.gibbs.log_inv_norm;
            let t_grid: Vec<f64> = (0..50).map(|i| i as f64 * 10.0 / (49.0 * gap)).collect();
            let prop = Propagator::new(&g.superop, rho);
            let mut violations = 0;
            let mut slack = f64::INFINITY;
            for p in analysis::probe_states(rho, 10, 500 + k as u64) {
                for &t in &t_grid {
                    let dist = numlin::trace_norm(&(prop.evolve(t, &p) - rho));
                    let b = analysis::mixing_bound(gap, lin, t);
                    if dist > b + 1e-12 {
                        violations += 1;
                    }
                    slack = slack.min(b - dist);
                }
            }
            Ok((violations, slack))
        })
        .collect();
    let mut violations = 0;
    let mut slack = f64::INFINITY;
    for r in rows {
        match r {
            Ok((v, s)) => {
                violations += v;
                slack = slack.min(s);
            }
            Err(e) => return CheckOutcome::failed(name, e),
        }
    }
    CheckOutcome::new(name, violations == 0, format!("generators={} evaluations={} violations={violations} min_slack={slack:e}", gens.len(), gens.len() * 500))
}

/// Five-point central difference step for `dD/dt` is this factor times
/// `λ_min(σ)/‖L‖`, the time scale on which the smallest eigenvalue can move.
pub const ENTROPY_FD_STEP_FACTOR: f64 = 1e-2;
/// Probes closer than this (smallest eigenvalue) to the boundary of state space skip the
/// finite-difference comparison.
pub const ENTROPY_FD_MIN_EIGENVALUE: f64 = 1e-3;
/// `|fd − EP| ≤ 1e-6 · max(|EP|, floor)`.
pub const ENTROPY_FD_FLOOR: f64 = 1e-3;

pub fn check_entropy(models: &[SuiteModel]) -> CheckOutcome {
    let name = "entropy_production";
    let gens = all_generators(models);
    let rows: Vec<Result<(f64, f64, usize), analysis::AnalysisError>> = gens
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let rho = &g.system.gibbs.rho;
            let ctx = EntropyContext::new(rho)?;
            let prop = Propagator::new(&g.superop, rho);
            let lnorm = numlin::spectral_norm(&g.superop.matrix);
            let mut min_ep = f64::INFINITY;
            let mut worst_fd: f64 = 0.0;
            let mut n_fd = 0;
            for p in analysis::probe_states(rho, 200, 900 + k as u64) {
                let ep = ctx.entropy_production(&g.superop, &p)?;
                min_ep = min_ep.min(ep);
                let min_eig = numlin::eigh(&p).0[0];
                if n_fd < 20 && min_eig > ENTROPY_FD_MIN_EIGENVALUE {
                    let h = ENTROPY_FD_STEP_FACTOR * min_eig / lnorm;
                    let d = |t: f64| ctx.relative_entropy(&prop.evolve(t, &p));
                    let fd = -(d(-2.0 * h)? - 8.0 * d(-h)? + 8.0 * d(h)? - d(2.0 * h)?) / (12.0 * h);
                    worst_fd = worst_fd.max((fd - ep).abs() / ep.abs().max(ENTROPY_FD_FLOOR));
                    n_fd += 1;
                }
            }
            Ok((min_ep, worst_fd, n_fd))
        })
        .collect();
    let mut min_ep = f64::INFINITY;
    let mut worst: f64 = 0.0;
    let mut n_fd = 0;
    for r in rows {
        match r {
            Ok((a, b, n)) => {
                min_ep = min_ep.min(a);
                worst = worst.max(b);
                n_fd += n;
            }
            Err(e) => return CheckOutcome::failed(name, e),
        }
    }
    CheckOutcome::new(
        name,
        min_ep >= -1e-10 && worst < 1e-6 && n_fd > 0,
        format!("generators={} probes={} min_ep={min_ep:e} fd_comparisons={n_fd} worst_fd_rel={worst:e}", gens.len(), gens.len() * 200),
    )
}

pub const BETA_ZERO_KAPPAS: [f64; 3] = [1.0, 2.0, 5.0];

/// At `β = 0` every Bohr coefficient equals `Λ(0,0)` and the single-site Pauli
/// generator acts on Pauli strings as `−4Λ(0,0)·(weight)`, so the gap is `4Λ(0,0)`.
pub fn check_beta_zero_gap() -> CheckOutcome {
    let name = "beta_zero_gap";
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [1usize, 2] {
        for seed in [1u64, 2] {
            let h = random_kl_local(n, n.min(2), 3, 1.0, seed).expect("model");
            let sys = match System::new(h, pauli_jump_set(n), 0.0) {
                Ok(s) => s,
                Err(e) => return CheckOutcome::failed(name, e),
            };
            for &kappa in &BETA_ZERO_KAPPAS {
                let oracle = 4.0 * lambda_gaussian(kappa, 0.0, 0.0, 0.0).expect("kappa ≥ 1");
                let gap = build_gaussian_generator(&sys, kappa, true).map_err(analysis::AnalysisError::from).and_then(|g| analysis::generator_gap(&g));
                match gap {
                    Ok(g) => worst = worst.max((g.gap - oracle).abs() / oracle),
                    Err(e) => return CheckOutcome::failed(name, e),
                }
                cases += 1;
            }
        }
    }
    CheckOutcome::new(name, worst < 1e-10, format!("cases={cases} worst_rel_err={worst:e}"))
}

pub const TRAJECTORY_ALPHAS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

pub fn check_mb_davies_trajectories() -> CheckOutcome {
    let name = "mb_davies_trajectories";
    let sys = zz_chain_system();
    let bath = bath_make(&BathParams { gamma0: 0.05, sigma_c_energy: 2.0, beta_inv_energy: sys.beta, max_freq_energy: sys.max_active_freq() + 1.0 })
        .expect("bath");
    let davies_gap = match build_davies_from_bath_gap(&sys, &bath) {
        Ok(g) => g,
        Err(e) => return CheckOutcome::failed(name, e),
    };
    // fixed physical horizon: five relaxation times at the largest α
    let t_max = 5.0 / (TRAJECTORY_ALPHAS[0].powi(2) * davies_gap);
    let t_grid: Vec<f64> = (0..=50).map(|k| t_max * k as f64 / 50.0).collect();
    let probes = trajectory_probes(sys.dim(), 10, 11);
    match davies_compare(&sys, &bath, &TRAJECTORY_ALPHAS, &t_grid, &probes) {
        Ok(r) => {
            let slope = r.trajectory_fit.as_ref().map(|f| f.slope);
            let decreasing = r.trajectory_distances.windows(2).all(|w| w[1] < w[0]);
            let mut d = String::new();
            for (a, x) in r.alphas.iter().zip(&r.trajectory_distances) {
                let _ = write!(d, "d({a})={x:e} ");
            }
            CheckOutcome::new(
                name,
                decreasing && slope.is_some_and(|s| s >= 2.5) && r.suppression_ratio_residual < 1e-6,
                format!("{d}slope={} ratio_residual={:e} t_max={t_max:e}", slope.map_or("none".into(), |s| format!("{s}")), r.suppression_ratio_residual),
            )
        }
        Err(e) => CheckOutcome::failed(name, e),
    }
}

fn build_davies_from_bath_gap(sys: &Arc<System>, bath: &BathSpec) -> Result<f64, crate::experiments_davies::ExperimentError> {
    let d = crate::generators::build_davies_from_bath(sys, bath)?;
    Ok(analysis::generator_gap(&d)?.gap)
}

pub const CONVOLUTION_PAIRS: [(f64, f64); 10] =
    [(0.1, 0.2), (0.3, 0.8), (0.5, 0.6), (0.5, 2.0), (1.0, 1.5), (1.0, 4.0), (0.05, 1.0), (2.0, 2.5), (0.7, 0.71), (3.0, 10.0)];

pub fn check_convolution() -> CheckOutcome {
    let name = "convolution_identity";
    let mut res: f64 = 0.0;
    let mut l1: f64 = 0.0;
    for &(d, dp) in &CONVOLUTION_PAIRS {
        match analysis::convolution_identity_check(d, dp) {
            Ok(r) => {
                res = res.max(r.residual);
                l1 = l1.max((r.g_l1 - 1.0).abs());
            }
            Err(e) => return CheckOutcome::failed(name, e),
        }
    }
    CheckOutcome::new(name, res < 1e-10 && l1 < 1e-10, format!("pairs={} max_residual={res:e} max_l1_err={l1:e}", CONVOLUTION_PAIRS.len()))
}

/// Names of the suite checks in run order.
pub const CHECK_NAMES: [&str; 10] = [
    "kms_symmetry_and_fixed_point",
    "gap_monotonicity",
    "davies_limit",
    "ri_quartic_channel_error",
    "ri_fixed_point_error_in_kappa",
    "mixing_bound",
    "entropy_production",
    "beta_zero_gap",
    "mb_davies_trajectories",
    "convolution_identity",
];

/// Runs one check by name; `models` is built on demand when `None`.
pub fn run_check(name: &str, models: Option<&[SuiteModel]>) -> Option<CheckOutcome> {
    let owned;
    let models = match models {
        Some(m) => m,
        None => {
            owned = suite_models();
            &owned[..]
        }
    };
    Some(match name {
        "kms_symmetry_and_fixed_point" => check_kms_fixed_point(models),
        "gap_monotonicity" => check_monotonicity(models),
        "davies_limit" => check_davies_limit(),
        "ri_quartic_channel_error" => check_quartic_channel_error(),
        "ri_fixed_point_error_in_kappa" => check_fixed_point_kappa(),
        "mixing_bound" => check_mixing_bound(models),
        "entropy_production" => check_entropy(models),
        "beta_zero_gap" => check_beta_zero_gap(),
        "mb_davies_trajectories" => check_mb_davies_trajectories(),
        "convolution_identity" => check_convolution(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_shapes() {
        let m = suite_models();
        assert_eq!(m.len(), SUITE_SIZE);
        assert!(m.iter().all(|x| x.system.hamiltonian.n_qubits <= 3));
        let betas: Vec<f64> = m.iter().map(|x| x.system.beta).collect();
        for b in SUITE_BETAS {
            assert!(betas.contains(&b));
        }
        assert_eq!(suite_generators(&m[0]).len(), 3);
        assert!(run_check("nope", Some(&m)).is_none());
    }

    #[test]
    fn cheap_checks_pass() {
        for name in ["davies_limit", "beta_zero_gap", "convolution_identity"] {
            let o = run_check(name, Some(&[])).unwrap();
            assert!(o.passed, "{o:?}");
        }
    }
}
