//! Davies-limit comparisons on commuting Hamiltonians and macroscopic-bath
//! thermalization demos.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, EndToEndBound, KmsMetric, LogLogFit, Propagator};
use crate::generators::{
    build_davies, build_davies_from_bath, build_gaussian_generator, build_mb_generator, gaussian_prefactor, mb_observation_time, total_gamma, BathSpec,
    GenError, System,
};
use crate::numlin::{self, CMat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("Hamiltonian terms do not pairwise commute")]
    NotCommuting,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

fn require_commuting(sys: &System) -> Result<(), ExperimentError> {
    if sys.hamiltonian.is_commuting() {
        Ok(())
    } else {
        Err(ExperimentError::NotCommuting)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaviesLimitReport {
    pub kappa: f64,
    pub gap_gaussian: f64,
    pub gap_davies: f64,
    pub relative_gap_difference: f64,
    /// Worst relative mismatch of `Λ_κ(ν1,ν2)/Λ_κ'(ν1,ν2)` against the analytic Gaussian factor.
    pub suppression_ratio_residual: f64,
    pub n_ratio_pairs: usize,
}

/// Gaussian generator at large `κ` against the Davies generator with rates
/// `γ(ν) = 2π√((2−1/κ²)/2) e^{−(βν+1)²/4}` (the diagonal of the Gaussian table).
/// Off-diagonal suppression is checked between `κ` and `κ/2`.
pub fn davies_limit_check(sys: &Arc<System>, kappa: f64) -> Result<DaviesLimitReport, ExperimentError> {
    require_commuting(sys)?;
    let beta = sys.beta;
    let pref = gaussian_prefactor(kappa);
    let g = build_gaussian_generator(sys, kappa, true)?;
    let d = build_davies(sys, |nu| pref * (-(beta * nu + 1.0).powi(2) / 4.0).exp())?;
    let gap_gaussian = analysis::generator_gap(&g)?.gap;
    let gap_davies = analysis::generator_gap(&d)?.gap;

    let half = kappa / 2.0;
    let g2 = build_gaussian_generator(sys, half.max(1.0), false)?;
    let kh = half.max(1.0);
    let f = &sys.grid.freqs;
    let (t1, t2) = (&g.coeffs.tables[0], &g2.coeffs.tables[0]);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for i in 0..f.len() {
        for j in 0..f.len() {
            let (a, b) = (t1[(i, j)].re, t2[(i, j)].re);
            if i == j || a < 1e-250 || b < 1e-250 {
                continue;
            }
            let measured = (a / pref) / (b / gaussian_prefactor(kh));
            let dn = beta * (f[i] - f[j]);
            let analytic = (-(kappa * kappa - kh * kh) * dn * dn / 8.0).exp();
            worst = worst.max((measured / analytic - 1.0).abs());
            n += 1;
        }
    }
    Ok(DaviesLimitReport {
        kappa,
        gap_gaussian,
        gap_davies,
        relative_gap_difference: (gap_gaussian - gap_davies).abs() / gap_davies,
        suppression_ratio_residual: worst,
        n_ratio_pairs: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaviesCompareReport {
    pub alphas: Vec<f64>,
    pub observation_times: Vec<f64>,
    /// `max |Λ^MB_α − Λ^D|` over the coefficient tables.
    pub generator_distances: Vec<f64>,
    /// `sup_t max_σ ‖e^{tα²L^MB}σ − e^{tα²L^D}σ‖₁`.
    pub trajectory_distances: Vec<f64>,
    /// Worst relative mismatch of consecutive-α off-diagonal ratios against
    /// `e^{−(T(α)² − T(α')²)ν_−²/4}`.
    pub suppression_ratio_residual: f64,
    /// Largest `|Λ^MB_{νν} − ĝ(ν)²|` over all α.
    pub diagonal_residual: f64,
    /// Largest `‖L(ρ_β)‖₁` over the MB generators and Davies.
    pub fixed_point_residual: f64,
    pub davies_gap: f64,
    /// Fit of trajectory distance against α (`None` if some distance is zero).
    pub trajectory_fit: Option<LogLogFit>,
    pub monotone: bool,
    pub t_grid: Vec<f64>,
    pub n_probes: usize,
    pub model: String,
    pub beta: f64,
}

pub const DISTANCE_MONOTONE_TOL: f64 = 1e-8;

/// Macroscopic-bath generators over an α grid against the matched Davies generator.
pub fn davies_compare(sys: &Arc<System>, bath: &BathSpec, alpha_grid: &[f64], t_grid: &[f64], probes: &[CMat]) -> Result<DaviesCompareReport, ExperimentError> {
    require_commuting(sys)?;
    if alpha_grid.is_empty() || t_grid.is_empty() || probes.is_empty() {
        return Err(ExperimentError::InvalidArgument("alpha grid, t grid and probes must be nonempty".into()));
    }
    let davies = build_davies_from_bath(sys, bath)?;
    let rho = &sys.gibbs.rho;
    let davies_prop = Propagator::new(&davies.superop, rho);
    let davies_gap = analysis::generator_gap(&davies)?.gap;
    let f = &sys.grid.freqs;
    let nf = f.len();

    struct Point {
        t_obs: f64,
        table: CMat,
        gen_dist: f64,
        traj_dist: f64,
        diag_res: f64,
        fp_res: f64,
    }
    let points: Vec<Point> = alpha_grid
        .par_iter()
        .map(|&alpha| -> Result<Point, ExperimentError> {
            let mb = build_mb_generator(sys, bath, alpha, true)?;
            let t_obs = mb_observation_time(sys, bath, alpha);
            let mut gen_dist: f64 = 0.0;
            for (tm, td) in mb.coeffs.tables.iter().zip(&davies.coeffs.tables) {
                gen_dist = gen_dist.max(numlin::max_abs_diff(tm, td));
            }
            let table = mb.coeffs.tables[0].clone();
            let mut diag_res: f64 = 0.0;
            for (k, &nu) in f.iter().enumerate() {
                diag_res = diag_res.max((table[(k, k)].re - bath.ghat_at(nu)?.powi(2)).abs());
            }
            let prop = Propagator::new(&mb.superop, rho);
            let mut traj_dist: f64 = 0.0;
            for &t in t_grid {
                let s = alpha * alpha * t;
                for p in probes {
                    traj_dist = traj_dist.max(numlin::trace_norm(&(prop.evolve(s, p) - davies_prop.evolve(s, p))));
                }
            }
            Ok(Point { t_obs, table, gen_dist, traj_dist, diag_res, fp_res: mb.fixed_point_residual() })
        })
        .collect::<Result<_, _>>()?;

    let mut worst: f64 = 0.0;
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        for i in 0..nf {
            for j in 0..nf {
                let (x, y) = (a.table[(i, j)].re, b.table[(i, j)].re);
                if i == j || x < 1e-250 || y < 1e-250 {
                    continue;
                }
                let dn = f[i] - f[j];
                let analytic = (-(a.t_obs.powi(2) - b.t_obs.powi(2)) * dn * dn / 4.0).exp();
                worst = worst.max(((x / y) / analytic - 1.0).abs());
            }
        }
    }

    let generator_distances: Vec<f64> = points.iter().map(|p| p.gen_dist).collect();
    let trajectory_distances: Vec<f64> = points.iter().map(|p| p.traj_dist).collect();
    // both curves must not grow as α decreases
    let mut order: Vec<usize> = (0..alpha_grid.len()).collect();
    order.sort_by(|&i, &j| alpha_grid[j].total_cmp(&alpha_grid[i]));
    let monotone = order.windows(2).all(|w| {
        generator_distances[w[1]] <= generator_distances[w[0]] + DISTANCE_MONOTONE_TOL
            && trajectory_distances[w[1]] <= trajectory_distances[w[0]] + DISTANCE_MONOTONE_TOL
    });
    let trajectory_fit = if alpha_grid.len() >= 3 && trajectory_distances.iter().all(|&d| d > 0.0) {
        Some(analysis::loglog_fit(alpha_grid, &trajectory_distances)?)
    } else {
        None
    };
    Ok(DaviesCompareReport {
        alphas: alpha_grid.to_vec(),
        observation_times: points.iter().map(|p| p.t_obs).collect(),
        generator_distances,
        trajectory_distances,
        suppression_ratio_residual: worst,
        diagonal_residual: points.iter().map(|p| p.diag_res).fold(0.0, f64::max),
        fixed_point_residual: points.iter().map(|p| p.fp_res).fold(davies.fixed_point_residual(), f64::max),
        davies_gap,
        trajectory_fit,
        monotone,
        t_grid: t_grid.to_vec(),
        n_probes: probes.len(),
        model: sys.hamiltonian.model_tag.clone(),
        beta: sys.beta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// `‖σ(t) − ρ_β‖₁`.
    pub distance: f64,
    /// `‖ρ^{−1/4}(σ(t) − ρ_β)ρ^{−1/4}‖_HS`.
    pub kms_distance: f64,
    /// `2‖ρ_β^{−1}‖ e^{−λ α² t}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalizationDemo {
    pub alpha: f64,
    pub gap: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub certificate: EndToEndBound,
    pub model: String,
    pub beta: f64,
}

impl ThermalizationDemo {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,distance,kms_distance,bound\n");
        for p in &self.trajectory {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", p.t, p.distance, p.kms_distance, p.bound));
        }
        s
    }
}

/// Evolves `σ0` under `e^{tα²L^MB_α}` on `n_t + 1` equally spaced times in `[0, t_max]`,
/// with the analytic end-to-end certificate at `t_max`.
pub fn mb_thermalization_demo(sys: &Arc<System>, bath: &BathSpec, alpha: f64, t_max: f64, n_t: usize, sigma0: &CMat) -> Result<ThermalizationDemo, ExperimentError> {
    if !(t_max >= 0.0) || n_t == 0 {
        return Err(ExperimentError::InvalidArgument("t_max must be nonnegative and n_t positive".into()));
    }
    let mb = build_mb_generator(sys, bath, alpha, true)?;
    let gap = analysis::generator_gap(&mb)?.gap;
    let rho = &sys.gibbs.rho;
    let prop = Propagator::new(&mb.superop, rho);
    let metric = KmsMetric::new(rho)?;
    let lin = sys.gibbs.log_inv_norm;
    let trajectory = (0..=n_t)
        .map(|k| {
            let t = t_max * k as f64 / n_t as f64;
            let s = prop.evolve(alpha * alpha * t, sigma0);
            TrajectoryPoint {
                t,
                distance: numlin::trace_norm(&(&s - rho)),
                kms_distance: metric.weighted_distance(&s),
                bound: analysis::mixing_bound(gap, lin, alpha * alpha * t),
            }
        })
        .collect();
    let certificate = analysis::endtoend_bound(alpha, t_max, total_gamma(bath, sys.jumps.len()), bath.tau_a, sys.beta, gap, lin);
    Ok(ThermalizationDemo { alpha, gap, trajectory, certificate, model: sys.hamiltonian.model_tag.clone(), beta: sys.beta })
}

/// Default probe set for trajectory comparisons: computational basis states and
/// seeded random pure states.
pub fn trajectory_probes(d: usize, n_random: usize, seed: u64) -> Vec<CMat> {
    crate::ri_sim::distance_probes(d, n_random, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{bath_make, BathParams};
    use crate::models::{build_hamiltonian, pauli_jump_set, random_kl_local, ModelSpec};

    fn zz_chain() -> Arc<System> {
        let h = build_hamiltonian(&ModelSpec::CommutingZzChain { n_qubits: 3, j_energy: 1.0, g_z_energy: 0.3 }).unwrap();
        System::new(h, pauli_jump_set(3), 1.0).unwrap()
    }

    fn bath(sys: &System) -> BathSpec {
        bath_make(&BathParams { gamma0: 0.05, sigma_c_energy: 2.0, beta_inv_energy: sys.beta, max_freq_energy: sys.max_active_freq() + 1.0 }).unwrap()
    }

    #[test]
    fn rejects_noncommuting() {
        let sys = System::new(random_kl_local(2, 2, 3, 1.0, 2).unwrap(), pauli_jump_set(2), 1.0).unwrap();
        assert_eq!(davies_limit_check(&sys, 20.0).unwrap_err(), ExperimentError::NotCommuting);
        let b = bath(&sys);
        assert!(matches!(davies_compare(&sys, &b, &[0.5], &[1.0], &[sys.gibbs.rho.clone()]), Err(ExperimentError::NotCommuting)));
    }

    #[test]
    fn davies_limit_small() {
        let r = davies_limit_check(&zz_chain(), 20.0).unwrap();
        assert!(r.relative_gap_difference < 1e-2, "{r:?}");
        assert!(r.suppression_ratio_residual < 1e-6 && r.n_ratio_pairs > 0, "{r:?}");
    }

    #[test]
    fn compare_diagonals_and_fixed_points() {
        let sys = zz_chain();
        let b = bath(&sys);
        let probes = trajectory_probes(8, 4, 1);
        let r = davies_compare(&sys, &b, &[1.0, 0.5], &[0.0, 10.0, 100.0], &probes).unwrap();
        assert!(r.diagonal_residual < 1e-15, "{}", r.diagonal_residual);
        assert!(r.fixed_point_residual < 1e-9);
        assert!(r.suppression_ratio_residual < 1e-6);
        assert!(r.generator_distances[1] <= r.generator_distances[0]);
        assert!(r.trajectory_fit.is_none());
    }

    #[test]
    fn demo_examples() {
        let sys = zz_chain();
        let b = bath(&sys);
        let alpha = 0.5;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let sigma0 = analysis::random_pure_state(8, &mut rng);
        let demo = mb_thermalization_demo(&sys, &b, alpha, 2000.0, 40, &sigma0).unwrap();
        for w in demo.trajectory.windows(2) {
            assert!(w[1].kms_distance <= w[0].kms_distance + 1e-12);
        }
        let last = demo.trajectory.last().unwrap();
        assert!(last.distance <= last.bound + 1e-9);
        let flat = mb_thermalization_demo(&sys, &b, alpha, 100.0, 5, &sys.gibbs.rho).unwrap();
        assert!(flat.trajectory.iter().all(|p| p.distance < 1e-12));
        assert_eq!(demo.to_csv().lines().count(), 42);
        assert!(demo.certificate.total > 0.0);
    }
}
