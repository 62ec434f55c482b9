//! KMS-symmetric Lindbladian families: Gaussian-filtered, macroscopic-bath,
//! Davies, and the rescaled Gaussian generator matching the repeated-interaction channel.
//!
//! Every family is written as
//! `L(ρ) = −i[B,ρ] + Σ_a Σ_{ν1,ν2} Λ^a_{ν1ν2} (A^a_{ν1} ρ A^a_{ν2}† − ½{A^a_{ν2}† A^a_{ν1}, ρ})`
//! with `B = Σ_a Σ_{ν1,ν2} tanh(−β(ν1−ν2)/4)/(2i) Λ^a_{ν1ν2} A^a_{ν2}† A^a_{ν1}`.
//! Assembly happens in the eigenbasis of `H`, where `A_ν` is `A` masked to the
//! entries whose Bohr frequency is `ν`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{self, BohrGrid, GibbsState, Hamiltonian, JumpSet, ModelError};
use crate::numlin::{self, c, eigh, kron, CMat, LinalgError, Picture, SuperOp, C64, I, ZERO};
use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("kappa must be at least 1, got {kappa}")]
    KappaBelowOne { kappa: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coefficient matrix of jump {jump} is not PSD (min eigenvalue {min_eigenvalue:e})")]
    NonPositiveCoeffMatrix { jump: usize, min_eigenvalue: f64 },
    #[error("quadrature route disagrees with closed form by {difference:e}")]
    QuadratureDivergence { difference: f64 },
    #[error("bath amplitude violates the KMS tilt relation (residual {residual:e})")]
    KMSViolation { residual: f64 },
    #[error("Bohr frequency {nu} outside bath grid range ±{max}")]
    FrequencyOutOfBathRange { nu: f64, max: f64 },
    #[error("Davies rates violate the KMS condition (residual {residual:e})")]
    KMSConditionViolation { residual: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_kappa(kappa: f64) -> Result<(), GenError> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(GenError::KappaBelowOne { kappa });
    }
    Ok(())
}

/// `2 − 1/κ²`.
pub fn kappa_c(kappa: f64) -> f64 {
    2.0 - 1.0 / (kappa * kappa)
}

/// Prefactor `2π √((2 − 1/κ²)/2)` of the Gaussian coefficient table.
pub fn gaussian_prefactor(kappa: f64) -> f64 {
    2.0 * PI * (kappa_c(kappa) / 2.0).sqrt()
}

/// `Λ^{G,κ}_{ν1ν2}` in closed form.
pub fn lambda_gaussian(kappa: f64, beta: f64, nu1: f64, nu2: f64) -> Result<f64, GenError> {
    check_kappa(kappa)?;
    let (b1, b2) = (beta * nu1, beta * nu2);
    let s = b1 + b2 + 2.0;
    Ok(gaussian_prefactor(kappa) * (-kappa * kappa * (b1 - b2).powi(2) / 8.0).exp() * (-s * s / 16.0).exp())
}

/// `γ_κ(ω) = exp(−(βω+1)²/(2(2−1/κ²)))`.
pub fn gamma_kappa(kappa: f64, beta: f64, omega: f64) -> f64 {
    let x = beta * omega + 1.0;
    (-x * x / (2.0 * kappa_c(kappa))).exp()
}

/// `γ_κ(−ω)/γ_κ(ω) = exp(2βω/(2−1/κ²))`.
pub fn gamma_kappa_reflection(kappa: f64, beta: f64, omega: f64) -> f64 {
    (2.0 * beta * omega / kappa_c(kappa)).exp()
}

/// Time-domain filter `f_κ(t) = e^{−t²/(κβ)²} / ((π/2)^{1/4} (κβ)^{1/2})`, unit `L²` norm.
pub fn filter_time(kappa: f64, beta: f64, t: f64) -> f64 {
    let w = kappa * beta;
    (-(t / w).powi(2)).exp() / ((PI / 2.0).powf(0.25) * w.sqrt())
}

/// Fourier transform `f̂_κ(ω) = ∫ f_κ(t) e^{−iωt} dt`.
pub fn filter_freq(kappa: f64, beta: f64, omega: f64) -> f64 {
    let w = kappa * beta;
    PI.sqrt() * w / ((PI / 2.0).powf(0.25) * w.sqrt()) * (-(omega * w).powi(2) / 4.0).exp()
}

/// Sampling density of the ancilla frequency: Gaussian with mean `−1/β` and std `√(2−1/κ²)/β`.
pub fn sampling_density(kappa: f64, beta: f64, omega: f64) -> f64 {
    beta / (2.0 * PI * kappa_c(kappa)).sqrt() * gamma_kappa(kappa, beta, omega)
}

/// `γ(ω) = (g(ω) + g(−ω)) / (1 + e^{βω})`.
pub fn gamma_ri(kappa: f64, beta: f64, omega: f64) -> Result<f64, GenError> {
    check_kappa(kappa)?;
    if !(beta > 0.0) {
        return Err(GenError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let g = sampling_density(kappa, beta, omega) + sampling_density(kappa, beta, -omega);
    // 1/(1+e^x) written to avoid overflow
    let x = beta * omega;
    let fermi = if x > 0.0 { (-x).exp() / (1.0 + (-x).exp()) } else { 1.0 / (1.0 + x.exp()) };
    Ok(g * fermi)
}

/// `β / (‖𝒜‖_G √(2π(2−1/κ²)))`.
pub fn ri_scaling_factor(kappa: f64, beta: f64, norm_g: f64) -> f64 {
    beta / (norm_g * (2.0 * PI * kappa_c(kappa)).sqrt())
}

/// Default Davies rates `e^{−(βν+1)²/4}`.
pub fn davies_default_rate(beta: f64, nu: f64) -> f64 {
    let x = beta * nu + 1.0;
    (-x * x / 4.0).exp()
}

/// `T(α) = √(2 + 3Γτ) / (2αΓ)`.
pub fn observation_time(alpha: f64, gamma: f64, tau: f64) -> f64 {
    (2.0 + 3.0 * gamma * tau).sqrt() / (2.0 * alpha * gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gaussian { kappa: f64 },
    GaussianQuadrature { kappa: f64, n_nodes: usize },
    MacroBath { alpha: f64, t_obs: f64 },
    Davies,
    RiScaled { kappa: f64, factor: f64 },
}

/// Hamiltonian, jumps, Bohr grid and Gibbs state shared by all generators on one system.
#[derive(Debug)]
pub struct System {
    pub hamiltonian: Hamiltonian,
    pub jumps: JumpSet,
    pub grid: BohrGrid,
    pub beta: f64,
    pub gibbs: GibbsState,
    /// Jump operators in the eigenbasis of `H`.
    pub eig_jumps: Vec<CMat>,
    /// Per jump, whether `A^a_ν ≠ 0` for each grid frequency.
    pub active: Vec<Vec<bool>>,
}

impl System {
    pub fn new(hamiltonian: Hamiltonian, jumps: JumpSet, beta: f64) -> Result<Arc<Self>, GenError> {
        let grid = BohrGrid::with_default_tol(&hamiltonian)?;
        Self::with_grid(hamiltonian, jumps, beta, grid)
    }

    pub fn with_grid(hamiltonian: Hamiltonian, jumps: JumpSet, beta: f64, grid: BohrGrid) -> Result<Arc<Self>, GenError> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(GenError::InvalidParameter(format!("beta must be finite and nonnegative, got {beta}")));
        }
        let d = hamiltonian.dim();
        if jumps.ops.iter().any(|a| a.nrows() != d) {
            return Err(GenError::InvalidParameter("jump dimension differs from Hamiltonian".into()));
        }
        let gibbs = models::gibbs_state(&hamiltonian, beta);
        let eig_jumps: Vec<CMat> = jumps.ops.iter().map(|a| models::to_eigenbasis(&hamiltonian, a)).collect();
        let scale = eig_jumps.iter().map(numlin::max_abs).fold(0.0, f64::max);
        let active = eig_jumps
            .iter()
            .map(|a| {
                let mut act = vec![false; grid.len()];
                for i in 0..d {
                    for j in 0..d {
                        if a[(i, j)].norm() > 1e-13 * scale {
                            act[grid.id(i, j)] = true;
                        }
                    }
                }
                act
            })
            .collect();
        Ok(Arc::new(System { hamiltonian, jumps, grid, beta, gibbs, eig_jumps, active }))
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Bohr components of jump `a` in the computational basis, aligned with `grid.freqs`.
    pub fn components(&self, a: usize) -> Vec<CMat> {
        models::bohr_components(&self.hamiltonian, &self.grid, &self.jumps.ops[a])
    }

    /// Largest |ν| among frequencies where some jump has a nonzero component.
    pub fn max_active_freq(&self) -> f64 {
        let mut m: f64 = 0.0;
        for act in &self.active {
            for (k, &on) in act.iter().enumerate() {
                if on {
                    m = m.max(self.grid.freqs[k].abs());
                }
            }
        }
        m
    }
}

/// Coefficients `Λ^a_{ν1ν2}` on the Bohr grid of a system.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    pub beta: f64,
    pub freqs: Vec<f64>,
    /// One `n_freq × n_freq` table per jump.
    pub tables: Vec<CMat>,
    pub family: Family,
}

impl CoeffTable {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(sys: &System, family: Family, f: F) -> Self {
        let freqs = sys.grid.freqs.clone();
        let n = freqs.len();
        let t = CMat::from_fn(n, n, |i, j| c(f(freqs[i], freqs[j])));
        CoeffTable { beta: sys.beta, freqs, tables: vec![t; sys.jumps.len()], family }
    }

    pub fn scaled(&self, s: f64) -> Self {
        CoeffTable {
            beta: self.beta,
            freqs: self.freqs.clone(),
            tables: self.tables.iter().map(|t| t.scale(s)).collect(),
            family: self.family.clone(),
        }
    }

    /// Largest relative violation of `Λ_{ν1ν2} = conj(Λ_{−ν1,−ν2}) e^{−β(ν1+ν2)/2}`.
    pub fn kms_residual(&self) -> f64 {
        let n = self.freqs.len();
        let mut worst: f64 = 0.0;
        for t in &self.tables {
            for i in 0..n {
                for j in 0..n {
                    let lhs = t[(i, j)];
                    let rhs = t[(n - 1 - i, n - 1 - j)].conj() * (-self.beta * (self.freqs[i] + self.freqs[j]) / 2.0).exp();
                    let scale = lhs.norm().max(rhs.norm());
                    if scale > 1e-280 {
                        worst = worst.max((lhs - rhs).norm() / scale);
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub superop: SuperOp,
    /// Coherent part `B` in the computational basis.
    pub coherent: CMat,
    pub coeffs: CoeffTable,
    pub system: Arc<System>,
    pub family: Family,
}

impl Generator {
    pub fn gibbs(&self) -> &GibbsState {
        &self.system.gibbs
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.system.hamiltonian
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Positive rescaling of the whole generator.
    pub fn scaled(&self, s: f64) -> Generator {
        Generator {
            superop: self.superop.scaled(s),
            coherent: self.coherent.scale(s),
            coeffs: self.coeffs.scaled(s),
            system: self.system.clone(),
            family: self.family.clone(),
        }
    }

    /// `‖L(ρ_β)‖₁`.
    pub fn fixed_point_residual(&self) -> f64 {
        numlin::trace_norm(&self.superop.apply(&self.system.gibbs.rho))
    }

    pub fn to_dump(&self) -> GeneratorDump {
        GeneratorDump::new(&self.superop, self.family.clone(), self.system.beta)
    }
}

/// Portable dump of a superoperator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDump {
    pub dim: usize,
    pub family: Option<Family>,
    pub beta: f64,
    /// Nonzero entries as `(row, col, re, im)`.
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl GeneratorDump {
    pub fn new(l: &SuperOp, family: Family, beta: f64) -> Self {
        Self::from_superop(l, Some(family), beta)
    }

    pub fn from_superop(l: &SuperOp, family: Option<Family>, beta: f64) -> Self {
        let n = l.matrix.nrows();
        let mut entries = Vec::new();
        for col in 0..n {
            for row in 0..n {
                let z = l.matrix[(row, col)];
                if z != ZERO {
                    entries.push((row, col, z.re, z.im));
                }
            }
        }
        GeneratorDump { dim: l.dim(), family, beta, entries }
    }

    pub fn to_superop(&self) -> SuperOp {
        let n = self.dim * self.dim;
        let mut m = CMat::zeros(n, n);
        for &(r, c_, re, im) in &self.entries {
            m[(r, c_)] = C64::new(re, im);
        }
        SuperOp::new(m, Picture::Schrodinger)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dump serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Assembles the superoperator and coherent part from per-jump coefficient tables.
pub fn assemble(sys: &Arc<System>, coeffs: CoeffTable, with_coherent: bool) -> Result<Generator, GenError> {
    let d = sys.dim();
    let g = &sys.grid;
    let beta = sys.beta;
    let n = g.len();
    for (a, t) in coeffs.tables.iter().enumerate() {
        let act: Vec<usize> = (0..n).filter(|&k| sys.active[a][k]).collect();
        if act.is_empty() {
            continue;
        }
        let sub = CMat::from_fn(act.len(), act.len(), |i, j| t[(act[i], act[j])]);
        let (vals, _) = eigh(&sub);
        let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if vals[0] < -1e-10 * top.max(1e-300) {
            return Err(GenError::NonPositiveCoeffMatrix { jump: a, min_eigenvalue: vals[0] });
        }
    }

    let dd = d * d;
    let mut l = CMat::zeros(dd, dd);
    let mut gmat = CMat::zeros(d, d);
    let mut bmat = CMat::zeros(d, d);
    let tanh_table = CMat::from_fn(n, n, |i, j| c((-beta * (g.freqs[i] - g.freqs[j]) / 4.0).tanh()) / (I * 2.0));
    for (a, at) in sys.eig_jumps.iter().enumerate() {
        let t = &coeffs.tables[a];
        for i in 0..d {
            for k in 0..d {
                let aik = at[(i, k)];
                if aik == ZERO {
                    continue;
                }
                let id_ik = g.id(i, k);
                for j in 0..d {
                    for l_ in 0..d {
                        let ajl = at[(j, l_)];
                        if ajl == ZERO {
                            continue;
                        }
                        l[(i + d * j, k + d * l_)] += t[(id_ik, g.id(j, l_))] * aik * ajl.conj();
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let mut sg = ZERO;
                let mut sb = ZERO;
                for k in 0..d {
                    let p = at[(k, i)].conj() * at[(k, j)];
                    if p == ZERO {
                        continue;
                    }
                    let (kj, ki) = (g.id(k, j), g.id(k, i));
                    let lam = t[(kj, ki)] * p;
                    sg += lam;
                    sb += lam * tanh_table[(kj, ki)];
                }
                gmat[(i, j)] += sg;
                bmat[(i, j)] += sb;
            }
        }
    }
    if !with_coherent {
        bmat.fill(ZERO);
    }
    let eye = CMat::identity(d, d);
    l -= (kron(&eye, &gmat) + kron(&gmat.transpose(), &eye)).scale(0.5);
    l += numlin::coherent_superop(&bmat);

    let u = &sys.hamiltonian.eigvecs;
    let w = kron(&u.conjugate(), u);
    let l_comp = &w * l * w.adjoint();
    let coherent = u * bmat * u.adjoint();
    let family = coeffs.family.clone();
    Ok(Generator {
        superop: SuperOp::new(l_comp, Picture::Schrodinger),
        coherent: (&coherent + coherent.adjoint()).scale(0.5),
        coeffs,
        system: sys.clone(),
        family,
    })
}

pub fn build_gaussian_generator(sys: &Arc<System>, kappa: f64, with_coherent: bool) -> Result<Generator, GenError> {
    check_kappa(kappa)?;
    let beta = sys.beta;
    let table = CoeffTable::from_fn(sys, Family::Gaussian { kappa }, |n1, n2| {
        lambda_gaussian(kappa, beta, n1, n2).expect("kappa checked")
    });
    assemble(sys, table, with_coherent)
}

/// Gaussian generator assembled from the ω-integral with Gauss–Hermite nodes
/// matched to the ancilla sampling density.
/// Independent of [`assemble`]: jumps `Â(ω) = Σ_ν f̂(ω−ν) A_ν` are formed explicitly.
pub fn gaussian_generator_quadrature_superop(sys: &Arc<System>, kappa: f64, n_nodes: usize) -> Result<(SuperOp, CMat), GenError> {
    check_kappa(kappa)?;
    if n_nodes < 16 {
        return Err(GenError::InvalidParameter(format!("n_nodes must be at least 16, got {n_nodes}")));
    }
    let beta = sys.beta;
    if !(beta > 0.0) {
        return Err(GenError::InvalidParameter("quadrature route needs beta > 0".into()));
    }
    // nodes follow the sampling density g = β γ_κ / √(2πc), so γ_κ/g is constant
    let cc = kappa_c(kappa);
    let nodes = quad::normal_nodes(n_nodes, -1.0 / beta, cc.sqrt() / beta);
    let ratio = (2.0 * PI * cc).sqrt() / beta;
    let d = sys.dim();
    let comps: Vec<Vec<CMat>> = (0..sys.jumps.len()).map(|a| sys.components(a)).collect();
    let freqs = &sys.grid.freqs;
    let mut jumps = Vec::new();
    let mut lam_q = CMat::zeros(freqs.len(), freqs.len());
    for &(w, wt) in &nodes {
        let weight = wt * ratio;
        let fh: Vec<f64> = freqs.iter().map(|nu| filter_freq(kappa, beta, w - nu)).collect();
        for i in 0..freqs.len() {
            for j in 0..freqs.len() {
                lam_q[(i, j)] += c(weight * fh[i] * fh[j]);
            }
        }
        for comp in &comps {
            let mut ah = CMat::zeros(d, d);
            for (k, m) in comp.iter().enumerate() {
                ah += m.scale(fh[k]);
            }
            jumps.push((ah, weight));
        }
    }
    let mut b = CMat::zeros(d, d);
    for comp in &comps {
        for (i, n1) in freqs.iter().enumerate() {
            for (j, n2) in freqs.iter().enumerate() {
                let f = (-beta * (n1 - n2) / 4.0).tanh() / 2.0;
                b += (comp[j].adjoint() * &comp[i]) * (lam_q[(i, j)] * c(f) * (-I));
            }
        }
    }
    let b = (&b + b.adjoint()).scale(0.5);
    Ok((numlin::superop_from_gkls(&b, &jumps)?, b))
}

/// Quadrature cross-check of [`build_gaussian_generator`]; errors when the
/// quadrature route with doubled nodes disagrees with the closed form by more than 1e-6.
pub fn build_gaussian_generator_quadrature(sys: &Arc<System>, kappa: f64, n_nodes: usize) -> Result<Generator, GenError> {
    let closed = build_gaussian_generator(sys, kappa, true)?;
    let (l, b) = gaussian_generator_quadrature_superop(sys, kappa, n_nodes)?;
    let (l2, _) = gaussian_generator_quadrature_superop(sys, kappa, 2 * n_nodes)?;
    let difference = numlin::max_abs_diff(&l2.matrix, &closed.superop.matrix);
    if difference > 1e-6 {
        return Err(GenError::QuadratureDivergence { difference });
    }
    Ok(Generator {
        superop: l,
        coherent: b,
        coeffs: closed.coeffs,
        system: sys.clone(),
        family: Family::GaussianQuadrature { kappa, n_nodes },
    })
}

pub fn build_davies<F: Fn(f64) -> f64>(sys: &Arc<System>, gamma_fn: F) -> Result<Generator, GenError> {
    let beta = sys.beta;
    let freqs = &sys.grid.freqs;
    let mut residual: f64 = 0.0;
    for &nu in freqs {
        let (gp, gm) = (gamma_fn(nu), gamma_fn(-nu));
        if !(gp >= 0.0) || !gp.is_finite() {
            return Err(GenError::KMSConditionViolation { residual: f64::INFINITY });
        }
        let rhs = (beta * nu).exp() * gp;
        let scale = gm.abs().max(rhs.abs());
        if scale > 1e-280 {
            residual = residual.max((gm - rhs).abs() / scale);
        }
    }
    if residual > 1e-10 {
        return Err(GenError::KMSConditionViolation { residual });
    }
    let table = CoeffTable::from_fn(sys, Family::Davies, |n1, n2| if n1 == n2 { gamma_fn(n1) } else { 0.0 });
    assemble(sys, table, false)
}

pub fn ri_effective_generator(sys: &Arc<System>, kappa: f64) -> Result<Generator, GenError> {
    let factor = ri_scaling_factor(kappa, sys.beta, sys.jumps.norm_g);
    let mut g = build_gaussian_generator(sys, kappa, true)?.scaled(factor);
    g.family = Family::RiScaled { kappa, factor };
    g.coeffs.family = g.family.clone();
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bath_family", rename_all = "snake_case")]
pub enum BathFamily {
    /// `ĝ(ω) = √γ0 e^{−ω²/(4σ_c²)} e^{−βω/4}`.
    GaussianTilted { gamma0: f64, sigma_c: f64 },
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub gamma0: f64,
    pub sigma_c_energy: f64,
    pub beta_inv_energy: f64,
    /// Largest |ν| the bath must cover.
    pub max_freq_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub beta: f64,
    pub family: BathFamily,
    /// Symmetric frequency grid.
    pub grid: Vec<f64>,
    pub ghat: Vec<f64>,
    pub grid_step: f64,
    /// `(∫|g(t)|dt)²` per jump.
    pub gamma_a: f64,
    /// `∫|t||g(t)|dt / ∫|g(t)|dt`.
    pub tau_a: f64,
    /// Largest relative violation of `ĝ(ν) = ĝ(−ν) e^{−βν/2}` on the grid.
    pub kms_residual: f64,
}

fn ghat_default(gamma0: f64, sigma_c: f64, beta: f64, w: f64) -> f64 {
    gamma0.sqrt() * (-w * w / (4.0 * sigma_c * sigma_c) - beta * w / 4.0).exp()
}

pub fn bath_make(p: &BathParams) -> Result<BathSpec, GenError> {
    if !(p.gamma0 > 0.0) || !(p.sigma_c_energy > 0.0) || !(p.beta_inv_energy >= 0.0) {
        return Err(GenError::InvalidParameter("gamma0 and sigma_c must be positive, beta nonnegative".into()));
    }
    let s = p.sigma_c_energy;
    bath_make_with_step(p, s / 32.0)
}

/// As [`bath_make`] with an explicit grid step.
pub fn bath_make_with_step(p: &BathParams, step: f64) -> Result<BathSpec, GenError> {
    let s = p.sigma_c_energy;
    let half = p.max_freq_energy.abs() + 8.0 * s;
    let m = (half / step).ceil() as i64;
    let grid: Vec<f64> = (-m..=m).map(|k| k as f64 * step).collect();
    let ghat = grid.iter().map(|&w| ghat_default(p.gamma0, s, p.beta_inv_energy, w)).collect();
    let family = BathFamily::GaussianTilted { gamma0: p.gamma0, sigma_c: s };
    finish_bath(p.beta_inv_energy, family, grid, ghat, step)
}

/// Bath from a tabulated amplitude on a symmetric uniform grid.
pub fn bath_from_table(beta: f64, grid: Vec<f64>, ghat: Vec<f64>) -> Result<BathSpec, GenError> {
    let n = grid.len();
    if n < 3 || ghat.len() != n || n % 2 == 0 {
        return Err(GenError::InvalidParameter("tabulated bath needs an odd number (≥3) of grid points".into()));
    }
    let step = grid[1] - grid[0];
    for k in 0..n {
        if (grid[k] + grid[n - 1 - k]).abs() > 1e-12 * step || (k > 0 && ((grid[k] - grid[k - 1]) - step).abs() > 1e-9 * step) {
            return Err(GenError::InvalidParameter("bath grid must be uniform and symmetric".into()));
        }
        if !(ghat[k] >= 0.0) {
            return Err(GenError::InvalidParameter(format!("negative bath amplitude at ω = {}", grid[k])));
        }
    }
    finish_bath(beta, BathFamily::Tabulated, grid, ghat, step)
}

fn finish_bath(beta: f64, family: BathFamily, grid: Vec<f64>, ghat: Vec<f64>, step: f64) -> Result<BathSpec, GenError> {
    let n = grid.len();
    let top = ghat.iter().cloned().fold(0.0, f64::max);
    let mut kms_residual: f64 = 0.0;
    for k in 0..n {
        let lhs = ghat[k];
        let rhs = ghat[n - 1 - k] * (-beta * grid[k] / 2.0).exp();
        kms_residual = kms_residual.max((lhs - rhs).abs() / top.max(lhs.max(rhs)));
    }
    if kms_residual > 1e-8 {
        return Err(GenError::KMSViolation { residual: kms_residual });
    }
    let (gamma_a, tau_a) = bath_timescales(&grid, &ghat, step);
    Ok(BathSpec { beta, family, grid, ghat, grid_step: step, gamma_a, tau_a, kms_residual })
}

/// `Γ = (∫|g|)²` and `τ = ∫|t||g| / ∫|g|` with `g(t) = (1/2π) ∫ ĝ(ω) e^{iωt} dω`
/// synthesized directly on composite Gauss–Legendre time nodes.
fn bath_timescales(grid: &[f64], ghat: &[f64], step: f64) -> (f64, f64) {
    let mass: f64 = ghat.iter().sum::<f64>() * step;
    let mean: f64 = grid.iter().zip(ghat).map(|(w, g)| w * g).sum::<f64>() * step / mass;
    let var: f64 = grid.iter().zip(ghat).map(|(w, g)| (w - mean).powi(2) * g).sum::<f64>() * step / mass;
    let width = var.sqrt().max(1e-3 * step);
    let t_max = 12.0 / width;
    let nodes = quad::composite_legendre(0.0, t_max, 0.5 / width, 8);
    let abs_g = |t: f64| {
        let z: C64 = grid
            .iter()
            .zip(ghat)
            .map(|(&w, &g)| C64::from_polar(g, w * t))
            .sum::<C64>()
            * (step / (2.0 * PI));
        z.norm()
    };
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    for &(t, w) in &nodes {
        let a = abs_g(t) + abs_g(-t);
        i0 += w * a;
        i1 += w * t * a;
    }
    (i0 * i0, i1 / i0)
}

impl BathSpec {
    pub fn max_freq(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// `ĝ(ω)`; analytic for the default family, linear interpolation otherwise.
    pub fn ghat_at(&self, w: f64) -> Result<f64, GenError> {
        let max = self.max_freq();
        if w.abs() > max * (1.0 + 1e-12) {
            return Err(GenError::FrequencyOutOfBathRange { nu: w, max });
        }
        Ok(match &self.family {
            BathFamily::GaussianTilted { gamma0, sigma_c } => ghat_default(*gamma0, *sigma_c, self.beta, w),
            BathFamily::Tabulated => {
                let x = (w - self.grid[0]) / self.grid_step;
                let k = (x.floor() as usize).min(self.grid.len() - 2);
                let f = x - k as f64;
                self.ghat[k] * (1.0 - f) + self.ghat[k + 1] * f
            }
        })
    }

    /// Analytic `(Γ_a, τ_a)` of the default family.
    pub fn analytic_timescales(&self) -> Option<(f64, f64)> {
        match &self.family {
            BathFamily::GaussianTilted { gamma0, sigma_c } => Some((
                gamma0 * (self.beta * self.beta * sigma_c * sigma_c / 8.0).exp(),
                1.0 / (sigma_c * PI.sqrt()),
            )),
            BathFamily::Tabulated => None,
        }
    }
}

/// Total bath rate `Γ = Σ_a Γ_a` over the jump set.
pub fn total_gamma(bath: &BathSpec, n_jumps: usize) -> f64 {
    bath.gamma_a * n_jumps as f64
}

/// Macroscopic-bath coefficient `e^{−T²(ν1−ν2)²/4} ĝ(ν1) ĝ(ν2)`.
pub fn lambda_mb(bath: &BathSpec, t_obs: f64, nu1: f64, nu2: f64) -> Result<f64, GenError> {
    Ok((-(t_obs * (nu1 - nu2)).powi(2) / 4.0).exp() * bath.ghat_at(nu1)? * bath.ghat_at(nu2)?)
}

pub fn mb_observation_time(sys: &System, bath: &BathSpec, alpha: f64) -> f64 {
    observation_time(alpha, total_gamma(bath, sys.jumps.len()), bath.tau_a)
}

pub fn build_mb_generator(sys: &Arc<System>, bath: &BathSpec, alpha: f64, with_coherent: bool) -> Result<Generator, GenError> {
    if !(alpha > 0.0) {
        return Err(GenError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if (bath.beta - sys.beta).abs() > 1e-14 * sys.beta.max(1.0) {
        return Err(GenError::InvalidParameter(format!("bath beta {} differs from system beta {}", bath.beta, sys.beta)));
    }
    let max = bath.max_freq();
    let nu_max = sys.grid.freqs.iter().cloned().fold(0.0, f64::max);
    if nu_max > max {
        return Err(GenError::FrequencyOutOfBathRange { nu: nu_max, max });
    }
    let t_obs = mb_observation_time(sys, bath, alpha);
    let gh: Vec<f64> = sys.grid.freqs.iter().map(|&nu| bath.ghat_at(nu)).collect::<Result<_, _>>()?;
    let freqs = sys.grid.freqs.clone();
    let n = freqs.len();
    let t = CMat::from_fn(n, n, |i, j| c((-(t_obs * (freqs[i] - freqs[j])).powi(2) / 4.0).exp() * gh[i] * gh[j]));
    let table = CoeffTable {
        beta: sys.beta,
        freqs,
        tables: vec![t; sys.jumps.len()],
        family: Family::MacroBath { alpha, t_obs },
    };
    assemble(sys, table, with_coherent)
}

/// Davies generator whose rates `ĝ(ν)²` match the small-α limit of the macroscopic-bath family.
pub fn build_davies_from_bath(sys: &Arc<System>, bath: &BathSpec) -> Result<Generator, GenError> {
    let max = bath.max_freq();
    if let Some(nu) = sys.grid.freqs.iter().find(|nu| nu.abs() > max) {
        return Err(GenError::FrequencyOutOfBathRange { nu: *nu, max });
    }
    build_davies(sys, |nu| bath.ghat_at(nu).map(|g| g * g).unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;
    use crate::models::{pauli_jump_set, random_kl_local, Term};
    use crate::numlin::{general_eigenvalues, max_abs, max_abs_diff, Pauli};

    fn system(h: Hamiltonian, beta: f64) -> Arc<System> {
        let n = h.n_qubits;
        System::new(h, pauli_jump_set(n), beta).unwrap()
    }

    fn zero_h(n: usize) -> Hamiltonian {
        Hamiltonian::from_terms(n, vec![], "zero".into())
    }

    fn sorted_real(m: &CMat) -> Vec<f64> {
        let mut e: Vec<f64> = general_eigenvalues(m).iter().map(|z| z.re).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn lambda_gaussian_values() {
        let v = lambda_gaussian(1.0, 0.7, 0.0, 0.0).unwrap();
        assert!((v - 3.460_120_711_332_32).abs() < 1e-12, "{v}");
        assert!((v - 2.0 * PI * 0.5f64.sqrt() * (-0.25f64).exp()).abs() < 1e-14);
        let a = lambda_gaussian(2.0, 1.0, 1.0, -0.5).unwrap();
        let b = lambda_gaussian(2.0, 1.0, -1.0, 0.5).unwrap();
        assert!((a - b * (-0.25f64).exp()).abs() < 1e-12);
        assert_eq!(lambda_gaussian(1.3, 0.4, 0.2, -0.9).unwrap(), lambda_gaussian(1.3, 0.4, -0.9, 0.2).unwrap());
        assert!(matches!(lambda_gaussian(0.9, 1.0, 0.0, 0.0), Err(GenError::KappaBelowOne { .. })));
    }

    #[test]
    fn lambda_gaussian_is_filtered_integral() {
        // Λ = ∫ γ_κ(ω) f̂(ω−ν1) f̂(ω−ν2) dω
        let (kappa, beta) = (1.7, 0.8);
        let nodes = quad::composite_legendre(-40.0, 40.0, 0.05, 8);
        for &(n1, n2) in &[(0.0, 0.0), (1.0, -0.5), (-2.0, 0.3)] {
            let s: f64 = nodes
                .iter()
                .map(|&(w, wt)| wt * gamma_kappa(kappa, beta, w) * filter_freq(kappa, beta, w - n1) * filter_freq(kappa, beta, w - n2))
                .sum();
            let exact = lambda_gaussian(kappa, beta, n1, n2).unwrap();
            assert!((s - exact).abs() < 1e-12 * exact.max(1e-3), "{s} {exact}");
        }
    }

    #[test]
    fn gamma_kappa_values() {
        assert_eq!(gamma_kappa(1.5, 2.0, -0.5), 1.0);
        let r = gamma_kappa(1.0, 1.0, -0.7) / gamma_kappa(1.0, 1.0, 0.7);
        assert!((r - 1.4f64.exp()).abs() < 1e-12);
        assert!((gamma_kappa_reflection(1.0, 1.0, 0.7) - 1.4f64.exp()).abs() < 1e-12);
        assert!((gamma_kappa(1e8, 1.0, 0.0) - (-0.25f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn filter_normalization_and_transform() {
        let (kappa, beta) = (2.0, 0.7);
        let nodes = quad::composite_legendre(-20.0, 20.0, 0.1, 8);
        let l2: f64 = nodes.iter().map(|&(t, w)| w * filter_time(kappa, beta, t).powi(2)).sum();
        assert!((l2 - 1.0).abs() < 1e-13);
        for om in [0.0, 0.4, -1.1] {
            let ft: f64 = nodes.iter().map(|&(t, w)| w * filter_time(kappa, beta, t) * (om * t).cos()).sum();
            assert!((ft - filter_freq(kappa, beta, om)).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_ri_kms_and_center() {
        for &(k, b, w) in &[(1.0, 1.0, 0.3), (2.5, 0.4, -1.7), (7.0, 2.0, 0.9)] {
            let lhs = gamma_ri(k, b, -w).unwrap();
            let rhs = (b * w).exp() * gamma_ri(k, b, w).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1e-300));
        }
        assert!((gamma_ri(1.3, 0.9, 0.0).unwrap() - sampling_density(1.3, 0.9, 0.0)).abs() < 1e-15);
        assert!(gamma_ri(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn scaling_factor_and_observation_time() {
        assert!((ri_scaling_factor(1.0, 1.0, 3.0) - 1.0 / (3.0 * (2.0 * PI).sqrt())).abs() < 1e-15);
        assert!((observation_time(1.0, 1.0, 0.0) - SQRT_2 / 2.0).abs() < 1e-15);
        assert!((observation_time(0.5, 2.0, 0.25) - 3.5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((observation_time(0.25, 2.0, 0.25) - 2.0 * observation_time(0.5, 2.0, 0.25)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_zero_hamiltonian_is_depolarizing() {
        for n in [1, 2] {
            let sys = system(zero_h(n), 0.6);
            let g = build_gaussian_generator(&sys, 1.5, true).unwrap();
            let lam = lambda_gaussian(1.5, 0.6, 0.0, 0.0).unwrap();
            let jumps: Vec<(CMat, f64)> = sys.jumps.ops.iter().map(|a| (a.clone(), lam)).collect();
            let oracle = numlin::superop_from_gkls(&CMat::zeros(1 << n, 1 << n), &jumps).unwrap();
            assert!(max_abs_diff(&g.superop.matrix, &oracle.matrix) < 1e-12);
            let e = sorted_real(&g.superop.matrix);
            assert!((e[e.len() - 2] + 4.0 * lam).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_beta_zero_is_depolarizing_for_any_h() {
        let h = random_kl_local(2, 2, 3, 1.0, 5).unwrap();
        let sys = system(h, 0.0);
        let g = build_gaussian_generator(&sys, 2.0, true).unwrap();
        let lam = lambda_gaussian(2.0, 0.0, 0.0, 0.0).unwrap();
        let jumps: Vec<(CMat, f64)> = sys.jumps.ops.iter().map(|a| (a.clone(), lam)).collect();
        let oracle = numlin::superop_from_gkls(&CMat::zeros(4, 4), &jumps).unwrap();
        assert!(max_abs_diff(&g.superop.matrix, &oracle.matrix) < 1e-12);
    }

    #[test]
    fn assembly_matches_explicit_bohr_sum() {
        // oracle: Σ_a Σ_{ν1ν2} Λ (A_ν1 ρ A_ν2† − ½{A_ν2†A_ν1, ρ}) − i[B, ρ] built from components
        let h = random_kl_local(2, 2, 3, 1.0, 8).unwrap();
        let sys = system(h, 0.9);
        let kappa = 1.4;
        let g = build_gaussian_generator(&sys, kappa, true).unwrap();
        let d = 4;
        let eye = CMat::identity(d, d);
        let mut l = CMat::zeros(d * d, d * d);
        let mut b = CMat::zeros(d, d);
        let f = &sys.grid.freqs;
        for a in 0..sys.jumps.len() {
            let comps = sys.components(a);
            for i in 0..f.len() {
                for j in 0..f.len() {
                    let lam = lambda_gaussian(kappa, 0.9, f[i], f[j]).unwrap();
                    let prod = comps[j].adjoint() * &comps[i];
                    l += (numlin::sandwich(&comps[i], &comps[j]) - (kron(&eye, &prod) + kron(&prod.transpose(), &eye)).scale(0.5)).scale(lam);
                    b += prod * c(lam * (-0.9 * (f[i] - f[j]) / 4.0).tanh() / 2.0) * (-I);
                }
            }
        }
        l += numlin::coherent_superop(&b);
        assert!(max_abs_diff(&g.coherent, &b) < 1e-12);
        assert!(max_abs_diff(&g.superop.matrix, &l) < 1e-12);
    }

    #[test]
    fn gaussian_fixed_point_random_two_qubit() {
        let h = random_kl_local(2, 2, 3, 1.0, 9).unwrap();
        let sys = system(h, 0.5);
        let g = build_gaussian_generator(&sys, 2.0, true).unwrap();
        assert!(g.fixed_point_residual() < 1e-9);
        assert!(g.coeffs.kms_residual() < 1e-10);
    }

    #[test]
    fn quadrature_route_agrees() {
        let h = random_kl_local(2, 2, 3, 1.0, 10).unwrap();
        let sys = system(h, 1.0);
        let closed = build_gaussian_generator(&sys, 1.5, true).unwrap();
        let (q64, _) = gaussian_generator_quadrature_superop(&sys, 1.5, 64).unwrap();
        let (q128, _) = gaussian_generator_quadrature_superop(&sys, 1.5, 128).unwrap();
        let diff = max_abs_diff(&q64.matrix, &closed.superop.matrix);
        assert!(diff < 1e-8, "{diff}");
        // 32 nodes only reach ~3e-6 on this model; convergence is checked one doubling later
        let dd = max_abs_diff(&q64.matrix, &q128.matrix);
        assert!(dd < 1e-10, "{dd}");
        let g = build_gaussian_generator_quadrature(&sys, 1.5, 64).unwrap();
        assert_eq!(g.family, Family::GaussianQuadrature { kappa: 1.5, n_nodes: 64 });
        // single qubit, H = 0
        let sys = system(zero_h(1), 1.0);
        let (q, _) = gaussian_generator_quadrature_superop(&sys, 1.5, 64).unwrap();
        let lam = lambda_gaussian(1.5, 1.0, 0.0, 0.0).unwrap();
        let jumps: Vec<(CMat, f64)> = sys.jumps.ops.iter().map(|a| (a.clone(), lam)).collect();
        let oracle = numlin::superop_from_gkls(&CMat::zeros(2, 2), &jumps).unwrap();
        assert!(max_abs_diff(&q.matrix, &oracle.matrix) < 1e-10);
    }

    #[test]
    fn gaussian_off_diagonal_suppression_at_large_kappa() {
        let h = random_kl_local(2, 2, 3, 1.0, 12).unwrap();
        let sys = system(h, 1.0);
        let kappa = 20.0;
        let g = build_gaussian_generator(&sys, kappa, true).unwrap();
        let f = &g.coeffs.freqs;
        let t = &g.coeffs.tables[0];
        let mut dmin = f64::INFINITY;
        for i in 0..f.len() {
            for j in 0..f.len() {
                if i != j {
                    dmin = dmin.min((f[i] - f[j]).abs());
                }
            }
        }
        let diag = (0..f.len()).map(|i| t[(i, i)].re).fold(0.0, f64::max);
        let bound = (-(kappa * dmin).powi(2) / 8.0 + 2.0).exp() * diag;
        for i in 0..f.len() {
            for j in 0..f.len() {
                if i != j {
                    assert!(t[(i, j)].norm() <= bound);
                }
            }
        }
    }

    #[test]
    fn davies_examples() {
        let hz = Hamiltonian::from_terms(1, vec![Term::new(1, &[(0, Pauli::Z)], 1.0)], "z".into());
        let jumps = JumpSet::new(vec![], vec![Pauli::X.matrix()]);
        let beta = 0.8;
        let sys = System::new(hz, jumps, beta).unwrap();
        let g = build_davies(&sys, |nu| (-beta * nu / 2.0).exp()).unwrap();
        assert!(g.fixed_point_residual() < 1e-9);
        assert_eq!(max_abs(&g.coherent), 0.0);
        let mut rng_nu = 0.37f64;
        for _ in 0..20 {
            rng_nu = (rng_nu * 7.31 + 0.113).fract() * 10.0 - 5.0;
            let lhs = davies_default_rate(beta, -rng_nu);
            let rhs = (beta * rng_nu).exp() * davies_default_rate(beta, rng_nu);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.max(rhs));
        }
        assert!(matches!(build_davies(&sys, |_| 1.0), Err(GenError::KMSConditionViolation { .. })));
    }

    #[test]
    fn davies_commuting_chain_block_structure() {
        // Pauli-string basis: the generator maps each string to strings with the same X/Y pattern
        let h = models::build_hamiltonian(&models::ModelSpec::CommutingZzChain { n_qubits: 3, j_energy: 1.0, g_z_energy: 0.3 }).unwrap();
        let sys = system(h, 1.0);
        let g = build_davies(&sys, |nu| davies_default_rate(1.0, nu)).unwrap();
        let basis: Vec<(usize, CMat)> = (0..64usize)
            .map(|m| {
                let ps: Vec<Pauli> = (0..3).map(|q| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(m >> (2 * q)) & 3]).collect();
                let flips = ps.iter().enumerate().filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y)).map(|(q, _)| 1 << q).sum();
                (flips, numlin::pauli_string(&ps))
            })
            .collect();
        for (fa, pa) in &basis {
            let out = g.superop.apply(pa);
            for (fb, pb) in &basis {
                if fa != fb {
                    let overlap = (pb.adjoint() * &out).trace().norm() / 8.0;
                    assert!(overlap < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mb_generator_checks() {
        let h = random_kl_local(2, 2, 3, 1.0, 13).unwrap();
        let sys = system(h, 1.0);
        let bath = bath_make(&BathParams { gamma0: 0.5, sigma_c_energy: 1.0, beta_inv_energy: 1.0, max_freq_energy: 6.0 }).unwrap();
        let g = build_mb_generator(&sys, &bath, 0.3, true).unwrap();
        assert!(g.fixed_point_residual() < 1e-9);
        assert!(g.coeffs.kms_residual() < 1e-10);
        // large α: rank one ĝ(ν1)ĝ(ν2)
        let g = build_mb_generator(&sys, &bath, 1e9, true).unwrap();
        let f = &g.coeffs.freqs;
        let t = &g.coeffs.tables[0];
        for i in 0..f.len() {
            for j in 0..f.len() {
                let r = bath.ghat_at(f[i]).unwrap() * bath.ghat_at(f[j]).unwrap();
                assert!((t[(i, j)].re - r).abs() < 1e-12 * r.max(1e-300));
            }
        }
        let narrow = bath_make(&BathParams { gamma0: 0.5, sigma_c_energy: 0.01, beta_inv_energy: 1.0, max_freq_energy: 0.0 }).unwrap();
        assert!(matches!(build_mb_generator(&sys, &narrow, 0.3, true), Err(GenError::FrequencyOutOfBathRange { .. })));
    }

    #[test]
    fn bath_defaults() {
        let p = BathParams { gamma0: 0.7, sigma_c_energy: 1.3, beta_inv_energy: 0.9, max_freq_energy: 4.0 };
        let b = bath_make(&p).unwrap();
        assert!(b.kms_residual < 1e-12);
        let (ga, ta) = b.analytic_timescales().unwrap();
        assert!((b.gamma_a - ga).abs() < 1e-10 * ga, "{} {}", b.gamma_a, ga);
        assert!((b.tau_a - ta).abs() < 1e-9 * ta, "{} {}", b.tau_a, ta);
        let b2 = bath_make_with_step(&p, p.sigma_c_energy / 64.0).unwrap();
        assert!((b2.gamma_a - b.gamma_a).abs() < 1e-6 * b.gamma_a);
        let b0 = bath_make(&BathParams { beta_inv_energy: 0.0, ..p.clone() }).unwrap();
        assert!(b0.tau_a.is_finite() && b0.gamma_a > 0.0);
        // tabulated bath without the tilt is rejected
        let grid: Vec<f64> = (-50..=50).map(|k| k as f64 * 0.1).collect();
        let flat: Vec<f64> = grid.iter().map(|w| (-w * w).exp()).collect();
        assert!(matches!(bath_from_table(1.0, grid.clone(), flat), Err(GenError::KMSViolation { .. })));
        let tilted: Vec<f64> = grid.iter().map(|w| (-w * w - w / 4.0).exp()).collect();
        let tb = bath_from_table(1.0, grid, tilted).unwrap();
        assert!((tb.ghat_at(0.05).unwrap() - 0.5 * (tb.ghat[50] + tb.ghat[51])).abs() < 1e-12);
        assert!(tb.ghat_at(5.5).is_err());
    }

    #[test]
    fn ri_effective_scaling() {
        let h = random_kl_local(1, 1, 1, 1.0, 2).unwrap();
        let sys = system(h, 1.0);
        let g = build_gaussian_generator(&sys, 1.0, true).unwrap();
        let r = ri_effective_generator(&sys, 1.0).unwrap();
        let f = 1.0 / (3.0 * (2.0 * PI).sqrt());
        assert!(max_abs_diff(&r.superop.matrix, &g.superop.matrix.scale(f)) < 1e-15);
        assert!(r.fixed_point_residual() < 1e-10);
    }

    #[test]
    fn dump_roundtrip() {
        let sys = system(random_kl_local(1, 1, 1, 1.0, 3).unwrap(), 1.0);
        let g = build_gaussian_generator(&sys, 2.0, true).unwrap();
        let dump = g.to_dump();
        let back = GeneratorDump::from_json(&dump.to_json()).unwrap();
        assert_eq!(back, dump);
        assert_eq!(back.to_superop().matrix, g.superop.matrix);
    }
}
