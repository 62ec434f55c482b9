//! Repeated-interaction Gibbs sampling: the exact channel, its second-order
//! generator, channel-vs-semigroup scaling and fixed-point measurements.
//!
//! One step couples a jump `±A^a` to a single ancilla qubit with `H_B = −(ω/2)Z`
//! through `α f_κ(t) A ⊗ X` on `[−T, T]`. Everything is computed in the
//! eigenbasis of `H_S` and in the interaction picture of `H_S + H_B`, where the
//! lab-frame channel is `U_S ∘ Φ_I ∘ U_S` with `U_S = e^{−iH_S T}(·)e^{iH_S T}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, LogLogFit};
use crate::generators::{self, filter_freq, filter_time, kappa_c, GenError, Generator, System};
use crate::numlin::{self, c, kron, CMat, LinalgError, Picture, SuperOp, C64, I, ZERO};
use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("integrator not converged: step halving changed the propagator by {difference:e}")]
    NotConverged { difference: f64 },
    #[error("channel is not completely positive (min Choi eigenvalue {min_eigenvalue:e})")]
    CPViolation { min_eigenvalue: f64 },
    #[error("time quadrature not converged (difference {difference:e})")]
    QuadratureNotConverged { difference: f64 },
    #[error("fixed point is not unique (eigenvalue-1 multiplicity {multiplicity})")]
    NonUniqueFixedPoint { multiplicity: usize },
    #[error("thermalization index exceeded {max_steps} steps")]
    ThermalizationCap { max_steps: usize },
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaRule {
    /// Composite Gauss–Legendre over mean ± 6 std of the sampling density,
    /// panels no wider than the filter's frequency width.
    CompositeLegendre,
    /// Gauss–Hermite nodes matched to the sampling density.
    GaussHermite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OmegaMode {
    /// `n_nodes = None` picks the default for the rule.
    Quadrature { rule: OmegaRule, n_nodes: Option<usize> },
    MonteCarlo { n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum JumpMode {
    ExactAverage,
    /// One uniformly drawn signed jump per ω sample; needs Monte Carlo ω.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RIConfig {
    pub alpha: f64,
    pub kappa: f64,
    pub beta: f64,
    /// Half-length `T` of the pulse window.
    pub t_pulse_time: f64,
    /// Fixed step count per pulse; `None` picks it per ω from `max_phase_per_step`.
    pub n_steps: Option<usize>,
    /// Target bound on `h·(max|ν| + |ω|)` for automatic step counts.
    pub max_phase_per_step: f64,
    pub omega_mode: OmegaMode,
    pub jump_mode: JumpMode,
}

/// Default pulse half-length in units of `κβ`.
pub const DEFAULT_PULSE_FACTOR: f64 = 6.0;
const OMEGA_HALF_RANGE_STD: f64 = 6.0;
const LEGENDRE_POINTS: usize = 6;
const MAX_STEPS: usize = 1 << 20;

impl RIConfig {
    /// Exact-average configuration with `T = 6κβ` and composite Gauss–Legendre ω nodes.
    pub fn new(alpha: f64, kappa: f64, beta: f64) -> Self {
        RIConfig {
            alpha,
            kappa,
            beta,
            t_pulse_time: DEFAULT_PULSE_FACTOR * kappa * beta,
            n_steps: None,
            max_phase_per_step: 0.1,
            omega_mode: OmegaMode::Quadrature { rule: OmegaRule::CompositeLegendre, n_nodes: None },
            jump_mode: JumpMode::ExactAverage,
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        RIConfig { alpha, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), RiError> {
        let bad = |m: String| Err(RiError::InvalidConfig(m));
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be finite and nonnegative, got {}", self.alpha));
        }
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(GenError::KappaBelowOne { kappa: self.kappa }.into());
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.t_pulse_time >= 3.0 * self.kappa * self.beta * (1.0 - 1e-12)) {
            return bad(format!("pulse half-length {} is below 3κβ = {}", self.t_pulse_time, 3.0 * self.kappa * self.beta));
        }
        if let Some(n) = self.n_steps {
            if n < 2 || n % 2 != 0 {
                return bad(format!("n_steps must be even and at least 2, got {n}"));
            }
        }
        if !(self.max_phase_per_step > 0.0) {
            return bad("max_phase_per_step must be positive".into());
        }
        match (&self.omega_mode, &self.jump_mode) {
            (OmegaMode::MonteCarlo { n_samples: 0, .. }, _) => bad("n_samples must be positive".into()),
            (OmegaMode::Quadrature { n_nodes: Some(n), .. }, _) if *n == 0 => bad("n_nodes must be positive".into()),
            (OmegaMode::Quadrature { .. }, JumpMode::Sampled) => bad("sampled jumps need Monte Carlo ω".into()),
            _ => Ok(()),
        }
    }

    fn omega_mean_std(&self) -> (f64, f64) {
        (-1.0 / self.beta, kappa_c(self.kappa).sqrt() / self.beta)
    }
}

/// Draws `ω` from the sampling density: mean `−1/β`, std `√(2−1/κ²)/β`.
pub fn sample_frequency<R: Rng>(kappa: f64, beta: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    -1.0 / beta + kappa_c(kappa).sqrt() / beta * z
}

/// Default composite Gauss–Legendre node count: panels of width `√2/(κβ)`
/// (the std of `f̂_κ`) over mean ± 6 std of the sampling density.
pub fn default_omega_nodes(kappa: f64, beta: f64) -> usize {
    let span = 2.0 * OMEGA_HALF_RANGE_STD * kappa_c(kappa).sqrt() / beta;
    let panel = std::f64::consts::SQRT_2 / (kappa * beta);
    LEGENDRE_POINTS * (span / panel).ceil() as usize
}

/// ω nodes and probability weights (summing to exactly 1) for quadrature modes,
/// or equal-weight samples for Monte Carlo.
pub fn omega_nodes(cfg: &RIConfig) -> Vec<(f64, f64)> {
    let (mean, std) = cfg.omega_mean_std();
    match &cfg.omega_mode {
        OmegaMode::Quadrature { rule: OmegaRule::GaussHermite, n_nodes } => quad::normal_nodes(n_nodes.unwrap_or(32), mean, std),
        OmegaMode::Quadrature { rule: OmegaRule::CompositeLegendre, n_nodes } => {
            let n = n_nodes.unwrap_or_else(|| default_omega_nodes(cfg.kappa, cfg.beta));
            let panels = n.div_ceil(LEGENDRE_POINTS).max(1);
            let half = OMEGA_HALF_RANGE_STD * std;
            let raw = quad::composite_legendre(mean - half, mean + half, 2.0 * half / panels as f64 * (1.0 + 1e-12), LEGENDRE_POINTS);
            let dens = |w: f64| (-(w - mean).powi(2) / (2.0 * std * std)).exp();
            let total: f64 = raw.iter().map(|&(w, wt)| wt * dens(w)).sum();
            raw.iter().map(|&(w, wt)| (w, wt * dens(w) / total)).collect()
        }
        OmegaMode::MonteCarlo { n_samples, seed } => (0..*n_samples)
            .map(|i| {
                let mut rng = branch_rng(*seed, i as u64);
                (sample_frequency(cfg.kappa, cfg.beta, &mut rng), 1.0 / *n_samples as f64)
            })
            .collect(),
    }
}

fn branch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Ancilla thermal populations `(p0, p1)` of `|0⟩` (energy `−ω/2`) and `|1⟩`.
pub fn ancilla_populations(beta: f64, omega: f64) -> (f64, f64) {
    let x = beta * omega;
    let p1 = if x > 0.0 { (-x).exp() / (1.0 + (-x).exp()) } else { 1.0 / (1.0 + x.exp()) };
    (1.0 - p1, p1)
}

/// `C_B(τ) = Tr[X(τ) X ρ_B] = p0 e^{−iωτ} + p1 e^{iωτ}`.
pub fn bath_correlation(beta: f64, omega: f64, tau: f64) -> C64 {
    let (p0, p1) = ancilla_populations(beta, omega);
    C64::from_polar(p0, -omega * tau) + C64::from_polar(p1, omega * tau)
}

/// One (signed jump, ω) term of the ensemble.
#[derive(Debug, Clone, Copy)]
struct Branch {
    jump: usize,
    sign: f64,
    omega: f64,
    weight: f64,
}

fn branches(sys: &System, cfg: &RIConfig) -> Vec<Branch> {
    let na = sys.jumps.len();
    let nodes = omega_nodes(cfg);
    let mut out = Vec::new();
    match (&cfg.jump_mode, &cfg.omega_mode) {
        (JumpMode::Sampled, OmegaMode::MonteCarlo { seed, .. }) => {
            for (i, &(omega, w)) in nodes.iter().enumerate() {
                // separate stream family from the ω draws
                let mut rng = branch_rng(seed ^ 0x9e37_79b9_7f4a_7c15, i as u64);
                let k = rng.random_range(0..2 * na);
                out.push(Branch { jump: k / 2, sign: if k % 2 == 0 { 1.0 } else { -1.0 }, omega, weight: w });
            }
        }
        _ => {
            for &(omega, w) in &nodes {
                for a in 0..na {
                    for sign in [1.0, -1.0] {
                        out.push(Branch { jump: a, sign, omega, weight: w / (2 * na) as f64 });
                    }
                }
            }
        }
    }
    out
}

/// Interaction-picture pulse integrator: fourth-order Magnus steps with two Gauss points,
/// `U ← exp(−i[h(H1+H2)/2 − i(√3/12)h²[H2,H1]]) U`, exact in `H_S + H_B`.
struct PulseIntegrator<'a> {
    energies: &'a [f64],
    a_eig: &'a CMat,
    omega: f64,
    coupling: f64,
    kappa: f64,
    beta: f64,
    t_pulse: f64,
}

impl PulseIntegrator<'_> {
    fn hamiltonian_into(&self, t: f64, out: &mut CMat) {
        let d = self.energies.len();
        let amp = self.coupling * filter_time(self.kappa, self.beta, t);
        let x01 = C64::from_polar(amp, -self.omega * t);
        let x10 = x01.conj();
        out.fill(ZERO);
        for i in 0..d {
            for j in 0..d {
                let a = self.a_eig[(i, j)];
                if a == ZERO {
                    continue;
                }
                let v = a * C64::from_polar(1.0, (self.energies[i] - self.energies[j]) * t);
                out[(2 * i, 2 * j + 1)] = v * x01;
                out[(2 * i + 1, 2 * j)] = v * x10;
            }
        }
    }

    fn propagate(&self, n_steps: usize) -> CMat {
        let dim = 2 * self.energies.len();
        let mut u = CMat::identity(dim, dim);
        if self.coupling == 0.0 {
            return u;
        }
        let h = 2.0 * self.t_pulse / n_steps as f64;
        let off = (3f64).sqrt() / 6.0;
        let mut h1 = CMat::zeros(dim, dim);
        let mut h2 = CMat::zeros(dim, dim);
        let mut k = CMat::zeros(dim, dim);
        let mut e = CMat::zeros(dim, dim);
        let mut tmp = CMat::zeros(dim, dim);
        let mut work = [CMat::zeros(dim, dim), CMat::zeros(dim, dim)];
        let ccoef = C64::new(0.0, -(3f64).sqrt() / 12.0 * h * h);
        for s in 0..n_steps {
            let t0 = -self.t_pulse + s as f64 * h;
            self.hamiltonian_into(t0 + (0.5 - off) * h, &mut h1);
            self.hamiltonian_into(t0 + (0.5 + off) * h, &mut h2);
            // K = h/2 (H1 + H2) − i(√3/12) h² (H2 H1 − H1 H2)
            k.gemm(ccoef, &h2, &h1, ZERO);
            k.gemm(-ccoef, &h1, &h2, C64::new(1.0, 0.0));
            k += (&h1 + &h2).scale(0.5 * h);
            numlin::expm_neg_i_into(&k, &mut e, &mut work);
            tmp.gemm(C64::new(1.0, 0.0), &e, &u, ZERO);
            std::mem::swap(&mut u, &mut tmp);
        }
        u
    }
}

fn auto_steps(cfg: &RIConfig, max_freq: f64, omega: f64) -> usize {
    match cfg.n_steps {
        Some(n) => n,
        None => {
            let rate = max_freq + omega.abs() + 1.0 / (cfg.kappa * cfg.beta);
            let n = (2.0 * cfg.t_pulse_time * rate / cfg.max_phase_per_step).ceil() as usize;
            (n + n % 2).clamp(16, MAX_STEPS)
        }
    }
}

/// Lab-frame pulse unitary on system ⊗ ancilla (system index major) in the computational basis.
pub fn pulse_propagator(sys: &System, jump: usize, sign: f64, omega: f64, cfg: &RIConfig, n_steps: usize) -> Result<CMat, RiError> {
    cfg.validate()?;
    if n_steps < 2 || n_steps % 2 != 0 || jump >= sys.jumps.len() {
        return Err(RiError::InvalidConfig("n_steps must be even and the jump index valid".into()));
    }
    let h = &sys.hamiltonian;
    let a = sys.eig_jumps[jump].scale(sign);
    let integ = PulseIntegrator {
        energies: &h.eigvals,
        a_eig: &a,
        omega,
        coupling: cfg.alpha,
        kappa: cfg.kappa,
        beta: cfg.beta,
        t_pulse: cfg.t_pulse_time,
    };
    let ui = integ.propagate(n_steps);
    let d = h.dim();
    let t = cfg.t_pulse_time;
    // free phases of H_S + H_B on the product eigenbasis
    let free: Vec<C64> = (0..2 * d)
        .map(|k| {
            let e = h.eigvals[k / 2] + if k % 2 == 0 { -omega / 2.0 } else { omega / 2.0 };
            C64::from_polar(1.0, -e * t)
        })
        .collect();
    let u_eig = CMat::from_fn(2 * d, 2 * d, |r, s| free[r] * ui[(r, s)] * free[s]);
    let v = kron(&h.eigvecs, &CMat::identity(2, 2));
    Ok(&v * u_eig * v.adjoint())
}

/// [`pulse_propagator`] with step doubling from `n_start` until two successive
/// results agree to `tol` in max entry.
pub fn pulse_propagator_converged(sys: &System, jump: usize, sign: f64, omega: f64, cfg: &RIConfig, n_start: usize, tol: f64) -> Result<(CMat, usize), RiError> {
    let mut n = n_start.max(2);
    n += n % 2;
    let mut prev = pulse_propagator(sys, jump, sign, omega, cfg, n)?;
    loop {
        if 2 * n > MAX_STEPS {
            let next = pulse_propagator(sys, jump, sign, omega, cfg, n)?;
            return Err(RiError::NotConverged { difference: numlin::max_abs_diff(&prev, &next) });
        }
        let next = pulse_propagator(sys, jump, sign, omega, cfg, 2 * n)?;
        let diff = numlin::max_abs_diff(&prev, &next);
        n *= 2;
        if diff < tol {
            return Ok((next, n));
        }
        prev = next;
    }
}

#[derive(Debug, Clone)]
pub struct ChannelResult {
    /// Lab-frame channel in the computational basis.
    pub superop: SuperOp,
    /// Interaction-picture channel `Φ_I` with `Φ = U_S ∘ Φ_I ∘ U_S`.
    pub interaction: SuperOp,
    /// Smallest Choi eigenvalue.
    pub cp_residual: f64,
    /// Largest deviation of the output trace from the input trace over matrix units.
    pub tp_residual: f64,
    pub n_branches: usize,
    pub max_steps: usize,
    pub system: Arc<System>,
    pub config: RIConfig,
}

/// Channel contribution `Σ_b p_b Σ_{b'} conj(K_{b'b}) ⊗ K_{b'b}` of one pulse.
fn branch_superop(ui: &CMat, p: (f64, f64), d: usize) -> CMat {
    let mut out = CMat::zeros(d * d, d * d);
    for (b, pb) in [(0usize, p.0), (1usize, p.1)] {
        if pb == 0.0 {
            continue;
        }
        for bp in 0..2 {
            let k = CMat::from_fn(d, d, |s, t| ui[(2 * s + bp, 2 * t + b)]);
            out += kron(&k.conjugate(), &k).scale(pb);
        }
    }
    out
}

fn eig_to_comp(sys: &System, m: &CMat) -> CMat {
    let u = &sys.hamiltonian.eigvecs;
    let w = kron(&u.conjugate(), u);
    &w * m * w.adjoint()
}

/// Diagonal superoperator of `U_S` in the eigenbasis.
fn free_phase_superop(sys: &System, t: f64) -> Vec<C64> {
    let e = &sys.hamiltonian.eigvals;
    let d = e.len();
    (0..d * d).map(|k| C64::from_polar(1.0, -(e[k % d] - e[k / d]) * t)).collect()
}

/// The repeated-interaction channel, ensemble-averaged per the configuration.
pub fn ri_channel(sys: &Arc<System>, cfg: &RIConfig) -> Result<ChannelResult, RiError> {
    cfg.validate()?;
    let d = sys.dim();
    let br = branches(sys, cfg);
    let max_freq = sys.grid.freqs.iter().cloned().fold(0.0, f64::max);
    let eig_a: Vec<CMat> = sys.eig_jumps.clone();
    let parts: Vec<(CMat, usize)> = br
        .par_iter()
        .map(|b| {
            let a = eig_a[b.jump].scale(b.sign);
            let n = auto_steps(cfg, max_freq, b.omega);
            let integ = PulseIntegrator {
                energies: &sys.hamiltonian.eigvals,
                a_eig: &a,
                omega: b.omega,
                coupling: cfg.alpha,
                kappa: cfg.kappa,
                beta: cfg.beta,
                t_pulse: cfg.t_pulse_time,
            };
            let ui = integ.propagate(n);
            (branch_superop(&ui, ancilla_populations(cfg.beta, b.omega), d).scale(b.weight), n)
        })
        .collect();
    let mut phi_i = CMat::zeros(d * d, d * d);
    let mut max_steps = 0;
    for (p, n) in &parts {
        phi_i += p;
        max_steps = max_steps.max(*n);
    }
    let phase = free_phase_superop(sys, cfg.t_pulse_time);
    let phi_eig = CMat::from_fn(d * d, d * d, |r, s| phase[r] * phi_i[(r, s)] * phase[s]);
    let superop = SuperOp::new(eig_to_comp(sys, &phi_eig), Picture::Schrodinger);
    let interaction = SuperOp::new(eig_to_comp(sys, &phi_i), Picture::Schrodinger);
    let (cp_residual, tp_residual) = channel_residuals(&superop);
    if cp_residual < -1e-9 {
        return Err(RiError::CPViolation { min_eigenvalue: cp_residual });
    }
    Ok(ChannelResult { superop, interaction, cp_residual, tp_residual, n_branches: br.len(), max_steps, system: sys.clone(), config: cfg.clone() })
}

/// `(min Choi eigenvalue, max trace-preservation defect)`.
pub fn channel_residuals(phi: &SuperOp) -> (f64, f64) {
    let d = phi.dim();
    let ch = numlin::choi(phi);
    let ch = (&ch + ch.adjoint()).scale(0.5);
    let cp = numlin::eigh(&ch).0[0];
    let mut tp: f64 = 0.0;
    for col in 0..d * d {
        let tr: C64 = (0..d).map(|a| phi.matrix[(a + d * a, col)]).sum();
        let want = if col % d == col / d { 1.0 } else { 0.0 };
        tp = tp.max((tr - c(want)).norm());
    }
    (cp, tp)
}

/// `∫_0^∞ e^{−v²/w²} e^{ikv} dv` by composite Gauss–Legendre on `[0, 6.5w]`.
/// `refine` multiplies the panel count.
pub fn half_line_gaussian_ft(w: f64, k: f64, refine: usize) -> C64 {
    let upper = 6.5 * w;
    let mut panel = 0.5 * w;
    if k != 0.0 {
        panel = panel.min(PI / k.abs());
    }
    let nodes = quad::composite_legendre(0.0, upper, panel / refine.max(1) as f64, 8);
    nodes.iter().map(|&(v, wt)| C64::from_polar(wt * (-(v / w).powi(2)).exp(), k * v)).sum()
}

/// Time-ordered filter integral
/// `J(x, y) = ∫∫_{t1>t2} f_κ(t1) f_κ(t2) e^{i(x t1 + y t2)} dt1 dt2` over the real line,
/// split along `u = (t1+t2)/√2`, `v = (t1−t2)/√2`.
pub fn ordered_filter_integral(kappa: f64, beta: f64, x: f64, y: f64, refine: usize) -> C64 {
    let w = kappa * beta;
    let norm2 = 1.0 / ((PI / 2.0).sqrt() * w);
    let sum = x + y;
    let diff = x - y;
    let a = w * PI.sqrt() * (-(sum * w).powi(2) / 8.0).exp();
    half_line_gaussian_ft(w, diff * FRAC_1_SQRT_2, refine) * (norm2 * a)
}

/// Second-order (in `α`) generator of the interaction-picture channel,
/// `Φ_I = id + α² L + O(α⁴)`.
#[derive(Debug, Clone)]
pub struct Dyson2 {
    /// Full second-order generator in the computational basis.
    pub superop: SuperOp,
    /// `H_LS = (M − M†)/(2i)` in the computational basis.
    pub lamb_shift: CMat,
    /// `superop` with the Lamb-shift commutator removed.
    pub dissipative: SuperOp,
    /// Per-jump coefficients `Λ_{ν1ν2}` of `A_{ν1} ρ A_{ν2}†` on the Bohr grid
    /// (already divided by the number of jumps).
    pub lambda: CMat,
}

/// Second-order generator from the ancilla correlation function and the filter integrals.
/// `refine` scales the time-quadrature panel count.
pub fn dyson2_generator(sys: &Arc<System>, cfg: &RIConfig, refine: usize) -> Result<Dyson2, RiError> {
    cfg.validate()?;
    if cfg.jump_mode != JumpMode::ExactAverage {
        return Err(RiError::InvalidConfig("second-order generator needs exact jump averaging".into()));
    }
    let d = sys.dim();
    let f = &sys.grid.freqs;
    let nf = f.len();
    let na = sys.jumps.len() as f64;
    let (kappa, beta) = (cfg.kappa, cfg.beta);
    let nodes = omega_nodes(cfg);
    let per_node: Vec<(CMat, CMat)> = nodes
        .par_iter()
        .map(|&(omega, w)| {
            let (p0, p1) = ancilla_populations(beta, omega);
            let mut lam = CMat::zeros(nf, nf);
            let mut ord = CMat::zeros(nf, nf);
            for (s, p) in [(1.0, p0), (-1.0, p1)] {
                let fh: Vec<f64> = f.iter().map(|nu| filter_freq(kappa, beta, nu + s * omega)).collect();
                for i in 0..nf {
                    for j in 0..nf {
                        lam[(i, j)] += c(w * p * fh[i] * fh[j]);
                        ord[(i, j)] += ordered_filter_integral(kappa, beta, f[i] - s * omega, f[j] + s * omega, refine) * (w * p);
                    }
                }
            }
            (lam, ord)
        })
        .collect();
    let mut lam = CMat::zeros(nf, nf);
    let mut ord = CMat::zeros(nf, nf);
    for (l, o) in &per_node {
        lam += l;
        ord += o;
    }
    lam /= c(na);
    ord /= c(na);

    let g = &sys.grid;
    let mut jump = CMat::zeros(d * d, d * d);
    let mut m = CMat::zeros(d, d);
    for at in &sys.eig_jumps {
        for i in 0..d {
            for k in 0..d {
                let aik = at[(i, k)];
                if aik == ZERO {
                    continue;
                }
                for j in 0..d {
                    for l in 0..d {
                        let ajl = at[(j, l)];
                        if ajl != ZERO {
                            jump[(i + d * j, k + d * l)] += lam[(g.id(i, k), g.id(j, l))] * aik * ajl.conj();
                        }
                    }
                    let akj = at[(k, j)];
                    if akj != ZERO {
                        m[(i, j)] += aik * akj * ord[(g.id(i, k), g.id(k, j))];
                    }
                }
            }
        }
    }
    let h_ls = (&m - m.adjoint()) / (I * 2.0);
    let h_ls = (&h_ls + h_ls.adjoint()).scale(0.5);
    let kk = &m + m.adjoint();
    let diss = &jump - (numlin::left_mul(&kk) + numlin::right_mul(&kk)).scale(0.5);
    let full = &diss + numlin::coherent_superop(&h_ls);
    let u = &sys.hamiltonian.eigvecs;
    Ok(Dyson2 {
        superop: SuperOp::new(eig_to_comp(sys, &full), Picture::Schrodinger),
        lamb_shift: u * h_ls * u.adjoint(),
        dissipative: SuperOp::new(eig_to_comp(sys, &diss), Picture::Schrodinger),
        lambda: lam,
    })
}

/// `‖ρ^{−1/4} C ρ^{1/4} − ρ^{1/4} C ρ^{−1/4}‖`, the detailed-balance defect of a coherent term.
pub fn coherent_defect(cm: &CMat, rho: &CMat) -> Result<f64, RiError> {
    let q = numlin::mat_pow(rho, 0.25)?;
    let qi = numlin::mat_pow(rho, -0.25)?;
    Ok(numlin::spectral_norm(&(&qi * cm * &q - &q * cm * &qi)))
}

/// Coherent part left after removing the KMS generator's own coherent term from the Lamb shift.
pub fn extracted_coherent(d2: &Dyson2, effective: &Generator) -> CMat {
    &d2.lamb_shift - &effective.coherent
}

/// Channel-vs-semigroup probe family: computational basis states, Pauli-pair
/// coherences `(|i⟩+|j⟩)/√2` and `(|i⟩+i|j⟩)/√2`, and seeded random pure states.
pub fn distance_probes(d: usize, n_random: usize, seed: u64) -> Vec<CMat> {
    let mut out = Vec::new();
    let proj = |v: &CMat| v * v.adjoint();
    for i in 0..d {
        let mut v = CMat::zeros(d, 1);
        v[(i, 0)] = c(1.0);
        out.push(proj(&v));
    }
    for i in 0..d {
        for j in i + 1..d {
            for ph in [c(1.0), I] {
                let mut v = CMat::zeros(d, 1);
                v[(i, 0)] = c(FRAC_1_SQRT_2);
                v[(j, 0)] = ph * FRAC_1_SQRT_2;
                out.push(proj(&v));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        out.push(analysis::random_pure_state(d, &mut rng));
    }
    out
}

/// `max_σ ‖Φ(σ) − Ψ(σ)‖₁` over a probe family; a lower bound on the 1→1 distance.
pub fn probe_distance(phi: &SuperOp, psi: &SuperOp, probes: &[CMat]) -> f64 {
    let diff = SuperOp::new(&phi.matrix - &psi.matrix, Picture::Schrodinger);
    probes.iter().map(|p| numlin::trace_norm(&diff.apply(p))).fold(0.0, f64::max)
}

/// `U_S ∘ e^{α² L} ∘ U_S` for an interaction-picture generator `L`.
pub fn semigroup_channel(sys: &System, l: &SuperOp, alpha: f64, t_pulse: f64) -> SuperOp {
    let us = numlin::expm_neg_i(&sys.hamiltonian.matrix.scale(t_pulse));
    let us = numlin::sandwich(&us, &us);
    let e = l.exp(alpha * alpha);
    SuperOp::new(&us * e.matrix * &us, Picture::Schrodinger)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub alphas: Vec<f64>,
    pub distances: Vec<f64>,
    pub fit: LogLogFit,
    pub n_probes: usize,
    pub kappa: f64,
    pub beta: f64,
    pub t_pulse_time: f64,
}

/// Number of seeded random pure states in the distance probe family.
pub const N_RANDOM_PROBES: usize = 50;

/// Channel vs `U_S ∘ e^{α² L} ∘ U_S` with `L` the second-order generator, over an α grid.
/// The channel follows `cfg` (possibly sampled); `L` uses exact averaging.
pub fn channel_vs_semigroup(sys: &Arc<System>, cfg: &RIConfig, alpha_grid: &[f64], probe_seed: u64) -> Result<ScalingReport, RiError> {
    if alpha_grid.len() < 2 {
        return Err(RiError::InvalidConfig("alpha grid needs at least two points".into()));
    }
    // the generator side is always the exact average, even when the channel is sampled
    let mut exact = cfg.clone();
    exact.jump_mode = JumpMode::ExactAverage;
    if matches!(exact.omega_mode, OmegaMode::MonteCarlo { .. }) {
        exact.omega_mode = OmegaMode::Quadrature { rule: OmegaRule::CompositeLegendre, n_nodes: None };
    }
    let d2 = dyson2_generator(sys, &exact, 1)?;
    let probes = distance_probes(sys.dim(), N_RANDOM_PROBES, probe_seed);
    let mut distances = Vec::new();
    for &a in alpha_grid {
        let ch = ri_channel(sys, &cfg.with_alpha(a))?;
        let sg = semigroup_channel(sys, &d2.superop, a, cfg.t_pulse_time);
        distances.push(probe_distance(&ch.superop, &sg, &probes));
    }
    let fit = analysis::loglog_fit(alpha_grid, &distances).map_err(|e| RiError::InvalidConfig(e.to_string()))?;
    Ok(ScalingReport {
        alphas: alpha_grid.to_vec(),
        distances,
        fit,
        n_probes: probes.len(),
        kappa: cfg.kappa,
        beta: cfg.beta,
        t_pulse_time: cfg.t_pulse_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConvergenceReport {
    pub n_samples: Vec<usize>,
    /// Root-mean-square probe distance to the exact-average channel over replicates.
    pub rms_distances: Vec<f64>,
    pub replicates: usize,
    pub fit: LogLogFit,
}

/// Monte Carlo channel (sampled ω and jumps) against the exact average.
/// Replicate `r` at sample count `n` uses master seed `seed + r + n·replicates`.
pub fn monte_carlo_convergence(sys: &Arc<System>, cfg: &RIConfig, n_grid: &[usize], replicates: usize, seed: u64) -> Result<McConvergenceReport, RiError> {
    if n_grid.len() < 2 || replicates == 0 {
        return Err(RiError::InvalidConfig("need at least two sample counts and one replicate".into()));
    }
    let mut exact_cfg = cfg.clone();
    exact_cfg.omega_mode = OmegaMode::Quadrature { rule: OmegaRule::CompositeLegendre, n_nodes: None };
    exact_cfg.jump_mode = JumpMode::ExactAverage;
    let exact = ri_channel(sys, &exact_cfg)?;
    let probes = distance_probes(sys.dim(), N_RANDOM_PROBES, seed);
    let mut rms = Vec::new();
    for &n in n_grid {
        let mut acc = 0.0;
        for r in 0..replicates {
            let mut c = cfg.clone();
            c.omega_mode = OmegaMode::MonteCarlo { n_samples: n, seed: seed.wrapping_add((r + n * replicates) as u64) };
            c.jump_mode = JumpMode::Sampled;
            let mc = ri_channel(sys, &c)?;
            acc += probe_distance(&mc.superop, &exact.superop, &probes).powi(2);
        }
        rms.push((acc / replicates as f64).sqrt());
    }
    let xs: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let fit = analysis::loglog_fit(&xs, &rms).map_err(|e| RiError::InvalidConfig(e.to_string()))?;
    Ok(McConvergenceReport { n_samples: n_grid.to_vec(), rms_distances: rms, replicates, fit })
}

/// Distance between the second-order semigroup and the rescaled Gaussian generator
/// plus the extracted coherent part, both run for `α²` and wrapped in `U_S`.
pub fn effective_model_distance(sys: &Arc<System>, cfg: &RIConfig, probe_seed: u64) -> Result<f64, RiError> {
    let d2 = dyson2_generator(sys, cfg, 1)?;
    let eff = generators::ri_effective_generator(sys, cfg.kappa)?;
    let cm = extracted_coherent(&d2, &eff);
    let l_eff = SuperOp::new(&eff.superop.matrix + numlin::coherent_superop(&cm), Picture::Schrodinger);
    let probes = distance_probes(sys.dim(), N_RANDOM_PROBES, probe_seed);
    let a = semigroup_channel(sys, &d2.superop, cfg.alpha, cfg.t_pulse_time);
    let b = semigroup_channel(sys, &l_eff, cfg.alpha, cfg.t_pulse_time);
    Ok(probe_distance(&a, &b, &probes))
}

/// Unique fixed point of a channel from the null space of `Φ − id`.
pub fn channel_fixed_point(phi: &SuperOp) -> Result<CMat, RiError> {
    let d = phi.dim();
    let m = &phi.matrix - CMat::identity(d * d, d * d);
    let svd = m.svd(false, true);
    let sv = &svd.singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let multiplicity = sv.iter().filter(|&&s| s < 1e-10 * top.max(1.0)).count();
    if multiplicity != 1 {
        return Err(RiError::NonUniqueFixedPoint { multiplicity });
    }
    let idx = (0..sv.len()).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).expect("nonempty");
    let vt = svd.v_t.expect("requested");
    let v = CMat::from_fn(d * d, 1, |r, _| vt[(idx, r)].conj());
    let x = numlin::unvec(&v, d);
    let x = (&x + x.adjoint()).scale(0.5);
    let tr = x.trace();
    Ok(x / tr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    /// `‖ρ_fix − ρ_β‖₁`.
    pub fixed_point_error: f64,
    /// Channel applications until every probe is within `ε` of `ρ_fix`.
    pub t_therm: usize,
    pub epsilon: f64,
    /// `log(2‖ρ_β^{−1}‖/ε) / (α² λ)` with `λ` the gap of the rescaled Gaussian generator.
    pub predicted_t_therm: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub beta: f64,
}

/// Smallest `n` with `‖Φⁿ(σ) − ρ_fix‖₁ ≤ ε` for every probe.
pub fn thermalization_index(phi: &SuperOp, rho_fix: &CMat, probes: &[CMat], epsilon: f64, max_steps: usize) -> Result<usize, RiError> {
    let mut worst = 0;
    for p in probes {
        let mut v = numlin::vec(p);
        let target = numlin::vec(rho_fix);
        let d = rho_fix.nrows();
        let mut n = 0;
        while numlin::trace_norm(&numlin::unvec(&(&v - &target), d)) > epsilon {
            if n >= max_steps {
                return Err(RiError::ThermalizationCap { max_steps });
            }
            v = &phi.matrix * v;
            n += 1;
        }
        worst = worst.max(n);
    }
    Ok(worst)
}

pub fn fixed_point_and_therm_index(channel: &ChannelResult, epsilon: f64, probe_seed: u64) -> Result<(CMat, FixedPointReport), RiError> {
    let sys = &channel.system;
    let cfg = &channel.config;
    let rho_fix = channel_fixed_point(&channel.superop)?;
    let fixed_point_error = numlin::trace_norm(&(&rho_fix - &sys.gibbs.rho));
    let probes = distance_probes(sys.dim(), N_RANDOM_PROBES, probe_seed);
    let t_therm = thermalization_index(&channel.superop, &rho_fix, &probes, epsilon, 10_000_000)?;
    let eff = generators::ri_effective_generator(sys, cfg.kappa)?;
    let gap = analysis::generator_gap(&eff).map_err(|e| RiError::InvalidConfig(e.to_string()))?.gap;
    let predicted_t_therm = (2.0f64.ln() + sys.gibbs.log_inv_norm - epsilon.ln()) / (cfg.alpha * cfg.alpha * gap);
    Ok((
        rho_fix,
        FixedPointReport { fixed_point_error, t_therm, epsilon, predicted_t_therm, alpha: cfg.alpha, kappa: cfg.kappa, beta: cfg.beta },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gamma_ri;
    use crate::models::{pauli_jump_set, random_kl_local, Hamiltonian, Term};
    use crate::numlin::Pauli;

    fn one_qubit(beta: f64) -> Arc<System> {
        let h = Hamiltonian::from_terms(
            1,
            vec![Term::new(1, &[(0, Pauli::Z)], 0.6), Term::new(1, &[(0, Pauli::X)], 0.3)],
            "test".into(),
        );
        System::new(h, pauli_jump_set(1), beta).unwrap()
    }

    fn small_cfg(alpha: f64, kappa: f64, beta: f64) -> RIConfig {
        let mut cfg = RIConfig::new(alpha, kappa, beta);
        cfg.omega_mode = OmegaMode::Quadrature { rule: OmegaRule::CompositeLegendre, n_nodes: Some(60) };
        cfg
    }

    #[test]
    fn frequency_sampling_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (kappa, beta) = (2.0, 0.7);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_frequency(kappa, beta, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = kappa_c(kappa).sqrt() / beta;
        assert!((mean + 1.0 / beta).abs() < 4.0 * sd / (n as f64).sqrt());
        assert!((var / (kappa_c(kappa) / (beta * beta)) - 1.0).abs() < 0.02);
        let xs: Vec<f64> = (0..n).map(|_| sample_frequency(1.0, 2.0, &mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((v / 0.25 - 1.0).abs() < 0.02);
    }

    #[test]
    fn bath_correlation_matches_direct() {
        let (beta, omega) = (0.9, -1.3);
        let hb = CMat::from_fn(2, 2, |i, j| if i != j { ZERO } else if i == 0 { c(-omega / 2.0) } else { c(omega / 2.0) });
        let rho = numlin::mat_func(&hb, |e| (-beta * e).exp()).unwrap();
        let rho = &rho / rho.trace();
        let x = Pauli::X.matrix();
        for k in 0..50 {
            let t = -5.0 + 0.2 * k as f64;
            let u = numlin::expm_neg_i(&hb.scale(t));
            let xt = u.adjoint() * &x * &u;
            let direct = (xt * &x * &rho).trace();
            assert!((direct - bath_correlation(beta, omega, t)).norm() < 1e-12);
        }
    }

    #[test]
    fn half_line_transform_oracle() {
        // mpmath: (w√π/2) e^{−k²w²/4} + i w Dawson(kw/2), k = Δ/√2, w = 2
        let cases = [
            (0.0, 1.772_453_850_905_516, 0.0),
            (0.7, 1.387_307_672_928_023, 0.843_052_127_328_435_3),
            (-3.1, 0.014_514_094_646_841_24, -0.531_645_130_503_351_6),
            (12.0, 0.0, 0.118_687_213_795_864_3),
        ];
        for (delta, re, im) in cases {
            let b = half_line_gaussian_ft(2.0, delta * FRAC_1_SQRT_2, 1);
            assert!((b.re - re).abs() < 1e-13 && (b.im - im).abs() < 1e-13, "{delta}: {b}");
        }
    }

    #[test]
    fn ordered_integral_sums_to_product() {
        // J(x,y) + J(y,x) = f̃(x) f̃(y)
        let (kappa, beta) = (1.5, 0.8);
        for (x, y) in [(0.3, -1.1), (2.0, 0.5), (-0.4, -0.4)] {
            let s = ordered_filter_integral(kappa, beta, x, y, 1) + ordered_filter_integral(kappa, beta, y, x, 1);
            let p = filter_freq(kappa, beta, x) * filter_freq(kappa, beta, y);
            assert!((s - c(p)).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_coupling_is_free_evolution() {
        let sys = one_qubit(1.0);
        let cfg = small_cfg(0.0, 2.0, 1.0);
        let u = pulse_propagator(&sys, 1, 1.0, -0.8, &cfg, 100).unwrap();
        let hb = CMat::from_fn(2, 2, |i, j| if i != j { ZERO } else if i == 0 { c(0.4) } else { c(-0.4) });
        let h0 = kron(&sys.hamiltonian.matrix, &CMat::identity(2, 2)) + kron(&CMat::identity(2, 2), &hb);
        let want = numlin::expm_neg_i(&h0.scale(2.0 * cfg.t_pulse_time));
        assert!(numlin::max_abs_diff(&u, &want) < 1e-12);

        let ch = ri_channel(&sys, &cfg).unwrap();
        let us = numlin::expm_neg_i(&sys.hamiltonian.matrix.scale(2.0 * cfg.t_pulse_time));
        assert!(numlin::max_abs_diff(&ch.superop.matrix, &numlin::sandwich(&us, &us)) < 1e-12);
        assert!(matches!(channel_fixed_point(&ch.superop), Err(RiError::NonUniqueFixedPoint { multiplicity: 2 })));
    }

    #[test]
    fn propagator_unitary_and_converged() {
        let sys = one_qubit(1.0);
        let cfg = RIConfig::new(0.1, 2.0, 1.0);
        let u = pulse_propagator(&sys, 0, 1.0, -1.0, &cfg, 2000).unwrap();
        let u2 = pulse_propagator(&sys, 0, 1.0, -1.0, &cfg, 4000).unwrap();
        assert!(numlin::max_abs_diff(&(u.adjoint() * &u), &CMat::identity(4, 4)) < 1e-12);
        assert!(numlin::max_abs_diff(&u, &u2) < 1e-10, "{}", numlin::max_abs_diff(&u, &u2));
        let (_, n) = pulse_propagator_converged(&sys, 0, 1.0, -1.0, &cfg, 250, 1e-10).unwrap();
        assert!(n <= 2000);
        // fourth order: error ratio near 16 under halving
        let r = pulse_propagator(&sys, 0, 1.0, 3.0, &cfg, 4000).unwrap();
        let e1 = numlin::max_abs_diff(&pulse_propagator(&sys, 0, 1.0, 3.0, &cfg, 100).unwrap(), &r);
        let e2 = numlin::max_abs_diff(&pulse_propagator(&sys, 0, 1.0, 3.0, &cfg, 200).unwrap(), &r);
        assert!(e1 / e2 > 12.0 && e1 / e2 < 20.0, "{}", e1 / e2);
    }

    #[test]
    fn channel_is_cptp_and_sign_symmetric() {
        let sys = System::new(random_kl_local(2, 2, 3, 1.0, 5).unwrap(), pauli_jump_set(2), 1.0).unwrap();
        let mut cfg = small_cfg(0.3, 1.5, 1.0);
        cfg.max_phase_per_step = 0.4;
        let ch = ri_channel(&sys, &cfg).unwrap();
        assert!(ch.cp_residual > -1e-9 && ch.tp_residual < 1e-10, "{} {}", ch.cp_residual, ch.tp_residual);
        // each signed branch gives the same channel as its partner
        let d = sys.dim();
        let a = sys.eig_jumps[2].clone();
        let run = |s: f64| {
            let a = a.scale(s);
            let integ = PulseIntegrator { energies: &sys.hamiltonian.eigvals, a_eig: &a, omega: -0.7, coupling: 0.3, kappa: 1.5, beta: 1.0, t_pulse: cfg.t_pulse_time };
            branch_superop(&integ.propagate(400), ancilla_populations(1.0, -0.7), d)
        };
        assert!(numlin::max_abs_diff(&run(1.0), &run(-1.0)) < 1e-12);
    }

    #[test]
    fn dyson2_is_trace_preserving_and_converged() {
        let sys = one_qubit(1.0);
        let cfg = small_cfg(0.1, 2.0, 1.0);
        let a = dyson2_generator(&sys, &cfg, 1).unwrap();
        let d = 2;
        for col in 0..4 {
            let tr: C64 = (0..d).map(|k| a.superop.matrix[(k + d * k, col)]).sum();
            assert!(tr.norm() < 1e-13);
        }
        let mut cfg2 = cfg.clone();
        cfg2.omega_mode = OmegaMode::Quadrature { rule: OmegaRule::CompositeLegendre, n_nodes: None };
        let b = dyson2_generator(&sys, &cfg2, 1).unwrap();
        let mut cfg3 = cfg2.clone();
        cfg3.omega_mode = OmegaMode::Quadrature { rule: OmegaRule::CompositeLegendre, n_nodes: Some(2 * default_omega_nodes(2.0, 1.0)) };
        let b2 = dyson2_generator(&sys, &cfg3, 2).unwrap();
        let diff = numlin::max_abs_diff(&b.superop.matrix, &b2.superop.matrix);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn dyson2_matches_finite_difference_of_channel() {
        let sys = one_qubit(1.0);
        let cfg = small_cfg(1e-3, 2.0, 1.0);
        let d2 = dyson2_generator(&sys, &cfg, 1).unwrap();
        let eye = CMat::identity(4, 4);
        let quot = |a: f64| (ri_channel(&sys, &cfg.with_alpha(a)).unwrap().interaction.matrix - &eye) / c(a * a);
        let (q1, q2) = (quot(1e-3), quot(5e-4));
        let rich = (q2.scale(4.0) - q1) / c(3.0);
        let diff = numlin::max_abs_diff(&rich, &d2.superop.matrix);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn dissipative_coefficients_match_gamma_route() {
        let sys = one_qubit(1.0);
        let (kappa, beta) = (4.0, 1.0);
        let cfg = RIConfig::new(0.1, kappa, beta);
        let d2 = dyson2_generator(&sys, &cfg, 1).unwrap();
        let na = sys.jumps.len() as f64;
        let nodes = quad::composite_legendre(-30.0, 30.0, 0.05, 8);
        for (k, &nu) in sys.grid.freqs.iter().enumerate() {
            let closed: f64 = nodes
                .iter()
                .map(|&(w, wt)| wt * gamma_ri(kappa, beta, w).unwrap() * filter_freq(kappa, beta, w - nu).powi(2))
                .sum::<f64>()
                / na;
            let got = d2.lambda[(k, k)].re;
            assert!((got - closed).abs() < 1e-6 * closed.max(1e-3), "ν={nu}: {got} vs {closed}");
        }
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let sys = one_qubit(1.0);
        let mut cfg = small_cfg(0.4, 1.5, 1.0);
        cfg.max_phase_per_step = 0.5;
        cfg.omega_mode = OmegaMode::MonteCarlo { n_samples: 40, seed: 9 };
        cfg.jump_mode = JumpMode::Sampled;
        let a = ri_channel(&sys, &cfg).unwrap();
        let b = ri_channel(&sys, &cfg).unwrap();
        assert_eq!(a.superop.matrix, b.superop.matrix);
        cfg.omega_mode = OmegaMode::Quadrature { rule: OmegaRule::GaussHermite, n_nodes: None };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = RIConfig::new(0.1, 2.0, 1.0);
        assert!(cfg.validate().is_ok());
        cfg.t_pulse_time = 2.0 * 2.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RIConfig::new(0.1, 2.0, 1.0);
        cfg.n_steps = Some(101);
        assert!(cfg.validate().is_err());
        assert!(RIConfig::new(0.1, 0.5, 1.0).validate().is_err());
        assert!(RIConfig::new(0.1, 2.0, 0.0).validate().is_err());
        let json = serde_json::to_string(&RIConfig::new(0.1, 2.0, 1.0)).unwrap();
        let back: RIConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, RIConfig::new(0.1, 2.0, 1.0));
    }
}
