//! KMS geometry, Dirichlet forms, spectral gaps, entropy functionals,
//! monotonicity sweeps and bound calculators.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::generators::{self, BathSpec, GenError, Generator, System};
use crate::numlin::{self, c, eigh, kron, mat_log, mat_pow, CMat, LinalgError, Picture, SuperOp, C64, ZERO};
use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("state is not full rank (smallest eigenvalue {min_eigenvalue:e})")]
    SingularState { min_eigenvalue: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Generator(#[from] GenError),
}

/// Cached powers of a full-rank state for the KMS inner product
/// `⟨X, Y⟩_ρ = Tr[ρ^{1/2} X† ρ^{1/2} Y]`.
#[derive(Debug, Clone)]
pub struct KmsMetric {
    pub rho: CMat,
    pub quarter: CMat,
    pub inv_quarter: CMat,
}

impl KmsMetric {
    pub fn new(rho: &CMat) -> Result<Self, AnalysisError> {
        let (vals, _) = eigh(rho);
        if !(vals[0] > 0.0) {
            return Err(AnalysisError::SingularState { min_eigenvalue: vals[0] });
        }
        Ok(KmsMetric { rho: rho.clone(), quarter: mat_pow(rho, 0.25)?, inv_quarter: mat_pow(rho, -0.25)? })
    }

    /// `ρ^{1/4} X ρ^{1/4}`; the KMS inner product is the Hilbert–Schmidt product of these.
    pub fn embed(&self, x: &CMat) -> CMat {
        &self.quarter * x * &self.quarter
    }

    pub fn inner(&self, x: &CMat, y: &CMat) -> C64 {
        hs_inner(&self.embed(x), &self.embed(y))
    }

    pub fn norm_sq(&self, x: &CMat) -> f64 {
        self.inner(x, x).re
    }

    /// `‖ρ^{−1/4} (σ − ρ) ρ^{−1/4}‖_HS`, the KMS norm of the density `σ/ρ − 1`.
    pub fn weighted_distance(&self, sigma: &CMat) -> f64 {
        let diff = &self.inv_quarter * (sigma - &self.rho) * &self.inv_quarter;
        diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `Tr[A† B]`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn kms_inner(x: &CMat, y: &CMat, rho: &CMat) -> Result<C64, AnalysisError> {
    Ok(KmsMetric::new(rho)?.inner(x, y))
}

fn heisenberg_matrix(l: &SuperOp) -> CMat {
    match l.picture {
        Picture::Schrodinger => l.matrix.adjoint(),
        Picture::Heisenberg => l.matrix.clone(),
    }
}

/// `max |⟨E_a, L†E_b⟩ − ⟨L†E_a, E_b⟩|` over matrix units, divided by `‖L‖`.
pub fn kms_symmetry_residual(l: &SuperOp, rho: &CMat) -> Result<f64, AnalysisError> {
    let norm = numlin::spectral_norm(&l.matrix);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let h = mat_pow(rho, 0.5)?;
    let gm = kron(&h.transpose(), &h);
    let lh = heisenberg_matrix(l);
    let diff = &gm * &lh - lh.adjoint() * &gm;
    Ok(numlin::max_abs(&diff) / norm)
}

/// `E(X) = −⟨X, L†X⟩_ρ` (real part).
pub fn dirichlet_direct(l: &SuperOp, metric: &KmsMetric, x: &CMat) -> f64 {
    let d = x.nrows();
    let lx = numlin::unvec(&(heisenberg_matrix(l) * numlin::vec(x)), d);
    -metric.inner(x, &lx).re
}

/// Closed form
/// `E(X) = Σ_a Σ_{ν1ν2} Λ^a_{ν1ν2} e^{β(ν1+ν2)/4} / (2 cosh(β(ν1−ν2)/4)) ⟨[A_{ν1},X],[A_{ν2},X]⟩_ρ`.
pub fn dirichlet_closed(gen: &Generator, metric: &KmsMetric, x: &CMat) -> f64 {
    let sys = &gen.system;
    let beta = sys.beta;
    let f = &sys.grid.freqs;
    let mut total = ZERO;
    for a in 0..sys.jumps.len() {
        let comps = sys.components(a);
        let act: Vec<usize> = (0..f.len()).filter(|&k| sys.active[a][k]).collect();
        let p: Vec<CMat> = act.iter().map(|&k| metric.embed(&numlin::commutator(&comps[k], x))).collect();
        let t = &gen.coeffs.tables[a];
        for (i, &k1) in act.iter().enumerate() {
            for (j, &k2) in act.iter().enumerate() {
                let w = (beta * (f[k1] + f[k2]) / 4.0).exp() / (2.0 * (beta * (f[k1] - f[k2]) / 4.0).cosh());
                total += t[(k1, k2)] * c(w) * hs_inner(&p[i], &p[j]);
            }
        }
    }
    total.re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMethod {
    Hermitized,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub gap: f64,
    pub zero_multiplicity: usize,
    /// Real parts of the spectrum, ascending.
    pub spectrum: Vec<f64>,
    pub method: GapMethod,
    /// Relative non-Hermiticity of the symmetrized generator (hermitized route only).
    pub hermiticity_residual: f64,
}

impl GapResult {
    pub fn is_primitive(&self) -> bool {
        self.zero_multiplicity == 1
    }
}

/// Gap from the KMS-symmetrized spectrum, falling back to a general
/// eigensolve when the generator is not detailed balanced.
pub fn spectral_gap(l: &SuperOp, rho: &CMat) -> Result<GapResult, AnalysisError> {
    match numlin::kms_hermitize(l, rho) {
        Ok(h) => {
            let scale = h.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let tol = 1e-9 * scale;
            let zero_multiplicity = h.eigenvalues.iter().filter(|v| v.abs() < tol).count();
            let gap = h.eigenvalues.iter().filter(|v| v.abs() >= tol).map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            Ok(GapResult {
                gap: if gap.is_finite() { gap } else { 0.0 },
                zero_multiplicity,
                spectrum: h.eigenvalues,
                method: GapMethod::Hermitized,
                hermiticity_residual: h.residual,
            })
        }
        Err(LinalgError::NotDetailedBalanced { residual }) => {
            let ev = numlin::general_eigenvalues(&l.matrix);
            let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let tol = 1e-9 * scale;
            let zero_multiplicity = ev.iter().filter(|z| z.norm() < tol).count();
            let gap = ev.iter().filter(|z| z.norm() >= tol).map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            let mut spectrum: Vec<f64> = ev.iter().map(|z| z.re).collect();
            spectrum.sort_by(f64::total_cmp);
            Ok(GapResult {
                gap: if gap.is_finite() { gap } else { 0.0 },
                zero_multiplicity,
                spectrum,
                method: GapMethod::General,
                hermiticity_residual: residual,
            })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn generator_gap(g: &Generator) -> Result<GapResult, AnalysisError> {
    spectral_gap(&g.superop, &g.system.gibbs.rho)
}

/// Smallest Rayleigh quotient `E(X)/‖X − ⟨I,X⟩I‖²` found by shifted power
/// iteration on `−L†` in the KMS geometry from random Hermitian starts.
/// Always an upper bound on the gap.
pub fn rayleigh_gap_search(l: &SuperOp, rho: &CMat, restarts: usize, iters: usize, seed: u64) -> Result<f64, AnalysisError> {
    let metric = KmsMetric::new(rho)?;
    let d = rho.nrows();
    let lh = heisenberg_matrix(l);
    let shift = numlin::spectral_norm(&lh);
    let eye = CMat::identity(d, d);
    let center = |x: &CMat| -> CMat {
        let m = metric.inner(&eye, x);
        x - eye.scale(m.re)
    };
    let apply = |x: &CMat| numlin::unvec(&(&lh * numlin::vec(x)), d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..restarts {
        let g = CMat::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let mut x = center(&(&g + g.adjoint()));
        for _ in 0..iters {
            // (shift + L†) has the slowest decaying mode on top
            let y = apply(&x) + x.scale(shift);
            x = center(&y);
            let n = metric.norm_sq(&x).sqrt();
            if n == 0.0 {
                break;
            }
            x /= c(n);
        }
        let n = metric.norm_sq(&x);
        if n > 0.0 {
            best = best.min(dirichlet_direct(l, &metric, &x) / n);
        }
    }
    Ok(best)
}

/// Applies `e^{tL}` repeatedly, using the symmetrized eigendecomposition when available.
pub struct Propagator {
    kind: PropKind,
    d: usize,
}

enum PropKind {
    Spectral { s: CMat, si: CMat, vecs: CMat, vals: Vec<f64> },
    Dense(CMat),
}

impl Propagator {
    pub fn new(l: &SuperOp, rho: &CMat) -> Self {
        let d = l.dim();
        match numlin::kms_hermitize(l, rho) {
            Ok(h) => {
                // L^H = S^{-1} M S and S is Hermitian, so L = S M S^{-1}
                let s = h.similarity.clone();
                let si = h.similarity_inv.clone();
                Propagator { kind: PropKind::Spectral { s, si, vecs: h.eigenvectors, vals: h.eigenvalues }, d }
            }
            Err(_) => Propagator { kind: PropKind::Dense(l.matrix.clone()), d },
        }
    }

    pub fn evolve(&self, t: f64, sigma: &CMat) -> CMat {
        let v = numlin::vec(sigma);
        let out = match &self.kind {
            PropKind::Spectral { s, si, vecs, vals } => {
                let mut y = vecs.adjoint() * (si * v);
                for (k, &lam) in vals.iter().enumerate() {
                    y[k] *= c((lam * t).exp());
                }
                s * (vecs * y)
            }
            PropKind::Dense(m) => m.scale(t).exp() * v,
        };
        let r = numlin::unvec(&out, self.d);
        (&r + r.adjoint()).scale(0.5)
    }
}

/// `‖e^{tL}σ0 − ρ‖₁` along a time grid.
pub fn mixing_curve(l: &SuperOp, rho: &CMat, sigma0: &CMat, t_grid: &[f64]) -> Vec<(f64, f64)> {
    let p = Propagator::new(l, rho);
    t_grid.iter().map(|&t| (t, numlin::trace_norm(&(p.evolve(t, sigma0) - rho)))).collect()
}

/// `2 e^{−λ t} ‖ρ^{−1}‖`.
pub fn mixing_bound(gap: f64, log_inv_norm: f64, t: f64) -> f64 {
    2.0 * (log_inv_norm - gap * t).exp()
}

/// True iff every point of the mixing curve lies below the gap bound.
pub fn mixing_bound_check(g: &Generator, sigma0: &CMat, t_grid: &[f64]) -> Result<bool, AnalysisError> {
    let gap = generator_gap(g)?.gap;
    let rho = &g.system.gibbs.rho;
    let lin = g.system.gibbs.log_inv_norm;
    Ok(mixing_curve(&g.superop, rho, sigma0, t_grid)
        .iter()
        .all(|&(t, dist)| dist <= mixing_bound(gap, lin, t) + 1e-12))
}

/// Mixes in `1e-12·I/d` when `σ` is not numerically full rank.
pub fn regularize(sigma: &CMat) -> CMat {
    let d = sigma.nrows();
    let (vals, _) = eigh(sigma);
    if vals[0] > 1e-14 {
        return sigma.clone();
    }
    sigma.scale(1.0 - 1e-12) + CMat::identity(d, d).scale(1e-12 / d as f64)
}

/// `log` of a state after regularization, with negative eigenvalues clipped.
fn safe_log(sigma: &CMat) -> Result<CMat, AnalysisError> {
    let s = regularize(sigma);
    let (vals, vecs) = eigh(&s);
    let floor = 1e-12 / s.nrows() as f64;
    let lv: Vec<f64> = vals.iter().map(|&v| v.max(floor).ln()).collect();
    Ok(numlin::from_spectrum(&lv, &vecs))
}

/// Relative entropy and entropy production against a fixed reference state.
pub struct EntropyContext {
    pub rho: CMat,
    pub log_rho: CMat,
}

impl EntropyContext {
    pub fn new(rho: &CMat) -> Result<Self, AnalysisError> {
        Ok(EntropyContext { rho: rho.clone(), log_rho: mat_log(rho)? })
    }

    pub fn relative_entropy(&self, sigma: &CMat) -> Result<f64, AnalysisError> {
        let s = regularize(sigma);
        let ls = safe_log(&s)?;
        Ok(hs_inner(&s, &(ls - &self.log_rho)).re)
    }

    /// `EP(σ) = −Tr[L(σ)(log σ − log ρ)]`.
    pub fn entropy_production(&self, l: &SuperOp, sigma: &CMat) -> Result<f64, AnalysisError> {
        let s = regularize(sigma);
        let ls = safe_log(&s)?;
        let ls_ = l.apply(&s);
        Ok(-hs_inner(&ls_.adjoint(), &(ls - &self.log_rho)).re)
    }
}

/// `(D(σ‖ρ_β), EP(σ))`.
pub fn entropy_functionals(g: &Generator, sigma: &CMat) -> Result<(f64, f64), AnalysisError> {
    let ctx = EntropyContext::new(&g.system.gibbs.rho)?;
    Ok((ctx.relative_entropy(sigma)?, ctx.entropy_production(&g.superop, sigma)?))
}

/// Hilbert–Schmidt-uniform random state `G G† / Tr(G G†)` from a Ginibre matrix.
pub fn random_state_hs(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let r = &g * g.adjoint();
    let t = r.trace().re;
    let r = r.scale(1.0 / t);
    (&r + r.adjoint()).scale(0.5)
}

pub fn random_pure_state(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let v = CMat::from_fn(d, 1, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (&v * v.adjoint()).scale(1.0 / n)
}

/// `ρ + ε·H` for a random traceless Hermitian `H` of unit HS norm, projected to PSD and renormalized.
pub fn perturbed_state(rho: &CMat, eps: f64, rng: &mut ChaCha8Rng) -> CMat {
    let d = rho.nrows();
    let g = CMat::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let mut h = (&g + g.adjoint()).scale(0.5);
    let tr = h.trace();
    for i in 0..d {
        h[(i, i)] -= tr / c(d as f64);
    }
    let n = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let s = rho + h.scale(eps / n);
    let (vals, vecs) = eigh(&s);
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let clipped: Vec<f64> = clipped.iter().map(|v| v / total).collect();
    numlin::from_spectrum(&clipped, &vecs)
}

/// Seeded probe family: HS-uniform states, smoothed pure states and Gibbs perturbations
/// at `ε ∈ {1e-3, 1e-2, 1e-1}`, cycling in that order.
pub fn probe_states(rho: &CMat, n: usize, seed: u64) -> Vec<CMat> {
    let d = rho.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = [1e-3, 1e-2, 1e-1];
    (0..n)
        .map(|k| match k % 5 {
            0 => random_state_hs(d, &mut rng),
            1 => {
                let p = random_pure_state(d, &mut rng);
                p.scale(0.99) + CMat::identity(d, d).scale(0.01 / d as f64)
            }
            j => perturbed_state(rho, eps[j - 2], &mut rng),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlsiEstimate {
    /// `min EP/D` over the probes; an upper bound on the MLSI constant.
    pub value: f64,
    pub argmin: usize,
    pub n_probes: usize,
    pub seed: u64,
}

pub fn mlsi_estimate(g: &Generator, n_probes: usize, seed: u64) -> Result<MlsiEstimate, AnalysisError> {
    if n_probes < 100 {
        return Err(AnalysisError::InvalidArgument(format!("n_probes must be at least 100, got {n_probes}")));
    }
    let ctx = EntropyContext::new(&g.system.gibbs.rho)?;
    let probes = probe_states(&g.system.gibbs.rho, n_probes, seed);
    let mut best = (f64::INFINITY, 0);
    for (k, s) in probes.iter().enumerate() {
        let dv = ctx.relative_entropy(s)?;
        if dv < 1e-12 {
            continue;
        }
        let r = ctx.entropy_production(&g.superop, s)? / dv;
        if r < best.0 {
            best = (r, k);
        }
    }
    Ok(MlsiEstimate { value: best.0, argmin: best.1, n_probes, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sweep", rename_all = "snake_case")]
pub enum SweepFamily {
    GaussianKappa { kappa_grid: Vec<f64> },
    MacroBathAlpha { alpha_grid: Vec<f64>, bath: BathSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub family: String,
    pub parameter: String,
    pub params: Vec<f64>,
    pub gaps: Vec<f64>,
    pub zero_multiplicity: Vec<usize>,
    pub kms_residuals: Vec<f64>,
    pub fixedpoint_residuals: Vec<f64>,
    pub monotonic: bool,
    pub model: String,
    pub seed: Option<u64>,
    pub beta: f64,
}

/// Tolerance of the monotonicity flag, relative to `max(1, gap)`.
pub const MONOTONE_TOL: f64 = 1e-8;

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("param,gap,zero_mult,kms_residual,fixedpoint_residual\n");
        for i in 0..self.params.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{},{:.16e},{:.16e}\n",
                self.params[i], self.gaps[i], self.zero_multiplicity[i], self.kms_residuals[i], self.fixedpoint_residuals[i]
            ));
        }
        s
    }
}

/// Gap per grid point; grid points run in parallel and are merged in grid order.
pub fn monotonicity_sweep(family: &SweepFamily, sys: &Arc<System>, seed: Option<u64>) -> Result<SweepReport, AnalysisError> {
    let (name, parameter, grid): (&str, &str, &[f64]) = match family {
        SweepFamily::GaussianKappa { kappa_grid } => ("gaussian", "kappa", kappa_grid),
        SweepFamily::MacroBathAlpha { alpha_grid, .. } => ("macro_bath", "alpha", alpha_grid),
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(AnalysisError::InvalidArgument("sweep grid must be nonempty and sorted ascending".into()));
    }
    let rows: Vec<Result<(f64, usize, f64, f64), AnalysisError>> = grid
        .par_iter()
        .map(|&p| {
            let g = match family {
                SweepFamily::GaussianKappa { .. } => generators::build_gaussian_generator(sys, p, true)?,
                SweepFamily::MacroBathAlpha { bath, .. } => generators::build_mb_generator(sys, bath, p, true)?,
            };
            let gap = generator_gap(&g)?;
            let kms = kms_symmetry_residual(&g.superop, &sys.gibbs.rho)?;
            Ok((gap.gap, gap.zero_multiplicity, kms, g.fixed_point_residual()))
        })
        .collect();
    let mut gaps = Vec::new();
    let mut zm = Vec::new();
    let mut kms = Vec::new();
    let mut fp = Vec::new();
    for r in rows {
        let (a, b, c_, d) = r?;
        gaps.push(a);
        zm.push(b);
        kms.push(c_);
        fp.push(d);
    }
    let monotonic = gaps.windows(2).all(|w| {
        let tol = MONOTONE_TOL * w[0].abs().max(1.0);
        match family {
            SweepFamily::GaussianKappa { .. } => w[1] >= w[0] - tol,
            SweepFamily::MacroBathAlpha { .. } => w[1] <= w[0] + tol,
        }
    });
    Ok(SweepReport {
        family: name.into(),
        parameter: parameter.into(),
        params: grid.to_vec(),
        gaps,
        zero_multiplicity: zm,
        kms_residuals: kms,
        fixedpoint_residuals: fp,
        monotonic,
        model: sys.hamiltonian.model_tag.clone(),
        seed,
        beta: sys.beta,
    })
}

/// `f_δ(s) = δ √(2/π) e^{−2δ²s²}`.
pub fn conv_f(delta: f64, s: f64) -> f64 {
    delta * (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * delta * delta * s * s).exp()
}

/// `g_{δ,δ'}(s) = δδ'/√(δ'²−δ²) √(2/π) e^{−2δ²δ'²s²/(δ'²−δ²)}`.
pub fn conv_g(delta: f64, delta_prime: f64, s: f64) -> f64 {
    let q = delta_prime * delta_prime - delta * delta;
    delta * delta_prime / q.sqrt() * (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * (delta * delta_prime * s).powi(2) / q).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionCheck {
    /// `max_s |(g ⋆ f_{δ'})(s) − f_δ(s)| / f_δ(0)`.
    pub residual: f64,
    pub g_l1: f64,
}

/// Quadrature check of `g_{δ,δ'} ⋆ f_{δ'} = f_δ` and `‖g_{δ,δ'}‖₁ = 1`.
pub fn convolution_identity_check(delta: f64, delta_prime: f64) -> Result<ConvolutionCheck, AnalysisError> {
    if !(delta > 0.0 && delta < delta_prime) {
        return Err(AnalysisError::InvalidArgument(format!("need 0 < δ < δ', got {delta}, {delta_prime}")));
    }
    let sg = (delta_prime * delta_prime - delta * delta).sqrt() / (2.0 * delta * delta_prime);
    let sf = 1.0 / (2.0 * delta_prime);
    let s_out = 1.0 / (2.0 * delta);
    let nodes = quad::composite_legendre(-14.0 * sg, 14.0 * sg, sg.min(sf) / 2.0, 10);
    let g_l1: f64 = nodes.iter().map(|&(u, w)| w * conv_g(delta, delta_prime, u)).sum();
    let mut residual: f64 = 0.0;
    for k in -40..=40 {
        let s = k as f64 * 0.15 * s_out;
        let conv: f64 = nodes.iter().map(|&(u, w)| w * conv_g(delta, delta_prime, u) * conv_f(delta_prime, s - u)).sum();
        residual = residual.max((conv - conv_f(delta, s)).abs());
    }
    Ok(ConvolutionCheck { residual: residual / conv_f(delta, 0.0), g_l1 })
}

/// Least-squares fit of `log y = slope · log x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% Student-t interval on the slope; infinite with fewer than three points.
    pub slope_ci95: (f64, f64),
}

pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LogLogFit, AnalysisError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(AnalysisError::InvalidArgument("need at least two (x, y) pairs of equal length".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(AnalysisError::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if lx.len() < 3 {
        return Ok(LogLogFit { slope, intercept, slope_stderr: f64::INFINITY, slope_ci95: (f64::NEG_INFINITY, f64::INFINITY) });
    }
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = n - 2.0;
    let slope_stderr = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).expect("positive dof").inverse_cdf(0.975);
    Ok(LogLogFit { slope, intercept, slope_stderr, slope_ci95: (slope - t * slope_stderr, slope + t * slope_stderr) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndBound {
    /// `2‖ρ^{−1}‖ e^{−λα²t}`.
    pub mixing_term: f64,
    /// `α³ (Γt)(Γτ + Γβ e^{(αΓβ)²})`.
    pub coupling_term: f64,
    /// `α² Γβ`.
    pub lamb_term: f64,
    pub total: f64,
}

pub fn endtoend_bound(alpha: f64, t: f64, gamma: f64, tau: f64, beta: f64, lambda: f64, log_inv_norm: f64) -> EndToEndBound {
    let mixing_term = 2.0 * (log_inv_norm - lambda * alpha * alpha * t).exp();
    let coupling_term = alpha.powi(3) * (gamma * t) * (gamma * tau + gamma * beta * ((alpha * gamma * beta).powi(2)).exp());
    let lamb_term = alpha * alpha * gamma * beta;
    EndToEndBound { mixing_term, coupling_term, lamb_term, total: mixing_term + coupling_term + lamb_term }
}
