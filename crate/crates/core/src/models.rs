//! System Hamiltonians, Gibbs states, jump sets and Bohr-frequency decompositions.
//!
//! Energies carry the units of `H`; `beta` carries inverse energy.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numlin::{
    self, commutator, eigh, from_spectrum, max_abs, pauli_string, CMat, LinalgError, Pauli, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("Bohr frequency clusters {left} and {right} are closer than 10x the clustering tolerance {tol:e}")]
    ClusterAmbiguity { left: f64, right: f64, tol: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One Pauli-string term of a Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// Qubits on which the string acts non-trivially, ascending.
    pub support: Vec<usize>,
    pub coefficient: f64,
    /// Full-length Pauli string (identity off the support).
    pub paulis: Vec<Pauli>,
}

impl Term {
    pub fn new(n_qubits: usize, ops: &[(usize, Pauli)], coefficient: f64) -> Self {
        let mut paulis = vec![Pauli::I; n_qubits];
        for &(site, p) in ops {
            paulis[site] = p;
        }
        let support = (0..n_qubits).filter(|&i| paulis[i] != Pauli::I).collect();
        Term { support, coefficient, paulis }
    }

    pub fn matrix(&self) -> CMat {
        pauli_string(&self.paulis).scale(self.coefficient)
    }

    /// Pauli strings commute iff they anticommute on an even number of sites.
    pub fn commutes_with(&self, other: &Term) -> bool {
        let clashes = self
            .paulis
            .iter()
            .zip(&other.paulis)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        clashes % 2 == 0
    }

    pub fn label(&self) -> String {
        self.paulis.iter().map(|p| p.symbol()).collect()
    }
}

/// Uniform two-site coupling applied on every bond of an open chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondCoupling {
    pub left: Pauli,
    pub right: Pauli,
    pub strength_energy: f64,
}

/// Uniform single-site field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteField {
    pub pauli: Pauli,
    pub strength_energy: f64,
}

/// Model descriptors accepted by [`build_hamiltonian`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomKlLocal {
        n_qubits: usize,
        k: usize,
        l: usize,
        h_energy: f64,
        seed: u64,
    },
    NnChain1d {
        n_qubits: usize,
        bonds: Vec<BondCoupling>,
        #[serde(default)]
        fields: Vec<SiteField>,
    },
    CommutingZzChain {
        n_qubits: usize,
        j_energy: f64,
        g_z_energy: f64,
    },
    /// Four-qubit stabilizer-type commuting model: `−J (XXXX + ZZZZ + Z0Z1 + Z2Z3)`.
    CssPlaquette { j_energy: f64 },
    SingleQubit { omega0_energy: f64 },
    /// Dense matrix given as rows of `[re, im]` pairs.
    Custom { matrix: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub n_qubits: usize,
    pub matrix: CMat,
    pub eigvals: Vec<f64>,
    pub eigvecs: CMat,
    /// Empty for custom matrices.
    pub terms: Vec<Term>,
    pub model_tag: String,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest absolute eigenvalue.
    pub fn norm(&self) -> f64 {
        self.eigvals.iter().map(|e| e.abs()).fold(0.0, f64::max)
    }

    pub fn from_terms(n_qubits: usize, terms: Vec<Term>, model_tag: String) -> Self {
        let d = 1 << n_qubits;
        let mut matrix = CMat::zeros(d, d);
        for t in &terms {
            matrix += t.matrix();
        }
        let (eigvals, eigvecs) = eigh(&matrix);
        Hamiltonian { n_qubits, matrix, eigvals, eigvecs, terms, model_tag }
    }

    pub fn from_matrix(matrix: CMat, model_tag: String) -> Result<Self, ModelError> {
        let d = matrix.nrows();
        if d == 0 || !d.is_power_of_two() || matrix.ncols() != d {
            return Err(ModelError::InvalidSpec(format!("custom matrix must be square with power-of-two dimension, got {}x{}", d, matrix.ncols())));
        }
        let residual = numlin::hermiticity_residual(&matrix);
        if residual >= numlin::HERM_TOL_INPUT * max_abs(&matrix).max(1.0) {
            return Err(ModelError::InvalidSpec(format!("custom matrix is not Hermitian (residual {residual:e})")));
        }
        let (eigvals, eigvecs) = eigh(&matrix);
        Ok(Hamiltonian {
            n_qubits: d.trailing_zeros() as usize,
            matrix,
            eigvals,
            eigvecs,
            terms: Vec::new(),
            model_tag,
        })
    }

    /// True when the Hamiltonian is given as pairwise commuting terms.
    pub fn is_commuting(&self) -> bool {
        !self.terms.is_empty()
            && self
                .terms
                .iter()
                .enumerate()
                .all(|(i, a)| self.terms[i + 1..].iter().all(|b| a.commutes_with(b)))
    }
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<Hamiltonian, ModelError> {
    match spec {
        ModelSpec::RandomKlLocal { n_qubits, k, l, h_energy, seed } => {
            random_kl_local(*n_qubits, *k, *l, *h_energy, *seed)
        }
        ModelSpec::NnChain1d { n_qubits, bonds, fields } => {
            let n = *n_qubits;
            check_qubits(n)?;
            let mut terms = Vec::new();
            for b in bonds {
                if b.left == Pauli::I && b.right == Pauli::I {
                    return Err(ModelError::InvalidSpec("identity bond coupling".into()));
                }
                for i in 0..n.saturating_sub(1) {
                    terms.push(Term::new(n, &[(i, b.left), (i + 1, b.right)], b.strength_energy));
                }
            }
            for f in fields {
                for i in 0..n {
                    terms.push(Term::new(n, &[(i, f.pauli)], f.strength_energy));
                }
            }
            Ok(Hamiltonian::from_terms(n, terms, format!("nn_chain_1d(N={n})")))
        }
        ModelSpec::CommutingZzChain { n_qubits, j_energy, g_z_energy } => {
            let n = *n_qubits;
            check_qubits(n)?;
            let mut terms = Vec::new();
            for i in 0..n.saturating_sub(1) {
                terms.push(Term::new(n, &[(i, Pauli::Z), (i + 1, Pauli::Z)], *j_energy));
            }
            for i in 0..n {
                terms.push(Term::new(n, &[(i, Pauli::Z)], *g_z_energy));
            }
            let h = Hamiltonian::from_terms(n, terms, format!("commuting_zz_chain(N={n},J={j_energy},g_z={g_z_energy})"));
            debug_assert!(h.is_commuting());
            Ok(h)
        }
        ModelSpec::CssPlaquette { j_energy } => {
            let j = -*j_energy;
            let x4: Vec<(usize, Pauli)> = (0..4).map(|i| (i, Pauli::X)).collect();
            let z4: Vec<(usize, Pauli)> = (0..4).map(|i| (i, Pauli::Z)).collect();
            let terms = vec![
                Term::new(4, &x4, j),
                Term::new(4, &z4, j),
                Term::new(4, &[(0, Pauli::Z), (1, Pauli::Z)], j),
                Term::new(4, &[(2, Pauli::Z), (3, Pauli::Z)], j),
            ];
            Ok(Hamiltonian::from_terms(4, terms, format!("css_plaquette(J={j_energy})")))
        }
        ModelSpec::SingleQubit { omega0_energy } => Ok(Hamiltonian::from_terms(
            1,
            vec![Term::new(1, &[(0, Pauli::Z)], omega0_energy / 2.0)],
            format!("single_qubit(omega0={omega0_energy})"),
        )),
        ModelSpec::Custom { matrix } => {
            let d = matrix.len();
            if matrix.iter().any(|r| r.len() != d) {
                return Err(ModelError::InvalidSpec("custom matrix is not square".into()));
            }
            let m = CMat::from_fn(d, d, |i, j| C64::new(matrix[i][j][0], matrix[i][j][1]));
            Hamiltonian::from_matrix(m, "custom".into())
        }
    }
}

fn check_qubits(n: usize) -> Result<(), ModelError> {
    if n == 0 || n > 10 {
        return Err(ModelError::InvalidSpec(format!("n_qubits must be in 1..=10, got {n}")));
    }
    Ok(())
}

/// Random Pauli-string Hamiltonian with terms of weight at most `k` and at most
/// `l` terms touching any qubit. Supports are drawn greedily from a shuffled
/// list of all subsets of size `1..=k`.
pub fn random_kl_local(n: usize, k: usize, l: usize, h: f64, seed: u64) -> Result<Hamiltonian, ModelError> {
    check_qubits(n)?;
    if k == 0 || k > n {
        return Err(ModelError::InvalidSpec(format!("k = {k} must be in 1..={n}")));
    }
    if l == 0 {
        return Err(ModelError::InvalidSpec("l must be positive".into()));
    }
    if !(h > 0.0) {
        return Err(ModelError::InvalidSpec(format!("h must be positive, got {h}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .filter(|m| m.count_ones() as usize <= k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    subsets.shuffle(&mut rng);
    let mut load = vec![0usize; n];
    let mut terms = Vec::new();
    for s in subsets {
        if s.iter().any(|&i| load[i] >= l) {
            continue;
        }
        for &i in &s {
            load[i] += 1;
        }
        let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
        let ops: Vec<(usize, Pauli)> = s.iter().map(|&i| (i, paulis[rng.random_range(0..3)])).collect();
        let coef = rng.random_range(-h..=h);
        terms.push(Term::new(n, &ops, coef));
    }
    Ok(Hamiltonian::from_terms(n, terms, format!("random_kl_local(N={n},k={k},l={l},h={h},seed={seed})")))
}

#[derive(Debug, Clone)]
pub struct GibbsState {
    pub rho: CMat,
    pub beta: f64,
    /// `log ‖ρ_β^{-1}‖`.
    pub log_inv_norm: f64,
}

pub fn gibbs_state(h: &Hamiltonian, beta: f64) -> GibbsState {
    let e_min = h.eigvals[0];
    let e_max = *h.eigvals.last().unwrap();
    let weights: Vec<f64> = h.eigvals.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let rho = from_spectrum(&probs, &h.eigvecs);
    GibbsState { rho, beta, log_inv_norm: beta * (e_max - e_min) + z.ln() }
}

/// Clustered Bohr frequencies of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct BohrGrid {
    /// Sorted cluster representatives, closed under negation, containing 0.
    pub freqs: Vec<f64>,
    /// Cluster index of `E_i − E_j` stored at `i + d·j`.
    index: Vec<usize>,
    pub dim: usize,
    pub tol_cluster: f64,
}

impl BohrGrid {
    pub fn new(h: &Hamiltonian, tol_cluster: f64) -> Result<Self, ModelError> {
        if !(tol_cluster > 0.0) {
            return Err(ModelError::InvalidSpec(format!("tol_cluster must be positive, got {tol_cluster}")));
        }
        let e = &h.eigvals;
        let d = e.len();
        let mut diffs: Vec<f64> = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                diffs.push((e[i] - e[j]).abs());
            }
        }
        diffs.sort_by(f64::total_cmp);
        // single linkage on nonnegative differences; first cluster holds 0
        let mut clusters: Vec<(f64, f64, f64, usize)> = Vec::new(); // (lo, hi, sum, count)
        for &x in &diffs {
            match clusters.last_mut() {
                Some(cl) if x - cl.1 <= tol_cluster => {
                    cl.1 = x;
                    cl.2 += x;
                    cl.3 += 1;
                }
                _ => clusters.push((x, x, x, 1)),
            }
        }
        for w in clusters.windows(2) {
            if w[1].0 - w[0].1 < 10.0 * tol_cluster {
                return Err(ModelError::ClusterAmbiguity { left: w[0].1, right: w[1].0, tol: tol_cluster });
            }
        }
        let reps: Vec<f64> = clusters
            .iter()
            .enumerate()
            .map(|(k, cl)| if k == 0 { 0.0 } else { cl.2 / cl.3 as f64 })
            .collect();
        let m = reps.len();
        let mut freqs: Vec<f64> = reps[1..].iter().rev().map(|r| -r).collect();
        freqs.extend_from_slice(&reps);
        let zero_pos = m - 1;
        let mut index = vec![0usize; d * d];
        for i in 0..d {
            for j in 0..d {
                let x = e[i] - e[j];
                let a = x.abs();
                let k = clusters.partition_point(|cl| cl.1 < a);
                index[i + d * j] = if k == 0 {
                    zero_pos
                } else if x > 0.0 {
                    zero_pos + k
                } else {
                    zero_pos - k
                };
            }
        }
        Ok(BohrGrid { freqs, index, dim: d, tol_cluster })
    }

    /// Default tolerance `1e-9·‖H‖` (absolute `1e-9` when `H = 0`).
    pub fn default_tol(h: &Hamiltonian) -> f64 {
        1e-9 * h.norm().max(1.0)
    }

    pub fn with_default_tol(h: &Hamiltonian) -> Result<Self, ModelError> {
        Self::new(h, Self::default_tol(h))
    }

    /// Cluster index of `E_i − E_j`.
    pub fn id(&self, i: usize, j: usize) -> usize {
        self.index[i + self.dim * j]
    }

    pub fn freq(&self, i: usize, j: usize) -> f64 {
        self.freqs[self.id(i, j)]
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Position of `−ν` for the frequency at position `k`.
    pub fn negated(&self, k: usize) -> usize {
        self.freqs.len() - 1 - k
    }

    /// Smallest positive frequency, if any.
    pub fn min_positive(&self) -> Option<f64> {
        self.freqs.iter().cloned().find(|&f| f > 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct BohrDecomposition {
    pub frequencies: Vec<f64>,
    /// `components[k]` is `A_ν` for `ν = frequencies[k]`, in the computational basis.
    pub components: Vec<CMat>,
    pub tol_cluster: f64,
}

impl BohrDecomposition {
    pub fn component(&self, nu: f64) -> Option<&CMat> {
        self.frequencies
            .iter()
            .position(|&f| (f - nu).abs() <= self.tol_cluster)
            .map(|k| &self.components[k])
    }
}

/// `A` written in the eigenbasis of `H`.
pub fn to_eigenbasis(h: &Hamiltonian, a: &CMat) -> CMat {
    h.eigvecs.adjoint() * a * &h.eigvecs
}

pub fn from_eigenbasis(h: &Hamiltonian, a: &CMat) -> CMat {
    &h.eigvecs * a * h.eigvecs.adjoint()
}

pub fn bohr_components(h: &Hamiltonian, grid: &BohrGrid, a: &CMat) -> Vec<CMat> {
    let d = h.dim();
    let at = to_eigenbasis(h, a);
    let mut comps = vec![CMat::zeros(d, d); grid.len()];
    for i in 0..d {
        for j in 0..d {
            comps[grid.id(i, j)][(i, j)] = at[(i, j)];
        }
    }
    comps.iter().map(|m| from_eigenbasis(h, m)).collect()
}

pub fn bohr_decompose(h: &Hamiltonian, a: &CMat, tol_cluster: f64) -> Result<BohrDecomposition, ModelError> {
    if a.nrows() != h.dim() || a.ncols() != h.dim() {
        return Err(ModelError::InvalidSpec(format!("operator dimension {} does not match H dimension {}", a.nrows(), h.dim())));
    }
    let grid = BohrGrid::new(h, tol_cluster)?;
    let components = bohr_components(h, &grid, a);
    Ok(BohrDecomposition { frequencies: grid.freqs.clone(), components, tol_cluster })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpLabel {
    pub site: usize,
    pub pauli: Pauli,
}

#[derive(Debug, Clone)]
pub struct JumpSet {
    pub labels: Vec<JumpLabel>,
    pub ops: Vec<CMat>,
    /// `‖Σ_a A_a† A_a‖`.
    pub norm_g: f64,
}

impl JumpSet {
    pub fn new(labels: Vec<JumpLabel>, ops: Vec<CMat>) -> Self {
        let d = ops[0].nrows();
        let mut g = CMat::zeros(d, d);
        for a in &ops {
            g += a.adjoint() * a;
        }
        let norm_g = eigh(&g).0.iter().map(|x| x.abs()).fold(0.0, f64::max);
        JumpSet { labels, ops, norm_g }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// All `3N` single-site Paulis.
pub fn pauli_jump_set(n_qubits: usize) -> JumpSet {
    assert!(n_qubits >= 1);
    let mut labels = Vec::new();
    let mut ops = Vec::new();
    for site in 0..n_qubits {
        for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
            ops.push(numlin::embed_site(&pauli.matrix(), site, n_qubits).expect("site in range"));
            labels.push(JumpLabel { site, pauli });
        }
    }
    JumpSet::new(labels, ops)
}

/// Qubits touched by a Pauli string term, as a set.
pub fn support_set(t: &Term) -> BTreeSet<usize> {
    t.support.iter().cloned().collect()
}

/// Maximum over term pairs of `‖[h_a, h_b]‖`, zero for commuting models.
pub fn max_term_commutator(h: &Hamiltonian) -> f64 {
    let mats: Vec<CMat> = h.terms.iter().map(|t| t.matrix()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            worst = worst.max(max_abs(&commutator(&mats[i], &mats[j])));
        }
    }
    worst
}
