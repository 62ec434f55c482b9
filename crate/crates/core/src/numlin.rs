//! Dense complex linear algebra and superoperator plumbing.
//!
//! Vectorization is column-stacking throughout: the element `(i, j)` of a
//! `d × d` operator sits at index `i + d·j`, and the conjugation map
//! `ρ ↦ A ρ B†` is the matrix `conj(B) ⊗ A`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Tolerance for Hermiticity of inputs.
pub const HERM_TOL_INPUT: f64 = 1e-12;
/// Tolerance for Hermiticity of derived objects.
pub const HERM_TOL_DERIVED: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("input is not Hermitian (residual {residual:e})")]
    NonHermitianInput { residual: f64 },
    #[error("function undefined at eigenvalue {eigenvalue}")]
    DomainError { eigenvalue: f64 },
    #[error("site {site} out of range for {n_qubits} qubits")]
    IndexOutOfRange { site: usize, n_qubits: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative weight {weight} on jump {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("generator is not KMS detailed balanced (residual {residual:e})")]
    NotDetailedBalanced { residual: f64 },
}

/// Single-qubit Pauli labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMat {
        let (a, b, c, d) = match self {
            Pauli::I => (ONE, ZERO, ZERO, ONE),
            Pauli::X => (ZERO, ONE, ONE, ZERO),
            Pauli::Y => (ZERO, -I, I, ZERO),
            Pauli::Z => (ONE, ZERO, ZERO, -ONE),
        };
        CMat::from_row_slice(2, 2, &[a, b, c, d])
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Picture {
    Schrodinger,
    Heisenberg,
}

/// A linear map on `d × d` operators stored as a `d² × d²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    pub matrix: CMat,
    pub picture: Picture,
}

impl SuperOp {
    pub fn new(matrix: CMat, picture: Picture) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols());
        SuperOp { matrix, picture }
    }

    pub fn zeros(d: usize) -> Self {
        SuperOp::new(CMat::zeros(d * d, d * d), Picture::Schrodinger)
    }

    pub fn identity(d: usize) -> Self {
        SuperOp::new(CMat::identity(d * d, d * d), Picture::Schrodinger)
    }

    /// Dimension of the underlying Hilbert space.
    pub fn dim(&self) -> usize {
        isqrt(self.matrix.nrows())
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        unvec(&(&self.matrix * vec(x)), self.dim())
    }

    /// Adjoint with respect to the Hilbert-Schmidt inner product.
    pub fn adjoint(&self) -> SuperOp {
        let picture = match self.picture {
            Picture::Schrodinger => Picture::Heisenberg,
            Picture::Heisenberg => Picture::Schrodinger,
        };
        SuperOp::new(self.matrix.adjoint(), picture)
    }

    pub fn scaled(&self, c: f64) -> SuperOp {
        SuperOp::new(self.matrix.scale(c), self.picture)
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &SuperOp) -> SuperOp {
        SuperOp::new(&self.matrix * &other.matrix, self.picture)
    }

    pub fn exp(&self, t: f64) -> SuperOp {
        SuperOp::new(self.matrix.scale(t).exp(), self.picture)
    }
}

pub fn isqrt(n: usize) -> usize {
    let r = (n as f64).sqrt().round() as usize;
    assert_eq!(r * r, n, "{n} is not a perfect square");
    r
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Column-stacking vectorization.
pub fn vec(x: &CMat) -> CMat {
    let n = x.nrows() * x.ncols();
    CMat::from_column_slice(n, 1, x.as_slice())
}

pub fn unvec(v: &CMat, d: usize) -> CMat {
    assert_eq!(v.len(), d * d);
    CMat::from_column_slice(d, d, v.as_slice())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

pub fn hermiticity_residual(a: &CMat) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn trace(a: &CMat) -> C64 {
    a.trace()
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    if hermiticity_residual(a) < 1e-13 * (1.0 + max_abs(a)) {
        eigh(a).0.iter().map(|x| x.abs()).sum()
    } else {
        a.clone().singular_values().iter().sum()
    }
}

pub fn spectral_norm(a: &CMat) -> f64 {
    a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
/// The input is symmetrized before decomposition.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `U diag(values) U†`.
pub fn from_spectrum(vals: &[f64], vecs: &CMat) -> CMat {
    let mut scaled = vecs.clone();
    for (k, &v) in vals.iter().enumerate() {
        scaled.column_mut(k).scale_mut(v);
    }
    &scaled * vecs.adjoint()
}

/// Applies `f` to a Hermitian matrix through its eigendecomposition.
pub fn mat_func<F: Fn(f64) -> f64>(a: &CMat, f: F) -> Result<CMat, LinalgError> {
    let residual = hermiticity_residual(a);
    if residual >= HERM_TOL_INPUT * max_abs(a).max(1.0) {
        return Err(LinalgError::NonHermitianInput { residual });
    }
    let (vals, vecs) = eigh(a);
    let mut fv = Vec::with_capacity(vals.len());
    for &v in &vals {
        let y = f(v);
        if !y.is_finite() {
            return Err(LinalgError::DomainError { eigenvalue: v });
        }
        fv.push(y);
    }
    Ok(from_spectrum(&fv, &vecs))
}

/// Matrix power of a positive definite matrix.
pub fn mat_pow(a: &CMat, p: f64) -> Result<CMat, LinalgError> {
    mat_func(a, |x| if x > 0.0 { x.powf(p) } else { f64::NAN })
}

pub fn mat_log(a: &CMat) -> Result<CMat, LinalgError> {
    mat_func(a, |x| if x > 0.0 { x.ln() } else { f64::NAN })
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on qubit `site` (site 0 is leftmost).
pub fn embed_site(op: &CMat, site: usize, n_qubits: usize) -> Result<CMat, LinalgError> {
    if site >= n_qubits {
        return Err(LinalgError::IndexOutOfRange { site, n_qubits });
    }
    if op.nrows() != 2 || op.ncols() != 2 {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected 2x2 site operator, got {}x{}",
            op.nrows(),
            op.ncols()
        )));
    }
    let left = CMat::identity(1 << site, 1 << site);
    let rest = n_qubits - site - 1;
    let right = CMat::identity(1 << rest, 1 << rest);
    Ok(kron(&kron(&left, op), &right))
}

/// Tensor product of a Pauli string, leftmost factor first.
pub fn pauli_string(paulis: &[Pauli]) -> CMat {
    paulis
        .iter()
        .fold(CMat::identity(1, 1), |acc, p| kron(&acc, &p.matrix()))
}

pub fn partial_trace_last(rho: &CMat, d_b: usize) -> Result<CMat, LinalgError> {
    let n = rho.nrows();
    if d_b == 0 || n % d_b != 0 || rho.ncols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "cannot trace out a factor of dimension {d_b} from dimension {n}"
        )));
    }
    let d_s = n / d_b;
    Ok(CMat::from_fn(d_s, d_s, |i, j| {
        (0..d_b).map(|k| rho[(i * d_b + k, j * d_b + k)]).sum()
    }))
}

/// Superoperator of `ρ ↦ A ρ B†`.
pub fn sandwich(a: &CMat, b: &CMat) -> CMat {
    kron(&b.conjugate(), a)
}

/// Superoperator of `ρ ↦ A ρ`.
pub fn left_mul(a: &CMat) -> CMat {
    let d = a.nrows();
    kron(&CMat::identity(d, d), a)
}

/// Superoperator of `ρ ↦ ρ A`.
pub fn right_mul(a: &CMat) -> CMat {
    let d = a.nrows();
    kron(&a.transpose(), &CMat::identity(d, d))
}

/// Superoperator of `ρ ↦ −i[B, ρ]`.
pub fn coherent_superop(b: &CMat) -> CMat {
    (left_mul(b) - right_mul(b)) * (-I)
}

/// GKLS generator `−i[B,ρ] + Σ_j w_j (L_j ρ L_j† − ½{L_j†L_j, ρ})`.
pub fn superop_from_gkls(coherent: &CMat, jumps: &[(CMat, f64)]) -> Result<SuperOp, LinalgError> {
    let d = coherent.nrows();
    let mut m = coherent_superop(coherent);
    for (index, (l, w)) in jumps.iter().enumerate() {
        if *w < 0.0 || !w.is_finite() {
            return Err(LinalgError::NegativeWeight { index, weight: *w });
        }
        if l.nrows() != d {
            return Err(LinalgError::DimensionMismatch(format!(
                "jump {index} has dimension {}, coherent part {d}",
                l.nrows()
            )));
        }
        let ldl = l.adjoint() * l;
        m += (sandwich(l, l) - (left_mul(&ldl) + right_mul(&ldl)).scale(0.5)).scale(*w);
    }
    Ok(SuperOp::new(m, Picture::Schrodinger))
}

/// Result of symmetrizing a generator in the KMS geometry.
#[derive(Debug, Clone)]
pub struct Hermitized {
    /// Hermitian (up to `residual`) similarity transform of the Heisenberg generator.
    pub matrix: CMat,
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors of `matrix`, columns aligned with `eigenvalues`.
    pub eigenvectors: CMat,
    /// Max entry of `M − M†` relative to the largest entry of `M`.
    pub residual: f64,
    /// `ρ^{T/4} ⊗ ρ^{1/4}`, the vectorized form of `X ↦ ρ^{1/4} X ρ^{1/4}`.
    pub similarity: CMat,
    pub similarity_inv: CMat,
}

/// Transforms `L†` by `X ↦ ρ^{1/4} X ρ^{1/4}`; Hermitian when `L` is KMS symmetric.
pub fn kms_hermitize(l: &SuperOp, rho: &CMat) -> Result<Hermitized, LinalgError> {
    let d = rho.nrows();
    if l.dim() != d {
        return Err(LinalgError::DimensionMismatch(format!(
            "generator acts on dimension {}, state has dimension {d}",
            l.dim()
        )));
    }
    let q = mat_pow(rho, 0.25)?;
    let qi = mat_pow(rho, -0.25)?;
    let s = kron(&q.transpose(), &q);
    let si = kron(&qi.transpose(), &qi);
    let heis = match l.picture {
        Picture::Schrodinger => l.matrix.adjoint(),
        Picture::Heisenberg => l.matrix.clone(),
    };
    let m = &s * heis * &si;
    let scale = max_abs(&m);
    let residual = if scale == 0.0 { 0.0 } else { hermiticity_residual(&m) / scale };
    if residual > HERM_TOL_DERIVED {
        return Err(LinalgError::NotDetailedBalanced { residual });
    }
    let (eigenvalues, eigenvectors) = eigh(&m);
    Ok(Hermitized {
        matrix: m,
        eigenvalues,
        eigenvectors,
        residual,
        similarity: s,
        similarity_inv: si,
    })
}

/// Exponential `e^{-iK}` of a Hermitian `K` by Taylor series with scaling and squaring,
/// written into `out`. `work` buffers must match the dimension of `K`.
pub fn expm_neg_i_into(k: &CMat, out: &mut CMat, work: &mut [CMat; 2]) {
    let n = k.nrows();
    let norm1 = (0..n)
        .map(|j| k.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0;
    let mut theta = norm1;
    while theta > 0.5 {
        theta *= 0.5;
        s += 1;
    }
    let scale = -I / c((1u64 << s) as f64);
    // degree chosen so that theta^(m+1)/(m+1)! < 1e-18
    let mut m = 1;
    let mut term = theta;
    while term > 1e-18 && m < 30 {
        m += 1;
        term *= theta / m as f64;
    }
    let [x, tmp] = work;
    x.copy_from(k);
    *x *= scale;
    // Horner: P = I + X/1 (I + X/2 (I + ... (I + X/m)))
    out.fill_with_identity();
    for j in (1..=m).rev() {
        tmp.gemm(c(1.0 / j as f64), x, out, ZERO);
        out.copy_from(tmp);
        for i in 0..n {
            out[(i, i)] += ONE;
        }
    }
    for _ in 0..s {
        tmp.gemm(ONE, out, out, ZERO);
        out.copy_from(tmp);
    }
}

pub fn expm_neg_i(k: &CMat) -> CMat {
    let n = k.nrows();
    let mut out = CMat::zeros(n, n);
    let mut work = [CMat::zeros(n, n), CMat::zeros(n, n)];
    expm_neg_i_into(k, &mut out, &mut work);
    out
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn general_eigenvalues(m: &CMat) -> Vec<C64> {
    m.clone()
        .schur()
        .eigenvalues()
        .expect("complex Schur form is triangular")
        .iter()
        .cloned()
        .collect()
}

/// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
pub fn choi(phi: &SuperOp) -> CMat {
    let d = phi.dim();
    let mut out = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let col = phi.matrix.column(i + d * j);
            for a in 0..d {
                for b in 0..d {
                    out[(i * d + a, j * d + b)] = col[a + d * b];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMat {
        let a = random_matrix(d, rng);
        (&a + a.adjoint()).scale(0.5)
    }

    fn random_state(d: usize, rng: &mut ChaCha8Rng) -> CMat {
        let a = random_matrix(d, rng);
        let r = &a * a.adjoint();
        let t = r.trace();
        r / t
    }

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| c(x))))
    }

    fn sorted_eigs(m: &CMat) -> Vec<C64> {
        let mut e = general_eigenvalues(m);
        e.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        e
    }

    #[test]
    fn mat_func_exp_of_zero_is_identity() {
        let r = mat_func(&CMat::zeros(3, 3), f64::exp).unwrap();
        assert!(max_abs_diff(&r, &CMat::identity(3, 3)) < 1e-15);
    }

    #[test]
    fn mat_func_quarter_power_roundtrip() {
        let a = diag(&[1.0, 4.0]);
        let q = mat_func(&a, |x: f64| x.powf(0.25)).unwrap();
        let back = &q * &q * &q * &q;
        assert!(max_abs_diff(&back, &a) < 1e-12);
    }

    #[test]
    fn mat_func_diagonal_exp() {
        let r = mat_func(&diag(&[-1.0, 1.0]), f64::exp).unwrap();
        assert!(max_abs_diff(&r, &diag(&[(-1f64).exp(), 1f64.exp()])) < 1e-14);
    }

    #[test]
    fn mat_func_errors() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = ONE;
        assert!(matches!(mat_func(&a, f64::exp), Err(LinalgError::NonHermitianInput { .. })));
        assert!(matches!(mat_log(&diag(&[1.0, 0.0])), Err(LinalgError::DomainError { .. })));
        assert!(matches!(mat_log(&diag(&[1.0, -2.0])), Err(LinalgError::DomainError { .. })));
    }

    #[test]
    fn mat_func_exp_matches_pade() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 4, 8] {
            let mut a = random_hermitian(d, &mut rng);
            let n = spectral_norm(&a);
            a *= c(5.0 * rng.random::<f64>() / n);
            let e1 = mat_func(&a, f64::exp).unwrap();
            let e2 = a.clone().exp();
            assert!(max_abs_diff(&e1, &e2) < 1e-10);
        }
    }

    #[test]
    fn taylor_exponential_matches_eigen_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for scale in [0.01, 0.3, 3.0, 40.0] {
            let k = random_hermitian(4, &mut rng).scale(scale);
            let u = expm_neg_i(&k);
            let (vals, vecs) = eigh(&k);
            let mut phased = vecs.clone();
            for (j, v) in vals.iter().enumerate() {
                phased.set_column(j, &(vecs.column(j) * C64::from_polar(1.0, -v)));
            }
            let exact = phased * vecs.adjoint();
            assert!(max_abs_diff(&u, &exact) < 1e-12 * scale.max(1.0), "scale {scale}");
        }
    }

    #[test]
    fn embed_site_examples() {
        let x = Pauli::X.matrix();
        let z = Pauli::Z.matrix();
        assert_eq!(embed_site(&x, 0, 1).unwrap(), x);
        let iz = embed_site(&z, 1, 2).unwrap();
        assert_eq!(iz, kron(&CMat::identity(2, 2), &z));
        let x0 = embed_site(&x, 0, 2).unwrap();
        assert_eq!(&x0 * &x0, CMat::identity(4, 4));
        assert!(matches!(embed_site(&x, 2, 2), Err(LinalgError::IndexOutOfRange { .. })));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rs = random_state(2, &mut rng);
        let rb = random_state(2, &mut rng);
        let r = partial_trace_last(&kron(&rs, &rb), 2).unwrap();
        assert!(max_abs_diff(&r, &rs) < 1e-14);

        let mut bell = CMat::zeros(4, 4);
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            bell[(i, j)] = c(0.5);
        }
        let r = partial_trace_last(&bell, 2).unwrap();
        assert!(max_abs_diff(&r, &CMat::identity(2, 2).scale(0.5)) < 1e-15);

        let big = random_state(8, &mut rng);
        let r = partial_trace_last(&big, 4).unwrap();
        assert!((r.trace() - big.trace()).norm() < 1e-12);
        assert!(matches!(partial_trace_last(&big, 3), Err(LinalgError::DimensionMismatch(_))));
    }

    #[test]
    fn vec_roundtrip_and_sandwich_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(3, &mut rng);
        let b = random_matrix(3, &mut rng);
        let x = random_matrix(3, &mut rng);
        assert_eq!(unvec(&vec(&x), 3), x);
        assert_eq!(vec(&x)[1 + 3 * 2], x[(1, 2)]);
        let direct = &a * &x * b.adjoint();
        let via = unvec(&(sandwich(&a, &b) * vec(&x)), 3);
        assert!(max_abs_diff(&direct, &via) < 1e-14);
    }

    #[test]
    fn gkls_single_x_jump() {
        let l = superop_from_gkls(&CMat::zeros(2, 2), &[(Pauli::X.matrix(), 1.0)]).unwrap();
        let e = sorted_eigs(&l.matrix);
        let expect = [-2.0, -2.0, 0.0, 0.0];
        for (z, t) in e.iter().zip(expect) {
            assert!((z - c(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn gkls_coherent_only() {
        let l = superop_from_gkls(&Pauli::Z.matrix(), &[]).unwrap();
        let e = sorted_eigs(&l.matrix);
        let mut ims: Vec<f64> = e.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        for (v, t) in ims.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((v - t).abs() < 1e-12);
        }
        assert!(e.iter().all(|z| z.re.abs() < 1e-12));
        let zero = superop_from_gkls(&CMat::zeros(2, 2), &[]).unwrap();
        assert_eq!(max_abs(&zero.matrix), 0.0);
        assert!(matches!(
            superop_from_gkls(&CMat::zeros(2, 2), &[(Pauli::X.matrix(), -0.1)]),
            Err(LinalgError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn gkls_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_hermitian(4, &mut rng);
        let jumps: Vec<(CMat, f64)> = (0..3).map(|_| (random_matrix(4, &mut rng), rng.random::<f64>())).collect();
        let l = superop_from_gkls(&b, &jumps).unwrap();
        let rho = random_state(4, &mut rng);
        let mut direct = (&b * &rho - &rho * &b) * (-I);
        for (j, w) in &jumps {
            let jdj = j.adjoint() * j;
            direct += (j * &rho * j.adjoint() - (&jdj * &rho + &rho * &jdj).scale(0.5)).scale(*w);
        }
        let out = l.apply(&rho);
        assert!(max_abs_diff(&out, &direct) < 1e-12);
        assert!(out.trace().norm() < 1e-10);
        assert!(hermiticity_residual(&out) < 1e-10);
    }

    #[test]
    fn hermitize_depolarizing() {
        let jumps: Vec<(CMat, f64)> = [Pauli::X, Pauli::Y, Pauli::Z].iter().map(|p| (p.matrix(), 1.0)).collect();
        let l = superop_from_gkls(&CMat::zeros(2, 2), &jumps).unwrap();
        let h = kms_hermitize(&l, &CMat::identity(2, 2).scale(0.5)).unwrap();
        for (v, t) in h.eigenvalues.iter().zip([-4.0, -4.0, -4.0, 0.0]) {
            assert!((v - t).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitize_rejects_coherent_generator() {
        let l = superop_from_gkls(&Pauli::X.matrix(), &[]).unwrap();
        let rho = diag(&[0.7, 0.3]);
        assert!(matches!(kms_hermitize(&l, &rho), Err(LinalgError::NotDetailedBalanced { .. })));
    }

    #[test]
    fn choi_of_identity_is_rank_one() {
        let ch = choi(&SuperOp::identity(2));
        let (vals, _) = eigh(&ch);
        assert!((vals[3] - 2.0).abs() < 1e-14);
        assert!(vals[..3].iter().all(|v| v.abs() < 1e-14));
    }
}
