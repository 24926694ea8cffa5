//! Dense operators on tensor products of finite-dimensional subsystems.
//!
//! Convention used throughout the crate: subsystem order is
//! `[qubit 1, qubit 2, …, resonator]`, i.e. the mechanical mode is always the
//! *last* axis, and composite indices are row-major (first subsystem slowest).
//! Internal units are rad/s with ħ = 1.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Factorize, Solve, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex operator carrying the list of subsystem dimensions.
#[derive(Clone, Debug)]
pub struct QOperator {
    mat: Array2<C64>,
    dims: Vec<usize>,
}

impl QOperator {
    /// Wrap a matrix, checking squareness and that the dims multiply out.
    pub fn new(mat: Array2<C64>, dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(
                "subsystem dimension list must be non-empty and positive".into(),
            ));
        }
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                context: "operator matrix must be square",
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        if mat.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "matrix side vs product of dims",
                expected: n,
                actual: mat.nrows(),
            });
        }
        Ok(Self { mat, dims })
    }

    /// Single-subsystem wrapper (dims = [n]).
    pub fn from_matrix(mat: Array2<C64>) -> Result<Self> {
        let n = mat.nrows();
        Self::new(mat, vec![n])
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self {
            mat: Array2::eye(n),
            dims: dims.to_vec(),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Self {
            mat: Array2::zeros((n, n)),
            dims: dims.to_vec(),
        }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mat = self.mat.t().mapv(|z| z.conj());
        Self {
            mat,
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            mat: self.mat.mapv(|z| z * s),
            dims: self.dims.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// max |A_ij − conj(A_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.mat.nrows();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in i..n {
                d = d.max((self.mat[[i, j]] - self.mat[[j, i]].conj()).norm());
            }
        }
        d
    }

    /// ‖U†U − 1‖_max; ~1e-13 for anything produced by the eigh-based paths.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.mat.t().mapv(|z| z.conj()).dot(&self.mat);
        let n = prod.nrows();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                d = d.max((prod[[i, j]] - target).norm());
            }
        }
        d
    }

    /// Restrict both sides to composite indices whose *last-axis* (resonator)
    /// component is < `m`. Used by the trusted-block comparison metric.
    pub fn restrict_levels(&self, m: usize) -> Self {
        let last = *self.dims.last().expect("non-empty dims");
        let m = m.min(last);
        let lead: usize = self.dims[..self.dims.len() - 1].iter().product();
        let keep: Vec<usize> = (0..lead)
            .flat_map(|q| (0..m).map(move |r| q * last + r))
            .collect();
        let mut out = Array2::zeros((keep.len(), keep.len()));
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out[[a, b]] = self.mat[[i, j]];
            }
        }
        let mut dims = self.dims.clone();
        *dims.last_mut().unwrap() = m;
        Self { mat: out, dims }
    }
}

impl std::ops::Mul for &QOperator {
    type Output = QOperator;
    fn mul(self, rhs: &QOperator) -> QOperator {
        assert_eq!(self.dims, rhs.dims, "operator product needs matching dims");
        QOperator {
            mat: self.mat.dot(&rhs.mat),
            dims: self.dims.clone(),
        }
    }
}

impl std::ops::Add for &QOperator {
    type Output = QOperator;
    fn add(self, rhs: &QOperator) -> QOperator {
        assert_eq!(self.dims, rhs.dims, "operator sum needs matching dims");
        QOperator {
            mat: &self.mat + &rhs.mat,
            dims: self.dims.clone(),
        }
    }
}

impl std::ops::Sub for &QOperator {
    type Output = QOperator;
    fn sub(self, rhs: &QOperator) -> QOperator {
        assert_eq!(self.dims, rhs.dims, "operator difference needs matching dims");
        QOperator {
            mat: &self.mat - &rhs.mat,
            dims: self.dims.clone(),
        }
    }
}

/// Kronecker product, left factor slowest (row-major composite indices).
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..rb {
                for q in 0..cb {
                    out[[i * rb + p, j * cb + q]] = aij * b[[p, q]];
                }
            }
        }
    }
    out
}

/// Truncated lowering operator b: b|n⟩ = √n |n−1⟩, dims = [n_cut].
/// The truncation anomaly [b, b†] = 1 − n_cut |n_cut−1⟩⟨n_cut−1| is inherent.
pub fn fock_lowering(n_cut: usize) -> Result<QOperator> {
    if n_cut < 2 {
        return Err(Error::InvalidArgument(format!(
            "fock_lowering needs n_cut >= 2, got {n_cut}"
        )));
    }
    let mut b = Array2::zeros((n_cut, n_cut));
    for n in 1..n_cut {
        b[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    QOperator::new(b, vec![n_cut])
}

/// Number operator b†b (diagonal 0..n_cut−1).
pub fn number(n_cut: usize) -> Result<QOperator> {
    if n_cut < 2 {
        return Err(Error::InvalidArgument(format!(
            "number needs n_cut >= 2, got {n_cut}"
        )));
    }
    let mut m = Array2::zeros((n_cut, n_cut));
    for n in 0..n_cut {
        m[[n, n]] = C64::new(n as f64, 0.0);
    }
    QOperator::new(m, vec![n_cut])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// 2×2 Pauli matrix in the charge basis, σz = |0⟩⟨0| − |1⟩⟨1|.
pub fn pauli(axis: Pauli) -> QOperator {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mat = match axis {
        Pauli::X => ndarray::array![[zero, one], [one, zero]],
        Pauli::Y => ndarray::array![[zero, -i], [i, zero]],
        Pauli::Z => ndarray::array![[one, zero], [zero, -one]],
    };
    QOperator { mat, dims: vec![2] }
}

/// Kronecker product of the given operators, left factor slowest.
pub fn tensor(ops: &[&QOperator]) -> Result<QOperator> {
    if ops.is_empty() {
        return Err(Error::InvalidArgument("tensor of zero factors".into()));
    }
    let mut mat = ops[0].mat.clone();
    let mut dims = ops[0].dims.clone();
    for op in &ops[1..] {
        mat = kron(&mat, &op.mat);
        dims.extend_from_slice(&op.dims);
    }
    QOperator::new(mat, dims)
}

/// Place `op` on subsystem `axis` of a space with dimensions `dims`,
/// identity elsewhere.
pub fn embed(op: &QOperator, axis: usize, dims: &[usize]) -> Result<QOperator> {
    if axis >= dims.len() {
        return Err(Error::InvalidArgument(format!(
            "embed axis {axis} out of range for {} subsystems",
            dims.len()
        )));
    }
    if op.total_dim() != dims[axis] {
        return Err(Error::DimensionMismatch {
            context: "embedded operator vs target axis dimension",
            expected: dims[axis],
            actual: op.total_dim(),
        });
    }
    let idents: Vec<QOperator> = dims.iter().map(|&d| QOperator::identity(&[d])).collect();
    let factors: Vec<&QOperator> = dims
        .iter()
        .enumerate()
        .map(|(a, _)| if a == axis { op } else { &idents[a] })
        .collect();
    let mut out = tensor(&factors)?;
    out.dims = dims.to_vec();
    Ok(out)
}

fn eigh_of(mat: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // ndarray-linalg 0.16 hands a row-major array to LAPACK without
    // transposing, so zheev diagonalizes Hᵀ = H̄ and the returned vectors
    // belong to the conjugate matrix. Conjugate them back so that
    // H = V·diag(w)·V† holds for the pair we return.
    let (w, v) = mat.eigh(UPLO::Lower)?;
    Ok((w, v.mapv(|z| z.conj())))
}

fn rebuild(evals: &Array1<f64>, evecs: &Array2<C64>, f: impl Fn(f64) -> C64) -> Array2<C64> {
    let mut scaled = evecs.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let fj = f(evals[j]);
        col.mapv_inplace(|z| z * fj);
    }
    let vh = evecs.t().mapv(|z| z.conj());
    scaled.dot(&vh)
}

/// f(H) for Hermitian H via eigendecomposition. Rejects input whose
/// hermiticity defect exceeds 1e-10·max(1, ‖H‖_max).
pub fn function_of_hermitian(h: &QOperator, f: impl Fn(f64) -> C64) -> Result<QOperator> {
    let tol = 1e-10 * h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    let (w, v) = eigh_of(&h.mat)?;
    QOperator::new(rebuild(&w, &v, f), h.dims.clone())
}

/// exp(−i t H) for Hermitian H — the workhorse for every unitary in the crate.
pub fn evolution(h: &QOperator, t: f64) -> Result<QOperator> {
    function_of_hermitian(h, |lam| (-C64::i() * (lam * t)).exp())
}

const ONE_NORM_SCALE_CAP: i32 = 64;

/// Matrix exponential. Hermitian and skew-Hermitian inputs go through an
/// eigendecomposition (exactly unitary output for skew input up to roundoff);
/// everything else through scaling-and-squaring with a [6/6] Padé approximant.
pub fn matrix_exp(a: &QOperator) -> Result<QOperator> {
    let scale = a.max_abs().max(1.0);
    if a.hermiticity_defect() <= 1e-12 * scale {
        let (w, v) = eigh_of(&a.mat)?;
        return QOperator::new(rebuild(&w, &v, |lam| C64::new(lam.exp(), 0.0)), a.dims.clone());
    }
    // skew-Hermitian test: A + A† = 0 ⇔ H := iA Hermitian, exp(A) = exp(−iH)
    let n = a.mat.nrows();
    let mut skew = 0.0f64;
    for i in 0..n {
        for j in i..n {
            skew = skew.max((a.mat[[i, j]] + a.mat[[j, i]].conj()).norm());
        }
    }
    if skew <= 1e-12 * scale {
        let h = a.scale(C64::i());
        let (w, v) = eigh_of(&h.mat)?;
        return QOperator::new(rebuild(&w, &v, |lam| (-C64::i() * lam).exp()), a.dims.clone());
    }
    pade_exp(a)
}

fn one_norm(m: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for col in m.columns() {
        best = best.max(col.iter().map(|z| z.norm()).sum());
    }
    best
}

fn pade_exp(a: &QOperator) -> Result<QOperator> {
    let norm = one_norm(&a.mat);
    let mut s: i32 = 0;
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as i32;
        if s > ONE_NORM_SCALE_CAP {
            return Err(Error::ExpOverflow { norm });
        }
    }
    let b = a.mat.mapv(|z| z / C64::new(2f64.powi(s), 0.0));
    let n = b.nrows();

    // diagonal [m/m] Padé, c_j = m!(2m−j)! / ((2m)! j! (m−j)!)
    const M: usize = 6;
    let fact = |k: usize| -> f64 { (1..=k).map(|x| x as f64).product::<f64>().max(1.0) };
    let mut num = Array2::<C64>::zeros((n, n));
    let mut den = Array2::<C64>::zeros((n, n));
    let mut power = Array2::<C64>::eye(n);
    for j in 0..=M {
        let c = fact(M) * fact(2 * M - j) / (fact(2 * M) * fact(j) * fact(M - j));
        let term = power.mapv(|z| z * c);
        num = &num + &term;
        if j % 2 == 0 {
            den = &den + &term;
        } else {
            den = &den - &term;
        }
        if j < M {
            power = power.dot(&b);
        }
    }

    let lu = den.factorize()?;
    let mut x = Array2::<C64>::zeros((n, n));
    for (j, col) in num.columns().into_iter().enumerate() {
        let sol = lu.solve(&col.to_owned())?;
        x.column_mut(j).assign(&sol);
    }
    for _ in 0..s {
        x = x.dot(&x);
    }
    QOperator::new(x, a.dims.clone())
}

/// Truncated coherent displacement D(α) = exp(α b† − α* b) on [n_cut].
pub fn displacement(alpha: C64, n_cut: usize) -> Result<QOperator> {
    let b = fock_lowering(n_cut)?;
    let gen = &b.dagger().scale(alpha) - &b.scale(alpha.conj());
    matrix_exp(&gen)
}

/// Fock levels needed for D(α) to be faithful on the low tower:
/// |α|² + 3|α| + 4. Truncation is adequate when this is ≤ n_cut.
pub fn displacement_headroom(alpha: C64) -> f64 {
    let a = alpha.norm();
    a * a + 3.0 * a + 4.0
}

pub fn displacement_adequate(alpha: C64, n_cut: usize) -> bool {
    displacement_headroom(alpha) <= n_cut as f64
}
