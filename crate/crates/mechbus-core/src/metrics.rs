//! Comparison metrics: phase-minimized operator distance and process
//! fidelities.
//!
//! Operator comparisons against closed-form gate laws are restricted to the
//! *trusted block* — qubits ⊗ the lowest `m` Fock levels. The top of a
//! truncated Fock tower is corrupted for any finite cutoff (the truncated
//! commutator is [b, b†] = 1 − n_cut |top⟩⟨top|), so a full-matrix distance
//! measures the truncation artifact, not the gate. With n_cut ≳ 20 and
//! |α| ≲ 1, `m = 8` keeps the artifact below 1e-8 while the physics of the
//! low tower is fully represented; `m = 12` is appropriate for window
//! propagations at coupling/frequency ratios up to 0.3.

use ndarray::Array2;
use crate::operator::kron;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{pauli, Pauli, QOperator};

/// Trusted Fock block for closed-form gate-law comparisons.
pub const DEFAULT_TRUSTED_LEVELS: usize = 8;
/// Trusted Fock block for propagated-window comparisons.
pub const PROPAGATOR_TRUSTED_LEVELS: usize = 12;

/// max_ij |A_ij − B_ij|.
pub fn max_abs_diff(a: &QOperator, b: &QOperator) -> f64 {
    assert_eq!(a.dims(), b.dims(), "distance needs matching dims");
    let mut d = 0.0f64;
    for (x, y) in a.matrix().iter().zip(b.matrix().iter()) {
        d = d.max((x - y).norm());
    }
    d
}

fn phase_objective(a: &Array2<C64>, b: &Array2<C64>, phi: f64) -> f64 {
    let ph = C64::from_polar(1.0, phi);
    let mut d = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        d = d.max((x - ph * y).norm());
    }
    d
}

/// min over a global phase φ of ‖A − e^{iφ}B‖_max. Coarse scan plus
/// golden-section refinement; deterministic.
pub fn phase_min_distance(a: &QOperator, b: &QOperator) -> f64 {
    assert_eq!(a.dims(), b.dims(), "distance needs matching dims");
    let (am, bm) = (a.matrix(), b.matrix());
    const COARSE: usize = 720;
    let mut best_phi = 0.0;
    let mut best = f64::INFINITY;
    for k in 0..COARSE {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / COARSE as f64;
        let v = phase_objective(am, bm, phi);
        if v < best {
            best = v;
            best_phi = phi;
        }
    }
    let width = 2.0 * std::f64::consts::PI / COARSE as f64;
    let (mut lo, mut hi) = (best_phi - width, best_phi + width);
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = phase_objective(am, bm, x1);
    let mut f2 = phase_objective(am, bm, x2);
    for _ in 0..70 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = phase_objective(am, bm, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = phase_objective(am, bm, x2);
        }
    }
    best.min(f1).min(f2)
}

/// Phase-minimized distance on the trusted block: both operators restricted
/// two-sided to resonator levels < `m` first.
pub fn phase_min_distance_on_levels(a: &QOperator, b: &QOperator, m: usize) -> f64 {
    phase_min_distance(&a.restrict_levels(m), &b.restrict_levels(m))
}

/// |Tr(U†V)|²/d² for two same-dimension unitaries (process fidelity of the
/// corresponding unitary channels).
pub fn unitary_process_fidelity(u: &Array2<C64>, v: &Array2<C64>) -> f64 {
    assert_eq!(u.dim(), v.dim());
    let d = u.nrows() as f64;
    let tr: C64 = u
        .t()
        .mapv(|z| z.conj())
        .dot(v)
        .diag()
        .sum();
    tr.norm_sqr() / (d * d)
}

/// Normalized n-qubit Pauli basis {P/√d}, lexicographic in (I, X, Y, Z) with
/// the first qubit slowest. Orthonormal under Tr[B_i† B_j] = δ_ij.
pub fn pauli_basis(n_qubits: usize) -> Vec<Array2<C64>> {
    let singles: [Array2<C64>; 4] = [
        Array2::eye(2),
        pauli(Pauli::X).into_matrix(),
        pauli(Pauli::Y).into_matrix(),
        pauli(Pauli::Z).into_matrix(),
    ];
    let d = (1usize << n_qubits) as f64;
    let mut basis = Vec::with_capacity(4usize.pow(n_qubits as u32));
    for label in 0..4usize.pow(n_qubits as u32) {
        let mut rest = label;
        let mut digits = vec![0usize; n_qubits];
        for q in (0..n_qubits).rev() {
            digits[q] = rest % 4;
            rest /= 4;
        }
        let mut m = singles[digits[0]].clone();
        for &dg in &digits[1..] {
            m = kron(&m, &singles[dg]);
        }
        basis.push(m.mapv(|z| z / C64::new(d.sqrt(), 0.0)));
    }
    basis
}

/// Completely positive map on n qubits, stored as its matrix in the
/// normalized Pauli basis: S_ij = Tr[B_i† E(B_j)].
#[derive(Clone, Debug)]
pub struct Channel {
    superop: Array2<C64>,
    n_qubits: usize,
}

impl Channel {
    /// Build from the action of the map on each Pauli-basis element.
    pub fn from_map(n_qubits: usize, mut map: impl FnMut(&Array2<C64>) -> Array2<C64>) -> Self {
        let basis = pauli_basis(n_qubits);
        let d2 = basis.len();
        let mut s = Array2::zeros((d2, d2));
        for (j, bj) in basis.iter().enumerate() {
            let image = map(bj);
            for (i, bi) in basis.iter().enumerate() {
                // Tr[B_i† image]
                let tr: C64 = bi
                    .t()
                    .mapv(|z| z.conj())
                    .dot(&image)
                    .diag()
                    .sum();
                s[[i, j]] = tr;
            }
        }
        Self {
            superop: s,
            n_qubits,
        }
    }

    /// Unitary conjugation channel ρ ↦ UρU†.
    pub fn from_unitary(u: &Array2<C64>) -> Result<Self> {
        let d = u.nrows();
        if !d.is_power_of_two() || d != u.ncols() {
            return Err(Error::InvalidArgument(format!(
                "unitary channel needs a square power-of-two dimension, got {d}"
            )));
        }
        let n_qubits = d.trailing_zeros() as usize;
        let uh = u.t().mapv(|z| z.conj());
        Ok(Self::from_map(n_qubits, |b| u.dot(b).dot(&uh)))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn superop(&self) -> &Array2<C64> {
        &self.superop
    }

    /// Process fidelity against a target unitary:
    /// F_pro = Re Tr[S_target† S] / d². Equals 1 iff the channel is exactly
    /// conjugation by the target (up to global phase); 1/d² for the fully
    /// depolarizing channel.
    pub fn process_fidelity(&self, target: &Array2<C64>) -> Result<f64> {
        let t = Self::from_unitary(target)?;
        if t.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                context: "channel vs target qubit count",
                expected: self.n_qubits,
                actual: t.n_qubits,
            });
        }
        let d2 = (self.dim() * self.dim()) as f64;
        let tr: C64 = t
            .superop
            .t()
            .mapv(|z| z.conj())
            .dot(&self.superop)
            .diag()
            .sum();
        Ok(tr.re / d2)
    }

    /// Process fidelity against the identity channel.
    pub fn identity_fidelity(&self) -> f64 {
        let eye: Array2<C64> = Array2::eye(self.dim());
        self.process_fidelity(&eye).expect("identity is unitary")
    }
}

/// Average gate fidelity from process fidelity: (d·F_pro + 1)/(d + 1).
pub fn avg_gate_fidelity(process_fidelity: f64, dim: usize) -> f64 {
    let d = dim as f64;
    (d * process_fidelity + 1.0) / (d + 1.0)
}
