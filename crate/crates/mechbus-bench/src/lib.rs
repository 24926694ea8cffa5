//! Shared fixtures for the kernel benches.

use mechbus_core::operator::{fock_lowering, kron, number, pauli, Pauli};
use mechbus_core::QOperator;
use num_complex::Complex64 as C64;

/// Driven oscillator n̂ + 0.3(b + b†): dense eigenstructure, no symmetry the
/// eigensolver could exploit by accident.
pub fn driven_oscillator(n_cut: usize) -> QOperator {
    let b = fock_lowering(n_cut).unwrap();
    let x = &b + &b.dagger();
    &number(n_cut).unwrap() + &x.scale(C64::new(0.3, 0.0))
}

/// Rotating coupling window g(b e^{−iωt} + b† e^{iωt})σx at ω = 1, the
/// sampler shape the propagator sees in the gate checks.
pub fn rotating_window(g: f64, n_cut: usize) -> impl Fn(f64) -> QOperator {
    let b = fock_lowering(n_cut).unwrap().into_matrix();
    let bdag = b.t().mapv(|z| z.conj());
    let sx = pauli(Pauli::X).into_matrix();
    move |t: f64| {
        let phase = C64::from_polar(1.0, -t);
        let x = b.mapv(|z| z * phase) + bdag.mapv(|z| z * phase.conj());
        QOperator::new(kron(&sx, &x).mapv(|z| z * g), vec![2, n_cut]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_hermitian() {
        assert!(driven_oscillator(12).hermiticity_defect() < 1e-15);
        let h = rotating_window(0.2, 10)(0.7);
        assert!(h.hermiticity_defect() < 1e-15);
    }
}
