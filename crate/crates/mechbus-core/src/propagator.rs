//! Brute-force time-ordered propagation: exponential midpoint rule with
//! step-doubling Richardson control.
//!
//! Each step applies exp(−i Δt H(t_mid)) built by exact exponentiation of the
//! sampled Hermitian matrix, so the accumulated product is unitary to
//! roundoff at any step count; the step count only controls the
//! time-ordering error (second order in Δt).

use crate::error::{Error, Result};
use crate::metrics::max_abs_diff;
use crate::operator::{evolution, QOperator};

pub struct PropagationSpec<'a> {
    /// Hermitian H(t) sampler (rad/s).
    pub hamiltonian: &'a dyn Fn(f64) -> QOperator,
    pub t_start: f64,
    pub t_end: f64,
    /// Convergence target on ‖U_N − U_2N‖_max.
    pub tolerance: f64,
    /// Step count at which doubling gives up.
    pub max_steps: usize,
    /// First step count tried.
    pub initial_steps: usize,
}

impl<'a> PropagationSpec<'a> {
    pub fn new(hamiltonian: &'a dyn Fn(f64) -> QOperator, t_start: f64, t_end: f64) -> Self {
        Self {
            hamiltonian,
            t_start,
            t_end,
            tolerance: 1e-8,
            max_steps: 1 << 20,
            initial_steps: 16,
        }
    }
}

#[derive(Debug)]
pub struct Propagation {
    pub unitary: QOperator,
    /// Step count of the accepted (finer) propagation.
    pub steps: usize,
    /// ‖U_{N/2} − U_N‖_max at acceptance; upper-bounds the time-ordering
    /// error of the accepted result up to a small constant.
    pub est_error: f64,
    pub doublings: usize,
    pub unitarity_defect: f64,
}

/// Midpoint-rule propagation over [t0, t1] at a fixed step count.
pub fn propagate_fixed(
    hamiltonian: &dyn Fn(f64) -> QOperator,
    t_start: f64,
    t_end: f64,
    steps: usize,
) -> Result<QOperator> {
    if steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let dt = (t_end - t_start) / steps as f64;
    let mut u: Option<QOperator> = None;
    for j in 0..steps {
        let t_mid = t_start + (j as f64 + 0.5) * dt;
        let h = hamiltonian(t_mid);
        let step = evolution(&h, dt)?;
        u = Some(match u {
            None => step,
            Some(acc) => &step * &acc,
        });
    }
    Ok(u.expect("steps >= 1"))
}

/// Propagate with step-doubling until ‖U_N − U_2N‖_max < tolerance.
pub fn propagate(spec: &PropagationSpec) -> Result<Propagation> {
    let mut n = spec.initial_steps.max(1);
    let mut coarse = propagate_fixed(spec.hamiltonian, spec.t_start, spec.t_end, n)?;
    let mut doublings = 0usize;
    loop {
        let fine = propagate_fixed(spec.hamiltonian, spec.t_start, spec.t_end, 2 * n)?;
        let diff = max_abs_diff(&coarse, &fine);
        doublings += 1;
        if diff < spec.tolerance {
            let unitarity_defect = fine.unitarity_defect();
            if unitarity_defect > 10.0 * spec.tolerance {
                return Err(Error::NonConvergence {
                    steps: 2 * n,
                    max_steps: spec.max_steps,
                    est_error: unitarity_defect,
                });
            }
            return Ok(Propagation {
                unitary: fine,
                steps: 2 * n,
                est_error: diff,
                doublings,
                unitarity_defect,
            });
        }
        n *= 2;
        if 2 * n > spec.max_steps {
            return Err(Error::NonConvergence {
                steps: 2 * n,
                max_steps: spec.max_steps,
                est_error: diff,
            });
        }
        coarse = fine;
    }
}

/// Strip the free rotation: U_int = e^{+iH₀t} U_lab. `h0` must be Hermitian.
pub fn interaction_frame(u_lab: &QOperator, h0: &QOperator, t: f64) -> Result<QOperator> {
    let back = evolution(h0, -t)?;
    Ok(&back * u_lab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{controlled_displacement_on, window_alpha};
    use crate::metrics::{phase_min_distance_on_levels, PROPAGATOR_TRUSTED_LEVELS};
    use crate::operator::{embed, fock_lowering, pauli, Pauli};
    use num_complex::Complex64 as C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn drive(t: f64) -> QOperator {
        // cheap genuinely time-ordered toy: cos(t)σx + sin(t)σz
        &pauli(Pauli::X).scale(c(t.cos(), 0.0)) + &pauli(Pauli::Z).scale(c(t.sin(), 0.0))
    }

    #[test]
    fn constant_hamiltonian_is_exact_per_step() {
        let h = &pauli(Pauli::X).scale(c(0.4, 0.0)) + &pauli(Pauli::Z).scale(c(1.1, 0.0));
        let direct = evolution(&h, 2.7).unwrap();
        let sampler = |_t: f64| h.clone();
        let one_step = propagate_fixed(&sampler, 0.0, 2.7, 1).unwrap();
        assert!(max_abs_diff(&direct, &one_step) < 1e-12);
        let spec = PropagationSpec::new(&sampler, 0.0, 2.7);
        let prop = propagate(&spec).unwrap();
        assert_eq!(prop.steps, 32); // first doubling already agrees
        assert!(max_abs_diff(&direct, &prop.unitary) < 1e-12);
    }

    #[test]
    fn fixed_grid_composes_over_subintervals() {
        let n = 64;
        let full = propagate_fixed(&drive, 0.0, 2.0, n).unwrap();
        let first = propagate_fixed(&drive, 0.0, 1.0, n / 2).unwrap();
        let second = propagate_fixed(&drive, 1.0, 2.0, n / 2).unwrap();
        let composed = &second * &first;
        assert!(max_abs_diff(&full, &composed) < 1e-13);
    }

    #[test]
    fn propagation_is_unitary_at_any_step_count() {
        for n in [3, 17, 40] {
            let u = propagate_fixed(&drive, 0.0, 2.0, n).unwrap();
            assert!(u.unitarity_defect() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn rotating_coupling_matches_controlled_displacement() {
        // H′(t) = λ(b e^{−iωt} + b† e^{iωt})σx integrates in closed form to
        // a controlled displacement with α = λ(1 − e^{iωt})/ω (up to a global
        // phase from the c-number Magnus term).
        let omega = 1.0;
        let lam = 0.1;
        let n_cut = 20; // ≥8 levels of buffer above the trusted block
        let dims = vec![2usize, n_cut];
        let b = fock_lowering(n_cut).unwrap();
        let sx = embed(&pauli(Pauli::X), 0, &dims).unwrap();
        let sampler = move |t: f64| {
            let ph = C64::from_polar(1.0, omega * t);
            let rot = &b.scale(ph.conj()) + &b.dagger().scale(ph);
            (&sx * &embed(&rot, 1, &dims).unwrap()).scale(c(lam, 0.0))
        };
        let t_end = 0.7 * 2.0 * std::f64::consts::PI / omega;
        let mut spec = PropagationSpec::new(&sampler, 0.0, t_end);
        spec.tolerance = 3e-8;
        let prop = propagate(&spec).unwrap();

        let alpha = window_alpha(lam, omega, t_end);
        let ideal = controlled_displacement_on(alpha, 0, 1, n_cut).unwrap();
        let d = phase_min_distance_on_levels(&prop.unitary, &ideal, PROPAGATOR_TRUSTED_LEVELS);
        assert!(d < 1e-6, "distance = {d:.3e}");
    }

    #[test]
    fn error_estimate_is_honest() {
        let sampler = |t: f64| drive(3.0 * t);
        let mut spec = PropagationSpec::new(&sampler, 0.0, 2.0);
        spec.tolerance = 1e-6;
        let prop = propagate(&spec).unwrap();
        let reference = propagate_fixed(&sampler, 0.0, 2.0, prop.steps * 8).unwrap();
        let true_err = max_abs_diff(&prop.unitary, &reference);
        assert!(true_err <= prop.est_error, "true {true_err:.3e} vs est {:.3e}", prop.est_error);
        assert!(prop.est_error <= 20.0 * true_err.max(1e-12));
    }

    #[test]
    fn nonconvergence_is_reported() {
        let sampler = |t: f64| drive(40.0 * t);
        let mut spec = PropagationSpec::new(&sampler, 0.0, 5.0);
        spec.tolerance = 1e-14;
        spec.max_steps = 32;
        match propagate(&spec) {
            Err(Error::NonConvergence { max_steps: 32, .. }) => {}
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(propagate_fixed(&drive, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn interaction_frame_strips_free_rotation() {
        let h0 = &pauli(Pauli::Z).scale(c(2.0, 0.0)) + &pauli(Pauli::X).scale(c(0.0, 0.0));
        let u_lab = evolution(&h0, 1.3).unwrap();
        let stripped = interaction_frame(&u_lab, &h0, 1.3).unwrap();
        let eye = QOperator::identity(&[2]);
        assert!(max_abs_diff(&stripped, &eye) < 1e-13);
    }
}
