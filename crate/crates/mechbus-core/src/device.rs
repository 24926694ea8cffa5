//! Device model: charge qubits at the flux-symmetric working point coupled to
//! one mechanical mode through a field-threaded loop.
//!
//! Internally every energy/frequency is in rad/s (ħ = 1), fields in tesla,
//! lengths in meters, fluxes in units of the flux quantum Φ₀.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{
    embed, fock_lowering, function_of_hermitian, number, pauli, Pauli, QOperator,
};

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19; // C
pub const PLANCK: f64 = 6.626_070_15e-34; // J·s
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE); // Wb

/// Tolerance on |sin(πφ_b) − 1| for builders that assume the symmetric
/// working point.
pub const WORKING_POINT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct QubitParams {
    /// Single-junction Josephson energy E_J⁰ (rad/s); the SQUID doubles it.
    pub e_j0: f64,
    /// Junction capacitance (F).
    pub c_j: f64,
    /// Gate capacitance (F).
    pub c_g: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ResonatorParams {
    /// Mode frequency ω (rad/s).
    pub omega: f64,
    /// Beam length L inside the field (m).
    pub length: f64,
    /// Zero-point displacement √(ħ/2mω) (m).
    pub x_zpf: f64,
}

impl ResonatorParams {
    pub fn from_xzpf(omega: f64, length: f64, x_zpf: f64) -> Result<Self> {
        let r = Self {
            omega,
            length,
            x_zpf,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn from_mass(omega: f64, length: f64, mass: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "resonator mass must be positive, got {mass}"
            )));
        }
        let x_zpf = (HBAR / (2.0 * mass * omega)).sqrt();
        Self::from_xzpf(omega, length, x_zpf)
    }

    /// Both given: cross-checked to 1e-6 relative.
    pub fn from_mass_and_xzpf(omega: f64, length: f64, mass: f64, x_zpf: f64) -> Result<Self> {
        let derived = (HBAR / (2.0 * mass * omega)).sqrt();
        if (derived - x_zpf).abs() > 1e-6 * x_zpf.abs() {
            return Err(Error::InvalidArgument(format!(
                "inconsistent resonator mass/x_zpf: mass gives x_zpf = {derived:.6e}, stated {x_zpf:.6e}"
            )));
        }
        Self::from_xzpf(omega, length, x_zpf)
    }

    /// Effective mass implied by (ω, x_zpf).
    pub fn mass(&self) -> f64 {
        HBAR / (2.0 * self.omega * self.x_zpf * self.x_zpf)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega", self.omega),
            ("length", self.length),
            ("x_zpf", self.x_zpf),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "resonator {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DeviceParams {
    pub qubits: Vec<QubitParams>,
    pub resonator: ResonatorParams,
    /// In-plane magnetic field B (T).
    pub b_field: f64,
}

impl DeviceParams {
    pub fn new(qubits: Vec<QubitParams>, resonator: ResonatorParams, b_field: f64) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::InvalidArgument("need at least one qubit".into()));
        }
        for (k, q) in qubits.iter().enumerate() {
            for (name, v) in [("e_j0", q.e_j0), ("c_j", q.c_j), ("c_g", q.c_g)] {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "qubit {k} {name} must be positive and finite, got {v}"
                    )));
                }
            }
        }
        resonator.validate()?;
        if !b_field.is_finite() || b_field < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "b_field must be finite and >= 0, got {b_field}"
            )));
        }
        Ok(Self {
            qubits,
            resonator,
            b_field,
        })
    }
}

/// Per-qubit control knobs: gate charge and the two flux biases (Φ₀ units).
#[derive(Clone, Copy, Debug)]
pub struct QubitControl {
    pub n_g: f64,
    pub phi_b: f64,
    pub phi_x: f64,
}

#[derive(Clone, Debug)]
pub struct ControlSettings {
    pub qubits: Vec<QubitControl>,
}

impl ControlSettings {
    pub fn uniform(n: usize, ctl: QubitControl) -> Self {
        Self {
            qubits: vec![ctl; n],
        }
    }
}

/// E_C = e²/(2(2C_J + C_g)) converted to rad/s.
pub fn charging_energy(c_j: f64, c_g: f64) -> Result<f64> {
    if !(c_j > 0.0) || !(c_g > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "capacitances must be positive, got c_j = {c_j}, c_g = {c_g}"
        )));
    }
    Ok(ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * (2.0 * c_j + c_g)) / HBAR)
}

/// Effective charge-qubit splitting ω_k = 4E_C(2n_g − 1) (rad/s);
/// zero at the charge-degeneracy point n_g = 1/2.
pub fn qubit_frequency(e_c: f64, n_g: f64) -> f64 {
    4.0 * e_c * (2.0 * n_g - 1.0)
}

/// SQUID-tuned Josephson energy 2E_J⁰ cos(πφ_x), signed (rad/s). Written via
/// sin(π(φ_x − 1/2)) so the null at φ_x = 1/2 is exact in floating point.
pub fn effective_josephson(e_j0: f64, phi_x: f64) -> f64 {
    -2.0 * e_j0 * (std::f64::consts::PI * (phi_x - 0.5)).sin()
}

/// Flux-per-displacement angle χ = πBLx_zpf/Φ₀ (dimensionless, per quantum).
pub fn displacement_angle(params: &DeviceParams) -> f64 {
    std::f64::consts::PI * params.b_field * params.resonator.length * params.resonator.x_zpf
        / FLUX_QUANTUM
}

/// Coupling rate g′_k = 2E_J⁰ cos(πφ_x) · πBLx_zpf/Φ₀ (rad/s), signed with
/// the φ_x modulation but *not* including the alternating geometric sign.
pub fn tunable_coupling(params: &DeviceParams, qubit: usize, ctl: &QubitControl) -> Result<f64> {
    let q = params
        .qubits
        .get(qubit)
        .ok_or_else(|| Error::InvalidArgument(format!("no qubit {qubit}")))?;
    Ok(effective_josephson(q.e_j0, ctl.phi_x) * displacement_angle(params))
}

/// The loop geometry threads the two qubits with opposite flux orientation:
/// −1 for qubit 0, +1 for qubit 1, alternating beyond.
pub fn alternating_sign(qubit: usize) -> f64 {
    if qubit % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

fn check_controls(params: &DeviceParams, controls: &ControlSettings) -> Result<()> {
    if controls.qubits.len() != params.qubits.len() {
        return Err(Error::DimensionMismatch {
            context: "control settings vs qubit count",
            expected: params.qubits.len(),
            actual: controls.qubits.len(),
        });
    }
    Ok(())
}

fn check_working_point(ctl: &QubitControl) -> Result<()> {
    let s = (std::f64::consts::PI * ctl.phi_b).sin();
    let defect = (s - 1.0).abs();
    if defect > WORKING_POINT_TOL {
        return Err(Error::OffWorkingPoint {
            defect,
            tol: WORKING_POINT_TOL,
        });
    }
    Ok(())
}

fn device_dims(params: &DeviceParams, n_cut: usize) -> Vec<usize> {
    let mut dims = vec![2; params.qubits.len()];
    dims.push(n_cut);
    dims
}

/// Full nonlinear Hamiltonian at arbitrary flux bias:
/// H = ω b†b + Σ_k ω_k/2 σz_k
///     − Σ_k E_Jk(φ_x)[cos(πφ_bk) cos θ̂ − s_k sin(πφ_bk) sin θ̂] σx_k,
/// θ̂ = πBLx̂/Φ₀, s_k the alternating loop sign. With B = 0 this is two bare
/// qubits plus a free mode.
pub fn build_hamiltonian_full(
    params: &DeviceParams,
    controls: &ControlSettings,
    n_cut: usize,
) -> Result<QOperator> {
    check_controls(params, controls)?;
    let dims = device_dims(params, n_cut);
    let res_axis = dims.len() - 1;
    let chi = displacement_angle(params);

    let b = fock_lowering(n_cut)?;
    let x_op = &b + &b.dagger(); // b + b†
    let theta = x_op.scale(C64::new(chi, 0.0));
    let cos_theta = function_of_hermitian(&theta, |lam| C64::new(lam.cos(), 0.0))?;
    let sin_theta = function_of_hermitian(&theta, |lam| C64::new(lam.sin(), 0.0))?;

    let mut h = embed(&number(n_cut)?, res_axis, &dims)?.scale(C64::new(params.resonator.omega, 0.0));
    for (k, (q, ctl)) in params.qubits.iter().zip(&controls.qubits).enumerate() {
        let e_c = charging_energy(q.c_j, q.c_g)?;
        let w_k = qubit_frequency(e_c, ctl.n_g);
        h = &h + &embed(&pauli(Pauli::Z), k, &dims)?.scale(C64::new(w_k / 2.0, 0.0));

        let e_j = effective_josephson(q.e_j0, ctl.phi_x);
        let (cb, sb) = {
            let a = std::f64::consts::PI * ctl.phi_b;
            (a.cos(), a.sin())
        };
        let s_k = alternating_sign(k);
        // −E_J cos(πφ_b) cosθ̂ σx + s_k E_J sin(πφ_b) sinθ̂ σx
        let trig = &cos_theta.scale(C64::new(-e_j * cb, 0.0))
            + &sin_theta.scale(C64::new(s_k * e_j * sb, 0.0));
        let term = &embed(&pauli(Pauli::X), k, &dims)? * &embed(&trig, res_axis, &dims)?;
        h = &h + &term;
    }
    Ok(h)
}

/// Linearized Hamiltonian at the working point sin(πφ_b) = 1 (enforced):
/// H = ω b†b + Σ_k [ω_k/2 σz_k + s_k g′_k (b + b†) σx_k].
pub fn build_hamiltonian_linear(
    params: &DeviceParams,
    controls: &ControlSettings,
    n_cut: usize,
) -> Result<QOperator> {
    check_controls(params, controls)?;
    for ctl in &controls.qubits {
        check_working_point(ctl)?;
    }
    let dims = device_dims(params, n_cut);
    let res_axis = dims.len() - 1;
    let b = fock_lowering(n_cut)?;
    let x_op = &b + &b.dagger();

    let mut h = embed(&number(n_cut)?, res_axis, &dims)?.scale(C64::new(params.resonator.omega, 0.0));
    for (k, (q, ctl)) in params.qubits.iter().zip(&controls.qubits).enumerate() {
        let e_c = charging_energy(q.c_j, q.c_g)?;
        let w_k = qubit_frequency(e_c, ctl.n_g);
        h = &h + &embed(&pauli(Pauli::Z), k, &dims)?.scale(C64::new(w_k / 2.0, 0.0));

        let g = tunable_coupling(params, k, ctl)?;
        let coupling = &embed(&pauli(Pauli::X), k, &dims)?
            * &embed(&x_op, res_axis, &dims)?;
        h = &h + &coupling.scale(C64::new(alternating_sign(k) * g, 0.0));
    }
    Ok(h)
}

/// Rate-level linearized Hamiltonian, bypassing the circuit parameters:
/// H = ω b†b + Σ_k [ω_qk/2 σz_k + λ_k (b + b†) σx_k] with *signed* couplings
/// λ_k (the alternating loop sign is the caller's business here).
pub fn linear_bus_hamiltonian(
    omega: f64,
    omega_qubits: &[f64],
    couplings_signed: &[f64],
    n_cut: usize,
) -> Result<QOperator> {
    if omega_qubits.len() != couplings_signed.len() || omega_qubits.is_empty() {
        return Err(Error::InvalidArgument(
            "need matching, non-empty qubit frequency and coupling lists".into(),
        ));
    }
    let mut dims = vec![2; omega_qubits.len()];
    dims.push(n_cut);
    let res_axis = dims.len() - 1;
    let b = fock_lowering(n_cut)?;
    let x_op = &b + &b.dagger();

    let mut h = embed(&number(n_cut)?, res_axis, &dims)?.scale(C64::new(omega, 0.0));
    for (k, (&wq, &lam)) in omega_qubits.iter().zip(couplings_signed).enumerate() {
        h = &h + &embed(&pauli(Pauli::Z), k, &dims)?.scale(C64::new(wq / 2.0, 0.0));
        let coupling = &embed(&pauli(Pauli::X), k, &dims)? * &embed(&x_op, res_axis, &dims)?;
        h = &h + &coupling.scale(C64::new(lam, 0.0));
    }
    Ok(h)
}

/// Single-window interaction-picture Hamiltonian with only `active` coupled:
/// H′(t) = s_a g′_a (b e^{−iωt} + b† e^{iωt}) σx_a.
///
/// Preconditions enforced: working point for every qubit, all qubit splittings
/// tuned to zero (n_g = 1/2), and every non-active coupling exactly off.
pub fn build_interaction_hamiltonian(
    params: &DeviceParams,
    controls: &ControlSettings,
    active: usize,
    t: f64,
    n_cut: usize,
) -> Result<QOperator> {
    check_controls(params, controls)?;
    if active >= params.qubits.len() {
        return Err(Error::InvalidArgument(format!(
            "active qubit {active} out of range"
        )));
    }
    let g_active = tunable_coupling(params, active, &controls.qubits[active])?;
    for (k, ctl) in controls.qubits.iter().enumerate() {
        check_working_point(ctl)?;
        if (2.0 * ctl.n_g - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "interaction picture assumes n_g = 1/2; qubit {k} has n_g = {}",
                ctl.n_g
            )));
        }
        if k != active {
            let g = tunable_coupling(params, k, ctl)?;
            if g.abs() > 1e-12 * g_active.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "qubit {k} still coupled (g′ = {g:.3e}) in a single-qubit window"
                )));
            }
        }
    }

    let dims = device_dims(params, n_cut);
    let res_axis = dims.len() - 1;
    let b = fock_lowering(n_cut)?;
    let phase = C64::from_polar(1.0, params.resonator.omega * t);
    let rotating = &b.scale(phase.conj()) + &b.dagger().scale(phase);
    let op = &embed(&pauli(Pauli::X), active, &dims)? * &embed(&rotating, res_axis, &dims)?;
    Ok(op.scale(C64::new(alternating_sign(active) * g_active, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::max_abs_diff;
    use crate::operator::evolution;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_qubit() -> QubitParams {
        QubitParams {
            e_j0: 2.0 * std::f64::consts::PI * 5e9,
            c_j: 1e-15,
            c_g: 1e-16,
        }
    }

    fn sample_params(b_field: f64) -> DeviceParams {
        let resonator =
            ResonatorParams::from_xzpf(2.0 * std::f64::consts::PI * 100e6, 30e-6, 5e-13).unwrap();
        DeviceParams::new(vec![sample_qubit(), sample_qubit()], resonator, b_field).unwrap()
    }

    fn idle_controls(phi_x: [f64; 2]) -> ControlSettings {
        ControlSettings {
            qubits: vec![
                QubitControl {
                    n_g: 0.5,
                    phi_b: 0.5,
                    phi_x: phi_x[0],
                },
                QubitControl {
                    n_g: 0.5,
                    phi_b: 0.5,
                    phi_x: phi_x[1],
                },
            ],
        }
    }

    #[test]
    fn charging_energy_frozen_value() {
        // e²/(2(2·1fF + 0.1fF))/ħ
        let ec = charging_energy(1e-15, 1e-16).unwrap();
        assert!((ec - 5.795559061399873e10).abs() / ec < 1e-12);
        assert!(charging_energy(0.0, 1e-16).is_err());
        assert!(charging_energy(1e-15, -1e-16).is_err());
    }

    #[test]
    fn qubit_frequency_vanishes_at_degeneracy() {
        let ec = charging_energy(1e-15, 1e-16).unwrap();
        assert_eq!(qubit_frequency(ec, 0.5), 0.0);
        assert!(qubit_frequency(ec, 0.7) > 0.0);
        assert!(qubit_frequency(ec, 0.3) < 0.0);
        assert!((qubit_frequency(ec, 0.75) - 2.0 * ec).abs() / ec < 1e-14);
    }

    #[test]
    fn effective_josephson_null_is_exact() {
        let e = 2.0 * std::f64::consts::PI * 5e9;
        assert_eq!(effective_josephson(e, 0.5), 0.0);
        // agrees with 2E_J⁰ cos(πφ_x) away from the null
        for phi in [0.0, 0.1, 0.37, 0.8, 1.2] {
            let expect = 2.0 * e * (std::f64::consts::PI * phi).cos();
            assert!(
                (effective_josephson(e, phi) - expect).abs() <= 1e-9 * e,
                "φ_x = {phi}"
            );
        }
        assert!((effective_josephson(e, 0.0) - 2.0 * e).abs() < 1e-9 * e);
    }

    #[test]
    fn coupling_feasibility_arithmetic() {
        // B = 0.1 T, L = 30 µm, x_zpf = 5e-13 m, E_J⁰ = 2π×5 GHz
        let params = sample_params(0.1);
        let on = QubitControl {
            n_g: 0.5,
            phi_b: 0.5,
            phi_x: 0.0,
        };
        let g = tunable_coupling(&params, 0, &on).unwrap();
        assert!((g - 1.4318758359280816e8).abs() / g < 1e-12);
        // lands between 2π×20 MHz and 2π×25 MHz
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!(g > two_pi * 20e6 && g < two_pi * 25e6);
        // decoupled spectator is exactly off
        let off = QubitControl { phi_x: 0.5, ..on };
        assert_eq!(tunable_coupling(&params, 0, &off).unwrap(), 0.0);
    }

    #[test]
    fn resonator_mass_roundtrips() {
        let omega = 2.0 * std::f64::consts::PI * 100e6;
        let r = ResonatorParams::from_xzpf(omega, 30e-6, 5e-13).unwrap();
        let m = r.mass();
        assert!((m - 3.3568063524758136e-19).abs() / m < 1e-12);
        let r2 = ResonatorParams::from_mass(omega, 30e-6, m).unwrap();
        assert!((r2.x_zpf - 5e-13).abs() / 5e-13 < 1e-12);
        assert!(ResonatorParams::from_mass_and_xzpf(omega, 30e-6, m, 5e-13).is_ok());
        assert!(ResonatorParams::from_mass_and_xzpf(omega, 30e-6, 2.0 * m, 5e-13).is_err());
    }

    #[test]
    fn working_point_enforced() {
        let params = sample_params(0.1);
        let mut controls = idle_controls([0.0, 0.5]);
        controls.qubits[0].phi_b = 0.3;
        match build_hamiltonian_linear(&params, &controls, 4) {
            Err(Error::OffWorkingPoint { .. }) => {}
            other => panic!("expected OffWorkingPoint, got {other:?}"),
        }
        let ok = idle_controls([0.0, 0.5]);
        assert!(build_hamiltonian_linear(&params, &ok, 4).is_ok());
    }

    #[test]
    fn full_hamiltonian_reduces_without_field() {
        // B = 0 ⇒ θ̂ = 0: bare qubits plus a free mode, with the −E_J cos(πφ_b)σx
        // tunneling term intact.
        let params = sample_params(0.0);
        let n_cut = 5;
        let controls = ControlSettings {
            qubits: vec![
                QubitControl {
                    n_g: 0.7,
                    phi_b: 0.25,
                    phi_x: 0.1,
                },
                QubitControl {
                    n_g: 0.5,
                    phi_b: 0.25,
                    phi_x: 0.3,
                },
            ],
        };
        let h = build_hamiltonian_full(&params, &controls, n_cut).unwrap();
        let dims = vec![2usize, 2, n_cut];
        let mut expect = embed(&number(n_cut).unwrap(), 2, &dims)
            .unwrap()
            .scale(c(params.resonator.omega, 0.0));
        for (k, (q, ctl)) in params.qubits.iter().zip(&controls.qubits).enumerate() {
            let w = qubit_frequency(charging_energy(q.c_j, q.c_g).unwrap(), ctl.n_g);
            expect = &expect + &embed(&pauli(Pauli::Z), k, &dims).unwrap().scale(c(w / 2.0, 0.0));
            let e_j = effective_josephson(q.e_j0, ctl.phi_x);
            let cb = (std::f64::consts::PI * ctl.phi_b).cos();
            expect = &expect
                + &embed(&pauli(Pauli::X), k, &dims)
                    .unwrap()
                    .scale(c(-e_j * cb, 0.0));
        }
        assert!(max_abs_diff(&h, &expect) < 1e-10 * expect.max_abs());
    }

    #[test]
    fn linearization_error_scales_cubically_in_field() {
        // At the working point the full coupling is E_J sin(χ(b+b†))σx, the
        // linear builder keeps E_J χ(b+b†)σx; the defect should go as χ³ ∝ B³.
        let controls = idle_controls([0.0, 0.0]);
        let n_cut = 6;
        let d_of = |b: f64| {
            let params = sample_params(b);
            let full = build_hamiltonian_full(&params, &controls, n_cut).unwrap();
            let lin = build_hamiltonian_linear(&params, &controls, n_cut).unwrap();
            max_abs_diff(&full, &lin)
        };
        let d1 = d_of(0.1);
        let d2 = d_of(0.05);
        let slope = (d1 / d2).log2();
        assert!(d1 > 0.0);
        assert!((2.95..=3.05).contains(&slope), "slope = {slope}");
        // and the defect is far below the coupling scale
        let params = sample_params(0.1);
        let g = tunable_coupling(&params, 0, &controls.qubits[0]).unwrap();
        assert!(d1 < 1e-3 * g);
    }

    #[test]
    fn linear_builder_matches_rate_builder() {
        let params = sample_params(0.1);
        let controls = idle_controls([0.0, 0.2]);
        let n_cut = 5;
        let h = build_hamiltonian_linear(&params, &controls, n_cut).unwrap();
        let mut rates = Vec::new();
        let mut freqs = Vec::new();
        for (k, ctl) in controls.qubits.iter().enumerate() {
            let q = &params.qubits[k];
            freqs.push(qubit_frequency(charging_energy(q.c_j, q.c_g).unwrap(), ctl.n_g));
            rates.push(alternating_sign(k) * tunable_coupling(&params, k, ctl).unwrap());
        }
        let h2 =
            linear_bus_hamiltonian(params.resonator.omega, &freqs, &rates, n_cut).unwrap();
        assert!(max_abs_diff(&h, &h2) < 1e-12 * h.max_abs());
    }

    #[test]
    fn interaction_hamiltonian_form_and_periodicity() {
        let params = sample_params(0.1);
        let controls = idle_controls([0.0, 0.5]);
        let n_cut = 6;
        let g = tunable_coupling(&params, 0, &controls.qubits[0]).unwrap();
        let dims = vec![2usize, 2, n_cut];

        let h0 = build_interaction_hamiltonian(&params, &controls, 0, 0.0, n_cut).unwrap();
        let b = fock_lowering(n_cut).unwrap();
        let x_op = &b + &b.dagger();
        let expect = (&embed(&pauli(Pauli::X), 0, &dims).unwrap()
            * &embed(&x_op, 2, &dims).unwrap())
            .scale(c(alternating_sign(0) * g, 0.0));
        assert!(max_abs_diff(&h0, &expect) < 1e-12 * g);

        let t = 0.37 * 2.0 * std::f64::consts::PI / params.resonator.omega;
        let period = 2.0 * std::f64::consts::PI / params.resonator.omega;
        let ht = build_interaction_hamiltonian(&params, &controls, 0, t, n_cut).unwrap();
        let ht2 = build_interaction_hamiltonian(&params, &controls, 0, t + period, n_cut).unwrap();
        assert!(max_abs_diff(&ht, &ht2) < 1e-9 * g);
    }

    #[test]
    fn interaction_hamiltonian_matches_numeric_frame_rotation() {
        // H′(t) should equal e^{iH₀t} (H_lab − H₀) e^{−iH₀t} with H₀ = ω b†b.
        let params = sample_params(0.1);
        let controls = idle_controls([0.0, 0.5]);
        let n_cut = 8;
        let dims = vec![2usize, 2, n_cut];
        let h_lab = build_hamiltonian_linear(&params, &controls, n_cut).unwrap();
        let h_free = embed(&number(n_cut).unwrap(), 2, &dims)
            .unwrap()
            .scale(c(params.resonator.omega, 0.0));
        let h_c = &h_lab - &h_free;

        let t = 2.3e-9;
        let frame = evolution(&h_free, -t).unwrap(); // e^{+iH₀t}
        let rotated = &(&frame * &h_c) * &frame.dagger();
        let built = build_interaction_hamiltonian(&params, &controls, 0, t, n_cut).unwrap();
        let g = tunable_coupling(&params, 0, &controls.qubits[0]).unwrap();
        assert!(max_abs_diff(&rotated, &built) < 1e-9 * g);
    }

    #[test]
    fn interaction_hamiltonian_rejections() {
        let params = sample_params(0.1);
        let n_cut = 4;
        // spectator still coupled
        assert!(build_interaction_hamiltonian(&params, &idle_controls([0.0, 0.0]), 0, 0.0, n_cut)
            .is_err());
        // detuned gate charge
        let mut bad_ng = idle_controls([0.0, 0.5]);
        bad_ng.qubits[0].n_g = 0.6;
        assert!(build_interaction_hamiltonian(&params, &bad_ng, 0, 0.0, n_cut).is_err());
        // off the flux working point
        let mut bad_wp = idle_controls([0.0, 0.5]);
        bad_wp.qubits[1].phi_b = 0.1;
        assert!(build_interaction_hamiltonian(&params, &bad_wp, 0, 0.0, n_cut).is_err());
        assert!(build_interaction_hamiltonian(&params, &idle_controls([0.0, 0.5]), 0, 0.0, n_cut)
            .is_ok());
    }

    #[test]
    fn alternating_sign_values() {
        assert_eq!(alternating_sign(0), -1.0);
        assert_eq!(alternating_sign(1), 1.0);
        assert_eq!(alternating_sign(2), -1.0);
        assert_eq!(alternating_sign(3), 1.0);
    }
}
