//! Several qubits on one bus: pair selection by flux, schedule playback, and
//! spectator-crosstalk diagnostics.
//!
//! Windows are evaluated in the bus rotating frame with the window clock
//! starting at zero (the controlled-displacement picture); composing the
//! stripped windows reproduces the abstract four-pulse sequence. Playing the
//! windows back-to-back in the lab frame without the per-window frame reset
//! would rotate each α by the accumulated phase and the loop would only close
//! at stroboscopic block lengths.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::device::{
    alternating_sign, charging_energy, qubit_frequency, tunable_coupling, ControlSettings,
    DeviceParams,
};
use crate::error::{Error, Result};
use crate::metrics::Channel;
use crate::operator::{embed, evolution, fock_lowering, number, pauli, Pauli, QOperator};
use crate::scheduler::PulseSchedule;

/// Default cap on the total Hilbert-space dimension 2ⁿ·n_cut.
pub const DEFAULT_DIMENSION_CAP: usize = 20_480;

#[derive(Clone, Debug)]
pub struct NetworkSpec {
    pub params: DeviceParams,
    pub controls: ControlSettings,
    pub n_cut: usize,
    pub dimension_cap: usize,
    /// Per-qubit loop-orientation signs (±1); default alternating −,+,−,…
    pub coupling_signs: Option<Vec<f64>>,
}

impl NetworkSpec {
    pub fn new(params: DeviceParams, controls: ControlSettings, n_cut: usize) -> Self {
        Self {
            params,
            controls,
            n_cut,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            coupling_signs: None,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.params.qubits.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![2; self.n_qubits()];
        d.push(self.n_cut);
        d
    }

    pub fn validate(&self) -> Result<()> {
        let dim = (1usize << self.n_qubits()) * self.n_cut;
        if dim > self.dimension_cap {
            return Err(Error::DimensionCap {
                dim,
                cap: self.dimension_cap,
            });
        }
        if self.controls.qubits.len() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                context: "network controls vs qubit count",
                expected: self.n_qubits(),
                actual: self.controls.qubits.len(),
            });
        }
        if let Some(signs) = &self.coupling_signs {
            if signs.len() != self.n_qubits() {
                return Err(Error::DimensionMismatch {
                    context: "coupling sign overrides vs qubit count",
                    expected: self.n_qubits(),
                    actual: signs.len(),
                });
            }
            if signs.iter().any(|s| s.abs() != 1.0) {
                return Err(Error::InvalidArgument(
                    "coupling sign overrides must be ±1".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn sign(&self, qubit: usize) -> f64 {
        match &self.coupling_signs {
            Some(s) => s[qubit],
            None => alternating_sign(qubit),
        }
    }

    /// Signed coupling λ_k = s_k g′_k for the given control settings.
    pub fn signed_coupling(&self, qubit: usize, controls: &ControlSettings) -> Result<f64> {
        Ok(self.sign(qubit) * tunable_coupling(&self.params, qubit, &controls.qubits[qubit])?)
    }
}

/// Linearized network Hamiltonian at the working point:
/// H = ω b†b + Σ_k [ω_k/2 σz_k + λ_k (b+b†) σx_k].
pub fn build_network_hamiltonian(
    spec: &NetworkSpec,
    controls: &ControlSettings,
) -> Result<QOperator> {
    spec.validate()?;
    let wqs: Vec<f64> = spec
        .params
        .qubits
        .iter()
        .zip(&controls.qubits)
        .map(|(q, c)| Ok(qubit_frequency(charging_energy(q.c_j, q.c_g)?, c.n_g)))
        .collect::<Result<_>>()?;
    let lams: Vec<f64> = (0..spec.n_qubits())
        .map(|k| spec.signed_coupling(k, controls))
        .collect::<Result<_>>()?;
    for ctl in &controls.qubits {
        let s = (std::f64::consts::PI * ctl.phi_b).sin();
        if (s - 1.0).abs() > crate::device::WORKING_POINT_TOL {
            return Err(Error::OffWorkingPoint {
                defect: (s - 1.0).abs(),
                tol: crate::device::WORKING_POINT_TOL,
            });
        }
    }
    crate::device::linear_bus_hamiltonian(spec.params.resonator.omega, &wqs, &lams, spec.n_cut)
}

/// Control settings that park every spectator at its SQUID null
/// (φ_x = 1/2 ⇒ g′ = 0 exactly) and the two active qubits at maximal
/// coupling (φ_x = 0).
pub fn select_pair(spec: &NetworkSpec, i: usize, j: usize) -> Result<ControlSettings> {
    spec.validate()?;
    let n = spec.n_qubits();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!(
            "invalid active pair ({i}, {j}) for {n} qubits"
        )));
    }
    let mut out = spec.controls.clone();
    for (k, ctl) in out.qubits.iter_mut().enumerate() {
        if k == i || k == j {
            ctl.phi_x = 0.0;
        } else {
            ctl.phi_x = 0.5;
        }
    }
    Ok(out)
}

/// Lab-frame free part matching the window Hamiltonian.
fn free_hamiltonian(spec: &NetworkSpec, controls: &ControlSettings) -> Result<QOperator> {
    let dims = spec.dims();
    let res_axis = dims.len() - 1;
    let mut h0 = embed(&number(spec.n_cut)?, res_axis, &dims)?
        .scale(C64::new(spec.params.resonator.omega, 0.0));
    for (k, (q, c)) in spec
        .params
        .qubits
        .iter()
        .zip(&controls.qubits)
        .enumerate()
    {
        let wq = qubit_frequency(charging_energy(q.c_j, q.c_g)?, c.n_g);
        if wq != 0.0 {
            h0 = &h0 + &embed(&pauli(Pauli::Z), k, &dims)?.scale(C64::new(wq / 2.0, 0.0));
        }
    }
    Ok(h0)
}

/// One coupling window in the bus rotating frame: evolve the full network
/// Hamiltonian with only `active`'s drive sign applied for `duration`, then
/// strip e^{−iH₀τ}. Residual spectator couplings (off-null φ_x) participate.
pub fn window_unitary(
    spec: &NetworkSpec,
    controls: &ControlSettings,
    active: usize,
    sign: f64,
    duration: f64,
) -> Result<QOperator> {
    spec.validate()?;
    if active >= spec.n_qubits() {
        return Err(Error::InvalidArgument(format!(
            "active qubit {active} out of range"
        )));
    }
    let dims = spec.dims();
    let res_axis = dims.len() - 1;
    let b = fock_lowering(spec.n_cut)?;
    let x_op = &b + &b.dagger();

    let mut h = free_hamiltonian(spec, controls)?;
    for k in 0..spec.n_qubits() {
        let mut lam = spec.signed_coupling(k, controls)?;
        if k == active {
            lam *= sign;
        }
        if lam != 0.0 {
            let coupling =
                &embed(&pauli(Pauli::X), k, &dims)? * &embed(&x_op, res_axis, &dims)?;
            h = &h + &coupling.scale(C64::new(lam, 0.0));
        }
    }
    let lab = evolution(&h, duration)?;
    let h0 = free_hamiltonian(spec, controls)?;
    crate::propagator::interaction_frame(&lab, &h0, duration)
}

/// Play a pulse schedule on the network: per-window rotating-frame unitaries
/// composed in application order, repeated `schedule.repetitions` times.
/// The schedule's qubit indices 0/1 address the active pair (i, j). Only the
/// window's own qubit couples during its window — the other pair member is
/// parked at its SQUID null until its turn, as in the pulse sequence.
/// Spectator controls are taken from `controls` unchanged, so residual
/// off-null spectator couplings participate in every window.
pub fn schedule_unitary(
    spec: &NetworkSpec,
    controls: &ControlSettings,
    pair: (usize, usize),
    schedule: &PulseSchedule,
) -> Result<QOperator> {
    spec.validate()?;
    let n = spec.n_qubits();
    if pair.0 >= n || pair.1 >= n || pair.0 == pair.1 {
        return Err(Error::InvalidArgument(format!(
            "invalid active pair ({}, {}) for {n} qubits",
            pair.0, pair.1
        )));
    }
    let map = [pair.0, pair.1];
    let mut block: Option<QOperator> = None;
    for seg in &schedule.segments {
        if seg.qubit > 1 {
            return Err(Error::InvalidArgument(format!(
                "schedule addresses qubit {}, but a pair schedule has qubits 0/1",
                seg.qubit
            )));
        }
        let mut wctl = controls.clone();
        wctl.qubits[map[1 - seg.qubit]].phi_x = 0.5;
        let u = window_unitary(spec, &wctl, map[seg.qubit], seg.sign, seg.duration)?;
        block = Some(match block {
            None => u,
            Some(acc) => &u * &acc,
        });
    }
    let block = block.ok_or_else(|| Error::InvalidArgument("empty schedule".into()))?;
    let mut total = block.clone();
    for _ in 1..schedule.repetitions {
        total = &block * &total;
    }
    Ok(total)
}

fn decode(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; dims.len()];
    for a in (0..dims.len()).rev() {
        idx[a] = flat % dims[a];
        flat /= dims[a];
    }
    idx
}

fn encode(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |f, (&i, &d)| f * d + i)
}

/// The 4×4 gate induced on the active pair (vacuum bus, spectators in |0⟩):
/// G_ab = ⟨a_i a_j, 0…, vac| U |b_i b_j, 0…, vac⟩ with row/col index
/// a = 2·(qubit i bit) + (qubit j bit).
pub fn pair_gate(
    spec: &NetworkSpec,
    u: &QOperator,
    i: usize,
    j: usize,
) -> Result<Array2<C64>> {
    let dims = spec.dims();
    if u.dims() != dims.as_slice() {
        return Err(Error::DimensionMismatch {
            context: "network unitary vs network dims",
            expected: dims.iter().product(),
            actual: u.total_dim(),
        });
    }
    let mut g = Array2::zeros((4, 4));
    for a in 0..4usize {
        for b in 0..4usize {
            let mut row = vec![0usize; dims.len()];
            let mut col = vec![0usize; dims.len()];
            row[i] = (a >> 1) & 1;
            row[j] = a & 1;
            col[i] = (b >> 1) & 1;
            col[j] = b & 1;
            g[[a, b]] = u.matrix()[[encode(&row, &dims), encode(&col, &dims)]];
        }
    }
    Ok(g)
}

/// Crosstalk picked up by the spectators: 1 − F_pro of the induced spectator
/// channel against the identity channel, with the active pair prepared in
/// |00⟩ and the bus in vacuum. 0 for exact decoupling; grows with residual
/// spectator coupling; symmetric under relabeling the active pair.
pub fn crosstalk_metric(
    spec: &NetworkSpec,
    u: &QOperator,
    i: usize,
    j: usize,
) -> Result<f64> {
    let dims = spec.dims();
    let n = spec.n_qubits();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!(
            "invalid active pair ({i}, {j}) for {n} qubits"
        )));
    }
    let spectators: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
    if spectators.is_empty() {
        return Err(Error::InvalidArgument(
            "crosstalk metric needs at least one spectator".into(),
        ));
    }
    let spec_dims: Vec<usize> = spectators.iter().map(|_| 2usize).collect();
    let n_spec = spectators.len();
    let total: usize = dims.iter().product();
    let u_mat = u.matrix();
    let u_dag = u_mat.t().mapv(|z| z.conj());

    let channel = Channel::from_map(n_spec, |b_spec| {
        // input: |0⟩⟨0| on actives ⊗ B on spectators ⊗ |vac⟩⟨vac|
        let mut full = Array2::<C64>::zeros((total, total));
        for r in 0..total {
            let ri = decode(r, &dims);
            if ri[i] != 0 || ri[j] != 0 || ri[n] != 0 {
                continue;
            }
            for c in 0..total {
                let ci = decode(c, &dims);
                if ci[i] != 0 || ci[j] != 0 || ci[n] != 0 {
                    continue;
                }
                let rs: Vec<usize> = spectators.iter().map(|&k| ri[k]).collect();
                let cs: Vec<usize> = spectators.iter().map(|&k| ci[k]).collect();
                full[[r, c]] = b_spec[[encode(&rs, &spec_dims), encode(&cs, &spec_dims)]];
            }
        }
        let out = u_mat.dot(&full).dot(&u_dag);
        // trace out actives + bus
        let sd: usize = 1 << n_spec;
        let mut red = Array2::<C64>::zeros((sd, sd));
        for r in 0..total {
            let ri = decode(r, &dims);
            let rs: Vec<usize> = spectators.iter().map(|&k| ri[k]).collect();
            for c in 0..total {
                let ci = decode(c, &dims);
                // traced axes must match
                if (0..=n).any(|a| !spectators.contains(&a) && ri[a] != ci[a]) {
                    continue;
                }
                let cs: Vec<usize> = spectators.iter().map(|&k| ci[k]).collect();
                red[[encode(&rs, &spec_dims), encode(&cs, &spec_dims)]] += out[[r, c]];
            }
        }
        red
    });
    Ok(1.0 - channel.identity_fidelity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{linear_bus_hamiltonian, QubitControl, QubitParams, ResonatorParams};
    use crate::gates::{four_pulse_gate, ideal_two_qubit_gate};
    use crate::metrics::{max_abs_diff, phase_min_distance};
    use crate::scheduler::{solve_schedule, ScheduleRequest};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_spec(n_qubits: usize, n_cut: usize) -> NetworkSpec {
        let q = QubitParams {
            e_j0: 2.0 * std::f64::consts::PI * 5e9,
            c_j: 1e-15,
            c_g: 1e-16,
        };
        let resonator =
            ResonatorParams::from_xzpf(2.0 * std::f64::consts::PI * 100e6, 30e-6, 5e-13).unwrap();
        let params = DeviceParams::new(vec![q; n_qubits], resonator, 0.1).unwrap();
        let parked = QubitControl {
            n_g: 0.5,
            phi_b: 0.5,
            phi_x: 0.5,
        };
        NetworkSpec::new(params, ControlSettings::uniform(n_qubits, parked), n_cut)
    }

    fn pair_gate_of_isolated(u: &QOperator, n_cut: usize) -> Array2<C64> {
        let mut g = Array2::zeros((4, 4));
        for a in 0..4 {
            for b in 0..4 {
                g[[a, b]] = u.matrix()[[a * n_cut, b * n_cut]];
            }
        }
        g
    }

    fn phase_dist4(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
        phase_min_distance(
            &QOperator::new(a.clone(), vec![2, 2]).unwrap(),
            &QOperator::new(b.clone(), vec![2, 2]).unwrap(),
        )
    }

    #[test]
    fn network_hamiltonian_matches_rate_builder() {
        let spec = sample_spec(2, 6);
        let controls = select_pair(&spec, 0, 1).unwrap();
        let h = build_network_hamiltonian(&spec, &controls).unwrap();
        let g = tunable_coupling(&spec.params, 0, &controls.qubits[0]).unwrap();
        let h2 = linear_bus_hamiltonian(
            spec.params.resonator.omega,
            &[0.0, 0.0],
            &[-g, g],
            6,
        )
        .unwrap();
        assert!(max_abs_diff(&h, &h2) < 1e-12 * h.max_abs());
    }

    #[test]
    fn fully_parked_network_is_a_free_mode() {
        let spec = sample_spec(3, 6);
        let h = build_network_hamiltonian(&spec, &spec.controls).unwrap();
        let dims = spec.dims();
        let free = embed(&number(6).unwrap(), 3, &dims)
            .unwrap()
            .scale(c(spec.params.resonator.omega, 0.0));
        assert!(max_abs_diff(&h, &free) < 1e-12 * spec.params.resonator.omega);
    }

    #[test]
    fn three_qubit_embedding_oracle() {
        let spec = sample_spec(3, 6);
        let controls = select_pair(&spec, 0, 2).unwrap();
        let h = build_network_hamiltonian(&spec, &controls).unwrap();

        let g = tunable_coupling(&spec.params, 0, &controls.qubits[0]).unwrap();
        let dims = spec.dims();
        let b = fock_lowering(6).unwrap();
        let x_op = &b + &b.dagger();
        let mut expect = embed(&number(6).unwrap(), 3, &dims)
            .unwrap()
            .scale(c(spec.params.resonator.omega, 0.0));
        for (k, sign) in [(0usize, -1.0), (2usize, -1.0)] {
            let term = &embed(&pauli(Pauli::X), k, &dims).unwrap()
                * &embed(&x_op, 3, &dims).unwrap();
            expect = &expect + &term.scale(c(sign * g, 0.0));
        }
        assert!(max_abs_diff(&h, &expect) < 1e-12 * h.max_abs());
    }

    #[test]
    fn select_pair_parks_spectators_exactly() {
        let spec = sample_spec(4, 4);
        let controls = select_pair(&spec, 1, 3).unwrap();
        for (k, ctl) in controls.qubits.iter().enumerate() {
            if k == 1 || k == 3 {
                assert_eq!(ctl.phi_x, 0.0);
            } else {
                assert_eq!(ctl.phi_x, 0.5);
                assert_eq!(spec.signed_coupling(k, &controls).unwrap(), 0.0);
            }
        }
        assert!(select_pair(&spec, 2, 2).is_err());
        assert!(select_pair(&spec, 0, 7).is_err());
    }

    #[test]
    fn scheduled_pair_gate_matches_isolated_four_pulse() {
        let n_cut = 16;
        let spec = sample_spec(3, n_cut);
        let controls = select_pair(&spec, 0, 1).unwrap();
        let g = tunable_coupling(&spec.params, 0, &controls.qubits[0]).unwrap();
        let omega = spec.params.resonator.omega;
        let req = ScheduleRequest {
            theta_target: 0.2,
            g1: g,
            g2: g,
            omega,
            allow_repetitions: true,
            max_repetitions: 8,
        };
        let schedule = solve_schedule(&req).unwrap();
        assert_eq!(schedule.repetitions, 1);

        let u = schedule_unitary(&spec, &controls, (0, 1), &schedule).unwrap();
        let g4 = pair_gate(&spec, &u, 0, 1).unwrap();

        let (a1, a2) = schedule.base_alphas();
        let isolated = four_pulse_gate(a1, a2, n_cut).unwrap();
        let iso4 = pair_gate_of_isolated(&isolated, n_cut);
        let d = phase_dist4(&g4, &iso4);
        assert!(d < 1e-7, "network vs isolated distance = {d:.3e}");

        // and both match the requested entangling angle
        let ideal = ideal_two_qubit_gate(schedule.achieved_theta);
        let d_ideal = phase_dist4(&g4, &ideal);
        assert!(d_ideal < 1e-5, "network vs ideal distance = {d_ideal:.3e}");
    }

    #[test]
    fn crosstalk_vanishes_for_parked_spectator_and_grows_off_null() {
        let n_cut = 10;
        let spec = sample_spec(3, n_cut);
        let base = select_pair(&spec, 0, 1).unwrap();
        let g = tunable_coupling(&spec.params, 0, &base.qubits[0]).unwrap();
        let req = ScheduleRequest {
            theta_target: 0.15,
            g1: g,
            g2: g,
            omega: spec.params.resonator.omega,
            allow_repetitions: false,
            max_repetitions: 1,
        };
        let schedule = solve_schedule(&req).unwrap();

        let mut metrics = Vec::new();
        for phi_x in [0.5, 0.45, 0.4] {
            let mut controls = base.clone();
            controls.qubits[2].phi_x = phi_x;
            let u = schedule_unitary(&spec, &controls, (0, 1), &schedule).unwrap();
            metrics.push(crosstalk_metric(&spec, &u, 0, 1).unwrap());
        }
        assert!(metrics[0] < 1e-10, "parked crosstalk = {:.3e}", metrics[0]);
        assert!(
            metrics[0] < metrics[1] && metrics[1] < metrics[2],
            "crosstalk not monotone: {metrics:?}"
        );

        // relabeling the active pair does not change the metric
        let mut controls = base.clone();
        controls.qubits[2].phi_x = 0.45;
        let u = schedule_unitary(&spec, &controls, (0, 1), &schedule).unwrap();
        let m01 = crosstalk_metric(&spec, &u, 0, 1).unwrap();
        let m10 = crosstalk_metric(&spec, &u, 1, 0).unwrap();
        assert!((m01 - m10).abs() < 1e-12);
    }

    #[test]
    fn crosstalk_requires_a_spectator() {
        let spec = sample_spec(2, 4);
        let u = QOperator::identity(&spec.dims());
        assert!(crosstalk_metric(&spec, &u, 0, 1).is_err());
    }

    #[test]
    fn idle_network_has_identity_pair_gate() {
        let spec = sample_spec(3, 5);
        let u = QOperator::identity(&spec.dims());
        let g = pair_gate(&spec, &u, 0, 2).unwrap();
        let eye: Array2<C64> = Array2::eye(4);
        for (x, y) in g.iter().zip(eye.iter()) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!(crosstalk_metric(&spec, &u, 0, 2).unwrap() < 1e-14);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let mut spec = sample_spec(3, 12);
        spec.dimension_cap = 50;
        match spec.validate() {
            Err(Error::DimensionCap { dim: 96, cap: 50 }) => {}
            other => panic!("expected DimensionCap, got {other:?}"),
        }
        assert!(build_network_hamiltonian(&spec, &spec.controls.clone()).is_err());
    }

    #[test]
    fn coupling_sign_overrides_validated_and_applied() {
        let mut spec = sample_spec(2, 4);
        spec.coupling_signs = Some(vec![-1.0, -1.0]);
        let controls = select_pair(&spec, 0, 1).unwrap();
        let g0 = spec.signed_coupling(0, &controls).unwrap();
        let g1 = spec.signed_coupling(1, &controls).unwrap();
        assert!(g0 < 0.0 && g1 < 0.0);

        spec.coupling_signs = Some(vec![0.5, 1.0]);
        assert!(spec.validate().is_err());
        spec.coupling_signs = Some(vec![1.0]);
        assert!(spec.validate().is_err());
    }
}
