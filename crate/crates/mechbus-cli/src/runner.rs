//! Scenario dispatch: resolve the config, run the requested construction,
//! gate the run on its numeric self-check residual, and write the artifacts.

use std::path::{Path, PathBuf};

use mechbus_core::device::tunable_coupling;
use mechbus_core::gates::{
    dispersive_gate_check, four_pulse_report, geometric_phase_gate, ideal_two_qubit_gate,
};
use mechbus_core::metrics::{avg_gate_fidelity, phase_min_distance, unitary_process_fidelity};
use mechbus_core::network::{
    crosstalk_metric, pair_gate, schedule_unitary, select_pair, NetworkSpec,
};
use mechbus_core::scheduler::{budget_check, max_single_shot_theta, solve_schedule, ScheduleRequest};
use mechbus_core::{QOperator, QState};
use serde_json::json;

use crate::config::{self, Resolved, Scenario, SweepPath};
use crate::report::{self, SweepRow};
use crate::{CliError, Result};

pub struct RunOutcome {
    pub report_path: PathBuf,
    pub sweep_path: Option<PathBuf>,
    /// One human-readable line per headline metric.
    pub summary: Vec<String>,
}

struct ScenarioOutput {
    result: serde_json::Value,
    /// Numeric-quality scalar compared against `numerics.tolerance`.
    residual: f64,
    summary: Vec<String>,
    rows: Option<Vec<SweepRow>>,
}

/// Difference of two angles wrapped onto (−π, π].
fn wrap_diff(a: f64, b: f64) -> f64 {
    use std::f64::consts::PI;
    let mut d = (a - b) % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Coupling magnitudes g′ ≥ 0 of the first two qubits under the resolved
/// controls; the 2-qubit scenarios draw their rates from these.
fn pair_couplings(res: &Resolved) -> Result<(f64, f64)> {
    if res.params.qubits.len() < 2 {
        return Err(CliError::config(
            "device.qubits",
            format!(
                "scenario `{}` needs at least two qubits, got {}",
                res.scenario.name(),
                res.params.qubits.len()
            ),
        ));
    }
    let g1 = tunable_coupling(&res.params, 0, &res.controls.qubits[0])?.abs();
    let g2 = tunable_coupling(&res.params, 1, &res.controls.qubits[1])?.abs();
    Ok((g1, g2))
}

fn grid(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..steps)
            .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

fn run_four_pulse(res: &Resolved) -> Result<ScenarioOutput> {
    let (g1, g2) = pair_couplings(res)?;
    let omega = res.params.resonator.omega;
    let req = ScheduleRequest {
        theta_target: res.four_pulse.theta_target,
        g1,
        g2,
        omega,
        allow_repetitions: res.four_pulse.allow_repetitions,
        max_repetitions: res.four_pulse.max_repetitions,
    };
    let schedule = solve_schedule(&req)?;
    let (a1, a2) = schedule.base_alphas();
    let gate = four_pulse_report(
        a1,
        a2,
        res.n_cut,
        schedule.repetitions,
        Some(schedule.total_time),
        &QState::vacuum(&[res.n_cut]),
    )?;
    let residual = wrap_diff(gate.theta, gate.theta_predicted)
        .abs()
        .max(gate.truncation.top_level_population);
    let summary = vec![
        format!("theta = {:.6} rad (target {:.6})", gate.theta, req.theta_target),
        format!("process fidelity = {:.9}", gate.process_fidelity),
        format!("resonator purity = {:.12}", gate.resonator_purity),
        format!(
            "repetitions = {}, total time = {:.4e} s",
            schedule.repetitions, schedule.total_time
        ),
    ];
    Ok(ScenarioOutput {
        result: json!({ "schedule": schedule, "gate": gate }),
        residual,
        summary,
        rows: None,
    })
}

fn run_geometric_phase(res: &Resolved) -> Result<ScenarioOutput> {
    let (g1, g2) = pair_couplings(res)?;
    let omega = res.params.resonator.omega;
    let gg = geometric_phase_gate(g1, g2, omega, res.geometric_phase.n, res.n_cut)?;
    let gate = gg.report;
    let beta_max = 2.0 * (g1 + g2) / omega;
    let residual = wrap_diff(gate.theta, gate.theta_predicted)
        .abs()
        .max(1.0 - gate.resonator_purity)
        .max(gate.truncation.top_level_population);
    let summary = vec![
        format!("theta = {:.6} rad (analytic {:.6})", gate.theta, gate.theta_predicted),
        format!("resonator purity = {:.12}", gate.resonator_purity),
        format!("loop amplitude bound = {beta_max:.4}"),
    ];
    Ok(ScenarioOutput {
        result: json!({
            "gate": gate,
            "loops": res.geometric_phase.n,
            "beta_max": beta_max,
        }),
        residual,
        summary,
        rows: None,
    })
}

fn run_dispersive(res: &Resolved) -> Result<ScenarioOutput> {
    let (g1, g2) = pair_couplings(res)?;
    let omega = res.params.resonator.omega;
    let rep = dispersive_gate_check(g1, g2, res.dispersive.delta_over_g, omega, res.n_cut)?;
    let residual = (1.0 - rep.effective_model_check)
        .abs()
        .max(rep.gate.truncation.top_level_population);
    let summary = vec![
        format!("process fidelity vs sqrt(iSWAP) = {:.6}", rep.gate.process_fidelity),
        format!("exchange rate J = {:.4e} rad/s", rep.exchange_rate),
        format!("leakage = {:.4e}", rep.leakage),
    ];
    Ok(ScenarioOutput {
        result: json!({
            "delta_over_g": res.dispersive.delta_over_g,
            "report": rep,
        }),
        residual,
        summary,
        rows: None,
    })
}

fn run_schedule(res: &Resolved) -> Result<ScenarioOutput> {
    let (g1, g2) = pair_couplings(res)?;
    let omega = res.params.resonator.omega;
    let req = ScheduleRequest {
        theta_target: res.schedule.theta_target,
        g1,
        g2,
        omega,
        allow_repetitions: res.schedule.allow_repetitions,
        max_repetitions: res.schedule.max_repetitions,
    };
    let schedule = solve_schedule(&req)?;
    let budget = match (res.schedule.t1, res.schedule.t2) {
        (Some(t1), Some(t2)) => Some(budget_check(&schedule, t1, t2)),
        _ => None,
    };
    let residual = (schedule.achieved_theta - schedule.target_theta).abs() / schedule.target_theta;
    let summary = vec![
        format!(
            "achieved theta = {:.6} rad in {} block(s), total time {:.4e} s",
            schedule.achieved_theta, schedule.repetitions, schedule.total_time
        ),
        format!(
            "single-shot feasible = {} (needs |sin·sin·sin| = {:.4}, legacy-4 reading {:.4}, max {:.4})",
            schedule.single_shot.feasible,
            schedule.single_shot.product_required,
            schedule.single_shot.product_required_legacy4,
            schedule.single_shot.product_max,
        ),
    ];
    Ok(ScenarioOutput {
        result: json!({
            "schedule": schedule,
            "budget": budget,
            "max_single_shot_theta": max_single_shot_theta(g1, g2, omega),
        }),
        residual,
        summary,
        rows: None,
    })
}

fn run_network(res: &Resolved) -> Result<ScenarioOutput> {
    let (i, j) = res.network.pair;
    let mut spec = NetworkSpec::new(res.params.clone(), res.controls.clone(), res.n_cut);
    spec.coupling_signs = res.network.signs.clone();
    // Explicit controls are honored verbatim (residual spectator couplings
    // included); otherwise the pair is selected with spectators parked.
    let controls = if res.explicit_controls {
        res.controls.clone()
    } else {
        select_pair(&spec, i, j)?
    };
    let g1 = spec.signed_coupling(i, &controls)?.abs();
    let g2 = spec.signed_coupling(j, &controls)?.abs();
    let req = ScheduleRequest {
        theta_target: res.network.theta_target,
        g1,
        g2,
        omega: res.params.resonator.omega,
        allow_repetitions: res.network.allow_repetitions,
        max_repetitions: res.network.max_repetitions,
    };
    let schedule = solve_schedule(&req)?;
    let u = schedule_unitary(&spec, &controls, (i, j), &schedule)?;
    let g4 = pair_gate(&spec, &u, i, j)?;
    let ideal = ideal_two_qubit_gate(schedule.achieved_theta);
    let fidelity = unitary_process_fidelity(&g4, &ideal);
    let distance = phase_min_distance(
        &QOperator::new(g4, vec![2, 2])?,
        &QOperator::new(ideal, vec![2, 2])?,
    );
    let n_qubits = res.params.qubits.len();
    let crosstalk = if n_qubits > 2 {
        Some(crosstalk_metric(&spec, &u, i, j)?)
    } else {
        None
    };
    let mut summary = vec![
        format!("pair ({i}, {j}) of {n_qubits} qubits"),
        format!("pair-gate fidelity = {:.9} (distance {distance:.3e})", fidelity),
        format!("achieved theta = {:.6} rad", schedule.achieved_theta),
    ];
    if let Some(x) = crosstalk {
        summary.push(format!("spectator crosstalk = {x:.3e}"));
    }
    Ok(ScenarioOutput {
        result: json!({
            "n_qubits": n_qubits,
            "pair": [i, j],
            "schedule": schedule,
            "achieved_theta": schedule.achieved_theta,
            "pair_gate_fidelity": fidelity,
            "pair_gate_distance": distance,
            "avg_gate_fidelity": avg_gate_fidelity(fidelity, 4),
            "crosstalk": crosstalk,
        }),
        residual: distance,
        summary,
        rows: None,
    })
}

fn run_sweep(res: &Resolved) -> Result<ScenarioOutput> {
    let sweep = res.sweep.as_ref().expect("sweep block checked at resolve");
    let points = grid(sweep.start, sweep.stop, sweep.steps);
    let mut rows = Vec::with_capacity(points.len());
    let mut residual = 0.0f64;
    match sweep.path {
        SweepPath::ControlsPhiX => {
            if res.params.qubits.is_empty() {
                return Err(CliError::config("device.qubits", "need at least one qubit"));
            }
            for &phi_x in &points {
                let mut ctl = res.controls.qubits[0].clone();
                ctl.phi_x = phi_x;
                let g = tunable_coupling(&res.params, 0, &ctl)?.abs();
                rows.push(SweepRow {
                    value: phi_x,
                    g_prime: Some(g),
                    ..SweepRow::default()
                });
            }
        }
        SweepPath::DispersiveDeltaOverG => {
            let (g1, g2) = pair_couplings(res)?;
            let omega = res.params.resonator.omega;
            for &delta in &points {
                let rep = dispersive_gate_check(g1, g2, delta, omega, res.n_cut)?;
                residual = residual
                    .max((1.0 - rep.effective_model_check).abs())
                    .max(rep.gate.truncation.top_level_population);
                rows.push(SweepRow {
                    value: delta,
                    g_prime: Some((g1 * g2).sqrt()),
                    theta: Some(rep.gate.theta),
                    fidelity: Some(rep.gate.process_fidelity),
                    purity: Some(rep.gate.resonator_purity),
                    total_time: rep.gate.total_time,
                });
            }
        }
        SweepPath::ScheduleThetaTarget => {
            let (g1, g2) = pair_couplings(res)?;
            let omega = res.params.resonator.omega;
            for &target in &points {
                let req = ScheduleRequest {
                    theta_target: target,
                    g1,
                    g2,
                    omega,
                    allow_repetitions: res.schedule.allow_repetitions,
                    max_repetitions: res.schedule.max_repetitions,
                };
                let schedule = solve_schedule(&req)?;
                residual =
                    residual.max((schedule.achieved_theta - target).abs() / target.max(1e-300));
                rows.push(SweepRow {
                    value: target,
                    g_prime: Some((g1 * g2).sqrt()),
                    theta: Some(schedule.achieved_theta),
                    total_time: Some(schedule.total_time),
                    ..SweepRow::default()
                });
            }
        }
    }
    let summary = vec![format!(
        "swept {} over [{:.6}, {:.6}] in {} step(s)",
        sweep.path.name(),
        sweep.start,
        sweep.stop,
        sweep.steps
    )];
    Ok(ScenarioOutput {
        result: json!({
            "path": sweep.path.name(),
            "start": sweep.start,
            "stop": sweep.stop,
            "steps": sweep.steps,
            "rows": rows.len(),
            "csv": res.out_sweep,
        }),
        residual,
        summary,
        rows: Some(rows),
    })
}

pub fn run(
    config_path: &Path,
    out_dir: &Path,
    scenario_override: Option<&str>,
    seed: u64,
) -> Result<RunOutcome> {
    let (res, echo) = config::load(config_path, scenario_override)?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;

    let mut out = match res.scenario {
        Scenario::FourPulse => run_four_pulse(&res)?,
        Scenario::GeometricPhase => run_geometric_phase(&res)?,
        Scenario::Dispersive => run_dispersive(&res)?,
        Scenario::Schedule => run_schedule(&res)?,
        Scenario::Network => run_network(&res)?,
        Scenario::Sweep => run_sweep(&res)?,
    };
    if out.residual > res.tolerance {
        return Err(CliError::Residual {
            residual: out.residual,
            tolerance: res.tolerance,
        });
    }
    if let Some(map) = out.result.as_object_mut() {
        map.insert(
            "numerics".into(),
            json!({
                "n_cut": res.n_cut,
                "residual": out.residual,
                "tolerance": res.tolerance,
            }),
        );
    }

    let report = report::build_report(res.scenario.name(), seed, echo, out.result)?;
    let report_path = out_dir.join(&res.out_report);
    report::write_report(&report_path, &report)?;
    let sweep_path = match &out.rows {
        Some(rows) => {
            let p = out_dir.join(&res.out_sweep);
            report::write_sweep_csv(&p, rows, &report.config_hash)?;
            Some(p)
        }
        None => None,
    };
    Ok(RunOutcome {
        report_path,
        sweep_path,
        summary: out.summary,
    })
}
