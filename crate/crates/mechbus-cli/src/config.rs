//! Strict TOML config schema with mandatory unit tags.
//!
//! Every dimensioned quantity is a `{ value, unit }` table; the unit
//! vocabulary is `hz | ghz | rad_per_s` for frequencies (hz/ghz are cyclic
//! and converted to rad/s by 2π), `tesla | meter | second | farad` for
//! linear quantities, and `phi0` for fluxes in units of Φ₀. Unknown keys
//! anywhere in the document are rejected.

use std::f64::consts::PI;
use std::path::Path;

use mechbus_core::device::{
    ControlSettings, DeviceParams, QubitControl, QubitParams, ResonatorParams,
};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

/// Angular frequency in rad/s from a tagged quantity.
fn angular_frequency(q: &Quantity, path: &str) -> Result<f64> {
    let factor = match q.unit.as_str() {
        "hz" => 2.0 * PI,
        "ghz" => 2.0 * PI * 1e9,
        "rad_per_s" => 1.0,
        other => {
            return Err(CliError::config(
                path,
                format!("unknown unit `{other}` (expected hz | ghz | rad_per_s)"),
            ))
        }
    };
    finite(q.value * factor, path)
}

/// Quantity whose unit must match `expected` exactly (no scaling).
fn linear(q: &Quantity, path: &str, expected: &str) -> Result<f64> {
    if q.unit != expected {
        return Err(CliError::config(
            path,
            format!("unknown unit `{}` (expected {expected})", q.unit),
        ));
    }
    finite(q.value, path)
}

fn finite(v: f64, path: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(path, format!("non-finite value {v}")))
    }
}

fn positive(v: f64, path: &str) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(path, format!("must be positive, got {v}")))
    }
}

// ---- raw (on-disk) schema ------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawQubit {
    pub e_j0: Quantity,
    pub c_j: Quantity,
    pub c_g: Quantity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawResonator {
    pub omega: Quantity,
    pub length: Quantity,
    pub x_zpf: Quantity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDevice {
    pub qubits: Vec<RawQubit>,
    pub resonator: RawResonator,
    pub b_field: Quantity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawControl {
    pub n_g: Option<f64>,
    pub phi_b: Option<Quantity>,
    pub phi_x: Option<Quantity>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawControls {
    pub qubits: Vec<RawControl>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNumerics {
    pub n_cut: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFourPulse {
    pub theta_target: Option<f64>,
    pub allow_repetitions: Option<bool>,
    pub max_repetitions: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometricPhase {
    pub n: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDispersive {
    pub delta_over_g: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSchedule {
    pub theta_target: Option<f64>,
    pub allow_repetitions: Option<bool>,
    pub max_repetitions: Option<usize>,
    pub t1: Option<Quantity>,
    pub t2: Option<Quantity>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNetwork {
    pub pair: Option<[usize; 2]>,
    pub theta_target: Option<f64>,
    pub allow_repetitions: Option<bool>,
    pub max_repetitions: Option<usize>,
    /// Per-qubit sign override for the bus coupling (±1 each).
    pub signs: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub path: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub report: Option<String>,
    pub sweep: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: String,
    pub device: RawDevice,
    pub controls: Option<RawControls>,
    pub numerics: Option<RawNumerics>,
    pub four_pulse: Option<RawFourPulse>,
    pub geometric_phase: Option<RawGeometricPhase>,
    pub dispersive: Option<RawDispersive>,
    pub schedule: Option<RawSchedule>,
    pub network: Option<RawNetwork>,
    pub sweep: Option<RawSweep>,
    pub output: Option<RawOutput>,
}

// ---- resolved configuration ---------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    FourPulse,
    GeometricPhase,
    Dispersive,
    Schedule,
    Network,
    Sweep,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "four-pulse" => Scenario::FourPulse,
            "geometric-phase" => Scenario::GeometricPhase,
            "dispersive" => Scenario::Dispersive,
            "schedule" => Scenario::Schedule,
            "network" => Scenario::Network,
            "sweep" => Scenario::Sweep,
            other => {
                return Err(CliError::config(
                    "scenario",
                    format!(
                        "unknown scenario `{other}` (expected four-pulse | geometric-phase | \
                         dispersive | schedule | network | sweep)"
                    ),
                ))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::FourPulse => "four-pulse",
            Scenario::GeometricPhase => "geometric-phase",
            Scenario::Dispersive => "dispersive",
            Scenario::Schedule => "schedule",
            Scenario::Network => "network",
            Scenario::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepPath {
    /// Qubit-0 coupling flux; rows carry g′ only.
    ControlsPhiX,
    /// Full dispersive run per point.
    DispersiveDeltaOverG,
    /// Scheduler solve per point.
    ScheduleThetaTarget,
}

impl SweepPath {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "controls.phi_x" => SweepPath::ControlsPhiX,
            "dispersive.delta_over_g" => SweepPath::DispersiveDeltaOverG,
            "schedule.theta_target" => SweepPath::ScheduleThetaTarget,
            other => {
                return Err(CliError::config(
                    "sweep.path",
                    format!(
                        "unknown parameter path `{other}` (expected controls.phi_x | \
                         dispersive.delta_over_g | schedule.theta_target)"
                    ),
                ))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepPath::ControlsPhiX => "controls.phi_x",
            SweepPath::DispersiveDeltaOverG => "dispersive.delta_over_g",
            SweepPath::ScheduleThetaTarget => "schedule.theta_target",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FourPulseCfg {
    pub theta_target: f64,
    pub allow_repetitions: bool,
    pub max_repetitions: usize,
}

#[derive(Clone, Debug)]
pub struct GeometricPhaseCfg {
    pub n: usize,
}

#[derive(Clone, Debug)]
pub struct DispersiveCfg {
    pub delta_over_g: f64,
}

#[derive(Clone, Debug)]
pub struct ScheduleCfg {
    pub theta_target: f64,
    pub allow_repetitions: bool,
    pub max_repetitions: usize,
    /// Coherence budgets (s); a budget report is emitted when both are set.
    pub t1: Option<f64>,
    pub t2: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct NetworkCfg {
    pub pair: (usize, usize),
    pub theta_target: f64,
    pub allow_repetitions: bool,
    pub max_repetitions: usize,
    pub signs: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SweepCfg {
    pub path: SweepPath,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct Resolved {
    pub scenario: Scenario,
    pub params: DeviceParams,
    pub controls: ControlSettings,
    /// Whether the config supplied a controls block (the network scenario
    /// then uses it verbatim instead of the pair-selection defaults).
    pub explicit_controls: bool,
    pub n_cut: usize,
    pub tolerance: f64,
    pub four_pulse: FourPulseCfg,
    pub geometric_phase: GeometricPhaseCfg,
    pub dispersive: DispersiveCfg,
    pub schedule: ScheduleCfg,
    pub network: NetworkCfg,
    pub sweep: Option<SweepCfg>,
    pub out_report: String,
    pub out_sweep: String,
}

const DEFAULT_THETA: f64 = PI / 4.0;
const DEFAULT_MAX_REPETITIONS: usize = 64;

pub fn resolve(raw: &RawConfig) -> Result<Resolved> {
    let scenario = Scenario::parse(&raw.scenario)?;

    if raw.device.qubits.is_empty() {
        return Err(CliError::config("device.qubits", "need at least one qubit"));
    }
    let mut qubits = Vec::with_capacity(raw.device.qubits.len());
    for (k, q) in raw.device.qubits.iter().enumerate() {
        let p = format!("device.qubits[{k}]");
        qubits.push(QubitParams {
            e_j0: positive(angular_frequency(&q.e_j0, &format!("{p}.e_j0"))?, &format!("{p}.e_j0"))?,
            c_j: positive(linear(&q.c_j, &format!("{p}.c_j"), "farad")?, &format!("{p}.c_j"))?,
            c_g: positive(linear(&q.c_g, &format!("{p}.c_g"), "farad")?, &format!("{p}.c_g"))?,
        });
    }
    let r = &raw.device.resonator;
    let resonator = ResonatorParams::from_xzpf(
        positive(
            angular_frequency(&r.omega, "device.resonator.omega")?,
            "device.resonator.omega",
        )?,
        positive(
            linear(&r.length, "device.resonator.length", "meter")?,
            "device.resonator.length",
        )?,
        positive(
            linear(&r.x_zpf, "device.resonator.x_zpf", "meter")?,
            "device.resonator.x_zpf",
        )?,
    )?;
    let b_field = positive(
        linear(&raw.device.b_field, "device.b_field", "tesla")?,
        "device.b_field",
    )?;
    let params = DeviceParams::new(qubits, resonator, b_field)?;

    let n_qubits = params.qubits.len();
    let explicit_controls = raw.controls.is_some();
    let controls = match &raw.controls {
        None => ControlSettings::uniform(
            n_qubits,
            QubitControl {
                n_g: 0.5,
                phi_b: 0.5,
                phi_x: 0.0,
            },
        ),
        Some(rc) => {
            if rc.qubits.len() != n_qubits {
                return Err(CliError::config(
                    "controls.qubits",
                    format!(
                        "got {} control entries for {} qubits",
                        rc.qubits.len(),
                        n_qubits
                    ),
                ));
            }
            let mut out = Vec::with_capacity(n_qubits);
            for (k, c) in rc.qubits.iter().enumerate() {
                let p = format!("controls.qubits[{k}]");
                let phi_b = match &c.phi_b {
                    None => 0.5,
                    Some(q) => linear(q, &format!("{p}.phi_b"), "phi0")?,
                };
                let phi_x = match &c.phi_x {
                    None => 0.0,
                    Some(q) => linear(q, &format!("{p}.phi_x"), "phi0")?,
                };
                out.push(QubitControl {
                    n_g: finite(c.n_g.unwrap_or(0.5), &format!("{p}.n_g"))?,
                    phi_b,
                    phi_x,
                });
            }
            ControlSettings { qubits: out }
        }
    };

    let n_cut = raw.numerics.as_ref().and_then(|n| n.n_cut).unwrap_or(20);
    if n_cut < 2 {
        return Err(CliError::config("numerics.n_cut", "need n_cut >= 2"));
    }
    let tolerance = raw
        .numerics
        .as_ref()
        .and_then(|n| n.tolerance)
        .unwrap_or(1e-8);
    positive(tolerance, "numerics.tolerance")?;

    let theta_of = |t: Option<f64>, path: &str| -> Result<f64> {
        let v = t.unwrap_or(DEFAULT_THETA);
        if v > 0.0 && v <= PI {
            Ok(v)
        } else {
            Err(CliError::config(path, format!("theta_target must lie in (0, π], got {v}")))
        }
    };

    let fp = raw.four_pulse.clone().unwrap_or(RawFourPulse {
        theta_target: None,
        allow_repetitions: None,
        max_repetitions: None,
    });
    let four_pulse = FourPulseCfg {
        theta_target: theta_of(fp.theta_target, "four_pulse.theta_target")?,
        allow_repetitions: fp.allow_repetitions.unwrap_or(true),
        max_repetitions: fp.max_repetitions.unwrap_or(DEFAULT_MAX_REPETITIONS),
    };

    let geometric_phase = GeometricPhaseCfg {
        n: raw.geometric_phase.as_ref().and_then(|g| g.n).unwrap_or(1),
    };
    if geometric_phase.n == 0 {
        return Err(CliError::config("geometric_phase.n", "need n >= 1 bus periods"));
    }

    let dispersive = DispersiveCfg {
        delta_over_g: raw
            .dispersive
            .as_ref()
            .and_then(|d| d.delta_over_g)
            .unwrap_or(10.0),
    };
    if !(dispersive.delta_over_g > 0.0) {
        return Err(CliError::config(
            "dispersive.delta_over_g",
            format!("must be positive, got {}", dispersive.delta_over_g),
        ));
    }

    let sc = raw.schedule.clone().unwrap_or(RawSchedule {
        theta_target: None,
        allow_repetitions: None,
        max_repetitions: None,
        t1: None,
        t2: None,
    });
    let schedule = ScheduleCfg {
        theta_target: theta_of(sc.theta_target, "schedule.theta_target")?,
        allow_repetitions: sc.allow_repetitions.unwrap_or(true),
        max_repetitions: sc.max_repetitions.unwrap_or(DEFAULT_MAX_REPETITIONS),
        t1: match &sc.t1 {
            None => None,
            Some(q) => Some(positive(linear(q, "schedule.t1", "second")?, "schedule.t1")?),
        },
        t2: match &sc.t2 {
            None => None,
            Some(q) => Some(positive(linear(q, "schedule.t2", "second")?, "schedule.t2")?),
        },
    };

    let nw = raw.network.clone().unwrap_or(RawNetwork {
        pair: None,
        theta_target: None,
        allow_repetitions: None,
        max_repetitions: None,
        signs: None,
    });
    let pair = nw.pair.unwrap_or([0, 1]);
    if pair[0] == pair[1] || pair[0] >= n_qubits || pair[1] >= n_qubits {
        return Err(CliError::config(
            "network.pair",
            format!("invalid pair [{}, {}] for {n_qubits} qubits", pair[0], pair[1]),
        ));
    }
    if let Some(signs) = &nw.signs {
        if signs.len() != n_qubits {
            return Err(CliError::config(
                "network.signs",
                format!("got {} signs for {n_qubits} qubits", signs.len()),
            ));
        }
        for (k, s) in signs.iter().enumerate() {
            if s.abs() != 1.0 {
                return Err(CliError::config(
                    format!("network.signs[{k}]"),
                    format!("signs must be ±1, got {s}"),
                ));
            }
        }
    }
    let network = NetworkCfg {
        pair: (pair[0], pair[1]),
        theta_target: theta_of(nw.theta_target, "network.theta_target")?,
        allow_repetitions: nw.allow_repetitions.unwrap_or(true),
        max_repetitions: nw.max_repetitions.unwrap_or(DEFAULT_MAX_REPETITIONS),
        signs: nw.signs,
    };

    let sweep = match &raw.sweep {
        None => None,
        Some(s) => {
            finite(s.start, "sweep.start")?;
            finite(s.stop, "sweep.stop")?;
            Some(SweepCfg {
                path: SweepPath::parse(&s.path)?,
                start: s.start,
                stop: s.stop,
                steps: s.steps,
            })
        }
    };
    if scenario == Scenario::Sweep && sweep.is_none() {
        return Err(CliError::config(
            "sweep",
            "sweep scenario requires a [sweep] block",
        ));
    }

    let out_report = raw
        .output
        .as_ref()
        .and_then(|o| o.report.clone())
        .unwrap_or_else(|| "report.json".into());
    let out_sweep = raw
        .output
        .as_ref()
        .and_then(|o| o.sweep.clone())
        .unwrap_or_else(|| "sweep.csv".into());

    Ok(Resolved {
        scenario,
        params,
        controls,
        explicit_controls,
        n_cut,
        tolerance,
        four_pulse,
        geometric_phase,
        dispersive,
        schedule,
        network,
        sweep,
        out_report,
        out_sweep,
    })
}

/// Parse a config file; returns the resolved config together with the raw
/// document echoed as sorted JSON (the form hashed into the report).
pub fn load(path: &Path, scenario_override: Option<&str>) -> Result<(Resolved, serde_json::Value)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&text, path.display().to_string().as_str(), scenario_override)
}

pub fn load_str(
    text: &str,
    origin: &str,
    scenario_override: Option<&str>,
) -> Result<(Resolved, serde_json::Value)> {
    let mut value: toml::Value = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config(origin, e.message()))?;
    if let Some(name) = scenario_override {
        Scenario::parse(name)?;
        match value.as_table_mut() {
            Some(table) => {
                table.insert("scenario".into(), toml::Value::String(name.into()));
            }
            None => return Err(CliError::config(origin, "config root must be a table")),
        }
    }
    let raw: RawConfig = value
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config(origin, e.message()))?;
    let resolved = resolve(&raw)?;
    // toml::Value -> serde_json::Value; serde_json maps are BTree-backed, so
    // the echo (and everything hashed from it) has sorted, stable key order.
    let echo = serde_json::to_value(&value)
        .map_err(|e| CliError::config(origin, format!("config echo failed: {e}")))?;
    Ok((resolved, echo))
}
