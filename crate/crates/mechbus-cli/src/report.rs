//! Report assembly: stable-order JSON with content hashes, and RFC-4180
//! sweep tables (CRLF rows, 17-significant-digit scientific notation).

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Determinism {
    /// SHA-256 over (scenario, seed, config hash, result) in canonical JSON.
    pub hash: String,
}

/// The single JSON artifact of a run. Field order is fixed by declaration
/// and nested maps are sorted, so identical runs are byte-identical — no
/// wall-clock state is recorded anywhere.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub result: serde_json::Value,
    pub determinism: Determinism,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn canonical(value: &serde_json::Value) -> Result<String> {
    serde_json::to_string(value)
        .map_err(|e| CliError::config("report", format!("serialization failed: {e}")))
}

pub fn build_report(
    scenario: &str,
    seed: u64,
    config: serde_json::Value,
    result: serde_json::Value,
) -> Result<Report> {
    let config_hash = sha256_hex(canonical(&config)?.as_bytes());
    let body = serde_json::json!({
        "scenario": scenario,
        "seed": seed,
        "config_hash": config_hash,
        "result": result,
    });
    let hash = sha256_hex(canonical(&body)?.as_bytes());
    Ok(Report {
        tool: ToolInfo {
            name: "mechbus",
            version: env!("CARGO_PKG_VERSION"),
        },
        scenario: scenario.to_string(),
        seed,
        config_hash,
        config,
        result,
        determinism: Determinism { hash },
    })
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::config("report", format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One sweep grid point; empty fields stay empty in the CSV.
#[derive(Clone, Debug, Default)]
pub struct SweepRow {
    pub value: f64,
    pub g_prime: Option<f64>,
    pub theta: Option<f64>,
    pub fidelity: Option<f64>,
    pub purity: Option<f64>,
    pub total_time: Option<f64>,
}

pub const SWEEP_HEADER: &str = "value,g_prime,theta,fidelity,purity,total_time,config_hash";

fn field(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow], config_hash: &str) -> Result<()> {
    let io_err = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut buf = Vec::new();
    write!(buf, "{SWEEP_HEADER}\r\n").map_err(io_err)?;
    for row in rows {
        write!(
            buf,
            "{},{},{},{},{},{},{}\r\n",
            field(Some(row.value)),
            field(row.g_prime),
            field(row.theta),
            field(row.fidelity),
            field(row.purity),
            field(row.total_time),
            config_hash,
        )
        .map_err(io_err)?;
    }
    std::fs::write(path, buf).map_err(io_err)
}
