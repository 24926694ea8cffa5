//! Command-line front end for the mechanical-bus gate simulator.
//!
//! A run ingests one TOML config, executes the requested scenario against
//! `mechbus-core`, and writes `report.json` (plus `sweep.csv` for sweeps).
//! Every dimensioned quantity in the config carries an explicit unit tag and
//! reports are byte-deterministic: no wall-clock state enters the output.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{Resolved, Scenario};
pub use report::Report;
pub use runner::{run, RunOutcome};

/// Runner-level failure, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Scenario self-check residual exceeded `numerics.tolerance`.
    #[error("numeric residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error(transparent)]
    Core(#[from] mechbus_core::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 = config/validation, 3 = numeric failure, 4 = infeasible schedule.
    pub fn exit_code(&self) -> i32 {
        use mechbus_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Residual { .. } => 3,
            CliError::Core(e) => match e {
                E::Infeasible(_) => 4,
                E::NonConvergence { .. }
                | E::ExpOverflow { .. }
                | E::NotHermitian { .. }
                | E::Linalg(_) => 3,
                E::DimensionMismatch { .. }
                | E::InvalidArgument(_)
                | E::OffWorkingPoint { .. }
                | E::DimensionCap { .. } => 2,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        use mechbus_core::Error as E;
        match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Residual { .. } => "residual",
            CliError::Core(e) => match e {
                E::Infeasible(_) => "infeasible",
                E::NonConvergence { .. } => "non-convergence",
                E::ExpOverflow { .. } | E::NotHermitian { .. } | E::Linalg(_) => "numeric",
                _ => "validation",
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
