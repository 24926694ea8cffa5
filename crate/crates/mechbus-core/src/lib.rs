//! Numerical toolkit for two-qubit gates between superconducting charge
//! qubits coupled through a shared nanomechanical-resonator bus.
//!
//! The crate provides the truncated-Fock operator algebra, the circuit-level
//! device model, a brute-force time-ordered propagator, closed-form gate
//! constructions (four-pulse controlled-displacement entangler, always-on
//! geometric-phase gate, dispersive exchange gate), a pulse scheduler, and a
//! multi-qubit bus network with pair selection and crosstalk diagnostics.
//!
//! Conventions: ħ = 1, energies and rates in rad/s, subsystem order
//! `[qubit 1, …, qubit n, resonator]`, σz = |0⟩⟨0| − |1⟩⟨1|.

pub mod device;
pub mod error;
pub mod gates;
pub mod metrics;
pub mod network;
pub mod operator;
pub mod propagator;
pub mod scheduler;
pub mod state;

pub use error::{Error, Result};
pub use gates::{GateReport, TruncationDiagnostic};
pub use operator::QOperator;
pub use scheduler::{PulseSchedule, PulseSegment, ScheduleRequest};
pub use state::QState;
