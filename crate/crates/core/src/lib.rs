//! Simulation and diagnostics for microwave-driven two-level atomic qubits in
//! an inhomogeneous ensemble.
//!
//! * [`bloch`], [`pulse`], [`units`]: state, rotation and drive primitives.
//! * [`dynamics`]: closed-form Torrey populations, an RK4 Bloch integrator and
//!   a leakage model.
//! * [`ensemble`]: Gaussian averaging over Rabi-rate and detuning spreads,
//!   polarimetry signal synthesis.
//! * [`sequences`]: plain, rotary-echo, CORPSE, SCROFULOUS and BB1 pulses and
//!   their fidelities.
//! * [`diagnostics`]: least-squares fits of Rabi and rotary-echo traces.
//! * [`cli`]: the `mwqubit` command line.

pub mod bloch;
pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod pulse;
pub mod sequences;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
