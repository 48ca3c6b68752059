//! Least-squares diagnostics: Rabi and rotary-echo trace fits, the
//! coherence-time saturation fit and fidelity estimates from fitted values.

mod coherence;
mod estimate;
mod features;
pub mod lm;
mod rabi;
mod rotary;

pub use coherence::{fit_coherence_saturation, CoherenceFit};
pub use estimate::{estimate_pi_fidelity, estimate_pi_fidelity_with_preset_errors};
pub use lm::{LmOptions, StopReason};
pub use rabi::{
    fit_rabi_trace, fit_rabi_trace_with, initial_guess, FitOptions, FitReport, FitResult,
    FIT_PARAMETERS,
};
pub use rotary::{fit_rotary_trace, fit_rotary_trace_with, homogeneous_population, RotaryFit};
