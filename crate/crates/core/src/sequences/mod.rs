//! Pulse families and the gate-fidelity functionals built on them.

mod fidelity;
mod pulses;
mod scan;

pub use fidelity::{
    ensemble_gate_fidelity, member_infidelity, sequence_fidelity, sequence_infidelity, ErrorPoint,
    FidelityMeasure, GateOptions, Su2,
};
pub use pulses::{
    bb1, bb1_ordered, bb1_phase, corpse, plain_pulse, rotary_echo, scrofulous_pi, Bb1Order,
    PulseFamily, SCROFULOUS_PI_PHASES_DEG,
};
pub use scan::{
    family_scan, preset_error_fidelity, robustness_scan, shifted_spec, PresetErrorReport, ScanAxis,
    ScanRow, ScanTable,
};
