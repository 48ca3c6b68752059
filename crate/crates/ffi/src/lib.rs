//! C ABI over `mwqubit`.
//!
//! Every entry point returns an [`MwqStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`mwq_last_error_message`]. All rates are rad/s, times seconds, angles
//! radians.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use mwqubit::bloch::Rotation;
use mwqubit::diagnostics::fit_rabi_trace;
use mwqubit::dynamics::{
    leakage_populations, torrey_population, DriveParams, LeakageChannel, LeakageOptions,
};
use mwqubit::ensemble::{ClosedFormAverager, EnsembleSpec};
use mwqubit::pulse::PulseSequence;
use mwqubit::sequences::{
    ensemble_gate_fidelity, sequence_fidelity, ErrorPoint, FidelityMeasure, GateOptions,
    PulseFamily,
};
use mwqubit::trace::TimedTrace;
use mwqubit::units::DecayRates;
use mwqubit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NonFinite = 3,
    PropagatorWithDecay = 4,
    NotConverged = 5,
    Singular = 6,
    Numerical = 7,
    DegenerateTrace = 8,
    Panic = 9,
    Other = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwqFamily {
    Rabi = 0,
    Rotary = 1,
    Corpse = 2,
    Scrofulous = 3,
    Bb1 = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwqMeasure {
    /// Overlap of the final state with the target state, starting from |0>.
    StateFromZero = 0,
    /// Overlap of the final state with the target state, starting from |1>.
    StateFromOne = 1,
    /// `|Tr(U_target^dag U)| / 2`; only valid without decay.
    Propagator = 2,
}

/// Gaussian ensemble of Rabi rates and detunings, rad/s.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwqEnsemble {
    pub chi0: f64,
    pub delta0: f64,
    pub dchi: f64,
    pub ddelta: f64,
    pub correlation: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwqDecay {
    pub gamma1: f64,
    pub gamma2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwqLeakageChannel {
    pub rabi: f64,
    pub detuning: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MwqLeakageSummary {
    pub max_combined: f64,
    pub final_combined: f64,
    pub final_pop1: f64,
}

/// Fitted Rabi trace. `values` and `std_errors` are ordered
/// chi0, delta0, dchi, ddelta, s1, s0.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MwqRabiFit {
    pub values: [f64; 6],
    pub std_errors: [f64; 6],
    pub residual_rms: f64,
    pub iterations: u32,
    pub converged: bool,
}

/// Opaque pulse sequence together with the rotation it should implement.
pub struct MwqSequence {
    seq: PulseSequence,
    target: Rotation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MwqStatus {
    match e {
        Error::InvalidInput(_)
        | Error::NoRotationAxis
        | Error::NonUnitAxis(_)
        | Error::Config { .. } => MwqStatus::InvalidInput,
        Error::NonFinite(_) => MwqStatus::NonFinite,
        Error::PropagatorWithDecay => MwqStatus::PropagatorWithDecay,
        Error::NotConverged(_) => MwqStatus::NotConverged,
        Error::Singular(_) => MwqStatus::Singular,
        Error::Node { .. } | Error::TruncatedWeight(_) => MwqStatus::Numerical,
        Error::DegenerateTrace(_) => MwqStatus::DegenerateTrace,
        _ => MwqStatus::Other,
    }
}

/// Runs `body`, converting errors and panics into a status and a stored message.
fn guard(body: impl FnOnce() -> Result<(), MwqStatus>) -> MwqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MwqStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            MwqStatus::Panic
        }
    }
}

fn lift<T>(r: mwqubit::Result<T>) -> Result<T, MwqStatus> {
    r.map_err(|e| {
        set_last_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), MwqStatus> {
    if p.is_null() {
        set_last_error(format!("`{name}` is null"));
        Err(MwqStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null (only allowed when `n == 0`) or point to `n` readable values.
unsafe fn input_slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], MwqStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(slice::from_raw_parts(p, n))
}

fn decay_of(d: *const MwqDecay) -> Result<DecayRates, MwqStatus> {
    if d.is_null() {
        return Ok(DecayRates::NONE);
    }
    // SAFETY: checked non-null; caller guarantees a valid struct.
    let d = unsafe { *d };
    lift(DecayRates::new(d.gamma1, d.gamma2))
}

fn measure_of(m: MwqMeasure) -> FidelityMeasure {
    match m {
        MwqMeasure::StateFromZero => FidelityMeasure::StateOverlap { initial: 0 },
        MwqMeasure::StateFromOne => FidelityMeasure::StateOverlap { initial: 1 },
        MwqMeasure::Propagator => FidelityMeasure::PropagatorOverlap,
    }
}

fn family_of(f: MwqFamily) -> PulseFamily {
    match f {
        MwqFamily::Rabi => PulseFamily::Rabi,
        MwqFamily::Rotary => PulseFamily::Rotary,
        MwqFamily::Corpse => PulseFamily::Corpse,
        MwqFamily::Scrofulous => PulseFamily::Scrofulous,
        MwqFamily::Bb1 => PulseFamily::Bb1,
    }
}

fn spec_of(e: &MwqEnsemble) -> Result<EnsembleSpec, MwqStatus> {
    lift(
        EnsembleSpec::new(e.chi0, e.delta0, e.dchi, e.ddelta)
            .and_then(|s| s.with_correlation(e.correlation)),
    )
}

/// Message of the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mwq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mwq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the sequence of `family` for rotation angle `theta` at nominal Rabi
/// rate `chi0`. `repeats` is used by rotary echoes only.
///
/// # Safety
/// `out` must be a valid pointer. Release the handle with [`mwq_sequence_free`].
#[no_mangle]
pub unsafe extern "C" fn mwq_sequence_new(
    family: MwqFamily,
    theta: f64,
    chi0: f64,
    repeats: u32,
    out: *mut *mut MwqSequence,
) -> MwqStatus {
    guard(|| {
        non_null(out, "out")?;
        let family = family_of(family);
        let seq = lift(family.build(theta, chi0, repeats as usize))?;
        let target = lift(family.target(theta))?;
        *out = Box::into_raw(Box::new(MwqSequence { seq, target }));
        Ok(())
    })
}

/// # Safety
/// `seq` must be null or a handle from [`mwq_sequence_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mwq_sequence_free(seq: *mut MwqSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// # Safety
/// `seq` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mwq_sequence_duration(
    seq: *const MwqSequence,
    out: *mut f64,
) -> MwqStatus {
    guard(|| {
        non_null(seq, "seq")?;
        non_null(out, "out")?;
        *out = (*seq).seq.total_duration();
        Ok(())
    })
}

/// # Safety
/// `seq` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mwq_sequence_segment_count(
    seq: *const MwqSequence,
    out: *mut usize,
) -> MwqStatus {
    guard(|| {
        non_null(seq, "seq")?;
        non_null(out, "out")?;
        *out = (*seq).seq.segments.len();
        Ok(())
    })
}

/// Fidelity of one member with fractional detuning `f` and Rabi-rate error
/// `eps`. `decay` may be null for no dissipation.
///
/// # Safety
/// `seq` must be a live handle, `decay` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mwq_sequence_fidelity(
    seq: *const MwqSequence,
    f: f64,
    eps: f64,
    measure: MwqMeasure,
    decay: *const MwqDecay,
    out: *mut f64,
) -> MwqStatus {
    guard(|| {
        non_null(seq, "seq")?;
        non_null(out, "out")?;
        let s = &*seq;
        let decay = decay_of(decay)?;
        *out = lift(sequence_fidelity(
            &s.seq,
            ErrorPoint::new(f, eps),
            measure_of(measure),
            &s.target,
            Some(decay),
        ))?;
        Ok(())
    })
}

/// Gate fidelity averaged over `ensemble` with `quad_order` points per axis
/// (0 selects the default).
///
/// # Safety
/// `seq` must be a live handle, `ensemble` and `out` valid, `decay` null or valid.
#[no_mangle]
pub unsafe extern "C" fn mwq_ensemble_gate_fidelity(
    seq: *const MwqSequence,
    ensemble: *const MwqEnsemble,
    decay: *const MwqDecay,
    measure: MwqMeasure,
    quad_order: u32,
    out: *mut f64,
) -> MwqStatus {
    guard(|| {
        non_null(seq, "seq")?;
        non_null(ensemble, "ensemble")?;
        non_null(out, "out")?;
        let s = &*seq;
        let spec = spec_of(&*ensemble)?;
        let mut opts = GateOptions::default();
        if quad_order > 0 {
            opts.quad_order = quad_order as usize;
        }
        *out = lift(ensemble_gate_fidelity(
            &s.seq,
            &spec,
            decay_of(decay)?,
            measure_of(measure),
            &s.target,
            &opts,
        ))?;
        Ok(())
    })
}

/// Closed-form upper-level population of one driven member at time `t`.
/// `exact` selects the full expression over the weak-damping form.
///
/// # Safety
/// `decay` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mwq_torrey_population(
    t: f64,
    rabi: f64,
    detuning: f64,
    decay: *const MwqDecay,
    exact: bool,
    out: *mut f64,
) -> MwqStatus {
    guard(|| {
        non_null(out, "out")?;
        if ![t, rabi, detuning].iter().all(|v| v.is_finite()) {
            return lift(Err(Error::NonFinite("torrey arguments")));
        }
        *out = lift(torrey_population(
            t,
            DriveParams::new(rabi, detuning),
            decay_of(decay)?,
            exact,
        ))?;
        Ok(())
    })
}

/// Ensemble-averaged Rabi population at `n` times, written to `out[0..n]`.
/// `quad_order` 0 picks orders from the ensemble and the latest time.
///
/// # Safety
/// `times` and `out` must hold `n` values; `ensemble` valid; `decay` null or valid.
#[no_mangle]
pub unsafe extern "C" fn mwq_ensemble_population(
    times: *const f64,
    n: usize,
    ensemble: *const MwqEnsemble,
    decay: *const MwqDecay,
    quad_order: u32,
    out: *mut f64,
) -> MwqStatus {
    guard(|| {
        let times = input_slice(times, n, "times")?;
        non_null(ensemble, "ensemble")?;
        if n > 0 {
            non_null(out, "out")?;
        }
        let spec = spec_of(&*ensemble)?;
        let decay = decay_of(decay)?;
        let averager = if quad_order > 0 {
            lift(ClosedFormAverager::new(times, decay, quad_order as usize))?
        } else {
            let t_max = times.iter().copied().fold(0.0, f64::max);
            let (oc, od) = mwqubit::ensemble::recommended_orders(&spec, t_max);
            lift(ClosedFormAverager::with_orders(times, decay, oc, od))?
        };
        let pop = lift(averager.population(&spec))?;
        if n > 0 {
            slice::from_raw_parts_mut(out, n).copy_from_slice(&pop);
        }
        Ok(())
    })
}

/// Leakage out of the qubit during a gate of `gate_duration` driven at
/// `qubit_rabi`, through `n` off-resonant channels.
///
/// # Safety
/// `channels` must hold `n` entries; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mwq_leakage(
    qubit_rabi: f64,
    gate_duration: f64,
    channels: *const MwqLeakageChannel,
    n: usize,
    out: *mut MwqLeakageSummary,
) -> MwqStatus {
    guard(|| {
        let channels = input_slice(channels, n, "channels")?;
        non_null(out, "out")?;
        let chans: Vec<LeakageChannel> = channels
            .iter()
            .enumerate()
            .map(|(i, c)| LeakageChannel::new(c.rabi, c.detuning, format!("channel{i}")))
            .collect();
        let r = lift(leakage_populations(
            qubit_rabi,
            gate_duration,
            &chans,
            &LeakageOptions::default(),
        ))?;
        *out = MwqLeakageSummary {
            max_combined: r.max_combined,
            final_combined: r.final_combined,
            final_pop1: r.final_pop1,
        };
        Ok(())
    })
}

/// Fits a measured Rabi trace of `n` samples with known decay rates.
/// A fit that stops without converging still fills `out` and returns
/// `NotConverged`.
///
/// # Safety
/// `times` and `values` must hold `n` values; `decay` null or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mwq_fit_rabi(
    times: *const f64,
    values: *const f64,
    n: usize,
    decay: *const MwqDecay,
    out: *mut MwqRabiFit,
) -> MwqStatus {
    guard(|| {
        let times = input_slice(times, n, "times")?;
        let values = input_slice(values, n, "values")?;
        non_null(out, "out")?;
        let trace = lift(TimedTrace::new(times.to_vec(), values.to_vec()))?;
        let fit = lift(fit_rabi_trace(&trace, decay_of(decay)?, None))?;
        *out = MwqRabiFit {
            values: fit.values(),
            std_errors: fit.std_errors(),
            residual_rms: fit.residual_rms,
            iterations: fit.iterations.min(u32::MAX as usize) as u32,
            converged: fit.converged,
        };
        if fit.converged {
            Ok(())
        } else {
            set_last_error("fit stopped before converging".into());
            Err(MwqStatus::NotConverged)
        }
    })
}
