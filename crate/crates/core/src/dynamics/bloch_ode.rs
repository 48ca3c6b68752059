//! Dissipative Bloch equations under piecewise-constant drive.
//!
//! ```text
//! d(u,v,w)/dt = W x (u,v,w) - (u/T2', v/T2', (w - w_eq)/T1),  W = (chi cos phi, chi sin phi, Delta)
//! dp/dt       = -gamma2 p
//! ```
//!
//! The pseudospin is integrated with classical fixed-step RK4. Within a
//! segment the right-hand side is linear with constant coefficients, so one
//! RK4 step is the fixed matrix `I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24`
//! acting on `(u, v, w, 1)`; it is built once per step size and reused.
//! The population equation decouples and is applied in closed form.

use std::f64::consts::TAU;

#[cfg(test)]
use nalgebra::Vector3;
use nalgebra::{Matrix4, Vector4};

use crate::bloch::BlochState;
use crate::error::{ensure_finite, Result};
use crate::pulse::{PulseSegment, PulseSequence};
use crate::trace::TimedTrace;
use crate::units::DecayRates;

/// Steady-state inversion the pseudospin relaxes toward.
pub const EQUILIBRIUM_INVERSION: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    /// RK4 steps per generalized Rabi period of the member being integrated.
    pub steps_per_period: f64,
    /// Trace samples per nominal Rabi period of the sequence.
    pub samples_per_period: f64,
    /// Upper bound on `h * rate` for the relaxation rates.
    pub max_decay_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            steps_per_period: 2000.0,
            samples_per_period: 200.0,
            max_decay_step: 0.01,
        }
    }
}

impl OdeOptions {
    pub fn with_steps_per_period(mut self, n: f64) -> Self {
        self.steps_per_period = n;
        self
    }

    pub fn with_samples_per_period(mut self, n: f64) -> Self {
        self.samples_per_period = n;
        self
    }

    fn validate(&self) -> Result<()> {
        ensure_finite(
            "ODE options",
            &[
                self.steps_per_period,
                self.samples_per_period,
                self.max_decay_step,
            ],
        )?;
        if self.steps_per_period < 1.0
            || self.samples_per_period < 1.0
            || self.max_decay_step <= 0.0
        {
            return Err(crate::Error::invalid(
                "steps_per_period and samples_per_period must be >= 1, max_decay_step > 0",
            ));
        }
        Ok(())
    }
}

/// Drive errors of one ensemble member relative to the nominal sequence:
/// every segment Rabi rate is multiplied by `rabi_scale` and `detuning`
/// (rad/s) is added to each segment's detuning offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub rabi_scale: f64,
    pub detuning: f64,
}

impl Member {
    pub const NOMINAL: Member = Member {
        rabi_scale: 1.0,
        detuning: 0.0,
    };

    pub fn new(rabi_scale: f64, detuning: f64) -> Self {
        Member {
            rabi_scale,
            detuning,
        }
    }

    /// Member with absolute Rabi rate `rabi` for a sequence designed at `nominal_rabi`.
    pub fn from_absolute(rabi: f64, detuning: f64, nominal_rabi: f64) -> Self {
        Member {
            rabi_scale: if nominal_rabi > 0.0 {
                rabi / nominal_rabi
            } else {
                1.0
            },
            detuning,
        }
    }
}

/// Bloch states sampled along a trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateTrace {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
}

impl StateTrace {
    /// Logical-|1> population along the trajectory.
    pub fn population(&self) -> TimedTrace {
        TimedTrace::from_parts_unchecked(
            self.times.clone(),
            self.states.iter().map(BlochState::pop1).collect(),
        )
    }

    /// Inversion `w` along the trajectory.
    pub fn inversion(&self) -> TimedTrace {
        TimedTrace::from_parts_unchecked(
            self.times.clone(),
            self.states.iter().map(|s| s.w).collect(),
        )
    }

    fn push(&mut self, t: f64, s: BlochState) {
        self.times.push(t);
        self.states.push(s);
    }
}

/// Generator of the pseudospin equation in homogeneous coordinates.
fn generator(rabi: f64, phase: f64, detuning: f64, decay: &DecayRates) -> Matrix4<f64> {
    let (s, c) = phase.sin_cos();
    let (wx, wy, wz) = (rabi * c, rabi * s, detuning);
    let g2 = decay.transverse_rate();
    let g1 = decay.longitudinal_rate();
    // Rows of W x r - Gamma (r - r_eq); the last column carries r_eq.
    Matrix4::new(
        -g2,
        -wz,
        wy,
        0.0, //
        wz,
        -g2,
        -wx,
        0.0, //
        -wy,
        wx,
        -g1,
        g1 * EQUILIBRIUM_INVERSION, //
        0.0,
        0.0,
        0.0,
        0.0,
    )
}

/// One classical RK4 step of `x' = A x` as a matrix.
fn rk4_step_matrix(a: &Matrix4<f64>, h: f64) -> Matrix4<f64> {
    let ha = a * h;
    let ha2 = ha * ha;
    let ha3 = ha2 * ha;
    let ha4 = ha3 * ha;
    Matrix4::identity() + ha + ha2 / 2.0 + ha3 / 6.0 + ha4 / 24.0
}

/// Integrates one constant-drive interval of length `duration`, calling
/// `sample` at each of the `n_samples` equally spaced interior/end points.
struct SegmentIntegrator {
    generator: Matrix4<f64>,
    omega: f64,
    max_rate: f64,
    gamma2: f64,
}

impl SegmentIntegrator {
    fn new(rabi: f64, phase: f64, detuning: f64, decay: &DecayRates) -> Self {
        SegmentIntegrator {
            generator: generator(rabi, phase, detuning, decay),
            omega: rabi.hypot(detuning),
            max_rate: decay.longitudinal_rate().max(decay.gamma2),
            gamma2: decay.gamma2,
        }
    }

    fn steps_for(&self, dt: f64, opts: &OdeOptions) -> usize {
        let by_rotation = dt * self.omega * opts.steps_per_period / TAU;
        let by_decay = dt * self.max_rate / opts.max_decay_step;
        by_rotation.max(by_decay).ceil().max(1.0) as usize
    }

    /// Advances `state` across `intervals` equal sub-intervals of total length
    /// `duration`, reporting the state at the end of each.
    fn run(
        &self,
        state: BlochState,
        duration: f64,
        intervals: usize,
        opts: &OdeOptions,
        mut on_sample: impl FnMut(usize, BlochState),
    ) -> BlochState {
        if duration == 0.0 {
            return state;
        }
        let dt = duration / intervals as f64;
        let n = self.steps_for(dt, opts);
        let step = rk4_step_matrix(&self.generator, dt / n as f64);
        let mut x = Vector4::new(state.u, state.v, state.w, 1.0);
        let mut out = state;
        for k in 0..intervals {
            for _ in 0..n {
                x = step * x;
            }
            let t = dt * (k + 1) as f64;
            out = BlochState {
                u: x[0],
                v: x[1],
                w: x[2],
                p: state.p * (-self.gamma2 * t).exp(),
            };
            on_sample(k, out);
        }
        out
    }
}

/// Evolves `state` through one segment for a member with detuning `member_detuning`.
pub fn evolve_bloch(
    state: BlochState,
    segment: &PulseSegment,
    member_detuning: f64,
    decay: DecayRates,
    opts: &OdeOptions,
) -> Result<BlochState> {
    check_inputs(&state, segment, member_detuning, &decay, opts)?;
    let integ = SegmentIntegrator::new(
        segment.rabi,
        segment.phase,
        member_detuning + segment.detuning_offset,
        &decay,
    );
    Ok(integ.run(state, segment.duration, 1, opts, |_, _| {}))
}

/// As [`evolve_bloch`], also sampling the trajectory.
pub fn evolve_bloch_traced(
    state: BlochState,
    segment: &PulseSegment,
    member_detuning: f64,
    decay: DecayRates,
    opts: &OdeOptions,
) -> Result<(BlochState, StateTrace)> {
    let seq = PulseSequence {
        segments: vec![*segment],
        label: String::new(),
    };
    evolve_sequence(state, &seq, Member::new(1.0, member_detuning), decay, opts)
}

fn check_inputs(
    state: &BlochState,
    segment: &PulseSegment,
    member_detuning: f64,
    decay: &DecayRates,
    opts: &OdeOptions,
) -> Result<()> {
    state.validate()?;
    segment.validate()?;
    ensure_finite("member detuning", &[member_detuning])?;
    DecayRates::new(decay.gamma1, decay.gamma2)?;
    opts.validate()
}

/// Sample counts per segment for a sequence. Depends only on the nominal
/// sequence, so every ensemble member shares the same time grid.
pub fn sample_plan(seq: &PulseSequence, opts: &OdeOptions) -> Vec<usize> {
    let reference = seq
        .segments
        .iter()
        .map(|s| s.rabi.hypot(s.detuning_offset))
        .fold(0.0, f64::max);
    seq.segments
        .iter()
        .map(|s| {
            if s.duration == 0.0 {
                0
            } else if reference == 0.0 {
                1
            } else {
                (s.duration * reference * opts.samples_per_period / TAU)
                    .ceil()
                    .max(1.0) as usize
            }
        })
        .collect()
}

/// Time grid produced by [`evolve_sequence`] for `seq`.
pub fn sample_times(seq: &PulseSequence, opts: &OdeOptions) -> Vec<f64> {
    let plan = sample_plan(seq, opts);
    let mut times = vec![0.0];
    let mut t0 = 0.0;
    for (s, &n) in seq.segments.iter().zip(&plan) {
        for k in 1..=n {
            times.push(t0 + s.duration * k as f64 / n as f64);
        }
        t0 += s.duration;
    }
    times
}

/// Evolves through a whole sequence, sampling the trajectory on a grid that
/// always contains the segment boundaries.
pub fn evolve_sequence(
    state: BlochState,
    seq: &PulseSequence,
    member: Member,
    decay: DecayRates,
    opts: &OdeOptions,
) -> Result<(BlochState, StateTrace)> {
    run_sequence(state, seq, member, decay, opts, true)
}

/// Final state only.
pub fn propagate_sequence(
    state: BlochState,
    seq: &PulseSequence,
    member: Member,
    decay: DecayRates,
    opts: &OdeOptions,
) -> Result<BlochState> {
    run_sequence(state, seq, member, decay, opts, false).map(|(s, _)| s)
}

fn run_sequence(
    state: BlochState,
    seq: &PulseSequence,
    member: Member,
    decay: DecayRates,
    opts: &OdeOptions,
    record: bool,
) -> Result<(BlochState, StateTrace)> {
    ensure_finite("member", &[member.rabi_scale, member.detuning])?;
    if member.rabi_scale < 0.0 {
        return Err(crate::Error::invalid("member rabi scale must be >= 0"));
    }
    seq.validate()?;
    let plan = if record {
        sample_plan(seq, opts)
    } else {
        vec![1; seq.len()]
    };
    let mut trace = StateTrace::default();
    if record {
        trace.push(0.0, state);
    }
    let mut current = state;
    let mut t0 = 0.0;
    for (segment, &intervals) in seq.segments.iter().zip(&plan) {
        check_inputs(&current, segment, member.detuning, &decay, opts)?;
        let integ = SegmentIntegrator::new(
            segment.rabi * member.rabi_scale,
            segment.phase,
            member.detuning + segment.detuning_offset,
            &decay,
        );
        let dur = segment.duration;
        current = integ.run(current, dur, intervals.max(1), opts, |k, s| {
            if record {
                trace.push(t0 + dur * (k + 1) as f64 / intervals as f64, s);
            }
        });
        t0 += dur;
    }
    Ok((current, trace))
}

/// Pseudospin right-hand side, used to cross-check the step matrix.
#[cfg(test)]
fn bloch_rhs(
    r: &Vector3<f64>,
    rabi: f64,
    phase: f64,
    detuning: f64,
    decay: &DecayRates,
) -> Vector3<f64> {
    let omega = Vector3::new(rabi * phase.cos(), rabi * phase.sin(), detuning);
    let relax = Vector3::new(
        decay.transverse_rate() * r.x,
        decay.transverse_rate() * r.y,
        decay.longitudinal_rate() * (r.z - EQUILIBRIUM_INVERSION),
    );
    omega.cross(r) - relax
}
