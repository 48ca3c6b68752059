use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{rotation_axis, state_from_logical, BlochState, Rotation};
use crate::dynamics::{propagate_sequence, Member, OdeOptions};
use crate::ensemble::{EnsembleSpec, DEFAULT_QUAD_ORDER};
use crate::error::{ensure_finite, Result};
use crate::pulse::PulseSequence;
use crate::units::DecayRates;

/// How a realized gate is compared with its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FidelityMeasure {
    /// `|<psi_target|psi_exp>|^2` starting from a logical state.
    StateOverlap { initial: u8 },
    /// `|Tr(U_target^dag U)| / 2`.
    PropagatorOverlap,
}

impl FidelityMeasure {
    pub const STATE_FROM_ZERO: FidelityMeasure = FidelityMeasure::StateOverlap { initial: 0 };
}

impl Default for FidelityMeasure {
    fn default() -> Self {
        FidelityMeasure::STATE_FROM_ZERO
    }
}

/// Fractional drive errors: detuning `f = Delta / chi0` and Rabi-rate error
/// `eps = (chi - chi0) / chi0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub f: f64,
    pub eps: f64,
}

impl ErrorPoint {
    pub const NONE: ErrorPoint = ErrorPoint { f: 0.0, eps: 0.0 };

    pub fn new(f: f64, eps: f64) -> Self {
        ErrorPoint { f, eps }
    }

    pub fn detuning(f: f64) -> Self {
        ErrorPoint { f, eps: 0.0 }
    }

    pub fn angle(eps: f64) -> Self {
        ErrorPoint { f: 0.0, eps }
    }

    /// Member of a sequence whose nominal Rabi rate is `chi0`.
    pub fn member(&self, chi0: f64) -> Member {
        Member::new(1.0 + self.eps, self.f * chi0)
    }
}

/// SU(2) element stored as a unit quaternion `(cos(a/2), sin(a/2) n)`. Unlike
/// [`Rotation`] it keeps the spinor sign, which the propagator overlap needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2(Quaternion<f64>);

impl Su2 {
    pub fn identity() -> Self {
        Su2(Quaternion::identity())
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        Su2(Quaternion::new(c, s * axis.x, s * axis.y, s * axis.z))
    }

    pub fn from_rotation(r: &Rotation) -> Self {
        Self::from_axis_angle(&r.axis(), r.angle())
    }

    /// Coherent propagator of `seq` for one ensemble member.
    pub fn of_sequence(seq: &PulseSequence, member: Member) -> Result<Self> {
        let mut q = Su2::identity();
        for s in &seq.segments {
            let rabi = member.rabi_scale * s.rabi;
            let detuning = member.detuning + s.detuning_offset;
            let omega = rabi.hypot(detuning);
            if omega == 0.0 || s.duration == 0.0 {
                continue;
            }
            let axis = rotation_axis(rabi, detuning, s.phase)?;
            q = q.then(&Su2::from_axis_angle(&axis, omega * s.duration));
        }
        Ok(q)
    }

    /// Applies `self` and then `next`.
    pub fn then(&self, next: &Su2) -> Su2 {
        Su2(next.0 * self.0)
    }

    pub fn quaternion(&self) -> Quaternion<f64> {
        self.0
    }

    pub fn rotate(&self, r: &Vector3<f64>) -> Vector3<f64> {
        UnitQuaternion::new_normalize(self.0) * r
    }

    /// `|Tr(A^dag B)| / 2`.
    pub fn overlap(&self, other: &Su2) -> f64 {
        self.0.dot(&other.0).abs().min(1.0)
    }

    /// `1 - overlap`, without cancellation for nearly equal elements.
    pub fn infidelity(&self, other: &Su2) -> f64 {
        let e = self.0.conjugate() * other.0;
        let v2 = e.imag().norm_squared();
        (v2 / (1.0 + e.w.abs())).clamp(0.0, 1.0)
    }
}

/// Pure target state reached by applying `target` to logical `initial`.
fn target_vector(target: &Rotation, initial: u8) -> Result<Vector3<f64>> {
    Ok(target.apply(&state_from_logical(initial)?.vector()))
}

/// Infidelity of `seq` under one member's drive errors. Coherent composition
/// is used without decay; with decay the Bloch equations are integrated.
pub fn member_infidelity(
    seq: &PulseSequence,
    member: Member,
    measure: FidelityMeasure,
    target: &Rotation,
    decay: Option<DecayRates>,
    opts: &OdeOptions,
) -> Result<f64> {
    ensure_finite("member", &[member.rabi_scale, member.detuning])?;
    let decay = decay.filter(|d| !d.is_zero());
    match (measure, decay) {
        (FidelityMeasure::PropagatorOverlap, Some(_)) => Err(crate::Error::PropagatorWithDecay),
        (FidelityMeasure::PropagatorOverlap, None) => {
            let actual = Su2::of_sequence(seq, member)?;
            Ok(Su2::from_rotation(target).infidelity(&actual))
        }
        (FidelityMeasure::StateOverlap { initial }, None) => {
            let start = state_from_logical(initial)?.vector();
            let r = Su2::of_sequence(seq, member)?.rotate(&start);
            let rt = target_vector(target, initial)?;
            Ok(((rt - r).norm_squared() / 4.0).clamp(0.0, 1.0))
        }
        (FidelityMeasure::StateOverlap { initial }, Some(decay)) => {
            let end = propagate_sequence(state_from_logical(initial)?, seq, member, decay, opts)?;
            Ok((1.0 - state_overlap(&end, &target_vector(target, initial)?)).clamp(0.0, 1.0))
        }
    }
}

/// `<psi_t| rho |psi_t>` for a pure target with Bloch vector `rt`.
fn state_overlap(state: &BlochState, rt: &Vector3<f64>) -> f64 {
    state.p * (1.0 + rt.dot(&state.vector())) / 2.0
}

/// Infidelity `1 - F` of `seq` at the error point.
pub fn sequence_infidelity(
    seq: &PulseSequence,
    error: ErrorPoint,
    measure: FidelityMeasure,
    target: &Rotation,
    decay: Option<DecayRates>,
) -> Result<f64> {
    ensure_finite("error point", &[error.f, error.eps])?;
    seq.validate()?;
    member_infidelity(
        seq,
        error.member(seq.nominal_rabi()),
        measure,
        target,
        decay,
        &OdeOptions::default(),
    )
}

pub fn sequence_fidelity(
    seq: &PulseSequence,
    error: ErrorPoint,
    measure: FidelityMeasure,
    target: &Rotation,
    decay: Option<DecayRates>,
) -> Result<f64> {
    sequence_infidelity(seq, error, measure, target, decay).map(|x| 1.0 - x)
}

/// Numerical settings for ensemble-averaged gate fidelities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOptions {
    pub quad_order: usize,
    pub ode: OdeOptions,
}

impl Default for GateOptions {
    fn default() -> Self {
        GateOptions {
            quad_order: DEFAULT_QUAD_ORDER,
            ode: OdeOptions::default(),
        }
    }
}

/// Gaussian average of the gate fidelity over the ensemble. The sequence is
/// played at its own nominal Rabi rate; `spec` gives the actual distribution
/// of Rabi rates and detunings.
pub fn ensemble_gate_fidelity(
    seq: &PulseSequence,
    spec: &EnsembleSpec,
    decay: DecayRates,
    measure: FidelityMeasure,
    target: &Rotation,
    opts: &GateOptions,
) -> Result<f64> {
    seq.validate()?;
    let (nodes, _) = spec.nodes(opts.quad_order)?;
    let nominal = seq.nominal_rabi();
    let losses: Vec<f64> = nodes
        .par_iter()
        .map(|n| {
            let member = Member::from_absolute(n.chi, n.delta, nominal);
            member_infidelity(seq, member, measure, target, Some(decay), &opts.ode).map_err(|e| {
                crate::Error::Node {
                    chi: n.chi,
                    delta: n.delta,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;
    let mean_loss: f64 = nodes.iter().zip(&losses).map(|(n, l)| n.weight * l).sum();
    Ok((1.0 - mean_loss).clamp(0.0, 1.0))
}
