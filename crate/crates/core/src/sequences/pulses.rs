use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bloch::{ideal_rotation, Rotation};
use crate::error::{ensure_finite, Error, Result};
use crate::pulse::{PulseSegment, PulseSequence};
use nalgebra::Vector3;

/// SCROFULOUS pi-pulse phases in degrees.
pub const SCROFULOUS_PI_PHASES_DEG: [f64; 3] = [60.0, 300.0, 60.0];

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid(format!(
            "{name} must be positive and finite, got {x}"
        )));
    }
    Ok(())
}

fn check_angle_range(theta: f64) -> Result<()> {
    check_positive("theta", theta)?;
    if theta > PI * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "theta must lie in (0, pi], got {theta}"
        )));
    }
    Ok(())
}

/// Segment rotating by `angle` at Rabi rate `chi0`.
fn turn(angle: f64, phase: f64, chi0: f64) -> Result<PulseSegment> {
    PulseSegment::new(angle / chi0, chi0, phase)
}

/// Single square pulse of area `theta`.
pub fn plain_pulse(theta: f64, phase: f64, chi0: f64) -> Result<PulseSequence> {
    check_positive("theta", theta)?;
    check_positive("chi0", chi0)?;
    ensure_finite("phase", &[phase])?;
    PulseSequence::new("plain", vec![turn(theta, phase, chi0)?])
}

/// `repeats` pairs of `theta` rotations with phases `phase` and `phase + pi`.
pub fn rotary_echo(theta: f64, phase: f64, repeats: usize, chi0: f64) -> Result<PulseSequence> {
    check_positive("theta", theta)?;
    check_positive("chi0", chi0)?;
    ensure_finite("phase", &[phase])?;
    if repeats == 0 {
        return Err(Error::invalid("rotary echo needs at least one repeat"));
    }
    let pair = [turn(theta, phase, chi0)?, turn(theta, phase + PI, chi0)?];
    let segments = pair.iter().copied().cycle().take(2 * repeats).collect();
    PulseSequence::new("rotary", segments)
}

/// CORPSE rotation by `theta` about the 1-axis, compensating detuning errors.
pub fn corpse(theta: f64, chi0: f64) -> Result<PulseSequence> {
    check_angle_range(theta)?;
    check_positive("chi0", chi0)?;
    let k = ((theta / 2.0).sin() / 2.0).asin();
    let angles = [TAU + theta / 2.0 - k, TAU - 2.0 * k, theta / 2.0 - k];
    let phases = [0.0, PI, 0.0];
    let segments = angles
        .iter()
        .zip(phases)
        .map(|(&a, p)| turn(a, p, chi0))
        .collect::<Result<_>>()?;
    PulseSequence::new("corpse", segments)
}

/// SCROFULOUS pi rotation about the 1-axis, compensating Rabi-rate errors.
pub fn scrofulous_pi(chi0: f64) -> Result<PulseSequence> {
    check_positive("chi0", chi0)?;
    let segments = SCROFULOUS_PI_PHASES_DEG
        .iter()
        .map(|d| turn(PI, d.to_radians(), chi0))
        .collect::<Result<_>>()?;
    PulseSequence::new("scrofulous", segments)
}

/// Where the BB1 correction triple sits relative to the target pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bb1Order {
    #[default]
    CorrectionFirst,
    CorrectionLast,
}

/// BB1 correction phase for a target angle `theta`.
pub fn bb1_phase(theta: f64) -> f64 {
    (-theta / (4.0 * PI)).acos()
}

/// BB1 rotation by `theta` about the 1-axis with the correction triple first.
pub fn bb1(theta: f64, chi0: f64) -> Result<PulseSequence> {
    bb1_ordered(theta, chi0, Bb1Order::default())
}

pub fn bb1_ordered(theta: f64, chi0: f64, order: Bb1Order) -> Result<PulseSequence> {
    check_angle_range(theta)?;
    check_positive("chi0", chi0)?;
    let phi = bb1_phase(theta);
    let correction = [
        turn(PI, phi, chi0)?,
        turn(TAU, 3.0 * phi, chi0)?,
        turn(PI, phi, chi0)?,
    ];
    let target = turn(theta, 0.0, chi0)?;
    let segments = match order {
        Bb1Order::CorrectionFirst => correction.into_iter().chain([target]).collect(),
        Bb1Order::CorrectionLast => [target].into_iter().chain(correction).collect(),
    };
    PulseSequence::new("bb1", segments)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseFamily {
    /// Plain square pulse; also the sequence behind a Rabi trace.
    #[serde(alias = "plain")]
    Rabi,
    Rotary,
    Corpse,
    Scrofulous,
    Bb1,
}

impl PulseFamily {
    pub const ALL: [PulseFamily; 5] = [
        PulseFamily::Rabi,
        PulseFamily::Rotary,
        PulseFamily::Corpse,
        PulseFamily::Scrofulous,
        PulseFamily::Bb1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PulseFamily::Rabi => "rabi",
            PulseFamily::Rotary => "rotary",
            PulseFamily::Corpse => "corpse",
            PulseFamily::Scrofulous => "scrofulous",
            PulseFamily::Bb1 => "bb1",
        }
    }

    /// Builds the family's sequence. `repeats` only matters for rotary echoes.
    pub fn build(self, theta: f64, chi0: f64, repeats: usize) -> Result<PulseSequence> {
        match self {
            PulseFamily::Rabi => plain_pulse(theta, 0.0, chi0),
            PulseFamily::Rotary => rotary_echo(theta, 0.0, repeats, chi0),
            PulseFamily::Corpse => corpse(theta, chi0),
            PulseFamily::Scrofulous => {
                if (theta - PI).abs() > 1e-12 {
                    return Err(Error::invalid("SCROFULOUS is only provided for theta = pi"));
                }
                scrofulous_pi(chi0)
            }
            PulseFamily::Bb1 => bb1(theta, chi0),
        }
    }

    /// Rotation the family implements at zero error.
    pub fn target(self, theta: f64) -> Result<Rotation> {
        match self {
            PulseFamily::Rotary => Ok(Rotation::identity()),
            _ => ideal_rotation(Vector3::x(), theta),
        }
    }
}

impl fmt::Display for PulseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PulseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rabi" | "plain" => Ok(PulseFamily::Rabi),
            "rotary" | "rotary_echo" => Ok(PulseFamily::Rotary),
            "corpse" => Ok(PulseFamily::Corpse),
            "scrofulous" => Ok(PulseFamily::Scrofulous),
            "bb1" => Ok(PulseFamily::Bb1),
            other => Err(Error::invalid(format!("unknown pulse family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::khz_to_angular;

    fn angles(seq: &PulseSequence) -> Vec<f64> {
        seq.segments.iter().map(|s| s.nominal_angle()).collect()
    }

    #[test]
    fn plain_pulse_duration() {
        let chi0 = khz_to_angular(27.78);
        let seq = plain_pulse(PI, 0.0, chi0).unwrap();
        assert_eq!(seq.len(), 1);
        assert!((seq.total_duration() - 18.0e-6).abs() < 0.01e-6);
        assert!(plain_pulse(0.0, 0.0, chi0).is_err());
        assert!(plain_pulse(PI, 0.0, -1.0).is_err());
    }

    #[test]
    fn rotary_layout() {
        let seq = rotary_echo(TAU, 0.0, 1, 2.0).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.segments[0].phase, 0.0);
        assert_eq!(seq.segments[1].phase, PI);
        assert!((seq.segments[1].duration - PI).abs() < 1e-15);
        assert_eq!(rotary_echo(PI, 0.3, 4, 1.0).unwrap().len(), 8);
        assert!(rotary_echo(PI, 0.0, 0, 1.0).is_err());
    }

    #[test]
    fn corpse_pi_angles() {
        let seq = corpse(PI, 1.0).unwrap();
        let a = angles(&seq);
        for (x, y) in a.iter().zip([7.0 * PI / 3.0, 5.0 * PI / 3.0, PI / 3.0]) {
            assert!((x - y).abs() < 1e-14);
        }
        let phases: Vec<f64> = seq.segments.iter().map(|s| s.phase).collect();
        assert_eq!(phases, vec![0.0, PI, 0.0]);
        assert!(corpse(1.1 * PI, 1.0).is_err());
        assert!(corpse(0.0, 1.0).is_err());
    }

    #[test]
    fn bb1_layout() {
        let seq = bb1(PI, 1.0).unwrap();
        assert_eq!(seq.len(), 4);
        let phi = (-0.25f64).acos();
        assert!((seq.segments[0].phase - phi).abs() < 1e-15);
        assert!((seq.segments[1].phase - 3.0 * phi).abs() < 1e-15);
        assert_eq!(seq.segments[3].phase, 0.0);
        let last = bb1_ordered(PI / 2.0, 1.0, Bb1Order::CorrectionLast).unwrap();
        assert!((last.segments[0].nominal_angle() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn family_names_round_trip() {
        for fam in PulseFamily::ALL {
            assert_eq!(fam.name().parse::<PulseFamily>().unwrap(), fam);
            let json = serde_json::to_string(&fam).unwrap();
            assert_eq!(serde_json::from_str::<PulseFamily>(&json).unwrap(), fam);
        }
        assert_eq!("plain".parse::<PulseFamily>().unwrap(), PulseFamily::Rabi);
        assert!("grape".parse::<PulseFamily>().is_err());
    }
}
