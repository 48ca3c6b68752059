//! Piecewise-constant drive descriptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One constant-drive interval. `rabi` and `detuning_offset` are rad/s,
/// `phase` is radians and kept unreduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub duration: f64,
    pub rabi: f64,
    pub phase: f64,
    #[serde(default)]
    pub detuning_offset: f64,
}

impl PulseSegment {
    pub fn new(duration: f64, rabi: f64, phase: f64) -> Result<Self> {
        let s = PulseSegment {
            duration,
            rabi,
            phase,
            detuning_offset: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_detuning_offset(mut self, offset: f64) -> Self {
        self.detuning_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::ensure_finite(
            "pulse segment",
            &[self.duration, self.rabi, self.phase, self.detuning_offset],
        )?;
        if self.duration < 0.0 {
            return Err(Error::invalid(format!(
                "segment duration must be >= 0, got {}",
                self.duration
            )));
        }
        if self.rabi < 0.0 {
            return Err(Error::invalid(format!(
                "segment rabi must be >= 0, got {}",
                self.rabi
            )));
        }
        Ok(())
    }

    /// Nominal rotation angle `rabi * duration`.
    pub fn nominal_angle(&self) -> f64 {
        self.rabi * self.duration
    }

    /// Phase reduced into `[0, 2pi)`.
    pub fn reduced_phase(&self) -> f64 {
        self.phase.rem_euclid(std::f64::consts::TAU)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSequence {
    pub segments: Vec<PulseSegment>,
    #[serde(default)]
    pub label: String,
}

impl PulseSequence {
    pub fn new(label: impl Into<String>, segments: Vec<PulseSegment>) -> Result<Self> {
        let seq = PulseSequence {
            segments,
            label: label.into(),
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn empty() -> Self {
        PulseSequence::default()
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.segments {
            s.validate()?;
        }
        if !self.total_duration().is_finite() {
            return Err(Error::NonFinite("sequence duration"));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Largest segment Rabi rate; the rate the sequence was designed for.
    pub fn nominal_rabi(&self) -> f64 {
        self.segments.iter().map(|s| s.rabi).fold(0.0, f64::max)
    }

    /// Cumulative segment boundary times, starting at 0.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push(0.0);
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }

    /// The sequence played back `n` times.
    pub fn repeated(&self, n: usize) -> Self {
        let mut segments = Vec::with_capacity(self.segments.len() * n);
        for _ in 0..n {
            segments.extend_from_slice(&self.segments);
        }
        PulseSequence {
            segments,
            label: if n == 1 {
                self.label.clone()
            } else {
                format!("{} x{}", self.label, n)
            },
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PulseSegment::new(-1.0, 1.0, 0.0).is_err());
        assert!(PulseSegment::new(1.0, -1.0, 0.0).is_err());
        assert!(PulseSegment::new(f64::NAN, 1.0, 0.0).is_err());
        assert!(PulseSegment::new(0.0, 0.0, 100.0).is_ok());
    }

    #[test]
    fn durations_and_boundaries() {
        let a = PulseSegment::new(1.0, 2.0, 0.0).unwrap();
        let b = PulseSegment::new(0.5, 3.0, 7.0).unwrap();
        let seq = PulseSequence::new("x", vec![a, b]).unwrap();
        assert_eq!(seq.total_duration(), 1.5);
        assert_eq!(seq.boundaries(), vec![0.0, 1.0, 1.5]);
        assert_eq!(seq.nominal_rabi(), 3.0);
        assert_eq!(seq.repeated(3).len(), 6);
        assert!((b.reduced_phase() - (7.0 - std::f64::consts::TAU)).abs() < 1e-15);
    }
}
