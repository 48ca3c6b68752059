use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::trace::TimedTrace;

/// Linear polarimetry readout `S = s1 * pop1 + s0` with additive white noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub s1: f64,
    pub s0: f64,
    #[serde(default)]
    pub noise_sigma: f64,
}

impl SignalModel {
    pub fn new(s1: f64, s0: f64, noise_sigma: f64) -> Result<Self> {
        let m = SignalModel {
            s1,
            s0,
            noise_sigma,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn noiseless(s1: f64, s0: f64) -> Self {
        SignalModel {
            s1,
            s0,
            noise_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("signal model", &[self.s1, self.s0, self.noise_sigma])?;
        if self.noise_sigma < 0.0 {
            return Err(Error::invalid("noise_sigma must be >= 0"));
        }
        Ok(())
    }
}

impl Default for SignalModel {
    fn default() -> Self {
        SignalModel::noiseless(1.0, 0.0)
    }
}

/// Maps a population trace to a signal trace. A seed is required when the
/// model has noise.
pub fn synthesize_signal(
    population: &TimedTrace,
    model: &SignalModel,
    seed: Option<u64>,
) -> Result<TimedTrace> {
    population.validate()?;
    model.validate()?;
    let mut values: Vec<f64> = population
        .values
        .iter()
        .map(|p| model.s1 * p + model.s0)
        .collect();
    if model.noise_sigma > 0.0 {
        let seed = seed.ok_or_else(|| Error::invalid("a seed is required for noisy signals"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal =
            Normal::new(0.0, model.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }
    let mut out = TimedTrace::from_parts_unchecked(population.times.clone(), values);
    out.params = population.params.clone();
    Ok(out
        .with_param("s1", model.s1)
        .with_param("s0", model.s0)
        .with_param("noise_sigma", model.noise_sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop() -> TimedTrace {
        TimedTrace::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.25, 0.9, 0.4]).unwrap()
    }

    #[test]
    fn identity_model() {
        let s = synthesize_signal(&pop(), &SignalModel::default(), None).unwrap();
        assert_eq!(s.values, pop().values);
        assert_eq!(s.times, pop().times);
    }

    #[test]
    fn zero_amplitude_is_constant() {
        let s = synthesize_signal(&pop(), &SignalModel::noiseless(0.0, 3.5), None).unwrap();
        assert!(s.values.iter().all(|&v| v == 3.5));
    }

    #[test]
    fn noise_is_seeded() {
        let m = SignalModel::new(2.0, 1.0, 0.1).unwrap();
        let a = synthesize_signal(&pop(), &m, Some(7)).unwrap();
        let b = synthesize_signal(&pop(), &m, Some(7)).unwrap();
        let c = synthesize_signal(&pop(), &m, Some(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(synthesize_signal(&pop(), &m, None).is_err());
    }

    #[test]
    fn noise_has_requested_spread() {
        let n = 20_000;
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let tr = TimedTrace::new(times, vec![0.5; n]).unwrap();
        let s =
            synthesize_signal(&tr, &SignalModel::new(1.0, 0.0, 0.05).unwrap(), Some(1)).unwrap();
        let mean = s.values.iter().sum::<f64>() / n as f64;
        let var = s.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.5).abs() < 4.0 * 0.05 / (n as f64).sqrt());
        assert!((var.sqrt() - 0.05).abs() < 0.002);
    }
}
