//! Off-resonant microwave coupling out of the qubit space.
//!
//! Rotating-frame Schrödinger equation for a star of levels around logical
//! |0>: the qubit transition |0> <-> |1> is driven resonantly at `qubit_rabi`,
//! and each leakage level `i` is coupled to |0> at its own Rabi rate and sits
//! at its own detuning. No dissipation.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::trace::TimedTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageChannel {
    /// rad/s
    pub rabi: f64,
    /// rad/s
    pub detuning: f64,
    #[serde(default)]
    pub label: String,
}

impl LeakageChannel {
    pub fn new(rabi: f64, detuning: f64, label: impl Into<String>) -> Self {
        LeakageChannel {
            rabi,
            detuning,
            label: label.into(),
        }
    }

    /// Peak population of a lone off-resonant two-level transition.
    pub fn rabi_bound(&self) -> f64 {
        let r2 = self.rabi * self.rabi;
        r2 / (r2 + self.detuning * self.detuning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageOptions {
    pub steps_per_period: f64,
    pub samples_per_period: f64,
}

impl Default for LeakageOptions {
    fn default() -> Self {
        LeakageOptions {
            steps_per_period: 2000.0,
            samples_per_period: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakageResult {
    /// Combined population in all leakage levels.
    pub combined: TimedTrace,
    /// Population of each channel on the same grid.
    pub per_channel: Vec<Vec<f64>>,
    pub max_combined: f64,
    pub final_combined: f64,
    /// Population left in logical |1> at the end of the gate.
    pub final_pop1: f64,
}

impl LeakageResult {
    /// Upper estimate of the gate-fidelity reduction caused by leakage.
    pub fn fidelity_cost(&self) -> f64 {
        self.max_combined
    }
}

/// Populations leaked during one gate of length `gate_duration` (seconds).
pub fn leakage_populations(
    qubit_rabi: f64,
    gate_duration: f64,
    channels: &[LeakageChannel],
    opts: &LeakageOptions,
) -> Result<LeakageResult> {
    ensure_finite("leakage drive", &[qubit_rabi, gate_duration])?;
    for c in channels {
        ensure_finite("leakage channel", &[c.rabi, c.detuning])?;
        if c.rabi < 0.0 {
            return Err(Error::invalid(format!(
                "channel `{}` has negative rabi",
                c.label
            )));
        }
    }
    if gate_duration <= 0.0 {
        return Err(Error::invalid("gate duration must be positive"));
    }
    if qubit_rabi < 0.0 {
        return Err(Error::invalid("qubit rabi must be >= 0"));
    }

    let dim = 2 + channels.len();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let couple = |h: &mut DMatrix<Complex64>, i: usize, j: usize, rabi: f64| {
        h[(i, j)] = Complex64::new(rabi / 2.0, 0.0);
        h[(j, i)] = Complex64::new(rabi / 2.0, 0.0);
    };
    couple(&mut h, 0, 1, qubit_rabi);
    for (k, c) in channels.iter().enumerate() {
        couple(&mut h, 0, 2 + k, c.rabi);
        h[(2 + k, 2 + k)] = Complex64::new(-c.detuning, 0.0);
    }

    // Gershgorin bound on the fastest frequency in the problem.
    let fastest = (0..dim)
        .map(|i| (0..dim).map(|j| h[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0 / gate_duration);
    let intervals = (gate_duration * fastest * opts.samples_per_period / TAU)
        .ceil()
        .max(1.0) as usize;
    let dt = gate_duration / intervals as f64;
    let steps = (dt * fastest * opts.steps_per_period / TAU).ceil().max(1.0) as usize;
    let step = rk4_step(&h, dt / steps as f64);

    let mut psi = DVector::<Complex64>::zeros(dim);
    psi[0] = Complex64::new(1.0, 0.0);

    let mut times = Vec::with_capacity(intervals + 1);
    let mut combined = Vec::with_capacity(intervals + 1);
    let mut per_channel = vec![Vec::with_capacity(intervals + 1); channels.len()];
    let mut record = |t: f64, psi: &DVector<Complex64>| {
        times.push(t);
        let mut total = 0.0;
        for (k, series) in per_channel.iter_mut().enumerate() {
            let p = psi[2 + k].norm_sqr();
            series.push(p);
            total += p;
        }
        combined.push(total);
    };
    record(0.0, &psi);
    for k in 1..=intervals {
        for _ in 0..steps {
            psi = &step * psi;
        }
        record(dt * k as f64, &psi);
    }
    let final_pop1 = psi[1].norm_sqr();
    let max_combined = combined.iter().copied().fold(0.0, f64::max);
    let final_combined = *combined.last().unwrap_or(&0.0);
    Ok(LeakageResult {
        combined: TimedTrace::from_parts_unchecked(times, combined),
        per_channel,
        max_combined,
        final_combined,
        final_pop1,
    })
}

fn rk4_step(h: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
    let dim = h.nrows();
    let a = h * Complex64::new(0.0, -dt);
    let a2 = &a * &a;
    let a3 = &a2 * &a;
    let a4 = &a3 * &a;
    DMatrix::identity(dim, dim)
        + a
        + a2 / Complex64::from(2.0)
        + a3 / Complex64::from(6.0)
        + a4 / Complex64::from(24.0)
}
