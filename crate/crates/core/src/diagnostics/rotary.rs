//! Homogeneous-decay fit of rotary-echo traces.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::features::{check_fittable, dominant_angular_frequency, envelope, linear_scale};
use super::lm::{covariance, levenberg_marquardt, LmOptions};
use crate::error::{Error, Result};
use crate::trace::TimedTrace;

/// Rates in 1/s, Rabi rate in rad/s. `covariance` is ordered
/// `(chi0, gamma1, gamma2, s1, s0)`; with tied rates the gamma rows are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotaryFit {
    pub chi0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub s1: f64,
    pub s0: f64,
    pub tied: bool,
    pub residual_rms: f64,
    pub covariance: [[f64; 5]; 5],
    pub converged: bool,
    pub iterations: usize,
}

impl RotaryFit {
    /// Decay time of the oscillating part, `1 / (gamma1 + gamma2)`.
    pub fn oscillation_decay_time(&self) -> f64 {
        1.0 / (self.gamma1 + self.gamma2)
    }

    /// Decay time of the non-oscillating part, `1 / gamma2`.
    pub fn mean_decay_time(&self) -> f64 {
        1.0 / self.gamma2
    }
}

/// Population of a sharp, resonant member with homogeneous decay.
pub fn homogeneous_population(t: f64, chi0: f64, gamma1: f64, gamma2: f64) -> f64 {
    let loss = (-gamma2 * t).exp();
    0.5 * loss - 0.5 * (chi0 * t).cos() * loss * (-gamma1 * t).exp()
}

/// Fits a rotary-echo trace as dephasing-free Rabi oscillation. With
/// `tie_rates` the two decay rates are constrained equal.
pub fn fit_rotary_trace(trace: &TimedTrace, tie_rates: bool) -> Result<RotaryFit> {
    fit_rotary_trace_with(trace, tie_rates, &LmOptions::default())
}

pub fn fit_rotary_trace_with(
    trace: &TimedTrace,
    tie_rates: bool,
    lm: &LmOptions,
) -> Result<RotaryFit> {
    check_fittable(trace)?;
    let chi_guess = dominant_angular_frequency(trace)?;
    let periods = trace.duration() * chi_guess / TAU;
    if periods < 10.0 {
        return Err(Error::invalid(format!(
            "trace spans {periods:.1} Rabi periods; at least 10 are needed"
        )));
    }
    // log-linear fit of the envelope gives gamma1 + gamma2
    let env: Vec<(f64, f64)> = envelope(trace, TAU / chi_guess)
        .into_iter()
        .filter(|e| e.1 > 0.0)
        .collect();
    let total = if env.len() >= 3 {
        let n = env.len() as f64;
        let mt = env.iter().map(|e| e.0).sum::<f64>() / n;
        let ml = env.iter().map(|e| e.1.ln()).sum::<f64>() / n;
        let stt: f64 = env.iter().map(|e| (e.0 - mt).powi(2)).sum();
        let stl: f64 = env.iter().map(|e| (e.0 - mt) * (e.1.ln() - ml)).sum();
        -stl / stt
    } else {
        0.0
    };
    let rate_scale = 1.0 / trace.duration();
    let gamma = (0.5 * total).max(0.05 * rate_scale);
    let pop: Vec<f64> = trace
        .times
        .iter()
        .map(|&t| homogeneous_population(t, chi_guess, gamma, gamma))
        .collect();
    let (s1, s0) = linear_scale(&pop, &trace.values)?;
    let signal = s1.abs().max(1e-300);

    // Internal vector: chi / chi_guess, sqrt(rate / rate_scale) per free rate, s1, s0.
    let rates = |p: &[f64]| -> (f64, f64) {
        let g1 = rate_scale * p[1] * p[1];
        let g2 = if tie_rates {
            g1
        } else {
            rate_scale * p[2] * p[2]
        };
        (g1, g2)
    };
    let k = if tie_rates { 2 } else { 3 };
    let residual = |p: &[f64]| -> Result<Vec<f64>> {
        let chi = chi_guess * p[0];
        let (g1, g2) = rates(p);
        let (a, b) = (signal * p[k], signal * p[k + 1]);
        Ok(trace
            .times
            .iter()
            .zip(&trace.values)
            .map(|(&t, y)| (a * homogeneous_population(t, chi, g1, g2) + b - y) / signal)
            .collect())
    };
    let q = (gamma / rate_scale).sqrt();
    let mut x0 = vec![1.0, q];
    if !tie_rates {
        x0.push(q);
    }
    x0.extend([s1 / signal, s0 / signal]);
    let out = levenberg_marquardt(residual, &x0, lm)?;
    let p = &out.params;
    let (g1, g2) = rates(p);
    let c = covariance(&out);
    // d(chi0, g1, g2, s1, s0) / d(internal)
    let mut d = vec![[0.0; 5]; p.len()];
    d[0][0] = chi_guess;
    d[1][1] = 2.0 * rate_scale * p[1];
    if tie_rates {
        d[1][2] = d[1][1];
    } else {
        d[2][2] = 2.0 * rate_scale * p[2];
    }
    d[k][3] = signal;
    d[k + 1][4] = signal;
    let mut cov = [[0.0; 5]; 5];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            for a in 0..p.len() {
                for b in 0..p.len() {
                    *v += d[a][i] * c[(a, b)] * d[b][j];
                }
            }
        }
    }
    Ok(RotaryFit {
        chi0: chi_guess * p[0],
        gamma1: g1,
        gamma2: g2,
        s1: signal * p[k],
        s0: signal * p[k + 1],
        tied: tie_rates,
        residual_rms: signal * (out.objective() / trace.len() as f64).sqrt(),
        covariance: cov,
        converged: out.converged(),
        iterations: out.iterations,
    })
}
