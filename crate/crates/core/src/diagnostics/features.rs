//! Model-free features of an oscillating trace used to seed the fits.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::trace::TimedTrace;

/// Rejects traces that carry no oscillation to fit.
pub(crate) fn check_fittable(trace: &TimedTrace) -> Result<()> {
    trace.validate()?;
    if trace.len() < 8 {
        return Err(Error::DegenerateTrace(format!(
            "only {} samples",
            trace.len()
        )));
    }
    let (lo, hi) = min_max(&trace.values);
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateTrace("trace is constant".into()));
    }
    Ok(())
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Linear interpolation of the trace onto `n` evenly spaced times.
fn resample_uniform(trace: &TimedTrace, n: usize) -> (Vec<f64>, f64) {
    let t0 = trace.times[0];
    let dt = trace.duration() / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        while j + 2 < trace.len() && trace.times[j + 1] < t {
            j += 1;
        }
        let (ta, tb) = (trace.times[j], trace.times[j + 1]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        out.push(trace.values[j] * (1.0 - w) + trace.values[j + 1] * w);
    }
    (out, dt)
}

/// Angular frequency of the dominant spectral peak, ignoring the slow
/// drift below three cycles per trace.
pub(crate) fn dominant_angular_frequency(trace: &TimedTrace) -> Result<f64> {
    let n = trace.len();
    let (samples, dt) = resample_uniform(trace, n);
    let mean = samples.iter().sum::<f64>() / n as f64;
    let padded = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let hann = 0.5 - 0.5 * (TAU * k as f64 / (n - 1) as f64).cos();
            Complex::new((v - mean) * hann, 0.0)
        })
        .collect();
    buf.resize(padded, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let mag: Vec<f64> = buf[..padded / 2].iter().map(|c| c.norm()).collect();
    let first = (3.0 * padded as f64 / n as f64).ceil() as usize;
    if first + 2 >= mag.len() {
        return Err(Error::DegenerateTrace(
            "too few samples to locate a spectral peak".into(),
        ));
    }
    let k = (first..mag.len() - 1)
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .expect("nonempty range");
    if mag[k] == 0.0 {
        return Err(Error::DegenerateTrace("no oscillation in trace".into()));
    }
    // Gaussian (log-parabolic) interpolation of the peak.
    let (a, b, c) = (
        mag[k - 1].max(1e-300).ln(),
        mag[k].ln(),
        mag[k + 1].max(1e-300).ln(),
    );
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok(TAU * (k as f64 + shift) / (padded as f64 * dt))
}

/// Half peak-to-peak amplitude in consecutive windows of length `period`,
/// as (window centre, amplitude).
pub(crate) fn envelope(trace: &TimedTrace, period: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = 0;
    let t0 = trace.times[0];
    while start < trace.len() {
        let w0 = t0 + period * out.len() as f64;
        let end = trace.times.partition_point(|&t| t < w0 + period);
        if end <= start + 1 {
            break;
        }
        let (lo, hi) = min_max(&trace.values[start..end]);
        out.push((w0 + 0.5 * period, 0.5 * (hi - lo)));
        start = end;
    }
    out
}

/// Least-squares `(s1, s0)` for `y ~ s1 * pop + s0`.
pub(crate) fn linear_scale(pop: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = pop.len() as f64;
    let mp = pop.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = pop.iter().map(|p| (p - mp).powi(2)).sum();
    let sxy: f64 = pop.iter().zip(y).map(|(p, v)| (p - mp) * (v - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateTrace(
            "model population is constant".into(),
        ));
    }
    let s1 = sxy / sxx;
    Ok((s1, my - s1 * mp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(omega: f64, n: usize, t_max: f64) -> TimedTrace {
        let times: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        let values = times
            .iter()
            .map(|t| 0.3 + 0.5 * (omega * t).cos() * (-t / 0.02).exp())
            .collect();
        TimedTrace::new(times, values).unwrap()
    }

    #[test]
    fn finds_peak_frequency() {
        let omega = TAU * 27.78e3;
        let tr = cosine(omega, 600, 2e-3);
        let est = dominant_angular_frequency(&tr).unwrap();
        assert!((est / omega - 1.0).abs() < 2e-3, "{est} vs {omega}");
    }

    #[test]
    fn envelope_tracks_decay() {
        let tr = cosine(TAU * 1000.0, 4000, 0.04);
        let env = envelope(&tr, 1e-3);
        assert!(env.len() >= 39);
        let (t, a) = env[20];
        assert!((a - 0.5 * (-t / 0.02).exp()).abs() < 0.01);
    }

    #[test]
    fn constant_trace_is_degenerate() {
        let tr = TimedTrace::new((0..50).map(|i| i as f64).collect(), vec![1.0; 50]).unwrap();
        assert!(matches!(
            check_fittable(&tr),
            Err(Error::DegenerateTrace(_))
        ));
    }

    #[test]
    fn linear_scale_is_exact() {
        let pop = [0.0, 0.2, 0.9, 0.4];
        let y: Vec<f64> = pop.iter().map(|p| 3.0 * p - 1.0).collect();
        let (s1, s0) = linear_scale(&pop, &y).unwrap();
        assert!((s1 - 3.0).abs() < 1e-14 && (s0 + 1.0).abs() < 1e-14);
    }
}
