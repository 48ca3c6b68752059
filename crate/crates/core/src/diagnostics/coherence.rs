//! Saturation of the echo decay time with the scattering time.

use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions};
use crate::error::{ensure_finite, Error, Result};

/// `tau_d = 1 / (a / tau_s + b)`. Without saturation (`b <= 0`) the
/// asymptote is infinite and serializes as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceFit {
    pub a: f64,
    /// 1/s
    pub b: f64,
    /// Seconds; `1 / b`.
    #[serde(with = "finite_or_null")]
    pub tau_asymptote: f64,
    pub saturated: bool,
    pub residual_rms: f64,
}

impl CoherenceFit {
    pub fn predict(&self, tau_s: f64) -> f64 {
        1.0 / (self.a / tau_s + self.b)
    }
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Fits `(tau_s, tau_d)` pairs in seconds. Linear least squares on
/// `1/tau_d = a / tau_s + b` gives the start; nonlinear least squares on
/// `tau_d` itself refines it.
pub fn fit_coherence_saturation(points: &[(f64, f64)]) -> Result<CoherenceFit> {
    if points.len() < 3 {
        return Err(Error::invalid("coherence fit needs at least 3 points"));
    }
    for &(ts, td) in points {
        ensure_finite("coherence points", &[ts, td])?;
        if ts <= 0.0 || td <= 0.0 {
            return Err(Error::invalid(
                "scattering and decay times must be positive",
            ));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| 1.0 / p.1).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * mx * mx * n {
        return Err(Error::Singular("all scattering times are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a0 = sxy / sxx;
    let b0 = my - a0 * mx;

    let a_scale = a0.abs().max(1e-12);
    let b_scale = my;
    let residual = |p: &[f64]| -> Result<Vec<f64>> {
        let (a, b) = (a_scale * p[0], b_scale * p[1]);
        Ok(points
            .iter()
            .map(|&(ts, td)| (1.0 / (a / ts + b) - td) / td)
            .collect())
    };
    let start = [a0 / a_scale, b0 / b_scale];
    let out = levenberg_marquardt(residual, &start, &LmOptions::default())?;
    let (a, b) = (a_scale * out.params[0], b_scale * out.params[1]);
    // b is zero within the resolution set by the largest 1/tau_d
    let saturated = b > 1e-9 * ys.iter().copied().fold(0.0, f64::max);
    let rms = (points
        .iter()
        .map(|&(ts, td)| (1.0 / (a / ts + b) - td).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(CoherenceFit {
        a,
        b,
        tau_asymptote: if saturated { 1.0 / b } else { f64::INFINITY },
        saturated,
        residual_rms: rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(a: f64, b: f64, taus: &[f64]) -> Vec<(f64, f64)> {
        taus.iter().map(|&ts| (ts, 1.0 / (a / ts + b))).collect()
    }

    #[test]
    fn recovers_exact_parameters() {
        let taus = [0.5e-3, 1e-3, 2e-3, 5e-3, 10e-3, 20e-3, 50e-3];
        let fit = fit_coherence_saturation(&exact(0.5, 94.34, &taus)).unwrap();
        assert!((fit.a / 0.5 - 1.0).abs() < 1e-9);
        assert!((fit.b / 94.34 - 1.0).abs() < 1e-9);
        assert!((fit.tau_asymptote - 10.6e-3).abs() < 0.001e-3);
        assert!(fit.saturated);
    }

    #[test]
    fn proportional_data_is_unsaturated() {
        let fit = fit_coherence_saturation(&exact(0.5, 0.0, &[1e-3, 2e-3, 4e-3, 8e-3])).unwrap();
        assert!(!fit.saturated);
        assert!(fit.tau_asymptote.is_infinite());
        let json = serde_json::to_string(&fit).unwrap();
        assert!(json.contains("\"tau_asymptote\":null"));
        let back: CoherenceFit = serde_json::from_str(&json).unwrap();
        assert!(back.tau_asymptote.is_infinite());
    }

    #[test]
    fn two_regimes() {
        let (a, b) = (0.5, 94.34);
        let fit =
            fit_coherence_saturation(&exact(a, b, &[1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0])).unwrap();
        // a / tau_s >> b: proportional to tau_s.
        let short = 1e-6;
        assert!((fit.predict(short) / (short / a) - 1.0).abs() < 1e-3);
        // a / tau_s << b: saturates at 1 / b.
        assert!((fit.predict(100.0) * b - 1.0).abs() < 1e-3);
    }

    #[test]
    fn singular_designs() {
        assert!(matches!(
            fit_coherence_saturation(&[(1e-3, 1e-3), (1e-3, 2e-3), (1e-3, 3e-3)]),
            Err(Error::Singular(_))
        ));
        assert!(fit_coherence_saturation(&[(1e-3, 1e-3), (2e-3, 2e-3)]).is_err());
    }
}
