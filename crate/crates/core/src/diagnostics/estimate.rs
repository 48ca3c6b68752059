//! Gate fidelity predicted from fitted ensemble parameters.

use crate::ensemble::{ClosedFormAverager, EnsembleSpec, GaussHermite};
use crate::error::{ensure_finite, Error, Result};
use crate::sequences::{shifted_spec, ErrorPoint, PresetErrorReport};
use crate::units::DecayRates;

use super::rabi::FitResult;

fn converged_spec(fit: &FitResult) -> Result<EnsembleSpec> {
    if !fit.converged {
        return Err(Error::NotConverged(
            "fidelity estimate needs a converged fit".into(),
        ));
    }
    fit.spec()
}

fn pop1_at(spec: &EnsembleSpec, decay: DecayRates, t: f64) -> Result<f64> {
    let (nc, nd) = crate::ensemble::recommended_orders(spec, t);
    Ok(ClosedFormAverager::with_orders(&[t], decay, nc, nd)?.population(spec)?[0])
}

/// Ensemble-averaged excited population at `gate_time`, which is the
/// fidelity of a square pulse timed as a pi gate starting from |0>.
pub fn estimate_pi_fidelity(fit: &FitResult, decay: DecayRates, gate_time: f64) -> Result<f64> {
    ensure_finite("gate time", &[gate_time])?;
    if gate_time <= 0.0 {
        return Err(Error::invalid("gate time must be positive"));
    }
    pop1_at(&converged_spec(fit)?, decay, gate_time)
}

/// As [`estimate_pi_fidelity`], additionally averaged over shot-to-shot
/// Gaussian errors in the preset mean Rabi rate (`chi_rms_rel`) and mean
/// detuning (`delta_rms_rel`, relative to `chi0`).
pub fn estimate_pi_fidelity_with_preset_errors(
    fit: &FitResult,
    decay: DecayRates,
    gate_time: f64,
    chi_rms_rel: f64,
    delta_rms_rel: f64,
    outer_order: usize,
) -> Result<PresetErrorReport> {
    let baseline = estimate_pi_fidelity(fit, decay, gate_time)?;
    ensure_finite("preset errors", &[chi_rms_rel, delta_rms_rel])?;
    if chi_rms_rel < 0.0 || delta_rms_rel < 0.0 {
        return Err(Error::invalid("preset error rms values must be >= 0"));
    }
    let spec = converged_spec(fit)?;
    let gh = GaussHermite::new(outer_order)?;
    let mut with = 0.0;
    for (&x, &wx) in gh.nodes.iter().zip(&gh.weights) {
        for (&y, &wy) in gh.nodes.iter().zip(&gh.weights) {
            let s = shifted_spec(&spec, ErrorPoint::new(delta_rms_rel * y, chi_rms_rel * x))?;
            with += wx * wy * pop1_at(&s, decay, gate_time)?;
        }
    }
    Ok(PresetErrorReport {
        baseline,
        with_preset_errors: with,
        reduction: baseline - with,
    })
}
