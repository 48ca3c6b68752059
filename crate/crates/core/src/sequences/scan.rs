use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fidelity::{ensemble_gate_fidelity, ErrorPoint, FidelityMeasure, GateOptions};
use super::pulses::PulseFamily;
use crate::bloch::Rotation;
use crate::ensemble::{EnsembleSpec, GaussHermite};
use crate::error::{ensure_finite, Error, Result};
use crate::pulse::PulseSequence;
use crate::units::DecayRates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanAxis {
    /// Deliberate mean detuning `Delta0 = f * chi0`.
    Detuning,
    /// Deliberate mean Rabi-rate error `chi0 -> (1 + eps) chi0`.
    Angle,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::Detuning => "detuning",
            ScanAxis::Angle => "angle",
        }
    }

    pub fn point(self, value: f64) -> ErrorPoint {
        match self {
            ScanAxis::Detuning => ErrorPoint::detuning(value),
            ScanAxis::Angle => ErrorPoint::angle(value),
        }
    }
}

impl fmt::Display for ScanAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "detuning" | "f" => Ok(ScanAxis::Detuning),
            "angle" | "rabi" | "eps" => Ok(ScanAxis::Angle),
            other => Err(Error::invalid(format!("unknown scan axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub error_value: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub label: String,
    pub axis: ScanAxis,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["error_value", "fidelity"])?;
        for r in &self.rows {
            w.write_record([r.error_value.to_string(), r.fidelity.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Length of the contiguous error interval around zero on which the
    /// fidelity exceeds `threshold`, interpolating linearly between rows.
    /// Returns 0 when the row nearest zero is already below threshold.
    pub fn window_width(&self, threshold: f64) -> f64 {
        let rows = &self.rows;
        let Some(centre) = (0..rows.len()).min_by(|&a, &b| {
            rows[a]
                .error_value
                .abs()
                .total_cmp(&rows[b].error_value.abs())
        }) else {
            return 0.0;
        };
        if rows[centre].fidelity <= threshold {
            return 0.0;
        }
        let crossing = |i: usize, j: usize| {
            let (a, b) = (rows[i], rows[j]);
            a.error_value
                + (threshold - a.fidelity) / (b.fidelity - a.fidelity)
                    * (b.error_value - a.error_value)
        };
        let hi = (centre + 1..rows.len())
            .find(|&j| rows[j].fidelity <= threshold)
            .map_or(rows[rows.len() - 1].error_value, |j| crossing(j - 1, j));
        let lo = (0..centre)
            .rev()
            .find(|&j| rows[j].fidelity <= threshold)
            .map_or(rows[0].error_value, |j| crossing(j + 1, j));
        hi - lo
    }
}

/// Ensemble fidelity of `seq` with each deliberate error added to the
/// ensemble mean, keeping the intrinsic spreads fixed.
pub fn robustness_scan(
    seq: &PulseSequence,
    target: &Rotation,
    axis: ScanAxis,
    values: &[f64],
    spec: &EnsembleSpec,
    decay: DecayRates,
    measure: FidelityMeasure,
    opts: &GateOptions,
) -> Result<ScanTable> {
    if values.is_empty() {
        return Err(Error::invalid(
            "robustness scan needs at least one error point",
        ));
    }
    ensure_finite("scan points", values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let fids: Vec<f64> = sorted
        .par_iter()
        .map(|&v| {
            ensemble_gate_fidelity(
                seq,
                &shifted_spec(spec, axis.point(v))?,
                decay,
                measure,
                target,
                opts,
            )
        })
        .collect::<Result<_>>()?;
    Ok(ScanTable {
        label: seq.label.clone(),
        axis,
        rows: sorted
            .into_iter()
            .zip(fids)
            .map(|(error_value, fidelity)| ScanRow {
                error_value,
                fidelity,
            })
            .collect(),
    })
}

/// Family-level scan of a `theta` rotation.
pub fn family_scan(
    family: PulseFamily,
    theta: f64,
    axis: ScanAxis,
    values: &[f64],
    spec: &EnsembleSpec,
    decay: DecayRates,
    measure: FidelityMeasure,
    opts: &GateOptions,
) -> Result<ScanTable> {
    let seq = family.build(theta, spec.chi0, 1)?;
    robustness_scan(
        &seq,
        &family.target(theta)?,
        axis,
        values,
        spec,
        decay,
        measure,
        opts,
    )
}

/// Ensemble whose mean carries a deliberate error, relative to the original mean Rabi rate.
pub fn shifted_spec(spec: &EnsembleSpec, error: ErrorPoint) -> Result<EnsembleSpec> {
    let mut s = *spec;
    s.chi0 = spec.chi0 * (1.0 + error.eps);
    s.delta0 = spec.delta0 + error.f * spec.chi0;
    s.validate()?;
    Ok(s)
}

/// Ensemble fidelity with and without shot-to-shot Gaussian errors in the
/// preset mean Rabi rate (`chi_rms_rel`) and mean detuning
/// (`delta_rms_rel`, relative to `chi0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetErrorReport {
    pub baseline: f64,
    pub with_preset_errors: f64,
    pub reduction: f64,
}

pub fn preset_error_fidelity(
    seq: &PulseSequence,
    target: &Rotation,
    spec: &EnsembleSpec,
    decay: DecayRates,
    measure: FidelityMeasure,
    chi_rms_rel: f64,
    delta_rms_rel: f64,
    outer_order: usize,
    opts: &GateOptions,
) -> Result<PresetErrorReport> {
    ensure_finite("preset errors", &[chi_rms_rel, delta_rms_rel])?;
    if chi_rms_rel < 0.0 || delta_rms_rel < 0.0 {
        return Err(Error::invalid("preset error rms values must be >= 0"));
    }
    let baseline = ensemble_gate_fidelity(seq, spec, decay, measure, target, opts)?;
    let gh = GaussHermite::new(outer_order)?;
    let mut with = 0.0;
    for (&x, &wx) in gh.nodes.iter().zip(&gh.weights) {
        for (&y, &wy) in gh.nodes.iter().zip(&gh.weights) {
            let shifted = shifted_spec(spec, ErrorPoint::new(delta_rms_rel * y, chi_rms_rel * x))?;
            with += wx * wy * ensemble_gate_fidelity(seq, &shifted, decay, measure, target, opts)?;
        }
    }
    Ok(PresetErrorReport {
        baseline,
        with_preset_errors: with,
        reduction: baseline - with,
    })
}
