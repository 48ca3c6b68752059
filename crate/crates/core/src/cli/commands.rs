//! The command implementations, independent of argument parsing and files.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::bloch::BlochState;
use crate::diagnostics::{
    estimate_pi_fidelity, estimate_pi_fidelity_with_preset_errors, fit_rabi_trace,
    fit_rotary_trace, FitReport, FitResult, RotaryFit,
};
use crate::dynamics::{leakage_populations, LeakageOptions, LeakageResult};
use crate::ensemble::{
    average_population, average_sequence_population, closed_form_evaluator, recommended_orders,
    synthesize_signal, ClosedFormAverager, Method,
};
use crate::error::{Error, Result};
use crate::sequences::{
    ensemble_gate_fidelity, family_scan, preset_error_fidelity, FidelityMeasure, GateOptions,
    PresetErrorReport, PulseFamily, ScanTable,
};
use crate::trace::TimedTrace;
use crate::units::{angular_to_khz, DecayRates};

/// Samples per Rabi period on the population grid of composite sequences.
const SEQUENCE_SAMPLES_PER_PERIOD: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    /// Ensemble-averaged logical-|1> population.
    pub population: TimedTrace,
    /// Polarimetry signal `s1 * population + s0` plus optional noise.
    pub signal: TimedTrace,
}

fn uniform_grid(duration: f64, chi0: f64, samples_per_period: f64) -> Vec<f64> {
    let periods = duration * chi0 / (2.0 * PI);
    let n = (periods * samples_per_period).ceil().max(1.0) as usize;
    (0..=n).map(|k| duration * k as f64 / n as f64).collect()
}

/// Population and signal traces for the configured sequence. A Rabi trace
/// uses the closed form; other families integrate the Bloch equations for
/// every ensemble member.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    let spec = cfg.spec()?;
    let decay = cfg.decay()?;
    let family = cfg.sequence.family;
    let population = match family {
        PulseFamily::Rabi => {
            let duration = cfg.simulate.duration_ms * 1e-3;
            let times = uniform_grid(duration, cfg.chi0(), cfg.simulate.samples_per_period);
            match cfg.method(recommended_orders(&spec, duration))? {
                Method::Quadrature {
                    chi_order,
                    delta_order,
                } => {
                    let values =
                        ClosedFormAverager::with_orders(&times, decay, chi_order, delta_order)?
                            .population(&spec)?;
                    TimedTrace::new(times, values)?
                }
                mc => {
                    average_population(&times, &spec, mc, closed_form_evaluator(decay, true))?.trace
                }
            }
        }
        _ => {
            let seq = family.build(cfg.sequence.theta, cfg.chi0(), cfg.sequence.repeats)?;
            let q = cfg.quad_order();
            let opts =
                cfg.ode_options(SEQUENCE_SAMPLES_PER_PERIOD.max(cfg.simulate.samples_per_period));
            average_sequence_population(
                BlochState::logical(0)?,
                &seq,
                &spec,
                decay,
                cfg.method((q, q))?,
                &opts,
            )?
            .trace
        }
    };
    let population = population
        .with_param("kind", "population")
        .with_param("family", family)
        .with_param("chi0_khz", cfg.drive.chi0_khz)
        .with_param("delta0_khz", angular_to_khz(spec.delta0))
        .with_param("dchi_rel", cfg.ensemble.dchi_rel)
        .with_param("ddelta_rel", cfg.ensemble.ddelta_rel)
        .with_param("gamma1", decay.gamma1)
        .with_param("gamma2", decay.gamma2);
    let signal = synthesize_signal(&population, &cfg.signal_model()?, cfg.numerics.seed)?
        .with_param("kind", "signal");
    Ok(SimulateOutput { population, signal })
}

/// One robustness table per configured family.
pub fn cmd_scan(cfg: &RunConfig) -> Result<Vec<ScanTable>> {
    let scan = cfg
        .scan
        .as_ref()
        .ok_or_else(|| Error::config("scan", "section required for the scan command"))?;
    let points = scan.points()?;
    let families = scan
        .families
        .clone()
        .unwrap_or_else(|| vec![cfg.sequence.family]);
    let spec = cfg.spec()?;
    let decay = cfg.decay()?;
    let opts = gate_options(cfg);
    families
        .iter()
        .map(|&family| {
            family_scan(
                family,
                cfg.sequence.theta,
                scan.axis,
                &points,
                &spec,
                decay,
                cfg.fidelity.measure,
                &opts,
            )
        })
        .collect()
}

fn gate_options(cfg: &RunConfig) -> GateOptions {
    GateOptions {
        quad_order: cfg.quad_order(),
        ode: cfg.ode_options(SEQUENCE_SAMPLES_PER_PERIOD),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitRequest {
    /// Zero-spread model with homogeneous decay only.
    pub rotary: bool,
    /// Constrains the two decay rates of the rotary model to be equal.
    pub tie_rates: bool,
    /// Homogeneous decay assumed by the ensemble model.
    pub decay: DecayRates,
    pub guess: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitOutput {
    Rabi(FitResult),
    Rotary(RotaryFit),
}

impl FitOutput {
    pub fn converged(&self) -> bool {
        match self {
            FitOutput::Rabi(f) => f.converged,
            FitOutput::Rotary(f) => f.converged,
        }
    }

    pub fn to_json(&self) -> String {
        let text = match self {
            FitOutput::Rabi(f) => serde_json::to_string_pretty(&f.report()),
            FitOutput::Rotary(f) => serde_json::to_string_pretty(&RotaryReport {
                oscillation_decay_time_s: f.oscillation_decay_time(),
                mean_decay_time_s: f.mean_decay_time(),
                fit: f.clone(),
            }),
        };
        text.expect("fit reports serialize")
    }
}

#[derive(Serialize)]
struct RotaryReport {
    #[serde(flatten)]
    fit: RotaryFit,
    oscillation_decay_time_s: f64,
    mean_decay_time_s: f64,
}

pub fn cmd_fit(trace: &TimedTrace, req: &FitRequest) -> Result<FitOutput> {
    if req.rotary {
        fit_rotary_trace(trace, req.tie_rates).map(FitOutput::Rotary)
    } else {
        fit_rabi_trace(trace, req.decay, req.guess.as_ref()).map(FitOutput::Rabi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub label: String,
    pub rabi_khz: f64,
    pub detuning_khz: f64,
    /// Peak population of the channel driven alone.
    pub two_level_bound: f64,
    pub final_population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub qubit_rabi_khz: f64,
    pub gate_time_s: f64,
    pub channels: Vec<ChannelSummary>,
    pub max_combined: f64,
    pub final_combined: f64,
    pub final_pop1: f64,
    pub fidelity_cost: f64,
}

pub fn cmd_leakage(cfg: &RunConfig) -> Result<(LeakageReport, LeakageResult)> {
    let chi0 = cfg.chi0();
    let gate = cfg.leakage.gate_time_us.map_or(PI / chi0, |us| us * 1e-6);
    let channels = cfg.leakage_channels();
    let result = leakage_populations(chi0, gate, &channels, &LeakageOptions::default())?;
    let summaries = channels
        .iter()
        .enumerate()
        .map(|(i, c)| ChannelSummary {
            label: channel_label(&c.label, i),
            rabi_khz: angular_to_khz(c.rabi),
            detuning_khz: angular_to_khz(c.detuning),
            two_level_bound: c.rabi_bound(),
            final_population: result.per_channel[i].last().copied().unwrap_or(0.0),
        })
        .collect();
    let report = LeakageReport {
        qubit_rabi_khz: cfg.drive.chi0_khz,
        gate_time_s: gate,
        channels: summaries,
        max_combined: result.max_combined,
        final_combined: result.final_combined,
        final_pop1: result.final_pop1,
        fidelity_cost: result.fidelity_cost(),
    };
    Ok((report, result))
}

pub(crate) fn channel_label(label: &str, index: usize) -> String {
    if label.is_empty() {
        format!("channel{index}")
    } else {
        label.to_string()
    }
}

/// Fidelity predicted from a fitted Rabi trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEstimate {
    pub gate_time_s: f64,
    pub fidelity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset_errors: Option<PresetErrorReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub family: PulseFamily,
    pub theta: f64,
    pub gate_time_s: f64,
    pub measure: FidelityMeasure,
    pub quad_order: usize,
    pub fidelity: f64,
    pub infidelity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset_errors: Option<PresetErrorReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_estimate: Option<FitEstimate>,
}

/// Ensemble gate fidelity of the configured sequence and, given a fit
/// report, the pi-gate fidelity predicted from the fitted ensemble.
pub fn cmd_fidelity(cfg: &RunConfig, fit: Option<&FitReport>) -> Result<FidelityReport> {
    let family = cfg.sequence.family;
    let theta = cfg.sequence.theta;
    let seq = family.build(theta, cfg.chi0(), cfg.sequence.repeats)?;
    let target = family.target(theta)?;
    let spec = cfg.spec()?;
    let decay = cfg.decay()?;
    let measure = cfg.fidelity.measure;
    let opts = gate_options(cfg);
    let fidelity = ensemble_gate_fidelity(&seq, &spec, decay, measure, &target, &opts)?;
    let preset = &cfg.fidelity.preset_errors;
    let preset_errors = preset
        .as_ref()
        .map(|p| {
            preset_error_fidelity(
                &seq,
                &target,
                &spec,
                decay,
                measure,
                p.chi_rms_rel,
                p.delta_rms_rel,
                p.outer_order,
                &opts,
            )
        })
        .transpose()?;
    let fit_estimate = fit
        .map(|report| -> Result<FitEstimate> {
            let mut fitted = report.to_guess();
            fitted.converged = report.converged;
            let gate_time_s = PI / fitted.chi0;
            Ok(FitEstimate {
                gate_time_s,
                fidelity: estimate_pi_fidelity(&fitted, decay, gate_time_s)?,
                preset_errors: preset
                    .as_ref()
                    .map(|p| {
                        estimate_pi_fidelity_with_preset_errors(
                            &fitted,
                            decay,
                            gate_time_s,
                            p.chi_rms_rel,
                            p.delta_rms_rel,
                            p.outer_order,
                        )
                    })
                    .transpose()?,
            })
        })
        .transpose()?;
    Ok(FidelityReport {
        family,
        theta,
        gate_time_s: seq.total_duration(),
        measure,
        quad_order: opts.quad_order,
        fidelity,
        infidelity: 1.0 - fidelity,
        preset_errors,
        fit_estimate,
    })
}
