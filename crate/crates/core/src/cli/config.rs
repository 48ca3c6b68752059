//! JSON run configuration shared by every command.
//!
//! ```json
//! {
//!   "drive": { "chi0_khz": 27.78, "delta0_khz": 0.0 },
//!   "ensemble": { "dchi_rel": 0.003, "ddelta_rel": 0.073 },
//!   "decay": { "tau_d_ms": 5.5 },
//!   "signal": { "s1": 1.0, "s0": 0.0, "noise_sigma": 0.02 },
//!   "numerics": { "seed": 7 },
//!   "sequence": { "family": "rabi" },
//!   "simulate": { "duration_ms": 3.0 }
//! }
//! ```
//!
//! Frequencies are cyclic kHz, rates are 1/s, angles are radians. Unknown
//! keys are rejected everywhere.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{LeakageChannel, OdeOptions};
use crate::ensemble::{EnsembleSpec, Method, SignalModel, DEFAULT_QUAD_ORDER, MAX_QUAD_ORDER};
use crate::error::{Error, Result};
use crate::sequences::{shifted_spec, ErrorPoint, FidelityMeasure, PulseFamily, ScanAxis};
use crate::units::{khz_to_angular, DecayRates};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub drive: DriveConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub signal: SignalConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub leakage: LeakageConfig,
    #[serde(default)]
    pub fidelity: FidelityConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub chi0_khz: f64,
    #[serde(default)]
    pub delta0_khz: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default)]
    pub dchi_rel: f64,
    #[serde(default)]
    pub ddelta_rel: f64,
    #[serde(default)]
    pub correlation: f64,
}

/// Either `tau_d_ms` alone or the explicit rate pair. Empty means no decay.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_d_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(default = "one")]
    pub s1: f64,
    #[serde(default)]
    pub s0: f64,
    #[serde(default)]
    pub noise_sigma: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            s1: 1.0,
            s0: 0.0,
            noise_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Gauss-Hermite order per axis. Closed-form traces pick converged
    /// orders from the trace length when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    /// Switches ensemble traces to Monte Carlo with this many draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    /// RK4 steps per generalized Rabi period.
    #[serde(default = "default_steps")]
    pub ode_step_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            quad_order: None,
            mc_samples: None,
            ode_step_factor: default_steps(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default = "default_family")]
    pub family: PulseFamily,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Rotary-echo period count.
    #[serde(default = "one_usize")]
    pub repeats: usize,
    /// Deliberate mean detuning as a fraction of `chi0`.
    #[serde(default)]
    pub deliberate_f: f64,
    /// Deliberate relative error of the mean Rabi rate.
    #[serde(default)]
    pub deliberate_eps: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            family: default_family(),
            theta: default_theta(),
            repeats: 1,
            deliberate_f: 0.0,
            deliberate_eps: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Length of a Rabi trace. Other families run for their own duration.
    #[serde(default = "default_duration_ms")]
    pub duration_ms: f64,
    #[serde(default = "default_samples")]
    pub samples_per_period: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            duration_ms: default_duration_ms(),
            samples_per_period: default_samples(),
        }
    }
}

/// Error points are either listed or spread evenly over `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub axis: ScanAxis,
    /// Families to scan; defaults to the configured sequence family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<PulseFamily>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub rabi_khz: f64,
    pub detuning_khz: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakageConfig {
    /// Defaults to the two nearest hyperfine transitions of the lattice clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelConfig>>,
    /// Defaults to the pi time of the configured drive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_time_us: Option<f64>,
    /// Multiplies every channel detuning, as a stronger bias field would.
    #[serde(default = "one")]
    pub bias_scale: f64,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        LeakageConfig {
            channels: None,
            gate_time_us: None,
            bias_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityConfig {
    #[serde(default)]
    pub measure: FidelityMeasure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset_errors: Option<PresetErrorConfig>,
}

/// Shot-to-shot rms errors of the preset mean drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetErrorConfig {
    pub chi_rms_rel: f64,
    pub delta_rms_rel: f64,
    #[serde(default = "default_outer_order")]
    pub outer_order: usize,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_steps() -> f64 {
    OdeOptions::default().steps_per_period
}
fn default_family() -> PulseFamily {
    PulseFamily::Rabi
}
fn default_theta() -> f64 {
    PI
}
fn default_duration_ms() -> f64 {
    3.0
}
fn default_samples() -> f64 {
    20.0
}
fn default_outer_order() -> usize {
    9
}

/// Lattice-clock leakage channels: 3 kHz couplings detuned by 130 and 260 kHz.
pub fn default_leakage_channels() -> Vec<ChannelConfig> {
    vec![
        ChannelConfig {
            rabi_khz: 3.0,
            detuning_khz: 130.0,
            label: "near".into(),
        },
        ChannelConfig {
            rabi_khz: 3.0,
            detuning_khz: 260.0,
            label: "far".into(),
        },
    ]
}

fn check(ok: bool, field: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    check(v.is_finite(), field, format!("must be finite, got {v}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    check(
        v.is_finite() && v > 0.0,
        field,
        format!("must be positive, got {v}"),
    )
}

fn nonnegative(field: &str, v: f64) -> Result<()> {
    check(
        v.is_finite() && v >= 0.0,
        field,
        format!("must be >= 0, got {v}"),
    )
}

fn order(field: &str, n: usize) -> Result<()> {
    check(
        (1..=MAX_QUAD_ORDER).contains(&n),
        field,
        format!("must be in 1..={MAX_QUAD_ORDER}, got {n}"),
    )
}

impl RunConfig {
    /// Parses and validates a JSON document. Errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_seed(text, None)
    }

    /// As [`RunConfig::from_json`], with `seed` replacing `numerics.seed`
    /// before validation.
    pub fn from_json_with_seed(text: &str, seed: Option<u64>) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::config(
                if path == "." {
                    "<root>".to_string()
                } else {
                    path
                },
                format!("{inner}"),
            )
        })?;
        let mut cfg = cfg;
        if seed.is_some() {
            cfg.numerics.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, seed: Option<u64>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json_with_seed(&text, seed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("drive.chi0_khz", self.drive.chi0_khz)?;
        finite("drive.delta0_khz", self.drive.delta0_khz)?;
        nonnegative("ensemble.dchi_rel", self.ensemble.dchi_rel)?;
        nonnegative("ensemble.ddelta_rel", self.ensemble.ddelta_rel)?;
        let rho = self.ensemble.correlation;
        check(
            rho.is_finite() && rho.abs() < 1.0,
            "ensemble.correlation",
            format!("must lie in (-1, 1), got {rho}"),
        )?;
        self.decay()?;

        finite("signal.s1", self.signal.s1)?;
        finite("signal.s0", self.signal.s0)?;
        nonnegative("signal.noise_sigma", self.signal.noise_sigma)?;

        let n = &self.numerics;
        if let Some(q) = n.quad_order {
            order("numerics.quad_order", q)?;
        }
        if let Some(m) = n.mc_samples {
            check(m > 0, "numerics.mc_samples", "must be positive")?;
        }
        check(
            n.ode_step_factor.is_finite() && n.ode_step_factor >= 1.0,
            "numerics.ode_step_factor",
            format!("must be >= 1, got {}", n.ode_step_factor),
        )?;
        if n.seed.is_none() {
            check(
                self.signal.noise_sigma == 0.0,
                "numerics.seed",
                "required when signal.noise_sigma > 0",
            )?;
            check(
                n.mc_samples.is_none(),
                "numerics.seed",
                "required when numerics.mc_samples is set",
            )?;
        }

        let s = &self.sequence;
        // Rotary echoes are commonly run at theta = 2 pi; rotations stop at pi.
        let max_theta = if s.family == PulseFamily::Rotary {
            2.0 * PI
        } else {
            PI
        };
        check(
            s.theta.is_finite() && s.theta > 0.0 && s.theta <= max_theta,
            "sequence.theta",
            format!("must lie in (0, {max_theta}], got {}", s.theta),
        )?;
        check(s.repeats >= 1, "sequence.repeats", "must be >= 1")?;
        finite("sequence.deliberate_f", s.deliberate_f)?;
        check(
            s.deliberate_eps.is_finite() && s.deliberate_eps > -1.0,
            "sequence.deliberate_eps",
            format!("must be finite and > -1, got {}", s.deliberate_eps),
        )?;
        if s.family == PulseFamily::Scrofulous {
            check(
                (s.theta - PI).abs() <= 1e-12,
                "sequence.theta",
                "SCROFULOUS is only provided for theta = pi",
            )?;
        }

        positive("simulate.duration_ms", self.simulate.duration_ms)?;
        check(
            self.simulate.samples_per_period.is_finite() && self.simulate.samples_per_period >= 2.0,
            "simulate.samples_per_period",
            format!("must be >= 2, got {}", self.simulate.samples_per_period),
        )?;

        if let Some(scan) = &self.scan {
            scan.points()?;
            if let Some(f) = &scan.families {
                check(!f.is_empty(), "scan.families", "must not be empty")?;
            }
        }

        let l = &self.leakage;
        if let Some(ch) = &l.channels {
            for (i, c) in ch.iter().enumerate() {
                nonnegative(&format!("leakage.channels[{i}].rabi_khz"), c.rabi_khz)?;
                finite(
                    &format!("leakage.channels[{i}].detuning_khz"),
                    c.detuning_khz,
                )?;
            }
        }
        if let Some(t) = l.gate_time_us {
            positive("leakage.gate_time_us", t)?;
        }
        positive("leakage.bias_scale", l.bias_scale)?;

        if let FidelityMeasure::StateOverlap { initial } = self.fidelity.measure {
            check(initial <= 1, "fidelity.measure.initial", "must be 0 or 1")?;
        }
        if let Some(p) = &self.fidelity.preset_errors {
            nonnegative("fidelity.preset_errors.chi_rms_rel", p.chi_rms_rel)?;
            nonnegative("fidelity.preset_errors.delta_rms_rel", p.delta_rms_rel)?;
            order("fidelity.preset_errors.outer_order", p.outer_order)?;
        }
        Ok(())
    }

    pub fn chi0(&self) -> f64 {
        khz_to_angular(self.drive.chi0_khz)
    }

    /// Intrinsic ensemble without deliberate errors.
    pub fn base_spec(&self) -> Result<EnsembleSpec> {
        EnsembleSpec::from_relative(
            self.chi0(),
            khz_to_angular(self.drive.delta0_khz),
            self.ensemble.dchi_rel,
            self.ensemble.ddelta_rel,
        )?
        .with_correlation(self.ensemble.correlation)
    }

    /// Ensemble with the deliberate sequence errors applied to its mean.
    pub fn spec(&self) -> Result<EnsembleSpec> {
        shifted_spec(
            &self.base_spec()?,
            ErrorPoint::new(self.sequence.deliberate_f, self.sequence.deliberate_eps),
        )
    }

    pub fn decay(&self) -> Result<DecayRates> {
        let d = &self.decay;
        match (d.tau_d_ms, d.gamma1_hz, d.gamma2_hz) {
            (None, None, None) => Ok(DecayRates::NONE),
            (Some(tau), None, None) => {
                positive("decay.tau_d_ms", tau)?;
                DecayRates::from_echo_decay_time(tau * 1e-3)
            }
            (None, Some(g1), Some(g2)) => {
                nonnegative("decay.gamma1_hz", g1)?;
                nonnegative("decay.gamma2_hz", g2)?;
                DecayRates::new(g1, g2)
            }
            (Some(_), _, _) => Err(Error::config(
                "decay",
                "give either tau_d_ms or gamma1_hz/gamma2_hz, not both",
            )),
            (None, None, Some(_)) => Err(Error::config(
                "decay.gamma1_hz",
                "missing; gamma2_hz needs it",
            )),
            (None, Some(_), None) => Err(Error::config(
                "decay.gamma2_hz",
                "missing; gamma1_hz needs it",
            )),
        }
    }

    pub fn signal_model(&self) -> Result<SignalModel> {
        SignalModel::new(self.signal.s1, self.signal.s0, self.signal.noise_sigma)
    }

    pub fn ode_options(&self, samples_per_period: f64) -> OdeOptions {
        OdeOptions::default()
            .with_steps_per_period(self.numerics.ode_step_factor)
            .with_samples_per_period(samples_per_period)
    }

    /// Averaging method; `auto` supplies the quadrature orders when the
    /// config leaves them open.
    pub fn method(&self, auto: (usize, usize)) -> Result<Method> {
        let n = &self.numerics;
        Ok(match (n.mc_samples, n.quad_order) {
            (Some(samples), _) => Method::MonteCarlo {
                samples,
                seed: n
                    .seed
                    .ok_or_else(|| Error::config("numerics.seed", "required for Monte Carlo"))?,
            },
            (None, Some(q)) => Method::quadrature(q),
            (None, None) => Method::Quadrature {
                chi_order: auto.0,
                delta_order: auto.1,
            },
        })
    }

    pub fn quad_order(&self) -> usize {
        self.numerics.quad_order.unwrap_or(DEFAULT_QUAD_ORDER)
    }

    pub fn leakage_channels(&self) -> Vec<LeakageChannel> {
        let scale = self.leakage.bias_scale;
        self.leakage
            .channels
            .clone()
            .unwrap_or_else(default_leakage_channels)
            .into_iter()
            .map(|c| {
                LeakageChannel::new(
                    khz_to_angular(c.rabi_khz),
                    scale * khz_to_angular(c.detuning_khz),
                    c.label,
                )
            })
            .collect()
    }
}

impl ScanConfig {
    /// Error points in ascending order.
    pub fn points(&self) -> Result<Vec<f64>> {
        let mut pts = match (&self.points, self.min, self.max, self.count) {
            (Some(p), None, None, None) => p.clone(),
            (None, Some(lo), Some(hi), Some(n)) => {
                finite("scan.min", lo)?;
                finite("scan.max", hi)?;
                check(hi > lo, "scan.max", "must exceed scan.min")?;
                check(n >= 2, "scan.count", "must be >= 2")?;
                (0..n)
                    .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                    .collect()
            }
            (Some(_), ..) => {
                return Err(Error::config(
                    "scan.points",
                    "give either points or min/max/count",
                ))
            }
            _ => {
                return Err(Error::config(
                    "scan",
                    "needs points or all of min, max and count",
                ))
            }
        };
        check(
            !pts.is_empty(),
            "scan.points",
            "at least one error point is required",
        )?;
        for (i, &p) in pts.iter().enumerate() {
            finite(&format!("scan.points[{i}]"), p)?;
        }
        pts.sort_by(f64::total_cmp);
        Ok(pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{"drive": {"chi0_khz": 27.78}}"#
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(minimal()).unwrap();
        assert_eq!(c.sequence.family, PulseFamily::Rabi);
        assert_eq!(c.sequence.theta, PI);
        assert_eq!(c.decay().unwrap(), DecayRates::NONE);
        assert_eq!(c.signal.s1, 1.0);
        assert!(c.base_spec().unwrap().is_sharp());
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::from_json(
            r#"{"drive": {"chi0_khz": 27.78, "delta0_khz": 0.5},
                "ensemble": {"dchi_rel": 0.003, "ddelta_rel": 0.073},
                "decay": {"tau_d_ms": 5.5},
                "scan": {"axis": "detuning", "min": -0.5, "max": 0.5, "count": 11}}"#,
        )
        .unwrap();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    fn field_of(text: &str) -> String {
        match RunConfig::from_json(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_name_the_path() {
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": 1, "chi_khz": 2}}"#),
            "drive.chi_khz"
        );
        let f = field_of(r#"{"drive": {"chi0_khz": 1}, "numerics": {"quad": 3}}"#);
        assert_eq!(f, "numerics.quad");
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": 1}, "extra": 1}"#),
            "extra"
        );
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": 1}, "sequence": {"theta": 4.0}}"#),
            "sequence.theta"
        );
    }

    #[test]
    fn invalid_values_name_the_field() {
        assert_eq!(field_of(r#"{"drive": {"chi0_khz": -1}}"#), "drive.chi0_khz");
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": "x"}}"#),
            "drive.chi0_khz"
        );
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": 1}, "ensemble": {"ddelta_rel": -0.1}}"#),
            "ensemble.ddelta_rel"
        );
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": 1}, "signal": {"noise_sigma": 0.1}}"#),
            "numerics.seed"
        );
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": 1}, "numerics": {"mc_samples": 100}}"#),
            "numerics.seed"
        );
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": 1}, "decay": {"tau_d_ms": 1, "gamma1_hz": 2}}"#),
            "decay"
        );
        assert_eq!(
            field_of(
                r#"{"drive": {"chi0_khz": 1}, "sequence": {"family": "scrofulous", "theta": 1.0}}"#
            ),
            "sequence.theta"
        );
        assert_eq!(
            field_of(r#"{"drive": {"chi0_khz": 1}, "scan": {"axis": "angle", "points": []}}"#),
            "scan.points"
        );
        assert_eq!(
            field_of(
                r#"{"drive": {"chi0_khz": 1}, "leakage": {"channels": [{"rabi_khz": -3, "detuning_khz": 1}]}}"#
            ),
            "leakage.channels[0].rabi_khz"
        );
    }

    #[test]
    fn seed_override_satisfies_noise() {
        let text = r#"{"drive": {"chi0_khz": 1}, "signal": {"noise_sigma": 0.1}, "numerics": {"seed": 1}}"#;
        let c = RunConfig::from_json_with_seed(text, Some(9)).unwrap();
        assert_eq!(c.numerics.seed, Some(9));
        let unseeded = r#"{"drive": {"chi0_khz": 1}, "signal": {"noise_sigma": 0.1}}"#;
        assert!(RunConfig::from_json_with_seed(unseeded, Some(2)).is_ok());
    }

    #[test]
    fn seeded_noise_is_accepted() {
        let c = RunConfig::from_json(
            r#"{"drive": {"chi0_khz": 1}, "signal": {"noise_sigma": 0.1}, "numerics": {"seed": 4}}"#,
        )
        .unwrap();
        assert_eq!(c.signal_model().unwrap().noise_sigma, 0.1);
    }

    #[test]
    fn scan_range_is_inclusive_and_sorted() {
        let s = ScanConfig {
            axis: ScanAxis::Angle,
            families: None,
            points: Some(vec![0.2, -0.1, 0.0]),
            min: None,
            max: None,
            count: None,
        };
        assert_eq!(s.points().unwrap(), vec![-0.1, 0.0, 0.2]);
        let r = ScanConfig {
            points: None,
            min: Some(-0.5),
            max: Some(0.5),
            count: Some(5),
            ..s
        };
        assert_eq!(r.points().unwrap(), vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
    }

    #[test]
    fn bias_scale_multiplies_detunings() {
        let c = RunConfig::from_json(r#"{"drive": {"chi0_khz": 1}, "leakage": {"bias_scale": 2}}"#)
            .unwrap();
        let ch = c.leakage_channels();
        assert_eq!(ch.len(), 2);
        assert!((ch[0].detuning - khz_to_angular(260.0)).abs() < 1e-9);
    }
}
