//! Fit of ensemble-averaged Rabi traces.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::features::{check_fittable, dominant_angular_frequency, envelope, linear_scale};
use super::lm::{covariance, levenberg_marquardt, LmOptions, LmOutcome};
use crate::ensemble::{fit_orders, ClosedFormAverager, EnsembleSpec};
use crate::error::{Error, Result};
use crate::trace::TimedTrace;
use crate::units::DecayRates;

/// Parameter order used by [`FitResult::covariance`].
pub const FIT_PARAMETERS: [&str; 6] = ["chi0", "delta0", "dchi", "ddelta", "s1", "s0"];

/// Smallest per-axis quadrature order used inside fits.
const FIT_MIN_ORDER: usize = 7;

/// Rabi rate, detuning and spreads in rad/s, signal scale and offset in
/// signal units. `covariance` follows [`FIT_PARAMETERS`] in the same units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub chi0: f64,
    pub delta0: f64,
    pub dchi: f64,
    pub ddelta: f64,
    pub s1: f64,
    pub s0: f64,
    pub residual_rms: f64,
    pub covariance: [[f64; 6]; 6],
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub objective_history: Vec<f64>,
    /// Quadrature orders (Rabi rate, detuning) of the final model.
    pub quad_orders: (usize, usize),
}

impl FitResult {
    /// Starting point with no fit statistics attached.
    pub fn guess(chi0: f64, delta0: f64, dchi: f64, ddelta: f64, s1: f64, s0: f64) -> Self {
        FitResult {
            chi0,
            delta0,
            dchi,
            ddelta,
            s1,
            s0,
            residual_rms: f64::NAN,
            covariance: [[0.0; 6]; 6],
            converged: false,
            iterations: 0,
            gradient_norm: f64::NAN,
            objective_history: Vec::new(),
            quad_orders: (0, 0),
        }
    }

    pub fn spec(&self) -> Result<EnsembleSpec> {
        EnsembleSpec::new(self.chi0, self.delta0, self.dchi, self.ddelta)
    }

    pub fn values(&self) -> [f64; 6] {
        [
            self.chi0,
            self.delta0,
            self.dchi,
            self.ddelta,
            self.s1,
            self.s0,
        ]
    }

    /// One-sigma uncertainties from the covariance diagonal.
    pub fn std_errors(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.covariance[i][i].max(0.0).sqrt())
    }

    /// The JSON report: cyclic Hz for the mean drive, spreads relative to
    /// `chi0`, and the covariance transformed to those units.
    pub fn report(&self) -> FitReport {
        // d(reported) / d(internal), rows per reported key.
        let mut jac = DMatrix::<f64>::zeros(6, 6);
        jac[(0, 0)] = 1.0 / TAU;
        jac[(1, 1)] = 1.0 / TAU;
        jac[(2, 2)] = 1.0 / self.chi0;
        jac[(2, 0)] = -self.dchi / (self.chi0 * self.chi0);
        jac[(3, 3)] = 1.0 / self.chi0;
        jac[(3, 0)] = -self.ddelta / (self.chi0 * self.chi0);
        jac[(4, 4)] = 1.0;
        jac[(5, 5)] = 1.0;
        let cov = DMatrix::from_fn(6, 6, |i, j| self.covariance[i][j]);
        let out = &jac * cov * jac.transpose();
        FitReport {
            chi0_hz_cyclic: self.chi0 / TAU,
            delta0_hz_cyclic: self.delta0 / TAU,
            dchi_rel: self.dchi / self.chi0,
            ddelta_rel: self.ddelta / self.chi0,
            s1: self.s1,
            s0: self.s0,
            residual_rms: self.residual_rms,
            covariance: (0..6)
                .map(|i| (0..6).map(|j| 0.5 * (out[(i, j)] + out[(j, i)])).collect())
                .collect(),
            converged: self.converged,
            iterations: self.iterations,
        }
    }
}

/// Serialized form of a [`FitResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub chi0_hz_cyclic: f64,
    pub delta0_hz_cyclic: f64,
    pub dchi_rel: f64,
    pub ddelta_rel: f64,
    pub s1: f64,
    pub s0: f64,
    pub residual_rms: f64,
    pub covariance: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

impl FitReport {
    /// Parameters as a fit starting point.
    pub fn to_guess(&self) -> FitResult {
        let chi0 = self.chi0_hz_cyclic * TAU;
        FitResult::guess(
            chi0,
            self.delta0_hz_cyclic * TAU,
            self.dchi_rel * chi0,
            self.ddelta_rel * chi0,
            self.s1,
            self.s0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Fixed quadrature orders; chosen from the trace length when absent.
    pub quad_orders: Option<(usize, usize)>,
}

/// Maps the fit vector to physical parameters. Spreads are squares so they
/// stay nonnegative. The model is even in `delta0`, so its sign is not
/// identifiable and `delta0 = 0` would be a stationary point of a linear
/// parameterization; the fit vector carries `delta0^2` instead and the
/// reported `delta0` is nonnegative.
#[derive(Debug, Clone, Copy)]
struct Scales {
    rate: f64,
    signal: f64,
}

impl Scales {
    fn physical(&self, p: &[f64]) -> [f64; 6] {
        [
            self.rate * p[0],
            self.rate * p[1].abs().sqrt(),
            self.rate * p[2] * p[2],
            self.rate * p[3] * p[3],
            self.signal * p[4],
            self.signal * p[5],
        ]
    }

    fn internal(&self, x: &[f64; 6]) -> Vec<f64> {
        vec![
            x[0] / self.rate,
            (x[1] / self.rate).powi(2),
            (x[2] / self.rate).max(0.0).sqrt(),
            (x[3] / self.rate).max(0.0).sqrt(),
            x[4] / self.signal,
            x[5] / self.signal,
        ]
    }

    /// Diagonal of d(physical) / d(internal). Near `delta0 = 0` the square
    /// root is linearized at the one-sigma value of `delta0^2` instead.
    fn derivative(&self, p: &[f64], var_u: f64) -> [f64; 6] {
        let root = p[1]
            .abs()
            .sqrt()
            .max(var_u.max(0.0).sqrt().sqrt())
            .max(f64::MIN_POSITIVE);
        [
            self.rate,
            self.rate / (2.0 * root),
            2.0 * self.rate * p[2],
            2.0 * self.rate * p[3],
            self.signal,
            self.signal,
        ]
    }
}

/// Model-free starting point: FFT peak for the Rabi rate, detuning spread
/// from the envelope decay beyond the homogeneous part, then exact linear
/// least squares for the signal scale and offset.
pub fn initial_guess(trace: &TimedTrace, decay: DecayRates) -> Result<FitResult> {
    check_fittable(trace)?;
    let omega = dominant_angular_frequency(trace)?;
    let env = envelope(trace, TAU / omega);
    let chi0 = omega;
    let mut ratio = 1.0;
    let mut at = trace.duration();
    if let Some(&(t_first, a_first)) = env.first() {
        for &(t, a) in &env[1..] {
            let homogeneous = (-(decay.gamma1 + decay.gamma2) * (t - t_first)).exp();
            let r = a / (a_first * homogeneous);
            at = t - t_first;
            ratio = r;
            if r < 0.8 {
                break;
            }
        }
    }
    // Detuning spread alone damps the oscillation as (1 + 4 a^2)^(-1/4),
    // a = ddelta^2 t / (2 chi0).
    let r = ratio.clamp(0.05, 0.999);
    let a = (r.powi(-4) - 1.0).sqrt() / 2.0;
    let rough = (2.0 * chi0 * a / at.max(f64::MIN_POSITIVE))
        .sqrt()
        .clamp(0.005 * chi0, 0.5 * chi0);
    let dchi = 0.002 * chi0;
    let delta0 = 0.01 * chi0;
    // The envelope estimate is biased by noise and by the Rabi-rate spread;
    // refine it with a coarse one-dimensional scan of the model.
    let t_end = trace.times[trace.len() - 1];
    let mut best: Option<(f64, FitResult)> = None;
    for k in [0.5, 0.65, 0.8, 0.9, 1.0, 1.1, 1.25, 1.5] {
        let spec = EnsembleSpec::new(chi0, delta0, dchi, k * rough)?;
        let (nc, nd) = fit_orders(&spec, t_end, FIT_MIN_ORDER);
        let pop =
            ClosedFormAverager::with_orders(&trace.times, decay, nc, nd)?.population(&spec)?;
        let (s1, s0) = linear_scale(&pop, &trace.values)?;
        let ssr: f64 = pop
            .iter()
            .zip(&trace.values)
            .map(|(p, y)| (s1 * p + s0 - y).powi(2))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| ssr < *b) {
            best = Some((ssr, FitResult::guess(chi0, delta0, dchi, k * rough, s1, s0)));
        }
    }
    Ok(best.expect("nonempty scan").1)
}

pub fn fit_rabi_trace(
    trace: &TimedTrace,
    decay: DecayRates,
    guess: Option<&FitResult>,
) -> Result<FitResult> {
    fit_rabi_trace_with(trace, decay, guess, &FitOptions::default())
}

/// Six-parameter least-squares fit of `S = s1 * mean_pop1 + s0` with the
/// decay rates held fixed.
pub fn fit_rabi_trace_with(
    trace: &TimedTrace,
    decay: DecayRates,
    guess: Option<&FitResult>,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_fittable(trace)?;
    DecayRates::new(decay.gamma1, decay.gamma2)?;
    let start = match guess {
        Some(g) => g.clone(),
        None => initial_guess(trace, decay)?,
    };
    start.spec()?;
    let periods = trace.duration() * start.chi0 / TAU;
    if periods < 10.0 {
        return Err(Error::invalid(format!(
            "trace spans {periods:.1} Rabi periods; at least 10 are needed"
        )));
    }
    let t_end = trace.times[trace.len() - 1];
    let mut current = start;
    let mut used: Option<(usize, usize)> = None;
    // Refit when the converged spreads call for finer quadrature than was used.
    for _ in 0..3 {
        let orders = match (opts.quad_orders, used) {
            (Some(o), _) => o,
            (None, prev) => {
                let (a, b) = fit_orders(&current.spec()?, t_end, FIT_MIN_ORDER);
                prev.map_or((a, b), |(pa, pb)| (a.max(pa), b.max(pb)))
            }
        };
        let result = fit_once(trace, decay, &current, orders, &opts.lm)?;
        let needed = fit_orders(&result.spec()?, t_end, FIT_MIN_ORDER);
        let done = opts.quad_orders.is_some() || (needed.0 <= orders.0 && needed.1 <= orders.1);
        used = Some(orders);
        current = result;
        if done {
            break;
        }
    }
    Ok(current)
}

fn fit_once(
    trace: &TimedTrace,
    decay: DecayRates,
    start: &FitResult,
    orders: (usize, usize),
    lm: &LmOptions,
) -> Result<FitResult> {
    let averager = ClosedFormAverager::with_orders(&trace.times, decay, orders.0, orders.1)?;
    let scales = Scales {
        rate: start.chi0,
        signal: start.s1.abs().max(1e-300),
    };
    let model = |p: &[f64]| -> Result<Vec<f64>> {
        let [chi0, delta0, dchi, ddelta, s1, s0] = scales.physical(p);
        let pop = averager.population(&EnsembleSpec::new(chi0, delta0, dchi, ddelta)?)?;
        Ok(pop
            .iter()
            .zip(&trace.values)
            .map(|(q, y)| (s1 * q + s0 - y) / scales.signal)
            .collect())
    };
    let out = levenberg_marquardt(model, &scales.internal(&start.values()), lm)?;
    Ok(assemble(&out, &scales, trace.len(), orders))
}

fn assemble(out: &LmOutcome, scales: &Scales, n: usize, orders: (usize, usize)) -> FitResult {
    let [chi0, delta0, dchi, ddelta, s1, s0] = scales.physical(&out.params);
    let c = covariance(out);
    let d = scales.derivative(&out.params, c[(1, 1)]);
    let mut cov = [[0.0; 6]; 6];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = d[i] * c[(i, j)] * d[j];
        }
    }
    FitResult {
        chi0,
        delta0,
        dchi,
        ddelta,
        s1,
        s0,
        residual_rms: scales.signal * (out.objective() / n as f64).sqrt(),
        covariance: cov,
        converged: out.converged(),
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
        objective_history: out.history.clone(),
        quad_orders: orders,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{synthesize_signal, SignalModel};
    use crate::units::khz_to_angular;

    pub(crate) fn synthetic(
        spec: &EnsembleSpec,
        decay: DecayRates,
        t_max: f64,
        per_period: f64,
        model: SignalModel,
        seed: Option<u64>,
        orders: (usize, usize),
    ) -> TimedTrace {
        let n = (t_max * spec.chi0 / TAU * per_period).ceil() as usize + 1;
        let times: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        let pop = ClosedFormAverager::with_orders(&times, decay, orders.0, orders.1)
            .unwrap()
            .population(spec)
            .unwrap();
        let tr = TimedTrace::new(times, pop).unwrap();
        synthesize_signal(&tr, &model, seed).unwrap()
    }

    #[test]
    fn noiseless_round_trip() {
        let chi0 = khz_to_angular(27.78);
        let decay = DecayRates::from_echo_decay_time(5.5e-3).unwrap();
        let spec = EnsembleSpec::from_relative(chi0, 0.02 * chi0, 0.004, 0.073).unwrap();
        let orders = (15, 60);
        let tr = synthetic(
            &spec,
            decay,
            2e-3,
            16.0,
            SignalModel::noiseless(1.8, 0.25),
            None,
            orders,
        );
        let fit = fit_rabi_trace_with(
            &tr,
            decay,
            None,
            &FitOptions {
                quad_orders: Some(orders),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fit.converged);
        let rel = |a: f64, b: f64| (a / b - 1.0).abs();
        assert!(rel(fit.chi0, spec.chi0) < 1e-3);
        assert!(
            rel(fit.delta0, spec.delta0) < 1e-3,
            "delta0 {} vs {}",
            fit.delta0,
            spec.delta0
        );
        assert!(
            rel(fit.dchi, spec.dchi) < 1e-2,
            "dchi {} vs {}",
            fit.dchi,
            spec.dchi
        );
        assert!(rel(fit.ddelta, spec.ddelta) < 1e-2);
        assert!(rel(fit.s1, 1.8) < 1e-3 && rel(fit.s0, 0.25) < 1e-3);
        assert!(fit.residual_rms < 1e-8 * 1.8, "rms {:e}", fit.residual_rms);
        assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let chi0 = khz_to_angular(27.78);
        let decay = DecayRates::from_echo_decay_time(5.5e-3).unwrap();
        let spec = EnsembleSpec::from_relative(chi0, 0.0, 0.003, 0.073).unwrap();
        let tr = synthetic(
            &spec,
            decay,
            1.5e-3,
            12.0,
            SignalModel::new(1.0, 0.0, 0.02).unwrap(),
            Some(3),
            (21, 40),
        );
        let fit = fit_rabi_trace(&tr, decay, None).unwrap();
        let c = DMatrix::from_fn(6, 6, |i, j| fit.covariance[i][j]);
        let scale = c.diagonal().amax();
        assert!((&c - c.transpose()).amax() <= 1e-9 * scale);
        let eig = nalgebra::SymmetricEigen::new(c);
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-9 * scale));
        let report = fit.report();
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "chi0_hz_cyclic",
            "delta0_hz_cyclic",
            "dchi_rel",
            "ddelta_rel",
            "s1",
            "s0",
            "residual_rms",
            "covariance",
            "converged",
            "iterations",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json.as_object().unwrap().len(), 10);
        let back: FitReport = serde_json::from_value(json).unwrap();
        assert!((back.to_guess().chi0 / fit.chi0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_and_degenerate_traces_are_rejected() {
        let chi0 = khz_to_angular(27.78);
        let spec = EnsembleSpec::sharp(chi0, 0.0).unwrap();
        let tr = synthetic(
            &spec,
            DecayRates::NONE,
            2e-4,
            20.0,
            SignalModel::default(),
            None,
            (7, 7),
        );
        assert!(matches!(
            fit_rabi_trace(&tr, DecayRates::NONE, None),
            Err(Error::InvalidInput(_))
        ));
        let flat =
            TimedTrace::new((0..100).map(|i| i as f64 * 1e-5).collect(), vec![0.2; 100]).unwrap();
        assert!(matches!(
            fit_rabi_trace(&flat, DecayRates::NONE, None),
            Err(Error::DegenerateTrace(_))
        ));
    }
}
