use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{EnsembleSpec, Node};
use crate::bloch::BlochState;
use crate::dynamics::{
    evolve_sequence, sample_times, DecayFactors, DriveParams, Member, OdeOptions,
    TorreyCoefficients,
};
use crate::error::{ensure_finite, Error, Result};
use crate::pulse::PulseSequence;
use crate::trace::TimedTrace;
use crate::units::DecayRates;

/// Monte Carlo samples per independently seeded block.
const MC_BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Tensor-product Gauss-Hermite with the given orders on the Rabi-rate
    /// and detuning axes.
    Quadrature {
        chi_order: usize,
        delta_order: usize,
    },
    /// Plain Monte Carlo; results depend only on `seed`, not on thread count.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Method {
    /// Same order on both axes.
    pub fn quadrature(order: usize) -> Self {
        Method::Quadrature {
            chi_order: order,
            delta_order: order,
        }
    }

    /// Quadrature with [`super::recommended_orders`] for traces up to `t_max`.
    pub fn converged(spec: &EnsembleSpec, t_max: f64) -> Self {
        let (chi_order, delta_order) = super::recommended_orders(spec, t_max);
        Method::Quadrature {
            chi_order,
            delta_order,
        }
    }
}

impl Default for Method {
    fn default() -> Self {
        Method::quadrature(super::DEFAULT_QUAD_ORDER)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Averaged {
    pub trace: TimedTrace,
    /// Standard error of the mean per sample (Monte Carlo only).
    pub std_error: Option<Vec<f64>>,
    /// Probability mass dropped at `chi <= 0` (quadrature) or fraction of
    /// rejected draws (Monte Carlo).
    pub truncated_weight: f64,
}

/// Ensemble average of a per-member time series `eval(times, chi, delta)`.
pub fn average_population<F>(
    times: &[f64],
    spec: &EnsembleSpec,
    method: Method,
    eval: F,
) -> Result<Averaged>
where
    F: Fn(&[f64], f64, f64) -> Result<Vec<f64>> + Sync,
{
    spec.validate()?;
    let checked = |chi: f64, delta: f64| -> Result<Vec<f64>> {
        let v = eval(times, chi, delta).map_err(|e| Error::Node {
            chi,
            delta,
            source: Box::new(e),
        })?;
        if v.len() != times.len() {
            return Err(Error::Node {
                chi,
                delta,
                source: Box::new(Error::invalid(format!(
                    "evaluator returned {} samples for {} times",
                    v.len(),
                    times.len()
                ))),
            });
        }
        Ok(v)
    };
    match method {
        Method::Quadrature {
            chi_order,
            delta_order,
        } => {
            let (nodes, lost) = spec.nodes_with(chi_order, delta_order)?;
            let series: Vec<Vec<f64>> = nodes
                .par_iter()
                .map(|n| checked(n.chi, n.delta))
                .collect::<Result<_>>()?;
            let mut acc = vec![0.0; times.len()];
            for (n, s) in nodes.iter().zip(&series) {
                for (a, v) in acc.iter_mut().zip(s) {
                    *a += n.weight * v;
                }
            }
            Ok(Averaged {
                trace: TimedTrace::from_parts_unchecked(times.to_vec(), acc),
                std_error: None,
                truncated_weight: lost,
            })
        }
        Method::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::invalid("Monte Carlo needs at least 2 samples"));
            }
            let blocks = samples.div_ceil(MC_BLOCK);
            let partials: Vec<(Vec<f64>, Vec<f64>, usize, usize)> = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(b as u64);
                    let n = MC_BLOCK.min(samples - b * MC_BLOCK);
                    let mut sum = vec![0.0; times.len()];
                    let mut sq = vec![0.0; times.len()];
                    let mut used = 0;
                    for _ in 0..n {
                        let x: f64 = StandardNormal.sample(&mut rng);
                        let y: f64 = StandardNormal.sample(&mut rng);
                        let (chi, delta) = spec.member_at(x, y);
                        if chi <= 0.0 {
                            continue;
                        }
                        let v = checked(chi, delta)?;
                        for ((s, q), v) in sum.iter_mut().zip(sq.iter_mut()).zip(&v) {
                            *s += v;
                            *q += v * v;
                        }
                        used += 1;
                    }
                    Ok((sum, sq, used, n - used))
                })
                .collect::<Result<_>>()?;
            let mut sum = vec![0.0; times.len()];
            let mut sq = vec![0.0; times.len()];
            let (mut used, mut rejected) = (0usize, 0usize);
            for (s, q, u, r) in partials {
                for i in 0..times.len() {
                    sum[i] += s[i];
                    sq[i] += q[i];
                }
                used += u;
                rejected += r;
            }
            if used < 2 {
                return Err(Error::invalid("too few physical Monte Carlo draws"));
            }
            let n = used as f64;
            let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
            let se = sq
                .iter()
                .zip(&mean)
                .map(|(q, m)| ((q - n * m * m).max(0.0) / (n - 1.0) / n).sqrt())
                .collect();
            Ok(Averaged {
                trace: TimedTrace::from_parts_unchecked(times.to_vec(), mean),
                std_error: Some(se),
                truncated_weight: rejected as f64 / samples as f64,
            })
        }
    }
}

/// Per-member evaluator for the closed-form populations.
pub fn closed_form_evaluator(
    decay: DecayRates,
    exact: bool,
) -> impl Fn(&[f64], f64, f64) -> Result<Vec<f64>> + Sync {
    move |times: &[f64], chi: f64, delta: f64| {
        times
            .iter()
            .map(|&t| {
                crate::dynamics::torrey_population(t, DriveParams::new(chi, delta), decay, exact)
            })
            .collect()
    }
}

/// Ensemble average of any pulse sequence started from `initial`, sampled on
/// the sequence's own grid (which includes every segment boundary).
pub fn average_sequence_population(
    initial: BlochState,
    seq: &PulseSequence,
    spec: &EnsembleSpec,
    decay: DecayRates,
    method: Method,
    opts: &OdeOptions,
) -> Result<Averaged> {
    let times = sample_times(seq, opts);
    let nominal = seq.nominal_rabi();
    average_population(&times, spec, method, |_, chi, delta| {
        let member = Member::from_absolute(chi, delta, nominal);
        let (_, tr) = evolve_sequence(initial, seq, member, decay, opts)?;
        Ok(tr.states.iter().map(BlochState::pop1).collect())
    })
}

/// Quadrature average of the exact closed-form population on a fixed time
/// grid, with the decay exponentials computed once. This is the model
/// evaluated inside the trace fits.
#[derive(Debug, Clone)]
pub struct ClosedFormAverager {
    times: Vec<f64>,
    factors: Vec<DecayFactors>,
    chi_order: usize,
    delta_order: usize,
    /// Spacing of a uniform grid, which allows `cos(omega t)` by recurrence.
    step: Option<f64>,
}

/// Samples between exact re-evaluations of the cosine recurrence.
const ANCHOR_EVERY: usize = 32;

fn uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let n = times.len() - 1;
    let dt = (times[n] - times[0]) / n as f64;
    let tol = 1e-12 * times[n].abs().max(dt);
    let uniform = times
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - (times[0] + k as f64 * dt)).abs() <= tol);
    uniform.then_some(dt)
}

impl ClosedFormAverager {
    pub fn new(times: &[f64], decay: DecayRates, order: usize) -> Result<Self> {
        Self::with_orders(times, decay, order, order)
    }

    pub fn with_orders(
        times: &[f64],
        decay: DecayRates,
        chi_order: usize,
        delta_order: usize,
    ) -> Result<Self> {
        ensure_finite("times", times)?;
        DecayRates::new(decay.gamma1, decay.gamma2)?;
        if chi_order == 0 || delta_order == 0 {
            return Err(Error::invalid("quadrature order must be >= 1"));
        }
        Ok(ClosedFormAverager {
            times: times.to_vec(),
            factors: times.iter().map(|&t| DecayFactors::at(t, decay)).collect(),
            chi_order,
            delta_order,
            step: uniform_step(times),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.chi_order, self.delta_order)
    }

    pub fn population(&self, spec: &EnsembleSpec) -> Result<Vec<f64>> {
        let (nodes, _) = spec.nodes_with(self.chi_order, self.delta_order)?;
        let mut acc = vec![0.0; self.times.len()];
        for node in &nodes {
            self.accumulate(node, &mut acc)?;
        }
        Ok(acc)
    }

    fn accumulate(&self, node: &Node, acc: &mut [f64]) -> Result<()> {
        let omega = node.chi.hypot(node.delta);
        if omega == 0.0 {
            return Err(Error::Node {
                chi: node.chi,
                delta: node.delta,
                source: Box::new(Error::invalid("generalized Rabi frequency is zero")),
            });
        }
        let c = TorreyCoefficients::new(node.chi, node.delta, omega);
        let Some(dt) = self.step else {
            for ((a, &t), f) in acc.iter_mut().zip(&self.times).zip(&self.factors) {
                *a += node.weight * c.population(t, f, true);
            }
            return Ok(());
        };
        let (sd, cd) = (omega * dt).sin_cos();
        let (mut sn, mut cs) = (0.0, 1.0);
        for (k, ((a, &t), f)) in acc
            .iter_mut()
            .zip(&self.times)
            .zip(&self.factors)
            .enumerate()
        {
            if k % ANCHOR_EVERY == 0 {
                (sn, cs) = (omega * t).sin_cos();
            } else {
                (sn, cs) = (sn * cd + cs * sd, cs * cd - sn * sd);
            }
            *a += node.weight * c.population_with_cos(cs, f, true);
        }
        Ok(())
    }
}
