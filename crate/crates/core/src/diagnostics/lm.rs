//! Levenberg-Marquardt least squares with central-difference Jacobians.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the objective by less than this fraction.
    pub rel_tol: f64,
    /// Stop when the infinity norm of `J^T r` drops below this.
    pub grad_tol: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            rel_tol: 1e-10,
            grad_tol: 1e-8,
            fd_step: 1e-6,
            initial_damping: 1e-3,
        }
    }
}

/// Damping beyond which no step can lower the objective.
const MAX_DAMPING: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Gradient,
    ObjectiveChange,
    /// No step lowers the objective at any damping: a minimum to working precision.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Jacobian at `params`, row per residual.
    pub jacobian: DMatrix<f64>,
    /// Sum of squared residuals after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub reason: StopReason,
}

impl LmOutcome {
    pub fn objective(&self) -> f64 {
        *self
            .history
            .last()
            .expect("history starts with the initial objective")
    }

    pub fn converged(&self) -> bool {
        self.reason != StopReason::MaxIterations
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn checked<F>(f: &F, x: &[f64], n: Option<usize>) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let r = f(x)?;
    if let Some(n) = n {
        if r.len() != n {
            return Err(Error::invalid(
                "residual length changed between evaluations",
            ));
        }
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residuals"));
    }
    Ok(r)
}

/// Central-difference Jacobian with per-parameter step `fd_step * max(|x|, 1e-2)`.
pub fn fd_jacobian<F>(f: &F, x: &[f64], n: usize, fd_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut jac = DMatrix::zeros(n, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = fd_step * x[j].abs().max(1e-2);
        xp[j] = x[j] + h;
        let up = checked(f, &xp, Some(n))?;
        xp[j] = x[j] - h;
        let down = checked(f, &xp, Some(n))?;
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Minimizes `sum r_i(x)^2`. A residual evaluation that fails at a trial
/// point is treated as a rejected step.
pub fn levenberg_marquardt<F>(residual: F, x0: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if x0.is_empty() {
        return Err(Error::invalid("no parameters to fit"));
    }
    let mut x = x0.to_vec();
    let mut r = checked(&residual, &x, None)?;
    let n = r.len();
    if n < x.len() {
        return Err(Error::invalid(format!(
            "{n} residuals cannot determine {} parameters",
            x.len()
        )));
    }
    let mut s = sum_sq(&r);
    let mut history = vec![s];
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut reason = StopReason::MaxIterations;
    let mut jac = fd_jacobian(&residual, &x, n, opts.fd_step)?;
    let mut grad = jac.transpose() * DVector::from_column_slice(&r);

    while iterations < opts.max_iterations {
        if grad.amax() < opts.grad_tol {
            reason = StopReason::Gradient;
            break;
        }
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let diag_floor = 1e-12 * jtj.diagonal().amax().max(f64::MIN_POSITIVE);
        let mut accepted = None;
        while lambda <= MAX_DAMPING {
            let mut m = jtj.clone();
            for k in 0..x.len() {
                m[(k, k)] += lambda * jtj[(k, k)].max(diag_floor);
            }
            let Some(chol) = m.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            match checked(&residual, &trial, Some(n)) {
                Ok(rt) if sum_sq(&rt) < s => {
                    accepted = Some((trial, rt));
                    lambda = (lambda / 10.0).max(1e-12);
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        let Some((trial, rt)) = accepted else {
            reason = StopReason::Stalled;
            break;
        };
        let s_new = sum_sq(&rt);
        let rel = (s - s_new) / s;
        x = trial;
        r = rt;
        s = s_new;
        history.push(s);
        jac = fd_jacobian(&residual, &x, n, opts.fd_step)?;
        grad = jac.transpose() * DVector::from_column_slice(&r);
        if rel < opts.rel_tol {
            reason = StopReason::ObjectiveChange;
            break;
        }
    }
    Ok(LmOutcome {
        params: x,
        residuals: r,
        jacobian: jac,
        history,
        iterations,
        gradient_norm: grad.amax(),
        reason,
    })
}

/// `sigma^2 (J^T J)^+` with `sigma^2 = SSR / (n - p)`, symmetrized.
pub fn covariance(outcome: &LmOutcome) -> DMatrix<f64> {
    let (n, p) = outcome.jacobian.shape();
    let dof = (n.saturating_sub(p)).max(1) as f64;
    let sigma2 = outcome.objective() / dof;
    let jtj = outcome.jacobian.transpose() * &outcome.jacobian;
    let svd = jtj.svd(true, true);
    let tol = 1e-14 * svd.singular_values.amax();
    let pinv = svd
        .pseudo_inverse(tol)
        .unwrap_or_else(|_| DMatrix::zeros(p, p));
    let c = pinv * sigma2;
    (&c + c.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fits_exponential_decay() {
        let ts: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.5 * (-1.3 * t).exp() + 0.4).collect();
        let f = |p: &[f64]| -> Result<Vec<f64>> {
            Ok(ts
                .iter()
                .zip(&ys)
                .map(|(t, y)| p[0] * (-p[1] * t).exp() + p[2] - y)
                .collect())
        };
        let out = levenberg_marquardt(f, &[1.0, 0.5, 0.0], &LmOptions::default()).unwrap();
        assert!(out.converged());
        for (a, b) in out.params.iter().zip([2.5, 1.3, 0.4]) {
            assert!((a - b).abs() < 1e-8, "{:?}", out.params);
        }
        assert!(out.objective() < 1e-20);
    }

    #[test]
    fn objective_history_is_monotone() {
        let f =
            |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]) };
        let out = levenberg_marquardt(f, &[-1.2, 1.0], &LmOptions::default()).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] < w[0]));
        assert!((out.params[0] - 1.0).abs() < 1e-6 && (out.params[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn failing_trial_points_are_rejected() {
        let f = |p: &[f64]| -> Result<Vec<f64>> {
            if p[0] <= 0.0 {
                return Err(Error::invalid("outside domain"));
            }
            Ok(vec![p[0].ln() - 1.0, 0.0])
        };
        let out = levenberg_marquardt(f, &[0.1], &LmOptions::default()).unwrap();
        assert!((out.params[0] - 1f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn linear_covariance_matches_closed_form() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 2.0 * x + 1.0 + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let f = |p: &[f64]| -> Result<Vec<f64>> {
            Ok(xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| p[0] * x + p[1] - y)
                .collect())
        };
        let out = levenberg_marquardt(f, &[0.0, 0.0], &LmOptions::default()).unwrap();
        let c = covariance(&out);
        let n = 20.0;
        let sx: f64 = xs.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sigma2 = out.objective() / (n - 2.0);
        let det = n * sxx - sx * sx;
        assert!((c[(0, 0)] - sigma2 * n / det).abs() < 1e-9 * c[(0, 0)]);
        assert!((c[(1, 1)] - sigma2 * sxx / det).abs() < 1e-9 * c[(1, 1)]);
        assert!((c[(0, 1)] + sigma2 * sx / det).abs() < 1e-9 * c[(1, 1)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn fd_jacobian_matches_analytic(a in 0.2f64..3.0, b in -2.0f64..2.0) {
            let ts = [0.0, 0.3, 0.9, 1.7];
            let f = |p: &[f64]| -> Result<Vec<f64>> { Ok(ts.iter().map(|t| p[0] * (p[1] * t).sin()).collect()) };
            let j = fd_jacobian(&f, &[a, b], 4, 1e-6).unwrap();
            for (i, t) in ts.iter().enumerate() {
                let da = (b * t).sin();
                let db = a * t * (b * t).cos();
                prop_assert!((j[(i, 0)] - da).abs() <= 1e-6 * da.abs().max(1e-3));
                prop_assert!((j[(i, 1)] - db).abs() <= 1e-6 * db.abs().max(1e-3));
            }
        }
    }
}
