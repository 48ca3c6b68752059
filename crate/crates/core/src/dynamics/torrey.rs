//! Strong-driving Torrey solutions for a qubit starting in logical |0>.
//!
//! [`torrey_inversion`] evaluates the inversion expression in its usual
//! printed form, which is `+1` at `t = 0`. With the crate's convention
//! (`w = P1 - P0`, |0> at `w = -1`) the populations of
//! [`torrey_population`] correspond to `w = -(that expression)`; the
//! populations are the authoritative closed forms and start at `P1(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::DecayRates;

/// Drive seen by one ensemble member, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub rabi: f64,
    pub detuning: f64,
}

impl DriveParams {
    pub fn new(rabi: f64, detuning: f64) -> Self {
        DriveParams { rabi, detuning }
    }

    /// `Omega = sqrt(chi^2 + Delta^2)`.
    pub fn generalized_rabi(&self) -> f64 {
        self.rabi.hypot(self.detuning)
    }

    fn checked_omega(&self) -> Result<f64> {
        crate::error::ensure_finite("drive", &[self.rabi, self.detuning])?;
        let omega = self.generalized_rabi();
        if omega == 0.0 {
            return Err(Error::invalid("generalized Rabi frequency is zero"));
        }
        Ok(omega)
    }
}

/// `-(D^2/W^2) e^(-2 g1 t/3) + (X^2/W^2) cos(W t) e^(-g1 t) + 2 D^2/W^2`.
pub fn torrey_inversion(t: f64, drive: DriveParams, gamma1: f64) -> Result<f64> {
    let omega = drive.checked_omega()?;
    let d2 = (drive.detuning / omega).powi(2);
    let x2 = (drive.rabi / omega).powi(2);
    Ok(-d2 * (-2.0 * gamma1 * t / 3.0).exp()
        + x2 * (omega * t).cos() * (-gamma1 * t).exp()
        + 2.0 * d2)
}

/// Logical-|1> population. `exact` selects the three-term expansion; otherwise
/// the two-term approximation that drops the slowly decaying detuning terms.
pub fn torrey_population(
    t: f64,
    drive: DriveParams,
    decay: DecayRates,
    exact: bool,
) -> Result<f64> {
    let omega = drive.checked_omega()?;
    let coeffs = TorreyCoefficients::new(drive.rabi, drive.detuning, omega);
    let p = coeffs.population(t, &DecayFactors::at(t, decay), exact);
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::invalid(format!(
            "closed-form population {p} outside [0, 1]; outside the strong-driving regime?"
        )));
    }
    Ok(p)
}

/// Time-dependent exponentials shared by every ensemble member.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DecayFactors {
    /// `e^(-g2 t)`
    pub loss: f64,
    /// `e^(-(g1 + g2) t)`
    pub oscillating: f64,
    /// `e^(-(2 g1/3 + g2) t)`
    pub axial: f64,
}

impl DecayFactors {
    pub fn at(t: f64, decay: DecayRates) -> Self {
        let loss = (-decay.gamma2 * t).exp();
        DecayFactors {
            loss,
            oscillating: loss * (-decay.gamma1 * t).exp(),
            axial: loss * (-2.0 * decay.gamma1 * t / 3.0).exp(),
        }
    }
}

/// Member-dependent amplitudes of the population expansion.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TorreyCoefficients {
    pub omega: f64,
    pub x2: f64,
    pub d2: f64,
}

impl TorreyCoefficients {
    pub fn new(rabi: f64, detuning: f64, omega: f64) -> Self {
        TorreyCoefficients {
            omega,
            x2: (rabi / omega).powi(2),
            d2: (detuning / omega).powi(2),
        }
    }

    #[inline]
    pub fn population_with_cos(&self, cos_wt: f64, f: &DecayFactors, exact: bool) -> f64 {
        if exact {
            0.5 * (1.0 - 2.0 * self.d2) * f.loss - 0.5 * self.x2 * cos_wt * f.oscillating
                + 0.5 * self.d2 * f.axial
        } else {
            0.5 * f.loss - 0.5 * self.x2 * cos_wt * f.oscillating
        }
    }

    #[inline]
    pub fn population(&self, t: f64, f: &DecayFactors, exact: bool) -> f64 {
        self.population_with_cos((self.omega * t).cos(), f, exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::khz_to_angular;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn inversion_examples() {
        let d = DriveParams::new(3.0, -1.2);
        assert!((torrey_inversion(0.0, d, 50.0).unwrap() - 1.0).abs() < 1e-15);
        let r = DriveParams::new(2.0, 0.0);
        for &t in &[0.0, 0.3, 1.7, 12.0] {
            assert!((torrey_inversion(t, r, 0.0).unwrap() - (2.0 * t).cos()).abs() < 1e-15);
        }
        assert!(torrey_inversion(1.0, DriveParams::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn population_examples() {
        let chi = 5.0;
        let d = DriveParams::new(chi, 0.0);
        let p = torrey_population(PI / chi, d, DecayRates::NONE, true).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        let p = torrey_population(0.0, d, DecayRates::NONE, true).unwrap();
        assert!(p.abs() < 1e-15);
        assert!(
            torrey_population(0.0, DriveParams::new(0.0, 0.0), DecayRates::NONE, true).is_err()
        );
    }

    #[test]
    fn approximation_error_is_of_order_1e3() {
        let chi = khz_to_angular(27.78);
        let d = DriveParams::new(chi, 0.1 * chi);
        let decay = DecayRates::new(90.9, 90.9).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=30_000 {
            let t = 3e-3 * i as f64 / 30_000.0;
            let a = torrey_population(t, d, decay, true).unwrap();
            let b = torrey_population(t, d, decay, false).unwrap();
            worst = worst.max((a - b).abs());
        }
        assert!(worst <= 5e-3, "max |exact - approx| = {worst}");
        assert!(worst >= 1e-4, "discrepancy unexpectedly small: {worst}");
    }

    proptest! {
        #[test]
        fn lossless_population_is_rabi_formula(chi in 0.01..10.0f64, delta in -10.0..10.0f64, t in 0.0..20.0f64) {
            let d = DriveParams::new(chi, delta);
            let omega = d.generalized_rabi();
            let expected = (chi / omega).powi(2) * (omega * t / 2.0).sin().powi(2);
            let p = torrey_population(t, d, DecayRates::NONE, true).unwrap();
            prop_assert!((p - expected).abs() < 1e-12);
        }
    }
}
