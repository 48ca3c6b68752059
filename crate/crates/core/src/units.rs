//! Unit conventions.
//!
//! Every frequency inside the crate is an angular frequency in rad/s. Rates
//! (decay constants) are plain 1/s. Configuration files and reports use cyclic
//! kHz / Hz and are converted at the boundary.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cyclic kHz to angular rad/s.
pub fn khz_to_angular(khz: f64) -> f64 {
    khz * 1e3 * TAU
}

/// Angular rad/s to cyclic Hz.
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// Angular rad/s to cyclic kHz.
pub fn angular_to_khz(omega: f64) -> f64 {
    omega / TAU / 1e3
}

/// Mean resonant Rabi frequency of the lattice data sets, cyclic kHz.
pub const LATTICE_RABI_KHZ: f64 = 27.78;

/// Fractional Rabi spread for both free and trapped atoms.
pub const LATTICE_DCHI_REL: f64 = 0.003;
/// Fractional detuning spread for atoms trapped in the lattice.
pub const LATTICE_DDELTA_REL: f64 = 0.073;
/// Fractional detuning spread for atoms in free fall.
pub const FREE_FALL_DDELTA_REL: f64 = 0.033;

/// Most conservative lattice coherence time, seconds.
pub const LATTICE_TAU_D: f64 = 5.5e-3;

/// Homogeneous decay rates of the lossy two-level model.
///
/// `gamma1 = 3 / (4 T1)` damps the pseudospin, `gamma2` removes total
/// two-level population. The transverse lifetime is pinned to `T2' = 2 T1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecayRates {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl DecayRates {
    pub const NONE: DecayRates = DecayRates {
        gamma1: 0.0,
        gamma2: 0.0,
    };

    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1.is_finite() && gamma2.is_finite()) {
            return Err(Error::NonFinite("decay rates"));
        }
        if gamma1 < 0.0 || gamma2 < 0.0 {
            return Err(Error::invalid(format!(
                "decay rates must be nonnegative (gamma1 = {gamma1}, gamma2 = {gamma2})"
            )));
        }
        Ok(DecayRates { gamma1, gamma2 })
    }

    /// Rates from the decay time of the oscillating part of a rotary echo,
    /// with the `gamma1 = gamma2 = 1/(2 tau_d)` assignment.
    pub fn from_echo_decay_time(tau_d: f64) -> Result<Self> {
        if !(tau_d.is_finite() && tau_d > 0.0) {
            return Err(Error::invalid(format!(
                "tau_d must be positive, got {tau_d}"
            )));
        }
        let g = 1.0 / (2.0 * tau_d);
        Ok(DecayRates {
            gamma1: g,
            gamma2: g,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.gamma1 == 0.0 && self.gamma2 == 0.0
    }

    /// Longitudinal lifetime `T1 = 3 / (4 gamma1)`; infinite when undamped.
    pub fn t1(&self) -> f64 {
        if self.gamma1 == 0.0 {
            f64::INFINITY
        } else {
            3.0 / (4.0 * self.gamma1)
        }
    }

    /// Transverse lifetime, always `2 T1`.
    pub fn t2_prime(&self) -> f64 {
        2.0 * self.t1()
    }

    /// `1/T1 = 4 gamma1 / 3`.
    pub fn longitudinal_rate(&self) -> f64 {
        4.0 * self.gamma1 / 3.0
    }

    /// `1/T2' = 2 gamma1 / 3`.
    pub fn transverse_rate(&self) -> f64 {
        2.0 * self.gamma1 / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_time_at_lattice_rabi() {
        let chi0 = khz_to_angular(LATTICE_RABI_KHZ);
        let t_pi = std::f64::consts::PI / chi0;
        assert!((t_pi - 18.0e-6).abs() < 0.01e-6, "t_pi = {t_pi}");
    }

    #[test]
    fn lifetimes() {
        let d = DecayRates::new(0.75, 0.0).unwrap();
        assert_eq!(d.t1(), 1.0);
        assert_eq!(d.t2_prime(), 2.0);
        assert!((d.longitudinal_rate() - 1.0).abs() < 1e-15);
        assert!((d.transverse_rate() - 0.5).abs() < 1e-15);
        assert!(DecayRates::NONE.t1().is_infinite());
    }

    #[test]
    fn echo_decay_time() {
        let d = DecayRates::from_echo_decay_time(5.5e-3).unwrap();
        assert!((d.gamma1 - 90.909_090_909).abs() < 1e-6);
        assert_eq!(d.gamma1, d.gamma2);
        assert!(DecayRates::from_echo_decay_time(0.0).is_err());
        assert!(DecayRates::new(-1.0, 0.0).is_err());
    }
}
