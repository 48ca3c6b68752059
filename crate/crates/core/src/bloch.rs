//! Qubit pseudospin states and ideal rotations on the Bloch sphere.
//!
//! Sign convention: the inversion is `w = P1 - P0`, so logical |0> sits at
//! `w = -1`. A drive with Rabi rate `chi`, phase `phi` and detuning `delta`
//! precesses the Bloch vector right-handedly about `(chi cos phi, chi sin phi, delta)`.

use nalgebra::{Matrix3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pseudospin components plus the surviving two-level population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p: f64,
}

impl BlochState {
    pub fn new(u: f64, v: f64, w: f64, p: f64) -> Result<Self> {
        let s = BlochState { u, v, w, p };
        s.validate()?;
        Ok(s)
    }

    /// Logical basis state, `bit` 0 or 1.
    pub fn logical(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(BlochState::from_vector(Vector3::new(0.0, 0.0, -1.0), 1.0)),
            1 => Ok(BlochState::from_vector(Vector3::new(0.0, 0.0, 1.0), 1.0)),
            b => Err(Error::invalid(format!(
                "logical bit must be 0 or 1, got {b}"
            ))),
        }
    }

    pub fn from_vector(r: Vector3<f64>, p: f64) -> Self {
        BlochState {
            u: r.x,
            v: r.y,
            w: r.z,
            p,
        }
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.w)
    }

    pub fn norm(&self) -> f64 {
        self.vector().norm()
    }

    /// Population of logical |1>.
    pub fn pop1(&self) -> f64 {
        0.5 * self.p * (1.0 + self.w)
    }

    /// Population of logical |0>.
    pub fn pop0(&self) -> f64 {
        0.5 * self.p * (1.0 - self.w)
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::ensure_finite("Bloch state", &[self.u, self.v, self.w, self.p])?;
        if self.norm() > 1.0 + 1e-9 {
            return Err(Error::invalid(format!(
                "Bloch vector norm {} exceeds 1",
                self.norm()
            )));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid(format!(
                "population {} outside [0, 1]",
                self.p
            )));
        }
        Ok(())
    }
}

/// Initial state for a logical bit.
pub fn state_from_logical(bit: u8) -> Result<BlochState> {
    BlochState::logical(bit)
}

/// Unit rotation axis for a drive, `(|chi| (cos phi, sin phi, 0) + (0, 0, delta)) / Omega`.
pub fn rotation_axis(rabi: f64, detuning: f64, phase: f64) -> Result<Vector3<f64>> {
    crate::error::ensure_finite("rotation_axis input", &[rabi, detuning, phase])?;
    if rabi < 0.0 {
        return Err(Error::invalid(format!(
            "rabi must be nonnegative, got {rabi}"
        )));
    }
    let omega = rabi.hypot(detuning);
    if omega == 0.0 {
        return Err(Error::NoRotationAxis);
    }
    let (s, c) = phase.sin_cos();
    let a = rabi.abs() / omega;
    let axis = Vector3::new(a * c, a * s, detuning / omega);
    // hypot keeps this at unit length to rounding; renormalize anyway.
    Ok(axis / axis.norm())
}

/// A proper rotation of the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    axis: Vector3<f64>,
    angle: f64,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            axis: Vector3::x(),
            angle: 0.0,
        }
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Rodrigues matrix `I + sin(a) K + (1 - cos(a)) K^2`.
    pub fn matrix(&self) -> Matrix3<f64> {
        let n = self.axis;
        let k = n.cross_matrix();
        let (s, c) = self.angle.sin_cos();
        Matrix3::identity() + k * s + k * k * (1.0 - c)
    }

    pub fn apply(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.matrix() * r
    }

    /// Rotates the state's Bloch vector; the population is untouched.
    pub fn apply_state(&self, s: &BlochState) -> BlochState {
        BlochState::from_vector(self.apply(&s.vector()), s.p)
    }

    pub fn inverse(&self) -> Self {
        Rotation {
            axis: self.axis,
            angle: -self.angle,
        }
    }

    fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&Unit::new_unchecked(self.axis), self.angle)
    }

    fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        match q.axis_angle() {
            Some((axis, angle)) => Rotation {
                axis: axis.into_inner(),
                angle,
            },
            None => Rotation::identity(),
        }
    }
}

/// Rotation by `angle` about a unit `axis` (right-hand rule).
pub fn ideal_rotation(axis: Vector3<f64>, angle: f64) -> Result<Rotation> {
    crate::error::ensure_finite("rotation", &[axis.x, axis.y, axis.z, angle])?;
    let n = axis.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitAxis(n));
    }
    Ok(Rotation {
        axis: axis / n,
        angle,
    })
}

/// The rotation that applies `first` and then `second`.
pub fn compose(first: &Rotation, second: &Rotation) -> Rotation {
    Rotation::from_quaternion(&(second.quaternion() * first.quaternion()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64) -> bool {
        (a - b).abs().max() < tol
    }

    #[test]
    fn axis_examples() {
        let a = rotation_axis(1.0, 0.0, 0.0).unwrap();
        assert!((a - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        let a = rotation_axis(1.0, 0.0, FRAC_PI_2).unwrap();
        assert!((a - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        let a = rotation_axis(1.0, 1.0, 0.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a - Vector3::new(h, 0.0, h)).norm() < 1e-15);
        assert!(matches!(
            rotation_axis(0.0, 0.0, 0.3),
            Err(Error::NoRotationAxis)
        ));
        assert!(rotation_axis(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let r = ideal_rotation(Vector3::x(), PI).unwrap();
        let s = r.apply_state(&state_from_logical(0).unwrap());
        assert!((s.vector() - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);

        let id = ideal_rotation(Vector3::new(0.6, 0.0, 0.8), 0.0).unwrap();
        assert!(close(&id.matrix(), &Matrix3::identity(), 1e-15));

        let r = ideal_rotation(Vector3::z(), FRAC_PI_2).unwrap();
        assert!((r.apply(&Vector3::x()) - Vector3::y()).norm() < 1e-15);

        assert!(matches!(
            ideal_rotation(Vector3::new(1.0, 1.0, 0.0), 1.0),
            Err(Error::NonUnitAxis(_))
        ));
    }

    #[test]
    fn compose_examples() {
        let half = ideal_rotation(Vector3::x(), FRAC_PI_2).unwrap();
        let full = ideal_rotation(Vector3::x(), PI).unwrap();
        assert!(close(
            &compose(&half, &half).matrix(),
            &full.matrix(),
            1e-15
        ));
        assert!(close(
            &compose(&full, &Rotation::identity()).matrix(),
            &full.matrix(),
            1e-15
        ));

        // CORPSE angles on resonance: the axes are +x, -x, +x.
        let u = rotation_axis(1.0, 0.0, 0.0).unwrap();
        let up = rotation_axis(1.0, 0.0, PI).unwrap();
        let r = [
            ideal_rotation(u, PI / 3.0).unwrap(),
            ideal_rotation(up, 5.0 * PI / 3.0).unwrap(),
            ideal_rotation(u, 7.0 * PI / 3.0).unwrap(),
        ];
        let net = compose(&compose(&r[0], &r[1]), &r[2]);
        assert!(close(&net.matrix(), &full.matrix(), 1e-12));
    }

    #[test]
    fn logical_states() {
        let s0 = state_from_logical(0).unwrap();
        assert_eq!((s0.u, s0.v, s0.w, s0.p), (0.0, 0.0, -1.0, 1.0));
        let s1 = state_from_logical(1).unwrap();
        assert_eq!((s1.u, s1.v, s1.w, s1.p), (0.0, 0.0, 1.0, 1.0));
        assert_eq!(s0.pop1(), 0.0);
        assert_eq!(s1.pop1(), 1.0);
        assert!(state_from_logical(2).is_err());
    }

    #[test]
    fn norm_preserved_over_many_compositions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut total = Rotation::identity();
        let mut worst: f64 = 0.0;
        for _ in 0..1_000_000 {
            let axis = rotation_axis(
                rng.random_range(0.0..2.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
            .unwrap();
            let rot = ideal_rotation(axis, rng.random_range(-7.0..7.0)).unwrap();
            total = compose(&total, &rot);
            let r = total.apply(&Vector3::new(0.0, 0.0, -1.0));
            worst = worst.max((r.norm() - 1.0).abs());
        }
        assert!(worst < 1e-12, "norm drift {worst:e}");
    }

    fn arb_rotation() -> impl Strategy<Value = Rotation> {
        (0.0..2.0f64, -2.0..2.0f64, 0.0..6.3f64, -10.0..10.0f64).prop_filter_map(
            "degenerate",
            |(chi, d, phi, a)| {
                rotation_axis(chi, d, phi)
                    .ok()
                    .map(|ax| ideal_rotation(ax, a).unwrap())
            },
        )
    }

    proptest! {
        #[test]
        fn axis_is_unit_and_phase_flip(chi in 0.0..10.0f64, d in -10.0..10.0f64, phi in -10.0..10.0f64) {
            prop_assume!(chi.hypot(d) > 1e-6);
            let a = rotation_axis(chi, d, phi).unwrap();
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
            let b = rotation_axis(chi, d, phi + PI).unwrap();
            prop_assert!((a.x + b.x).abs() < 1e-12);
            prop_assert!((a.y + b.y).abs() < 1e-12);
            prop_assert!((a.z - b.z).abs() < 1e-15);
        }

        #[test]
        fn compose_associative(a in arb_rotation(), b in arb_rotation(), c in arb_rotation()) {
            let left = compose(&compose(&a, &b), &c);
            let right = compose(&a, &compose(&b, &c));
            prop_assert!(close(&left.matrix(), &right.matrix(), 1e-12));
            let m = a.matrix();
            prop_assert!(close(&(m.transpose() * m), &Matrix3::identity(), 1e-12));
            prop_assert!((m.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn compose_with_inverse(a in arb_rotation()) {
            let id = compose(&a, &a.inverse());
            prop_assert!(close(&id.matrix(), &Matrix3::identity(), 1e-12));
        }

        #[test]
        fn composition_matches_matrix_product(a in arb_rotation(), b in arb_rotation()) {
            let c = compose(&a, &b);
            prop_assert!(close(&c.matrix(), &(b.matrix() * a.matrix()), 1e-12));
        }
    }
}
