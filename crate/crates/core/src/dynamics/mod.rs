//! Planar 3R arm moving in a vertical plane, links modelled as uniform
//! thin rods. Gravity acts along −y.

mod kinematics;
mod lagrangian;

pub use kinematics::{
    elbow_up_ik, end_effector, forward_kinematics, jacobian, link_segments, ChainPoints,
};
pub use lagrangian::{
    coriolis_matrix, forward_dynamics, DynamicsModel, gravity_vector, inverse_dynamics, kinetic_energy,
    mass_matrix, mass_matrix_partials, mechanical_energy, potential_energy,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};

/// Number of revolute joints of the arm.
pub const NUM_JOINTS: usize = 3;

/// Geometry, inertia, gravity and actuator limits of the arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmParams<T> {
    pub link_lengths: Vec3<T>,
    pub link_masses: Vec3<T>,
    pub gravity_accel: T,
    pub torque_limits: Vec3<T>,
    #[serde(default)]
    pub joint_viscous_friction: Vec3<T>,
}

impl<T: Scalar> ArmParams<T> {
    /// L = (1.0, 0.8, 0.6) m, m = (4, 3, 2) kg, g = 9.81, τ_max = (120, 60, 30) N·m.
    pub fn canonical() -> Self {
        let l = T::lit;
        Self {
            link_lengths: [l(1.0), l(0.8), l(0.6)],
            link_masses: [l(4.0), l(3.0), l(2.0)],
            gravity_accel: l(9.81),
            torque_limits: [l(120.0), l(60.0), l(30.0)],
            joint_viscous_friction: [T::zero(); 3],
        }
    }

    pub fn num_joints(&self) -> usize {
        NUM_JOINTS
    }

    /// Total reach Σ L_i.
    pub fn reach(&self) -> T {
        self.link_lengths.iter().fold(T::zero(), |acc, &l| acc + l)
    }

    pub fn validate(&self) -> Result<()> {
        let all = |v: &Vec3<T>, pred: fn(T) -> bool| v.iter().all(|&x| pred(x));
        if !all(&self.link_lengths, |x| x.is_finite() && x > T::zero()) {
            return Err(Error::InvalidParameter("link lengths must be positive".into()));
        }
        if !all(&self.link_masses, |x| x.is_finite() && x > T::zero()) {
            return Err(Error::InvalidParameter("link masses must be positive".into()));
        }
        if !all(&self.torque_limits, |x| x.is_finite() && x > T::zero()) {
            return Err(Error::InvalidParameter("torque limits must be positive".into()));
        }
        if !all(&self.joint_viscous_friction, |x| x.is_finite() && x >= T::zero()) {
            return Err(Error::InvalidParameter("friction must be non-negative".into()));
        }
        if !self.gravity_accel.is_finite() {
            return Err(Error::NonFinite("gravity_accel"));
        }
        Ok(())
    }
}

/// Joint positions, velocities (the angular velocities ω_i) and accelerations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState<T> {
    pub q: Vec3<T>,
    pub qdot: Vec3<T>,
    pub qddot: Vec3<T>,
}

impl<T: Scalar> JointState<T> {
    pub fn new(q: Vec3<T>, qdot: Vec3<T>, qddot: Vec3<T>) -> Self {
        Self { q, qdot, qddot }
    }

    /// Builds a state from runtime-sized slices, checking lengths and finiteness.
    pub fn from_slices(q: &[T], qdot: &[T], qddot: &[T]) -> Result<Self> {
        let state = Self {
            q: to_vec3(q)?,
            qdot: to_vec3(qdot)?,
            qddot: to_vec3(qddot)?,
        };
        if !state.is_finite() {
            return Err(Error::NonFinite("joint state"));
        }
        Ok(state)
    }

    pub fn at_rest(q: Vec3<T>) -> Self {
        Self::new(q, [T::zero(); 3], [T::zero(); 3])
    }

    pub fn is_finite(&self) -> bool {
        self.q
            .iter()
            .chain(&self.qdot)
            .chain(&self.qddot)
            .all(|x| x.is_finite())
    }
}

/// Joint torques τ_i in N·m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorqueVector<T> {
    pub tau: Vec3<T>,
}

impl<T: Scalar> TorqueVector<T> {
    pub fn new(tau: Vec3<T>) -> Self {
        Self { tau }
    }
}

/// Converts a slice into a joint-space vector.
pub fn to_vec3<T: Copy>(values: &[T]) -> Result<Vec3<T>> {
    match values {
        &[a, b, c] => Ok([a, b, c]),
        _ => Err(Error::DimensionMismatch {
            expected: NUM_JOINTS,
            found: values.len(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_params_are_valid() {
        let arm = ArmParams::<f64>::canonical();
        arm.validate().unwrap();
        assert_eq!(arm.num_joints(), 3);
        assert!((arm.reach() - 2.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive_length() {
        let mut arm = ArmParams::<f64>::canonical();
        arm.link_lengths[1] = 0.0;
        assert!(arm.validate().is_err());
    }

    #[test]
    fn slice_length_is_checked() {
        let err = JointState::from_slices(&[0.0, 0.0], &[0.0; 3], &[0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
        let err = JointState::from_slices(&[0.0, f64::NAN, 0.0], &[0.0; 3], &[0.0; 3]);
        assert!(err.is_err());
    }
}
