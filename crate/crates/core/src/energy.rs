//! Trajectory energy: the time integral of joint mechanical power τ_i·ω_i,
//! summed over joints.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ArmParams, DynamicsModel, JointState};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};
use crate::trajectory::{fit_spline, JointTrajectory};

/// Default quadrature step in seconds.
pub const DEFAULT_QUADRATURE_STEP: f64 = 0.01;

/// How negative (regenerative) joint power is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerMode {
    /// `|τ_i ω_i|`: braking costs as much as driving.
    #[default]
    Abs,
    /// `max(0, τ_i ω_i)`: braking is free.
    Clamp,
}

impl std::str::FromStr for PowerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "abs" => Ok(Self::Abs),
            "clamp" => Ok(Self::Clamp),
            other => Err(format!("unknown power mode `{other}` (expected abs or clamp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyOptions<T> {
    pub step: T,
    pub power_mode: PowerMode,
}

impl<T: Scalar> Default for EnergyOptions<T> {
    fn default() -> Self {
        Self {
            step: T::lit(DEFAULT_QUADRATURE_STEP),
            power_mode: PowerMode::Abs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport<T> {
    pub total_energy: T,
    pub per_joint_energy: Vec3<T>,
    pub quadrature_step: T,
}

#[inline]
fn joint_power<T: Scalar>(tau: T, omega: T, mode: PowerMode) -> T {
    let p = tau * omega;
    match mode {
        PowerMode::Abs => p.abs(),
        PowerMode::Clamp => p.max(T::zero()),
    }
}

/// Per-joint power in watts, with the torque from inverse dynamics.
pub fn instantaneous_power<T: Scalar>(
    params: &ArmParams<T>,
    state: &JointState<T>,
    mode: PowerMode,
) -> Vec3<T> {
    power_with(&DynamicsModel::new(params), state, mode)
}

#[inline]
fn power_with<T: Scalar>(model: &DynamicsModel<T>, state: &JointState<T>, mode: PowerMode) -> Vec3<T> {
    let tau = model.inverse_dynamics(state).tau;
    let mut p = [T::zero(); 3];
    for j in 0..3 {
        p[j] = joint_power(tau[j], state.qdot[j], mode);
    }
    p
}

/// Composite Simpson rule over equally spaced samples (odd sample count).
pub fn simpson<T: Scalar>(samples: &[T], h: T) -> Result<T> {
    if samples.len() < 3 || samples.len().is_multiple_of(2) {
        return Err(Error::OddIntervalCount(samples.len().saturating_sub(1)));
    }
    let last = samples.len() - 1;
    let (two, four) = (T::two(), T::lit(4.0));
    let mut acc = samples[0] + samples[last];
    for (k, &v) in samples.iter().enumerate().take(last).skip(1) {
        acc = acc + if k % 2 == 1 { four * v } else { two * v };
    }
    Ok(acc * h / T::lit(3.0))
}

/// Number of Simpson intervals of width `h` in `[a, b]`.
fn interval_count<T: Scalar>(traj: &JointTrajectory<T>, a: T, b: T, h: T) -> Result<usize> {
    if !(h > T::zero()) || !traj.grid().contains(a) || !traj.grid().contains(b) || !(b > a) {
        return Err(Error::InvalidParameter(
            "energy interval must lie in the horizon with a positive step".into(),
        ));
    }
    let ratio = (b - a) / h;
    let n = ratio.round().to_usize().unwrap_or(0);
    if (ratio - ratio.round()).abs() > T::lit(1e-6) {
        return Err(Error::InvalidParameter(
            "energy interval is not a multiple of the quadrature step".into(),
        ));
    }
    if n == 0 || n % 2 == 1 {
        return Err(Error::OddIntervalCount(n));
    }
    Ok(n)
}

/// Energy over the whole horizon at the default 0.01 s step with `|τω|`.
pub fn trajectory_energy<T: Scalar>(
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
) -> Result<EnergyReport<T>> {
    trajectory_energy_with(params, traj, &EnergyOptions::default())
}

pub fn trajectory_energy_with<T: Scalar>(
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
    options: &EnergyOptions<T>,
) -> Result<EnergyReport<T>> {
    let grid = traj.grid();
    energy_between(params, traj, grid.t0, grid.tf, options)
}

/// Simpson energy over `[a, b]`; `(b − a)/step` must be an even integer.
pub fn energy_between<T: Scalar>(
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
    a: T,
    b: T,
    options: &EnergyOptions<T>,
) -> Result<EnergyReport<T>> {
    let h = options.step;
    let n = interval_count(traj, a, b, h)?;

    let model = DynamicsModel::new(params);
    let (two, four) = (T::two(), T::lit(4.0));
    let mut acc = [T::zero(); 3];
    for k in 0..=n {
        let t = a + T::from_usize(k).unwrap() * h;
        let state = traj.eval_clamped(t);
        let p = power_with(&model, &state, options.power_mode);
        let w = if k == 0 || k == n {
            T::one()
        } else if k % 2 == 1 {
            four
        } else {
            two
        };
        for j in 0..3 {
            acc[j] = acc[j] + w * p[j];
        }
    }
    let third = h / T::lit(3.0);
    let per_joint = acc.map(|v| v * third);
    if per_joint.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("joint power"));
    }
    Ok(EnergyReport {
        total_energy: per_joint[0] + per_joint[1] + per_joint[2],
        per_joint_energy: per_joint,
        quadrature_step: h,
    })
}

/// Gradient of [`trajectory_energy_with`] with respect to the interior knots,
/// laid out like [`crate::trajectory::pack`].
///
/// The spline is linear in its knots, so each sample's sensitivity to knot
/// `m` is the clamped basis spline through a unit value at `m`. Per-sample
/// torque partials are central differences: exact in ω̇ and ω (τ is linear
/// and quadratic there), step 1e-5 rad in q. A joint power of exactly zero
/// contributes the zero subgradient.
pub fn energy_knot_gradient<T: Scalar>(
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
    options: &EnergyOptions<T>,
) -> Result<Vec<T>> {
    let grid = *traj.grid();
    let h = options.step;
    let n = interval_count(traj, grid.t0, grid.tf, h)?;
    let interior = traj.knots().len() - 2;
    let basis = (1..=interior)
        .map(|m| {
            let mut knots = vec![[T::zero(); 3]; interior + 2];
            knots[m] = [T::one(); 3];
            fit_spline(grid, knots)
        })
        .collect::<Result<Vec<_>>>()?;

    let model = DynamicsModel::new(params);
    let (angle_step, rate_step, accel_step) = (T::lit(1e-5), T::lit(1e-2), T::one());
    let third = h / T::lit(3.0);
    let mut grad = vec![T::zero(); 3 * interior];
    for k in 0..=n {
        let t = grid.t0 + T::from_usize(k).unwrap() * h;
        let state = traj.eval_clamped(t);
        let tau = model.inverse_dynamics(&state).tau;
        let w = third
            * if k == 0 || k == n {
                T::one()
            } else if k % 2 == 1 {
                T::lit(4.0)
            } else {
                T::two()
            };
        // dE/dτ_j = s_j ω_j and dE/dω_j gains s_j τ_j directly
        let mut s = [T::zero(); 3];
        for j in 0..3 {
            let p = tau[j] * state.qdot[j];
            let slope = match options.power_mode {
                PowerMode::Abs if p > T::zero() => T::one(),
                PowerMode::Abs if p < T::zero() => -T::one(),
                PowerMode::Clamp if p > T::zero() => T::one(),
                _ => T::zero(),
            };
            s[j] = w * slope;
        }
        if s.iter().all(|v| v.is_zero()) {
            continue;
        }
        let a = [s[0] * state.qdot[0], s[1] * state.qdot[1], s[2] * state.qdot[2]];
        let weighted = |st: &JointState<T>| {
            let tau = model.inverse_dynamics(st).tau;
            a[0] * tau[0] + a[1] * tau[1] + a[2] * tau[2]
        };
        let partial = |field: fn(&mut JointState<T>) -> &mut Vec3<T>, i: usize, step: T| {
            let (mut plus, mut minus) = (state, state);
            field(&mut plus)[i] = field(&mut plus)[i] + step;
            field(&mut minus)[i] = field(&mut minus)[i] - step;
            (weighted(&plus) - weighted(&minus)) / (T::two() * step)
        };
        let mut dq = [T::zero(); 3];
        let mut dw = [T::zero(); 3];
        let mut da = [T::zero(); 3];
        for i in 0..3 {
            dq[i] = partial(|st| &mut st.q, i, angle_step);
            dw[i] = partial(|st| &mut st.qdot, i, rate_step) + s[i] * tau[i];
            da[i] = partial(|st| &mut st.qddot, i, accel_step);
        }
        for (m, b) in basis.iter().enumerate() {
            let b = b.eval_clamped(t);
            let (bq, bw, ba) = (b.q[0], b.qdot[0], b.qddot[0]);
            for j in 0..3 {
                grad[3 * m + j] = grad[3 * m + j] + dq[j] * bq + dw[j] * bw + da[j] * ba;
            }
        }
    }
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("energy gradient"));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::inverse_dynamics;
    use crate::trajectory::{baseline_trajectory, fit_spline, KnotGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn weightless_arm() -> ArmParams<f64> {
        let mut arm = ArmParams::<f64>::canonical();
        arm.gravity_accel = 0.0;
        arm
    }

    #[test]
    fn static_hold_costs_nothing() {
        let state = JointState::at_rest([0.1, 0.2, 0.3]);
        assert_eq!(instantaneous_power(&ArmParams::<f64>::canonical(), &state, PowerMode::Abs), [0.0; 3]);
    }

    #[test]
    fn viscous_torque_times_velocity() {
        // no gravity, only joint 1 moving at constant rate: τ_1 = b_1 ω_1 = 2
        let mut arm = weightless_arm();
        arm.joint_viscous_friction = [2.0, 0.0, 0.0];
        let state = JointState::new([0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]);
        let tau = inverse_dynamics(&arm, &state).tau;
        assert!((tau[0] - 2.0).abs() < 1e-12);
        let p = instantaneous_power(&arm, &state, PowerMode::Abs);
        assert!((p[0] - 2.0).abs() < 1e-12 && p[1].abs() < 1e-12 && p[2].abs() < 1e-12);
    }

    #[test]
    fn matches_direct_composition() {
        let arm = ArmParams::<f64>::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mut v = || [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let state = JointState::new(v(), v(), v());
            let tau = inverse_dynamics(&arm, &state).tau;
            let p = instantaneous_power(&arm, &state, PowerMode::Abs);
            let c = instantaneous_power(&arm, &state, PowerMode::Clamp);
            for j in 0..3 {
                assert!((p[j] - (tau[j] * state.qdot[j]).abs()).abs() <= 1e-12);
                assert!((c[j] - (tau[j] * state.qdot[j]).max(0.0)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn constant_trajectory_has_zero_energy() {
        let traj = fit_spline(KnotGrid::default(), vec![[0.3, -0.2, 0.1]; 31]).unwrap();
        let report = trajectory_energy(&ArmParams::<f64>::canonical(), &traj).unwrap();
        assert_eq!(report.total_energy, 0.0);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let h = 0.1;
        let samples: Vec<f64> = (0..=20).map(|k| (k as f64 * h).powi(3)).collect();
        assert!((simpson(&samples, h).unwrap() - 4.0).abs() < 1e-13);
        assert!(simpson(&samples[..20], h).is_err());
    }

    #[test]
    fn rejects_odd_interval_count() {
        let traj = baseline_trajectory([0.0; 3], [0.5; 3], &[], KnotGrid::default()).unwrap();
        let opts = EnergyOptions { step: 0.01, power_mode: PowerMode::Abs };
        let err = energy_between(&ArmParams::<f64>::canonical(), &traj, 0.0, 0.03, &opts).unwrap_err();
        assert!(matches!(err, Error::OddIntervalCount(3)));
    }

    #[test]
    fn additive_over_subintervals() {
        let arm = ArmParams::<f64>::canonical();
        let traj = baseline_trajectory([-0.5, 0.3, 0.2], [0.6, -0.4, 0.9], &[], KnotGrid::default()).unwrap();
        let opts = EnergyOptions::default();
        let total = trajectory_energy(&arm, &traj).unwrap();
        for tm in [0.02, 7.5, 15.0, 21.38, 29.98] {
            let left = energy_between(&arm, &traj, 0.0, tm, &opts).unwrap();
            let right = energy_between(&arm, &traj, tm, 30.0, &opts).unwrap();
            let sum = left.total_energy + right.total_energy;
            assert!((sum - total.total_energy).abs() <= 1e-8 * total.total_energy);
        }
    }

    #[test]
    fn total_is_sum_of_joints_and_non_negative() {
        let arm = ArmParams::<f64>::canonical();
        let traj = baseline_trajectory([-0.5, 0.3, 0.2], [0.6, -0.4, 0.9], &[], KnotGrid::default()).unwrap();
        for mode in [PowerMode::Abs, PowerMode::Clamp] {
            let r = trajectory_energy_with(&arm, &traj, &EnergyOptions { step: 0.01, power_mode: mode }).unwrap();
            let sum: f64 = r.per_joint_energy.iter().sum();
            assert!((sum - r.total_energy).abs() <= 1e-9);
            assert!(r.total_energy >= 0.0);
        }
    }

    #[test]
    fn refinement_is_stable() {
        let arm = ArmParams::<f64>::canonical();
        let traj = baseline_trajectory([-0.5, 0.3, 0.2], [0.6, -0.4, 0.9], &[], KnotGrid::default()).unwrap();
        let coarse = trajectory_energy(&arm, &traj).unwrap().total_energy;
        let fine = trajectory_energy_with(&arm, &traj, &EnergyOptions { step: 0.005, power_mode: PowerMode::Abs })
            .unwrap()
            .total_energy;
        assert!((coarse - fine).abs() <= 1e-6 * fine);
    }

    #[test]
    fn knot_gradient_matches_differenced_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut arm = ArmParams::<f64>::canonical();
        arm.joint_viscous_friction = [0.5, 0.3, 0.1];
        let base = baseline_trajectory([-1.0, 0.8, 0.5], [0.5, -1.2, 0.9], &[], KnotGrid::default()).unwrap();
        let mut knots = base.knots().to_vec();
        let n = knots.len();
        for knot in &mut knots[1..n - 1] {
            for v in knot.iter_mut() {
                *v += rng.gen_range(-0.1..0.1);
            }
        }
        let traj = fit_spline(*base.grid(), knots.clone()).unwrap();
        for power_mode in [PowerMode::Abs, PowerMode::Clamp] {
            let opts = EnergyOptions { power_mode, ..EnergyOptions::default() };
            let grad = energy_knot_gradient(&arm, &traj, &opts).unwrap();
            assert_eq!(grad.len(), 3 * (n - 2));
            let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let energy = |k: &[Vec3<f64>]| {
                let t = fit_spline(*base.grid(), k.to_vec()).unwrap();
                trajectory_energy_with(&arm, &t, &opts).unwrap().total_energy
            };
            let h = 1e-6;
            for m in 1..n - 1 {
                for j in 0..3 {
                    let (mut plus, mut minus) = (knots.clone(), knots.clone());
                    plus[m][j] += h;
                    minus[m][j] -= h;
                    let fd = (energy(&plus) - energy(&minus)) / (2.0 * h);
                    let g = grad[3 * (m - 1) + j];
                    assert!((g - fd).abs() <= 1e-5 * scale, "{power_mode:?} knot {m} joint {j}: {g} vs {fd}");
                }
            }
        }
    }
}
