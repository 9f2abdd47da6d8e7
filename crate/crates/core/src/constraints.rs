//! Constraint families `g(x, t) ≤ 0` on a trajectory: torque limits and
//! obstacle clearance indexed by continuous time, plus the finite precision
//! and reach checks.

use serde::{Deserialize, Serialize};

use crate::dynamics::{end_effector, inverse_dynamics, link_segments, ArmParams};
use crate::error::{Error, Result};
use crate::geometry::{distance, norm, segment_point_distance, Point2};
use crate::scalar::{Scalar, Vec3};
use crate::search::{scan_and_refine, ScanOptions};
use crate::trajectory::JointTrajectory;

/// Default precision tolerance ε in meters.
pub const DEFAULT_PRECISION_TOLERANCE: f64 = 1e-3;
/// Default obstacle safety margin δ in meters.
pub const DEFAULT_OBSTACLE_MARGIN: f64 = 0.05;

fn zero_point<T: Scalar>() -> Point2<T> {
    [T::zero(); 2]
}

/// Circular obstacle moving on `c(t) = center + velocity·(t − t0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Obstacle<T> {
    pub center: Point2<T>,
    #[serde(default = "zero_point")]
    pub velocity: Point2<T>,
    pub radius: T,
    pub margin: T,
}

impl<T: Scalar> Obstacle<T> {
    pub fn center_at(&self, t: T, t0: T) -> Point2<T> {
        let dt = t - t0;
        [
            self.center[0] + self.velocity[0] * dt,
            self.center[1] + self.velocity[1] * dt,
        ]
    }

    pub fn is_static(&self) -> bool {
        self.velocity == [T::zero(); 2]
    }

    /// `(r + δ) − min_link dist(link, c(t))` for the configuration `q`.
    pub fn clearance_violation(&self, params: &ArmParams<T>, q: &Vec3<T>, t: T, t0: T) -> T {
        let c = self.center_at(t, t0);
        let nearest = link_segments(params, q)
            .iter()
            .map(|seg| segment_point_distance(seg, c))
            .fold(T::infinity(), T::min);
        self.radius + self.margin - nearest
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub enum ConstraintSpec<T> {
    TorqueLimit { limits: Vec3<T> },
    ObstacleClearance(Obstacle<T>),
    PrecisionWaypoint { time: T, target: Point2<T>, tolerance: T },
    WorkspaceReach { target: Point2<T> },
}

impl<T: Scalar> ConstraintSpec<T> {
    /// Torque and obstacle families are indexed by time; the others are finite.
    pub fn is_continuous(&self) -> bool {
        matches!(self, Self::TorqueLimit { .. } | Self::ObstacleClearance(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TorqueLimit { .. } => "torque_limit",
            Self::ObstacleClearance(_) => "obstacle_clearance",
            Self::PrecisionWaypoint { .. } => "precision_waypoint",
            Self::WorkspaceReach { .. } => "workspace_reach",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::TorqueLimit { limits } if limits.iter().all(|&l| l > T::zero()) => Ok(()),
            Self::ObstacleClearance(o) if o.radius > T::zero() && o.margin >= T::zero() => Ok(()),
            Self::PrecisionWaypoint { tolerance, .. } if *tolerance > T::zero() => Ok(()),
            Self::WorkspaceReach { .. } => Ok(()),
            other => Err(Error::InvalidParameter(format!("invalid {} constraint", other.name()))),
        }
    }
}

/// Value of `g` for `spec` on `traj` at time `t` (feasible iff `≤ 0`).
/// Precision waypoints are evaluated at their own time and reach checks are
/// time independent, so `t` is ignored for those two.
pub fn violation<T: Scalar>(
    spec: &ConstraintSpec<T>,
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
    t: T,
) -> Result<T> {
    match spec {
        ConstraintSpec::TorqueLimit { .. } | ConstraintSpec::ObstacleClearance(_) => {
            let state = traj.eval(t)?;
            Ok(continuous_violation_at(spec, params, traj, t, &state.q, || state))
        }
        ConstraintSpec::PrecisionWaypoint { time, target, tolerance } => {
            let q = traj.eval(*time)?.q;
            Ok(distance(end_effector(params, &q), *target) - *tolerance)
        }
        ConstraintSpec::WorkspaceReach { target } => Ok(norm(*target) - params.reach()),
    }
}

#[inline]
fn continuous_violation_at<T: Scalar>(
    spec: &ConstraintSpec<T>,
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
    t: T,
    q: &Vec3<T>,
    state: impl FnOnce() -> crate::dynamics::JointState<T>,
) -> T {
    match spec {
        ConstraintSpec::TorqueLimit { limits } => {
            let tau = inverse_dynamics(params, &state()).tau;
            (0..3)
                .map(|i| tau[i].abs() - limits[i])
                .fold(T::neg_infinity(), T::max)
        }
        ConstraintSpec::ObstacleClearance(obstacle) => {
            obstacle.clearance_violation(params, q, t, traj.grid().t0)
        }
        _ => unreachable!("finite constraint in continuous evaluation"),
    }
}

/// Worst violation of a continuous family over the horizon: `(t*, g*)`.
pub fn max_violation_over_time<T: Scalar>(
    spec: &ConstraintSpec<T>,
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
) -> Result<(T, T)> {
    max_violation_over_time_with(spec, params, traj, &ScanOptions::default())
}

pub fn max_violation_over_time_with<T: Scalar>(
    spec: &ConstraintSpec<T>,
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
    options: &ScanOptions<T>,
) -> Result<(T, T)> {
    if !spec.is_continuous() {
        return Err(Error::NotContinuous(spec.name().into()));
    }
    let grid = *traj.grid();
    let f = |t: T| {
        let state = traj.eval_clamped(t);
        continuous_violation_at(spec, params, traj, t, &state.q, || state)
    };
    Ok(scan_and_refine(f, grid.t0, grid.tf, options))
}

/// Largest violation of a continuous family on a uniform check grid.
pub fn max_violation_on_grid<T: Scalar>(
    spec: &ConstraintSpec<T>,
    params: &ArmParams<T>,
    traj: &JointTrajectory<T>,
    step: T,
) -> Result<(T, T)> {
    if !spec.is_continuous() {
        return Err(Error::NotContinuous(spec.name().into()));
    }
    let grid = *traj.grid();
    let n = ((grid.tf - grid.t0) / step).round().to_usize().unwrap_or(0);
    let mut best = (grid.t0, T::neg_infinity());
    for k in 0..=n {
        let t = (grid.t0 + T::from_usize(k).unwrap() * step).min(grid.tf);
        let state = traj.eval_clamped(t);
        let g = continuous_violation_at(spec, params, traj, t, &state.q, || state);
        if g > best.1 {
            best = (t, g);
        }
    }
    Ok(best)
}

/// Finite exchange set `Y_k` of `(family id, time)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintIndexSet {
    entries: Vec<(usize, f64)>,
}

impl ConstraintIndexSet {
    /// Two indices closer than this in time are the same index.
    pub const TIME_RESOLUTION: f64 = 1e-6;

    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `(family, t)`; returns `false` if an equivalent index already exists.
    pub fn insert(&mut self, family: usize, t: f64) -> bool {
        let duplicate = self
            .entries
            .iter()
            .any(|&(f, s)| f == family && (s - t).abs() <= Self::TIME_RESOLUTION);
        if !duplicate {
            self.entries.push((family, t));
        }
        !duplicate
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, f64)> {
        self.entries.iter()
    }

    pub fn contains(&self, family: usize, t: f64) -> bool {
        self.entries
            .iter()
            .any(|&(f, s)| f == family && (s - t).abs() <= Self::TIME_RESOLUTION)
    }
}
