//! Task catalog (no, static and moving obstacles), scenario validation and
//! the before/after energy experiment.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSpec, Obstacle, DEFAULT_OBSTACLE_MARGIN, DEFAULT_PRECISION_TOLERANCE};
use crate::dynamics::{elbow_up_ik, ArmParams};
use crate::energy::{trajectory_energy_with, EnergyOptions, PowerMode};
use crate::error::{Error, Result};
use crate::geometry::{norm, segment_point_distance, Point2, Segment};
use crate::scalar::Vec3;
use crate::sip::{local_reduction_solve, QuadratureEnergy, SolverConfig, SolverReport, TaskProblem};
use crate::trajectory::{baseline_trajectory, JointTrajectory, JointWaypoint, KnotGrid};

fn default_tolerance() -> f64 {
    DEFAULT_PRECISION_TOLERANCE
}

/// End-effector target. Its joint configuration comes from [`elbow_up_ik`]
/// with the last link at `orientation`, which defaults to the radial
/// direction `atan2(y, x)` of the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub point: Point2<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<f64>,
}

impl Target {
    pub fn new(point: Point2<f64>) -> Self {
        Self { point, orientation: None }
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
            .unwrap_or_else(|| self.point[1].atan2(self.point[0]))
    }

    pub fn joint_configuration(&self, arm: &ArmParams<f64>) -> Option<Vec3<f64>> {
        elbow_up_ik(arm, self.point, self.orientation())
    }
}

/// Intermediate end-effector waypoint that must be met within `tolerance` at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViaPoint {
    pub time: f64,
    pub point: Point2<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl ViaPoint {
    pub fn new(time: f64, point: Point2<f64>) -> Self {
        Self { time, point, orientation: None, tolerance: DEFAULT_PRECISION_TOLERANCE }
    }

    pub fn target(&self) -> Target {
        Target { point: self.point, orientation: self.orientation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub arm: ArmParams<f64>,
    #[serde(default)]
    pub grid: KnotGrid<f64>,
    pub start_q: Vec3<f64>,
    pub goal: Target,
    #[serde(default)]
    pub vias: Vec<ViaPoint>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle<f64>>,
}

/// A reason a scenario cannot be run.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioIssue {
    InvalidArm(String),
    InvalidGrid(String),
    StartOutOfRange,
    /// A target lies beyond the reach constraint `|p| ≤ Σ L_i`.
    Unreachable { what: String, distance: f64, reach: f64 },
    NoInverseKinematics { what: String },
    WaypointTime { index: usize, time: f64 },
    WaypointOrder { index: usize },
    InvalidTolerance { index: usize },
    InvalidObstacle { index: usize },
    BaseCollision { index: usize },
    BoundaryCollision { index: usize, at: &'static str },
}

impl fmt::Display for ScenarioIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidArm(msg) => write!(f, "arm: {msg}"),
            Self::InvalidGrid(msg) => write!(f, "grid: {msg}"),
            Self::StartOutOfRange => write!(f, "start_q: joint angle outside [-pi, pi]"),
            Self::Unreachable { what, distance, reach } => write!(
                f,
                "reach constraint violated by {what}: distance {distance} exceeds reach {reach}"
            ),
            Self::NoInverseKinematics { what } => {
                write!(f, "{what}: no elbow-up inverse kinematics solution")
            }
            Self::WaypointTime { index, time } => {
                write!(f, "vias[{index}]: time {time} not in (t0, tf]")
            }
            Self::WaypointOrder { index } => write!(f, "vias[{index}]: times must increase"),
            Self::InvalidTolerance { index } => write!(f, "vias[{index}]: tolerance must be positive"),
            Self::InvalidObstacle { index } => {
                write!(f, "obstacles[{index}]: radius must be positive and margin non-negative")
            }
            Self::BaseCollision { index } => {
                write!(f, "obstacles[{index}]: obstacle contains the arm base")
            }
            Self::BoundaryCollision { index, at } => {
                write!(f, "obstacles[{index}]: arm collides at the {at} configuration")
            }
        }
    }
}

/// Checks reach, waypoint ordering, obstacle geometry and boundary clearance.
pub fn validate_scenario(scenario: &Scenario) -> std::result::Result<(), Vec<ScenarioIssue>> {
    let mut issues = Vec::new();
    let arm = &scenario.arm;
    if let Err(e) = arm.validate() {
        issues.push(ScenarioIssue::InvalidArm(e.to_string()));
        return Err(issues);
    }
    if let Err(e) = scenario.grid.validate() {
        issues.push(ScenarioIssue::InvalidGrid(e.to_string()));
        return Err(issues);
    }
    let grid = &scenario.grid;
    let reach = arm.reach();
    if scenario
        .start_q
        .iter()
        .any(|q| !q.is_finite() || q.abs() > std::f64::consts::PI)
    {
        issues.push(ScenarioIssue::StartOutOfRange);
    }

    let mut check_target = |what: String, target: &Target| -> Option<Vec3<f64>> {
        let distance = norm(target.point);
        if !(distance <= reach - 1e-9) {
            issues.push(ScenarioIssue::Unreachable { what, distance, reach });
            return None;
        }
        let q = target.joint_configuration(arm);
        if q.is_none() {
            issues.push(ScenarioIssue::NoInverseKinematics { what });
        }
        q
    };
    let goal_q = check_target("goal".into(), &scenario.goal);
    for (i, via) in scenario.vias.iter().enumerate() {
        check_target(format!("vias[{i}]"), &via.target());
    }

    let mut previous = grid.t0;
    for (index, via) in scenario.vias.iter().enumerate() {
        if !(via.time > grid.t0 && via.time <= grid.tf) {
            issues.push(ScenarioIssue::WaypointTime { index, time: via.time });
        } else if via.time <= previous && index > 0 {
            issues.push(ScenarioIssue::WaypointOrder { index });
        }
        if !(via.tolerance > 0.0) {
            issues.push(ScenarioIssue::InvalidTolerance { index });
        }
        previous = via.time;
    }

    for (index, obstacle) in scenario.obstacles.iter().enumerate() {
        if !(obstacle.radius > 0.0 && obstacle.margin >= 0.0) {
            issues.push(ScenarioIssue::InvalidObstacle { index });
            continue;
        }
        let path = Segment::new(
            obstacle.center_at(grid.t0, grid.t0),
            obstacle.center_at(grid.tf, grid.t0),
        );
        if segment_point_distance(&path, [0.0, 0.0]) <= obstacle.radius {
            issues.push(ScenarioIssue::BaseCollision { index });
        }
        if obstacle.clearance_violation(arm, &scenario.start_q, grid.t0, grid.t0) > 0.0 {
            issues.push(ScenarioIssue::BoundaryCollision { index, at: "start" });
        }
        if let Some(q) = goal_q {
            if obstacle.clearance_violation(arm, &q, grid.tf, grid.t0) > 0.0 {
                issues.push(ScenarioIssue::BoundaryCollision { index, at: "goal" });
            }
        }
    }

    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

fn ensure_valid(scenario: &Scenario) -> Result<()> {
    validate_scenario(scenario).map_err(|issues| Error::InvalidScenario {
        name: scenario.name.clone(),
        issues: issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
    })
}

impl Scenario {
    pub fn goal_q(&self) -> Result<Vec3<f64>> {
        self.goal
            .joint_configuration(&self.arm)
            .ok_or_else(|| Error::InvalidParameter("goal has no inverse kinematics solution".into()))
    }

    /// Joint-space interpolation through start, via configurations and goal.
    pub fn baseline(&self) -> Result<JointTrajectory<f64>> {
        ensure_valid(self)?;
        let vias = self
            .vias
            .iter()
            .map(|v| {
                let q = v.target().joint_configuration(&self.arm).ok_or_else(|| {
                    Error::InvalidParameter("via point has no inverse kinematics solution".into())
                })?;
                Ok(JointWaypoint { time: v.time, q })
            })
            .collect::<Result<Vec<_>>>()?;
        baseline_trajectory(self.start_q, self.goal_q()?, &vias, self.grid)
    }

    /// Torque limits and obstacles as continuous families (torque first),
    /// via points as finite precision constraints.
    pub fn constraint_families(&self) -> (Vec<ConstraintSpec<f64>>, Vec<ConstraintSpec<f64>>) {
        let mut continuous = vec![ConstraintSpec::TorqueLimit { limits: self.arm.torque_limits }];
        continuous.extend(self.obstacles.iter().copied().map(ConstraintSpec::ObstacleClearance));
        let finite = self
            .vias
            .iter()
            .map(|v| ConstraintSpec::PrecisionWaypoint {
                time: v.time,
                target: v.point,
                tolerance: v.tolerance,
            })
            .collect();
        (continuous, finite)
    }

    pub fn problem(&self, power_mode: PowerMode) -> Result<TaskProblem> {
        let (continuous, finite) = self.constraint_families();
        Ok(TaskProblem {
            arm: self.arm,
            template: self.baseline()?,
            continuous,
            finite,
            energy: QuadratureEnergy {
                arm: self.arm,
                options: EnergyOptions { power_mode, ..EnergyOptions::default() },
            },
        })
    }
}

pub const NO_OBSTACLES: &str = "no-obstacles";
pub const STATIC_OBSTACLES: &str = "static-obstacles";
pub const MOVING_OBSTACLES: &str = "moving-obstacles";

fn pick_and_place(name: &str, obstacles: Vec<Obstacle<f64>>) -> Scenario {
    use std::f64::consts::PI;
    Scenario {
        name: name.into(),
        arm: ArmParams::canonical(),
        grid: KnotGrid::default(),
        start_q: [-PI / 3.0, PI / 4.0, PI / 6.0],
        goal: Target::new([1.6, 0.8]),
        vias: vec![ViaPoint::new(15.0, [0.9, 1.6])],
        obstacles,
    }
}

/// The three catalog scenarios, in catalog order.
pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![
        pick_and_place(NO_OBSTACLES, vec![]),
        pick_and_place(
            STATIC_OBSTACLES,
            vec![Obstacle {
                center: [2.2, -0.8],
                velocity: [0.0, 0.0],
                radius: 0.2,
                margin: DEFAULT_OBSTACLE_MARGIN,
            }],
        ),
        pick_and_place(
            MOVING_OBSTACLES,
            vec![Obstacle {
                center: [1.8, -0.2],
                velocity: [-0.04, 0.02],
                radius: 0.2,
                margin: DEFAULT_OBSTACLE_MARGIN,
            }],
        ),
    ]
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

/// Solver settings plus the power accounting used for energies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub solver: SolverConfig,
    pub power_mode: PowerMode,
}

/// One row of the before/after comparison.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub name: String,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `100 (before − after) / before`, or 0 when `before` is 0.
    pub reduction_pct: f64,
    pub converged: bool,
    pub report: SolverReport,
    pub baseline: JointTrajectory<f64>,
    pub optimized: JointTrajectory<f64>,
}

pub fn reduction_pct(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        0.0
    } else {
        100.0 * (before - after) / before
    }
}

pub fn baseline_energy(scenario: &Scenario, power_mode: PowerMode) -> Result<f64> {
    let options = EnergyOptions { power_mode, ..EnergyOptions::default() };
    Ok(trajectory_energy_with(&scenario.arm, &scenario.baseline()?, &options)?.total_energy)
}

/// Baseline energy, local reduction solve, optimized energy.
pub fn run_scenario(scenario: &Scenario, config: &ExperimentConfig) -> Result<ScenarioResult> {
    let problem = scenario.problem(config.power_mode)?;
    let baseline = problem.template.clone();
    optimize_from(scenario, &problem, &baseline, config)
}

/// Re-runs the solver starting from `initial` instead of the baseline.
pub fn rerun_from(
    scenario: &Scenario,
    initial: &JointTrajectory<f64>,
    config: &ExperimentConfig,
) -> Result<ScenarioResult> {
    let problem = scenario.problem(config.power_mode)?;
    optimize_from(scenario, &problem, initial, config)
}

fn optimize_from(
    scenario: &Scenario,
    problem: &TaskProblem,
    initial: &JointTrajectory<f64>,
    config: &ExperimentConfig,
) -> Result<ScenarioResult> {
    let options = EnergyOptions { power_mode: config.power_mode, ..EnergyOptions::default() };
    let energy_before = trajectory_energy_with(&scenario.arm, initial, &options)?.total_energy;
    let (optimized, report) = local_reduction_solve(problem, initial, &config.solver)?;
    let energy_after = trajectory_energy_with(&scenario.arm, &optimized, &options)?.total_energy;
    Ok(ScenarioResult {
        name: scenario.name.clone(),
        energy_before,
        energy_after,
        reduction_pct: reduction_pct(energy_before, energy_after),
        converged: report.converged,
        report,
        baseline: initial.clone(),
        optimized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::max_violation_over_time;
    use crate::dynamics::{end_effector, inverse_dynamics};

    #[test]
    fn catalog_is_valid_and_ordered() {
        let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        assert_eq!(names, [NO_OBSTACLES, STATIC_OBSTACLES, MOVING_OBSTACLES]);
        for s in builtin_scenarios() {
            assert_eq!(validate_scenario(&s), Ok(()), "{}", s.name);
            assert_eq!(builtin_scenario(&s.name), Some(s));
        }
        assert_eq!(builtin_scenario("elsewhere"), None);
    }

    #[test]
    fn baseline_meets_boundary_and_via_targets() {
        let s = &builtin_scenarios()[0];
        let traj = s.baseline().unwrap();
        assert_eq!(traj.start(), s.start_q);
        let goal = end_effector(&s.arm, &traj.end());
        assert!((goal[0] - 1.6).abs() < 1e-12 && (goal[1] - 0.8).abs() < 1e-12);
        let via = end_effector(&s.arm, &traj.positions(15.0));
        assert!((via[0] - 0.9).abs() < 1e-12 && (via[1] - 1.6).abs() < 1e-12);
    }

    #[test]
    fn obstacle_baselines_are_infeasible_and_free_baseline_is_not() {
        for s in builtin_scenarios() {
            let traj = s.baseline().unwrap();
            let (continuous, _) = s.constraint_families();
            let torque = max_violation_over_time(&continuous[0], &s.arm, &traj).unwrap().1;
            assert!(torque <= 0.0, "{}: torque {torque}", s.name);
            if s.name == STATIC_OBSTACLES {
                let g = max_violation_over_time(&continuous[1], &s.arm, &traj).unwrap().1;
                assert!(g > 0.0);
            }
        }
    }

    #[test]
    fn unreachable_target_is_reported() {
        let mut s = builtin_scenarios()[0].clone();
        s.goal = Target::new([10.0, 0.0]);
        let issues = validate_scenario(&s).unwrap_err();
        assert!(matches!(issues[0], ScenarioIssue::Unreachable { .. }));
        assert!(issues[0].to_string().contains("reach constraint"));
        assert!(s.baseline().is_err());
    }

    #[test]
    fn reach_boundary_has_a_tolerance() {
        let mut s = builtin_scenarios()[0].clone();
        s.vias[0].point = [2.4, 0.0];
        assert!(validate_scenario(&s).is_err());
        s.vias[0].point = [2.4 - 1e-6, 0.0];
        assert_eq!(validate_scenario(&s), Ok(()));
    }

    #[test]
    fn obstacle_over_the_base_is_reported() {
        let mut s = builtin_scenarios()[1].clone();
        s.obstacles[0].center = [0.1, 0.05];
        let issues = validate_scenario(&s).unwrap_err();
        assert!(issues.contains(&ScenarioIssue::BaseCollision { index: 0 }));
    }

    #[test]
    fn moving_obstacle_sweeping_the_base_is_reported() {
        let mut s = builtin_scenarios()[2].clone();
        s.obstacles[0].center = [-1.5, -1.5];
        s.obstacles[0].velocity = [0.1, 0.1];
        let issues = validate_scenario(&s).unwrap_err();
        assert!(issues.contains(&ScenarioIssue::BaseCollision { index: 0 }));
    }

    #[test]
    fn waypoint_problems_are_all_listed() {
        let mut s = builtin_scenarios()[0].clone();
        s.vias = vec![
            ViaPoint::new(20.0, [0.9, 1.6]),
            ViaPoint::new(10.0, [0.9, 1.6]),
            ViaPoint { tolerance: 0.0, ..ViaPoint::new(31.0, [0.9, 1.6]) },
        ];
        let issues = validate_scenario(&s).unwrap_err();
        assert!(issues.contains(&ScenarioIssue::WaypointOrder { index: 1 }));
        assert!(issues.contains(&ScenarioIssue::WaypointTime { index: 2, time: 31.0 }));
        assert!(issues.contains(&ScenarioIssue::InvalidTolerance { index: 2 }));
    }

    #[test]
    fn via_at_final_time_is_allowed_but_not_at_start() {
        let mut s = builtin_scenarios()[0].clone();
        s.vias = vec![ViaPoint::new(30.0, [1.6, 0.8])];
        assert_eq!(validate_scenario(&s), Ok(()));
        s.vias = vec![ViaPoint::new(0.0, [1.6, 0.8])];
        assert!(validate_scenario(&s).is_err());
    }

    #[test]
    fn start_outside_joint_range_is_reported() {
        let mut s = builtin_scenarios()[0].clone();
        s.start_q[2] = 3.5;
        assert!(validate_scenario(&s).unwrap_err().contains(&ScenarioIssue::StartOutOfRange));
    }

    #[test]
    fn obstacle_on_the_start_pose_is_reported() {
        let mut s = builtin_scenarios()[1].clone();
        s.obstacles[0].center = end_effector(&s.arm, &s.start_q);
        let issues = validate_scenario(&s).unwrap_err();
        assert!(issues.contains(&ScenarioIssue::BoundaryCollision { index: 0, at: "start" }));
    }

    #[test]
    fn staying_put_costs_nothing() {
        let arm = ArmParams::canonical();
        let q = [0.3, -0.8, 0.4];
        let s = Scenario {
            name: "hold".into(),
            arm,
            grid: KnotGrid::default(),
            start_q: q,
            goal: Target { point: end_effector(&arm, &q), orientation: Some(q.iter().sum()) },
            vias: vec![],
            obstacles: vec![],
        };
        let goal_q = s.goal_q().unwrap();
        for (a, b) in goal_q.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = run_scenario(&s, &ExperimentConfig::default()).unwrap();
        assert!(r.energy_before.abs() < 1e-9);
        assert!(r.energy_after.abs() < 1e-9);
        assert_eq!(reduction_pct(0.0, 0.0), 0.0);
        assert!(r.converged);
    }

    #[test]
    fn reduction_is_relative_to_before() {
        assert!((reduction_pct(500.0, 455.0) - 9.0).abs() < 1e-12);
        assert!((reduction_pct(200.0, 250.0) + 25.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_energy_matches_fine_trapezoid() {
        let s = &builtin_scenarios()[0];
        let traj = s.baseline().unwrap();
        let h = 1e-4;
        let n = 300_000;
        let power = |k: usize| {
            let state = traj.eval_clamped(k as f64 * h);
            let tau = inverse_dynamics(&s.arm, &state).tau;
            (0..3).map(|j| (tau[j] * state.qdot[j]).abs()).sum::<f64>()
        };
        let oracle = h * (0.5 * (power(0) + power(n)) + (1..n).map(power).sum::<f64>());
        let e = baseline_energy(s, PowerMode::Abs).unwrap();
        assert!(((e - oracle) / oracle).abs() <= 1e-6, "{e} vs {oracle}");
        let clamp = baseline_energy(s, PowerMode::Clamp).unwrap();
        assert!(clamp > 0.0 && clamp < e);
    }

    #[test]
    fn scenarios_round_trip_through_json() {
        for s in builtin_scenarios() {
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<Scenario>(&text).unwrap(), s);
        }
    }
}
