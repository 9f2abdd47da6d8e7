use crate::constraints::{violation, ConstraintIndexSet, ConstraintSpec};
use crate::dynamics::ArmParams;
use crate::energy::{energy_knot_gradient, trajectory_energy_with, EnergyOptions};
use crate::error::Result;
use crate::trajectory::{unpack, JointTrajectory};

/// Energy functional minimized by the approximating problem.
pub trait EnergyModel: Sync {
    fn energy(&self, traj: &JointTrajectory<f64>) -> Result<f64>;

    /// Gradient with respect to the interior knots, when the model has one.
    fn gradient(&self, _traj: &JointTrajectory<f64>) -> Option<Result<Vec<f64>>> {
        None
    }
}

/// Quadrature of joint power along the trajectory.
#[derive(Debug, Clone)]
pub struct QuadratureEnergy {
    pub arm: ArmParams<f64>,
    pub options: EnergyOptions<f64>,
}

impl EnergyModel for QuadratureEnergy {
    fn energy(&self, traj: &JointTrajectory<f64>) -> Result<f64> {
        Ok(trajectory_energy_with(&self.arm, traj, &self.options)?.total_energy)
    }

    fn gradient(&self, traj: &JointTrajectory<f64>) -> Option<Result<Vec<f64>>> {
        Some(energy_knot_gradient(&self.arm, traj, &self.options))
    }
}

/// A task: boundary knots and grid (from `template`), the continuous
/// constraint families indexed by time, and the finite constraints.
#[derive(Debug, Clone)]
pub struct TaskProblem<E = QuadratureEnergy> {
    pub arm: ArmParams<f64>,
    pub template: JointTrajectory<f64>,
    pub continuous: Vec<ConstraintSpec<f64>>,
    pub finite: Vec<ConstraintSpec<f64>>,
    pub energy: E,
}

impl<E: EnergyModel> TaskProblem<E> {
    pub fn trajectory(&self, x: &[f64]) -> Result<JointTrajectory<f64>> {
        unpack(x, &self.template)
    }

    pub fn dim(&self) -> usize {
        self.template.decision_dim()
    }

    /// Largest violation over the indexed continuous constraints and all finite ones.
    pub fn max_indexed_violation(
        &self,
        traj: &JointTrajectory<f64>,
        y: &ConstraintIndexSet,
    ) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for &(family, t) in y.iter() {
            worst = worst.max(violation(&self.continuous[family], &self.arm, traj, t)?);
        }
        for spec in &self.finite {
            worst = worst.max(violation(spec, &self.arm, traj, 0.0)?);
        }
        Ok(worst)
    }

    pub fn max_finite_violation(&self, traj: &JointTrajectory<f64>) -> Result<f64> {
        self.finite
            .iter()
            .try_fold(f64::NEG_INFINITY, |acc, spec| {
                Ok(acc.max(violation(spec, &self.arm, traj, 0.0)?))
            })
    }

    /// Σ max(0, g + backoff)² over `Y` and the finite constraints.
    pub fn penalty_sum(
        &self,
        traj: &JointTrajectory<f64>,
        y: &ConstraintIndexSet,
        backoff: f64,
    ) -> Result<f64> {
        let mut sum = 0.0;
        for &(family, t) in y.iter() {
            let g = violation(&self.continuous[family], &self.arm, traj, t)?;
            sum += (g + backoff).max(0.0).powi(2);
        }
        for spec in &self.finite {
            let g = violation(spec, &self.arm, traj, 0.0)?;
            sum += (g + backoff).max(0.0).powi(2);
        }
        Ok(sum)
    }

    /// Φ(x) = E(x) + μ Σ max(0, g + backoff)² over `Y` and the finite constraints.
    pub fn penalized_objective(
        &self,
        x: &[f64],
        y: &ConstraintIndexSet,
        penalty: f64,
        backoff: f64,
    ) -> Result<f64> {
        let traj = self.trajectory(x)?;
        Ok(self.energy.energy(&traj)? + penalty * self.penalty_sum(&traj, y, backoff)?)
    }
}
