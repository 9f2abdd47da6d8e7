use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings of the local reduction solver and its inner penalty solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// η: a constraint counts as satisfied when `g ≤ η`.
    pub violation_tolerance: f64,
    pub outer_max_iters: usize,
    pub penalty_initial: f64,
    /// Factor applied to μ when the inner solve ends infeasible on `Y_k`.
    pub penalty_growth: f64,
    pub max_penalty_escalations: usize,
    pub inner_max_iters: usize,
    pub inner_grad_tolerance: f64,
    /// Inner solve stops once Φ has improved by less than this fraction of
    /// |Φ| over the last `inner_stall_window` iterations.
    pub inner_stall_tolerance: f64,
    pub inner_stall_window: usize,
    /// Central-difference step for ∇Φ, in radians.
    pub gradient_fd_step: f64,
    /// Use the energy model's knot gradient and difference only the penalty.
    pub exact_energy_gradient: bool,
    pub armijo_c: f64,
    pub armijo_backtrack: f64,
    /// First trial step along the steepest-descent direction.
    pub armijo_initial_step: f64,
    /// Curvature pairs kept for the quasi-Newton direction; 0 means plain
    /// steepest descent.
    pub lbfgs_memory: usize,
    /// The penalty acts on `g + backoff`, so penalized solutions land
    /// slightly inside the feasible set.
    pub constraint_backoff: f64,
    /// Relative energy change below which three consecutive outer
    /// iterations count as stagnated.
    pub stagnation_tolerance: f64,
    /// Step of the grid used to re-verify a trajectory before it is accepted.
    pub verification_step: f64,
    pub joint_lower_bound: f64,
    pub joint_upper_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            violation_tolerance: 1e-6,
            outer_max_iters: 50,
            penalty_initial: 10.0,
            penalty_growth: 10.0,
            max_penalty_escalations: 5,
            inner_max_iters: 500,
            inner_grad_tolerance: 1e-5,
            inner_stall_tolerance: 1e-3,
            inner_stall_window: 10,
            gradient_fd_step: 1e-6,
            exact_energy_gradient: true,
            armijo_c: 1e-4,
            armijo_backtrack: 0.5,
            armijo_initial_step: 1e-2,
            lbfgs_memory: 10,
            constraint_backoff: 1e-3,
            stagnation_tolerance: 1e-4,
            verification_step: 0.01,
            joint_lower_bound: -std::f64::consts::PI,
            joint_upper_bound: std::f64::consts::PI,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("violation_tolerance", self.violation_tolerance),
            ("penalty_initial", self.penalty_initial),
            ("inner_grad_tolerance", self.inner_grad_tolerance),
            ("gradient_fd_step", self.gradient_fd_step),
            ("armijo_c", self.armijo_c),
            ("armijo_initial_step", self.armijo_initial_step),
            ("verification_step", self.verification_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.outer_max_iters < 1 || self.inner_max_iters < 1 || self.inner_stall_window < 1 {
            return Err(Error::InvalidParameter("iteration counts must be at least 1".into()));
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::InvalidParameter("penalty_growth must exceed 1".into()));
        }
        if !(self.armijo_backtrack > 0.0 && self.armijo_backtrack < 1.0) {
            return Err(Error::InvalidParameter("armijo_backtrack must lie in (0, 1)".into()));
        }
        if !(self.constraint_backoff >= 0.0) || !(self.inner_stall_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("tolerances must be non-negative".into()));
        }
        if !(self.joint_lower_bound < self.joint_upper_bound) {
            return Err(Error::InvalidParameter("joint bounds are empty".into()));
        }
        Ok(())
    }

    /// Largest weight the escalation schedule can reach.
    pub fn max_penalty(&self) -> f64 {
        let steps = i32::try_from(self.max_penalty_escalations).unwrap_or(i32::MAX);
        self.penalty_initial * self.penalty_growth.powi(steps)
    }

    pub fn grow_penalty(&self, penalty: f64) -> f64 {
        (penalty * self.penalty_growth).min(self.max_penalty())
    }
}
