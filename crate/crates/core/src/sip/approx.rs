//! Approximating problem: quadratic-penalty minimization of the energy
//! subject to the constraints indexed by `Y_k`, using the energy model's
//! knot gradient (or central differences) and an Armijo backtracking line search along a limited-memory
//! quasi-Newton direction, projected onto the joint bounds.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::constraints::ConstraintIndexSet;
use crate::error::Result;

use super::config::SolverConfig;
use super::problem::{EnergyModel, TaskProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    /// ‖∇Φ‖∞ fell below the gradient tolerance.
    GradientTolerance,
    /// Φ stopped improving over the stall window.
    Stalled,
    IterationLimit,
    /// The line search could not decrease Φ from the current point.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct ApproxOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    /// μ in effect at exit (after any escalations).
    pub penalty: f64,
    pub iterations: usize,
    pub escalations: usize,
    pub status: InnerStatus,
    /// Largest raw violation over `Y` and the finite constraints at exit.
    pub indexed_violation: f64,
}

struct Evaluator<'a, E> {
    problem: &'a TaskProblem<E>,
    y: &'a ConstraintIndexSet,
    penalty: f64,
    config: &'a SolverConfig,
}

impl<E: EnergyModel> Evaluator<'_, E> {
    fn phi(&self, x: &[f64]) -> f64 {
        self.problem
            .penalized_objective(x, self.y, self.penalty, self.config.constraint_backoff)
            .ok()
            .filter(|v| v.is_finite())
            .unwrap_or(f64::INFINITY)
    }

    /// ∇Φ. With an exact energy gradient only the penalty term is
    /// differenced. Coordinates are independent, so the parallel map is
    /// bit-identical to a sequential one.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let backoff = self.config.constraint_backoff;
        let exact = if self.config.exact_energy_gradient {
            self.problem
                .trajectory(x)
                .ok()
                .and_then(|traj| self.problem.energy.gradient(&traj))
                .and_then(|g| g.ok())
        } else {
            None
        };
        let Some(energy_grad) = exact else {
            return self.central_difference(x, |probe| self.phi(probe));
        };
        let penalty_term = |probe: &[f64]| {
            self.problem
                .trajectory(probe)
                .and_then(|traj| self.problem.penalty_sum(&traj, self.y, backoff))
                .map(|v| self.penalty * v)
                .unwrap_or(f64::INFINITY)
        };
        self.central_difference(x, penalty_term)
            .into_iter()
            .zip(energy_grad)
            .map(|(p, e)| p + e)
            .collect()
    }

    fn central_difference(&self, x: &[f64], f: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
        let h = self.config.gradient_fd_step;
        (0..x.len())
            .into_par_iter()
            .map(|i| {
                let mut probe = x.to_vec();
                probe[i] = x[i] + h;
                let plus = f(&probe);
                probe[i] = x[i] - h;
                let minus = f(&probe);
                (plus - minus) / (2.0 * h)
            })
            .collect()
    }

    fn project(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = v.clamp(self.config.joint_lower_bound, self.config.joint_upper_bound);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Two-loop recursion: returns `−H ∇Φ` from the stored `(s, y)` pairs.
fn lbfgs_direction(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    if let Some((s, y)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y), (a, rho)) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

struct InnerRun {
    x: Vec<f64>,
    objective: f64,
    iterations: usize,
    status: InnerStatus,
}

fn minimize<E: EnergyModel>(eval: &Evaluator<'_, E>, x0: Vec<f64>) -> InnerRun {
    let cfg = eval.config;
    let mut x = x0;
    eval.project(&mut x);
    let mut f = eval.phi(&x);
    let mut grad = eval.gradient(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut recent: VecDeque<f64> = VecDeque::from([f]);

    for iter in 0..cfg.inner_max_iters {
        if inf_norm(&grad) <= cfg.inner_grad_tolerance {
            return InnerRun { x, objective: f, iterations: iter, status: InnerStatus::GradientTolerance };
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let quasi_newton = attempt == 0 && cfg.lbfgs_memory > 0 && !history.is_empty();
            if attempt == 1 && !(cfg.lbfgs_memory > 0 && !history.is_empty()) {
                break;
            }
            let mut direction = if quasi_newton {
                lbfgs_direction(&grad, &history)
            } else {
                grad.iter().map(|g| -g).collect()
            };
            if dot(&direction, &grad) >= 0.0 {
                direction = grad.iter().map(|g| -g).collect();
            }
            let mut step = if quasi_newton { 1.0 } else { cfg.armijo_initial_step };
            for _ in 0..60 {
                let mut trial: Vec<f64> = x.iter().zip(&direction).map(|(xi, di)| xi + step * di).collect();
                eval.project(&mut trial);
                let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let decrease = dot(&grad, &moved);
                if decrease >= 0.0 {
                    break;
                }
                let f_trial = eval.phi(&trial);
                if f_trial <= f + cfg.armijo_c * decrease {
                    accepted = Some((trial, f_trial));
                    break;
                }
                step *= cfg.armijo_backtrack;
            }
            if accepted.is_some() {
                break;
            }
            history.clear();
        }

        let Some((x_new, f_new)) = accepted else {
            return InnerRun { x, objective: f, iterations: iter, status: InnerStatus::LineSearchFailed };
        };
        let grad_new = eval.gradient(&x_new);
        if cfg.lbfgs_memory > 0 {
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() {
                if history.len() == cfg.lbfgs_memory {
                    history.pop_front();
                }
                history.push_back((s, yv));
            }
        }
        x = x_new;
        f = f_new;
        grad = grad_new;
        recent.push_back(f);
        if recent.len() > cfg.inner_stall_window + 1 {
            recent.pop_front();
        }
        let window_start = recent[0];
        if recent.len() == cfg.inner_stall_window + 1
            && window_start - f <= cfg.inner_stall_tolerance * f.abs().max(1.0)
        {
            return InnerRun { x, objective: f, iterations: iter + 1, status: InnerStatus::Stalled };
        }
    }
    InnerRun { x, objective: f, iterations: cfg.inner_max_iters, status: InnerStatus::IterationLimit }
}

/// Solves the k-th approximating problem starting from `x_init` with
/// penalty weight `penalty`. When the result still violates an indexed or
/// finite constraint by more than η, μ is multiplied by `penalty_growth` and
/// the solve is repeated, up to `max_penalty_escalations` times.
pub fn solve_approximating<E: EnergyModel>(
    problem: &TaskProblem<E>,
    x_init: &[f64],
    y: &ConstraintIndexSet,
    penalty: f64,
    config: &SolverConfig,
) -> Result<ApproxOutcome> {
    let mut penalty = penalty;
    let mut x = x_init.to_vec();
    let mut iterations = 0;
    let mut escalations = 0;
    loop {
        let eval = Evaluator { problem, y, penalty, config };
        let run = minimize(&eval, x);
        iterations += run.iterations;
        x = run.x;
        let traj = problem.trajectory(&x)?;
        let indexed_violation = problem.max_indexed_violation(&traj, y)?;
        if indexed_violation <= config.violation_tolerance
            || escalations == config.max_penalty_escalations
            || penalty >= config.max_penalty()
        {
            return Ok(ApproxOutcome {
                x,
                objective: run.objective,
                penalty,
                iterations,
                escalations,
                status: run.status,
                indexed_violation,
            });
        }
        penalty = config.grow_penalty(penalty);
        escalations += 1;
    }
}
