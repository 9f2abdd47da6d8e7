//! Local reduction (exchange) method for the semi-infinite program
//!
//! ```text
//! min_x E(x)  s.t.  g_j(x, t) ≤ 0  for every family j and every t ∈ [t0, tf]
//! ```
//!
//! Each outer iteration solves the finite approximating problem on the
//! index set `Y_k`, then the auxiliary problem locates the most violated
//! `(j, t)` which is added to `Y_k`. Iteration stops once the auxiliary
//! maximum is below η.

mod approx;
mod config;
mod problem;

pub use approx::{solve_approximating, ApproxOutcome, InnerStatus};
pub use config::SolverConfig;
pub use problem::{EnergyModel, QuadratureEnergy, TaskProblem};

use crate::constraints::{
    max_violation_on_grid, max_violation_over_time, ConstraintIndexSet, ConstraintSpec,
};
use crate::dynamics::ArmParams;
use crate::error::{Error, Result};
use crate::trajectory::{pack, JointTrajectory};

/// Most violated continuous constraint found by the auxiliary problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryResult {
    pub family: usize,
    pub time: f64,
    pub violation: f64,
}

/// Maximizes every continuous family over time and returns the worst one.
/// Ties go to the lowest family id, then the earliest time.
pub fn solve_auxiliary(
    params: &ArmParams<f64>,
    traj: &JointTrajectory<f64>,
    continuous: &[ConstraintSpec<f64>],
) -> Result<Option<AuxiliaryResult>> {
    let mut best: Option<AuxiliaryResult> = None;
    for (family, spec) in continuous.iter().enumerate() {
        let (time, violation) = max_violation_over_time(spec, params, traj)?;
        let better = match best {
            None => true,
            Some(b) => violation > b.violation,
        };
        if better {
            best = Some(AuxiliaryResult { family, time, violation });
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Every constraint is satisfied within η.
    Feasible,
    /// Energy stopped moving while a feasible incumbent was no worse.
    Stagnated,
    IterationLimit,
}

/// One outer iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub k: usize,
    /// |Y_k| used by the approximating problem.
    pub index_set_size: usize,
    /// E(x_{k+1}) in joules.
    pub energy: f64,
    /// Auxiliary maximum g* (or the finite violation if larger).
    pub max_violation: f64,
    pub added_family: Option<usize>,
    pub added_time: Option<f64>,
    pub penalty: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub records: Vec<OuterRecord>,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub total_inner_iterations: usize,
    pub initial_index_set_size: usize,
    /// Energy of the returned trajectory.
    pub final_energy: f64,
    /// Worst violation of the returned trajectory on the verification grid
    /// (continuous families) and at the finite constraints.
    pub final_max_violation: f64,
    /// The returned trajectory is the feasible incumbent rather than the
    /// last iterate.
    pub returned_incumbent: bool,
}

impl SolverReport {
    pub fn outer_iterations(&self) -> usize {
        self.records.len()
    }
}

/// `Y_0 = {t0, (t0 + tf)/2, tf}` for each continuous family.
pub fn initial_index_set(grid_t0: f64, grid_tf: f64, families: usize) -> ConstraintIndexSet {
    let mut y = ConstraintIndexSet::new();
    for family in 0..families {
        for t in [grid_t0, 0.5 * (grid_t0 + grid_tf), grid_tf] {
            y.insert(family, t);
        }
    }
    y
}

/// Worst violation of `traj` on the verification grid for continuous
/// families, together with the finite constraints. Returns the worst
/// continuous `(family, t, g)` and the overall maximum.
fn verify<E: EnergyModel>(
    problem: &TaskProblem<E>,
    traj: &JointTrajectory<f64>,
    step: f64,
) -> Result<(Option<AuxiliaryResult>, f64)> {
    let mut worst: Option<AuxiliaryResult> = None;
    for (family, spec) in problem.continuous.iter().enumerate() {
        let (time, violation) = max_violation_on_grid(spec, &problem.arm, traj, step)?;
        if worst.is_none_or(|w| violation > w.violation) {
            worst = Some(AuxiliaryResult { family, time, violation });
        }
    }
    let finite = problem.max_finite_violation(traj)?;
    let overall = worst.map_or(finite, |w| w.violation.max(finite));
    Ok((worst, overall))
}

struct Candidate {
    x: Vec<f64>,
    energy: f64,
    max_violation: f64,
}

/// Runs the exchange loop from `initial` (usually the baseline).
///
/// The best verified-feasible point seen (including `initial`) is kept as
/// the incumbent and returned whenever the last iterate is infeasible or
/// uses more energy.
pub fn local_reduction_solve<E: EnergyModel>(
    problem: &TaskProblem<E>,
    initial: &JointTrajectory<f64>,
    config: &SolverConfig,
) -> Result<(JointTrajectory<f64>, SolverReport)> {
    config.validate()?;
    let eta = config.violation_tolerance;
    let grid = *problem.template.grid();
    let mut y = initial_index_set(grid.t0, grid.tf, problem.continuous.len());
    let initial_index_set_size = y.len();

    let mut x = pack(initial).0;
    let mut incumbent: Option<Candidate> = None;
    {
        let (_, overall) = verify(problem, initial, config.verification_step)?;
        if overall <= eta {
            incumbent = Some(Candidate {
                x: x.clone(),
                energy: problem.energy.energy(initial)?,
                max_violation: overall,
            });
        }
    }

    // each approximating solve starts from this floor and escalates from there
    let mut penalty = config.penalty_initial;
    let mut records: Vec<OuterRecord> = Vec::new();
    let mut total_inner = 0;
    let mut stop_reason = StopReason::IterationLimit;
    let mut last_feasible: Option<Candidate> = None;

    for k in 0..config.outer_max_iters {
        let outcome = solve_approximating(problem, &x, &y, penalty, config)?;
        total_inner += outcome.iterations;
        x = outcome.x;
        let traj = problem.trajectory(&x)?;
        let energy = problem.energy.energy(&traj)?;
        let aux = solve_auxiliary(&problem.arm, &traj, &problem.continuous)?;
        let finite = problem.max_finite_violation(&traj)?;
        let aux_violation = aux.map_or(f64::NEG_INFINITY, |a| a.violation);

        let mut record = OuterRecord {
            k,
            index_set_size: y.len(),
            energy,
            max_violation: aux_violation.max(finite),
            added_family: None,
            added_time: None,
            penalty: outcome.penalty,
            inner_iterations: outcome.iterations,
        };

        let mut exchange = aux.filter(|a| a.violation > eta);
        if exchange.is_none() {
            let (worst, overall) = verify(problem, &traj, config.verification_step)?;
            if overall <= eta {
                last_feasible = Some(Candidate { x: x.clone(), energy, max_violation: overall });
                records.push(record);
                stop_reason = StopReason::Feasible;
                break;
            }
            // the refined scan missed a peak the verification grid sees
            exchange = worst.filter(|w| w.violation > eta);
            if exchange.is_none() {
                // only finite constraints remain violated
                penalty = config.grow_penalty(penalty);
            }
        }
        if let Some(a) = exchange {
            if y.insert(a.family, a.time) {
                record.added_family = Some(a.family);
                record.added_time = Some(a.time);
            } else {
                penalty = config.grow_penalty(penalty);
            }
        }
        records.push(record);

        if stagnated(&records, config.stagnation_tolerance)
            && incumbent
                .as_ref()
                .is_some_and(|inc| inc.energy <= energy * (1.0 + config.stagnation_tolerance))
        {
            stop_reason = StopReason::Stagnated;
            break;
        }
    }

    let (chosen, returned_incumbent) = match (last_feasible, incumbent) {
        (Some(last), Some(inc)) if inc.energy < last.energy => (inc, true),
        (Some(last), _) => (last, false),
        (None, Some(inc)) => (inc, true),
        (None, None) => {
            let traj = problem.trajectory(&x)?;
            let energy = problem.energy.energy(&traj)?;
            let (_, overall) = verify(problem, &traj, config.verification_step)?;
            (Candidate { x: x.clone(), energy, max_violation: overall }, false)
        }
    };

    let converged = match stop_reason {
        StopReason::Feasible | StopReason::Stagnated => true,
        StopReason::IterationLimit => false,
    };
    if converged && chosen.max_violation > eta + 1e-8 {
        return Err(Error::Inconsistent(format!(
            "claimed convergence but verification violation is {:e}",
            chosen.max_violation
        )));
    }
    let traj = problem.trajectory(&chosen.x)?;
    let report = SolverReport {
        records,
        converged,
        stop_reason,
        total_inner_iterations: total_inner,
        initial_index_set_size,
        final_energy: chosen.energy,
        final_max_violation: chosen.max_violation,
        returned_incumbent,
    };
    Ok((traj, report))
}

fn stagnated(records: &[OuterRecord], tolerance: f64) -> bool {
    if records.len() < 3 {
        return false;
    }
    let recent = &records[records.len() - 3..];
    let (lo, hi) = recent
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.energy), hi.max(r.energy)));
    hi - lo <= tolerance * hi.abs().max(1e-12)
}
