//! Energy-optimal trajectory planning for a planar three-joint arm.
//!
//! The arm model, spline trajectories, energy quadrature and constraint
//! kernels are generic over the scalar type; the solver, scenarios and I/O
//! work in `f64`.

pub mod cli;
pub mod constraints;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod scalar;
pub mod scenarios;
pub mod search;
pub mod sip;
pub mod trajectory;

pub use error::{Error, Result};

pub type Arm = dynamics::ArmParams<f64>;
pub type State = dynamics::JointState<f64>;
pub type Trajectory = trajectory::JointTrajectory<f64>;
pub type Grid = trajectory::KnotGrid<f64>;
pub type Constraint = constraints::ConstraintSpec<f64>;

pub type ArmF32 = dynamics::ArmParams<f32>;
pub type StateF32 = dynamics::JointState<f32>;
pub type TrajectoryF32 = trajectory::JointTrajectory<f32>;
