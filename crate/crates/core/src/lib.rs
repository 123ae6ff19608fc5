//! Log-linear dynamical systems: positive-valued systems whose update is a
//! monomial in the current state (and inputs),
//!
//! ```text
//! x[t+1]_i = c_i · Π_j x[t]_j^A_ij · Π_k u[t]_k^B_ik,
//! ```
//!
//! which become affine under `x̂ = ln x`: `x̂[t+1] = A x̂[t] + B û[t] + ĉ`.
//! The crate simulates such systems (optionally with multiplicative
//! log-normal noise), identifies `A`, `B`, `c` from data by least squares and
//! solves finite-horizon quadratic tracking problems in log space.

pub mod cli;
pub mod control;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod predict;
pub mod simulate;
pub mod sysid;

pub use control::{
    objective_value, reduced_gradient, rollout_controlled, solve_control, ControlProblem,
    ControlSolution, InputBounds,
};
pub use error::{Error, Result};
pub use model::{
    exp_transform, log_offset, log_transform, ControlSequence, LogControlSequence, LogLinearModel,
    LogTrajectory, Trajectory,
};
pub use numerics::{least_squares, solve_linear, Matrix, Vector};
pub use predict::{free_run, log_rmse, one_step_predict};
pub use simulate::{fixed_point, sample_noise, simulate, step, step_log, NoiseSpec};
pub use sysid::{estimate_sigma, identify, identify_controlled, SysIdResult};
