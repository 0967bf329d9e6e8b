//! Minimum-time trajectory optimization for a dual-arm robot tracking a
//! desired relative Cartesian path.
//!
//! Joint trajectories are polynomials in the path parameter. A
//! model-based reverse-diffusion sampler searches a box-bounded latent space
//! that maps affinely onto the polynomial coefficients; the bounds are
//! chosen so every candidate respects the joint position limits. Candidates
//! are scored by their velocity-limited traversal time plus an adaptively
//! weighted penalty on the relative-pose tracking error.
//!
//! The crate-level `examples/` directory has one runnable program per
//! capability; the `mbd-dualarm` binary wraps scenario files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod error;
pub mod kinematics;
pub mod mbd;
pub mod objective;
pub mod problem;
mod rng;
pub mod runner;
pub mod scenario;
pub mod trace;
pub mod trajectory_param;

pub use error::{Error, Result};
pub use problem::Problem;
