//! Traversal time `V`, relative Cartesian error `E`, the adaptive cost
//! `R = V + λ̃ (E − ε)` and the penalty-weight update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{relative_pose_unchecked, ArmModel, DesiredPath};
use crate::problem::Problem;
use crate::trajectory_param::{CoefficientVector, JointTrajectory};

/// Direction of the penalty-weight step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySign {
    /// `λ' = max(0, λ + γ (E − ε))`: the weight grows while the error
    /// constraint is violated.
    #[default]
    DualAscent,
    /// `λ' = max(0, λ − γ (E − ε))`.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    /// Cartesian error tolerance `ε`.
    pub epsilon: f64,
    /// Penalty step size `γ ∈ (0, 1)`.
    pub gamma: f64,
    /// Initial penalty weight `λ̃`.
    pub lambda0: f64,
    /// Meters per radian used to fold the rotation error into `E`.
    pub orientation_weight: f64,
    #[serde(default)]
    pub penalty_sign: PenaltySign,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            gamma: 0.1,
            lambda0: 1.0,
            orientation_weight: 1.0,
            penalty_sign: PenaltySign::DualAscent,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Validation("epsilon must be finite and >= 0".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Validation("gamma must lie in (0, 1)".into()));
        }
        if !(self.lambda0 >= 0.0) || !self.lambda0.is_finite() {
            return Err(Error::Validation("lambda0 must be finite and >= 0".into()));
        }
        if !(self.orientation_weight >= 0.0) || !self.orientation_weight.is_finite() {
            return Err(Error::Validation("orientation_weight must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// One objective evaluation. `r == v + lambda * (e - epsilon)` for the
/// `lambda` it was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub v: f64,
    pub e: f64,
    pub r: f64,
    pub lambda: f64,
    pub feasible: bool,
}

impl Evaluation {
    pub fn new(v: f64, e: f64, lambda: f64, cfg: &ObjectiveConfig) -> Self {
        Self {
            v,
            e,
            r: v + lambda * (e - cfg.epsilon),
            lambda,
            feasible: e <= cfg.epsilon,
        }
    }
}

/// Anything the samplers can score: a cost over the latent box.
pub trait LatentObjective: Sync {
    fn dim(&self) -> usize;
    fn config(&self) -> &ObjectiveConfig;
    /// `y` must already lie in `[-1, 1]^dim`.
    fn evaluate(&self, y: &[f64], lambda: f64) -> Evaluation;
}

/// Minimum time to traverse the sampled joint path when each joint obeys
/// `|q̇_j| ≤ v̄_j` and every segment is crossed at constant joint rates:
/// `Σ_i max_j |q_{i+1,j} − q_{i,j}| / v̄_j`.
pub fn min_time(traj: &JointTrajectory, v_limits: &[f64]) -> Result<f64> {
    if v_limits.len() != traj.n_joints() {
        return Err(Error::ShapeMismatch {
            what: "velocity limits",
            expected: traj.n_joints(),
            got: v_limits.len(),
        });
    }
    if let Some(j) = v_limits.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Domain(format!("velocity limit of joint {j} must be positive")));
    }
    Ok(min_time_unchecked(traj, v_limits))
}

pub(crate) fn min_time_unchecked(traj: &JointTrajectory, v_limits: &[f64]) -> f64 {
    let q = traj.matrix();
    let mut total = 0.0;
    for i in 1..q.nrows() {
        let mut seg: f64 = 0.0;
        for (j, v) in v_limits.iter().enumerate() {
            seg = seg.max((q[(i, j)] - q[(i - 1, j)]).abs() / v);
        }
        total += seg;
    }
    total
}

/// Translation distance and rotation angle at every path sample.
pub fn path_errors(
    traj: &JointTrajectory,
    arm1: &ArmModel,
    arm2: &ArmModel,
    path: &DesiredPath,
) -> Result<Vec<(f64, f64)>> {
    check_shapes(traj, arm1, arm2, path)?;
    Ok(path_errors_unchecked(traj, arm1, arm2, path))
}

fn path_errors_unchecked(
    traj: &JointTrajectory,
    arm1: &ArmModel,
    arm2: &ArmModel,
    path: &DesiredPath,
) -> Vec<(f64, f64)> {
    let q = traj.matrix();
    let n1 = arm1.dof();
    let mut row = vec![0.0; q.ncols()];
    path.poses()
        .iter()
        .enumerate()
        .map(|(i, desired)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = q[(i, j)];
            }
            relative_pose_unchecked(arm1, arm2, &row[..n1], &row[n1..]).error_to(desired)
        })
        .collect()
}

fn check_shapes(traj: &JointTrajectory, arm1: &ArmModel, arm2: &ArmModel, path: &DesiredPath) -> Result<()> {
    if traj.n_joints() != arm1.dof() + arm2.dof() {
        return Err(Error::ShapeMismatch {
            what: "trajectory joints vs arm dof",
            expected: arm1.dof() + arm2.dof(),
            got: traj.n_joints(),
        });
    }
    if traj.n_samples() != path.len() {
        return Err(Error::ShapeMismatch {
            what: "trajectory samples vs path length",
            expected: path.len(),
            got: traj.n_samples(),
        });
    }
    Ok(())
}

/// `E = max_i (‖Δt_i‖ + w ‖log ΔR_i‖)`.
pub fn cartesian_error(
    traj: &JointTrajectory,
    arm1: &ArmModel,
    arm2: &ArmModel,
    path: &DesiredPath,
    orientation_weight: f64,
) -> Result<f64> {
    check_shapes(traj, arm1, arm2, path)?;
    Ok(cartesian_error_unchecked(traj, arm1, arm2, path, orientation_weight))
}

pub(crate) fn cartesian_error_unchecked(
    traj: &JointTrajectory,
    arm1: &ArmModel,
    arm2: &ArmModel,
    path: &DesiredPath,
    orientation_weight: f64,
) -> f64 {
    path_errors_unchecked(traj, arm1, arm2, path)
        .into_iter()
        .map(|(dt, dr)| dt + orientation_weight * dr)
        .fold(0.0, f64::max)
}

/// Scores coefficients `θ` under penalty weight `lambda`.
pub fn adaptive_cost(theta: &CoefficientVector, lambda: f64, problem: &Problem) -> Evaluation {
    problem.evaluate_theta(theta, lambda)
}

/// Next penalty weight after observing error `e`; never negative.
pub fn update_penalty(lambda: f64, e: f64, cfg: &ObjectiveConfig) -> f64 {
    let step = cfg.gamma * (e - cfg.epsilon);
    let next = match cfg.penalty_sign {
        PenaltySign::DualAscent => lambda + step,
        PenaltySign::PaperLiteral => lambda - step,
    };
    next.max(0.0)
}
