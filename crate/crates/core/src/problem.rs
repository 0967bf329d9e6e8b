//! A fully prepared tracking problem: both arms, the desired relative path,
//! the basis, the objective settings and the latent exploration bounds.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kinematics::{
    fit_nominal_coefficients, inverse_kinematics_path, ArmModel, DesiredPath, IkOptions, IkPathResult,
};
use crate::objective::{cartesian_error_unchecked, min_time_unchecked, Evaluation, LatentObjective, ObjectiveConfig};
use crate::trajectory_param::{
    map_latent, reconstruct_with_basis, select_sigma, BasisConfig, CoefficientVector, ExplorationBounds,
    JointTrajectory,
};

#[derive(Debug, Clone)]
pub struct Problem {
    arm1: ArmModel,
    arm2: ArmModel,
    basis: BasisConfig,
    basis_matrix: DMatrix<f64>,
    path: DesiredPath,
    objective: ObjectiveConfig,
    bounds: ExplorationBounds,
    joint_limits: Vec<f64>,
    velocity_limits: Vec<f64>,
}

impl Problem {
    pub fn new(
        arm1: ArmModel,
        arm2: ArmModel,
        basis: BasisConfig,
        path: DesiredPath,
        objective: ObjectiveConfig,
        bounds: ExplorationBounds,
    ) -> Result<Self> {
        objective.validate()?;
        let n = arm1.dof() + arm2.dof();
        if n == 0 {
            return Err(Error::Validation("the two arms have no joints".into()));
        }
        if path.len() != basis.n_samples() {
            return Err(Error::Validation(format!(
                "path length {} does not equal N+1 = {}",
                path.len(),
                basis.n_samples()
            )));
        }
        let shape = bounds.sigma().shape();
        if shape != (n, basis.d()) {
            return Err(Error::ShapeMismatch {
                what: "exploration bounds vs n x d",
                expected: n * basis.d(),
                got: shape.0 * shape.1,
            });
        }
        let joint_limits = [arm1.joint_limits(), arm2.joint_limits()].concat();
        let velocity_limits = [arm1.velocity_limits(), arm2.velocity_limits()].concat();
        Ok(Self {
            basis_matrix: basis.basis_matrix(),
            arm1,
            arm2,
            basis,
            path,
            objective,
            bounds,
            joint_limits,
            velocity_limits,
        })
    }

    /// Builds the problem around a given nominal, choosing `σ` from the
    /// joint limits.
    pub fn with_nominal(
        arm1: ArmModel,
        arm2: ArmModel,
        basis: BasisConfig,
        path: DesiredPath,
        objective: ObjectiveConfig,
        theta0: &CoefficientVector,
    ) -> Result<Self> {
        let limits = [arm1.joint_limits(), arm2.joint_limits()].concat();
        let bounds = select_sigma(theta0, &limits, &basis)?;
        Self::new(arm1, arm2, basis, path, objective, bounds)
    }

    /// Nominal initialization: IK along the desired path, least-squares
    /// polynomial fit, then exploration bounds from the joint limits. IK
    /// misses are returned to the caller rather than treated as fatal.
    pub fn initialize(
        arm1: ArmModel,
        arm2: ArmModel,
        basis: BasisConfig,
        path: DesiredPath,
        objective: ObjectiveConfig,
        q_init: &[f64],
        ik: &IkOptions,
    ) -> Result<(Self, IkPathResult)> {
        if path.len() != basis.n_samples() {
            return Err(Error::Validation(format!(
                "path length {} does not equal N+1 = {}",
                path.len(),
                basis.n_samples()
            )));
        }
        let ik_result = inverse_kinematics_path(&arm1, &arm2, &path, q_init, ik)?;
        let theta0 = fit_nominal_coefficients(&ik_result.q, &basis)?;
        let problem = Self::with_nominal(arm1, arm2, basis, path, objective, &theta0)?;
        Ok((problem, ik_result))
    }

    pub fn arm1(&self) -> &ArmModel {
        &self.arm1
    }

    pub fn arm2(&self) -> &ArmModel {
        &self.arm2
    }

    pub fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    pub fn path(&self) -> &DesiredPath {
        &self.path
    }

    pub fn objective(&self) -> &ObjectiveConfig {
        &self.objective
    }

    pub fn bounds(&self) -> &ExplorationBounds {
        &self.bounds
    }

    pub fn n_joints(&self) -> usize {
        self.joint_limits.len()
    }

    pub fn joint_limits(&self) -> &[f64] {
        &self.joint_limits
    }

    pub fn velocity_limits(&self) -> &[f64] {
        &self.velocity_limits
    }

    pub fn theta_of(&self, y: &[f64]) -> Result<CoefficientVector> {
        map_latent(y, &self.bounds)
    }

    pub fn trajectory(&self, theta: &CoefficientVector) -> JointTrajectory {
        reconstruct_with_basis(theta, &self.basis_matrix)
    }

    pub fn evaluate_theta(&self, theta: &CoefficientVector, lambda: f64) -> Evaluation {
        let traj = self.trajectory(theta);
        let v = min_time_unchecked(&traj, &self.velocity_limits);
        let e = cartesian_error_unchecked(
            &traj,
            &self.arm1,
            &self.arm2,
            &self.path,
            self.objective.orientation_weight,
        );
        Evaluation::new(v, e, lambda, &self.objective)
    }
}

impl LatentObjective for Problem {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn config(&self) -> &ObjectiveConfig {
        &self.objective
    }

    fn evaluate(&self, y: &[f64], lambda: f64) -> Evaluation {
        let theta = map_latent(y, &self.bounds).expect("samplers only evaluate clipped latents");
        self.evaluate_theta(&theta, lambda)
    }
}
