//! Serial-chain kinematics for the two arms: forward kinematics, geometric
//! Jacobians, the relative end-effector pose and a damped-least-squares IK
//! that tracks a relative pose path.
//!
//! A chain is `base · Π_j (link_j · Rot(axis_j, q_j)) · tool`. Relative poses
//! express the arm-2 end-effector in the arm-1 end-effector frame.

use nalgebra::{
    DMatrix, DVector, Isometry3, Matrix3, Matrix6, Rotation3, Translation3, Unit, UnitQuaternion, Vector3, Vector6,
};

use crate::error::{Error, Result};
use crate::trajectory_param::{basis_row, BasisConfig, CoefficientVector, JointTrajectory};

/// World axis and origin of one joint.
type JointFrame = (Vector3<f64>, Vector3<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct RevoluteJoint {
    /// Rotation axis in the joint frame.
    pub axis: Unit<Vector3<f64>>,
    /// Fixed transform from the previous frame to this joint's frame.
    pub link: Isometry3<f64>,
    /// Position limit `q̄`: the joint must stay in `[-q̄, q̄]` (radians).
    pub limit: f64,
    /// Velocity limit `v̄` (rad/s).
    pub velocity_limit: f64,
}

impl RevoluteJoint {
    pub fn new(axis: Vector3<f64>, link: Isometry3<f64>, limit: f64, velocity_limit: f64) -> Self {
        Self {
            axis: Unit::new_normalize(axis),
            link,
            limit,
            velocity_limit,
        }
    }

    fn transform(&self, q: f64) -> Isometry3<f64> {
        self.link * UnitQuaternion::from_axis_angle(&self.axis, q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    base: Isometry3<f64>,
    joints: Vec<RevoluteJoint>,
    tool: Isometry3<f64>,
}

impl ArmModel {
    pub fn new(base: Isometry3<f64>, joints: Vec<RevoluteJoint>, tool: Isometry3<f64>) -> Result<Self> {
        for (j, joint) in joints.iter().enumerate() {
            if !(joint.limit > 0.0) || !joint.limit.is_finite() {
                return Err(Error::Validation(format!("joint limit of joint {j} must be positive")));
            }
            if !(joint.velocity_limit > 0.0) || !joint.velocity_limit.is_finite() {
                return Err(Error::Validation(format!(
                    "velocity limit of joint {j} must be positive"
                )));
            }
            if (joint.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!("axis of joint {j} is not unit length")));
            }
        }
        Ok(Self { base, joints, tool })
    }

    /// Planar chain rotating about `z`, links laid along the local `x` axis.
    pub fn planar(base: Isometry3<f64>, lengths: &[f64], limits: &[f64], velocity_limits: &[f64]) -> Result<Self> {
        if limits.len() != lengths.len() || velocity_limits.len() != lengths.len() {
            return Err(Error::ShapeMismatch {
                what: "planar limits",
                expected: lengths.len(),
                got: limits.len().min(velocity_limits.len()),
            });
        }
        let mut joints = Vec::with_capacity(lengths.len());
        let mut offset = 0.0;
        for j in 0..lengths.len() {
            joints.push(RevoluteJoint::new(
                Vector3::z(),
                Isometry3::translation(offset, 0.0, 0.0),
                limits[j],
                velocity_limits[j],
            ));
            offset = lengths[j];
        }
        let tool = Isometry3::translation(lengths.last().copied().unwrap_or(0.0), 0.0, 0.0);
        Self::new(base, joints, tool)
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn base(&self) -> &Isometry3<f64> {
        &self.base
    }

    pub fn tool(&self) -> &Isometry3<f64> {
        &self.tool
    }

    pub fn joints(&self) -> &[RevoluteJoint] {
        &self.joints
    }

    pub fn joint_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.limit).collect()
    }

    pub fn velocity_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.velocity_limit).collect()
    }

    pub fn with_base(&self, base: Isometry3<f64>) -> Self {
        Self { base, ..self.clone() }
    }

    /// Splits into a proximal chain (joints `..k`, identity tool) and a distal
    /// chain (joints `k..`, identity base) whose FKs compose to the full FK.
    pub fn split_at(&self, k: usize) -> (ArmModel, ArmModel) {
        let k = k.min(self.dof());
        (
            ArmModel {
                base: self.base,
                joints: self.joints[..k].to_vec(),
                tool: Isometry3::identity(),
            },
            ArmModel {
                base: Isometry3::identity(),
                joints: self.joints[k..].to_vec(),
                tool: self.tool,
            },
        )
    }

    fn check_len(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::ShapeMismatch {
                what: "joint vector length",
                expected: self.dof(),
                got: q.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn fk(&self, q: &[f64]) -> Isometry3<f64> {
        let mut t = self.base;
        for (joint, &qj) in self.joints.iter().zip(q) {
            t *= joint.transform(qj);
        }
        t * self.tool
    }

    /// End-effector pose plus the world axis and origin of every joint.
    fn fk_with_frames(&self, q: &[f64]) -> (Isometry3<f64>, Vec<JointFrame>) {
        let mut t = self.base;
        let mut frames = Vec::with_capacity(self.dof());
        for (joint, &qj) in self.joints.iter().zip(q) {
            t *= joint.link;
            frames.push((t.rotation * joint.axis.into_inner(), t.translation.vector));
            t *= UnitQuaternion::from_axis_angle(&joint.axis, qj);
        }
        (t * self.tool, frames)
    }

    pub(crate) fn jacobian_unchecked(&self, q: &[f64]) -> (Isometry3<f64>, DMatrix<f64>) {
        let (ee, frames) = self.fk_with_frames(q);
        let p = ee.translation.vector;
        let mut jac = DMatrix::zeros(6, self.dof());
        for (c, (axis, origin)) in frames.iter().enumerate() {
            let lin = axis.cross(&(p - origin));
            jac.fixed_view_mut::<3, 1>(0, c).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, c).copy_from(axis);
        }
        (ee, jac)
    }
}

/// World pose of the end-effector.
pub fn forward_kinematics(arm: &ArmModel, q: &[f64]) -> Result<Isometry3<f64>> {
    arm.check_len(q)?;
    Ok(arm.fk(q))
}

/// Geometric Jacobian (rows 0..3 linear velocity, rows 3..6 angular
/// velocity, both in the world frame).
pub fn jacobian(arm: &ArmModel, q: &[f64]) -> Result<DMatrix<f64>> {
    arm.check_len(q)?;
    Ok(arm.jacobian_unchecked(q).1)
}

/// Pose of the arm-2 end-effector expressed in the arm-1 end-effector frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose(pub Isometry3<f64>);

impl RelativePose {
    pub fn identity() -> Self {
        Self(Isometry3::identity())
    }

    pub fn from_parts(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Self(Isometry3::from_parts(Translation3::from(translation), rotation))
    }

    /// Builds from a rotation matrix, rejecting non-orthonormal input.
    pub fn from_matrix(translation: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if ortho > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("rotation matrix is not a proper rotation".into()));
        }
        let rot = Rotation3::from_matrix_unchecked(rotation);
        Ok(Self::from_parts(
            translation,
            UnitQuaternion::from_rotation_matrix(&rot),
        ))
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.translation.vector
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.0.rotation
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.0.rotation.to_rotation_matrix().into_inner()
    }

    /// Translation distance and rotation angle from `other` to `self`.
    pub fn error_to(&self, other: &RelativePose) -> (f64, f64) {
        let dt = (self.translation() - other.translation()).norm();
        let dr = rotation_log(&(other.rotation().inverse() * self.rotation())).norm();
        (dt, dr)
    }
}

/// Desired relative poses, one per path sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredPath(pub Vec<RelativePose>);

impl DesiredPath {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn poses(&self) -> &[RelativePose] {
        &self.0
    }
}

/// Rotation vector (axis times angle in `[0, π]`), accurate near identity.
pub fn rotation_log(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let (w, v) = if q.w < 0.0 { (-q.w, -q.imag()) } else { (q.w, q.imag()) };
    let s = v.norm();
    if s < 1e-300 {
        return Vector3::zeros();
    }
    let angle = 2.0 * s.atan2(w);
    v * (angle / s)
}

fn split_row<'a>(arm1: &ArmModel, arm2: &ArmModel, q_row: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
    let n = arm1.dof() + arm2.dof();
    if q_row.len() != n {
        return Err(Error::ShapeMismatch {
            what: "dual-arm joint row length",
            expected: n,
            got: q_row.len(),
        });
    }
    Ok(q_row.split_at(arm1.dof()))
}

/// `inverse(FK₁(q₁)) ∘ FK₂(q₂)` with `q_row = [q₁, q₂]`.
pub fn relative_pose(arm1: &ArmModel, arm2: &ArmModel, q_row: &[f64]) -> Result<RelativePose> {
    let (q1, q2) = split_row(arm1, arm2, q_row)?;
    Ok(relative_pose_unchecked(arm1, arm2, q1, q2))
}

pub(crate) fn relative_pose_unchecked(arm1: &ArmModel, arm2: &ArmModel, q1: &[f64], q2: &[f64]) -> RelativePose {
    RelativePose(arm1.fk(q1).inv_mul(&arm2.fk(q2)))
}

/// Relative pose at every row of a joint trajectory.
pub fn relative_poses(arm1: &ArmModel, arm2: &ArmModel, traj: &JointTrajectory) -> Result<Vec<RelativePose>> {
    (0..traj.n_samples())
        .map(|i| relative_pose(arm1, arm2, &traj.row(i)))
        .collect()
}

/// Damped-least-squares settings for [`inverse_kinematics_path`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Added to the diagonal of `J Jᵀ`.
    pub damping: f64,
    /// Largest per-joint change in one iteration (rad).
    pub max_step: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
            damping: 1e-3,
            max_step: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkPathResult {
    /// `(N+1) × n` joint rows.
    pub q: DMatrix<f64>,
    /// Norm of the 6-vector pose error at each sample.
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    /// `(sample index, residual)` for every sample that missed `tol`.
    pub failures: Vec<(usize, f64)>,
}

impl IkPathResult {
    pub fn converged(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Translation error stacked over the rotation-log error, world frame,
/// between the current arm-2 pose and the one the target relative pose
/// demands given the current arm-1 pose.
fn relative_error(ee1: &Isometry3<f64>, ee2: &Isometry3<f64>, target: &RelativePose) -> (Vector6<f64>, Vector3<f64>) {
    let desired = ee1 * target.0;
    let dp = desired.translation.vector - ee2.translation.vector;
    let dr = rotation_log(&(desired.rotation * ee2.rotation.inverse()));
    let mut e = Vector6::zeros();
    e.fixed_rows_mut::<3>(0).copy_from(&dp);
    e.fixed_rows_mut::<3>(3).copy_from(&dr);
    (e, desired.translation.vector)
}

/// Solves IK sample by sample along a desired relative path, warm-starting
/// each sample from the previous solution.
pub fn inverse_kinematics_path(
    arm1: &ArmModel,
    arm2: &ArmModel,
    path: &DesiredPath,
    q_init: &[f64],
    opts: &IkOptions,
) -> Result<IkPathResult> {
    let n = arm1.dof() + arm2.dof();
    split_row(arm1, arm2, q_init)?;
    let mut q = DVector::from_column_slice(q_init);
    let mut out = IkPathResult {
        q: DMatrix::zeros(path.len(), n),
        residuals: Vec::with_capacity(path.len()),
        iterations: Vec::with_capacity(path.len()),
        failures: Vec::new(),
    };
    for (i, target) in path.poses().iter().enumerate() {
        let (residual, iters) = solve_sample(arm1, arm2, target, q.as_mut_slice(), opts);
        out.q.row_mut(i).copy_from(&q.transpose());
        out.residuals.push(residual);
        out.iterations.push(iters);
        if !(residual <= opts.tol) {
            out.failures.push((i, residual));
        }
    }
    Ok(out)
}

fn solve_sample(
    arm1: &ArmModel,
    arm2: &ArmModel,
    target: &RelativePose,
    q: &mut [f64],
    opts: &IkOptions,
) -> (f64, usize) {
    let n1 = arm1.dof();
    let n = q.len();
    let mut iters = 0;
    loop {
        let (ee1, jac1) = arm1.jacobian_unchecked(&q[..n1]);
        let (ee2, jac2) = arm2.jacobian_unchecked(&q[n1..]);
        let (err, p2_desired) = relative_error(&ee1, &ee2, target);
        let residual = err.norm();
        if residual <= opts.tol || iters >= opts.max_iters || !residual.is_finite() {
            return (residual, iters);
        }

        // d(err)/dt = -J_rel q̇; arm-1 motion drags the desired arm-2 pose.
        let lever = p2_desired - ee1.translation.vector;
        let mut jrel = DMatrix::zeros(6, n);
        for c in 0..n1 {
            let lin = jac1.fixed_view::<3, 1>(0, c).into_owned();
            let ang = jac1.fixed_view::<3, 1>(3, c).into_owned();
            jrel.fixed_view_mut::<3, 1>(0, c).copy_from(&-(lin + ang.cross(&lever)));
            jrel.fixed_view_mut::<3, 1>(3, c).copy_from(&-ang);
        }
        jrel.view_mut((0, n1), (6, n - n1)).copy_from(&jac2);

        let jjt = &jrel * jrel.transpose();
        let reg: Matrix6<f64> = Matrix6::from_iterator(jjt.iter().copied()) + Matrix6::identity() * opts.damping;
        let Some(chol) = reg.cholesky() else {
            return (residual, iters);
        };
        let dq = jrel.transpose() * DVector::from_column_slice(chol.solve(&err).as_slice());
        let largest = dq.amax();
        let scale = if largest > opts.max_step {
            opts.max_step / largest
        } else {
            1.0
        };
        for (qj, d) in q.iter_mut().zip(dq.iter()) {
            *qj += scale * d;
        }
        iters += 1;
    }
}

/// Per-joint least-squares fit of a sampled joint path onto the basis.
pub fn fit_nominal_coefficients(q_path: &DMatrix<f64>, cfg: &BasisConfig) -> Result<CoefficientVector> {
    if q_path.nrows() != cfg.n_samples() {
        return Err(Error::ShapeMismatch {
            what: "joint path rows vs N+1",
            expected: cfg.n_samples(),
            got: q_path.nrows(),
        });
    }
    let d = cfg.d();
    if cfg.n_samples() < d {
        return Err(Error::RankDeficient {
            rank: cfg.n_samples(),
            cols: d,
        });
    }
    let rows: Vec<Vec<f64>> = cfg.s_grid().iter().map(|&s| basis_row(s, cfg)).collect::<Result<_>>()?;
    let basis = DMatrix::from_fn(rows.len(), d, |i, k| rows[i][k]);
    let svd = basis.svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * f64::EPSILON * cfg.n_samples().max(d) as f64;
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    if rank < d {
        return Err(Error::RankDeficient { rank, cols: d });
    }
    let solution = svd.solve(q_path, cutoff).map_err(|e| Error::Domain(e.to_string()))?;
    CoefficientVector::new(solution.transpose())
}
