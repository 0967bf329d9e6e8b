//! Scenario files: both arm models, the desired relative path, the basis and
//! every solver setting, as JSON.
//!
//! Rotations are unit quaternions `[w, x, y, z]`. Quaternions and joint axes
//! within `1e-6` of unit length are renormalized on load; anything further
//! off is rejected.

use std::path::Path;

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::error::{Error, Result};
use crate::kinematics::{ArmModel, DesiredPath, IkOptions, RelativePose, RevoluteJoint};
use crate::mbd::SolverConfig;
use crate::objective::ObjectiveConfig;
use crate::trajectory_param::{BasisConfig, ExponentOrder};

const UNIT_SLACK: f64 = 1e-6;

fn identity_quat() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default = "identity_quat")]
    pub rotation: [f64; 4],
}

impl Default for PoseSpec {
    fn default() -> Self {
        Self {
            translation: [0.0; 3],
            rotation: identity_quat(),
        }
    }
}

impl PoseSpec {
    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let t = iso.translation.vector;
        let q = iso.rotation.quaternion();
        Self {
            translation: [t.x, t.y, t.z],
            rotation: [q.w, q.i, q.j, q.k],
        }
    }

    fn to_isometry(&self, what: &str) -> Result<Isometry3<f64>> {
        let rotation = unit_quaternion(self.rotation, what)?;
        let [x, y, z] = self.translation;
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::Validation(format!("translation of {what} must be finite")));
        }
        Ok(Isometry3::from_parts(Translation3::new(x, y, z), rotation))
    }
}

fn unit_quaternion(q: [f64; 4], what: &str) -> Result<UnitQuaternion<f64>> {
    let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
    let norm = raw.norm();
    if !((norm - 1.0).abs() <= UNIT_SLACK) {
        return Err(Error::Validation(format!(
            "rotation quaternion of {what} has norm {norm}, not unit"
        )));
    }
    Ok(UnitQuaternion::from_quaternion(raw))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub axis: [f64; 3],
    #[serde(default)]
    pub link: PoseSpec,
    /// Position limit `q̄` (rad).
    pub limit: f64,
    /// Velocity limit `v̄` (rad/s).
    pub velocity_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    #[serde(default)]
    pub base: PoseSpec,
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub tool: PoseSpec,
}

impl ArmSpec {
    pub fn from_model(arm: &ArmModel) -> Self {
        Self {
            base: PoseSpec::from_isometry(arm.base()),
            joints: arm
                .joints()
                .iter()
                .map(|j| JointSpec {
                    axis: [j.axis.x, j.axis.y, j.axis.z],
                    link: PoseSpec::from_isometry(&j.link),
                    limit: j.limit,
                    velocity_limit: j.velocity_limit,
                })
                .collect(),
            tool: PoseSpec::from_isometry(arm.tool()),
        }
    }

    /// `offset` is the global index of this arm's first joint.
    fn build(&self, arm: usize, offset: usize) -> Result<ArmModel> {
        let mut joints = Vec::with_capacity(self.joints.len());
        for (j, spec) in self.joints.iter().enumerate() {
            let index = offset + j;
            if !(spec.limit > 0.0) || !spec.limit.is_finite() {
                return Err(Error::Validation(format!(
                    "joint limit of joint {index} (arm {arm}, joint {j}) must be positive, got {}",
                    spec.limit
                )));
            }
            if !(spec.velocity_limit > 0.0) || !spec.velocity_limit.is_finite() {
                return Err(Error::Validation(format!(
                    "velocity limit of joint {index} (arm {arm}, joint {j}) must be positive, got {}",
                    spec.velocity_limit
                )));
            }
            let axis = Vector3::from(spec.axis);
            if !((axis.norm() - 1.0).abs() <= UNIT_SLACK) {
                return Err(Error::Validation(format!(
                    "axis of joint {index} (arm {arm}, joint {j}) is not unit length"
                )));
            }
            let link = spec.link.to_isometry(&format!("link of joint {index}"))?;
            joints.push(RevoluteJoint::new(axis, link, spec.limit, spec.velocity_limit));
        }
        let base = self.base.to_isometry(&format!("base of arm {arm}"))?;
        let tool = self.tool.to_isometry(&format!("tool of arm {arm}"))?;
        ArmModel::new(base, joints, tool)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    /// Monomial terms per joint.
    pub d: usize,
    /// Path segments `N`; the path has `N + 1` samples at `s_i = i / N`.
    pub n_segments: usize,
    #[serde(default)]
    pub exponent_order: ExponentOrder,
}

/// Desired relative path of the arm-2 end-effector in the arm-1
/// end-effector frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Poses {
        poses: Vec<PoseSpec>,
    },
    /// Straight line in relative translation, fixed relative rotation.
    Line {
        start: [f64; 3],
        end: [f64; 3],
        #[serde(default = "identity_quat")]
        rotation: [f64; 4],
    },
    /// Circular arc in the `xy` plane of the arm-1 end-effector frame at
    /// height `center[2]`, fixed relative rotation.
    Arc {
        center: [f64; 3],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        #[serde(default = "identity_quat")]
        rotation: [f64; 4],
    },
}

impl PathSpec {
    pub fn expand(&self, s_grid: &[f64]) -> Result<DesiredPath> {
        let poses = match self {
            PathSpec::Poses { poses } => {
                if poses.len() != s_grid.len() {
                    return Err(Error::Validation(format!(
                        "path length {} does not equal N+1 = {}",
                        poses.len(),
                        s_grid.len()
                    )));
                }
                poses
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.to_isometry(&format!("path pose {i}")).map(RelativePose))
                    .collect::<Result<Vec<_>>>()?
            }
            PathSpec::Line { start, end, rotation } => {
                let rot = unit_quaternion(*rotation, "path rotation")?;
                let (a, b) = (Vector3::from(*start), Vector3::from(*end));
                s_grid
                    .iter()
                    .map(|&s| RelativePose::from_parts(a + (b - a) * s, rot))
                    .collect()
            }
            PathSpec::Arc {
                center,
                radius,
                start_angle,
                end_angle,
                rotation,
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::Validation("arc radius must be positive".into()));
                }
                let rot = unit_quaternion(*rotation, "path rotation")?;
                let c = Vector3::from(*center);
                s_grid
                    .iter()
                    .map(|&s| {
                        let phi = start_angle + (end_angle - start_angle) * s;
                        RelativePose::from_parts(c + Vector3::new(radius * phi.cos(), radius * phi.sin(), 0.0), rot)
                    })
                    .collect()
            }
        };
        Ok(DesiredPath(poses))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkSpec {
    pub tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub max_step: f64,
}

impl Default for IkSpec {
    fn default() -> Self {
        let o = IkOptions::default();
        Self {
            tol: o.tol,
            max_iters: o.max_iters,
            damping: o.damping,
            max_step: o.max_step,
        }
    }
}

/// Baseline settings; population and iterations default to the diffusion
/// solver's `N_s` and `Ñ` so both spend the same sample budget.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    pub population: Option<usize>,
    pub iterations: Option<usize>,
    pub elite_fraction: Option<f64>,
    pub initial_std: Option<f64>,
    pub lambda: Option<f64>,
}

/// On-disk scenario layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub arms: [ArmSpec; 2],
    pub basis: BasisSpec,
    pub path: PathSpec,
    /// Joint configuration the IK warm start begins from.
    pub q_init: Vec<f64>,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub baseline: BaselineSpec,
    #[serde(default)]
    pub ik: IkSpec,
    #[serde(default)]
    pub seed: u64,
}

/// A validated scenario with the path expanded to explicit poses.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub arm1: ArmModel,
    pub arm2: ArmModel,
    pub basis: BasisConfig,
    pub path: DesiredPath,
    pub q_init: Vec<f64>,
    pub objective: ObjectiveConfig,
    pub solver: SolverConfig,
    pub baseline: BaselineConfig,
    pub ik: IkOptions,
    pub seed: u64,
    /// The file contents this scenario was built from.
    pub file: ScenarioFile,
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let arm1 = file.arms[0].build(1, 0)?;
        let arm2 = file.arms[1].build(2, arm1.dof())?;
        let n = arm1.dof() + arm2.dof();
        if n == 0 {
            return Err(Error::Validation("the two arms have no joints (n = 0)".into()));
        }

        let BasisSpec {
            d,
            n_segments,
            exponent_order,
        } = file.basis;
        if d == 0 {
            return Err(Error::Validation("basis size d must be >= 1".into()));
        }
        if n_segments == 0 {
            return Err(Error::Validation("number of path segments N must be >= 1".into()));
        }
        if n_segments + 1 < d {
            return Err(Error::Validation(format!(
                "path samples N+1 = {} fewer than basis size d = {d}",
                n_segments + 1
            )));
        }
        let basis = BasisConfig::uniform(d, n_segments, exponent_order)?;
        let path = file.path.expand(basis.s_grid())?;

        if file.q_init.len() != n {
            return Err(Error::Validation(format!(
                "q_init length {} does not equal n = dof1 + dof2 = {n}",
                file.q_init.len()
            )));
        }
        let limits = [arm1.joint_limits(), arm2.joint_limits()].concat();
        for (j, (q, lim)) in file.q_init.iter().zip(&limits).enumerate() {
            if !(q.abs() <= *lim) {
                return Err(Error::Validation(format!(
                    "q_init of joint {j} = {q} outside joint limit {lim}"
                )));
            }
        }

        file.objective.validate()?;
        let mut solver = file.solver.clone();
        solver.seed = file.seed;
        solver.validate().map_err(|e| Error::Validation(e.to_string()))?;

        let defaults = BaselineConfig::default();
        let b = &file.baseline;
        let baseline = BaselineConfig {
            population: b.population.unwrap_or(solver.n_samples),
            iterations: b.iterations.unwrap_or(solver.n_steps),
            elite_fraction: b.elite_fraction.unwrap_or(defaults.elite_fraction),
            initial_std: b.initial_std.unwrap_or(defaults.initial_std),
            lambda: b.lambda.unwrap_or(defaults.lambda),
            seed: file.seed,
            ..defaults
        };
        baseline.validate().map_err(|e| Error::Validation(e.to_string()))?;

        let ik = IkOptions {
            tol: file.ik.tol,
            max_iters: file.ik.max_iters,
            damping: file.ik.damping,
            max_step: file.ik.max_step,
        };
        if !(ik.tol > 0.0 && ik.damping >= 0.0 && ik.max_step > 0.0) {
            return Err(Error::Validation(
                "ik settings need tol > 0, damping >= 0, max_step > 0".into(),
            ));
        }

        Ok(Self {
            name: file.name.clone(),
            arm1,
            arm2,
            basis,
            path,
            q_init: file.q_init.clone(),
            objective: file.objective,
            solver,
            baseline,
            ik,
            seed: file.seed,
            file,
        })
    }

    pub fn n_joints(&self) -> usize {
        self.arm1.dof() + self.arm2.dof()
    }

    /// Same scenario under another seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        s.solver.seed = seed;
        s.baseline.seed = seed;
        s.file.seed = seed;
        s
    }
}

/// Parses and validates scenario JSON; `origin` labels parse errors.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Scenario::from_file(file)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path)
}
