//! Run orchestration and result files.
//!
//! [`run`] prepares the nominal (IK, polynomial fit, exploration bounds),
//! dispatches one optimizer and gathers a [`ResultBundle`]. [`emit`] writes
//! the bundle as:
//!
//! - `result.json`: the bundle, including the scenario echo;
//! - `trace.csv`: `t,lambda,best_R,mean_R,V,E,wall_ms`;
//! - `trajectory.csv`: `i,s,q_1..q_n`;
//! - `path_error.csv`: `i,translation_err,rotation_err`.
//!
//! CSV floats use 17 significant digits so they parse back bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{run_cem, run_random_search};
use crate::error::{Error, Result};
use crate::kinematics::relative_poses;
use crate::mbd;
use crate::objective::{path_errors, Evaluation};
use crate::problem::Problem;
use crate::scenario::{PoseSpec, Scenario, ScenarioFile};
use crate::trace::{Method, RunTrace};
use crate::trajectory_param::CoefficientVector;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Summary of the nominal initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub ik_max_residual: f64,
    /// `(sample index, residual)` where IK missed its tolerance.
    pub ik_failures: Vec<(usize, f64)>,
    /// Joint-major nominal coefficients `θ⁰`.
    pub theta0: Vec<f64>,
    /// Joint-major exploration half-widths `σ`.
    pub sigma: Vec<f64>,
    /// `(joint, coefficient)` pairs whose nominal exceeds `q̄_j / d`.
    pub sigma_warnings: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub tool_version: String,
    pub scenario: String,
    pub method: Method,
    pub seed: u64,
    pub n_joints: usize,
    pub d: usize,
    /// Joint-major `θ*`.
    pub theta_star: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// Reconstructed joint rows `q_i`.
    pub trajectory: Vec<Vec<f64>>,
    pub relative_poses: Vec<PoseSpec>,
    /// `(translation error, rotation error)` per path sample.
    pub path_errors: Vec<(f64, f64)>,
    #[serde(rename = "final")]
    pub final_eval: Evaluation,
    pub init: InitReport,
    pub trace: RunTrace,
    /// False when timings were stripped for reproducible output.
    pub timing_recorded: bool,
    pub config: ScenarioFile,
}

impl ResultBundle {
    pub fn theta(&self) -> Result<CoefficientVector> {
        CoefficientVector::from_flat(self.n_joints, self.d, &self.theta_star)
    }

    pub fn without_timing(&self) -> ResultBundle {
        ResultBundle {
            trace: self.trace.without_timing(),
            timing_recorded: false,
            ..self.clone()
        }
    }
}

/// Runs the nominal initialization for a scenario.
pub fn prepare(scenario: &Scenario) -> Result<(Problem, InitReport)> {
    let (problem, ik) = Problem::initialize(
        scenario.arm1.clone(),
        scenario.arm2.clone(),
        scenario.basis.clone(),
        scenario.path.clone(),
        scenario.objective,
        &scenario.q_init,
        &scenario.ik,
    )?;
    let bounds = problem.bounds();
    let report = InitReport {
        ik_max_residual: ik.max_residual(),
        ik_failures: ik.failures.clone(),
        theta0: bounds.theta0().to_flat(),
        sigma: bounds.sigma().transpose().as_slice().to_vec(),
        sigma_warnings: bounds.warnings().to_vec(),
    };
    Ok((problem, report))
}

/// Dispatches one optimizer on an already prepared problem.
pub fn solve_prepared(problem: &Problem, scenario: &Scenario, method: Method) -> Result<(CoefficientVector, RunTrace)> {
    match method {
        Method::Mbd => mbd::solve(problem, &scenario.solver),
        Method::Cem => run_cem(problem, &scenario.baseline),
        Method::RandomSearch => run_random_search(problem, &scenario.baseline),
    }
}

pub fn run(scenario: &Scenario, method: Method) -> Result<ResultBundle> {
    let (problem, init) = prepare(scenario)?;
    let (theta, trace) = solve_prepared(&problem, scenario, method)?;
    assemble(scenario, &problem, init, method, &theta, trace)
}

fn assemble(
    scenario: &Scenario,
    problem: &Problem,
    init: InitReport,
    method: Method,
    theta: &CoefficientVector,
    trace: RunTrace,
) -> Result<ResultBundle> {
    let traj = problem.trajectory(theta);
    let poses = relative_poses(problem.arm1(), problem.arm2(), &traj)?;
    let errors = path_errors(&traj, problem.arm1(), problem.arm2(), problem.path())?;
    Ok(ResultBundle {
        tool_version: TOOL_VERSION.to_string(),
        scenario: scenario.name.clone(),
        method,
        seed: scenario.seed,
        n_joints: problem.n_joints(),
        d: problem.basis().d(),
        theta_star: theta.to_flat(),
        s_grid: problem.basis().s_grid().to_vec(),
        trajectory: (0..traj.n_samples()).map(|i| traj.row(i)).collect(),
        relative_poses: poses.iter().map(|p| PoseSpec::from_isometry(&p.0)).collect(),
        path_errors: errors,
        final_eval: trace.final_eval,
        init,
        trace,
        timing_recorded: true,
        config: scenario.file.clone(),
    })
}

/// Re-evaluates `θ*` from the bundle's own scenario echo and checks the
/// recorded `(V, E, R)` bit for bit.
pub fn verify_bundle(bundle: &ResultBundle) -> Result<Evaluation> {
    let scenario = Scenario::from_file(bundle.config.clone())?;
    let (problem, _) = prepare(&scenario)?;
    let theta = bundle.theta()?;
    let ev = problem.evaluate_theta(&theta, bundle.final_eval.lambda);
    let same = ev.v.to_bits() == bundle.final_eval.v.to_bits()
        && ev.e.to_bits() == bundle.final_eval.e.to_bits()
        && ev.r.to_bits() == bundle.final_eval.r.to_bits();
    if !same {
        return Err(Error::Validation(format!(
            "re-evaluated (V, E, R) = ({}, {}, {}) differs from recorded ({}, {}, {})",
            ev.v, ev.e, ev.r, bundle.final_eval.v, bundle.final_eval.e, bundle.final_eval.r
        )));
    }
    Ok(ev)
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_csv(trace: &RunTrace, with_timing: bool) -> String {
    let mut out = String::from("t,lambda,best_R,mean_R,V,E,wall_ms\n");
    for r in &trace.records {
        let wall = if with_timing { fmt_f64(r.wall_ms) } else { String::new() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            fmt_f64(r.lambda),
            fmt_f64(r.best_r),
            fmt_f64(r.mean_r),
            fmt_f64(r.v),
            fmt_f64(r.e),
            wall
        );
    }
    out
}

pub fn trajectory_csv(bundle: &ResultBundle) -> String {
    let mut out = String::from("i,s");
    for j in 1..=bundle.n_joints {
        let _ = write!(out, ",q_{j}");
    }
    out.push('\n');
    for (i, (s, row)) in bundle.s_grid.iter().zip(&bundle.trajectory).enumerate() {
        let _ = write!(out, "{i},{}", fmt_f64(*s));
        for q in row {
            let _ = write!(out, ",{}", fmt_f64(*q));
        }
        out.push('\n');
    }
    out
}

pub fn path_error_csv(bundle: &ResultBundle) -> String {
    let mut out = String::from("i,translation_err,rotation_err\n");
    for (i, (dt, dr)) in bundle.path_errors.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", fmt_f64(*dt), fmt_f64(*dr));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub result: PathBuf,
    pub trace: PathBuf,
    pub trajectory: PathBuf,
    pub path_error: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes all result files into `out_dir`, creating it if needed. Without
/// `with_timing` the output depends only on the inputs.
pub fn emit(bundle: &ResultBundle, out_dir: impl AsRef<Path>, with_timing: bool) -> Result<EmittedFiles> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stored = if with_timing {
        bundle.clone()
    } else {
        bundle.without_timing()
    };
    let files = EmittedFiles {
        result: dir.join("result.json"),
        trace: dir.join("trace.csv"),
        trajectory: dir.join("trajectory.csv"),
        path_error: dir.join("path_error.csv"),
    };
    let json = serde_json::to_string_pretty(&stored).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    write_file(&files.result, &json)?;
    write_file(&files.trace, &trace_csv(&stored.trace, with_timing))?;
    write_file(&files.trajectory, &trajectory_csv(&stored))?;
    write_file(&files.path_error, &path_error_csv(&stored))?;
    Ok(files)
}

pub fn read_bundle(path: impl AsRef<Path>) -> Result<ResultBundle> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}
