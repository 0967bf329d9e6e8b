//! Reference zeroth-order optimizers over the same latent box and cost.
//!
//! Both use a fixed penalty weight, so comparing them against the diffusion
//! solver isolates the effect of adapting `λ̃`.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{Evaluation, LatentObjective};
use crate::problem::Problem;
use crate::rng;
use crate::trace::{Method, RunTrace, StepRecord};
use crate::trajectory_param::{clip_unit, CoefficientVector};

/// Lower bound on the CEM sampling deviation.
pub const CEM_STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    #[default]
    Cem,
    #[serde(rename = "random")]
    RandomSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub population: usize,
    pub elite_fraction: f64,
    pub iterations: usize,
    /// Initial CEM deviation, in latent units.
    pub initial_std: f64,
    pub seed: u64,
    /// Fixed penalty weight `λ̃`.
    pub lambda: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: BaselineMethod::Cem,
            population: 512,
            elite_fraction: 0.1,
            iterations: 100,
            initial_std: 0.5,
            seed: 0,
            lambda: 10.0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        let min_pop = match self.method {
            BaselineMethod::Cem => 2,
            BaselineMethod::RandomSearch => 1,
        };
        if self.population < min_pop {
            return Err(Error::InvalidConfig(format!("population must be >= {min_pop}")));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::InvalidConfig("elite_fraction must lie in (0, 1]".into()));
        }
        if !(self.initial_std > 0.0) {
            return Err(Error::InvalidConfig("initial_std must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig("penalty weight must be >= 0".into()));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.population as f64).ceil() as usize).clamp(1, self.population)
    }

    pub fn sample_budget(&self) -> usize {
        self.population * self.iterations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub y_best: Vec<f64>,
    pub best_eval: Evaluation,
    /// CEM sampling mean after the final refit; empty for random search.
    pub final_mean: Vec<f64>,
    pub trace: RunTrace,
}

struct Best {
    y: Vec<f64>,
    eval: Evaluation,
}

impl Best {
    /// Strictly lower cost wins; ties keep the earlier candidate.
    fn offer(slot: &mut Option<Best>, y: &[f64], eval: Evaluation) {
        if slot.as_ref().is_none_or(|b| eval.r < b.eval.r) {
            *slot = Some(Best { y: y.to_vec(), eval });
        }
    }
}

fn record(t: usize, lambda: f64, evals: &[Evaluation], best: &Best, start: &Instant) -> StepRecord {
    StepRecord {
        t,
        lambda,
        best_r: evals.iter().map(|e| e.r).fold(f64::INFINITY, f64::min),
        mean_r: evals.iter().map(|e| e.r).sum::<f64>() / evals.len() as f64,
        v: best.eval.v,
        e: best.eval.e,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Uniform draws over `[-1, 1]^dim`, keeping the lowest cost seen.
pub fn random_search<O: LatentObjective + ?Sized>(objective: &O, cfg: &BaselineConfig) -> Result<BaselineOutcome> {
    let cfg = BaselineConfig {
        method: BaselineMethod::RandomSearch,
        ..cfg.clone()
    };
    cfg.validate()?;
    let dim = objective.dim();
    let start = Instant::now();
    let mut best: Option<Best> = None;
    let mut records = Vec::with_capacity(cfg.iterations);
    for it in 1..=cfg.iterations {
        let batch: Vec<(Vec<f64>, Evaluation)> = (0..cfg.population)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(cfg.seed, it as u64, i as u64);
                let y: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..=1.0)).collect();
                let ev = objective.evaluate(&y, cfg.lambda);
                (y, ev)
            })
            .collect();
        for (y, ev) in &batch {
            Best::offer(&mut best, y, *ev);
        }
        let evals: Vec<Evaluation> = batch.iter().map(|(_, e)| *e).collect();
        records.push(record(it, cfg.lambda, &evals, best.as_ref().unwrap(), &start));
    }
    finish(
        Method::RandomSearch,
        objective,
        &cfg,
        records,
        best.unwrap(),
        Vec::new(),
    )
}

/// Cross-entropy method: diagonal Gaussian refit to the elite set each
/// iteration, samples clipped to the box.
pub fn cem<O: LatentObjective + ?Sized>(objective: &O, cfg: &BaselineConfig) -> Result<BaselineOutcome> {
    let cfg = BaselineConfig {
        method: BaselineMethod::Cem,
        ..cfg.clone()
    };
    cfg.validate()?;
    let dim = objective.dim();
    let n_elite = cfg.elite_count();
    let start = Instant::now();
    let mut mean = vec![0.0; dim];
    let mut std = vec![cfg.initial_std; dim];
    let mut best: Option<Best> = None;
    let mut records = Vec::with_capacity(cfg.iterations);
    for it in 1..=cfg.iterations {
        let batch: Vec<(Vec<f64>, Evaluation)> = (0..cfg.population)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(cfg.seed, it as u64, i as u64);
                let mut y: Vec<f64> = mean
                    .iter()
                    .zip(&std)
                    .map(|(m, s)| m + s * r.sample::<f64, _>(StandardNormal))
                    .collect();
                clip_unit(&mut y);
                let ev = objective.evaluate(&y, cfg.lambda);
                (y, ev)
            })
            .collect();
        for (y, ev) in &batch {
            Best::offer(&mut best, y, *ev);
        }

        let mut order: Vec<usize> = (0..batch.len()).collect();
        order.sort_by(|&a, &b| batch[a].1.r.total_cmp(&batch[b].1.r).then(a.cmp(&b)));
        let elites = &order[..n_elite];
        for k in 0..dim {
            let m = elites.iter().map(|&i| batch[i].0[k]).sum::<f64>() / n_elite as f64;
            let var = elites.iter().map(|&i| (batch[i].0[k] - m).powi(2)).sum::<f64>() / n_elite as f64;
            mean[k] = m;
            std[k] = var.sqrt().max(CEM_STD_FLOOR);
        }

        let evals: Vec<Evaluation> = batch.iter().map(|(_, e)| *e).collect();
        records.push(record(it, cfg.lambda, &evals, best.as_ref().unwrap(), &start));
    }
    finish(Method::Cem, objective, &cfg, records, best.unwrap(), mean)
}

fn finish<O: LatentObjective + ?Sized>(
    method: Method,
    objective: &O,
    cfg: &BaselineConfig,
    records: Vec<StepRecord>,
    best: Best,
    final_mean: Vec<f64>,
) -> Result<BaselineOutcome> {
    let trace = RunTrace {
        method,
        penalty_sign: objective.config().penalty_sign,
        records,
        samples: cfg.sample_budget(),
        evaluations: cfg.sample_budget(),
        theta_star: Vec::new(),
        y_star: best.y.clone(),
        final_eval: best.eval,
    };
    Ok(BaselineOutcome {
        y_best: best.y,
        best_eval: best.eval,
        final_mean,
        trace,
    })
}

fn attach_theta(problem: &Problem, outcome: BaselineOutcome) -> Result<(CoefficientVector, RunTrace)> {
    let theta = problem.theta_of(&outcome.y_best)?;
    let mut trace = outcome.trace;
    trace.theta_star = theta.to_flat();
    Ok((theta, trace))
}

pub fn run_random_search(problem: &Problem, cfg: &BaselineConfig) -> Result<(CoefficientVector, RunTrace)> {
    attach_theta(problem, random_search(problem, cfg)?)
}

pub fn run_cem(problem: &Problem, cfg: &BaselineConfig) -> Result<(CoefficientVector, RunTrace)> {
    attach_theta(problem, cem(problem, cfg)?)
}
