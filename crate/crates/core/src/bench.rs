//! Seeded head-to-head runs of every optimizer over a set of scenarios.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::Problem;
use crate::runner::{fmt_f64, prepare, solve_prepared};
use crate::scenario::Scenario;
use crate::trace::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub scenario: String,
    pub method: Method,
    pub seed: u64,
    pub v: f64,
    pub e: f64,
    /// Final cost under each method's own final weight.
    pub r: f64,
    /// Final cost re-scored with the scenario's fixed baseline weight, so
    /// all methods share one yardstick.
    pub r_common: f64,
    pub feasible: bool,
    pub samples: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub scenario: String,
    pub method: Method,
    pub runs: usize,
    pub mean_v: f64,
    pub mean_e: f64,
    pub mean_r_common: f64,
    pub feasibility_rate: f64,
    pub mean_wall_ms: f64,
}

fn one(scenario: &Scenario, problem: &Problem, method: Method, seed: u64) -> Result<BenchRun> {
    let seeded = scenario.with_seed(seed);
    let start = Instant::now();
    let (theta, trace) = solve_prepared(problem, &seeded, method)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let common = problem.evaluate_theta(&theta, seeded.baseline.lambda);
    Ok(BenchRun {
        scenario: scenario.name.clone(),
        method,
        seed,
        v: trace.final_eval.v,
        e: trace.final_eval.e,
        r: trace.final_eval.r,
        r_common: common.r,
        feasible: trace.final_eval.feasible,
        samples: trace.samples,
        wall_ms,
    })
}

/// Runs `methods × seeds` on every scenario. Jobs run in parallel; results
/// come back in (scenario, seed, method) order.
pub fn bench(scenarios: &[Scenario], seeds: &[u64], methods: &[Method]) -> Result<Vec<BenchRun>> {
    let prepared: Vec<(&Scenario, Problem)> = scenarios
        .iter()
        .map(|s| prepare(s).map(|(p, _)| (s, p)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64, Method)> = (0..prepared.len())
        .flat_map(|k| seeds.iter().flat_map(move |&s| methods.iter().map(move |&m| (k, s, m))))
        .collect();
    jobs.par_iter()
        .map(|&(k, seed, method)| one(prepared[k].0, &prepared[k].1, method, seed))
        .collect()
}

pub fn summarize(runs: &[BenchRun]) -> Vec<BenchSummary> {
    let mut keys: Vec<(String, Method)> = Vec::new();
    for r in runs {
        if !keys.iter().any(|(s, m)| *s == r.scenario && *m == r.method) {
            keys.push((r.scenario.clone(), r.method));
        }
    }
    keys.into_iter()
        .map(|(scenario, method)| {
            let group: Vec<&BenchRun> = runs
                .iter()
                .filter(|r| r.scenario == scenario && r.method == method)
                .collect();
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&BenchRun) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            BenchSummary {
                runs: group.len(),
                mean_v: mean(&|r| r.v),
                mean_e: mean(&|r| r.e),
                mean_r_common: mean(&|r| r.r_common),
                feasibility_rate: mean(&|r| if r.feasible { 1.0 } else { 0.0 }),
                mean_wall_ms: mean(&|r| r.wall_ms),
                scenario,
                method,
            }
        })
        .collect()
}

pub fn runs_csv(runs: &[BenchRun]) -> String {
    let mut out = String::from("scenario,method,seed,V,E,R,R_common,feasible,samples,wall_ms\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.method,
            r.seed,
            fmt_f64(r.v),
            fmt_f64(r.e),
            fmt_f64(r.r),
            fmt_f64(r.r_common),
            r.feasible,
            r.samples,
            fmt_f64(r.wall_ms)
        );
    }
    out
}

pub fn summary_csv(summary: &[BenchSummary]) -> String {
    let mut out = String::from("scenario,method,runs,mean_V,mean_E,mean_R_common,feasibility_rate,mean_wall_ms\n");
    for s in summary {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.scenario,
            s.method,
            s.runs,
            fmt_f64(s.mean_v),
            fmt_f64(s.mean_e),
            fmt_f64(s.mean_r_common),
            fmt_f64(s.feasibility_rate),
            fmt_f64(s.mean_wall_ms)
        );
    }
    out
}
