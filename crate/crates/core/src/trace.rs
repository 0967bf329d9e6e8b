use std::fmt;

use serde::{Deserialize, Serialize};

use crate::objective::{Evaluation, PenaltySign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mbd,
    Cem,
    #[serde(rename = "random")]
    RandomSearch,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mbd, Method::Cem, Method::RandomSearch];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mbd => "mbd",
            Method::Cem => "cem",
            Method::RandomSearch => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One outer iteration. For the diffusion solver `t` counts down from `Ñ`
/// to 1 and `v`/`e` belong to the post-update iterate; for the baselines
/// `t` counts up and `v`/`e` belong to the best candidate so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub lambda: f64,
    pub best_r: f64,
    pub mean_r: f64,
    pub v: f64,
    pub e: f64,
    /// Milliseconds since the run started.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub method: Method,
    pub penalty_sign: PenaltySign,
    pub records: Vec<StepRecord>,
    /// Candidates drawn and scored by the sampler.
    pub samples: usize,
    /// Every objective call, including bookkeeping evaluations.
    pub evaluations: usize,
    /// Joint-major final coefficients.
    pub theta_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub final_eval: Evaluation,
}

impl RunTrace {
    pub fn total_wall_ms(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.wall_ms)
    }

    /// Same trace with timings zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> RunTrace {
        let mut t = self.clone();
        for r in &mut t.records {
            r.wall_ms = 0.0;
        }
        t
    }
}
