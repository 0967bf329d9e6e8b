//! Model-based reverse diffusion over the latent box `[-1, 1]^{nd}`.
//!
//! Each reverse step `t = Ñ, …, 1`:
//!
//! 1. draws `N_s` candidates from `𝒩(yᵗ/√ᾱ_{t−1}, (1/ᾱ_{t−1} − 1) I)` and
//!    clips them to the box,
//! 2. scores them with `c = −R(θ(y), λ̃ᵗ)`,
//! 3. turns the standardized scores into softmax weights at temperature `τ`,
//! 4. forms the weighted mean `ȳᵗ`, estimates the score
//!    `sᵗ = (−yᵗ + √ᾱ_t ȳᵗ)/(1 − ᾱ_t)` and steps
//!    `y^{t−1} = (yᵗ + (1 − ᾱ_t) sᵗ)/√α_t`,
//! 5. updates `λ̃` from the error of the clipped post-update iterate.
//!
//! Candidate generation uses one random stream per `(step, sample)` and the
//! batch is reduced in sample order, so results do not depend on how many
//! worker threads evaluate the batch.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{update_penalty, Evaluation, LatentObjective};
use crate::problem::Problem;
use crate::rng;
use crate::trace::{Method, RunTrace, StepRecord};
use crate::trajectory_param::{clip_unit, CoefficientVector};

/// Batches whose cost spread falls below this get uniform weights.
pub const STD_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    LinearBeta,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Number of reverse steps `Ñ`.
    pub n_steps: usize,
    /// Candidates per step `N_s`.
    pub n_samples: usize,
    /// Softmax temperature `τ ∈ (0, 1)`.
    pub temperature: f64,
    pub seed: u64,
    pub schedule: ScheduleKind,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Offset `s` of the squared-cosine profile.
    pub cosine_offset: f64,
    /// Also clip the propagated iterate `y^{t−1}` (not only the copy used for
    /// reporting and the penalty update).
    pub clip_iterate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_steps: 100,
            n_samples: 512,
            temperature: 0.1,
            seed: 0,
            schedule: ScheduleKind::LinearBeta,
            beta_min: 1e-4,
            beta_max: 0.02,
            cosine_offset: 0.008,
            clip_iterate: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be >= 1".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidConfig("n_samples must be >= 2".into()));
        }
        if !(self.temperature > 0.0 && self.temperature < 1.0) {
            return Err(Error::InvalidConfig("temperature must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Candidates drawn over a full run.
    pub fn sample_budget(&self) -> usize {
        self.n_steps * self.n_samples
    }
}

/// `α_t` for `t = 1..=Ñ` and `ᾱ_t = Π_{i ≤ t} α_i` with `ᾱ_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Builds from `α_1..α_Ñ`, accumulating `ᾱ` by sequential products.
    pub fn from_alphas(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidSchedule("schedule needs at least one step".into()));
        }
        if let Some(t) = alphas.iter().position(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::InvalidSchedule(format!(
                "alpha_{} = {} outside (0, 1)",
                t + 1,
                alphas[t]
            )));
        }
        let mut alpha_bars = Vec::with_capacity(alphas.len() + 1);
        alpha_bars.push(1.0);
        for a in &alphas {
            let prev = *alpha_bars.last().unwrap();
            alpha_bars.push(prev * a);
        }
        if alpha_bars.windows(2).any(|w| !(w[1] < w[0])) || *alpha_bars.last().unwrap() <= 0.0 {
            return Err(Error::InvalidSchedule(
                "alpha_bar must decrease strictly and stay positive".into(),
            ));
        }
        Ok(Self { alphas, alpha_bars })
    }

    pub fn n_steps(&self) -> usize {
        self.alphas.len()
    }

    /// `α_t`, `1 ≤ t ≤ Ñ`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// `ᾱ_t`, `0 ≤ t ≤ Ñ`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t]
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}

pub fn build_schedule(cfg: &SolverConfig) -> Result<NoiseSchedule> {
    let n = cfg.n_steps;
    if n == 0 {
        return Err(Error::InvalidSchedule("n_steps must be >= 1".into()));
    }
    let alphas = match cfg.schedule {
        ScheduleKind::LinearBeta => {
            let (lo, hi) = (cfg.beta_min, cfg.beta_max);
            if !(lo > 0.0 && lo < 1.0 && hi > 0.0 && hi < 1.0) {
                return Err(Error::InvalidSchedule(format!("betas ({lo}, {hi}) must lie in (0, 1)")));
            }
            if lo > hi {
                return Err(Error::InvalidSchedule("beta_min must not exceed beta_max".into()));
            }
            (1..=n)
                .map(|t| {
                    let beta = if n == 1 {
                        hi
                    } else {
                        lo + (hi - lo) * (t - 1) as f64 / (n - 1) as f64
                    };
                    1.0 - beta
                })
                .collect()
        }
        ScheduleKind::Cosine => {
            let s = cfg.cosine_offset;
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidSchedule("cosine offset must be positive".into()));
            }
            let f = |t: f64| {
                (((t / n as f64) + s) / (1.0 + s) * std::f64::consts::FRAC_PI_2)
                    .cos()
                    .powi(2)
            };
            (1..=n)
                .map(|t| {
                    let beta = 1.0 - f(t as f64) / f((t - 1) as f64);
                    1.0 - beta.clamp(1e-8, 0.999)
                })
                .collect()
        }
    };
    NoiseSchedule::from_alphas(alphas)
}

/// Latent iterate of the reverse process.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionState {
    pub y: Vec<f64>,
    /// Current step index, counting down from `Ñ`.
    pub t: usize,
    pub lambda: f64,
    /// Key of the per-step random streams.
    pub seed: u64,
}

impl DiffusionState {
    /// `y^Ñ ~ 𝒩(0, I)`.
    pub fn initial(dim: usize, n_steps: usize, lambda: f64, seed: u64) -> Self {
        let mut r = rng::stream(seed, rng::INIT_STEP, 0);
        let y = (0..dim).map(|_| r.sample(StandardNormal)).collect();
        Self {
            y,
            t: n_steps,
            lambda,
            seed,
        }
    }
}

fn draw_candidate(state: &DiffusionState, mean_scale: f64, std: f64, index: usize) -> Vec<f64> {
    let mut r = rng::stream(state.seed, state.t as u64, index as u64);
    let mut y: Vec<f64> = state
        .y
        .iter()
        .map(|yi| {
            let z: f64 = r.sample(StandardNormal);
            yi * mean_scale + std * z
        })
        .collect();
    clip_unit(&mut y);
    y
}

fn sampling_moments(state: &DiffusionState, sched: &NoiseSchedule) -> (f64, f64) {
    let ab_prev = sched.alpha_bar(state.t - 1);
    (1.0 / ab_prev.sqrt(), (1.0 / ab_prev - 1.0).max(0.0).sqrt())
}

/// Draws `n_samples` clipped candidates around `yᵗ/√ᾱ_{t−1}`.
pub fn sample_batch(state: &DiffusionState, sched: &NoiseSchedule, n_samples: usize) -> Result<Vec<Vec<f64>>> {
    if state.t == 0 || state.t > sched.n_steps() {
        return Err(Error::Domain(format!(
            "step {} outside 1..={}",
            state.t,
            sched.n_steps()
        )));
    }
    let (scale, std) = sampling_moments(state, sched);
    Ok((0..n_samples).map(|i| draw_candidate(state, scale, std, i)).collect())
}

/// Softmax weights of the standardized negated costs `−R`; lower cost gets
/// more weight. Falls back to uniform weights when the batch spread is below
/// [`STD_GUARD`].
pub fn weight_batch(costs: &[f64], tau: f64) -> Result<Vec<f64>> {
    let n = costs.len();
    if n < 2 {
        return Err(Error::InvalidConfig("weighting needs at least two samples".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig("temperature must be positive".into()));
    }
    let mean = costs.iter().sum::<f64>() / n as f64;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if !(std >= STD_GUARD) {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let scores: Vec<f64> = costs.iter().map(|c| (mean - c) / (std * tau)).collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `Σ_ℓ w_ℓ y_ℓ`, summed in sample order.
pub fn weighted_mean(samples: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let dim = samples.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; dim];
    for (y, w) in samples.iter().zip(weights) {
        for (m, v) in mean.iter_mut().zip(y) {
            *m += w * v;
        }
    }
    mean
}

/// `sᵗ = (−yᵗ + √ᾱ_t ȳᵗ) / (1 − ᾱ_t)`.
pub fn estimate_score(y: &[f64], y_bar: &[f64], alpha_bar_t: f64) -> Result<Vec<f64>> {
    let denom = 1.0 - alpha_bar_t;
    if !(denom > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "alpha_bar_t = {alpha_bar_t} leaves no noise to remove"
        )));
    }
    let root = alpha_bar_t.sqrt();
    Ok(y.iter().zip(y_bar).map(|(yi, mi)| (-yi + root * mi) / denom).collect())
}

/// `y^{t−1} = (yᵗ + (1 − ᾱ_t) sᵗ) / √α_t`.
pub fn reverse_step(y: &[f64], score: &[f64], alpha_t: f64, alpha_bar_t: f64) -> Vec<f64> {
    let root = alpha_t.sqrt();
    let gain = 1.0 - alpha_bar_t;
    y.iter().zip(score).map(|(yi, si)| (yi + gain * si) / root).collect()
}

/// Score estimate followed by the reverse update at step `t`.
pub fn score_and_update(y: &[f64], y_bar: &[f64], sched: &NoiseSchedule, t: usize) -> Result<Vec<f64>> {
    if t == 0 || t > sched.n_steps() {
        return Err(Error::Domain(format!("step {t} outside 1..={}", sched.n_steps())));
    }
    if y.len() != y_bar.len() {
        return Err(Error::ShapeMismatch {
            what: "weighted mean dimension",
            expected: y.len(),
            got: y_bar.len(),
        });
    }
    let score = estimate_score(y, y_bar, sched.alpha_bar(t))?;
    Ok(reverse_step(y, &score, sched.alpha(t), sched.alpha_bar(t)))
}

/// Output of [`run`]: final clipped latent and the per-step trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub y_star: Vec<f64>,
    pub final_eval: Evaluation,
    pub trace: RunTrace,
}

/// Runs the reverse-diffusion loop against any latent objective.
pub fn run<O: LatentObjective + ?Sized>(objective: &O, cfg: &SolverConfig) -> Result<Outcome> {
    cfg.validate()?;
    let obj_cfg = *objective.config();
    obj_cfg.validate()?;
    let sched = build_schedule(cfg)?;
    let dim = objective.dim();
    let start = Instant::now();

    let mut state = DiffusionState::initial(dim, cfg.n_steps, obj_cfg.lambda0, cfg.seed);
    let mut records = Vec::with_capacity(cfg.n_steps);
    let mut evaluations = 0;
    let mut last = None;

    while state.t >= 1 {
        let t = state.t;
        let lambda = state.lambda;
        let (scale, std) = sampling_moments(&state, &sched);
        let batch: Vec<(Vec<f64>, Evaluation)> = (0..cfg.n_samples)
            .into_par_iter()
            .map(|i| {
                let y = draw_candidate(&state, scale, std, i);
                let ev = objective.evaluate(&y, lambda);
                (y, ev)
            })
            .collect();
        evaluations += batch.len();

        let costs: Vec<f64> = batch.iter().map(|(_, ev)| ev.r).collect();
        let weights = weight_batch(&costs, cfg.temperature)?;
        let samples: Vec<Vec<f64>> = batch.into_iter().map(|(y, _)| y).collect();
        let y_bar = weighted_mean(&samples, &weights);
        let mut next = score_and_update(&state.y, &y_bar, &sched, t)?;

        let mut clipped = next.clone();
        clip_unit(&mut clipped);
        let ev = objective.evaluate(&clipped, lambda);
        evaluations += 1;
        if cfg.clip_iterate {
            next = clipped;
        }

        records.push(StepRecord {
            t,
            lambda,
            best_r: costs.iter().copied().fold(f64::INFINITY, f64::min),
            mean_r: costs.iter().sum::<f64>() / costs.len() as f64,
            v: ev.v,
            e: ev.e,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });

        state.lambda = update_penalty(lambda, ev.e, &obj_cfg);
        state.y = next;
        state.t -= 1;
        last = Some(ev);
    }

    let mut y_star = state.y;
    clip_unit(&mut y_star);
    // The step-1 record already evaluated clip(y⁰); rescore it with λ̃⁰.
    let ev = last.expect("at least one reverse step");
    let final_eval = Evaluation::new(ev.v, ev.e, state.lambda, &obj_cfg);
    let trace = RunTrace {
        method: Method::Mbd,
        penalty_sign: obj_cfg.penalty_sign,
        records,
        samples: cfg.sample_budget(),
        evaluations,
        theta_star: Vec::new(),
        y_star: y_star.clone(),
        final_eval,
    };
    Ok(Outcome {
        y_star,
        final_eval,
        trace,
    })
}

/// Solves a prepared dual-arm problem, returning `θ* = θ(clip(y⁰))`.
pub fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<(CoefficientVector, RunTrace)> {
    let outcome = run(problem, cfg)?;
    let theta = problem.theta_of(&outcome.y_star)?;
    let mut trace = outcome.trace;
    trace.final_eval = problem.evaluate_theta(&theta, outcome.final_eval.lambda);
    trace.theta_star = theta.to_flat();
    Ok((theta, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ObjectiveConfig;

    #[test]
    fn single_step_schedule() {
        let cfg = SolverConfig {
            n_steps: 1,
            beta_max: 0.02,
            ..SolverConfig::default()
        };
        let s = build_schedule(&cfg).unwrap();
        assert_eq!(s.alpha_bar(0), 1.0);
        assert_eq!(s.alpha_bar(1), 0.98);
    }

    #[test]
    fn schedules_are_products_and_decreasing() {
        for kind in [ScheduleKind::LinearBeta, ScheduleKind::Cosine] {
            for n in [1, 2, 10, 100, 1000] {
                let s = build_schedule(&SolverConfig {
                    n_steps: n,
                    schedule: kind,
                    ..SolverConfig::default()
                })
                .unwrap();
                assert_eq!(s.alpha_bar(0), 1.0);
                for t in 1..=n {
                    assert_eq!(s.alpha_bar(t), s.alpha_bar(t - 1) * s.alpha(t));
                    assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
                    assert!(s.alpha_bar(t) > 0.0);
                }
            }
        }
    }

    #[test]
    fn linear_betas_grow_with_t() {
        let s = build_schedule(&SolverConfig::default()).unwrap();
        assert!((1.0 - s.alpha(1) - 1e-4).abs() < 1e-15);
        assert!((1.0 - s.alpha(100) - 0.02).abs() < 1e-15);
        assert!((2..=100).all(|t| s.alpha(t) < s.alpha(t - 1)));
    }

    #[test]
    fn invalid_schedules_rejected() {
        for (lo, hi) in [(0.0, 0.02), (1e-4, 1.0), (0.3, 0.2), (-0.1, 0.5)] {
            let cfg = SolverConfig {
                beta_min: lo,
                beta_max: hi,
                ..SolverConfig::default()
            };
            assert!(matches!(build_schedule(&cfg), Err(Error::InvalidSchedule(_))));
        }
        assert!(NoiseSchedule::from_alphas(vec![]).is_err());
        assert!(NoiseSchedule::from_alphas(vec![0.9, 1.0]).is_err());
    }

    #[test]
    fn last_step_has_zero_variance() {
        let sched = build_schedule(&SolverConfig::default()).unwrap();
        let state = DiffusionState {
            y: vec![0.3, -1.7, 0.9999],
            t: 1,
            lambda: 1.0,
            seed: 4,
        };
        let batch = sample_batch(&state, &sched, 8).unwrap();
        for y in batch {
            assert_eq!(y, vec![0.3, -1.0, 0.9999]);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let sched = build_schedule(&SolverConfig::default()).unwrap();
        let mk = |seed| DiffusionState {
            y: vec![0.1; 6],
            t: 50,
            lambda: 1.0,
            seed,
        };
        let a = sample_batch(&mk(11), &sched, 16).unwrap();
        let b = sample_batch(&mk(11), &sched, 16).unwrap();
        let c = sample_batch(&mk(12), &sched, 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().flatten().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn weight_examples() {
        let w = weight_batch(&[3.0; 5], 0.1).unwrap();
        assert_eq!(w, vec![0.2; 5]);

        // Two samples always standardize to scores (+1/τ, −1/τ).
        let tau = 0.5;
        let w = weight_batch(&[1.0, 4.0], tau).unwrap();
        let a = 1.0 / tau;
        let expected = a.exp() / (a.exp() + (-a).exp());
        assert!((w[0] - expected).abs() < 1e-15);
        assert!((w[0] + w[1] - 1.0).abs() < 1e-15);

        assert!(weight_batch(&[1.0], 0.1).is_err());
    }

    #[test]
    fn weights_are_permutation_equivariant() {
        let costs = [0.4, 2.0, -1.0, 0.7, 0.0];
        let perm = [3, 0, 4, 1, 2];
        let w = weight_batch(&costs, 0.3).unwrap();
        let permuted: Vec<f64> = perm.iter().map(|&i| costs[i]).collect();
        let wp = weight_batch(&permuted, 0.3).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert!((wp[k] - w[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn reverse_update_fixed_point() {
        let sched = build_schedule(&SolverConfig::default()).unwrap();
        let t = 40;
        let y = vec![0.5, -0.25, 0.8];
        let ab = sched.alpha_bar(t);
        let y_bar: Vec<f64> = y.iter().map(|v| v / ab.sqrt()).collect();
        let score = estimate_score(&y, &y_bar, ab).unwrap();
        assert!(score.iter().all(|s| s.abs() < 1e-12));
        let next = score_and_update(&y, &y_bar, &sched, t).unwrap();
        for (n, v) in next.iter().zip(&y) {
            assert!((n - v / sched.alpha(t).sqrt()).abs() < 1e-14);
        }
        let zero = score_and_update(&y, &[0.0; 3], &sched, t).unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn degenerate_alpha_bar_is_rejected() {
        assert!(estimate_score(&[0.1], &[0.2], 1.0).is_err());
    }

    struct Bowl {
        cfg: ObjectiveConfig,
        target: Vec<f64>,
    }

    impl LatentObjective for Bowl {
        fn dim(&self) -> usize {
            self.target.len()
        }
        fn config(&self) -> &ObjectiveConfig {
            &self.cfg
        }
        fn evaluate(&self, y: &[f64], lambda: f64) -> Evaluation {
            let v = y.iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum();
            Evaluation::new(v, 0.0, lambda, &self.cfg)
        }
    }

    #[test]
    fn run_minimizes_a_bowl_and_is_deterministic() {
        let bowl = Bowl {
            cfg: ObjectiveConfig {
                epsilon: 0.0,
                ..ObjectiveConfig::default()
            },
            target: vec![0.3, -0.6, 0.1, 0.8],
        };
        let cfg = SolverConfig {
            n_steps: 60,
            n_samples: 256,
            seed: 9,
            ..SolverConfig::default()
        };
        let a = run(&bowl, &cfg).unwrap();
        let b = run(&bowl, &cfg).unwrap();
        assert_eq!(a.trace.without_timing(), b.trace.without_timing());
        assert_eq!(a.trace.records.len(), 60);
        assert_eq!(a.trace.records[0].t, 60);
        assert_eq!(a.trace.records[59].t, 1);
        assert!(a.final_eval.v < 1e-3, "final cost {}", a.final_eval.v);
        assert_eq!(a.trace.evaluations, 60 * 256 + 60);
        assert!(a.trace.records.windows(2).all(|w| w[1].wall_ms >= w[0].wall_ms));
    }
}
