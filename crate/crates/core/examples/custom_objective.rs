//! The samplers work on any cost over the latent box. Here: a shifted
//! quadratic with a penalized constraint `E = |y_0 − 0.5|`.

use mbd_dualarm::baselines::{cem, BaselineConfig};
use mbd_dualarm::mbd::{self, SolverConfig};
use mbd_dualarm::objective::{Evaluation, LatentObjective, ObjectiveConfig};
use mbd_dualarm::Result;

struct Bowl {
    cfg: ObjectiveConfig,
}

impl LatentObjective for Bowl {
    fn dim(&self) -> usize {
        3
    }

    fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    fn evaluate(&self, y: &[f64], lambda: f64) -> Evaluation {
        let v = (y[1] + 0.3).powi(2) + (y[2] - 0.2).powi(2);
        let e = (y[0] - 0.5).abs();
        Evaluation::new(v, e, lambda, &self.cfg)
    }
}

fn main() -> Result<()> {
    let bowl = Bowl {
        cfg: ObjectiveConfig {
            epsilon: 1e-2,
            lambda0: 1.0,
            ..ObjectiveConfig::default()
        },
    };
    let out = mbd::run(
        &bowl,
        &SolverConfig {
            n_samples: 128,
            ..SolverConfig::default()
        },
    )?;
    println!(
        "diffusion: y = {:.3?}, V = {:.2e}, E = {:.2e}",
        out.y_star, out.final_eval.v, out.final_eval.e
    );
    let base = cem(
        &bowl,
        &BaselineConfig {
            population: 128,
            ..BaselineConfig::default()
        },
    )?;
    println!(
        "cem:       y = {:.3?}, V = {:.2e}, E = {:.2e}",
        base.y_best, base.best_eval.v, base.best_eval.e
    );
    Ok(())
}
