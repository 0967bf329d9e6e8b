//! The two objective terms on a shipped scenario: velocity-limited
//! traversal time and worst relative-pose error, plus the penalized cost and
//! one penalty update.

use mbd_dualarm::objective::{cartesian_error, min_time, update_penalty};
use mbd_dualarm::runner::prepare;
use mbd_dualarm::scenario::load_scenario;
use mbd_dualarm::Result;

fn main() -> Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/planar_2p2.json").to_string());
    let scenario = load_scenario(&path)?;
    let (problem, _) = prepare(&scenario)?;
    let cfg = problem.objective();

    for (label, y) in [
        ("nominal", vec![0.0; problem.bounds().dim()]),
        ("latent corner", vec![0.7; problem.bounds().dim()]),
    ] {
        let theta = problem.theta_of(&y)?;
        let traj = problem.trajectory(&theta);
        let v = min_time(&traj, problem.velocity_limits())?;
        let e = cartesian_error(
            &traj,
            problem.arm1(),
            problem.arm2(),
            problem.path(),
            cfg.orientation_weight,
        )?;
        let ev = problem.evaluate_theta(&theta, cfg.lambda0);
        println!(
            "{label}: V = {v:.4} s, E = {e:.3e}, R = {:.4} at lambda {}",
            ev.r, cfg.lambda0
        );
        println!("  next lambda = {:.4}", update_penalty(cfg.lambda0, e, cfg));
    }
    Ok(())
}
