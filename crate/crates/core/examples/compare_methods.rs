//! Diffusion against random search and CEM at the same sample budget on
//! one scenario, a few seeds each.

use mbd_dualarm::bench::{bench, summarize};
use mbd_dualarm::scenario::load_scenario;
use mbd_dualarm::trace::Method;
use mbd_dualarm::Result;

fn main() -> Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/spatial_3p3.json").to_string());
    let scenario = load_scenario(&path)?;
    let seeds = [0, 1, 2, 3];
    let runs = bench(std::slice::from_ref(&scenario), &seeds, &Method::ALL)?;
    for r in &runs {
        println!(
            "seed {} {:<7} V = {:.4}  E = {:.2e}  R = {:.4}  feasible = {}",
            r.seed,
            r.method.name(),
            r.v,
            r.e,
            r.r_common,
            r.feasible
        );
    }
    for s in summarize(&runs) {
        println!(
            "{:<7} mean R = {:.4}, feasible {:.0}%",
            s.method.name(),
            s.mean_r_common,
            100.0 * s.feasibility_rate
        );
    }
    Ok(())
}
