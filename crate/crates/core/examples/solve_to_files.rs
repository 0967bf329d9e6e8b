//! Scenario file in, result files out, then reload and re-check them.

use mbd_dualarm::runner::{emit, read_bundle, run, verify_bundle};
use mbd_dualarm::scenario::load_scenario;
use mbd_dualarm::trace::Method;
use mbd_dualarm::Result;

fn main() -> Result<()> {
    let scenario = load_scenario(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/planar_2p2.json"))?;
    let out = std::env::temp_dir().join("mbd-dualarm-example");
    let bundle = run(&scenario, Method::Mbd)?;
    let files = emit(&bundle, &out, false)?;
    println!("wrote {}", out.display());

    let back = read_bundle(&files.result)?;
    let ev = verify_bundle(&back)?;
    println!(
        "reloaded: V = {:.5} s, E = {:.3e}, feasible = {}",
        ev.v, ev.e, ev.feasible
    );
    let worst = back.path_errors.iter().map(|p| p.0).fold(0.0, f64::max);
    println!("worst translation error along the path: {worst:.3e} m");
    Ok(())
}
