//! Diffusion solver on the one-joint toy, whose minimum time is known in
//! closed form, printing the trace every ten steps.

use mbd_dualarm::runner::{prepare, solve_prepared};
use mbd_dualarm::scenario::load_scenario;
use mbd_dualarm::trace::Method;
use mbd_dualarm::Result;

fn main() -> Result<()> {
    let scenario = load_scenario(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/toy_1dof.json"))?;
    let (problem, init) = prepare(&scenario)?;
    let d = scenario.basis.d();
    // Monotone path: the time is q(1) − q(0) over the velocity limit, and
    // q(0) is the constant term, so only the others matter.
    let v_min = (0..d - 1).map(|k| init.theta0[k] - init.sigma[k]).sum::<f64>() / problem.velocity_limits()[0];

    let (_, trace) = solve_prepared(&problem, &scenario, Method::Mbd)?;
    println!("{:>4} {:>10} {:>10} {:>10}", "t", "best R", "mean R", "V");
    for r in trace.records.iter().step_by(10) {
        println!("{:>4} {:>10.5} {:>10.5} {:>10.5}", r.t, r.best_r, r.mean_r, r.v);
    }
    let f = trace.final_eval;
    println!("final V = {:.5} s, analytic minimum = {v_min:.5} s", f.v);
    Ok(())
}
