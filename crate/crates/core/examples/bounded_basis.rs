//! Polynomial basis, exploration bounds and the joint-limit guarantee.
//!
//! Fits nothing: picks a nominal by hand, derives the per-coefficient
//! half-widths and shows that even the corners of the latent box stay inside
//! the joint limits.

use mbd_dualarm::trajectory_param::{
    map_latent, reconstruct_trajectory, select_sigma, BasisConfig, CoefficientVector, ExponentOrder,
};
use mbd_dualarm::Result;

fn main() -> Result<()> {
    let basis = BasisConfig::uniform(4, 20, ExponentOrder::DegreeDm1)?;
    let limits = [1.2, 0.8];
    let theta0 = CoefficientVector::from_flat(2, 4, &[0.1, -0.2, 0.25, 0.05, 0.0, 0.1, -0.1, 0.3])?;
    let bounds = select_sigma(&theta0, &limits, &basis)?;
    println!("sigma (joint x coefficient):{}", bounds.sigma());

    let dim = bounds.dim();
    let mut worst = [0.0f64; 2];
    for corner in 0..1u32 << dim {
        let y: Vec<f64> = (0..dim)
            .map(|b| if corner >> b & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let q = reconstruct_trajectory(&map_latent(&y, &bounds)?, &basis)?;
        for (j, w) in worst.iter_mut().enumerate() {
            for i in 0..q.n_samples() {
                *w = w.max(q.get(i, j).abs());
            }
        }
    }
    for (j, (w, lim)) in worst.iter().zip(&limits).enumerate() {
        println!("joint {j}: max |q| over {} corners = {w:.4} (limit {lim})", 1u32 << dim);
    }
    Ok(())
}
