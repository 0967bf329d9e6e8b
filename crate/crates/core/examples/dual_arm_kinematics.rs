//! Forward kinematics, the geometric Jacobian and path IK for two planar
//! arms facing each other, followed by the least-squares polynomial fit.

use std::f64::consts::PI;

use mbd_dualarm::kinematics::{
    fit_nominal_coefficients, forward_kinematics, inverse_kinematics_path, jacobian, relative_pose, ArmModel,
    DesiredPath, IkOptions, RelativePose,
};
use mbd_dualarm::trajectory_param::{reconstruct_trajectory, BasisConfig, ExponentOrder};
use mbd_dualarm::Result;
use nalgebra::{Isometry3, Vector3};

fn main() -> Result<()> {
    let arm1 = ArmModel::planar(Isometry3::identity(), &[0.5, 0.4], &[2.0, 2.0], &[1.0, 1.0])?;
    let base2 = Isometry3::new(Vector3::new(0.95, 0.2, 0.0), Vector3::z() * PI);
    let arm2 = ArmModel::planar(base2, &[0.45, 0.35], &[2.0, 2.0], &[1.0, 1.0])?;

    let q = [0.2, 1.0, -0.1, 0.6];
    let ee1 = forward_kinematics(&arm1, &q[..2])?;
    println!("arm 1 end-effector at {:?}", ee1.translation.vector.as_slice());
    println!("arm 1 jacobian:{}", jacobian(&arm1, &q[..2])?);

    let start = relative_pose(&arm1, &arm2, &q)?;
    let n = 20;
    let path = DesiredPath(
        (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                RelativePose::from_parts(
                    start.translation() + Vector3::new(0.08, 0.04, 0.0) * s,
                    start.rotation(),
                )
            })
            .collect(),
    );
    let ik = inverse_kinematics_path(&arm1, &arm2, &path, &q, &IkOptions::default())?;
    println!(
        "ik: converged = {}, max residual = {:.2e}",
        ik.converged(),
        ik.max_residual()
    );

    let basis = BasisConfig::uniform(5, n, ExponentOrder::DegreeDm1)?;
    let theta0 = fit_nominal_coefficients(&ik.q, &basis)?;
    let fitted = reconstruct_trajectory(&theta0, &basis)?;
    let fit_err = (fitted.matrix() - &ik.q).abs().max();
    println!("degree-4 fit: max joint deviation from the ik samples = {fit_err:.2e} rad");
    Ok(())
}
