//! Independent reference implementations used by the integration and
//! acceptance tests. None of these call into the library's numerics; they
//! only read model data out of it.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::path::PathBuf;

use mbd_dualarm::kinematics::{ArmModel, RelativePose, RevoluteJoint};
use mbd_dualarm::trajectory_param::{BasisConfig, ExponentOrder};
use nalgebra::{Isometry3, UnitQuaternion, Vector3};
use rand::Rng;

pub type Mat4 = [[f64; 4]; 4];

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

// ---------------------------------------------------------------------------
// Homogeneous-matrix kinematics

pub fn identity4() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn iso_to_mat4(iso: &Isometry3<f64>) -> Mat4 {
    let h = iso.to_homogeneous();
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = h[(i, j)];
        }
    }
    m
}

/// Rodrigues rotation about a unit axis.
pub fn rot4(axis: [f64; 3], angle: f64) -> Mat4 {
    let [x, y, z] = axis;
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y, 0.0],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x, 0.0],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn naive_fk(arm: &ArmModel, q: &[f64]) -> Mat4 {
    let mut t = iso_to_mat4(arm.base());
    for (joint, &qj) in arm.joints().iter().zip(q) {
        let a = joint.axis;
        t = mul4(&t, &iso_to_mat4(&joint.link));
        t = mul4(&t, &rot4([a.x, a.y, a.z], qj));
    }
    mul4(&t, &iso_to_mat4(arm.tool()))
}

pub fn rigid_inverse(m: &Mat4) -> Mat4 {
    let mut inv = identity4();
    for i in 0..3 {
        for j in 0..3 {
            inv[i][j] = m[j][i];
        }
    }
    for i in 0..3 {
        inv[i][3] = -(0..3).map(|k| m[k][i] * m[k][3]).sum::<f64>();
    }
    inv
}

pub fn naive_relative(arm1: &ArmModel, arm2: &ArmModel, q: &[f64]) -> Mat4 {
    let n1 = arm1.dof();
    mul4(&rigid_inverse(&naive_fk(arm1, &q[..n1])), &naive_fk(arm2, &q[n1..]))
}

/// Rotation angle of `Aᵀ B` from its skew part and trace.
pub fn angle_between(a: &Mat4, b: &Mat4) -> f64 {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| a[k][i] * b[k][j]).sum();
        }
    }
    let sx = 0.5 * (r[2][1] - r[1][2]);
    let sy = 0.5 * (r[0][2] - r[2][0]);
    let sz = 0.5 * (r[1][0] - r[0][1]);
    let sin = (sx * sx + sy * sy + sz * sz).sqrt();
    let cos = 0.5 * (r[0][0] + r[1][1] + r[2][2] - 1.0);
    sin.atan2(cos)
}

pub fn translation_distance(a: &Mat4, b: &Mat4) -> f64 {
    (0..3).map(|i| (a[i][3] - b[i][3]).powi(2)).sum::<f64>().sqrt()
}

/// Recomputes `E` sample by sample from scratch.
pub fn naive_cartesian_error(
    arm1: &ArmModel,
    arm2: &ArmModel,
    rows: &[Vec<f64>],
    path: &[RelativePose],
    orientation_weight: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (row, desired) in rows.iter().zip(path) {
        let actual = naive_relative(arm1, arm2, row);
        let target = iso_to_mat4(&desired.0);
        worst =
            worst.max(translation_distance(&actual, &target) + orientation_weight * angle_between(&actual, &target));
    }
    worst
}

/// Central-difference geometric Jacobian of the world end-effector pose.
pub fn fd_jacobian(arm: &ArmModel, q: &[f64], h: f64) -> Vec<[f64; 6]> {
    let mut cols = Vec::with_capacity(q.len());
    for j in 0..q.len() {
        let mut plus = q.to_vec();
        let mut minus = q.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let tp = naive_fk(arm, &plus);
        let tm = naive_fk(arm, &minus);
        let mut col = [0.0; 6];
        for i in 0..3 {
            col[i] = (tp[i][3] - tm[i][3]) / (2.0 * h);
        }
        // skew part of R₊ R₋ᵀ is sin(angle)·axis ≈ 2h·ω
        let mut r = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                r[a][b] = (0..3).map(|k| tp[a][k] * tm[b][k]).sum();
            }
        }
        col[3] = 0.5 * (r[2][1] - r[1][2]) / (2.0 * h);
        col[4] = 0.5 * (r[0][2] - r[2][0]) / (2.0 * h);
        col[5] = 0.5 * (r[1][0] - r[0][1]) / (2.0 * h);
        cols.push(col);
    }
    cols
}

// ---------------------------------------------------------------------------
// Minimum time

/// Per segment, the smallest duration `T` with `|Δq_j| ≤ v̄_j T` for every
/// joint, found by bisection on the feasibility predicate.
pub fn brute_min_time(rows: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut total = 0.0;
    for w in rows.windows(2) {
        let feasible = |t: f64| {
            w[0].iter()
                .zip(&w[1])
                .zip(v)
                .all(|((a, b), vj)| (b - a).abs() <= vj * t)
        };
        let mut hi = 1.0;
        while !feasible(hi) {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        if feasible(lo) {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        total += hi;
    }
    total
}

// ---------------------------------------------------------------------------
// Least squares

/// Dense normal-equations solve `(BᵀB) x = Bᵀ y` by Gaussian elimination
/// with partial pivoting.
pub fn normal_equations(b: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let d = b[0].len();
    let mut a = vec![vec![0.0; d + 1]; d];
    for (row, yi) in b.iter().zip(y) {
        for i in 0..d {
            for j in 0..d {
                a[i][j] += row[i] * row[j];
            }
            a[i][d] += row[i] * yi;
        }
    }
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in col + 1..d {
            let f = a[r][col] / a[col][col];
            for c in col..=d {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; d];
    for r in (0..d).rev() {
        let s: f64 = (r + 1..d).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][d] - s) / a[r][r];
    }
    x
}

pub fn monomial_rows(s_grid: &[f64], d: usize, order: ExponentOrder) -> Vec<Vec<f64>> {
    s_grid
        .iter()
        .map(|&s| {
            (0..d)
                .map(|k| {
                    let e = match order {
                        ExponentOrder::DegreeDm1 => d - 1 - k,
                        ExponentOrder::PaperLiteral => d - k,
                    };
                    s.powi(e as i32)
                })
                .collect()
        })
        .collect()
}

pub fn residual_norm(b: &[Vec<f64>], x: &[f64], y: &[f64]) -> f64 {
    b.iter()
        .zip(y)
        .map(|(row, yi)| {
            let p: f64 = row.iter().zip(x).map(|(a, c)| a * c).sum();
            (p - yi).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Double-double arithmetic

#[derive(Clone, Copy, Debug)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    pub fn sub_from_one(b: f64) -> Self {
        let (s, e) = Self::two_sum(1.0, -b);
        Self { hi: s, lo: e }
    }

    pub fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = Self::two_sum(p, e);
        Self { hi, lo }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `Π (1 − β_i)` for linearly spaced `β` in double-double precision.
pub fn alpha_bar_linear_dd(beta_min: f64, beta_max: f64, n: usize) -> f64 {
    let mut acc = DoubleDouble::from(1.0);
    for i in 0..n {
        let beta = if n == 1 {
            beta_max
        } else {
            beta_min + (beta_max - beta_min) * i as f64 / (n - 1) as f64
        };
        acc = acc.mul(DoubleDouble::sub_from_one(beta));
    }
    acc.value()
}

// ---------------------------------------------------------------------------
// Random instances

/// One random draw for the joint-limit guarantee: `(θ⁰, q̄, basis, y)`.
/// Nominal magnitudes stay within `q̄/d`; some sit exactly on it so the
/// zero-width branch of the bound selection runs too.
pub struct LimitCase {
    pub n: usize,
    pub d: usize,
    pub theta0: Vec<f64>,
    pub q_limits: Vec<f64>,
    pub basis: BasisConfig,
    pub y: Vec<f64>,
}

pub fn random_limit_case(rng: &mut impl Rng) -> LimitCase {
    let n = rng.random_range(1..=6);
    let d = rng.random_range(2..=6);
    let n_segments = rng.random_range(2..=50);
    let order = if rng.random_bool(0.5) {
        ExponentOrder::DegreeDm1
    } else {
        ExponentOrder::PaperLiteral
    };
    let basis = if rng.random_bool(0.5) {
        BasisConfig::uniform(d, n_segments, order).unwrap()
    } else {
        let mut interior: Vec<f64> = (0..n_segments - 1).map(|_| rng.random_range(0.0..1.0)).collect();
        interior.sort_by(f64::total_cmp);
        interior.dedup();
        let mut grid = vec![0.0];
        grid.extend(interior.into_iter().filter(|s| *s > 0.0));
        grid.push(1.0);
        BasisConfig::with_grid(d, order, grid).unwrap()
    };
    let q_limits: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..4.0)).collect();
    let mut theta0 = Vec::with_capacity(n * d);
    for &q in &q_limits {
        for _ in 0..d {
            let budget = q / d as f64;
            theta0.push(match rng.random_range(0..10) {
                0 => budget,
                1 => -budget,
                _ => rng.random_range(-budget..=budget),
            });
        }
    }
    let y = (0..n * d)
        .map(|_| match rng.random_range(0..4) {
            0 => 1.0,
            1 => -1.0,
            _ => rng.random_range(-1.0..=1.0),
        })
        .collect();
    LimitCase {
        n,
        d,
        theta0,
        q_limits,
        basis,
        y,
    }
}

pub fn random_vec(rng: &mut impl Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() > 0.2 {
            return v.normalize();
        }
    }
}

pub fn random_iso(rng: &mut impl Rng, reach: f64) -> Isometry3<f64> {
    let t = Vector3::new(
        rng.random_range(-reach..reach),
        rng.random_range(-reach..reach),
        rng.random_range(-reach..reach),
    );
    let r = UnitQuaternion::from_axis_angle(
        &nalgebra::Unit::new_normalize(random_unit(rng)),
        rng.random_range(-PI..PI),
    );
    Isometry3::from_parts(t.into(), r)
}

pub fn random_arm(rng: &mut impl Rng, dof: usize) -> ArmModel {
    let joints = (0..dof)
        .map(|_| RevoluteJoint::new(random_unit(rng), random_iso(rng, 0.5), 3.0, 1.0))
        .collect();
    ArmModel::new(random_iso(rng, 1.0), joints, random_iso(rng, 0.3)).unwrap()
}
