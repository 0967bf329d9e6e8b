//! Polynomial parameterization of joint trajectories.
//!
//! Every joint follows `q_j(s) = Σ_k θ_{j,k} p_k(s)` over the normalized path
//! parameter `s ∈ [0, 1]`, with monomial basis functions `p_k`. The latent
//! diffusion variable `y ∈ [-1, 1]^{nd}` maps affinely onto the coefficients
//! through `θ = θ⁰ + σ ∘ y`, and choosing `|θ⁰_{j,k}| + σ_{j,k} ≤ q̄_j / d`
//! keeps every reconstructed joint position inside `[-q̄_j, q̄_j]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for latent components that drift past the box by rounding only.
pub const LATENT_BOX_SLACK: f64 = 1e-12;

/// Exponent assignment of the `d` monomial basis functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentOrder {
    /// `p_k(s) = s^{d-k}`: degrees `d..1`, no constant term.
    PaperLiteral,
    /// `p_k(s) = s^{d-1-k}`: degrees `d-1..0`, constant term last.
    #[default]
    DegreeDm1,
}

impl ExponentOrder {
    pub fn exponent(self, d: usize, k: usize) -> i32 {
        match self {
            ExponentOrder::PaperLiteral => (d - k) as i32,
            ExponentOrder::DegreeDm1 => (d - 1 - k) as i32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisConfig {
    d: usize,
    order: ExponentOrder,
    s_grid: Vec<f64>,
}

impl BasisConfig {
    /// Uniform grid `s_i = i / n_segments`.
    pub fn uniform(d: usize, n_segments: usize, order: ExponentOrder) -> Result<Self> {
        if n_segments == 0 {
            return Err(Error::InvalidConfig("number of path segments N must be >= 1".into()));
        }
        let grid = (0..=n_segments).map(|i| i as f64 / n_segments as f64).collect();
        Self::with_grid(d, order, grid)
    }

    pub fn with_grid(d: usize, order: ExponentOrder, s_grid: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("basis size d must be >= 1".into()));
        }
        if s_grid.len() < 2 {
            return Err(Error::InvalidConfig("s grid needs at least two samples".into()));
        }
        if s_grid[0] != 0.0 || *s_grid.last().unwrap() != 1.0 {
            return Err(Error::InvalidConfig("s grid must start at 0 and end at 1".into()));
        }
        if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("s grid must be strictly increasing".into()));
        }
        Ok(Self { d, order, s_grid })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of path segments `N`; the grid holds `N + 1` samples.
    pub fn n_segments(&self) -> usize {
        self.s_grid.len() - 1
    }

    pub fn n_samples(&self) -> usize {
        self.s_grid.len()
    }

    pub fn order(&self) -> ExponentOrder {
        self.order
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    /// The `(N+1) × d` matrix whose row `i` is `basis_row(s_i)`.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_samples(), self.d, |i, k| {
            self.s_grid[i].powi(self.order.exponent(self.d, k))
        })
    }
}

/// `[p_0(s), …, p_{d-1}(s)]` under the configured exponent order.
pub fn basis_row(s: f64, cfg: &BasisConfig) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("path parameter s = {s} outside [0, 1]")));
    }
    Ok((0..cfg.d).map(|k| s.powi(cfg.order.exponent(cfg.d, k))).collect())
}

/// Polynomial coefficients, one row `θ_j ∈ ℝ^d` per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(DMatrix<f64>);

impl CoefficientVector {
    pub fn new(theta: DMatrix<f64>) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        Ok(Self(theta))
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self(DMatrix::zeros(n, d))
    }

    /// Builds from a joint-major flat slice `(θ_{1,0..d-1}, θ_{2,0..d-1}, …)`.
    pub fn from_flat(n: usize, d: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != n * d {
            return Err(Error::ShapeMismatch {
                what: "flat coefficient length",
                expected: n * d,
                got: flat.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, d, flat))
    }

    pub fn n_joints(&self) -> usize {
        self.0.nrows()
    }

    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Joint-major flattening.
    pub fn to_flat(&self) -> Vec<f64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)]
    }
}

/// Joint positions `q_{ij}` at every path sample, shape `(N+1) × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory(DMatrix<f64>);

impl JointTrajectory {
    pub fn new(q: DMatrix<f64>) -> Self {
        Self(q)
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_joints(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// `q_{ij} = Σ_k θ_{j,k} p_k(s_i)`.
pub fn reconstruct_trajectory(theta: &CoefficientVector, cfg: &BasisConfig) -> Result<JointTrajectory> {
    if theta.d() != cfg.d() {
        return Err(Error::ShapeMismatch {
            what: "coefficient columns vs basis size d",
            expected: cfg.d(),
            got: theta.d(),
        });
    }
    Ok(reconstruct_with_basis(theta, &cfg.basis_matrix()))
}

/// Same as [`reconstruct_trajectory`] with a precomputed basis matrix.
pub(crate) fn reconstruct_with_basis(theta: &CoefficientVector, basis: &DMatrix<f64>) -> JointTrajectory {
    JointTrajectory(basis * theta.0.transpose())
}

/// Nominal coefficients and per-coefficient exploration half-widths.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationBounds {
    theta0: CoefficientVector,
    sigma: DMatrix<f64>,
    /// `(joint, coefficient)` pairs whose nominal already exceeds `q̄_j / d`.
    warnings: Vec<(usize, usize)>,
}

impl ExplorationBounds {
    /// Assembles bounds without the joint-limit selection rule.
    pub fn from_parts(theta0: CoefficientVector, sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.shape() != theta0.matrix().shape() {
            return Err(Error::ShapeMismatch {
                what: "sigma entries",
                expected: theta0.matrix().len(),
                got: sigma.len(),
            });
        }
        if sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Domain("sigma entries must be finite and non-negative".into()));
        }
        Ok(Self {
            theta0,
            sigma,
            warnings: Vec::new(),
        })
    }

    pub fn theta0(&self) -> &CoefficientVector {
        &self.theta0
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn warnings(&self) -> &[(usize, usize)] {
        &self.warnings
    }

    /// Latent dimension `n·d`.
    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// Inverse of [`map_latent`] on coordinates with `σ > 0`; zero elsewhere.
    pub fn latent_of(&self, theta: &CoefficientVector) -> Vec<f64> {
        let (n, d) = self.sigma.shape();
        let mut y = Vec::with_capacity(n * d);
        for j in 0..n {
            for k in 0..d {
                let s = self.sigma[(j, k)];
                y.push(if s > 0.0 {
                    (theta.get(j, k) - self.theta0.get(j, k)) / s
                } else {
                    0.0
                });
            }
        }
        y
    }
}

/// `σ_{j,k} = max(0, q̄_j / d − |θ⁰_{j,k}|)`, flagging coefficients whose
/// nominal alone exceeds the per-term budget.
pub fn select_sigma(theta0: &CoefficientVector, q_limits: &[f64], cfg: &BasisConfig) -> Result<ExplorationBounds> {
    let (n, d) = theta0.matrix().shape();
    if q_limits.len() != n {
        return Err(Error::ShapeMismatch {
            what: "joint limits",
            expected: n,
            got: q_limits.len(),
        });
    }
    if d != cfg.d() {
        return Err(Error::ShapeMismatch {
            what: "coefficient columns vs basis size d",
            expected: cfg.d(),
            got: d,
        });
    }
    if let Some(j) = q_limits.iter().position(|q| !(*q > 0.0)) {
        return Err(Error::Domain(format!("joint limit of joint {j} must be positive")));
    }
    let mut warnings = Vec::new();
    let sigma = DMatrix::from_fn(n, d, |j, k| {
        let budget = q_limits[j] / d as f64;
        let nominal = theta0.get(j, k).abs();
        if nominal > budget {
            warnings.push((j, k));
        }
        (budget - nominal).max(0.0)
    });
    Ok(ExplorationBounds {
        theta0: theta0.clone(),
        sigma,
        warnings,
    })
}

/// `θ = θ⁰ + σ ∘ y` with `y` in joint-major order.
pub fn map_latent(y: &[f64], bounds: &ExplorationBounds) -> Result<CoefficientVector> {
    let (n, d) = bounds.sigma.shape();
    if y.len() != n * d {
        return Err(Error::ShapeMismatch {
            what: "latent dimension",
            expected: n * d,
            got: y.len(),
        });
    }
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0 + LATENT_BOX_SLACK)) {
        return Err(Error::OutOfBox { index, value });
    }
    Ok(CoefficientVector(DMatrix::from_fn(n, d, |j, k| {
        bounds.theta0.get(j, k) + bounds.sigma[(j, k)] * y[j * d + k]
    })))
}

/// Elementwise clip to `[-1, 1]`.
pub fn clip_unit(y: &mut [f64]) {
    for v in y {
        *v = v.clamp(-1.0, 1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(d: usize, n: usize) -> BasisConfig {
        BasisConfig::uniform(d, n, ExponentOrder::DegreeDm1).unwrap()
    }

    #[test]
    fn basis_row_examples() {
        assert_eq!(basis_row(0.0, &cfg(3, 4)).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(basis_row(0.5, &cfg(3, 4)).unwrap(), vec![0.25, 0.5, 1.0]);
        for d in 1..7 {
            assert_eq!(basis_row(1.0, &cfg(d, 4)).unwrap(), vec![1.0; d]);
        }
        let literal = BasisConfig::uniform(3, 4, ExponentOrder::PaperLiteral).unwrap();
        assert_eq!(basis_row(0.5, &literal).unwrap(), vec![0.125, 0.25, 0.5]);
        assert_eq!(basis_row(0.0, &literal).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn basis_row_rejects_out_of_domain() {
        assert!(matches!(basis_row(1.5, &cfg(3, 4)), Err(Error::Domain(_))));
        assert!(matches!(basis_row(-1e-9, &cfg(3, 4)), Err(Error::Domain(_))));
        assert!(basis_row(f64::NAN, &cfg(3, 4)).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(BasisConfig::uniform(0, 4, ExponentOrder::DegreeDm1).is_err());
        assert!(BasisConfig::uniform(2, 0, ExponentOrder::DegreeDm1).is_err());
        assert!(BasisConfig::with_grid(2, ExponentOrder::DegreeDm1, vec![0.0, 0.6, 0.5, 1.0]).is_err());
        assert!(BasisConfig::with_grid(2, ExponentOrder::DegreeDm1, vec![0.1, 1.0]).is_err());
        assert!(BasisConfig::with_grid(2, ExponentOrder::DegreeDm1, vec![0.0, 0.3, 1.0]).is_ok());
    }

    #[test]
    fn reconstruct_examples() {
        let zero = CoefficientVector::zeros(2, 3);
        let q = reconstruct_trajectory(&zero, &cfg(3, 5)).unwrap();
        assert!(q.matrix().iter().all(|v| *v == 0.0));

        let constant = CoefficientVector::from_flat(1, 1, &[0.7]).unwrap();
        let q = reconstruct_trajectory(&constant, &cfg(1, 6)).unwrap();
        assert!(q.matrix().iter().all(|v| *v == 0.7));

        let identity = CoefficientVector::from_flat(1, 2, &[1.0, 0.0]).unwrap();
        let q = reconstruct_trajectory(&identity, &cfg(2, 2)).unwrap();
        assert_eq!(q.matrix().as_slice(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn reconstruct_shape_mismatch() {
        let theta = CoefficientVector::zeros(2, 4);
        assert!(matches!(
            reconstruct_trajectory(&theta, &cfg(3, 5)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn select_sigma_examples() {
        let c4 = cfg(4, 3);
        let theta0 = CoefficientVector::from_flat(1, 4, &[0.1; 4]).unwrap();
        let b = select_sigma(&theta0, &[2.0], &c4).unwrap();
        assert!(b.sigma().iter().all(|s| (s - 0.4).abs() < 1e-15));
        assert!(b.warnings().is_empty());

        let c2 = cfg(2, 3);
        let theta0 = CoefficientVector::from_flat(1, 2, &[0.9, 0.2]).unwrap();
        let b = select_sigma(&theta0, &[1.0], &c2).unwrap();
        assert_eq!(b.sigma()[(0, 0)], 0.0);
        assert!((b.sigma()[(0, 1)] - 0.3).abs() < 1e-15);
        assert_eq!(b.warnings(), &[(0, 0)]);

        let c5 = cfg(5, 3);
        let b = select_sigma(&CoefficientVector::zeros(3, 5), &[PI; 3], &c5).unwrap();
        assert!(b.sigma().iter().all(|s| *s == PI / 5.0));
    }

    #[test]
    fn select_sigma_rejects_bad_limits() {
        let theta0 = CoefficientVector::zeros(2, 3);
        assert!(select_sigma(&theta0, &[1.0, 0.0], &cfg(3, 3)).is_err());
        assert!(select_sigma(&theta0, &[1.0], &cfg(3, 3)).is_err());
    }

    #[test]
    fn map_latent_examples() {
        let theta0 = CoefficientVector::from_flat(1, 2, &[0.1, 0.1]).unwrap();
        let b = ExplorationBounds::from_parts(theta0.clone(), DMatrix::from_element(1, 2, 0.4)).unwrap();
        assert_eq!(map_latent(&[0.0, 0.0], &b).unwrap(), theta0);
        let upper = map_latent(&[1.0, 1.0], &b).unwrap();
        assert!(upper.matrix().iter().all(|v| (v - 0.5).abs() < 1e-15));
        let t = map_latent(&[-0.5, 0.0], &b).unwrap();
        assert!((t.get(0, 0) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn map_latent_rejects_out_of_box() {
        let b =
            ExplorationBounds::from_parts(CoefficientVector::zeros(1, 2), DMatrix::from_element(1, 2, 0.4)).unwrap();
        assert!(matches!(
            map_latent(&[0.0, 1.0 + 1e-9], &b),
            Err(Error::OutOfBox { index: 1, .. })
        ));
        assert!(map_latent(&[1.0 + 1e-13, -1.0], &b).is_ok());
        assert!(map_latent(&[0.0], &b).is_err());
    }

    #[test]
    fn layout_is_joint_major() {
        let theta = CoefficientVector::from_flat(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(theta.get(0, 2), 3.0);
        assert_eq!(theta.get(1, 0), 4.0);
        assert_eq!(theta.to_flat(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }
}
