//! Overlapping node group lasso solved by ADMM.
//!
//! With the reparameterization `B_ij = v_ij + v_ji` the penalty is the sum of
//! row norms of `V`. The iteration below minimizes
//! `1/4 sum_ij (y_ij - v_ij - v_ji)^2 + lambda sum_i ||v_i||`, which weights
//! off-diagonal pairs like `1/2 sum_{i<j}` and diagonal terms by `1/4`.

use super::{SupportEstimate, SupportMethod};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::SymmetricMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupLassoOptions {
    pub rho: f64,
    /// Residual tolerance relative to `||Y||_F`.
    pub tol: f64,
    pub max_iter: usize,
    /// Node `i` is active when `alpha_i > activation_tol * max alpha`.
    pub activation_tol: f64,
}

impl Default for GroupLassoOptions {
    fn default() -> Self {
        Self {
            rho: 1.0,
            tol: 1e-6,
            max_iter: 5000,
            activation_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroupLassoFit {
    /// Group-sparse iterate (the thresholded ADMM copy).
    pub v: Matrix,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Scaled dual variable, kept for warm starts.
    u: Matrix,
}

impl GroupLassoFit {
    pub fn active(&self, activation_tol: f64) -> Vec<usize> {
        active_set(&self.alpha, activation_tol)
    }
}

fn active_set(alpha: &[f64], activation_tol: f64) -> Vec<usize> {
    let top = alpha.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Vec::new();
    }
    (0..alpha.len()).filter(|&i| alpha[i] > activation_tol * top).collect()
}

/// Smallest penalty with an all-zero solution.
pub fn lambda_max(y: &SymmetricMatrix) -> f64 {
    linalg::two_inf_norm(y)
}

fn soft_threshold_rows(a: &mut Matrix, q: f64) {
    for i in 0..a.nrows() {
        let nrm = a.row(i).norm();
        let scale = if nrm > q { 1.0 - q / nrm } else { 0.0 };
        a.row_mut(i).scale_mut(scale);
    }
}

fn validate(y: &SymmetricMatrix, lambda: f64, opts: &GroupLassoOptions) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be >= 0")));
    }
    if !(opts.rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho = {} must be positive", opts.rho)));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Group lasso from a zero start.
pub fn group_lasso(y: &SymmetricMatrix, lambda: f64, opts: &GroupLassoOptions) -> Result<GroupLassoFit> {
    validate(y, lambda, opts)?;
    let n = y.n();
    Ok(admm(y, lambda, opts, Matrix::zeros(n, n), Matrix::zeros(n, n)))
}

/// Group lasso warm-started from a previous fit on the same data.
pub fn group_lasso_warm(
    y: &SymmetricMatrix,
    lambda: f64,
    opts: &GroupLassoOptions,
    warm: &GroupLassoFit,
) -> Result<GroupLassoFit> {
    validate(y, lambda, opts)?;
    if warm.v.nrows() != y.n() {
        return Err(Error::DimensionMismatch {
            expected: y.n(),
            got: warm.v.nrows(),
        });
    }
    Ok(admm(y, lambda, opts, warm.v.clone(), warm.u.clone()))
}

fn admm(y: &SymmetricMatrix, lambda: f64, opts: &GroupLassoOptions, mut z: Matrix, mut u: Matrix) -> GroupLassoFit {
    let rho = opts.rho;
    let tol = opts.tol * y.norm();
    let q = lambda / rho;
    let (c1, c2) = (1.0 / (rho + 2.0), (rho + 1.0) / (rho + 2.0));
    let ym = y.as_matrix();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut a = &z - &u;
    let mut z_new = Matrix::zeros(z.nrows(), z.ncols());
    while iterations < opts.max_iter {
        iterations += 1;
        // V-step: minimizer of the loss plus (rho/2)||V - (Z - U)||^2.
        let v = (ym - a.transpose()) * c1 + &a * c2;
        z_new.copy_from(&v);
        z_new += &u;
        soft_threshold_rows(&mut z_new, q);
        u += &v;
        u -= &z_new;
        primal = (&v - &z_new).norm();
        dual = rho * (&z_new - &z).norm();
        std::mem::swap(&mut z, &mut z_new);
        if primal <= tol && dual <= tol {
            converged = true;
            break;
        }
        a.copy_from(&z);
        a -= &u;
    }
    let alpha = linalg::row_norms(&z);
    GroupLassoFit {
        v: z,
        alpha,
        iterations,
        converged,
        primal_residual: primal,
        dual_residual: dual,
        u,
    }
}

/// Stationarity residual of each active row, `max_j |r_ij|`.
///
/// Off-diagonal: `r_ij = v_ij + v_ji + lambda v_ij / alpha_i - y_ij`;
/// diagonal: `r_ii = 2 v_ii + lambda v_ii / alpha_i - y_ii`. Inactive rows get 0.
pub fn kkt_residuals(y: &SymmetricMatrix, fit: &GroupLassoFit, lambda: f64, activation_tol: f64) -> Vec<f64> {
    let n = y.n();
    let active = fit.active(activation_tol);
    let mut out = vec![0.0; n];
    for &i in &active {
        let a = fit.alpha[i];
        let mut worst = 0.0_f64;
        for j in 0..n {
            let vij = fit.v[(i, j)];
            let r = vij + fit.v[(j, i)] + lambda * vij / a - y[(i, j)];
            worst = worst.max(r.abs());
        }
        out[i] = worst;
    }
    out
}

#[derive(Clone, Debug)]
pub struct GroupLassoPath {
    /// Strictly descending penalties.
    pub lambdas: Vec<f64>,
    /// `alphas[(t, i)] = alpha_i(lambdas[t])`.
    pub alphas: Matrix,
    /// Largest grid penalty at which each node is active.
    pub activation_lambda: Vec<Option<f64>>,
    pub converged: Vec<bool>,
}

impl GroupLassoPath {
    /// Nodes ordered by activation (earliest first); never-active nodes last.
    /// Nodes activating at the same grid point are ordered by larger alpha.
    pub fn activation_order(&self) -> Vec<usize> {
        let n = self.alphas.ncols();
        let t_of = |i: usize| {
            (0..self.lambdas.len())
                .find(|&t| Some(self.lambdas[t]) == self.activation_lambda[i])
                .unwrap_or(usize::MAX)
        };
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            let (ta, tb) = (t_of(a), t_of(b));
            ta.cmp(&tb)
                .then_with(|| {
                    if ta == usize::MAX {
                        std::cmp::Ordering::Equal
                    } else {
                        self.alphas[(ta, b)].total_cmp(&self.alphas[(ta, a)])
                    }
                })
                .then(a.cmp(&b))
        });
        idx
    }

    /// Number of nodes whose alpha exceeds `tol` at some penalty and later
    /// drops back to `<= tol` further down the grid.
    pub fn deactivations(&self, tol: f64) -> usize {
        let (steps, n) = self.alphas.shape();
        let mut count = 0;
        for i in 0..n {
            let mut seen = false;
            for t in 0..steps {
                let a = self.alphas[(t, i)];
                if seen && a <= tol {
                    count += 1;
                    break;
                }
                if a > tol {
                    seen = true;
                }
            }
        }
        count
    }

    /// Finite-difference slopes `d alpha_i / d lambda` over every pair of
    /// consecutive grid points at which all nodes are active.
    pub fn all_active_slopes(&self, activation_tol: f64) -> Vec<f64> {
        let (steps, n) = self.alphas.shape();
        let all_active = |t: usize| {
            let row: Vec<f64> = (0..n).map(|i| self.alphas[(t, i)]).collect();
            active_set(&row, activation_tol).len() == n
        };
        let mut out = Vec::new();
        for t in 0..steps.saturating_sub(1) {
            if all_active(t) && all_active(t + 1) {
                let dl = self.lambdas[t + 1] - self.lambdas[t];
                out.extend((0..n).map(|i| (self.alphas[(t + 1, i)] - self.alphas[(t, i)]) / dl));
            }
        }
        out
    }
}

/// Evenly spaced penalties from the largest row norm of `y` down to
/// `lo_factor` times the smallest.
pub fn row_norm_grid(y: &SymmetricMatrix, points: usize, lo_factor: f64) -> Vec<f64> {
    let rn = linalg::row_norms(y);
    let hi = rn.iter().copied().fold(0.0, f64::max);
    let lo = lo_factor * rn.iter().copied().fold(f64::INFINITY, f64::min);
    if points < 2 {
        return vec![hi];
    }
    (0..points)
        .map(|k| hi - (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

/// Warm-started path down a strictly descending grid.
pub fn group_lasso_path(y: &SymmetricMatrix, grid: &[f64], opts: &GroupLassoOptions) -> Result<GroupLassoPath> {
    if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0)) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("lambda grid must be positive and strictly descending".into()));
    }
    let n = y.n();
    let mut alphas = Matrix::zeros(grid.len(), n);
    let mut activation = vec![None; n];
    let mut converged = Vec::with_capacity(grid.len());
    let mut fit: Option<GroupLassoFit> = None;
    for (t, &lambda) in grid.iter().enumerate() {
        let next = match &fit {
            None => group_lasso(y, lambda, opts)?,
            Some(prev) => group_lasso_warm(y, lambda, opts, prev)?,
        };
        for i in next.active(opts.activation_tol) {
            activation[i].get_or_insert(lambda);
        }
        for i in 0..n {
            alphas[(t, i)] = next.alpha[i];
        }
        converged.push(next.converged);
        fit = Some(next);
    }
    Ok(GroupLassoPath {
        lambdas: grid.to_vec(),
        alphas,
        activation_lambda: activation,
        converged,
    })
}

/// Geometric grid of `points` penalties from `hi` down to `lo`.
pub fn geometric_grid(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![hi];
    }
    let ratio = (lo / hi).powf(1.0 / (points - 1) as f64);
    (0..points).map(|t| hi * ratio.powi(t as i32)).collect()
}

/// Support from the path: the first grid point with at least `m` active
/// nodes, keeping the `m` largest alphas there.
pub fn group_lasso_support(y: &SymmetricMatrix, m: usize, points: usize, opts: &GroupLassoOptions) -> Result<SupportEstimate> {
    let n = y.n();
    if m == 0 || m >= n {
        return Err(Error::InvalidSupportSize { m, n });
    }
    let hi = lambda_max(y);
    if hi == 0.0 {
        return Ok(SupportEstimate::largest(vec![0.0; n], m, SupportMethod::GroupLasso));
    }
    let grid = geometric_grid(hi, 1e-3 * hi, points.max(2));
    let mut fit: Option<GroupLassoFit> = None;
    for &lambda in &grid {
        let next = match &fit {
            None => group_lasso(y, lambda, opts)?,
            Some(prev) => group_lasso_warm(y, lambda, opts, prev)?,
        };
        if next.active(opts.activation_tol).len() >= m {
            return Ok(SupportEstimate::largest(next.alpha, m, SupportMethod::GroupLasso));
        }
        fit = Some(next);
    }
    let last = fit.expect("grid is nonempty");
    Ok(SupportEstimate::largest(last.alpha, m, SupportMethod::GroupLasso))
}
