//! Dense linear-algebra helpers shared by the estimation stages.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance under which an eigenvalue's imaginary part is ignored.
pub const IMAG_TOL: f64 = 1e-6;

/// Returns `(A + A^T) / 2` with the lower triangle mirrored bit-exactly from the upper.
pub fn symmetrize(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_asymmetry(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0_f64;
    for j in 0..n {
        for i in 0..j {
            dev = dev.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    dev
}

pub fn row_norms(a: &Matrix) -> Vec<f64> {
    (0..a.nrows()).map(|i| a.row(i).norm()).collect()
}

/// Largest row l2 norm.
pub fn two_inf_norm(a: &Matrix) -> f64 {
    row_norms(a).into_iter().fold(0.0, f64::max)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    // Column-major fill order; callers rely on it for reproducibility.
    let mut m = Matrix::zeros(rows, cols);
    for v in m.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    m
}

/// Haar-distributed point on the Stiefel manifold St(rows, cols).
pub fn haar_stiefel<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    assert!(cols <= rows, "Stiefel manifold needs cols <= rows");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        if r[(k, k)] < 0.0 {
            let mut col = q.column_mut(k);
            col.neg_mut();
        }
    }
    q
}

/// Flips the column so its first entry of largest magnitude is nonnegative.
pub fn fix_sign(mut v: nalgebra::DVectorViewMut<'_, f64>) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Indices `0..values.len()` ordered by magnitude descending; ties keep index order.
pub fn order_by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// The `r` eigenpairs of a symmetric matrix with the largest |eigenvalue|.
pub fn top_symmetric_eigenpairs(a: &Matrix, r: usize) -> Result<(Matrix, Vec<f64>)> {
    let n = a.nrows();
    if r == 0 || r > n {
        return Err(Error::InvalidRank { rank: r, n });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eig = a.clone().symmetric_eigen();
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("symmetric eigensolver produced NaN".into()));
    }
    let order = order_by_magnitude(&values);
    let mut vecs = Matrix::zeros(n, r);
    let mut out = Vec::with_capacity(r);
    for (k, &idx) in order.iter().take(r).enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(idx));
        fix_sign(vecs.column_mut(k));
        out.push(values[idx]);
    }
    Ok((vecs, out))
}

/// Leading eigenpairs of a general real matrix.
///
/// Eigenvalues come from the real Schur form; right and left eigenvectors are
/// then obtained by inverse iteration on the shifted matrix and its transpose.
/// Fails if any of the `r` largest-magnitude eigenvalues has an imaginary part
/// above `IMAG_TOL * |lambda|`.
pub fn top_general_eigenpairs(a: &Matrix, r: usize) -> Result<(Matrix, Matrix, Vec<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if r == 0 || r > n {
        return Err(Error::InvalidRank { rank: r, n });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("real Schur decomposition did not converge".into()))?;
    let eigs = schur.complex_eigenvalues();
    let mut idx: Vec<usize> = (0..eigs.len()).collect();
    idx.sort_by(|&x, &y| {
        eigs[y]
            .norm()
            .partial_cmp(&eigs[x].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    let mut values = Vec::with_capacity(r);
    for (k, &i) in idx.iter().take(r).enumerate() {
        let z = eigs[i];
        if z.im.abs() > IMAG_TOL * z.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::ComplexLeadingEigenvalue {
                index: k,
                re: z.re,
                im: z.im,
            });
        }
        values.push(z.re);
    }
    // Conjugate pairs straddling the cut are both complex, so the check above
    // already rejects them.
    let scale = max_abs(a).max(1.0);
    let mut right = Matrix::zeros(n, r);
    let mut left = Matrix::zeros(n, r);
    let at = a.transpose();
    for (k, &lambda) in values.iter().enumerate() {
        let u = inverse_iteration(a, lambda, scale)?;
        let w = inverse_iteration(&at, lambda, scale)?;
        right.set_column(k, &u);
        fix_sign(right.column_mut(k));
        left.set_column(k, &w);
        if left.column(k).dot(&right.column(k)) < 0.0 {
            left.column_mut(k).neg_mut();
        }
    }
    Ok((right, left, values))
}

fn inverse_iteration(a: &Matrix, lambda: f64, scale: f64) -> Result<Vector> {
    let n = a.nrows();
    let mut shift_eps = 1e-10 * scale;
    for _attempt in 0..6 {
        let mut shifted = a.clone();
        let s = lambda + shift_eps;
        for i in 0..n {
            shifted[(i, i)] -= s;
        }
        let lu = shifted.lu();
        // Deterministic start with no special alignment to any eigenvector.
        let mut x = Vector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 104729) as f64 / 104729.0);
        x /= x.norm();
        let mut ok = true;
        for _ in 0..4 {
            match lu.solve(&x) {
                Some(y) if y.iter().all(|v| v.is_finite()) && y.norm() > 0.0 => {
                    x = &y / y.norm();
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
        shift_eps *= 1e3;
    }
    Err(Error::EigenFailure(format!(
        "inverse iteration failed for eigenvalue {lambda}"
    )))
}

/// Polar factor of a square matrix: the orthogonal matrix closest in Frobenius norm.
pub fn polar_factor(a: &Matrix) -> Matrix {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    u * vt
}

pub fn rank_numerical(a: &Matrix, rel_tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}
