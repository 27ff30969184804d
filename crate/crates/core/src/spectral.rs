//! Spectral initialization, coherence screening, residuals and the noise-scale estimate.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::SymmetricMatrix;

pub const DEFAULT_C_SCREEN: f64 = 2.0;
pub const DEFAULT_C_S: f64 = 2.0;

/// Rank-`r` eigen-factorization. For symmetric input `left == right`.
#[derive(Clone, Debug)]
pub struct RankRDecomposition {
    /// Unit right eigenvectors, one per column.
    pub right: Matrix,
    /// Unit left eigenvectors. Equal to `right` for symmetric input.
    pub left: Matrix,
    /// Sorted by magnitude, largest first.
    pub eigenvalues: Vec<f64>,
}

impl RankRDecomposition {
    pub fn symmetric(u: Matrix, eigenvalues: Vec<f64>) -> Self {
        Self {
            left: u.clone(),
            right: u,
            eigenvalues,
        }
    }

    pub fn n(&self) -> usize {
        self.right.nrows()
    }

    pub fn rank(&self) -> usize {
        self.right.ncols()
    }

    /// `U diag(lambda) U^T`, exactly symmetric.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let u = &self.right;
        let scaled = Matrix::from_fn(u.nrows(), u.ncols(), |i, k| u[(i, k)] * self.eigenvalues[k]);
        SymmetricMatrix::symmetrized(&(scaled * u.transpose()))
    }

    /// Entry `(i, j)` of `reconstruct()` without forming the matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let u = &self.right;
        (0..self.rank())
            .map(|k| u[(i, k)] * self.eigenvalues[k] * u[(j, k)])
            .sum()
    }
}

/// Averages the control matrices and keeps the `r` leading-by-magnitude eigenpairs.
pub fn spectral_init(g0: &[SymmetricMatrix], r: usize) -> Result<RankRDecomposition> {
    let avg = SymmetricMatrix::mean(g0)?;
    let (u, vals) = linalg::top_symmetric_eigenpairs(&avg, r)?;
    Ok(RankRDecomposition::symmetric(u, vals))
}

#[derive(Clone, Debug)]
pub struct ScreeningResult {
    /// Ascending node indices that passed the screen.
    pub kept: Vec<usize>,
    pub row_norms: Vec<f64>,
    pub threshold: f64,
}

/// Keeps nodes with `||U_i|| <= c_screen * n^{-1/4}`.
pub fn select_low_coherence(dec: &RankRDecomposition, c_screen: f64) -> Result<ScreeningResult> {
    let n = dec.n();
    let threshold = c_screen * (n as f64).powf(-0.25);
    let row_norms = linalg::row_norms(&dec.right);
    // A zero threshold keeps nothing, even rows that vanish exactly.
    let kept: Vec<usize> = if threshold > 0.0 {
        (0..n).filter(|&i| row_norms[i] <= threshold).collect()
    } else {
        Vec::new()
    };
    if kept.is_empty() {
        return Err(Error::EmptyKeepSet { threshold });
    }
    Ok(ScreeningResult {
        kept,
        row_norms,
        threshold,
    })
}

/// Residual `Y1 - M0` restricted to the screened nodes.
#[derive(Clone, Debug)]
pub struct Residual {
    pub matrix: SymmetricMatrix,
    /// `index_map[local] = original node`; strictly increasing.
    pub index_map: Vec<usize>,
}

impl Residual {
    /// Residual covering every node.
    pub fn full(matrix: SymmetricMatrix) -> Self {
        let index_map = (0..matrix.n()).collect();
        Self { matrix, index_map }
    }

    pub fn to_original(&self, local: usize) -> usize {
        self.index_map[local]
    }

    pub fn to_local(&self, original: usize) -> Option<usize> {
        self.index_map.binary_search(&original).ok()
    }

    pub fn translate(&self, local: &[usize]) -> Vec<usize> {
        local.iter().map(|&i| self.index_map[i]).collect()
    }
}

pub fn form_residual(y1: &SymmetricMatrix, dec: &RankRDecomposition, kept: &[usize]) -> Result<Residual> {
    let n = y1.n();
    if dec.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: dec.n() });
    }
    if let Some(&bad) = kept.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!("kept index {bad} out of range for n = {n}")));
    }
    let mut index_map = kept.to_vec();
    index_map.sort_unstable();
    index_map.dedup();
    let k = index_map.len();
    let mut m = Matrix::zeros(k, k);
    for b in 0..k {
        for a in 0..=b {
            let (i, j) = (index_map[a], index_map[b]);
            let v = y1[(i, j)] - dec.entry(i, j);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(Residual {
        matrix: SymmetricMatrix::from_upper(m),
        index_map,
    })
}

/// `tau = ||Y0_S - M0_S||_F / |S|` over `S = {l : sqrt(n) ||U_l|| <= c_s sqrt(log n)}`.
pub fn estimate_noise_scale(y0: &SymmetricMatrix, dec: &RankRDecomposition, c_s: f64) -> Result<f64> {
    let n = y0.n();
    if dec.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: dec.n() });
    }
    let nf = n as f64;
    let bound = c_s * nf.ln().max(0.0).sqrt() / nf.sqrt();
    let rows = linalg::row_norms(&dec.right);
    let s: Vec<usize> = (0..n).filter(|&i| rows[i] <= bound).collect();
    if s.len() < 2 {
        return Err(Error::EmptyScreenSet { size: s.len() });
    }
    let mut sq = 0.0;
    for &i in &s {
        for &j in &s {
            let d = y0[(i, j)] - dec.entry(i, j);
            sq += d * d;
        }
    }
    Ok(sq.sqrt() / s.len() as f64)
}
