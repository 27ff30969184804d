//! Debiased estimation of the shared low-rank matrix once the perturbed
//! nodes are removed.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::model::SymmetricMatrix;
use crate::spectral::RankRDecomposition;

/// Condition number above which the correction matrix counts as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Smallest admissible `|w^T u|` for the linear-form estimator.
pub const MIN_INNER: f64 = 1e-10;

/// Zeroes every row and column listed in `idx`.
pub fn mask_rows_cols(y: &SymmetricMatrix, idx: &[usize]) -> Result<SymmetricMatrix> {
    let n = y.n();
    let mut drop = vec![false; n];
    for &i in idx {
        if i >= n {
            return Err(Error::InvalidArgument(format!("mask index {i} out of range for {n} nodes")));
        }
        drop[i] = true;
    }
    Ok(SymmetricMatrix::from_upper(Matrix::from_fn(n, n, |i, j| {
        if drop[i] || drop[j] {
            0.0
        } else {
            y[(i, j)]
        }
    })))
}

/// Matrix whose strict upper triangle comes from one source and whose lower
/// triangle (diagonal included) comes from another.
///
/// The two sources must be independent for the entries to be independent;
/// that is the caller's responsibility.
#[derive(Clone, Debug)]
pub struct AsymmetricComposite {
    pub m: Matrix,
    pub upper_copies: usize,
    pub lower_copies: usize,
}

/// Combines two groups of observations, averaging each group first.
pub fn asymmetric_combine(upper: &[SymmetricMatrix], lower: &[SymmetricMatrix]) -> Result<AsymmetricComposite> {
    let up = SymmetricMatrix::mean(upper)?;
    let lo = SymmetricMatrix::mean(lower)?;
    if up.n() != lo.n() {
        return Err(Error::DimensionMismatch {
            expected: up.n(),
            got: lo.n(),
        });
    }
    let n = up.n();
    let m = Matrix::from_fn(n, n, |i, j| if i < j { up[(i, j)] } else { lo[(i, j)] });
    Ok(AsymmetricComposite {
        m,
        upper_copies: upper.len(),
        lower_copies: lower.len(),
    })
}

/// Leading `r` right/left eigenpairs of the composite; eigenvalues must be real.
pub fn eig_asym(c: &AsymmetricComposite, r: usize) -> Result<RankRDecomposition> {
    let (right, left, eigenvalues) = linalg::top_general_eigenpairs(&c.m, r)?;
    Ok(RankRDecomposition {
        right,
        left,
        eigenvalues,
    })
}

/// Estimate of `|a^T u*_l|` from the `l`-th right and left eigenvectors.
pub fn linear_form(a: &Vector, l: usize, dec: &RankRDecomposition) -> Result<f64> {
    if a.len() != dec.n() {
        return Err(Error::DimensionMismatch {
            expected: dec.n(),
            got: a.len(),
        });
    }
    if l >= dec.rank() {
        return Err(Error::InvalidRank { rank: l + 1, n: dec.rank() });
    }
    let norm = a.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("linear form direction has norm {norm}, expected 1")));
    }
    let u = dec.right.column(l);
    let w = dec.left.column(l);
    let inner = w.dot(&u);
    if inner.abs() < MIN_INNER {
        return Err(Error::DegenerateInnerProduct(inner));
    }
    Ok(((a.dot(&u) * a.dot(&w)) / inner).abs().sqrt().min(norm))
}

/// Entrywise bias-corrected eigenvectors `sgn(u_li) |u_hat_{e_i, l}|`, with `sgn(0) = +1`.
pub fn improved_eigvectors(dec: &RankRDecomposition) -> Result<Matrix> {
    let (n, r) = (dec.n(), dec.rank());
    let mut out = Matrix::zeros(n, r);
    for l in 0..r {
        let u = dec.right.column(l);
        let w = dec.left.column(l);
        let inner = w.dot(&u);
        if inner.abs() < MIN_INNER {
            return Err(Error::DegenerateInnerProduct(inner));
        }
        for i in 0..n {
            let mag = (u[i] * w[i] / inner).abs().sqrt().min(1.0);
            out[(i, l)] = if u[i] < 0.0 { -mag } else { mag };
        }
    }
    Ok(out)
}

fn low_rank(u: &Matrix, core: &Matrix) -> SymmetricMatrix {
    SymmetricMatrix::symmetrized(&(u * core * u.transpose()))
}

/// `U_hat diag(lambda) U_hat^T`, symmetrized.
pub fn mhat1(uhat: &Matrix, eigenvalues: &[f64]) -> Result<SymmetricMatrix> {
    if uhat.ncols() != eigenvalues.len() {
        return Err(Error::DimensionMismatch {
            expected: uhat.ncols(),
            got: eigenvalues.len(),
        });
    }
    let lam = Matrix::from_diagonal(&Vector::from_column_slice(eigenvalues));
    Ok(low_rank(uhat, &lam))
}

#[derive(Clone, Debug)]
pub struct CorrectionFactor {
    /// Symmetric positive definite `r x r` factor.
    pub psihat: Matrix,
    pub g: Matrix,
    pub g_symm: Matrix,
}

/// `Psi_hat = G_symm^{1/2}` with `G = (L^-1 U^T M1 M2 U L^-1)^-1`.
///
/// The eigendecomposition `G_symm = Gamma Sigma^-2 Gamma^T` gives
/// `Psi_hat = Gamma Sigma^-1 Gamma^T`, which squares to `G_symm`.
pub fn psihat(dec: &RankRDecomposition, m1: &Matrix, m2: &Matrix) -> Result<CorrectionFactor> {
    let (n, r) = (dec.n(), dec.rank());
    for m in [m1, m2] {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
    }
    if dec.eigenvalues.contains(&0.0) {
        return Err(Error::SingularG(f64::INFINITY));
    }
    let u = &dec.right;
    let inv_lam = Matrix::from_diagonal(&Vector::from_iterator(r, dec.eigenvalues.iter().map(|l| 1.0 / l)));
    let inner = &inv_lam * (u.transpose() * m1) * (m2 * u) * &inv_lam;
    let sv = inner.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularG(cond));
    }
    let g = inner
        .try_inverse()
        .ok_or(Error::SingularG(f64::INFINITY))?;
    let g_symm = linalg::symmetrize(&g);
    let eig = g_symm.clone().symmetric_eigen();
    let lo = eig.eigenvalues.min();
    if !(lo > 0.0) {
        return Err(Error::NegativeSpectrum(lo));
    }
    let root = Matrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let psihat = linalg::symmetrize(&(&eig.eigenvectors * root * eig.eigenvectors.transpose()));
    Ok(CorrectionFactor { psihat, g, g_symm })
}

/// `U Psi_hat diag(lambda) Psi_hat^T U^T`, symmetrized.
pub fn mhat2(dec: &RankRDecomposition, corr: &CorrectionFactor) -> Result<SymmetricMatrix> {
    let r = dec.rank();
    if corr.psihat.shape() != (r, r) {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: corr.psihat.nrows(),
        });
    }
    let lam = Matrix::from_diagonal(&Vector::from_column_slice(&dec.eigenvalues));
    let core = &corr.psihat * lam * corr.psihat.transpose();
    Ok(low_rank(&dec.right, &core))
}

/// Best rank-`r` approximation of the average.
pub fn spectral_baseline(matrices: &[SymmetricMatrix], r: usize) -> Result<SymmetricMatrix> {
    let avg = SymmetricMatrix::mean(matrices)?;
    let (u, vals) = linalg::top_symmetric_eigenpairs(&avg, r)?;
    Ok(RankRDecomposition::symmetric(u, vals).reconstruct())
}

/// `||U_est O - U*||_{2,inf}` with `O` the polar factor of `U_est^T U*`.
pub fn error_2inf(uest: &Matrix, ustar: &Matrix) -> Result<f64> {
    check_shapes(uest, ustar)?;
    let o = linalg::polar_factor(&(uest.transpose() * ustar));
    Ok(linalg::two_inf_norm(&(uest * o - ustar)))
}

/// Like [`error_2inf`], but also tries every `+-1` column sign pattern and
/// keeps the smaller error. Meant for per-column estimators such as `U_hat`.
pub fn error_2inf_signed(uest: &Matrix, ustar: &Matrix) -> Result<f64> {
    check_shapes(uest, ustar)?;
    let r = uest.ncols();
    if r > 10 {
        return Err(Error::InvalidArgument(format!("sign search limited to r <= 10, got {r}")));
    }
    let mut best = error_2inf(uest, ustar)?;
    for pattern in 0u32..(1 << r) {
        let mut flipped = uest.clone();
        for k in 0..r {
            if pattern & (1 << k) != 0 {
                flipped.column_mut(k).neg_mut();
            }
        }
        best = best.min(linalg::two_inf_norm(&(flipped - ustar)));
    }
    Ok(best)
}

pub fn error_linf(mest: &Matrix, mstar: &Matrix) -> Result<f64> {
    check_shapes(mest, mstar)?;
    Ok(linalg::max_abs(&(mest - mstar)))
}

fn check_shapes(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: b.nrows() * b.ncols(),
            got: a.nrows() * a.ncols(),
        });
    }
    Ok(())
}

/// Entrywise estimators of the shared low-rank matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Estimator {
    Spec,
    Mhat1,
    Mhat2,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Spec, Estimator::Mhat1, Estimator::Mhat2];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Spec => "spec",
            Estimator::Mhat1 => "mhat1",
            Estimator::Mhat2 => "mhat2",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator `{s}`")))
    }
}

/// Observations available for refinement, already masked.
///
/// `upper` and `lower` build the base composite; `extra` holds the two
/// further copies used by the correction factor. M-hat-1 folds the extra
/// copies into the composite when they are present.
#[derive(Clone, Copy, Debug)]
pub struct RefineInputs<'a> {
    pub upper: &'a [SymmetricMatrix],
    pub lower: &'a [SymmetricMatrix],
    pub extra: Option<(&'a SymmetricMatrix, &'a SymmetricMatrix)>,
}

impl RefineInputs<'_> {
    fn all(&self) -> Vec<SymmetricMatrix> {
        let mut v: Vec<SymmetricMatrix> = self.upper.iter().chain(self.lower).cloned().collect();
        if let Some((a, b)) = self.extra {
            v.push(a.clone());
            v.push(b.clone());
        }
        v
    }
}

/// Everything one estimator produces.
#[derive(Clone, Debug)]
pub struct Refined {
    pub matrix: SymmetricMatrix,
    /// Eigenspace estimate behind `matrix`.
    pub basis: Matrix,
    /// True when `basis` is a per-column estimate (sign alignment applies).
    pub per_column: bool,
}

pub fn refine(which: Estimator, inputs: &RefineInputs<'_>, r: usize) -> Result<Refined> {
    match which {
        Estimator::Spec => {
            let avg = SymmetricMatrix::mean(&inputs.all())?;
            let (u, vals) = linalg::top_symmetric_eigenpairs(&avg, r)?;
            let matrix = RankRDecomposition::symmetric(u.clone(), vals).reconstruct();
            Ok(Refined {
                matrix,
                basis: u,
                per_column: false,
            })
        }
        Estimator::Mhat1 => {
            let mut up = inputs.upper.to_vec();
            let mut lo = inputs.lower.to_vec();
            if let Some((a, b)) = inputs.extra {
                up.push(a.clone());
                lo.push(b.clone());
            }
            let dec = eig_asym(&asymmetric_combine(&up, &lo)?, r)?;
            let uhat = improved_eigvectors(&dec)?;
            Ok(Refined {
                matrix: mhat1(&uhat, &dec.eigenvalues)?,
                basis: uhat,
                per_column: true,
            })
        }
        Estimator::Mhat2 => {
            let (a, b) = inputs
                .extra
                .ok_or_else(|| Error::InvalidArgument("mhat2 needs two extra copies".into()))?;
            let dec = eig_asym(&asymmetric_combine(inputs.upper, inputs.lower)?, r)?;
            let corr = psihat(&dec, a.as_matrix(), b.as_matrix())?;
            Ok(Refined {
                matrix: mhat2(&dec, &corr)?,
                basis: &dec.right * &corr.psihat,
                per_column: false,
            })
        }
    }
}

/// Whether the removed set misses part of the true support.
pub fn contaminated(removed: &[usize], truth: &[usize]) -> bool {
    truth.iter().any(|t| !removed.contains(t))
}
