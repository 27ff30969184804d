//! Node-support recovery from residual matrices.

pub mod cost;
pub mod glasso;
pub mod lse;
pub mod sdp;
pub mod select;

use std::fmt;
use std::str::FromStr;

pub use cost::{build_cost, CostMatrix, CostMode};
pub use glasso::{group_lasso, group_lasso_path, GroupLassoFit, GroupLassoOptions, GroupLassoPath};
pub use lse::lse_bruteforce;
pub use sdp::{extract_support, solve_sdp, SdpOptions, SdpSolution};
pub use select::{select_m, MSelection, SelectOptions};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::SymmetricMatrix;
use crate::spectral::Residual;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SupportMethod {
    Sdp,
    SdpTruncated,
    SdpMulti,
    GroupLasso,
    Hard,
    Lse,
}

impl SupportMethod {
    pub const ALL: [SupportMethod; 6] = [
        SupportMethod::Sdp,
        SupportMethod::SdpTruncated,
        SupportMethod::SdpMulti,
        SupportMethod::GroupLasso,
        SupportMethod::Hard,
        SupportMethod::Lse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SupportMethod::Sdp => "sdp",
            SupportMethod::SdpTruncated => "sdp-trunc",
            SupportMethod::SdpMulti => "sdp-multi",
            SupportMethod::GroupLasso => "glasso",
            SupportMethod::Hard => "hard",
            SupportMethod::Lse => "lse",
        }
    }
}

impl fmt::Display for SupportMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SupportMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SupportMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Selected node set together with the per-node scores it was ranked by.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportEstimate {
    /// Ascending node indices, `|indices| = m`.
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub method: SupportMethod,
}

impl SupportEstimate {
    /// Picks the `m` smallest scores; ties go to the lower index.
    pub fn smallest(scores: Vec<f64>, m: usize, method: SupportMethod) -> Self {
        let indices = rank_select(&scores, m, |a, b| a.total_cmp(b));
        Self { indices, scores, method }
    }

    /// Picks the `m` largest scores; ties go to the lower index.
    pub fn largest(scores: Vec<f64>, m: usize, method: SupportMethod) -> Self {
        let indices = rank_select(&scores, m, |a, b| b.total_cmp(a));
        Self { indices, scores, method }
    }

    pub fn empty(n: usize, method: SupportMethod) -> Self {
        Self {
            indices: Vec::new(),
            scores: vec![0.0; n],
            method,
        }
    }

    /// Maps local residual indices back to original node labels.
    pub fn translated(&self, residual: &Residual) -> Vec<usize> {
        residual.translate(&self.indices)
    }
}

fn rank_select(scores: &[f64], m: usize, cmp: impl Fn(&f64, &f64) -> std::cmp::Ordering) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| cmp(&scores[a], &scores[b]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(m).collect();
    chosen.sort_unstable();
    chosen
}

/// Masks the residual to rows and columns of the selected nodes.
pub fn estimate_b(residual: &SymmetricMatrix, support: &[usize]) -> Result<SymmetricMatrix> {
    let n = residual.n();
    if let Some(&bad) = support.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!("support index {bad} out of range for {n} nodes")));
    }
    let mut on = vec![false; n];
    support.iter().for_each(|&i| on[i] = true);
    Ok(SymmetricMatrix::from_upper(Matrix::from_fn(n, n, |i, j| {
        if on[i] || on[j] {
            residual[(i, j)]
        } else {
            0.0
        }
    })))
}

/// [`estimate_b`] on a screened residual, embedded back into the full `n x n` node set.
pub fn estimate_b_original(residual: &Residual, support: &[usize], n: usize) -> Result<SymmetricMatrix> {
    let local = estimate_b(&residual.matrix, support)?;
    let mut full = Matrix::zeros(n, n);
    for (a, &i) in residual.index_map.iter().enumerate() {
        for (b, &j) in residual.index_map.iter().enumerate() {
            full[(i, j)] = local[(a, b)];
        }
    }
    Ok(SymmetricMatrix::from_upper(full))
}

/// The `m` rows of largest l2 norm.
pub fn hard_threshold(residual: &SymmetricMatrix, m: usize) -> Result<SupportEstimate> {
    let n = residual.n();
    if m == 0 || m >= n {
        return Err(Error::InvalidSupportSize { m, n });
    }
    Ok(SupportEstimate::largest(linalg::row_norms(residual), m, SupportMethod::Hard))
}

#[derive(Clone, Debug)]
pub struct RecoverOptions {
    pub sdp: SdpOptions,
    pub glasso: GroupLassoOptions,
    /// Grid points for the group-lasso support path.
    pub path_points: usize,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        Self {
            sdp: SdpOptions::default(),
            glasso: GroupLassoOptions::default(),
            path_points: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Recovery {
    /// Support in the local indices of the residuals.
    pub estimate: SupportEstimate,
    pub converged: bool,
    pub sdp: Option<SdpSolution>,
}

/// Runs one selector on the residuals of a subject's copies.
///
/// Every method except `sdp-multi` works on the average of the residuals.
/// `tau` is required for `sdp-trunc`.
pub fn recover(
    method: SupportMethod,
    residuals: &[SymmetricMatrix],
    m: usize,
    tau: Option<f64>,
    opts: &RecoverOptions,
) -> Result<Recovery> {
    let avg = || SymmetricMatrix::mean(residuals);
    let via_sdp = |cost: CostMatrix| -> Result<Recovery> {
        let sol = solve_sdp(&cost, m, &opts.sdp)?;
        let mut estimate = extract_support(&sol, m);
        estimate.method = method;
        Ok(Recovery {
            estimate,
            converged: sol.converged,
            sdp: Some(sol),
        })
    };
    let plain = |estimate: SupportEstimate| Recovery {
        estimate,
        converged: true,
        sdp: None,
    };
    match method {
        SupportMethod::Sdp => via_sdp(build_cost(&[avg()?], CostMode::Single, None)?),
        SupportMethod::SdpTruncated => via_sdp(build_cost(&[avg()?], CostMode::Truncated, tau)?),
        SupportMethod::SdpMulti => via_sdp(build_cost(residuals, CostMode::Multi, None)?),
        SupportMethod::GroupLasso => Ok(plain(glasso::group_lasso_support(
            &avg()?,
            m,
            opts.path_points.max(2),
            &opts.glasso,
        )?)),
        SupportMethod::Hard => Ok(plain(hard_threshold(&avg()?, m)?)),
        SupportMethod::Lse => Ok(plain(lse_bruteforce(&avg()?, m)?)),
    }
}

/// False negative rate `1 - |est & truth| / |truth|`.
pub fn fnr(est: &[usize], truth: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let hits = truth.iter().filter(|t| est.contains(t)).count();
    Ok(1.0 - hits as f64 / truth.len() as f64)
}
