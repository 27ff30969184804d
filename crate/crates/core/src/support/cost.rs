use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::SymmetricMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostMode {
    /// `Y o Y`.
    Single,
    /// `min(Y o Y, tau^2)`.
    Truncated,
    /// `Y1 o Y2` from two independent residuals (or the averages of two halves).
    Multi,
}

impl CostMode {
    pub fn name(self) -> &'static str {
        match self {
            CostMode::Single => "single",
            CostMode::Truncated => "truncated",
            CostMode::Multi => "multi",
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct CostMatrix {
    pub c: Matrix,
    pub mode: CostMode,
    pub tau: Option<f64>,
}

impl CostMatrix {
    pub fn dim(&self) -> usize {
        self.c.nrows()
    }
}

/// Builds the SDP cost from residual matrices.
///
/// Multi mode with more than two residuals averages the first `ceil(N/2)` and
/// the remaining ones separately before taking the entrywise product.
pub fn build_cost(residuals: &[SymmetricMatrix], mode: CostMode, tau: Option<f64>) -> Result<CostMatrix> {
    let arity_ok = match mode {
        CostMode::Single | CostMode::Truncated => residuals.len() == 1,
        CostMode::Multi => residuals.len() >= 2,
    };
    if !arity_ok {
        return Err(Error::ModeArity {
            mode: mode.name(),
            got: residuals.len(),
        });
    }
    let n = residuals[0].n();
    if let Some(bad) = residuals.iter().find(|r| r.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.n() });
    }
    let c = match mode {
        CostMode::Single => residuals[0].map(|v| v * v),
        CostMode::Truncated => {
            let t = tau.filter(|t| *t > 0.0 && t.is_finite()).ok_or(Error::MissingTau)?;
            let t2 = t * t;
            residuals[0].map(|v| (v * v).min(t2))
        }
        CostMode::Multi => {
            let half = residuals.len().div_ceil(2);
            let a = SymmetricMatrix::mean(&residuals[..half])?;
            let b = SymmetricMatrix::mean(&residuals[half..])?;
            a.component_mul(&b)
        }
    };
    Ok(CostMatrix {
        c,
        mode,
        tau: if mode == CostMode::Truncated { tau } else { None },
    })
}
