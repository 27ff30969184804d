//! Heuristic choice of the support size from SDP solutions.

use std::collections::BTreeMap;

use super::cost::{build_cost, CostMode};
use super::sdp::{extract_support, solve_sdp, SdpOptions};
use crate::error::{Error, Result};
use crate::model::SymmetricMatrix;

#[derive(Clone, Debug)]
pub struct SelectOptions {
    /// Multiplier of the acceptance band `c sigma^2 sqrt((n - m) log n)`.
    pub c_thresh: f64,
    pub max_steps: usize,
    pub sdp: SdpOptions,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            c_thresh: 3.0,
            max_steps: 20,
            sdp: SdpOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MSelection {
    pub m: usize,
    /// Set when the step cap was reached before the stopping rule fired.
    pub capped: bool,
    /// `(m, accepted)` in visiting order.
    pub trace: Vec<(usize, bool)>,
}

/// Walks `m` up while the largest off-support row energy is inconsistent
/// with pure noise and down while it is consistent; stops at the smallest
/// accepted `m` whose predecessor is rejected.
pub fn select_m(residual: &SymmetricMatrix, sigma_hat: f64, m0: usize, opts: &SelectOptions) -> Result<MSelection> {
    let n = residual.n();
    if m0 == 0 || m0 >= n {
        return Err(Error::InvalidSupportSize { m: m0, n });
    }
    if !(sigma_hat >= 0.0) || !sigma_hat.is_finite() {
        return Err(Error::InvalidArgument(format!("noise scale {sigma_hat} must be >= 0")));
    }
    let cost = build_cost(std::slice::from_ref(residual), CostMode::Single, None)?;
    let s2 = sigma_hat * sigma_hat;
    let log_n = (n as f64).ln();
    let mut cache: BTreeMap<usize, bool> = BTreeMap::new();
    let mut accept = |m: usize| -> Result<bool> {
        if let Some(&a) = cache.get(&m) {
            return Ok(a);
        }
        let sol = solve_sdp(&cost, m, &opts.sdp)?;
        let est = extract_support(&sol, m);
        let mut out = vec![true; n];
        est.indices.iter().for_each(|&i| out[i] = false);
        let s_max = (0..n)
            .filter(|&i| out[i])
            .map(|i| (0..n).filter(|&j| out[j]).map(|j| cost.c[(i, j)]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let rest = (n - m) as f64;
        let t = opts.c_thresh * s2 * (rest * log_n).sqrt();
        let ok = (s_max - s2 * rest).abs() <= t;
        cache.insert(m, ok);
        Ok(ok)
    };

    let mut m = m0;
    let mut trace = Vec::new();
    let mut best_accepted: Option<usize> = None;
    for _ in 0..opts.max_steps {
        let ok = accept(m)?;
        trace.push((m, ok));
        if ok {
            best_accepted = Some(best_accepted.map_or(m, |b: usize| b.min(m)));
            if m == 1 {
                return Ok(MSelection { m, capped: false, trace });
            }
            let below = accept(m - 1)?;
            if !below {
                trace.push((m - 1, false));
                return Ok(MSelection { m, capped: false, trace });
            }
            m -= 1;
        } else {
            if m + 1 >= n {
                break;
            }
            m += 1;
        }
    }
    Ok(MSelection {
        m: best_accepted.unwrap_or(m),
        capped: true,
        trace,
    })
}
