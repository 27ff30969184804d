use super::{SupportEstimate, SupportMethod};
use crate::error::{Error, Result};
use crate::model::SymmetricMatrix;

pub const LSE_LIMIT: usize = 16;

/// Exhaustive least squares: the `m`-set `I` minimizing the residual energy
/// `sum_{i <= j, i, j not in I} Y_ij^2`. Ties keep the lexicographically first set.
///
/// Scores are 1 on the chosen set and 0 elsewhere.
pub fn lse_bruteforce(residual: &SymmetricMatrix, m: usize) -> Result<SupportEstimate> {
    let n = residual.n();
    if n > LSE_LIMIT {
        return Err(Error::TooLarge { n, limit: LSE_LIMIT });
    }
    if m == 0 || m >= n {
        return Err(Error::InvalidSupportSize { m, n });
    }
    let sq: Vec<f64> = residual.iter().map(|v| v * v).collect();
    let energy = |mask: u32| {
        let mut e = 0.0;
        for j in 0..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            for i in 0..=j {
                if mask & (1 << i) == 0 {
                    e += sq[i + j * n];
                }
            }
        }
        e
    };
    let mut comb: Vec<usize> = (0..m).collect();
    let mut best = (f64::INFINITY, comb.clone());
    loop {
        let mask = comb.iter().fold(0u32, |acc, &i| acc | (1 << i));
        let e = energy(mask);
        if e < best.0 {
            best = (e, comb.clone());
        }
        // Next combination in lexicographic order.
        let mut k = m;
        while k > 0 && comb[k - 1] == n - m + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        comb[k - 1] += 1;
        for t in k..m {
            comb[t] = comb[t - 1] + 1;
        }
    }
    let mut scores = vec![0.0; n];
    best.1.iter().for_each(|&i| scores[i] = 1.0);
    Ok(SupportEstimate {
        indices: best.1,
        scores,
        method: SupportMethod::Lse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn all_tie_picks_first_subset() {
        let est = lse_bruteforce(&SymmetricMatrix::zeros(8), 3).unwrap();
        assert_eq!(est.indices, vec![0, 1, 2]);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            lse_bruteforce(&SymmetricMatrix::zeros(17), 2),
            Err(Error::TooLarge { n: 17, limit: 16 })
        ));
    }

    #[test]
    fn finds_planted_rows() {
        let mut b = Matrix::zeros(10, 10);
        for &i in &[3usize, 7] {
            for j in 0..10 {
                b[(i, j)] = 1.0 + j as f64;
                b[(j, i)] = 1.0 + j as f64;
            }
        }
        let est = lse_bruteforce(&SymmetricMatrix::from_upper(b), 2).unwrap();
        assert_eq!(est.indices, vec![3, 7]);
    }
}
