//! Burer-Monteiro solver for the relaxed support SDP
//!
//! ```text
//! min <C, Z>  s.t.  tr Z = K,  <J, Z> = K^2,  Z = X X^T
//! ```
//!
//! with `K = n - m`. An augmented Lagrangian handles the two equality
//! constraints; the inner problem is solved by gradient descent with
//! Barzilai-Borwein steps and Armijo backtracking.

use nalgebra::RowDVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cost::CostMatrix;
use super::{SupportEstimate, SupportMethod};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct SdpOptions {
    /// Columns of the factor `X`.
    pub rank: usize,
    /// Relative feasibility tolerance: `|tr Z - K| <= tol K`, `|<J,Z> - K^2| <= tol K^2`.
    pub feas_tol: f64,
    /// Relative change of the objective between outer sweeps.
    pub obj_tol: f64,
    pub restarts: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    pub seed: u64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            rank: 3,
            feas_tol: 1e-6,
            obj_tol: 1e-8,
            restarts: 3,
            max_outer: 60,
            max_inner: 3000,
            seed: 0x5D9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Factor with `Z = X X^T`.
    pub x: Matrix,
    pub k: usize,
    /// `<C, Z>` in the units of the input cost.
    pub objective: f64,
    pub trace_residual: f64,
    pub sum_residual: f64,
    /// `max(-min Z_ij, 0)`; the relaxation does not enforce entrywise bounds.
    pub negativity: f64,
    /// `max(max Z_ii - 1, 0)`.
    pub diag_excess: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective reached by each restart, in restart order.
    pub restart_objectives: Vec<f64>,
}

impl SdpSolution {
    pub fn z(&self) -> Matrix {
        &self.x * self.x.transpose()
    }

    /// Row sums of `Z`, computed as `X (X^T 1)`.
    pub fn row_sums(&self) -> Vec<f64> {
        let s = self.x.row_sum_tr();
        (&self.x * s).iter().copied().collect()
    }

    pub fn feasible(&self, feas_tol: f64) -> bool {
        let k = self.k as f64;
        self.trace_residual <= feas_tol * k && self.sum_residual <= feas_tol * k * k
    }
}

struct Problem<'a> {
    c: &'a Matrix,
    k: f64,
}

/// Scalar pieces of the augmented Lagrangian at one point.
#[derive(Clone, Copy)]
struct Parts {
    f: f64,
    g1: f64,
    g2: f64,
}

struct State {
    x: Matrix,
    cx: Matrix,
    /// Column sums `X^T 1`, stored as a row.
    s: RowDVector<f64>,
}

impl Problem<'_> {
    fn parts(&self, st: &State) -> Parts {
        Parts {
            f: st.x.dot(&st.cx),
            g1: (st.x.norm_squared() - self.k) / self.k,
            g2: (st.s.norm_squared() - self.k * self.k) / (self.k * self.k),
        }
    }

    fn lagrangian(p: Parts, y: (f64, f64), beta: f64) -> f64 {
        p.f + y.0 * p.g1 + y.1 * p.g2 + 0.5 * beta * (p.g1 * p.g1 + p.g2 * p.g2)
    }

    fn gradient(&self, st: &State, p: Parts, y: (f64, f64), beta: f64) -> Matrix {
        let a = 2.0 * (y.0 + beta * p.g1) / self.k;
        let b = 2.0 * (y.1 + beta * p.g2) / (self.k * self.k);
        let mut g = &st.cx * 2.0 + &st.x * a;
        let shift = &st.s * b;
        for mut row in g.row_iter_mut() {
            row += &shift;
        }
        g
    }

    fn state(&self, x: Matrix) -> State {
        let cx = self.c * &x;
        let s = x.row_sum();
        State { x, cx, s }
    }

    /// Minimizes the augmented Lagrangian from `st`; returns (iterations, reached tol).
    fn inner(&self, st: &mut State, y: (f64, f64), beta: f64, tol: f64, max_iter: usize) -> (usize, bool) {
        let sqrt_k = self.k.sqrt();
        let mut p = self.parts(st);
        let mut lval = Self::lagrangian(p, y, beta);
        let mut g = self.gradient(st, p, y, beta);
        let mut step = 1.0 / (g.norm() * sqrt_k).max(1e-12);
        for it in 0..max_iter {
            let gn2 = g.norm_squared();
            if gn2.sqrt() * sqrt_k <= tol {
                return (it, true);
            }
            let d = -&g;
            let cd = self.c * &d;
            let ds = d.row_sum();
            // Along X + t D every term is a polynomial in t.
            let (f0, f1, f2) = (p.f, 2.0 * d.dot(&st.cx), d.dot(&cd));
            let (x0, x1, x2) = (st.x.norm_squared(), 2.0 * st.x.dot(&d), d.norm_squared());
            let (s0, s1, s2) = (st.s.norm_squared(), 2.0 * st.s.dot(&ds), ds.norm_squared());
            let k2 = self.k * self.k;
            let eval = |t: f64| {
                let q = Parts {
                    f: f0 + t * (f1 + t * f2),
                    g1: (x0 + t * (x1 + t * x2) - self.k) / self.k,
                    g2: (s0 + t * (s1 + t * s2) - k2) / k2,
                };
                (q, Self::lagrangian(q, y, beta))
            };
            let mut t = step;
            let mut accepted = None;
            for _ in 0..60 {
                let (q, lt) = eval(t);
                if lt.is_finite() && lt <= lval - 1e-4 * t * gn2 {
                    accepted = Some((q, lt));
                    break;
                }
                t *= 0.5;
            }
            let Some((q, lt)) = accepted else {
                // No decrease is representable in floating point any more.
                return (it, true);
            };
            st.x += &d * t;
            if (it + 1) % 64 == 0 {
                st.cx = self.c * &st.x;
            } else {
                st.cx += &cd * t;
            }
            st.s += &ds * t;
            p = if (it + 1) % 64 == 0 { self.parts(st) } else { q };
            lval = if (it + 1) % 64 == 0 { Self::lagrangian(p, y, beta) } else { lt };
            let g_new = self.gradient(st, p, y, beta);
            let dg = &g_new - &g;
            let sy = t * d.dot(&dg);
            let ss = t * t * x2;
            step = if sy > 0.0 { (ss / sy).clamp(1e-14, 1e14) } else { (2.0 * t).min(1e14) };
            g = g_new;
        }
        let ok = g.norm() * sqrt_k <= tol;
        (max_iter, ok)
    }
}

/// Burer-Monteiro augmented-Lagrangian solve; never panics on non-convergence.
pub fn solve_sdp(cost: &CostMatrix, m: usize, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = cost.dim();
    if m == 0 || m >= n {
        return Err(Error::InvalidSupportSize { m, n });
    }
    if opts.rank == 0 || opts.restarts == 0 {
        return Err(Error::InvalidArgument("SDP rank and restarts must be positive".into()));
    }
    if cost.c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let k = (n - m) as f64;
    let mean_abs = cost.c.iter().map(|v| v.abs()).sum::<f64>() / (n * n) as f64;
    let unit = if mean_abs > 0.0 { mean_abs * k * k } else { 1.0 };
    let scaled = &cost.c / unit;
    let prob = Problem { c: &scaled, k };

    let mut best: Option<SdpSolution> = None;
    let mut objectives = Vec::with_capacity(opts.restarts);
    for restart in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart as u64));
        let base = (k / n as f64).sqrt();
        let mut x0 = linalg::gaussian_matrix(n, opts.rank, &mut rng) * (0.1 * base);
        x0.column_mut(0).add_scalar_mut(base);
        let sol = solve_from(&prob, x0, n - m, unit, opts);
        objectives.push(sol.objective);
        let better = match &best {
            None => true,
            Some(b) => (sol.converged && !b.converged) || (sol.converged == b.converged && sol.objective < b.objective),
        };
        if better {
            best = Some(sol);
        }
    }
    let mut best = best.expect("at least one restart");
    best.restart_objectives = objectives;
    Ok(best)
}

fn solve_from(prob: &Problem<'_>, x0: Matrix, k_int: usize, unit: f64, opts: &SdpOptions) -> SdpSolution {
    let k = prob.k;
    let mut st = prob.state(x0);
    let mut y = (0.0, 0.0);
    let mut beta = 1.0;
    let mut prev_viol = f64::INFINITY;
    let mut prev_f = f64::NAN;
    let mut inner_tol = 1e-2;
    let floor_tol = 1e-8;
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..opts.max_outer {
        let (its, reached) = prob.inner(&mut st, y, beta, inner_tol, opts.max_inner);
        iterations += its;
        // Refresh accumulated products before judging convergence.
        st.cx = prob.c * &st.x;
        st.s = st.x.row_sum();
        let p = prob.parts(&st);
        let viol = p.g1.abs().max(p.g2.abs());
        let rel = (p.f - prev_f).abs() / p.f.abs().max(1.0);
        if viol <= opts.feas_tol && rel <= opts.obj_tol && reached && inner_tol <= 1e-6 {
            converged = true;
            break;
        }
        prev_f = p.f;
        y.0 += beta * p.g1;
        y.1 += beta * p.g2;
        if viol > 0.25 * prev_viol {
            beta *= 5.0;
        }
        prev_viol = viol;
        inner_tol = (inner_tol * 0.1).max(floor_tol);
    }
    let p = prob.parts(&st);
    let (mut zmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let n = st.x.nrows();
    for j in 0..n {
        for i in 0..=j {
            let z = st.x.row(i).dot(&st.x.row(j));
            zmin = zmin.min(z);
            if i == j {
                dmax = dmax.max(z);
            }
        }
    }
    SdpSolution {
        objective: p.f * unit,
        trace_residual: (p.g1 * k).abs(),
        sum_residual: (p.g2 * k * k).abs(),
        negativity: (-zmin).max(0.0),
        diag_excess: (dmax - 1.0).max(0.0),
        x: st.x,
        k: k_int,
        iterations,
        converged,
        restart_objectives: Vec::new(),
    }
}

/// The `m` nodes with the smallest row sums of `Z`.
pub fn extract_support(sol: &SdpSolution, m: usize) -> SupportEstimate {
    SupportEstimate::smallest(sol.row_sums(), m, SupportMethod::Sdp)
}
