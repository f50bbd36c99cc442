//! The two estimators: Lasso by cyclic coordinate descent and the Dantzig
//! selector by a dense two-phase primal simplex with Bland's rule.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, norm1, norm_inf, Matrix};

pub const LASSO_DEFAULT_TOL: f64 = 1e-10;
pub const LASSO_DEFAULT_MAX_ITER: usize = 100_000;
const SIMPLEX_PIVOT_CAP: usize = 200_000;
const SIMPLEX_EPS: f64 = 1e-9;

/// Outcome of either solver. `objective_or_l1` is the penalized objective
/// for the Lasso and the l1 norm of the estimate for the Dantzig selector.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverResult {
    pub beta_hat: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective_or_l1: f64,
    pub kkt_residual: f64,
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    let mag = libm::fabs(z) - lambda;
    if mag <= 0.0 {
        0.0
    } else if z > 0.0 {
        mag
    } else {
        -mag
    }
}

/// Penalized objective (1/2n)||y - x b||^2 + lambda ||b||_1.
pub fn lasso_objective(x: &Matrix, y: &[f64], lambda: f64, beta: &[f64]) -> f64 {
    let fitted = x.matvec(beta);
    let rss: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(yi, fi)| (yi - fi) * (yi - fi))
        .sum();
    rss / (2.0 * x.rows as f64) + lambda * norm1(beta)
}

/// Gram matrix X^T X / n and correlations X^T y / n.
fn gram_and_corr(x: &Matrix, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, p) = (x.rows, x.cols);
    let inv_n = 1.0 / n as f64;
    let mut g = vec![0.0; p * p];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            let rj = row[j];
            if rj == 0.0 {
                continue;
            }
            for k in j..p {
                g[j * p + k] += rj * row[k];
            }
        }
    }
    for j in 0..p {
        for k in j..p {
            let v = g[j * p + k] * inv_n;
            g[j * p + k] = v;
            g[k * p + j] = v;
        }
    }
    let z: Vec<f64> = x.matvec_t(y).iter().map(|v| v * inv_n).collect();
    (g, z)
}

fn lasso_kkt_residual(g: &[f64], z: &[f64], lambda: f64, beta: &[f64]) -> f64 {
    let p = beta.len();
    let mut worst = 0.0f64;
    for j in 0..p {
        let grad = z[j] - dot(&g[j * p..(j + 1) * p], beta);
        let violation = if beta[j] > 0.0 {
            libm::fabs(grad - lambda)
        } else if beta[j] < 0.0 {
            libm::fabs(grad + lambda)
        } else {
            (libm::fabs(grad) - lambda).max(0.0)
        };
        worst = worst.max(violation);
    }
    worst
}

/// Cyclic coordinate descent with precomputed Gram updates. Stops when the
/// largest coordinate change in a sweep falls below tol * (1 + ||beta||_inf).
pub fn lasso(x: &Matrix, y: &[f64], lambda: f64, tol: f64, max_iter: usize) -> SolverResult {
    assert!(lambda >= 0.0 && x.rows >= 1 && x.cols >= 1 && y.len() == x.rows);
    let p = x.cols;
    let (g, z) = gram_and_corr(x, y);
    let mut beta = vec![0.0; p];
    let mut gb = vec![0.0; p];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_iter {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            let gjj = g[j * p + j];
            if gjj <= 0.0 {
                continue;
            }
            let old = beta[j];
            let partial = z[j] - (gb[j] - gjj * old);
            let new = soft_threshold(partial, lambda) / gjj;
            if new != old {
                let delta = new - old;
                beta[j] = new;
                for k in 0..p {
                    gb[k] += delta * g[j * p + k];
                }
                max_change = max_change.max(libm::fabs(delta));
            }
        }
        if max_change < tol * (1.0 + norm_inf(&beta)) {
            converged = true;
            break;
        }
    }
    SolverResult {
        objective_or_l1: lasso_objective(x, y, lambda, &beta),
        kkt_residual: lasso_kkt_residual(&g, &z, lambda, &beta),
        beta_hat: beta,
        iterations: sweeps,
        converged,
    }
}

/// Dense two-phase primal simplex for min c.w, A w + slack = b, w >= 0.
/// Bland's smallest-index rule for both entering and leaving variables.
struct Simplex {
    rows: usize,
    cols: usize,
    /// row-major tableau, `cols` coefficient columns then the rhs
    t: Vec<f64>,
    basis: Vec<usize>,
    banned: Vec<bool>,
    pivots: usize,
}

enum SimplexStatus {
    Optimal,
    Unbounded,
    PivotCap,
}

impl Simplex {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let w = self.cols + 1;
        let pv = self.t[prow * w + pcol];
        for c in 0..w {
            self.t[prow * w + c] /= pv;
        }
        for r in 0..self.rows {
            if r == prow {
                continue;
            }
            let f = self.t[r * w + pcol];
            if f == 0.0 {
                continue;
            }
            for c in 0..w {
                self.t[r * w + c] -= f * self.t[prow * w + c];
            }
        }
        self.basis[prow] = pcol;
        self.pivots += 1;
    }

    /// Minimize `cost . w` from the current basic feasible solution.
    fn solve(&mut self, cost: &[f64]) -> SimplexStatus {
        let w = self.cols + 1;
        // reduced-cost row, kept canonical with respect to the basis
        let mut obj = vec![0.0; w];
        obj[..self.cols].copy_from_slice(cost);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for c in 0..w {
                obj[c] -= cb * self.t[r * w + c];
            }
        }
        loop {
            if self.pivots >= SIMPLEX_PIVOT_CAP {
                return SimplexStatus::PivotCap;
            }
            let mut entering = None;
            for c in 0..self.cols {
                if !self.banned[c] && obj[c] < -SIMPLEX_EPS {
                    entering = Some(c);
                    break;
                }
            }
            let Some(pcol) = entering else {
                return SimplexStatus::Optimal;
            };
            let mut leaving: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, pcol);
                if a > SIMPLEX_EPS {
                    let ratio = self.rhs(r) / a;
                    let better = ratio < best_ratio - SIMPLEX_EPS
                        || (ratio < best_ratio + SIMPLEX_EPS
                            && leaving.map_or(true, |lr| self.basis[r] < self.basis[lr]));
                    if better {
                        best_ratio = ratio;
                        leaving = Some(r);
                    }
                }
            }
            let Some(prow) = leaving else {
                return SimplexStatus::Unbounded;
            };
            let f = obj[pcol];
            self.pivot(prow, pcol);
            for c in 0..w {
                obj[c] -= f * self.t[prow * w + c];
            }
        }
    }
}

/// Dantzig selector: minimize ||beta||_1 subject to
/// ||X^T (y - X beta)/n||_inf <= lambda, as an LP in split variables.
pub fn dantzig(x: &Matrix, y: &[f64], lambda: f64, tol: f64) -> SolverResult {
    assert!(lambda >= 0.0 && x.rows >= 1 && x.cols >= 1 && y.len() == x.rows);
    let p = x.cols;
    let (g, z) = gram_and_corr(x, y);

    // trivial case: zero is feasible and l1-minimal
    if norm_inf(&z) <= lambda {
        return SolverResult {
            beta_hat: vec![0.0; p],
            iterations: 0,
            converged: true,
            objective_or_l1: 0.0,
            kkt_residual: 0.0,
        };
    }

    // rows: G(u-v) <= z + lambda and -G(u-v) <= lambda - z
    // columns: u (p), v (p), slacks (2p), artificials (for flipped rows)
    let m = 2 * p;
    let structural = 2 * p;
    let mut raw_rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m);
    for i in 0..p {
        let mut row = vec![0.0; structural];
        for j in 0..p {
            row[j] = g[i * p + j];
            row[p + j] = -g[i * p + j];
        }
        raw_rows.push((row, z[i] + lambda));
    }
    for i in 0..p {
        let mut row = vec![0.0; structural];
        for j in 0..p {
            row[j] = -g[i * p + j];
            row[p + j] = g[i * p + j];
        }
        raw_rows.push((row, lambda - z[i]));
    }

    let flipped: Vec<bool> = raw_rows.iter().map(|(_, b)| *b < 0.0).collect();
    let n_art = flipped.iter().filter(|f| **f).count();
    let cols = structural + m + n_art;
    let w = cols + 1;
    let mut t = vec![0.0; m * w];
    let mut basis = vec![0usize; m];
    let mut art = 0;
    for (r, (row, b)) in raw_rows.iter().enumerate() {
        let sign = if flipped[r] { -1.0 } else { 1.0 };
        for (c, v) in row.iter().enumerate() {
            t[r * w + c] = sign * v;
        }
        t[r * w + structural + r] = sign;
        t[r * w + cols] = sign * b;
        if flipped[r] {
            let a_col = structural + m + art;
            t[r * w + a_col] = 1.0;
            basis[r] = a_col;
            art += 1;
        } else {
            basis[r] = structural + r;
        }
    }

    let mut sx = Simplex {
        rows: m,
        cols,
        t,
        basis,
        banned: vec![false; cols],
        pivots: 0,
    };

    let mut converged = true;
    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in structural + m..cols {
            phase1[c] = 1.0;
        }
        match sx.solve(&phase1) {
            SimplexStatus::Optimal => {}
            _ => converged = false,
        }
        let infeasibility: f64 = (0..m)
            .filter(|&r| sx.basis[r] >= structural + m)
            .map(|r| sx.rhs(r))
            .sum();
        if infeasibility > 1e-7 {
            converged = false;
        }
        // drive artificials out of the basis where possible, then ban them
        for r in 0..m {
            if sx.basis[r] >= structural + m {
                if let Some(c) =
                    (0..structural + m).find(|&c| libm::fabs(sx.at(r, c)) > SIMPLEX_EPS)
                {
                    sx.pivot(r, c);
                }
            }
        }
        for c in structural + m..cols {
            sx.banned[c] = true;
        }
    }

    if converged {
        let mut phase2 = vec![0.0; cols];
        for c in 0..structural {
            phase2[c] = 1.0;
        }
        match sx.solve(&phase2) {
            SimplexStatus::Optimal => {}
            _ => converged = false,
        }
    }

    let mut beta = vec![0.0; p];
    for r in 0..m {
        let b = sx.basis[r];
        if b < p {
            beta[b] += sx.rhs(r);
        } else if b < 2 * p {
            beta[b - p] -= sx.rhs(r);
        }
    }

    let mut gb = vec![0.0; p];
    for i in 0..p {
        gb[i] = dot(&g[i * p..(i + 1) * p], &beta);
    }
    let violation = (0..p)
        .map(|i| libm::fabs(z[i] - gb[i]))
        .fold(0.0f64, f64::max);
    let kkt_residual = (violation - lambda).max(0.0);
    SolverResult {
        objective_or_l1: norm1(&beta),
        iterations: sx.pivots,
        converged: converged && kkt_residual <= tol,
        kkt_residual,
        beta_hat: beta,
    }
}
