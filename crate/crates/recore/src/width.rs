//! Gaussian-width complexity measures: Monte Carlo estimators for the
//! E_s image set, the column set of Sigma^{1/2}, and the sparse sphere U_m,
//! plus the closed-form covering and Gaussian-maximum bounds they are
//! checked against. Natural logarithms throughout.

use alloc::vec::Vec;
use core::fmt;

use crate::cone::{random_cone_vector, top_support};
use crate::linalg::{dot, norm1, norm2};
use crate::model::CovarianceModel;
use crate::recert::binomial;
use crate::rng::Stream;

#[derive(Clone, Debug, PartialEq)]
pub enum WidthError {
    BadParams,
}

impl fmt::Display for WidthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid width parameters")
    }
}

/// Which set a width estimate refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SetKind {
    /// Upsilon = Sigma^{1/2}(E_s); inner sup approximated, LOWER estimate.
    EsImage,
    /// Columns of Sigma^{1/2}; inner sup exact over the finite set.
    ColumnSet,
    /// Sparse sphere U_m under Sigma^{1/2}; inner sup exact (top-m norm).
    SparseSphere,
    Custom,
}

/// A Monte Carlo width estimate.
#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub set_kind: SetKind,
}

fn summarize(samples: &[f64], set_kind: SetKind) -> WidthEstimate {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (n as f64 - 1.0).max(1.0);
    WidthEstimate {
        mean,
        std_error: libm::sqrt(var / n as f64),
        trials: n,
        set_kind,
    }
}

/// Approximate sup over E_s of |<g, delta>| for one Gaussian image
/// g = Sigma^{1/2} h: max over sampled cone vectors plus projected ascent
/// from the best sample. A lower estimate of the true supremum.
pub fn es_inner_sup(
    model: &CovarianceModel,
    g: &[f64],
    s: usize,
    k0: f64,
    inner_samples: usize,
    rng: &mut Stream,
) -> f64 {
    let p = model.p;
    let mut best_val = 0.0;
    let mut best: Vec<f64> = Vec::new();
    for _ in 0..inner_samples {
        let mut delta = random_cone_vector(p, s, k0, rng);
        crate::cone::normalize_sigma_half(model, &mut delta);
        let v = libm::fabs(dot(g, &delta));
        if v > best_val {
            best_val = v;
            best = delta;
        }
    }
    if best.is_empty() {
        return best_val;
    }
    // local ascent of the linear objective over the cone
    let mut delta = best;
    for _ in 0..50 {
        let sign = if dot(g, &delta) >= 0.0 { 1.0 } else { -1.0 };
        let mut improved = false;
        let mut step = 0.5;
        while step > 1e-10 {
            let mut cand: Vec<f64> = delta
                .iter()
                .zip(g.iter())
                .map(|(d, gi)| d + step * sign * gi)
                .collect();
            // re-impose the T0 cone and the ellipsoid normalization
            let t0 = top_support(&cand, s);
            let l1_t0: f64 = t0.iter().map(|&i| libm::fabs(cand[i])).sum();
            let l1_tail = norm1(&cand) - l1_t0;
            if l1_tail > k0 * l1_t0 && l1_tail > 0.0 {
                let scale = k0 * l1_t0 / l1_tail;
                let mut on_t0 = alloc::vec![false; cand.len()];
                for &i in &t0 {
                    on_t0[i] = true;
                }
                for (i, v) in cand.iter_mut().enumerate() {
                    if !on_t0[i] {
                        *v *= scale;
                    }
                }
            }
            if norm2(&cand) == 0.0 {
                step *= 0.5;
                continue;
            }
            crate::cone::normalize_sigma_half(model, &mut cand);
            let v = libm::fabs(dot(g, &cand));
            if v > best_val * (1.0 + 1e-12) {
                best_val = v;
                delta = cand;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    best_val
}

/// Exact sup over the sparse sphere U_m of |<t, g>|: the l2 norm of the m
/// largest-magnitude entries of g.
pub fn sparse_inner_sup(g: &[f64], m: usize) -> f64 {
    let top = top_support(g, m.min(g.len()));
    libm::sqrt(top.iter().map(|&i| g[i] * g[i]).sum())
}

/// Monte Carlo lower estimate of the width of Upsilon = Sigma^{1/2}(E_s).
pub fn ell_star_upsilon_mc(
    model: &CovarianceModel,
    s: usize,
    k0: f64,
    inner_samples: usize,
    gaussian_trials: usize,
    seed: u64,
) -> Result<WidthEstimate, WidthError> {
    if s == 0 || 2 * s > model.p || !(k0 > 0.0) || inner_samples == 0 || gaussian_trials == 0 {
        return Err(WidthError::BadParams);
    }
    let p = model.p;
    let mut samples = Vec::with_capacity(gaussian_trials);
    for t in 0..gaussian_trials {
        let mut rng = Stream::substream(seed, t as u64);
        let h: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
        let g = model.sigma_half.matvec(&h);
        samples.push(es_inner_sup(model, &g, s, k0, inner_samples, &mut rng));
    }
    Ok(summarize(&samples, SetKind::EsImage))
}

/// Width of the column set of Sigma^{1/2}: exact inner sup over the p
/// columns, Monte Carlo over the Gaussian draw only.
pub fn ell_star_phi_mc(
    model: &CovarianceModel,
    gaussian_trials: usize,
    seed: u64,
) -> Result<WidthEstimate, WidthError> {
    if gaussian_trials == 0 {
        return Err(WidthError::BadParams);
    }
    let p = model.p;
    let mut samples = Vec::with_capacity(gaussian_trials);
    for t in 0..gaussian_trials {
        let mut rng = Stream::substream(seed, t as u64);
        let h: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
        // <h, rho_j> = (Sigma^{1/2} h)_j since Sigma^{1/2} is symmetric
        let g = model.sigma_half.matvec(&h);
        samples.push(crate::linalg::norm_inf(&g));
    }
    Ok(summarize(&samples, SetKind::ColumnSet))
}

/// Width of the sparse sphere under Sigma^{1/2}: exact inner sup per draw
/// (l2 norm of the top-m entries of Sigma^{1/2} h).
pub fn ell_star_sparse_sphere_mc(
    model: &CovarianceModel,
    m: usize,
    gaussian_trials: usize,
    seed: u64,
) -> Result<WidthEstimate, WidthError> {
    if m == 0 || m > model.p || gaussian_trials == 0 {
        return Err(WidthError::BadParams);
    }
    let p = model.p;
    let mut samples = Vec::with_capacity(gaussian_trials);
    for t in 0..gaussian_trials {
        let mut rng = Stream::substream(seed, t as u64);
        let h: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
        let g = model.sigma_half.matvec(&h);
        samples.push(sparse_inner_sup(&g, m));
    }
    Ok(summarize(&samples, SetKind::SparseSphere))
}

/// Covering-number bound (5/(2 eps))^m * C(p, m), with a log fallback when
/// the plain value overflows f64.
#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoveringBound {
    pub value: Option<f64>,
    pub log_value: f64,
    pub overflowed: bool,
}

pub fn covering_bound(m: usize, p: usize, eps: f64) -> Result<CoveringBound, WidthError> {
    if !(eps > 0.0 && eps <= 0.5) || m > p {
        return Err(WidthError::BadParams);
    }
    let base = 5.0 / (2.0 * eps);
    let log_binom = libm::lgamma(p as f64 + 1.0)
        - libm::lgamma(m as f64 + 1.0)
        - libm::lgamma((p - m) as f64 + 1.0);
    let log_value = m as f64 * libm::log(base) + log_binom;
    let binom = binomial(p, m);
    let value = if binom < u64::MAX {
        let v = libm::pow(base, m as f64) * binom as f64;
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    } else {
        let v = libm::exp(log_value);
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    };
    Ok(CoveringBound { value, log_value, overflowed: value.is_none() })
}

/// Gaussian maximality bound 3 sqrt(ln N) * max_std.
pub fn gaussian_max_bound(n_vars: usize, max_std: f64) -> Result<f64, WidthError> {
    if n_vars < 2 {
        return Err(WidthError::BadParams);
    }
    Ok(3.0 * libm::sqrt(libm::log(n_vars as f64)) * max_std)
}
