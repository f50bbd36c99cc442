//! Closed-form theoretical quantities and event predicates: the noise
//! penalty scale, the C-bar constant, sample-size thresholds, error-bound
//! constants, the column-norm and noise-correlation events, and tail
//! probabilities. Natural logarithms throughout.

use core::fmt;

use crate::linalg::{norm2, norm_inf, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub enum BoundsError {
    /// log p must be positive, so p >= 2.
    DimensionTooSmall { p: usize },
    /// Gaussian-max bound needs at least two variables.
    TooFewVariables { n_vars: usize },
    BadParams,
}

impl fmt::Display for BoundsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundsError::DimensionTooSmall { p } => write!(f, "p={p} too small, need p >= 2"),
            BoundsError::TooFewVariables { n_vars } => {
                write!(f, "need at least 2 variables, got {n_vars}")
            }
            BoundsError::BadParams => write!(f, "invalid bound parameters"),
        }
    }
}

/// The theory-level constants the formulas depend on. The absolute constants
/// c' and c-bar are never pinned numerically by the theory, so they default
/// to 1 and the thresholds are shape predictions rather than hard gates.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoryConfig {
    pub sigma_noise: f64,
    pub a: f64,
    pub theta: f64,
    pub alpha_psi2: f64,
    pub c_prime: f64,
    pub c_bar_abs: f64,
    /// Gaussian-design probability exponent (failure probability 4/p^d).
    pub d: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            sigma_noise: 1.0,
            a: 1.0,
            theta: 0.5,
            alpha_psi2: 1.0,
            c_prime: 1.0,
            c_bar_abs: 1.0,
            d: 1.0,
        }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<(), BoundsError> {
        let ok = self.sigma_noise > 0.0
            && self.a >= 0.0
            && self.theta > 0.0
            && self.theta < 1.0
            && self.alpha_psi2 > 0.0
            && self.c_prime > 0.0
            && self.c_bar_abs > 0.0
            && self.d > 0.0;
        if ok {
            Ok(())
        } else {
            Err(BoundsError::BadParams)
        }
    }
}

/// lambda_{sigma,a,p} = sigma * sqrt(1+a) * sqrt(2 ln p / n).
pub fn lambda_noise(sigma: f64, a: f64, p: usize, n: usize) -> Result<f64, BoundsError> {
    if p < 2 {
        return Err(BoundsError::DimensionTooSmall { p });
    }
    if n < 1 || a < 0.0 || sigma < 0.0 {
        return Err(BoundsError::BadParams);
    }
    Ok(sigma * libm::sqrt(1.0 + a) * libm::sqrt(2.0 * libm::log(p as f64) / n as f64))
}

/// C-bar = 3 (2 + k0) K(s, k0, Sigma) sqrt(rho_max(s)).
pub fn c_bar(k0: f64, k_sigma: f64, rho_max_s: f64) -> f64 {
    3.0 * (2.0 + k0) * k_sigma * libm::sqrt(rho_max_s)
}

/// Subgaussian sample-size threshold
/// (c' alpha^4 / theta^2) * max(C-bar^2 s ln(5ep/s), 9 ln p).
pub fn sample_size_threshold(
    s: usize,
    p: usize,
    theta: f64,
    alpha: f64,
    c_bar_val: f64,
    c_prime: f64,
) -> f64 {
    let sf = s as f64;
    let pf = p as f64;
    let term1 = c_bar_val * c_bar_val * sf * libm::log(5.0 * core::f64::consts::E * pf / sf);
    let term2 = 9.0 * libm::log(pf);
    c_prime * libm::pow(alpha, 4.0) / (theta * theta) * term1.max(term2)
}

/// Gaussian-design sample-size variant
/// (1/theta^2) (C-bar sqrt(s ln(5ep/s)) + sqrt(2 d ln p))^2.
pub fn gauss_sample_size_threshold(s: usize, p: usize, theta: f64, c_bar_val: f64, d: f64) -> f64 {
    let sf = s as f64;
    let pf = p as f64;
    let t = c_bar_val * libm::sqrt(sf * libm::log(5.0 * core::f64::consts::E * pf / sf))
        + libm::sqrt(2.0 * d * libm::log(pf));
    t * t / (theta * theta)
}

/// Error bounds of one of the two estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorBounds {
    pub l2_bound: f64,
    pub l1_bound: f64,
    pub b: f64,
}

/// Lasso bounds: B = 4 K^2(s,3,.)/(1-theta)^2, l2 = 2 B lambda sqrt(s),
/// l1 = B lambda s.
pub fn error_bounds_lasso(s: usize, lambda_n: f64, k_sigma_3: f64, theta: f64) -> ErrorBounds {
    let b = 4.0 * k_sigma_3 * k_sigma_3 / ((1.0 - theta) * (1.0 - theta));
    ErrorBounds {
        l2_bound: 2.0 * b * lambda_n * libm::sqrt(s as f64),
        l1_bound: b * lambda_n * s as f64,
        b,
    }
}

/// Dantzig-selector bounds: B = 4 K^2(s,1,.)/(1-theta)^2,
/// l2 = 3 B lambda sqrt(s), l1 = 2 B lambda s.
pub fn error_bounds_ds(s: usize, lambda_n: f64, k_sigma_1: f64, theta: f64) -> ErrorBounds {
    let b = 4.0 * k_sigma_1 * k_sigma_1 / ((1.0 - theta) * (1.0 - theta));
    ErrorBounds {
        l2_bound: 3.0 * b * lambda_n * libm::sqrt(s as f64),
        l1_bound: 2.0 * b * lambda_n * s as f64,
        b,
    }
}

/// Realized event indicators for one (X, eps) pair. The cone flags are
/// solver-dependent and filled by the caller after solving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventFlags {
    /// All column norms within [(1-theta) sqrt(n), (1+theta) sqrt(n)].
    pub f_theta: bool,
    /// ||X^T eps / n||_inf <= (1 + theta) lambda_{sigma,a,p}.
    pub t_a: bool,
    pub cone_lasso: bool,
    pub cone_ds: bool,
}

/// Evaluate the column-norm event F(theta) and the noise-correlation event
/// T_a on a realized (X, eps).
pub fn check_events(
    x: &Matrix,
    epsilon: &[f64],
    theta: f64,
    a: f64,
    sigma: f64,
) -> Result<EventFlags, BoundsError> {
    if epsilon.len() != x.rows {
        return Err(BoundsError::BadParams);
    }
    let n = x.rows;
    let sqrt_n = libm::sqrt(n as f64);
    let mut f_theta = true;
    for j in 0..x.cols {
        let cn = norm2(&x.column(j)) / sqrt_n;
        if cn < 1.0 - theta || cn > 1.0 + theta {
            f_theta = false;
            break;
        }
    }
    let lam = lambda_noise(sigma, a, x.cols, n)?;
    let corr = x.matvec_t(epsilon);
    let t_a = norm_inf(&corr) / n as f64 <= (1.0 + theta) * lam;
    Ok(EventFlags { f_theta, t_a, cone_lasso: false, cone_ds: false })
}

/// Lower bound on P(T_a): 1 - 1/(sqrt(pi ln p) p^a).
pub fn noise_tail_prob(p: usize, a: f64) -> Result<f64, BoundsError> {
    if p < 2 {
        return Err(BoundsError::DimensionTooSmall { p });
    }
    Ok(1.0 - 1.0 / (libm::sqrt(core::f64::consts::PI * libm::log(p as f64)) * libm::pow(p as f64, a)))
}
