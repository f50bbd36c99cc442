//! Restricted eigenvalues over sparse supports, restricted isometry
//! constants, and RE-constant estimation over the cone.
//!
//! The cone minimization is nonconvex; `re_constant` runs multi-start
//! projected descent and reports the best feasible ratio found. Any feasible
//! point upper-bounds the true minimum ratio, so the derived K = 1/min_ratio
//! is always a LOWER estimate of the true RE constant; callers get that
//! direction in the result metadata rather than a certified value.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cone::{self, magnitude_order, top_support};
use crate::linalg::{norm1, norm2, principal_submatrix, sym_eigen, Matrix, SymMatrix};
use crate::rng::Stream;

/// Support-enumeration cap before switching to randomized subsampling.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// Random supports drawn when the cap is exceeded.
const FALLBACK_SUPPORT_SAMPLES: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub enum ReError {
    BadParams,
    Linalg(crate::linalg::LinalgError),
}

impl fmt::Display for ReError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReError::BadParams => write!(f, "invalid restricted-eigenvalue parameters"),
            ReError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl From<crate::linalg::LinalgError> for ReError {
    fn from(e: crate::linalg::LinalgError) -> Self {
        ReError::Linalg(e)
    }
}

/// What the RE quantities are computed against.
pub enum ReTarget<'a> {
    /// A covariance matrix Sigma; quadratic form delta^T Sigma delta.
    Covariance(&'a SymMatrix),
    /// An n x p design X; quadratic form ||X delta||^2 / n.
    Design(&'a Matrix),
}

impl ReTarget<'_> {
    /// The PSD matrix Q with delta^T Q delta = (target norm)^2.
    pub fn quad_matrix(&self) -> SymMatrix {
        match self {
            ReTarget::Covariance(s) => (*s).clone(),
            ReTarget::Design(x) => x.gram_scaled(x.rows as f64),
        }
    }
}

/// C(n, k) saturating at u64::MAX.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        let num = (n - k + 1 + i) as u64;
        acc = match acc.checked_mul(num) {
            Some(v) => v / (i as u64 + 1),
            None => return u64::MAX,
        };
    }
    acc
}

/// Min/max extreme eigenvalues over size-m principal submatrices.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenRange {
    pub rho_min: f64,
    pub rho_max: f64,
    /// False when support subsampling replaced exhaustive enumeration.
    pub exact: bool,
    pub supports_checked: u64,
}

fn for_each_combination<F: FnMut(&[usize])>(p: usize, m: usize, mut f: F) {
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        f(&idx);
        // lexicographic successor
        let mut i = m;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + p - m {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exact min/max of extreme eigenvalues of size-m principal submatrices of
/// `sigma`, i.e. the squared sparse-eigenvalue quantities.
///
/// Falls back to randomized support subsampling (flagged `exact: false`)
/// when C(p, m) exceeds [`ENUMERATION_CAP`].
pub fn restricted_eigen_range(sigma: &SymMatrix, m: usize) -> Result<EigenRange, ReError> {
    let p = sigma.dim;
    if m == 0 || m > p {
        return Err(ReError::BadParams);
    }
    let count = binomial(p, m);
    let mut rho_min = f64::INFINITY;
    let mut rho_max = f64::NEG_INFINITY;
    let mut checked = 0u64;
    let mut visit = |support: &[usize]| -> Result<(), ReError> {
        let sub = principal_submatrix(sigma, support)?;
        let eig = sym_eigen(&sub)?;
        rho_min = rho_min.min(eig.min());
        rho_max = rho_max.max(eig.max());
        checked += 1;
        Ok(())
    };
    let exact = count <= ENUMERATION_CAP;
    if exact {
        let mut err = None;
        for_each_combination(p, m, |support| {
            if err.is_none() {
                if let Err(e) = visit(support) {
                    err = Some(e);
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    } else {
        let mut rng = Stream::new(0x5eed ^ (p as u64) << 16 ^ m as u64);
        for _ in 0..FALLBACK_SUPPORT_SAMPLES {
            let support = rng.subset(p, m);
            visit(&support)?;
        }
    }
    Ok(EigenRange { rho_min, rho_max, exact, supports_checked: checked })
}

/// Restricted isometry constant of a design at sparsity s:
/// theta_s = max over |T| <= s of max(lmax(X_T^T X_T / n) - 1,
/// 1 - lmin(X_T^T X_T / n)). The extremes are attained at |T| = s, so only
/// size-s supports are enumerated.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RipResult {
    pub theta: f64,
    pub exact: bool,
    pub supports_checked: u64,
}

pub fn rip_constant(x: &Matrix, s: usize) -> Result<RipResult, ReError> {
    let p = x.cols;
    if s == 0 || s > p {
        return Err(ReError::BadParams);
    }
    let gram = x.gram_scaled(x.rows as f64);
    let range = restricted_eigen_range(&gram, s)?;
    let theta = (range.rho_max - 1.0).max(1.0 - range.rho_min);
    Ok(RipResult {
        theta,
        exact: range.exact,
        supports_checked: range.supports_checked,
    })
}

/// Restart/iteration budget for the cone minimization.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { restarts: 64, max_iters: 500 }
    }
}

/// Denominator of the minimized ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Denominator {
    /// ||delta_{T_0}||_2, the plain RE(s, k0, .) form.
    TopS,
    /// ||delta_{J_0 union (top-m outside)}||_2, the RE(s, m, k0, .) form
    /// (m = s gives the J_01 variant).
    TopSPlusM(usize),
}

/// Result of the multi-start cone minimization; `min_ratio` estimates 1/K
/// from above, so 1/min_ratio is a lower estimate of K.
#[derive(Clone, Debug)]
pub struct ConeMinimizationResult {
    pub min_ratio: f64,
    pub argmin_vector: Vec<f64>,
    pub per_restart_ratios: Vec<f64>,
    pub samples_used: usize,
}

impl ConeMinimizationResult {
    /// Lower estimate of the RE constant K.
    pub fn k_lower_estimate(&self) -> f64 {
        1.0 / self.min_ratio
    }
}

struct RatioProblem<'a> {
    q: &'a SymMatrix,
    s: usize,
    k0: f64,
    denom: Denominator,
}

impl RatioProblem<'_> {
    fn denom_support(&self, delta: &[f64]) -> Vec<usize> {
        match self.denom {
            Denominator::TopS => top_support(delta, self.s),
            Denominator::TopSPlusM(m) => {
                let take = (self.s + m).min(delta.len());
                let mut d: Vec<usize> =
                    magnitude_order(delta).into_iter().take(take).collect();
                d.sort_unstable();
                d
            }
        }
    }

    fn ratio(&self, delta: &[f64]) -> f64 {
        let num = libm::sqrt(self.q.quad_form(delta).max(0.0));
        let support = self.denom_support(delta);
        let den = libm::sqrt(support.iter().map(|&i| delta[i] * delta[i]).sum::<f64>());
        if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        }
    }

    /// Pull a vector back into the T_0 cone (tail rescaled to equality when
    /// the constraint is violated) and normalize to unit l2.
    fn project(&self, delta: &mut [f64]) -> bool {
        let n2 = norm2(delta);
        if n2 == 0.0 || !n2.is_finite() {
            return false;
        }
        let t0 = top_support(delta, self.s);
        let l1_t0: f64 = t0.iter().map(|&i| libm::fabs(delta[i])).sum();
        let l1_tail = norm1(delta) - l1_t0;
        if l1_tail > self.k0 * l1_t0 {
            let scale = self.k0 * l1_t0 / l1_tail;
            let mut on_t0 = vec![false; delta.len()];
            for &i in &t0 {
                on_t0[i] = true;
            }
            for (i, v) in delta.iter_mut().enumerate() {
                if !on_t0[i] {
                    *v *= scale;
                }
            }
        }
        let n2 = norm2(delta);
        if n2 == 0.0 {
            return false;
        }
        for v in delta.iter_mut() {
            *v /= n2;
        }
        true
    }

    /// One projected-descent run from `start`; returns (ratio, argmin).
    fn descend(&self, start: &[f64], max_iters: usize) -> (f64, Vec<f64>) {
        let p = start.len();
        let mut delta = start.to_vec();
        if !self.project(&mut delta) {
            return (f64::INFINITY, delta);
        }
        let mut best = self.ratio(&delta);
        for _ in 0..max_iters {
            let support = self.denom_support(&delta);
            let qd = self.q.matvec(&delta);
            let num = libm::sqrt(self.q.quad_form(&delta).max(1e-300));
            let den =
                libm::sqrt(support.iter().map(|&i| delta[i] * delta[i]).sum::<f64>());
            if den == 0.0 {
                break;
            }
            // gradient of num/den with the denominator support held fixed
            let mut grad = vec![0.0; p];
            for i in 0..p {
                grad[i] = qd[i] / (num * den);
            }
            for &i in &support {
                grad[i] -= num * delta[i] / (den * den * den);
            }
            let gnorm = norm2(&grad);
            if gnorm == 0.0 {
                break;
            }
            let mut step = 1.0;
            let mut improved = false;
            while step > 1e-12 {
                let mut cand: Vec<f64> =
                    delta.iter().zip(&grad).map(|(d, g)| d - step * g).collect();
                if self.project(&mut cand) {
                    let r = self.ratio(&cand);
                    if r < best {
                        let rel = (best - r) / best.max(1e-300);
                        delta = cand;
                        best = r;
                        improved = true;
                        if rel < 1e-10 {
                            return (best, delta);
                        }
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (best, delta)
    }
}

use crate::cone::random_cone_vector;

fn minimize(
    problem: &RatioProblem<'_>,
    budget: &Budget,
    seed: u64,
) -> ConeMinimizationResult {
    let p = problem.q.dim;
    let mut per_restart = Vec::with_capacity(budget.restarts);
    let mut best = f64::INFINITY;
    let mut argmin = vec![0.0; p];
    let mut samples = 0;
    for restart in 0..budget.restarts {
        let mut rng = Stream::substream(seed, restart as u64);
        let start = random_cone_vector(p, problem.s, problem.k0, &mut rng);
        samples += 1;
        let (mut r, mut v) = problem.descend(&start, budget.max_iters);
        // hard-thresholded candidate: the T_0-supported truncation is always
        // feasible and is exact on near-diagonal targets
        let t0 = top_support(&v, problem.s);
        let mut trunc = vec![0.0; p];
        for &i in &t0 {
            trunc[i] = v[i];
        }
        if norm2(&trunc) > 0.0 {
            let rt = problem.ratio(&trunc);
            if rt < r {
                r = rt;
                v = trunc;
            }
        }
        per_restart.push(r);
        if r < best {
            best = r;
            argmin = v;
        }
    }
    ConeMinimizationResult {
        min_ratio: best,
        argmin_vector: argmin,
        per_restart_ratios: per_restart,
        samples_used: samples,
    }
}

/// Multi-start projected-descent estimate of the RE minimization with the
/// plain ||delta_{T_0}|| denominator.
pub fn re_constant(
    target: &ReTarget<'_>,
    s: usize,
    k0: f64,
    budget: &Budget,
    seed: u64,
) -> Result<ConeMinimizationResult, ReError> {
    let q = target.quad_matrix();
    if s == 0 || s > q.dim || !(k0 > 0.0) {
        return Err(ReError::BadParams);
    }
    let problem = RatioProblem { q: &q, s, k0, denom: Denominator::TopS };
    Ok(minimize(&problem, budget, seed))
}

/// Same minimization with the denominator over J_0 plus the top-m indices
/// outside it.
pub fn re_constant_variant(
    target: &ReTarget<'_>,
    s: usize,
    m: usize,
    k0: f64,
    budget: &Budget,
    seed: u64,
) -> Result<ConeMinimizationResult, ReError> {
    let q = target.quad_matrix();
    if s == 0 || m < s || s + m > q.dim || !(k0 > 0.0) {
        return Err(ReError::BadParams);
    }
    let problem = RatioProblem { q: &q, s, k0, denom: Denominator::TopSPlusM(m) };
    Ok(minimize(&problem, budget, seed))
}

/// Pure random-search estimate (no descent); desk-scale oracle used to
/// cross-validate the descent path.
pub fn re_constant_random_search(
    target: &ReTarget<'_>,
    s: usize,
    k0: f64,
    samples: usize,
    seed: u64,
) -> Result<ConeMinimizationResult, ReError> {
    let q = target.quad_matrix();
    if s == 0 || s > q.dim || !(k0 > 0.0) {
        return Err(ReError::BadParams);
    }
    let problem = RatioProblem { q: &q, s, k0, denom: Denominator::TopS };
    let p = q.dim;
    let mut rng = Stream::new(seed);
    let mut best = f64::INFINITY;
    let mut argmin = vec![0.0; p];
    for _ in 0..samples {
        let v = random_cone_vector(p, s, k0, &mut rng);
        let r = problem.ratio(&v);
        if r < best {
            best = r;
            argmin = v;
        }
    }
    Ok(ConeMinimizationResult {
        min_ratio: best,
        argmin_vector: argmin,
        per_restart_ratios: alloc::vec![best],
        samples_used: samples,
    })
}

/// Checked chains of the two RE-equivalence propositions, with estimation
/// slack; violations are reported, never thrown.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EquivalenceReport {
    pub k_plain: f64,
    pub k_ss: f64,
    pub k_sm: f64,
    /// K(s,s,k0)/sqrt(2) <= K(s,k0) <= K(s,s,k0)
    pub chain_ss_ok: bool,
    /// K(s,m,k0)/sqrt(2+k0^2) <= K(s,k0) <= K(s,m,k0)
    pub chain_sm_ok: bool,
    pub slack: f64,
}

/// Estimate all three RE constants and check the equivalence chains.
///
/// Each variant's minimum is taken over the union of all three argmin
/// candidates plus its own restarts, so the pointwise orderings between the
/// ratio functions carry over to the estimates.
pub fn verify_re_equivalences(
    target: &ReTarget<'_>,
    s: usize,
    m: usize,
    k0: f64,
    budget: &Budget,
    seed: u64,
) -> Result<EquivalenceReport, ReError> {
    let q = target.quad_matrix();
    if s == 0 || m < s || s + m > q.dim || !(k0 > 0.0) {
        return Err(ReError::BadParams);
    }
    let problems = [
        RatioProblem { q: &q, s, k0, denom: Denominator::TopS },
        RatioProblem { q: &q, s, k0, denom: Denominator::TopSPlusM(s) },
        RatioProblem { q: &q, s, k0, denom: Denominator::TopSPlusM(m) },
    ];
    let results: Vec<ConeMinimizationResult> = problems
        .iter()
        .enumerate()
        .map(|(i, p)| minimize(p, budget, crate::rng::derive_seed(seed, i as u64)))
        .collect();
    // cross-evaluate argmins under every denominator
    let mut mins = [f64::INFINITY; 3];
    for (i, problem) in problems.iter().enumerate() {
        mins[i] = results[i].min_ratio;
        for r in &results {
            mins[i] = mins[i].min(problem.ratio(&r.argmin_vector));
        }
    }
    let k_plain = 1.0 / mins[0];
    let k_ss = 1.0 / mins[1];
    let k_sm = 1.0 / mins[2];
    let slack = 0.05;
    let lo = 1.0 - slack;
    let hi = 1.0 + slack;
    let chain_ss_ok =
        k_ss / libm::sqrt(2.0) <= k_plain * hi && k_plain * lo <= k_ss;
    let chain_sm_ok =
        k_sm / libm::sqrt(2.0 + k0 * k0) <= k_plain * hi && k_plain * lo <= k_sm;
    Ok(EquivalenceReport { k_plain, k_ss, k_sm, chain_ss_ok, chain_sm_ok, slack })
}

/// Bound-direction metadata of a reported RE constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum KBoundMode {
    /// K = 1/min_ratio where min_ratio is an empirical upper bound on the
    /// true minimum ratio, so K is a lower estimate.
    EmpiricalUpperBoundOnMinRatio,
}

/// Aggregate certificate for one target.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RECertificate {
    pub target_is_design: bool,
    pub s: usize,
    pub k0: f64,
    pub m: Option<usize>,
    pub rho_min_2s: f64,
    pub rho_max_s: f64,
    pub eigen_exact: bool,
    pub rip_theta: Option<f64>,
    pub k_est: f64,
    pub k_mode: KBoundMode,
    pub samples_used: usize,
    pub restarts: usize,
}

/// Compute the full certificate: restricted eigen ranges, the RIP constant
/// (design targets only), and the RE-constant lower estimate.
pub fn certify(
    target: &ReTarget<'_>,
    s: usize,
    k0: f64,
    m: Option<usize>,
    budget: &Budget,
    seed: u64,
) -> Result<RECertificate, ReError> {
    let q = target.quad_matrix();
    let p = q.dim;
    if s == 0 || 2 * s > p {
        return Err(ReError::BadParams);
    }
    let range_2s = restricted_eigen_range(&q, 2 * s)?;
    let range_s = restricted_eigen_range(&q, s)?;
    let rip_theta = match target {
        ReTarget::Design(x) => Some(rip_constant(x, s)?.theta),
        ReTarget::Covariance(_) => None,
    };
    let result = match m {
        Some(m) => re_constant_variant(target, s, m, k0, budget, seed)?,
        None => re_constant(target, s, k0, budget, seed)?,
    };
    Ok(RECertificate {
        target_is_design: matches!(target, ReTarget::Design(_)),
        s,
        k0,
        m,
        rho_min_2s: range_2s.rho_min,
        rho_max_s: range_s.rho_max,
        eigen_exact: range_2s.exact && range_s.exact,
        rip_theta,
        k_est: result.k_lower_estimate(),
        k_mode: KBoundMode::EmpiricalUpperBoundOnMinRatio,
        samples_used: result.samples_used,
        restarts: budget.restarts,
    })
}

/// Admissibility recheck used by tests and the harness: the reported argmin
/// must lie in the cone and realize its ratio.
pub fn recheck_argmin(
    target: &ReTarget<'_>,
    s: usize,
    k0: f64,
    result: &ConeMinimizationResult,
) -> bool {
    let q = target.quad_matrix();
    let problem = RatioProblem { q: &q, s, k0, denom: Denominator::TopS };
    let admissible = cone::is_admissible(&result.argmin_vector, s, k0 * (1.0 + 1e-9))
        .map(|w| w.admissible)
        .unwrap_or(false);
    let realized = problem.ratio(&result.argmin_vector);
    admissible && libm::fabs(realized - result.min_ratio) <= 1e-10 * (1.0 + result.min_ratio)
}
