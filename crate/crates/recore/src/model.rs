//! Covariance models and random generation of subgaussian designs, sparse
//! signals, and Gaussian noise.
//!
//! A design is always X = Psi * Sigma^{1/2} where the rows of Psi are i.i.d.
//! isotropic subgaussian vectors (standard Gaussian or symmetric Bernoulli
//! entries) and Sigma is a unit-diagonal PSD correlation matrix.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{psd_sqrt, sym_eigen, Matrix, SymMatrix};
use crate::rng::Stream;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    /// AR(1) needs |rho| < 1; equicorrelation needs -1/(p-1) < rho < 1.
    RhoOutOfRange { rho: f64 },
    /// Explicit matrix must have unit diagonal.
    NotUnitDiagonal { index: usize, value: f64 },
    /// Explicit matrix must be PSD.
    NotPsd,
    /// Sparsity s must satisfy 1 <= s <= p.
    BadSparsity { s: usize, p: usize },
    BadDimension,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::RhoOutOfRange { rho } => write!(f, "correlation {rho} out of range"),
            ModelError::NotUnitDiagonal { index, value } => {
                write!(f, "diagonal entry {index} is {value}, expected 1")
            }
            ModelError::NotPsd => write!(f, "explicit covariance is not PSD"),
            ModelError::BadSparsity { s, p } => write!(f, "sparsity {s} invalid for p={p}"),
            ModelError::BadDimension => write!(f, "dimension must be >= 1"),
        }
    }
}

/// Specification of the correlation structure.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum CovarianceKind {
    Identity,
    Ar1 { rho: f64 },
    Equicorrelation { rho: f64 },
    #[cfg_attr(feature = "serde", serde(skip))]
    Explicit(SymMatrix),
}

/// A p x p correlation matrix with its PSD square root.
#[derive(Clone, Debug)]
pub struct CovarianceModel {
    pub p: usize,
    pub kind: CovarianceKind,
    pub sigma: SymMatrix,
    pub sigma_half: SymMatrix,
}

impl CovarianceModel {
    pub fn new(p: usize, kind: CovarianceKind) -> Result<Self, ModelError> {
        if p == 0 {
            return Err(ModelError::BadDimension);
        }
        let sigma = match &kind {
            CovarianceKind::Identity => SymMatrix::identity(p),
            CovarianceKind::Ar1 { rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(ModelError::RhoOutOfRange { rho: *rho });
                }
                let mut a = SymMatrix::zeros(p);
                for i in 0..p {
                    for j in i..p {
                        a.set(i, j, libm::pow(*rho, (j - i) as f64));
                    }
                }
                a
            }
            CovarianceKind::Equicorrelation { rho } => {
                let lo = if p > 1 { -1.0 / (p as f64 - 1.0) } else { -1.0 };
                if !(*rho > lo && *rho < 1.0) {
                    return Err(ModelError::RhoOutOfRange { rho: *rho });
                }
                let mut a = SymMatrix::identity(p);
                for i in 0..p {
                    for j in (i + 1)..p {
                        a.set(i, j, *rho);
                    }
                }
                a
            }
            CovarianceKind::Explicit(m) => {
                if m.dim != p {
                    return Err(ModelError::BadDimension);
                }
                for i in 0..p {
                    let d = m.get(i, i);
                    if (d - 1.0).abs() > 1e-12 {
                        return Err(ModelError::NotUnitDiagonal { index: i, value: d });
                    }
                }
                let eig = sym_eigen(m).map_err(|_| ModelError::NotPsd)?;
                if eig.min() < -1e-10 * m.frob_norm() {
                    return Err(ModelError::NotPsd);
                }
                m.clone()
            }
        };
        let sigma_half = psd_sqrt(&sigma).map_err(|_| ModelError::NotPsd)?;
        Ok(CovarianceModel { p, kind, sigma, sigma_half })
    }

    pub fn identity(p: usize) -> Self {
        CovarianceModel::new(p, CovarianceKind::Identity).unwrap()
    }
}

/// Row distribution of the subgaussian factor Psi.
///
/// The psi_2 constant alpha is documentation metadata only; the theory treats
/// it abstractly and it enters only sample-size formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EnsembleKind {
    Gaussian,
    Rademacher,
}

impl EnsembleKind {
    /// Documented default psi_2 constant for the ensemble.
    pub fn psi2_alpha(self) -> f64 {
        match self {
            // bound-style placeholder for the standard normal
            EnsembleKind::Gaussian => libm::sqrt(8.0 / 3.0),
            // exp(1/t^2) <= 2 at t = 1/sqrt(ln 2)
            EnsembleKind::Rademacher => 1.0 / libm::sqrt(libm::log(2.0)),
        }
    }
}

/// A realized design together with its provenance.
#[derive(Clone, Debug)]
pub struct DesignSample {
    pub x: Matrix,
    pub ensemble: EnsembleKind,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
}

/// Draw X = Psi * Sigma^{1/2} with n independent rows; deterministic given
/// `seed`.
pub fn sample_design(
    n: usize,
    model: &CovarianceModel,
    ensemble: EnsembleKind,
    seed: u64,
) -> DesignSample {
    assert!(n >= 1);
    let p = model.p;
    let mut rng = Stream::new(seed);
    let mut x = Matrix::zeros(n, p);
    let mut psi_row = vec![0.0; p];
    for i in 0..n {
        for v in psi_row.iter_mut() {
            *v = match ensemble {
                EnsembleKind::Gaussian => rng.normal(),
                EnsembleKind::Rademacher => rng.rademacher(),
            };
        }
        // row_i(X) = psi_i^T Sigma^{1/2}
        for j in 0..p {
            let mut acc = 0.0;
            for k in 0..p {
                acc += psi_row[k] * model.sigma_half.get(k, j);
            }
            x.set(i, j, acc);
        }
    }
    DesignSample { x, ensemble, seed, n, p }
}

/// How the nonzero entries of a sparse signal are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum AmplitudeScheme {
    /// Random sign times fixed amplitude.
    Constant { amplitude: f64 },
    /// Random sign times uniform magnitude in [amplitude/2, amplitude].
    Uniform { amplitude: f64 },
}

impl Default for AmplitudeScheme {
    fn default() -> Self {
        AmplitudeScheme::Constant { amplitude: 1.0 }
    }
}

/// An s-sparse signal with support uniform among size-s subsets.
pub fn sample_sparse_signal(
    p: usize,
    s: usize,
    scheme: AmplitudeScheme,
    seed: u64,
) -> Result<Vec<f64>, ModelError> {
    if s == 0 || s > p {
        return Err(ModelError::BadSparsity { s, p });
    }
    let mut rng = Stream::new(seed);
    let support = rng.subset(p, s);
    let mut beta = vec![0.0; p];
    for &j in &support {
        let sign = rng.rademacher();
        beta[j] = match scheme {
            AmplitudeScheme::Constant { amplitude } => sign * amplitude,
            AmplitudeScheme::Uniform { amplitude } => {
                sign * amplitude * (0.5 + 0.5 * rng.uniform())
            }
        };
    }
    Ok(beta)
}

/// i.i.d. N(0, sigma^2) noise.
pub fn sample_noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    assert!(sigma >= 0.0);
    let mut rng = Stream::new(seed);
    (0..n).map(|_| sigma * rng.normal()).collect()
}

/// A full recovery instance Y = X beta + eps.
#[derive(Clone, Debug)]
pub struct RecoveryInstance {
    pub design: Matrix,
    pub signal: Vec<f64>,
    pub noise: Vec<f64>,
    pub observed: Vec<f64>,
    pub noise_sigma: f64,
}

impl RecoveryInstance {
    pub fn assemble(design: Matrix, signal: Vec<f64>, noise: Vec<f64>, noise_sigma: f64) -> Self {
        let mut observed = design.matvec(&signal);
        for (y, e) in observed.iter_mut().zip(noise.iter()) {
            *y += e;
        }
        RecoveryInstance { design, signal, noise, observed, noise_sigma }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    #[test]
    fn identity_and_zero_rho_models() {
        let m = CovarianceModel::new(3, CovarianceKind::Identity).unwrap();
        assert_eq!(m.sigma, SymMatrix::identity(3));
        let m = CovarianceModel::new(3, CovarianceKind::Ar1 { rho: 0.0 }).unwrap();
        assert_eq!(m.sigma, SymMatrix::identity(3));
    }

    #[test]
    fn ar1_entries_exact() {
        let m = CovarianceModel::new(5, CovarianceKind::Ar1 { rho: 0.5 }).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = libm::pow(0.5, (i as f64 - j as f64).abs());
                assert!((m.sigma.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn equicorrelation_spectrum() {
        let m = CovarianceModel::new(3, CovarianceKind::Equicorrelation { rho: 0.5 }).unwrap();
        let eig = sym_eigen(&m.sigma).unwrap();
        assert!((eig.values[0] - 0.5).abs() < 1e-10);
        assert!((eig.values[1] - 0.5).abs() < 1e-10);
        assert!((eig.values[2] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn sigma_half_squares_to_sigma() {
        let m = CovarianceModel::new(6, CovarianceKind::Ar1 { rho: 0.7 }).unwrap();
        let mut err = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = 0.0;
                for k in 0..6 {
                    acc += m.sigma_half.get(i, k) * m.sigma_half.get(k, j);
                }
                let d = acc - m.sigma.get(i, j);
                err += d * d;
            }
        }
        assert!(libm::sqrt(err) <= 1e-8 * m.sigma.frob_norm());
    }

    #[test]
    fn model_validation_errors() {
        assert!(CovarianceModel::new(3, CovarianceKind::Ar1 { rho: 1.0 }).is_err());
        assert!(CovarianceModel::new(3, CovarianceKind::Equicorrelation { rho: -0.6 }).is_err());
        let mut bad = SymMatrix::identity(2);
        bad.set(0, 0, 2.0);
        assert!(matches!(
            CovarianceModel::new(2, CovarianceKind::Explicit(bad)),
            Err(ModelError::NotUnitDiagonal { .. })
        ));
        let mut indef = SymMatrix::identity(2);
        indef.set(0, 1, 2.0);
        assert!(matches!(
            CovarianceModel::new(2, CovarianceKind::Explicit(indef)),
            Err(ModelError::NotPsd)
        ));
    }

    #[test]
    fn rademacher_identity_design_entries() {
        let m = CovarianceModel::identity(4);
        let d = sample_design(6, &m, EnsembleKind::Rademacher, 3);
        assert!(d.x.data.iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn design_is_deterministic() {
        let m = CovarianceModel::new(5, CovarianceKind::Ar1 { rho: 0.3 }).unwrap();
        let a = sample_design(7, &m, EnsembleKind::Gaussian, 11);
        let b = sample_design(7, &m, EnsembleKind::Gaussian, 11);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn gaussian_design_column_statistics() {
        let m = CovarianceModel::identity(4);
        let n = 10_000;
        let d = sample_design(n, &m, EnsembleKind::Gaussian, 17);
        for j in 0..4 {
            let col = d.x.column(j);
            let mean: f64 = col.iter().sum::<f64>() / n as f64;
            let sq: f64 = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.05, "col {j} mean {mean}");
            assert!((0.9..=1.1).contains(&sq), "col {j} norm2/n {sq}");
        }
    }

    #[test]
    fn sparse_signal_support_and_amplitudes() {
        let b = sample_sparse_signal(4, 4, AmplitudeScheme::Constant { amplitude: 1.0 }, 2)
            .unwrap();
        assert!(b.iter().all(|&v| v == 1.0 || v == -1.0));

        let b = sample_sparse_signal(10, 3, AmplitudeScheme::default(), 2).unwrap();
        assert_eq!(b.iter().filter(|&&v| v != 0.0).count(), 3);

        let a = sample_sparse_signal(10, 3, AmplitudeScheme::default(), 5).unwrap();
        let b = sample_sparse_signal(10, 3, AmplitudeScheme::default(), 5).unwrap();
        assert_eq!(a, b);

        assert!(sample_sparse_signal(4, 5, AmplitudeScheme::default(), 0).is_err());
    }

    #[test]
    fn noise_variance_and_determinism() {
        assert!(sample_noise(10, 0.0, 1).iter().all(|&v| v == 0.0));
        let e = sample_noise(100_000, 1.0, 8);
        let var = e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64;
        assert!((0.98..=1.02).contains(&var), "var {var}");
        assert_eq!(sample_noise(16, 2.0, 3), sample_noise(16, 2.0, 3));
    }

    #[test]
    fn recovery_instance_is_exact() {
        let m = CovarianceModel::identity(3);
        let d = sample_design(5, &m, EnsembleKind::Gaussian, 1);
        let beta = sample_sparse_signal(3, 2, AmplitudeScheme::default(), 1).unwrap();
        let eps = sample_noise(5, 0.5, 1);
        let inst = RecoveryInstance::assemble(d.x.clone(), beta.clone(), eps.clone(), 0.5);
        let xb = d.x.matvec(&beta);
        for i in 0..5 {
            assert_eq!(inst.observed[i], xb[i] + eps[i]);
        }
        assert!(norm2(&inst.signal) > 0.0);
    }

    #[test]
    fn isotropy_both_ensembles() {
        // empirical second moment of <Psi_0, y> close to ||y||^2
        let p = 6;
        let n = 50_000;
        let m = CovarianceModel::identity(p);
        let mut dir_rng = Stream::new(99);
        for (tag_idx, tag) in [EnsembleKind::Gaussian, EnsembleKind::Rademacher]
            .into_iter()
            .enumerate()
        {
            let d = sample_design(n, &m, tag, 1234 + tag_idx as u64);
            for k in 0..10 {
                let y: alloc::vec::Vec<f64> = (0..p).map(|_| dir_rng.normal()).collect();
                let ynorm2 = crate::linalg::dot(&y, &y);
                let mut second = 0.0;
                for i in 0..n {
                    let ip = crate::linalg::dot(d.x.row(i), &y);
                    second += ip * ip;
                }
                second /= n as f64;
                assert!(
                    (second - ynorm2).abs() <= 0.03 * ynorm2,
                    "tag {tag:?} dir {k}: {second} vs {ynorm2}"
                );
            }
        }
    }

    #[test]
    fn coloring_matches_sigma() {
        let p = 8;
        let m = CovarianceModel::new(p, CovarianceKind::Ar1 { rho: 0.5 }).unwrap();
        let n = 20_000;
        let d = sample_design(n, &m, EnsembleKind::Gaussian, 55);
        let g = d.x.gram_scaled(n as f64);
        for i in 0..p {
            for j in 0..p {
                assert!(
                    (g.get(i, j) - m.sigma.get(i, j)).abs() < 0.05,
                    "({i},{j}): {} vs {}",
                    g.get(i, j),
                    m.sigma.get(i, j)
                );
            }
        }
    }
}
