//! Self-contained dense symmetric linear algebra: cyclic Jacobi
//! eigendecomposition, PSD square root, principal submatrices, norms.
//!
//! Everything is dense row-major `f64`; the problem sizes in this crate are
//! desk-scale (p <= 512).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum LinalgError {
    /// Input contains NaN or infinity.
    NonFinite,
    /// An eigenvalue fell below the indefiniteness threshold in `psd_sqrt`.
    NotPsd { eigenvalue: f64 },
    /// A support index is out of range or repeated.
    BadIndex { index: usize, dim: usize },
    /// Dimensions do not match.
    DimMismatch,
    /// Square system has no unique solution.
    Singular,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NonFinite => write!(f, "matrix has non-finite entries"),
            LinalgError::NotPsd { eigenvalue } => {
                write!(f, "matrix is not positive semi-definite (eigenvalue {eigenvalue})")
            }
            LinalgError::BadIndex { index, dim } => {
                write!(f, "index {index} invalid for dimension {dim}")
            }
            LinalgError::DimMismatch => write!(f, "dimension mismatch"),
            LinalgError::Singular => write!(f, "singular system"),
        }
    }
}

/// Dense rectangular matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// y = A^T x.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for j in 0..self.cols {
                y[j] += row[j] * xi;
            }
        }
        y
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Gram matrix A^T A / scale.
    pub fn gram_scaled(&self, scale: f64) -> SymMatrix {
        let p = self.cols;
        let mut g = SymMatrix::zeros(p);
        for j in 0..p {
            for k in j..p {
                let mut acc = 0.0;
                for i in 0..self.rows {
                    acc += self.get(i, j) * self.get(i, k);
                }
                let v = acc / scale;
                g.set(j, k, v);
            }
        }
        g
    }
}

/// Dense symmetric matrix; only one logical triangle is authoritative but the
/// full square is stored so `entries[i][j] == entries[j][i]` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1);
        SymMatrix { dim, entries: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut a = SymMatrix::zeros(dim);
        for i in 0..dim {
            a.entries[i * dim + i] = 1.0;
        }
        a
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut a = SymMatrix::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim);
            for (j, &v) in row.iter().enumerate() {
                a.entries[i * dim + j] = v;
            }
        }
        a
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Sets both (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
        self.entries[j * self.dim + i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|v| v * v).sum())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let row = &self.entries[i * self.dim..(i + 1) * self.dim];
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// x^T A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let y = self.matvec(x);
        dot(x, &y)
    }
}

/// Full spectral decomposition; `values` ascending, `vectors` an orthonormal
/// column set stored column-major (column k is the eigenvector of `values[k]`).
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub dim: usize,
}

impl EigenPair {
    #[inline]
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

const JACOBI_SWEEP_CAP: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps rotate away every off-diagonal pair until the off-diagonal
/// Frobenius mass drops below `1e-12 * ||A||_F`.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenPair, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.dim;
    let mut m = a.entries.clone();
    // v accumulates rotations, row-major: v[i*n+k] = component i of eigenvector k
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let tol = 1e-12 * a.frob_norm();

    for _sweep in 0..JACOBI_SWEEP_CAP {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let x = m[i * n + j];
                off += 2.0 * x * x;
            }
        }
        if libm::sqrt(off) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // rotation angle zeroing (p, q)
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    // sort ascending, reorder eigenvectors to match
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (k, &src) in order.iter().enumerate() {
        values.push(m[src * n + src]);
        for i in 0..n {
            vectors[k * n + i] = v[i * n + src];
        }
    }
    Ok(EigenPair { values, vectors, dim: n })
}

/// Symmetric PSD square root via the spectral decomposition.
///
/// Eigenvalues in [-1e-10 * ||a||_F, 1e-10 * ||a||_F] are treated as
/// round-off and clamped to zero; anything below that band is genuine
/// indefiniteness. Clamping the small positive side matters too: sqrt turns
/// an eigenvalue round-off of 1e-16 into a 1e-8 perturbation otherwise.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    let eig = sym_eigen(a)?;
    let n = a.dim;
    let clamp = 1e-10 * a.frob_norm();
    let mut roots = Vec::with_capacity(n);
    for &lam in &eig.values {
        if lam < -clamp {
            return Err(LinalgError::NotPsd { eigenvalue: lam });
        }
        roots.push(if lam <= clamp { 0.0 } else { libm::sqrt(lam) });
    }
    let mut s = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += roots[k] * eig.vectors[k * n + i] * eig.vectors[k * n + j];
            }
            s.set(i, j, acc);
        }
    }
    Ok(s)
}

/// Rows and columns of `a` restricted to `support` (distinct, ascending order
/// preserved).
pub fn principal_submatrix(a: &SymMatrix, support: &[usize]) -> Result<SymMatrix, LinalgError> {
    let k = support.len();
    if k == 0 {
        return Err(LinalgError::BadIndex { index: 0, dim: a.dim });
    }
    for (pos, &idx) in support.iter().enumerate() {
        if idx >= a.dim {
            return Err(LinalgError::BadIndex { index: idx, dim: a.dim });
        }
        if support[..pos].contains(&idx) {
            return Err(LinalgError::BadIndex { index: idx, dim: a.dim });
        }
    }
    let mut sub = SymMatrix::zeros(k);
    for (i, &si) in support.iter().enumerate() {
        for (j, &sj) in support.iter().enumerate() {
            sub.entries[i * k + j] = a.get(si, sj);
        }
    }
    Ok(sub)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

pub fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| libm::fabs(*x)).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
}

/// Solve a square dense system by Gaussian elimination with partial
/// pivoting.
pub fn solve_dense(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(LinalgError::DimMismatch);
    }
    if !a.data.iter().all(|v| v.is_finite()) || !b.iter().all(|v| v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let mut m = a.data.clone();
    let mut rhs = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(libm::fabs(*v))).max(1.0);
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if libm::fabs(m[r * n + col]) > libm::fabs(m[pivot * n + col]) {
                pivot = r;
            }
        }
        if libm::fabs(m[pivot * n + col]) <= 1e-13 * scale {
            return Err(LinalgError::Singular);
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            rhs.swap(col, pivot);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[r * n + j] -= f * m[col * n + j];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in row + 1..n {
            acc -= m[row * n + j] * x[j];
        }
        x[row] = acc / m[row * n + row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn identity_spectrum() {
        let eig = sym_eigen(&SymMatrix::identity(3)).unwrap();
        for &v in &eig.values {
            assert_close(v, 1.0, 1e-12);
        }
    }

    #[test]
    fn equicorrelation_2x2_spectrum() {
        let a = SymMatrix::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]]);
        let eig = sym_eigen(&a).unwrap();
        assert_close(eig.values[0], 0.5, 1e-12);
        assert_close(eig.values[1], 1.5, 1e-12);
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let a = SymMatrix::from_rows(&[
            &[9.0, 0.0, 0.0],
            &[0.0, 4.0, 0.0],
            &[0.0, 0.0, 1.0],
        ]);
        let eig = sym_eigen(&a).unwrap();
        assert_close(eig.values[0], 1.0, 1e-12);
        assert_close(eig.values[1], 4.0, 1e-12);
        assert_close(eig.values[2], 9.0, 1e-12);
    }

    #[test]
    fn eigen_reconstruction_and_orthonormality() {
        let mut rng = crate::rng::Stream::new(5);
        for _ in 0..10 {
            let n = 8;
            let mut a = SymMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    a.set(i, j, rng.normal());
                }
            }
            let eig = sym_eigen(&a).unwrap();
            // V^T V = I
            for i in 0..n {
                for j in 0..n {
                    let d = dot(eig.vector(i), eig.vector(j));
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_close(d, want, 1e-10);
                }
            }
            // A v = lambda v
            let anorm = a.frob_norm();
            for k in 0..n {
                let av = a.matvec(eig.vector(k));
                for i in 0..n {
                    assert_close(av[i], eig.values[k] * eig.vector(k)[i], 1e-8 * anorm);
                }
            }
            // trace and reconstruction
            let tr: f64 = eig.values.iter().sum();
            assert_close(tr, a.trace(), 1e-8);
            let mut recon = SymMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += eig.values[k] * eig.vector(k)[i] * eig.vector(k)[j];
                    }
                    recon.set(i, j, acc);
                }
            }
            let mut err = 0.0;
            for idx in 0..n * n {
                let d = recon.entries[idx] - a.entries[idx];
                err += d * d;
            }
            assert!(libm::sqrt(err) <= 1e-8 * anorm);
        }
    }

    #[test]
    fn eigen_product_matches_determinant_3x3() {
        let mut rng = crate::rng::Stream::new(9);
        for _ in 0..10 {
            let mut a = SymMatrix::zeros(3);
            for i in 0..3 {
                for j in i..3 {
                    a.set(i, j, rng.normal());
                }
            }
            let det = a.get(0, 0) * (a.get(1, 1) * a.get(2, 2) - a.get(1, 2) * a.get(2, 1))
                - a.get(0, 1) * (a.get(1, 0) * a.get(2, 2) - a.get(1, 2) * a.get(2, 0))
                + a.get(0, 2) * (a.get(1, 0) * a.get(2, 1) - a.get(1, 1) * a.get(2, 0));
            let eig = sym_eigen(&a).unwrap();
            let prod: f64 = eig.values.iter().product();
            assert_close(prod, det, 1e-8 * (1.0 + det.abs()));
        }
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let mut a = SymMatrix::identity(2);
        a.set(0, 1, f64::NAN);
        assert!(matches!(sym_eigen(&a), Err(LinalgError::NonFinite)));
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let s = psd_sqrt(&SymMatrix::identity(4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_close(s.get(i, j), if i == j { 1.0 } else { 0.0 }, 1e-12);
            }
        }
        let d = SymMatrix::from_rows(&[&[4.0, 0.0], &[0.0, 9.0]]);
        let s = psd_sqrt(&d).unwrap();
        assert_close(s.get(0, 0), 2.0, 1e-12);
        assert_close(s.get(1, 1), 3.0, 1e-12);
        assert_close(s.get(0, 1), 0.0, 1e-12);
    }

    #[test]
    fn sqrt_squares_back_to_input() {
        let a = SymMatrix::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]]);
        let s = psd_sqrt(&a).unwrap();
        let mut err = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    acc += s.get(i, k) * s.get(k, j);
                }
                let d = acc - a.get(i, j);
                err += d * d;
            }
        }
        assert!(libm::sqrt(err) <= 1e-10);
    }

    #[test]
    fn sqrt_of_rank1_projector_is_itself() {
        let v = [0.6, -0.8, 0.0];
        let mut a = SymMatrix::zeros(3);
        for i in 0..3 {
            for j in i..3 {
                a.set(i, j, v[i] * v[j]);
            }
        }
        let s = psd_sqrt(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_close(s.get(i, j), a.get(i, j), 1e-10);
            }
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let a = SymMatrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(psd_sqrt(&a), Err(LinalgError::NotPsd { .. })));
    }

    #[test]
    fn submatrix_extraction() {
        let i4 = SymMatrix::identity(4);
        let sub = principal_submatrix(&i4, &[0, 2]).unwrap();
        assert_eq!(sub, SymMatrix::identity(2));

        let mut eq = SymMatrix::identity(3);
        for i in 0..3 {
            for j in (i + 1)..3 {
                eq.set(i, j, 0.5);
            }
        }
        let sub = principal_submatrix(&eq, &[1, 2]).unwrap();
        assert_close(sub.get(0, 0), 1.0, 0.0);
        assert_close(sub.get(0, 1), 0.5, 0.0);

        let full = principal_submatrix(&eq, &[0, 1, 2]).unwrap();
        assert_eq!(full, eq);

        assert!(principal_submatrix(&i4, &[0, 4]).is_err());
        assert!(principal_submatrix(&i4, &[1, 1]).is_err());
    }

    #[test]
    fn dense_solve() {
        let a = Matrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let x_true = [1.0, -2.0, 3.0];
        let b = a.matvec(&x_true);
        let x = solve_dense(&a, &b).unwrap();
        for i in 0..3 {
            assert_close(x[i], x_true[i], 1e-12);
        }

        let sing = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(solve_dense(&sing, &[1.0, 1.0]), Err(LinalgError::Singular)));
        assert!(matches!(
            solve_dense(&a, &[1.0, 1.0]),
            Err(LinalgError::DimMismatch)
        ));
    }
}
