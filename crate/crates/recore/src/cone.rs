//! Cone-constraint geometry: admissibility, the greedy size-s block
//! decomposition, tail-sum chains, and sampling from the cone set E_s.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{norm1, norm2};
use crate::model::CovarianceModel;
use crate::rng::Stream;

#[derive(Clone, Debug, PartialEq)]
pub enum ConeError {
    /// Block size must satisfy 1 <= s <= p.
    BadBlockSize { s: usize, p: usize },
    /// Admissibility is undefined for the zero vector.
    ZeroVector,
    BadK0 { k0: f64 },
}

impl fmt::Display for ConeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeError::BadBlockSize { s, p } => write!(f, "block size {s} invalid for p={p}"),
            ConeError::ZeroVector => write!(f, "zero vector is not admissible"),
            ConeError::BadK0 { k0 } => write!(f, "cone parameter k0={k0} must be positive"),
        }
    }
}

/// Indices of `delta` sorted by descending |delta_i|, ties broken by
/// ascending index.
pub fn magnitude_order(delta: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..delta.len()).collect();
    order.sort_by(|&i, &j| {
        let (ai, aj) = (libm::fabs(delta[i]), libm::fabs(delta[j]));
        aj.partial_cmp(&ai).unwrap().then(i.cmp(&j))
    });
    order
}

/// The indices of the s largest coefficients in absolute value (T_0),
/// ascending.
pub fn top_support(delta: &[f64], s: usize) -> Vec<usize> {
    let mut t0: Vec<usize> = magnitude_order(delta).into_iter().take(s).collect();
    t0.sort_unstable();
    t0
}

/// Greedy partition of {0, .., p-1} into blocks T_0, T_1, ..., T_K of size s
/// (the last possibly smaller) by descending magnitude.
#[derive(Clone, Debug)]
pub struct ConeDecomposition {
    pub s: usize,
    pub blocks: Vec<Vec<usize>>,
    pub source: Vec<f64>,
}

impl ConeDecomposition {
    pub fn block_norm2(&self, k: usize) -> f64 {
        libm::sqrt(
            self.blocks[k]
                .iter()
                .map(|&i| self.source[i] * self.source[i])
                .sum(),
        )
    }

    pub fn block_norm1(&self, k: usize) -> f64 {
        self.blocks[k].iter().map(|&i| libm::fabs(self.source[i])).sum()
    }
}

pub fn block_decompose(delta: &[f64], s: usize) -> Result<ConeDecomposition, ConeError> {
    let p = delta.len();
    if s == 0 || s > p {
        return Err(ConeError::BadBlockSize { s, p });
    }
    let order = magnitude_order(delta);
    let mut blocks = Vec::with_capacity(p.div_ceil(s));
    for chunk in order.chunks(s) {
        let mut b: Vec<usize> = chunk.to_vec();
        b.sort_unstable();
        blocks.push(b);
    }
    Ok(ConeDecomposition { s, blocks, source: delta.to_vec() })
}

/// Outcome of the admissibility check of Definition-style cone membership.
#[derive(Clone, Debug)]
pub struct AdmissibilityWitness {
    pub admissible: bool,
    /// The witnessing support (T_0) when admissible.
    pub j0: Option<Vec<usize>>,
    pub k0: f64,
}

/// A vector is admissible iff the cone inequality holds at some support of
/// size <= s; by maximality of ||delta_{T_0}||_1 this reduces to the T_0
/// check ||delta_{T_0^c}||_1 <= k0 ||delta_{T_0}||_1.
pub fn is_admissible(delta: &[f64], s: usize, k0: f64) -> Result<AdmissibilityWitness, ConeError> {
    let p = delta.len();
    if s == 0 || s > p {
        return Err(ConeError::BadBlockSize { s, p });
    }
    if !(k0 > 0.0) {
        return Err(ConeError::BadK0 { k0 });
    }
    if delta.iter().all(|&v| v == 0.0) {
        return Err(ConeError::ZeroVector);
    }
    let t0 = top_support(delta, s);
    let l1_t0: f64 = t0.iter().map(|&i| libm::fabs(delta[i])).sum();
    let l1_rest = norm1(delta) - l1_t0;
    let admissible = l1_rest <= k0 * l1_t0;
    Ok(AdmissibilityWitness {
        admissible,
        j0: if admissible { Some(t0) } else { None },
        k0,
    })
}

/// The norm quantities of the appendix chain, for inequality testing.
#[derive(Clone, Copy, Debug)]
pub struct TailSums {
    /// sum_{k >= 1} ||delta_{T_k}||_2
    pub tail_l2_sum: f64,
    /// s^{-1/2} ||delta||_1
    pub l1_over_sqrt_s: f64,
    /// (k0 + 1) ||delta_{T_0}||_2
    pub bound_k0_plus_1: f64,
    /// ||delta||_2
    pub total_l2: f64,
    /// (k0 + 2) ||delta_{T_0}||_2
    pub bound_k0_plus_2: f64,
}

pub fn decomposition_tail_sums(dec: &ConeDecomposition, k0: f64) -> TailSums {
    let t0_l2 = dec.block_norm2(0);
    let tail_l2_sum = (1..dec.blocks.len()).map(|k| dec.block_norm2(k)).sum();
    TailSums {
        tail_l2_sum,
        l1_over_sqrt_s: norm1(&dec.source) / libm::sqrt(dec.s as f64),
        bound_k0_plus_1: (k0 + 1.0) * t0_l2,
        total_l2: norm2(&dec.source),
        bound_k0_plus_2: (k0 + 2.0) * t0_l2,
    }
}

/// Random vector in the cone (unnormalized): support J_0 uniform with
/// standard-normal entries, complement entries i.i.d. and rescaled so that
/// ||delta_{J_0^c}||_1 = u * k0 * ||delta_{J_0}||_1 with u uniform on [0, 1].
/// Covers both cone interior and boundary.
pub fn random_cone_vector(p: usize, s: usize, k0: f64, rng: &mut Stream) -> Vec<f64> {
    let j0 = rng.subset(p, s);
    let mut delta = vec![0.0; p];
    for &i in &j0 {
        // reject exact zeros so J_0 really carries mass
        loop {
            let v = rng.normal();
            if v != 0.0 {
                delta[i] = v;
                break;
            }
        }
    }
    let l1_j0: f64 = j0.iter().map(|&i| libm::fabs(delta[i])).sum();
    if s < p {
        let mut on_j0 = vec![false; p];
        for &i in &j0 {
            on_j0[i] = true;
        }
        let mut tail = vec![0.0; p];
        let mut tail_l1 = 0.0;
        for i in 0..p {
            if !on_j0[i] {
                let v = rng.normal();
                tail[i] = v;
                tail_l1 += libm::fabs(v);
            }
        }
        let u = rng.uniform();
        if tail_l1 > 0.0 {
            let scale = u * k0 * l1_j0 / tail_l1;
            for i in 0..p {
                delta[i] += tail[i] * scale;
            }
        }
    }
    delta
}

/// Draw a vector from E_s: a [`random_cone_vector`] normalized so
/// ||Sigma^{1/2} delta||_2 = 1.
pub fn sample_es(model: &CovarianceModel, s: usize, k0: f64, seed: u64) -> Vec<f64> {
    let p = model.p;
    assert!(s >= 1 && s <= p, "s={s} out of range for p={p}");
    assert!(k0 > 0.0);
    let mut rng = Stream::new(seed);
    let mut delta = random_cone_vector(p, s, k0, &mut rng);
    normalize_sigma_half(model, &mut delta);
    delta
}

/// Rescale `delta` in place so that ||Sigma^{1/2} delta||_2 = 1.
pub fn normalize_sigma_half(model: &CovarianceModel, delta: &mut [f64]) {
    let img = model.sigma_half.matvec(delta);
    let norm = norm2(&img);
    assert!(norm > 0.0, "cannot normalize a Sigma^{{1/2}}-null vector");
    for v in delta.iter_mut() {
        *v /= norm;
    }
}
