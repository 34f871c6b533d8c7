//! Seeded generators for planted quasi-clique instances and the random
//! matrices used by property tests.
//!
//! A planted instance on `n` vertices puts its quasi-clique on vertices
//! `0..n_c`. Every unordered pair inside the block (self-pairs included)
//! becomes an edge with probability `gamma`; every pair outside it with
//! probability `rho`. Sampling runs over the upper triangle in row-major
//! order and mirrors, so `A` is exactly symmetric.
//!
//! The low-rank ground truth is the block indicator `B0 = 𝟙_Ω`, rank one.
//! The sparse remainder `C0 = A − B0` is −1 on block pairs that were not
//! sampled and +1 on diversionary edges.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, SupportSet};
use crate::rng::{bernoulli, stream_rng, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("n must be positive")]
    EmptyGraph,
    #[error("n_c = {n_c} must satisfy 0 < n_c <= n = {n}")]
    BlockSize { n_c: usize, n: usize },
    #[error("gamma = {0} must lie in (0, 1]")]
    Gamma(f64),
    #[error("rho = {0} must lie in [0, 1)")]
    Rho(f64),
    #[error("probability p = {0} must lie in [0, 1]")]
    Probability(f64),
    #[error("rank r = {r} must satisfy 1 <= r <= n = {n}")]
    Rank { r: usize, n: usize },
    #[error("adjacency matrix is not a symmetric 0/1 matrix of size {n}")]
    NotAdjacency { n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub n: usize,
    pub n_c: usize,
    pub gamma: f64,
    pub rho: f64,
    pub seed: u64,
}

impl InstanceParams {
    pub fn new(n: usize, n_c: usize, gamma: f64, rho: f64, seed: u64) -> Result<Self, InstanceError> {
        let p = InstanceParams {
            n,
            n_c,
            gamma,
            rho,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.n == 0 {
            return Err(InstanceError::EmptyGraph);
        }
        if self.n_c == 0 || self.n_c > self.n {
            return Err(InstanceError::BlockSize {
                n_c: self.n_c,
                n: self.n,
            });
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(InstanceError::Gamma(self.gamma));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(InstanceError::Rho(self.rho));
        }
        Ok(())
    }

    /// The planted vertex-pair block `Ω = [0, n_c)²`.
    pub fn omega(&self) -> SupportSet {
        let n = self.n;
        let n_c = self.n_c;
        SupportSet::from_mask(
            n,
            (0..n * n).map(|k| k / n < n_c && k % n < n_c).collect(),
        )
    }

    /// Block indicator `𝟙_Ω`, the low-rank recovery target.
    pub fn block_indicator(&self) -> DenseMatrix {
        let n_c = self.n_c;
        let mut b = DenseMatrix::from_fn(self.n, self.n, |i, j| {
            if i < n_c && j < n_c {
                1.0
            } else {
                0.0
            }
        });
        b.symmetrize();
        b
    }
}

/// A planted instance together with its ground-truth decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub params: InstanceParams,
    /// Observed adjacency `A = B0 + C0`.
    pub adjacency: DenseMatrix,
    /// Low-rank component: the block indicator.
    pub b0: DenseMatrix,
    /// Sparse component `A − B0` with entries in {−1, 0, +1}.
    pub c0: DenseMatrix,
    /// Block index set `[0, n_c)²`.
    pub omega: SupportSet,
    /// Realized edges inside the block.
    pub gamma_support: SupportSet,
    /// `supp(C0)`: unsampled block pairs plus diversionary edges.
    pub noise_support: SupportSet,
}

impl PlantedInstance {
    /// Rebuilds the ground truth from an adjacency matrix and parameters.
    pub fn from_adjacency(
        params: InstanceParams,
        adjacency: DenseMatrix,
    ) -> Result<Self, InstanceError> {
        params.validate()?;
        let n = params.n;
        let binary = adjacency.as_slice().iter().all(|&x| x == 0.0 || x == 1.0);
        if adjacency.shape() != (n, n) || !binary || adjacency.max_asymmetry() != 0.0 {
            return Err(InstanceError::NotAdjacency { n });
        }
        let mut adjacency = adjacency;
        adjacency.symmetrize();
        let b0 = params.block_indicator();
        let c0 = &adjacency - &b0;
        let omega = params.omega();
        let gamma_support = SupportSet::nonzeros_of(&adjacency).intersection(&omega);
        let noise_support = SupportSet::nonzeros_of(&c0);
        Ok(PlantedInstance {
            params,
            adjacency,
            b0,
            c0,
            omega,
            gamma_support,
            noise_support,
        })
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// Diversionary edges, i.e. edges outside the block.
    pub fn diversionary_support(&self) -> SupportSet {
        self.noise_support.intersection(&self.omega.complement())
    }

    /// Entrywise sign of `C0`.
    pub fn sign_c0(&self) -> DenseMatrix {
        self.c0.map(|x| if x == 0.0 { 0.0 } else { x.signum() })
    }
}

pub fn gen_planted(params: InstanceParams) -> Result<PlantedInstance, InstanceError> {
    params.validate()?;
    let n = params.n;
    let n_c = params.n_c;
    let mut block_rng = stream_rng(params.seed, Stream::PlantedBlock);
    let mut noise_rng = stream_rng(params.seed, Stream::Diversionary);
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let edge = if i < n_c && j < n_c {
                bernoulli(&mut block_rng, params.gamma)
            } else {
                bernoulli(&mut noise_rng, params.rho)
            };
            if edge {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    PlantedInstance::from_adjacency(params, a)
}

fn check_probability(p: f64) -> Result<(), InstanceError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(InstanceError::Probability(p))
    }
}

/// `Γ ~ Bern(p)` over the `n²` grid. With `symmetric`, the pair
/// `(i, j), (j, i)` is drawn once from the upper triangle.
pub fn gen_bernoulli_support(
    n: usize,
    p: f64,
    seed: u64,
    symmetric: bool,
) -> Result<SupportSet, InstanceError> {
    check_probability(p)?;
    let mut rng = stream_rng(seed, Stream::BernoulliSupport);
    let mut s = SupportSet::empty(n);
    if symmetric {
        for i in 0..n {
            for j in i..n {
                if bernoulli(&mut rng, p) {
                    s.insert(i, j);
                    s.insert(j, i);
                }
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                if bernoulli(&mut rng, p) {
                    s.insert(i, j);
                }
            }
        }
    }
    Ok(s)
}

/// I.i.d. entries: +1 w.p. p/2, −1 w.p. p/2, 0 otherwise.
pub fn gen_random_sign_sparse(n: usize, p: f64, seed: u64) -> Result<DenseMatrix, InstanceError> {
    check_probability(p)?;
    let mut rng = stream_rng(seed, Stream::RandomSign);
    Ok(DenseMatrix::from_fn(n, n, |_, _| {
        let u: f64 = rand::Rng::random(&mut rng);
        if u < 0.5 * p {
            1.0
        } else if u < p {
            -1.0
        } else {
            0.0
        }
    }))
}

/// `G Hᵀ` with `n×r` standard-normal factors.
pub fn gen_low_rank(n: usize, r: usize, seed: u64) -> Result<DenseMatrix, InstanceError> {
    if r == 0 || r > n {
        return Err(InstanceError::Rank { r, n });
    }
    let mut rng = stream_rng(seed, Stream::LowRank);
    let g = DenseMatrix::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
    let h = DenseMatrix::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
    Ok(g.matmul_transpose(&h))
}
