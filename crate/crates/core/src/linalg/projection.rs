//! Projections onto the tangent space of a low-rank matrix and onto
//! coordinate supports, plus the norm of their composition.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DenseMatrix, LinalgError, SvdFactors};

/// Orthonormality slack accepted for tangent-space bases.
const ORTHONORMAL_TOL: f64 = 1e-10;

/// A set of matrix coordinates `(i, j)` in `[0, n)²`, stored as a mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    n: usize,
    mask: Vec<bool>,
    len: usize,
}

impl SupportSet {
    pub fn empty(n: usize) -> Self {
        SupportSet {
            n,
            mask: vec![false; n * n],
            len: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        SupportSet {
            n,
            mask: vec![true; n * n],
            len: n * n,
        }
    }

    /// Builds a set from explicit pairs; repeated pairs collapse.
    pub fn from_indices(
        n: usize,
        indices: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, LinalgError> {
        let mut s = Self::empty(n);
        for (i, j) in indices {
            if i >= n || j >= n {
                return Err(LinalgError::IndexOutOfRange { i, j, n });
            }
            s.insert(i, j);
        }
        Ok(s)
    }

    pub fn from_mask(n: usize, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), n * n, "support mask has wrong length");
        let len = mask.iter().filter(|&&b| b).count();
        SupportSet { n, mask, len }
    }

    /// Coordinates where `m` is nonzero.
    pub fn nonzeros_of(m: &DenseMatrix) -> Self {
        assert!(m.is_square());
        Self::from_mask(m.n_rows(), m.as_slice().iter().map(|&x| x != 0.0).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Fraction of the `n²` grid covered.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.len as f64 / (self.n * self.n) as f64
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.mask[i * self.n + j]
    }

    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        let slot = &mut self.mask[i * self.n + j];
        if *slot {
            false
        } else {
            *slot = true;
            self.len += 1;
            true
        }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k / n, k % n))
    }

    pub fn complement(&self) -> SupportSet {
        Self::from_mask(self.n, self.mask.iter().map(|b| !b).collect())
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        assert_eq!(self.n, other.n);
        Self::from_mask(
            self.n,
            self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect(),
        )
    }

    pub fn intersection(&self, other: &SupportSet) -> SupportSet {
        assert_eq!(self.n, other.n);
        Self::from_mask(
            self.n,
            self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        )
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.n == other.n && self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }

    pub fn is_disjoint(&self, other: &SupportSet) -> bool {
        self.n == other.n && self.mask.iter().zip(&other.mask).all(|(a, b)| !(*a && *b))
    }

    /// 0/1 indicator matrix of the set.
    pub fn indicator(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| {
            if self.mask[i * self.n + j] {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// `T = { U Xᵀ + Y Vᵀ }` for column-orthonormal `U`, `V` of equal shape.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TangentSpace {
    u: DenseMatrix,
    v: DenseMatrix,
}

impl TangentSpace {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self, LinalgError> {
        if u.shape() != v.shape() {
            return Err(LinalgError::DimensionMismatch {
                left: u.shape(),
                right: v.shape(),
            });
        }
        for basis in [&u, &v] {
            let gram = basis.transpose_matmul(basis);
            let err = (&gram - &DenseMatrix::identity(basis.n_cols())).max_abs();
            if err > ORTHONORMAL_TOL {
                return Err(LinalgError::NotOrthonormal { error: err });
            }
        }
        Ok(TangentSpace { u, v })
    }

    pub fn from_factors(f: &SvdFactors) -> Self {
        TangentSpace {
            u: f.u.clone(),
            v: f.v.clone(),
        }
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.u.n_rows()
    }

    pub fn rank(&self) -> usize {
        self.u.n_cols()
    }

    /// `U Vᵀ`, the sign matrix of the low-rank component.
    pub fn uv_t(&self) -> DenseMatrix {
        self.u.matmul_transpose(&self.v)
    }

    fn check(&self, z: &DenseMatrix) -> Result<(), LinalgError> {
        let n = self.dim();
        if z.shape() != (n, n) {
            return Err(LinalgError::DimensionMismatch {
                left: z.shape(),
                right: (n, n),
            });
        }
        Ok(())
    }
}

/// `P_T Z = UUᵀZ + ZVVᵀ − UUᵀZVVᵀ`.
pub fn project_t(z: &DenseMatrix, t: &TangentSpace) -> Result<DenseMatrix, LinalgError> {
    t.check(z)?;
    if t.rank() == 0 {
        return Ok(DenseMatrix::zeros(z.n_rows(), z.n_cols()));
    }
    let ut_z = t.u.transpose_matmul(z);
    let z_v = z.matmul(&t.v);
    let core = ut_z.matmul(&t.v);
    let mut out = t.u.matmul(&ut_z);
    out += &z_v.matmul_transpose(&t.v);
    out -= &t.u.matmul(&core).matmul_transpose(&t.v);
    Ok(out)
}

/// `P_T⊥ Z = (I − UUᵀ) Z (I − VVᵀ)`.
pub fn project_t_perp(z: &DenseMatrix, t: &TangentSpace) -> Result<DenseMatrix, LinalgError> {
    t.check(z)?;
    if t.rank() == 0 {
        return Ok(z.clone());
    }
    let mut left = z.clone();
    left -= &t.u.matmul(&t.u.transpose_matmul(z));
    let mut out = left.clone();
    out -= &left.matmul(&t.v).matmul_transpose(&t.v);
    Ok(out)
}

/// Keeps the entries of `z` on `s` and zeroes the rest.
pub fn project_support(z: &DenseMatrix, s: &SupportSet) -> Result<DenseMatrix, LinalgError> {
    if z.shape() != (s.n(), s.n()) {
        return Err(LinalgError::DimensionMismatch {
            left: z.shape(),
            right: (s.n(), s.n()),
        });
    }
    let mut out = z.clone();
    let hint = z.symmetric_hint();
    for (x, &keep) in out.as_mut_slice().iter_mut().zip(s.mask()) {
        if !keep {
            *x = 0.0;
        }
    }
    if hint && is_symmetric_support(s) {
        out.symmetrize();
    }
    Ok(out)
}

fn is_symmetric_support(s: &SupportSet) -> bool {
    let n = s.n();
    (0..n).all(|i| ((i + 1)..n).all(|j| s.contains(i, j) == s.contains(j, i)))
}

/// Result of the Lanczos iteration for `‖P_Γ P_T‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpNormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was reached; `value` is then the last
    /// Ritz estimate, a lower bound.
    pub converged: bool,
}

pub const OPNORM_MAX_ITERS: usize = 1_000;
const RITZ_CHECK_EVERY: usize = 5;

fn top_ritz_value(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    let mut tri = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tri[(i, i)] = alpha[i];
        if i + 1 < m {
            tri[(i, i + 1)] = beta[i];
            tri[(i + 1, i)] = beta[i];
        }
    }
    tri.symmetric_eigenvalues().max()
}

/// Coordinates `(ZᵀU, (I − UUᵀ)ZV)` of `Z ∈ T`; `Z = U·Aᵀ + B·Vᵀ` with the
/// Frobenius inner product becoming the Euclidean one.
fn t_coords(z: &DenseMatrix, t: &TangentSpace) -> Vec<f64> {
    let a = z.transpose_matmul(&t.u);
    let zv = z.matmul(&t.v);
    let b = &zv - &t.u.matmul(&t.u.transpose_matmul(&zv));
    let mut out = a.into_entries();
    out.extend(b.into_entries());
    out
}

fn t_embed(c: &[f64], t: &TangentSpace) -> DenseMatrix {
    let (n, r) = t.u.shape();
    let a = DenseMatrix::from_row_major(n, r, c[..n * r].to_vec()).expect("coordinate length");
    let b = DenseMatrix::from_row_major(n, r, c[n * r..].to_vec()).expect("coordinate length");
    &t.u.matmul_transpose(&a) + &b.matmul_transpose(&t.v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Operator norm of `P_Γ ∘ P_T` on `ℝ^{n×n}` with the Frobenius metric.
///
/// Runs Lanczos with full reorthogonalization on the self-adjoint
/// `P_T P_Γ P_T`, whose top eigenvalue is `‖P_Γ P_T‖²`, in coordinates of
/// `T` (length `2nr`). Stops when the largest Ritz value changes by at most
/// `tol` (relative) between checks or the Krylov space is exhausted.
pub fn opnorm_pgamma_pt(
    s: &SupportSet,
    t: &TangentSpace,
    tol: f64,
) -> Result<OpNormEstimate, LinalgError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(LinalgError::InvalidParameter {
            name: "tol",
            value: tol,
        });
    }
    let n = t.dim();
    if s.n() != n {
        return Err(LinalgError::DimensionMismatch {
            left: (s.n(), s.n()),
            right: (n, n),
        });
    }
    if s.is_empty() || t.rank() == 0 {
        return Ok(OpNormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x6f70_6e6f_726d);
    let start = DenseMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let mut x = t_coords(&start, t);
    let nx = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= nx);
    let dim = x.len();
    let max_iters = OPNORM_MAX_ITERS.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev = f64::NAN;

    for iter in 1..=max_iters {
        let z = project_support(&t_embed(&x, t), s)?;
        let mut w = t_coords(&z, t);
        let a = dot(&x, &w);
        alpha.push(a);
        basis.push(x);
        // Two Gram-Schmidt passes keep the basis orthonormal to roundoff.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let b = dot(&w, &w).sqrt();
        let exhausted = b <= 1e-12 * a.abs().max(1e-300) || iter == dim;
        let capped = iter == max_iters;
        if exhausted || capped || iter % RITZ_CHECK_EVERY == 0 {
            let theta = top_ritz_value(&alpha, &beta).max(0.0);
            let converged = exhausted || (theta - prev).abs() <= tol * theta;
            if converged || capped {
                if !converged {
                    log::warn!("Lanczos for ‖P_Γ P_T‖ hit the {max_iters}-step cap");
                }
                return Ok(OpNormEstimate {
                    value: theta.sqrt(),
                    iterations: iter,
                    converged,
                });
            }
            prev = theta;
        }
        beta.push(b);
        x = w.into_iter().map(|v| v / b).collect();
    }
    unreachable!("the final iteration always returns")
}
