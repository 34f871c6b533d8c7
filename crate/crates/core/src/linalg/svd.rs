use nalgebra::linalg::{SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use super::{DenseMatrix, LinalgError, SYMMETRY_TOL};

/// Default relative cutoff for the numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Thin SVD `M ≈ U diag(σ) Vᵀ` truncated to the numerical rank.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    pub rank_tol: f64,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn dim(&self) -> usize {
        self.u.n_rows()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let scaled = DenseMatrix::from_fn(self.u.n_rows(), self.rank(), |i, k| {
            self.u[(i, k)] * self.sigma[k]
        });
        scaled.matmul_transpose(&self.v)
    }
}

/// One spectral component: `sigma · u vᵀ` with unit vectors `u`, `v`.
struct Component {
    sigma: f64,
    u: Vec<f64>,
    v: Vec<f64>,
}

/// Full singular spectrum of a square matrix, in nonincreasing order.
///
/// Symmetric inputs go through the symmetric eigensolver (σᵢ = |λᵢ|), all
/// others through Golub–Kahan SVD.
fn spectral_components(m: &DenseMatrix, want_vectors: bool) -> Vec<Component> {
    let n = m.n_rows();
    let mut comps = Vec::with_capacity(n);
    if m.is_symmetric(SYMMETRY_TOL) {
        let mut sym = m.to_nalgebra();
        // Round-off asymmetry below the tolerance is folded away so that the
        // eigensolver sees an exactly symmetric matrix.
        sym = (&sym + sym.transpose()) * 0.5;
        if want_vectors {
            let eig = SymmetricEigen::new(sym);
            for k in 0..n {
                let lam = eig.eigenvalues[k];
                let q: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
                let v = if lam < 0.0 {
                    q.iter().map(|x| -x).collect()
                } else {
                    q.clone()
                };
                comps.push(Component {
                    sigma: lam.abs(),
                    u: q,
                    v,
                });
            }
        } else {
            for lam in sym.symmetric_eigenvalues().iter() {
                comps.push(Component {
                    sigma: lam.abs(),
                    u: Vec::new(),
                    v: Vec::new(),
                });
            }
        }
    } else {
        let svd = SVD::new(m.to_nalgebra(), want_vectors, want_vectors);
        for k in 0..n {
            let (u, v) = match (&svd.u, &svd.v_t) {
                (Some(u), Some(v_t)) => (
                    u.column(k).iter().copied().collect(),
                    v_t.row(k).iter().copied().collect(),
                ),
                _ => (Vec::new(), Vec::new()),
            };
            comps.push(Component {
                sigma: svd.singular_values[k],
                u,
                v,
            });
        }
    }
    comps.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
    comps
}

/// Singular values of a square matrix, nonincreasing, all `n` of them.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    m.ensure_square()?;
    m.ensure_finite()?;
    Ok(spectral_components(m, false)
        .into_iter()
        .map(|c| c.sigma)
        .collect())
}

/// Thin SVD truncated at `r = #{σᵢ > rank_tol · σ₁}`.
pub fn svd(m: &DenseMatrix, rank_tol: f64) -> Result<SvdFactors, LinalgError> {
    m.ensure_square()?;
    m.ensure_finite()?;
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(LinalgError::InvalidParameter {
            name: "rank_tol",
            value: rank_tol,
        });
    }
    let n = m.n_rows();
    let comps = spectral_components(m, true);
    let sigma_max = comps.first().map_or(0.0, |c| c.sigma);
    let kept: Vec<&Component> = comps
        .iter()
        .take_while(|c| c.sigma > rank_tol * sigma_max)
        .collect();
    let r = kept.len();
    let u = DenseMatrix::from_fn(n, r, |i, k| kept[k].u[i]);
    let v = DenseMatrix::from_fn(n, r, |i, k| kept[k].v[i]);
    Ok(SvdFactors {
        u,
        sigma: kept.iter().map(|c| c.sigma).collect(),
        v,
        rank_tol,
    })
}

/// `Σᵢ f(σᵢ) uᵢ vᵢᵀ` over every component with `f(σᵢ) != 0`.
///
/// Only the surviving components are accumulated, which keeps singular
/// value shrinkage cheap when the result is low rank.
pub(crate) fn spectral_map(m: &DenseMatrix, f: impl Fn(f64) -> f64) -> DenseMatrix {
    let n = m.n_rows();
    let symmetric = m.is_symmetric(SYMMETRY_TOL);
    let mut out = DenseMatrix::zeros(n, n);
    let entries = out.as_mut_slice();
    for c in spectral_components(m, true) {
        let s = f(c.sigma);
        if s == 0.0 {
            continue;
        }
        for i in 0..n {
            let a = s * c.u[i];
            if a == 0.0 {
                continue;
            }
            let row = &mut entries[i * n..(i + 1) * n];
            for (o, &vj) in row.iter_mut().zip(&c.v) {
                *o += a * vj;
            }
        }
    }
    if symmetric {
        out.symmetrize();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        let g = q.transpose_matmul(q);
        (&g - &DenseMatrix::identity(q.n_cols())).max_abs()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let f = svd(&DenseMatrix::identity(3), 1e-8).unwrap();
        assert_eq!(f.rank(), 3);
        for s in &f.sigma {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ones_matrix_is_rank_one() {
        // 𝟙𝟙ᵀ on ℝ⁴ has eigenvector 𝟙/2 with eigenvalue 4; the rest vanish.
        let m = DenseMatrix::filled(4, 4, 1.0);
        let f = svd(&m, 1e-8).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.sigma[0] - 4.0).abs() < 1e-12);
        for i in 0..4 {
            assert!((f.u[(i, 0)].abs() - 0.5).abs() < 1e-12);
        }
        let sv = singular_values(&m).unwrap();
        assert!((sv[0] - 4.0).abs() < 1e-12);
        assert!(sv[1..].iter().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn zero_matrix_has_empty_factors() {
        let f = svd(&DenseMatrix::zeros(5, 5), 1e-8).unwrap();
        assert_eq!(f.rank(), 0);
        assert_eq!(f.u.shape(), (5, 0));
        assert_eq!(f.reconstruct(), DenseMatrix::zeros(5, 5));
    }

    #[test]
    fn rejects_bad_inputs() {
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(svd(&rect, 1e-8), Err(LinalgError::NotSquare { .. })));
        let mut nan = DenseMatrix::zeros(2, 2);
        nan[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&nan, 1e-8), Err(LinalgError::NonFinite)));
        assert!(svd(&DenseMatrix::identity(2), 0.0).is_err());
        assert!(svd(&DenseMatrix::identity(2), 1.0).is_err());
    }

    #[test]
    fn nonsymmetric_factors_reconstruct() {
        let m = DenseMatrix::from_fn(6, 6, |i, j| ((i * 5 + j * 3) % 7) as f64 - 2.0 * (i as f64));
        let f = svd(&m, 1e-8).unwrap();
        assert!(orthonormality_error(&f.u) < 1e-10);
        assert!(orthonormality_error(&f.v) < 1e-10);
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        let err = (&f.reconstruct() - &m).frobenius();
        assert!(err <= 1e-8 * m.frobenius());
    }

    #[test]
    fn indefinite_symmetric_factors_reconstruct() {
        let m = DenseMatrix::from_diagonal(&[3.0, -2.0, 0.5]);
        let f = svd(&m, 1e-8).unwrap();
        assert_eq!(f.sigma, vec![3.0, 2.0, 0.5]);
        assert!((&f.reconstruct() - &m).max_abs() < 1e-14);
    }
}
