//! Proximal operators of the two objective terms of the decomposition.

use super::svd::spectral_map;
use super::{DenseMatrix, LinalgError};

fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

fn check_tau(tau: f64) -> Result<(), LinalgError> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(LinalgError::InvalidParameter {
            name: "tau",
            value: tau,
        })
    }
}

/// Entrywise shrinkage `sign(m)·max(|m| − τ, 0)`, the prox of `τ‖·‖₁`.
pub fn soft_threshold(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix, LinalgError> {
    check_tau(tau)?;
    Ok(m.map(|x| shrink(x, tau)))
}

/// Singular value shrinkage `U diag(max(σ − τ, 0)) Vᵀ`, the prox of `τ‖·‖_*`.
pub fn sv_threshold(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix, LinalgError> {
    check_tau(tau)?;
    m.ensure_square()?;
    m.ensure_finite()?;
    Ok(spectral_map(m, |s| (s - tau).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimizes ½(x − m)² + τ|x| over a uniform grid of step 1e-5.
    fn grid_prox(m: f64, tau: f64) -> f64 {
        let steps = 400_000;
        let (lo, hi) = (-2.0, 2.0);
        let h = (hi - lo) / steps as f64;
        (0..=steps)
            .map(|k| lo + k as f64 * h)
            .min_by(|a, b| {
                let fa = 0.5 * (a - m).powi(2) + tau * a.abs();
                let fb = 0.5 * (b - m).powi(2) + tau * b.abs();
                fa.total_cmp(&fb)
            })
            .unwrap()
    }

    #[test]
    fn scalar_cases_match_grid_oracle() {
        assert!((grid_prox(0.7, 0.5) - 0.2).abs() < 1e-5);
        assert!(grid_prox(-0.3, 0.5).abs() < 1e-5);
        let m = DenseMatrix::from_row_major(1, 2, vec![0.7, -0.3]).unwrap();
        let s = soft_threshold(&m, 0.5).unwrap();
        assert!((s[(0, 0)] - 0.2).abs() < 1e-15);
        assert_eq!(s[(0, 1)], 0.0);
    }

    #[test]
    fn zero_tau_is_identity() {
        let m = DenseMatrix::from_fn(3, 3, |i, j| i as f64 - 2.0 * j as f64);
        assert_eq!(soft_threshold(&m, 0.0).unwrap(), m);
        let back = sv_threshold(&m, 0.0).unwrap();
        assert!((&back - &m).frobenius() <= 1e-8 * m.frobenius());
    }

    #[test]
    fn zero_maps_to_zero() {
        let z = DenseMatrix::zeros(3, 3);
        assert_eq!(soft_threshold(&z, 0.4).unwrap(), z);
        assert_eq!(sv_threshold(&z, 0.4).unwrap(), z);
    }

    #[test]
    fn negative_tau_rejected() {
        let m = DenseMatrix::identity(2);
        assert!(soft_threshold(&m, -1e-3).is_err());
        assert!(sv_threshold(&m, -1e-3).is_err());
        assert!(soft_threshold(&m, f64::NAN).is_err());
    }

    #[test]
    fn diagonal_shrinkage_closed_form() {
        let m = DenseMatrix::from_diagonal(&[3.0, 1.0, 0.2]);
        let s = sv_threshold(&m, 0.5).unwrap();
        let expected = DenseMatrix::from_diagonal(&[2.5, 0.5, 0.0]);
        assert!((&s - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn large_tau_kills_everything() {
        let m = DenseMatrix::from_fn(4, 4, |i, j| ((i + 2 * j) % 3) as f64);
        let s1 = super::super::norm(&m, super::super::NormKind::Spectral).unwrap();
        assert!(sv_threshold(&m, s1).unwrap().max_abs() < 1e-12);
        assert_eq!(sv_threshold(&m, s1 * 2.0).unwrap(), DenseMatrix::zeros(4, 4));
    }
}
