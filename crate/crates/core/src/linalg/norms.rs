use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{singular_values, DenseMatrix, LinalgError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Sum of singular values.
    Nuclear,
    /// Largest singular value.
    Spectral,
    Frobenius,
    /// Sum of absolute entries.
    L1,
    /// Largest absolute entry.
    Linf,
    /// Largest Euclidean norm over all rows and all columns.
    Linf2,
}

impl NormKind {
    pub const ALL: [NormKind; 6] = [
        NormKind::Nuclear,
        NormKind::Spectral,
        NormKind::Frobenius,
        NormKind::L1,
        NormKind::Linf,
        NormKind::Linf2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::Nuclear => "nuclear",
            NormKind::Spectral => "spectral",
            NormKind::Frobenius => "frobenius",
            NormKind::L1 => "l1",
            NormKind::Linf => "linf",
            NormKind::Linf2 => "linf2",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NormKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown norm `{s}`"))
    }
}

pub fn norm(m: &DenseMatrix, kind: NormKind) -> Result<f64, LinalgError> {
    m.ensure_finite()?;
    match kind {
        NormKind::Nuclear => {
            m.ensure_square()?;
            Ok(singular_values(m)?.iter().sum())
        }
        NormKind::Spectral => {
            m.ensure_square()?;
            Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
        }
        NormKind::Frobenius => Ok(m.frobenius()),
        NormKind::L1 => Ok(m.as_slice().iter().map(|x| x.abs()).sum()),
        NormKind::Linf => Ok(m.max_abs()),
        NormKind::Linf2 => {
            m.ensure_square()?;
            Ok(linf2(m))
        }
    }
}

/// `max { maxᵢ ‖row i‖₂, maxⱼ ‖col j‖₂ }` without the square-shape check.
pub(crate) fn linf2(m: &DenseMatrix) -> f64 {
    let (rows, cols) = m.shape();
    let mut col_sq = vec![0.0; cols];
    let mut best_row = 0.0f64;
    for i in 0..rows {
        let row = m.row(i);
        best_row = best_row.max(row.iter().map(|x| x * x).sum::<f64>());
        for (acc, x) in col_sq.iter_mut().zip(row) {
            *acc += x * x;
        }
    }
    let best_col = col_sq.into_iter().fold(0.0f64, f64::max);
    best_row.max(best_col).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_zero_norms() {
        let z = DenseMatrix::zeros(4, 4);
        for kind in NormKind::ALL {
            assert_eq!(norm(&z, kind).unwrap(), 0.0, "{kind}");
        }
    }

    #[test]
    fn identity_norms() {
        let i3 = DenseMatrix::identity(3);
        assert!((norm(&i3, NormKind::Nuclear).unwrap() - 3.0).abs() < 1e-12);
        assert!((norm(&i3, NormKind::Spectral).unwrap() - 1.0).abs() < 1e-12);
        assert!((norm(&i3, NormKind::Frobenius).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(norm(&i3, NormKind::Linf2).unwrap(), 1.0);
    }

    #[test]
    fn linf2_takes_max_of_rows_and_columns() {
        // Rows have norms {5, 0}; columns {3, 4}.
        let m = DenseMatrix::from_row_major(2, 2, vec![3.0, 4.0, 0.0, 0.0]).unwrap();
        assert_eq!(norm(&m, NormKind::Linf2).unwrap(), 5.0);
        // Columns dominate in the transpose-like case.
        let m = DenseMatrix::from_row_major(2, 2, vec![3.0, 0.0, 4.0, 0.0]).unwrap();
        assert_eq!(norm(&m, NormKind::Linf2).unwrap(), 5.0);
    }

    #[test]
    fn entrywise_norms_accept_rectangles() {
        let m = DenseMatrix::from_row_major(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(norm(&m, NormKind::L1).unwrap(), 3.5);
        assert_eq!(norm(&m, NormKind::Linf).unwrap(), 2.0);
        assert!(norm(&m, NormKind::Nuclear).is_err());
        assert!(norm(&m, NormKind::Linf2).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = DenseMatrix::zeros(2, 2);
        m[(1, 1)] = f64::INFINITY;
        assert!(matches!(norm(&m, NormKind::L1), Err(LinalgError::NonFinite)));
    }

    #[test]
    fn names_parse_back() {
        for kind in NormKind::ALL {
            assert_eq!(kind.name().parse::<NormKind>().unwrap(), kind);
        }
        assert!("l2".parse::<NormKind>().is_err());
    }
}
