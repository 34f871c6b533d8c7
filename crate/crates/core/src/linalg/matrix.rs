use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LinalgError;

/// Maximum asymmetry tolerated when a matrix carries the symmetric hint.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense real matrix stored in row-major order.
///
/// `symmetric_hint` lets kernels take the symmetric eigen path without
/// re-checking. It is only ever set after the symmetry check has passed
/// and is cleared by any operation that can break symmetry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<f64>,
    #[serde(default)]
    symmetric_hint: bool,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            entries: vec![0.0; n_rows * n_cols],
            symmetric_hint: n_rows == n_cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m.symmetric_hint = true;
        m
    }

    pub fn filled(n_rows: usize, n_cols: usize, value: f64) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            entries: vec![value; n_rows * n_cols],
            symmetric_hint: n_rows == n_cols,
        }
    }

    pub fn from_row_major(
        n_rows: usize,
        n_cols: usize,
        entries: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        if entries.len() != n_rows * n_cols {
            return Err(LinalgError::EntryCount {
                expected: n_rows * n_cols,
                got: entries.len(),
            });
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            entries,
            symmetric_hint: false,
        })
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                entries.push(f(i, j));
            }
        }
        DenseMatrix {
            n_rows,
            n_cols,
            entries,
            symmetric_hint: false,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m.symmetric_hint = true;
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.symmetric_hint = false;
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn symmetric_hint(&self) -> bool {
        self.symmetric_hint
    }

    /// Sets the symmetric hint after checking `max |M_ij - M_ji| <= 1e-12`.
    pub fn with_symmetric_hint(mut self) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            });
        }
        let asym = self.max_asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(LinalgError::NotSymmetric { asymmetry: asym });
        }
        self.symmetric_hint = true;
        Ok(self)
    }

    /// Largest `|M_ij - M_ji|`; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.n_rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetric_hint || self.max_asymmetry() <= tol
    }

    /// Replaces the matrix by `(M + Mᵀ)/2` and sets the symmetric hint.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square(), "symmetrize needs a square matrix");
        let n = self.n_rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
        self.symmetric_hint = true;
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    pub(crate) fn ensure_finite(&self) -> Result<(), LinalgError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(LinalgError::NonFinite)
        }
    }

    pub(crate) fn ensure_square(&self) -> Result<(), LinalgError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            })
        }
    }

    pub(crate) fn ensure_same_shape(&self, other: &DenseMatrix) -> Result<(), LinalgError> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(LinalgError::DimensionMismatch {
                left: self.shape(),
                right: other.shape(),
            })
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t.entries[j * self.n_rows + i] = self.entries[i * self.n_cols + j];
            }
        }
        t.symmetric_hint = self.symmetric_hint;
        t
    }

    /// Applies `f` entrywise. The symmetric hint survives because `f` acts
    /// identically on mirrored entries.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries: self.entries.iter().map(|&x| f(x)).collect(),
            symmetric_hint: self.symmetric_hint,
        }
    }

    /// Entrywise combination of two same-shape matrices.
    pub fn zip_map(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape(), "zip_map shape mismatch");
        DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            symmetric_hint: self.symmetric_hint && other.symmetric_hint,
        }
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        self.map(|x| alpha * x)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += alpha * b;
        }
        self.symmetric_hint &= other.symmetric_hint;
    }

    /// Trace inner product `⟨A, B⟩ = Σ A_ij B_ij`.
    pub fn dot(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "dot shape mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn count_nonzeros(&self) -> usize {
        self.entries.iter().filter(|&&x| x != 0.0).count()
    }

    /// Dense product `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_cols, rhs.n_rows, "matmul inner dimension mismatch");
        let (m, k, n) = (self.n_rows, self.n_cols, rhs.n_cols);
        let mut out = DenseMatrix::zeros(m, n);
        out.symmetric_hint = false;
        for i in 0..m {
            let out_row = &mut out.entries[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.entries[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.entries[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn transpose_matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_rows, rhs.n_rows, "transpose_matmul dimension mismatch");
        let (k, m, n) = (self.n_rows, self.n_cols, rhs.n_cols);
        let mut out = DenseMatrix::zeros(m, n);
        out.symmetric_hint = false;
        for p in 0..k {
            let lhs_row = &self.entries[p * m..(p + 1) * m];
            let rhs_row = &rhs.entries[p * n..(p + 1) * n];
            for (i, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.entries[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · rhsᵀ` without materializing the transpose.
    pub fn matmul_transpose(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_cols, rhs.n_cols, "matmul_transpose dimension mismatch");
        let (m, n, k) = (self.n_rows, rhs.n_rows, self.n_cols);
        DenseMatrix::from_fn(m, n, |i, j| {
            let a = &self.entries[i * k..(i + 1) * k];
            let b = &rhs.entries[j * k..(j + 1) * k];
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self[(i, j)]).collect()
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_rows, self.n_cols, &self.entries)
    }
}

// Equality is on shape and entries; the hint is a cache, not identity.
impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.entries == other.entries
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        &self.entries[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.symmetric_hint = false;
        &mut self.entries[i * self.n_cols + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;

    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;

    fn neg(self) -> DenseMatrix {
        self.map(|x| -x)
    }
}

impl Mul<f64> for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: f64) -> DenseMatrix {
        self.scale(rhs)
    }
}

impl AddAssign<&DenseMatrix> for DenseMatrix {
    fn add_assign(&mut self, rhs: &DenseMatrix) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&DenseMatrix> for DenseMatrix {
    fn sub_assign(&mut self, rhs: &DenseMatrix) {
        self.axpy(-1.0, rhs);
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_rows {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{x:.6}")).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_count_checked() {
        assert!(DenseMatrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
        let m = DenseMatrix::from_row_major(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(m.transpose()[(0, 1)], 4.0);
    }

    #[test]
    fn symmetric_hint_requires_symmetry() {
        let m = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0 + 1e-9, 1.0]).unwrap();
        assert!(matches!(
            m.clone().with_symmetric_hint(),
            Err(LinalgError::NotSymmetric { .. })
        ));
        let s = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0])
            .unwrap()
            .with_symmetric_hint()
            .unwrap();
        assert!(s.symmetric_hint());
        let mut s2 = s.clone();
        s2[(0, 1)] = 5.0;
        assert!(!s2.symmetric_hint());
    }

    #[test]
    fn products_agree() {
        let a = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        let b = DenseMatrix::from_fn(3, 4, |i, j| (i as f64).sin() + j as f64);
        let direct = a.transpose().matmul(&b);
        let fused = a.transpose_matmul(&b);
        assert!((&direct - &fused).max_abs() < 1e-14);
        let c = DenseMatrix::from_fn(4, 2, |i, j| (i + 3 * j) as f64);
        let direct = a.matmul(&c.transpose());
        let fused = a.matmul_transpose(&c);
        assert!((&direct - &fused).max_abs() < 1e-14);
    }

    #[test]
    fn nalgebra_round_trip() {
        let a = DenseMatrix::from_fn(3, 5, |i, j| (i * 7 + j) as f64);
        let b = a.to_nalgebra();
        assert_eq!(b.shape(), (3, 5));
        assert_eq!(b[(2, 4)], a[(2, 4)]);
    }
}
