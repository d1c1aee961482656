//! Dense symmetric correlation matrices.

use crate::error::{Error, Result};

/// Entries may exceed `[-1, 1]` by at most this much after numerical cleaning.
pub const RANGE_TOLERANCE: f64 = 1e-9;

/// An `n x n` symmetric correlation matrix with unit diagonal, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    /// Validates and wraps a row-major buffer.
    ///
    /// Symmetry is checked exactly, the diagonal must be exactly 1 and every
    /// entry must be finite and inside `[-1, 1]` up to [`RANGE_TOLERANCE`].
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("correlation matrix must have at least one asset"));
        }
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        for i in 0..n {
            if values[i * n + i] != 1.0 {
                return Err(Error::invalid(format!(
                    "diagonal entry {i} is {} instead of 1",
                    values[i * n + i]
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v.abs() > 1.0 + RANGE_TOLERANCE {
                    return Err(Error::invalid(format!(
                        "entry ({i}, {j}) = {v} is outside [-1, 1]"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    /// Builds a matrix from rows; see [`CorrelationMatrix::new`].
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(n, values)
    }

    pub fn identity(n: usize) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        Self { n, values }
    }

    /// Symmetrizes an almost-correlation matrix: averages `(i,j)` and `(j,i)`,
    /// forces the diagonal to 1 and clamps off-diagonal entries into `[-1, 1]`.
    pub(crate) fn from_raw_symmetrized(n: usize, mut values: Vec<f64>) -> Result<Self> {
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let v = 0.5 * (values[i * n + j] + values[j * n + i]);
                if !v.is_finite() {
                    return Err(Error::Numerical(format!("non-finite correlation at ({i}, {j})")));
                }
                let v = v.clamp(-1.0, 1.0);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(Self { n, values })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Mean of the strictly off-diagonal entries (0 for a 1x1 matrix).
    pub fn mean_off_diagonal(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                sum += self.get(i, j);
            }
        }
        sum / (self.n * (self.n - 1) / 2) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetry_and_bad_diagonal() {
        assert!(CorrelationMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![0.9, 0.5, 0.5, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![1.0, 1.5, 1.5, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![1.0, f64::NAN, f64::NAN, 1.0]).is_err());
        assert!(matches!(
            CorrelationMatrix::new(3, vec![1.0; 4]),
            Err(Error::DimensionMismatch { expected: 9, actual: 4 })
        ));
    }

    #[test]
    fn symmetrized_clamps() {
        let c = CorrelationMatrix::from_raw_symmetrized(2, vec![0.7, 1.2, 1.0, 3.0]).unwrap();
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 0), 1.0);
    }

    #[test]
    fn mean_off_diagonal_of_identity_is_zero() {
        assert_eq!(CorrelationMatrix::identity(5).mean_off_diagonal(), 0.0);
        assert_eq!(CorrelationMatrix::identity(5).trace(), 5.0);
    }
}
