//! Asset-by-observation return panels.

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

/// `n` assets by `d` observations, row-major.
///
/// Panels built through [`ReturnPanel::normalized`] have rows with zero mean
/// and unit sample variance (denominator `d - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

/// Demeans a row and divides by its sample standard deviation.
///
/// Returns `false` (leaving the row demeaned) when the row has zero variance.
pub(crate) fn normalize_row(row: &mut [f64]) -> bool {
    let d = row.len();
    if d < 2 {
        return false;
    }
    let mean = row.iter().sum::<f64>() / d as f64;
    row.iter_mut().for_each(|x| *x -= mean);
    // second pass removes the rounding residue of the first
    let residue = row.iter().sum::<f64>() / d as f64;
    row.iter_mut().for_each(|x| *x -= residue);
    let var = row.iter().map(|x| x * x).sum::<f64>() / (d - 1) as f64;
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() || sd <= 1e-300 {
        return false;
    }
    row.iter_mut().for_each(|x| *x /= sd);
    true
}

impl ReturnPanel {
    /// Wraps raw values without normalizing.
    pub fn from_raw(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value for asset {} at observation {}",
                i / d.max(1),
                i % d.max(1)
            )));
        }
        Ok(Self { n, d, values })
    }

    /// Normalizes every row to zero mean and unit sample variance.
    ///
    /// A constant row is an error naming the asset index.
    pub fn normalized(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if d < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 observations per asset, got {d}"
            )));
        }
        let mut values = Vec::with_capacity(n * d);
        for (i, mut row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("asset {i} has non-finite returns")));
            }
            if !normalize_row(&mut row) {
                return Err(Error::invalid(format!("asset {i} has zero return variance")));
            }
            values.extend(row);
        }
        Ok(Self { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.values[i * self.d + t]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.d.max(1))
    }

    /// Pearson correlation `x_i . x_j / (|x_i| |x_j|)` of the (already
    /// centered) rows. Rows with zero norm are treated as uncorrelated.
    pub fn correlation(&self) -> CorrelationMatrix {
        let n = self.n;
        let norms: Vec<f64> = self
            .rows()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let denom = norms[i] * norms[j];
                let v = if denom > 0.0 {
                    let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                    (dot / denom).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        CorrelationMatrix::new(n, values).expect("constructed symmetric with unit diagonal")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_rows_have_zero_mean_unit_variance() {
        let p = ReturnPanel::normalized(vec![vec![1.0, 2.0, 4.0, 8.0], vec![0.3, -0.1, 0.2, 0.0]]).unwrap();
        for row in p.rows() {
            let mean = row.iter().sum::<f64>() / 4.0;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_row_is_rejected() {
        let err = ReturnPanel::normalized(vec![vec![1.0, 2.0, 3.0], vec![5.0; 3]]).unwrap_err();
        assert!(err.to_string().contains("asset 1"));
    }

    #[test]
    fn correlation_of_scaled_copies_is_one() {
        let p = ReturnPanel::normalized(vec![vec![1.0, -2.0, 0.5, 3.0], vec![2.0, -4.0, 1.0, 6.0]]).unwrap();
        let c = p.correlation();
        assert!((c.get(0, 1) - 1.0).abs() < 1e-12);
    }
}
