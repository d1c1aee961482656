//! Online exponentially weighted mean and covariance.

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.98;

#[derive(Debug, Clone, PartialEq)]
pub struct EwmaState {
    lambda: f64,
    mean: Vec<f64>,
    /// Row-major `n x n`.
    cov: Vec<f64>,
    count: usize,
}

impl EwmaState {
    /// Zero mean and covariance; `lambda` must lie in `(0, 1)`.
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::invalid(format!(
                "forgetting factor {lambda} is outside (0, 1)"
            )));
        }
        Ok(Self {
            lambda,
            mean: vec![0.0; n],
            cov: vec![0.0; n * n],
            count: 0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &[f64] {
        &self.cov
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Effective number of observations in the exponential window, `1 / (1 - lambda)`.
    pub fn effective_window(&self) -> f64 {
        1.0 / (1.0 - self.lambda)
    }

    /// Absorbs one cross-sectional observation:
    /// `cov <- l cov + (1-l) (x - mean)(x - mean)^T`, then `mean <- l mean + (1-l) x`.
    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("observation for asset {i} is not finite")));
        }
        let l = self.lambda;
        let w = 1.0 - l;
        let dev: Vec<f64> = x.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for i in 0..n {
            for j in i..n {
                let v = l * self.cov[i * n + j] + w * dev[i] * dev[j];
                self.cov[i * n + j] = v;
                self.cov[j * n + i] = v;
            }
        }
        for (m, xi) in self.mean.iter_mut().zip(x) {
            *m = l * *m + w * xi;
        }
        self.count += 1;
        Ok(())
    }

    pub fn correlation(&self) -> Result<CorrelationMatrix> {
        correlation_from_covariance(self.n(), &self.cov)
    }
}

/// `C_ij = cov_ij / sqrt(cov_ii cov_jj)` with an exact unit diagonal.
/// A non-positive variance is an error naming its index.
pub fn correlation_from_covariance(n: usize, cov: &[f64]) -> Result<CorrelationMatrix> {
    if cov.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            actual: cov.len(),
        });
    }
    let sd: Vec<f64> = (0..n)
        .map(|i| {
            let v = cov[i * n + i];
            if v > 0.0 && v.is_finite() {
                Ok(v.sqrt())
            } else {
                Err(Error::invalid(format!("variance of asset {i} is {v}, must be positive")))
            }
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = cov[i * n + j] / (sd[i] * sd[j]);
        }
    }
    CorrelationMatrix::from_raw_symmetrized(n, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn zero_stream_keeps_zero_covariance() {
        let mut s = EwmaState::new(3, DEFAULT_LAMBDA).unwrap();
        for _ in 0..10 {
            s.update(&[0.0; 3]).unwrap();
        }
        assert!(s.covariance().iter().all(|&v| v == 0.0));
        assert_eq!(s.count(), 10);
    }

    #[test]
    fn first_update_is_scaled_outer_product() {
        let mut s = EwmaState::new(2, 0.98).unwrap();
        let x = [2.0, -1.0];
        s.update(&x).unwrap();
        let w = 1.0 - 0.98;
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.covariance()[i * 2 + j] - w * x[i] * x[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn diagonal_converges_to_unit_variance() {
        // A single lambda=0.98 window has sd ~0.14 around the true variance,
        // so the check averages the diagonal over the second half of the stream.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = EwmaState::new(4, DEFAULT_LAMBDA).unwrap();
        let (mut sum, mut count) = (0.0, 0);
        for k in 0..2000 {
            let x: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
            s.update(&x).unwrap();
            if k >= 1000 {
                sum += (0..4).map(|i| s.covariance()[i * 4 + i]).sum::<f64>() / 4.0;
                count += 1;
            }
        }
        let avg = sum / count as f64;
        assert!((avg - 1.0).abs() < 0.1, "mean diagonal {avg}");
        for i in 0..4 {
            assert!((s.covariance()[i * 4 + i] - 1.0).abs() < 0.6);
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let stream: Vec<[f64; 2]> = (0..50).map(|k| [(k as f64).sin(), (k as f64 * 0.7).cos()]).collect();
        let run = || {
            let mut s = EwmaState::new(2, 0.9).unwrap();
            for x in &stream {
                s.update(x).unwrap();
            }
            s
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(EwmaState::new(2, 1.0).is_err());
        let mut s = EwmaState::new(2, 0.5).unwrap();
        assert!(s.update(&[1.0, f64::NAN]).is_err());
        assert!(s.update(&[1.0]).is_err());
    }

    #[test]
    fn correlation_examples() {
        let id = correlation_from_covariance(2, &[3.0, 0.0, 0.0, 5.0]).unwrap();
        assert_eq!(id, CorrelationMatrix::identity(2));
        let c = correlation_from_covariance(2, &[4.0, 2.0, 2.0, 9.0]).unwrap();
        assert!((c.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        let err = correlation_from_covariance(2, &[4.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("asset 1"));
    }
}
