//! Random-matrix cleaning of sample correlation matrices.
//!
//! Eigenvalues of a pure-noise correlation matrix estimated from `D`
//! observations of `N` assets fall in the Marchenko-Pastur band
//! `[(1 - sqrt q)^2, (1 + sqrt q)^2]` with `q = N / D`. Eigenvalues inside the
//! band carry no structure; they are replaced by their mean, which keeps the
//! trace, and the matrix is rebuilt and rescaled to a unit diagonal.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

/// Lower and upper Marchenko-Pastur edges for unit variance.
pub fn marchenko_pastur_bounds(q: f64) -> (f64, f64) {
    let s = q.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningReport {
    pub band: (f64, f64),
    /// Eigenvalues before cleaning, ascending.
    pub eigenvalues: Vec<f64>,
    /// How many of them fell inside the band and were replaced.
    pub replaced: usize,
}

pub fn rmt_clean(c: &CorrelationMatrix, q: f64) -> Result<CorrelationMatrix> {
    rmt_clean_with_report(c, q).map(|(m, _)| m)
}

pub fn rmt_clean_with_report(c: &CorrelationMatrix, q: f64) -> Result<(CorrelationMatrix, CleaningReport)> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::invalid(format!("ratio q = {q} must be positive")));
    }
    let n = c.n();
    let band = marchenko_pastur_bounds(q);
    let m = DMatrix::from_row_slice(n, n, c.as_slice());
    let eig = SymmetricEigen::try_new(m, 1e-14, 10_000).ok_or_else(|| diagnostics(c, "did not converge"))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(diagnostics(c, "produced non-finite eigenvalues"));
    }

    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let inside: Vec<usize> = (0..n)
        .filter(|&k| eigenvalues[k] >= band.0 && eigenvalues[k] <= band.1)
        .collect();
    let mut sorted = eigenvalues.clone();
    sorted.sort_by(f64::total_cmp);
    let report = CleaningReport {
        band,
        eigenvalues: sorted,
        replaced: inside.len(),
    };
    // Averaging a single eigenvalue changes nothing.
    if inside.len() < 2 {
        return Ok((c.clone(), report));
    }

    let avg = inside.iter().map(|&k| eigenvalues[k]).sum::<f64>() / inside.len() as f64;
    for &k in &inside {
        eigenvalues[k] = avg;
    }
    let v = &eig.eigenvectors;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in 0..n {
                s += v[(i, k)] * eigenvalues[k] * v[(j, k)];
            }
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| values[i * n + i]).collect();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(diagnostics(c, &format!("rebuilt a non-positive diagonal at {i}")));
    }
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] /= (diag[i] * diag[j]).sqrt();
        }
    }
    Ok((CorrelationMatrix::from_raw_symmetrized(n, values)?, report))
}

fn diagnostics(c: &CorrelationMatrix, what: &str) -> Error {
    let frob = c.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    let max_off = (0..c.n())
        .flat_map(|i| (0..c.n()).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| c.get(i, j).abs())
        .fold(0.0, f64::max);
    Error::Numerical(format!(
        "eigendecomposition {what} (n = {}, Frobenius norm {frob:.6e}, max |off-diagonal| {max_off:.6e})",
        c.n()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::log_likelihood;
    use crate::synth::{generate_noh, PlantedSpec};

    #[test]
    fn identity_is_a_fixed_point() {
        let out = rmt_clean(&CorrelationMatrix::identity(6), 0.1).unwrap();
        assert_eq!(out, CorrelationMatrix::identity(6));
    }

    #[test]
    fn bounds() {
        let (lo, hi) = marchenko_pastur_bounds(0.25);
        assert!((lo - 0.25).abs() < 1e-15);
        assert!((hi - 2.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(rmt_clean(&CorrelationMatrix::identity(2), 0.0).is_err());
        assert!(rmt_clean(&CorrelationMatrix::identity(2), f64::NAN).is_err());
    }

    fn planted(seed: u64) -> (CorrelationMatrix, crate::partition::Partition) {
        let spec = PlantedSpec::uniform(2, 5, 0.8f64.sqrt(), 100, seed);
        let (panel, truth) = generate_noh(&spec).unwrap();
        (panel.correlation(), truth)
    }

    #[test]
    fn cleaning_keeps_structure_and_trace() {
        let (c, truth) = planted(12);
        let (out, report) = rmt_clean_with_report(&c, 0.1).unwrap();
        assert!((out.trace() - 10.0).abs() < 1e-9);
        for i in 0..10 {
            for j in 0..10 {
                assert!(out.get(i, j).abs() <= 1.0 + 1e-9);
                assert_eq!(out.get(i, j), out.get(j, i));
            }
        }
        // the two block eigenvalues sit far above the band
        let top = &report.eigenvalues[8..];
        assert!(top.iter().all(|&v| v > report.band.1));
        let before = log_likelihood(&truth, &c).unwrap();
        let after = log_likelihood(&truth, &out).unwrap();
        assert!(after.is_finite() && before.is_finite());
    }

    #[test]
    fn second_pass_is_nearly_idempotent_for_clear_blocks() {
        for seed in 0..20 {
            let spec = PlantedSpec::uniform(2, 5, 0.8f64.sqrt(), 100, seed);
            let (panel, _) = generate_noh(&spec).unwrap();
            let once = rmt_clean(&panel.correlation(), 0.1).unwrap();
            let twice = rmt_clean(&once, 0.1).unwrap();
            assert!(once.max_abs_diff(&twice) < 1e-6, "seed {seed}: {}", once.max_abs_diff(&twice));
        }
    }

    #[test]
    fn rescaling_can_respread_weak_blocks() {
        // Block eigenvalues inside the band get merged with the noise, and the
        // unit-diagonal rescale then moves the merged spectrum apart again.
        let spec = PlantedSpec::uniform(3, 4, 0.5f64.sqrt(), 60, 0);
        let (panel, _) = generate_noh(&spec).unwrap();
        let once = rmt_clean(&panel.correlation(), 0.2).unwrap();
        let twice = rmt_clean(&once, 0.2).unwrap();
        assert!(once.max_abs_diff(&twice) > 1e-3);
        assert!((twice.trace() - 12.0).abs() < 1e-9);
    }
}
