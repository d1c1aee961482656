use crate::error::{Error, Result};
use crate::panel::ReturnPanel;

/// Log-returns of each price row, normalized to zero mean and unit sample
/// variance. Needs at least 3 bars; a constant price row is an error.
pub fn normalize_returns(prices: &[Vec<f64>]) -> Result<ReturnPanel> {
    let d = prices.first().map(Vec::len).unwrap_or(0);
    if prices.is_empty() {
        return Err(Error::invalid("no assets"));
    }
    if d < 3 {
        return Err(Error::invalid(format!("need at least 3 bars, got {d}")));
    }
    let mut rows = Vec::with_capacity(prices.len());
    for (i, row) in prices.iter().enumerate() {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        if let Some(p) = row.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::invalid(format!("asset {i} has non-positive price {p}")));
        }
        rows.push(row.windows(2).map(|w| (w[1] / w[0]).ln()).collect::<Vec<f64>>());
    }
    ReturnPanel::normalized(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_price_is_rejected() {
        let err = normalize_returns(&[vec![1.0, 2.0, 3.0, 2.0], vec![7.0; 4]]).unwrap_err();
        assert!(err.to_string().contains("asset 1"), "{err}");
    }

    #[test]
    fn too_few_bars() {
        assert!(normalize_returns(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn symmetric_pair_of_returns() {
        // log-returns [r, -r]: mean 0, sample sd r*sqrt(2), so [1/sqrt2, -1/sqrt2]
        let p = normalize_returns(&[vec![100.0, 110.0, 100.0]]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.row(0)[0] - h).abs() < 1e-12);
        assert!((p.row(0)[1] + h).abs() < 1e-12);
    }

    #[test]
    fn valid_rows_are_normalized() {
        let prices = vec![vec![10.0, 10.5, 10.2, 10.9, 11.4, 11.0], vec![3.0, 2.9, 3.3, 3.1, 3.0, 3.2]];
        let p = normalize_returns(&prices).unwrap();
        for row in p.rows() {
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (row.len() - 1) as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|x| x.is_finite()));
        }
    }
}
