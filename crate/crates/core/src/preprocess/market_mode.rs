//! Removal of the common market mode by iterated regression on the
//! cross-sectional mean return.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{normalize_row, ReturnPanel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketModeOptions {
    /// Stop once the mean off-diagonal correlation drops below this.
    pub threshold: f64,
    pub max_iterations: usize,
}

impl Default for MarketModeOptions {
    fn default() -> Self {
        Self {
            threshold: 0.01,
            max_iterations: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketModeOutcome {
    pub panel: ReturnPanel,
    pub iterations: usize,
    /// Mean off-diagonal correlation of the returned panel.
    pub mean_correlation: f64,
    /// Set when some asset was fully explained by the market mode. Such rows
    /// are returned as zeros and correlate with nothing.
    pub degenerate: bool,
}

/// Relative residual norm under which a row counts as pure market mode.
const DEGENERATE_RESIDUAL: f64 = 1e-8;

pub fn remove_market_mode(panel: &ReturnPanel) -> Result<MarketModeOutcome> {
    remove_market_mode_with(panel, MarketModeOptions::default())
}

/// Repeatedly regresses every asset on the cross-sectional mean return,
/// subtracts the fitted component and renormalizes, until the mean
/// off-diagonal correlation is below `threshold` or `max_iterations` passes
/// have run. A panel that already meets the threshold is returned unchanged.
pub fn remove_market_mode_with(panel: &ReturnPanel, opts: MarketModeOptions) -> Result<MarketModeOutcome> {
    let n = panel.n();
    if n < 2 {
        return Err(Error::invalid(format!(
            "market-mode removal needs at least 2 assets, got {n}"
        )));
    }
    let d = panel.d();
    let mut out = panel.clone();
    let mut degenerate = false;
    let mut iterations = 0;
    let mut mean_correlation = out.correlation().mean_off_diagonal();

    while mean_correlation >= opts.threshold && iterations < opts.max_iterations {
        let market: Vec<f64> = (0..d)
            .map(|t| (0..n).map(|i| out.row(i)[t]).sum::<f64>() / n as f64)
            .collect();
        let mm: f64 = market.iter().map(|m| m * m).sum();
        if !(mm > 0.0) {
            break;
        }
        for i in 0..n {
            let row = out.row_mut(i);
            let before: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if before == 0.0 {
                continue;
            }
            let beta = row.iter().zip(&market).map(|(x, m)| x * m).sum::<f64>() / mm;
            row.iter_mut().zip(&market).for_each(|(x, m)| *x -= beta * m);
            let after: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if after <= DEGENERATE_RESIDUAL * before || !normalize_row(row) {
                row.iter_mut().for_each(|x| *x = 0.0);
                degenerate = true;
            }
        }
        iterations += 1;
        mean_correlation = out.correlation().mean_off_diagonal();
    }

    Ok(MarketModeOutcome {
        panel: out,
        iterations,
        mean_correlation,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn factor_panel(n: usize, d: usize, loading: f64, seed: u64) -> ReturnPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let market: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let idio = (1.0 - loading * loading).sqrt();
        let rows = (0..n)
            .map(|_| {
                market
                    .iter()
                    .map(|m| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        loading * m + idio * e
                    })
                    .collect()
            })
            .collect();
        ReturnPanel::normalized(rows).unwrap()
    }

    #[test]
    fn identical_assets_are_degenerate() {
        let row = vec![0.3, -1.2, 0.8, 0.1, -0.4, 0.9];
        let panel = ReturnPanel::normalized(vec![row.clone(); 3]).unwrap();
        let out = remove_market_mode(&panel).unwrap();
        assert!(out.degenerate);
        let c = out.panel.correlation();
        assert!(c.mean_off_diagonal().abs() < 1e-9);
    }

    #[test]
    fn independent_assets_are_left_alone() {
        let panel = factor_panel(5, 5000, 0.0, 17);
        let before = panel.correlation();
        let out = remove_market_mode(&panel).unwrap();
        let after = out.panel.correlation();
        let mut total = 0.0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                total += (after.get(i, j) - before.get(i, j)).abs();
            }
        }
        assert!(total / 10.0 < 0.05);
    }

    #[test]
    fn one_factor_mode_is_removed() {
        let panel = factor_panel(30, 2000, 0.6, 4);
        assert!(panel.correlation().mean_off_diagonal() > 0.3);
        let out = remove_market_mode(&panel).unwrap();
        assert!(out.iterations >= 1);
        assert!(out.mean_correlation < 0.01, "{}", out.mean_correlation);
        assert!(!out.degenerate);
        for row in out.panel.rows() {
            let var = row.iter().map(|x| x * x).sum::<f64>() / (row.len() - 1) as f64;
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn needs_two_assets() {
        let panel = ReturnPanel::normalized(vec![vec![1.0, 2.0, 0.0]]).unwrap();
        assert!(remove_market_mode(&panel).is_err());
    }
}
