use serde::{Deserialize, Serialize};

use super::bars::{hold_prices, PriceMatrix};
use super::ewma::{EwmaState, DEFAULT_LAMBDA};
use super::market_mode::{remove_market_mode_with, MarketModeOptions};
use super::returns::normalize_returns;
use super::rmt::rmt_clean;
use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lambda: f64,
    pub remove_market_mode: bool,
    pub market_mode: MarketModeOptions,
    pub rmt: bool,
    /// Sample size used for the Marchenko-Pastur ratio `q = N / D`.
    /// Defaults to the effective EWMA window `1 / (1 - lambda)`.
    pub effective_observations: Option<f64>,
    /// Observations absorbed before the first matrix is emitted.
    /// Defaults to the effective EWMA window, rounded up.
    pub warmup: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            remove_market_mode: true,
            market_mode: MarketModeOptions::default(),
            rmt: true,
            effective_observations: None,
            warmup: None,
        }
    }
}

impl PipelineConfig {
    pub fn effective_observations(&self) -> f64 {
        self.effective_observations
            .unwrap_or_else(|| 1.0 / (1.0 - self.lambda))
    }

    pub fn warmup(&self) -> usize {
        self.warmup
            .unwrap_or_else(|| (1.0 / (1.0 - self.lambda)).ceil() as usize)
            .max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub assets: Vec<String>,
    pub bars: usize,
    pub returns: usize,
    /// One cleaned matrix per return observation after the warm-up, in time order.
    pub matrices: Vec<CorrelationMatrix>,
    /// Market-mode iterations run (0 when disabled).
    pub market_mode_iterations: usize,
    pub market_mode_degenerate: bool,
}

/// Runs hold, returns, market-mode removal, EWMA, correlation and cleaning.
///
/// The EWMA state rolls over the whole return series; after the warm-up a
/// correlation matrix is emitted for every further observation.
pub fn run_pipeline(prices: &PriceMatrix, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let held = hold_prices(prices)?;
    let mut panel = normalize_returns(&held).map_err(|e| name_asset(e, &prices.assets))?;
    let (mut iterations, mut degenerate) = (0, false);
    if cfg.remove_market_mode && panel.n() >= 2 {
        let out = remove_market_mode_with(&panel, cfg.market_mode)?;
        iterations = out.iterations;
        degenerate = out.degenerate;
        panel = out.panel;
    }

    let n = panel.n();
    let warmup = cfg.warmup();
    let q = n as f64 / cfg.effective_observations();
    let mut state = EwmaState::new(n, cfg.lambda)?;
    let mut matrices = Vec::new();
    for t in 0..panel.d() {
        state.update(&panel.column(t))?;
        if state.count() < warmup {
            continue;
        }
        let corr = state.correlation().map_err(|e| name_asset(e, &prices.assets))?;
        matrices.push(if cfg.rmt { rmt_clean(&corr, q)? } else { corr });
    }

    Ok(PipelineOutput {
        assets: prices.assets.clone(),
        bars: prices.n_bars(),
        returns: panel.d(),
        matrices,
        market_mode_iterations: iterations,
        market_mode_degenerate: degenerate,
    })
}

/// Rewrites "asset <index>" in an input error to the asset's name.
fn name_asset(e: Error, names: &[String]) -> Error {
    match e {
        Error::InvalidInput(msg) => {
            let renamed = names
                .iter()
                .enumerate()
                .rev()
                .fold(msg, |m, (i, name)| m.replace(&format!("asset {i} "), &format!("asset {name} ")));
            Error::InvalidInput(renamed)
        }
        other => other,
    }
}
