//! From raw prices to cleaned correlation matrices.
//!
//! The stages run in this order: bar aggregation, zero-order hold,
//! normalized log-returns, market-mode removal, EWMA covariance, correlation,
//! random-matrix cleaning. [`pipeline`] wires them together.

mod bars;
mod ewma;
mod market_mode;
pub mod pipeline;
mod returns;
mod rmt;

pub use bars::{aggregate_bars, hold_prices, zero_order_hold, PriceMatrix, Tick, TickSeries};
pub use ewma::{correlation_from_covariance, EwmaState, DEFAULT_LAMBDA};
pub use market_mode::{
    remove_market_mode, remove_market_mode_with, MarketModeOptions, MarketModeOutcome,
};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
pub use returns::normalize_returns;
pub use rmt::{marchenko_pastur_bounds, rmt_clean, rmt_clean_with_report, CleaningReport};
