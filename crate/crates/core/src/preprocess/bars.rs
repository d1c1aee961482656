//! Tick aggregation into fixed-width bars and gap filling.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub timestamp_ms: i64,
    pub price: f64,
}

/// Per-asset midprice ticks with non-decreasing timestamps and positive prices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickSeries {
    assets: Vec<String>,
    ticks: Vec<Vec<Tick>>,
}

impl TickSeries {
    pub fn new(assets: Vec<String>, ticks: Vec<Vec<Tick>>) -> Result<Self> {
        if assets.len() != ticks.len() {
            return Err(Error::DimensionMismatch {
                expected: assets.len(),
                actual: ticks.len(),
            });
        }
        for (name, series) in assets.iter().zip(&ticks) {
            if let Some(w) = series.windows(2).find(|w| w[1].timestamp_ms < w[0].timestamp_ms) {
                return Err(Error::invalid(format!(
                    "asset {name}: timestamp {} follows {}",
                    w[1].timestamp_ms, w[0].timestamp_ms
                )));
            }
            if let Some(t) = series.iter().find(|t| !(t.price > 0.0) || !t.price.is_finite()) {
                return Err(Error::invalid(format!(
                    "asset {name}: non-positive price {} at {}",
                    t.price, t.timestamp_ms
                )));
            }
        }
        Ok(Self { assets, ticks })
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn ticks(&self, asset: usize) -> &[Tick] {
        &self.ticks[asset]
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.iter().all(Vec::is_empty)
    }
}

/// Bar prices per asset; `None` marks a bar without an observation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceMatrix {
    pub assets: Vec<String>,
    /// Closing timestamp of each bar (a multiple of the bar width).
    pub bar_ends: Vec<i64>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl PriceMatrix {
    pub fn n_bars(&self) -> usize {
        self.bar_ends.len()
    }
}

/// Samples the last tick of every bar.
///
/// Bars close at multiples of `bar_ms`; a bar closing at `t` holds ticks with
/// timestamps in `(t - bar_ms, t]`. Bars in which no asset traded (outside
/// trading sessions) are dropped, other bars without a tick for an asset are
/// left missing for [`zero_order_hold`] to fill.
pub fn aggregate_bars(ticks: &TickSeries, bar_ms: i64) -> Result<PriceMatrix> {
    if bar_ms <= 0 {
        return Err(Error::invalid(format!("bar width must be positive, got {bar_ms}")));
    }
    if ticks.is_empty() {
        return Ok(PriceMatrix {
            assets: ticks.assets.clone(),
            bar_ends: Vec::new(),
            values: vec![Vec::new(); ticks.assets.len()],
        });
    }
    let bar_end = |t: i64| (t + bar_ms - 1).div_euclid(bar_ms) * bar_ms;

    let mut ends: Vec<i64> = ticks
        .ticks
        .iter()
        .flat_map(|s| s.iter().map(|t| bar_end(t.timestamp_ms)))
        .collect();
    ends.sort_unstable();
    ends.dedup();

    let values = ticks
        .ticks
        .iter()
        .map(|series| {
            let mut row = vec![None; ends.len()];
            let mut k = 0;
            for t in series {
                let end = bar_end(t.timestamp_ms);
                while ends[k] < end {
                    k += 1;
                }
                row[k] = Some(t.price);
            }
            row
        })
        .collect();

    Ok(PriceMatrix {
        assets: ticks.assets.clone(),
        bar_ends: ends,
        values,
    })
}

/// Fills gaps with the most recent observation; leading gaps take the first
/// observation. An asset with no observation at all is an error naming it.
pub fn zero_order_hold(rows: &[Vec<Option<f64>>]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let first = row
                .iter()
                .flatten()
                .next()
                .copied()
                .ok_or_else(|| Error::invalid(format!("asset {i} has no observed price")))?;
            let mut last = first;
            Ok(row
                .iter()
                .map(|v| {
                    if let Some(p) = v {
                        last = *p;
                    }
                    last
                })
                .collect())
        })
        .collect()
}

/// [`zero_order_hold`] reporting asset names in errors.
pub fn hold_prices(prices: &PriceMatrix) -> Result<Vec<Vec<f64>>> {
    zero_order_hold(&prices.values).map_err(|e| match e {
        Error::InvalidInput(_) => {
            let idx = prices.values.iter().position(|r| r.iter().all(Option::is_none));
            let name = idx.map(|i| prices.assets[i].as_str()).unwrap_or("?");
            Error::invalid(format!("asset {name} has no observed price"))
        }
        other => other,
    })
}
