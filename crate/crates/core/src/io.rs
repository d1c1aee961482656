//! CSV readers and writers.
//!
//! Every table has a header row. Floats are written with 17 significant
//! digits so that a read-back reproduces the same bits. Parse errors carry a
//! 1-based row (the header is row 1) and a 1-based column.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::ga::GenerationStats;
use crate::panel::ReturnPanel;
use crate::partition::Partition;
use crate::preprocess::{PriceMatrix, Tick, TickSeries};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column,
        message: message.into(),
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Reads all records, mapping csv errors to parse errors.
fn records<R: Read>(r: R) -> Result<Vec<csv::StringRecord>> {
    let mut out = Vec::new();
    for (i, rec) in reader(r).records().enumerate() {
        let rec = rec.map_err(|e| parse_err(i + 1, 1, e.to_string()))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(parse_err(1, 1, "missing header row"));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, row: usize, col: usize, what: &str) -> Result<T> {
    let raw = rec
        .get(col)
        .ok_or_else(|| parse_err(row, col + 1, format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| parse_err(row, col + 1, format!("cannot parse {what} from {raw:?}")))
}

fn float(rec: &csv::StringRecord, row: usize, col: usize) -> Result<f64> {
    let v: f64 = field(rec, row, col, "number")?;
    if !v.is_finite() {
        return Err(parse_err(row, col + 1, format!("non-finite value {v}")));
    }
    Ok(v)
}

fn expect_width(rec: &csv::StringRecord, row: usize, width: usize) -> Result<()> {
    if rec.len() != width {
        return Err(parse_err(
            row,
            rec.len().min(width) + 1,
            format!("expected {width} fields, found {}", rec.len()),
        ));
    }
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Numerical(format!("{other:?}")),
    }
}

/// Reads a square correlation table: `asset_id,<names...>` then one row per asset.
pub fn read_correlation<R: Read>(r: R) -> Result<(Vec<String>, CorrelationMatrix)> {
    let recs = records(r)?;
    let header = &recs[0];
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let n = names.len();
    if n == 0 {
        return Err(parse_err(1, 2, "no asset columns"));
    }
    if recs.len() - 1 != n {
        return Err(parse_err(recs.len().min(n + 1) + 1, 1, format!("expected {n} asset rows, found {}", recs.len() - 1)));
    }
    let mut values = Vec::with_capacity(n * n);
    for (i, rec) in recs[1..].iter().enumerate() {
        let row = i + 2;
        expect_width(rec, row, n + 1)?;
        if rec[0] != names[i] {
            return Err(parse_err(row, 1, format!("row asset {:?} does not match column {:?}", &rec[0], names[i])));
        }
        for j in 0..n {
            values.push(float(rec, row, j + 1)?);
        }
    }
    let c = CorrelationMatrix::new(n, values)?;
    Ok((names, c))
}

pub fn write_correlation<W: Write>(w: W, names: &[String], c: &CorrelationMatrix) -> Result<()> {
    check_names(names, c.n())?;
    let mut out = csv_writer(w);
    out.write_record(std::iter::once("asset_id").chain(names.iter().map(String::as_str)))
        .map_err(csv_io)?;
    for (i, name) in names.iter().enumerate() {
        let row: Vec<String> = std::iter::once(name.clone())
            .chain(c.row(i).iter().map(|&v| fmt_f64(v)))
            .collect();
        out.write_record(&row).map_err(csv_io)?;
    }
    flush(out)
}

fn check_names(names: &[String], n: usize) -> Result<()> {
    if names.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: names.len(),
        });
    }
    Ok(())
}

/// Default asset names `A1..An`.
pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("A{i}")).collect()
}

/// Reads an assets-by-observations table: `asset_id,t1,...,tD` header, one row per asset.
/// Rows are taken as given; use [`ReturnPanel::normalized`] on raw data.
pub fn read_panel<R: Read>(r: R) -> Result<(Vec<String>, ReturnPanel)> {
    let (names, rows) = read_rows(r)?;
    let d = rows[0].len();
    let values = rows.into_iter().flatten().collect();
    Ok((names.clone(), ReturnPanel::from_raw(names.len(), d, values)?))
}

fn read_rows<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let recs = records(r)?;
    let width = recs[0].len();
    if width < 2 {
        return Err(parse_err(1, 2, "no observation columns"));
    }
    if recs.len() < 2 {
        return Err(parse_err(2, 1, "no asset rows"));
    }
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in recs[1..].iter().enumerate() {
        let row = i + 2;
        expect_width(rec, row, width)?;
        names.push(rec[0].to_owned());
        rows.push((1..width).map(|j| float(rec, row, j)).collect::<Result<Vec<_>>>()?);
    }
    Ok((names, rows))
}

pub fn write_panel<W: Write>(w: W, names: &[String], panel: &ReturnPanel) -> Result<()> {
    check_names(names, panel.n())?;
    let mut out = csv_writer(w);
    let header: Vec<String> = std::iter::once("asset_id".to_owned())
        .chain((1..=panel.d()).map(|t| format!("t{t}")))
        .collect();
    out.write_record(&header).map_err(csv_io)?;
    for (name, row) in names.iter().zip(panel.rows()) {
        let rec: Vec<String> = std::iter::once(name.clone())
            .chain(row.iter().map(|&v| fmt_f64(v)))
            .collect();
        out.write_record(&rec).map_err(csv_io)?;
    }
    flush(out)
}

/// Reads `asset_id,cluster_label` rows. Labels are canonicalized.
pub fn read_labels<R: Read>(r: R) -> Result<(Vec<String>, Partition)> {
    let recs = records(r)?;
    let mut names = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in recs[1..].iter().enumerate() {
        let row = i + 2;
        expect_width(rec, row, 2)?;
        names.push(rec[0].to_owned());
        labels.push(field::<u32>(rec, row, 1, "label")?);
    }
    let n = labels.len();
    if let Some(pos) = labels.iter().position(|&l| l == 0 || l as usize > n) {
        return Err(parse_err(pos + 2, 2, format!("label {} outside 1..={n}", labels[pos])));
    }
    Ok((names, Partition::from_labels(labels)?))
}

pub fn write_labels<W: Write>(w: W, names: &[String], p: &Partition) -> Result<()> {
    check_names(names, p.len())?;
    let mut out = csv_writer(w);
    out.write_record(["asset_id", "cluster_label"]).map_err(csv_io)?;
    for (name, label) in names.iter().zip(p.labels()) {
        out.write_record([name.as_str(), &label.to_string()]).map_err(csv_io)?;
    }
    flush(out)
}

/// Reads `asset_id,timestamp_ms,midprice` rows.
///
/// Assets are ordered by first appearance. Ticks of one asset are sorted by
/// timestamp, keeping file order among equal timestamps.
pub fn read_ticks<R: Read>(r: R) -> Result<TickSeries> {
    let recs = records(r)?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut assets = Vec::new();
    let mut ticks: Vec<Vec<Tick>> = Vec::new();
    for (i, rec) in recs[1..].iter().enumerate() {
        let row = i + 2;
        expect_width(rec, row, 3)?;
        let timestamp_ms: i64 = field(rec, row, 1, "timestamp")?;
        let price = float(rec, row, 2)?;
        if price <= 0.0 {
            return Err(parse_err(row, 3, format!("price {price} must be positive")));
        }
        let k = *index.entry(rec[0].to_owned()).or_insert_with(|| {
            assets.push(rec[0].to_owned());
            ticks.push(Vec::new());
            assets.len() - 1
        });
        ticks[k].push(Tick { timestamp_ms, price });
    }
    for series in &mut ticks {
        series.sort_by_key(|t| t.timestamp_ms);
    }
    TickSeries::new(assets, ticks)
}

/// Reads an assets-by-bars price table. The header holds bar end timestamps;
/// an empty cell is a bar without a price.
pub fn read_bars<R: Read>(r: R) -> Result<PriceMatrix> {
    let recs = records(r)?;
    let header = &recs[0];
    let bar_ends = (1..header.len())
        .map(|j| field::<i64>(header, 1, j, "bar timestamp"))
        .collect::<Result<Vec<_>>>()?;
    if bar_ends.is_empty() {
        return Err(parse_err(1, 2, "no bar columns"));
    }
    let mut assets = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in recs[1..].iter().enumerate() {
        let row = i + 2;
        expect_width(rec, row, header.len())?;
        assets.push(rec[0].to_owned());
        let mut prices = Vec::with_capacity(bar_ends.len());
        for j in 1..header.len() {
            if rec[j].is_empty() {
                prices.push(None);
                continue;
            }
            let p = float(rec, row, j)?;
            if p <= 0.0 {
                return Err(parse_err(row, j + 1, format!("price {p} must be positive")));
            }
            prices.push(Some(p));
        }
        values.push(prices);
    }
    Ok(PriceMatrix {
        assets,
        bar_ends,
        values,
    })
}

pub fn write_bars<W: Write>(w: W, prices: &PriceMatrix) -> Result<()> {
    let mut out = csv_writer(w);
    let header: Vec<String> = std::iter::once("asset_id".to_owned())
        .chain(prices.bar_ends.iter().map(i64::to_string))
        .collect();
    out.write_record(&header).map_err(csv_io)?;
    for (name, row) in prices.assets.iter().zip(&prices.values) {
        let rec: Vec<String> = std::iter::once(name.clone())
            .chain(row.iter().map(|v| v.map(fmt_f64).unwrap_or_default()))
            .collect();
        out.write_record(&rec).map_err(csv_io)?;
    }
    flush(out)
}

pub fn write_ticks<W: Write>(w: W, ticks: &TickSeries) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["asset_id", "timestamp_ms", "midprice"]).map_err(csv_io)?;
    for (k, name) in ticks.assets().iter().enumerate() {
        for t in ticks.ticks(k) {
            out.write_record([name.as_str(), &t.timestamp_ms.to_string(), &fmt_f64(t.price)])
                .map_err(csv_io)?;
        }
    }
    flush(out)
}

pub fn write_history<W: Write>(w: W, history: &[GenerationStats]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["generation", "best", "mean", "std"]).map_err(csv_io)?;
    for s in history {
        out.write_record([s.generation.to_string(), fmt_f64(s.best), fmt_f64(s.mean), fmt_f64(s.std)])
            .map_err(csv_io)?;
    }
    flush(out)
}
