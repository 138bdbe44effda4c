//! Price series, CSV ingestion and export of fits.
//!
//! Input files are comma-separated UTF-8 with a header row. Observations are indexed
//! by their position inside the selected window (trading-day index), so weekends and
//! holidays never appear as gaps.
//!
//! Numbers are written in shortest round-trip decimal form, which reproduces every
//! `f64` exactly on re-ingest.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};

use crate::error::{invalid, Error, Result};
use crate::fitting::FitResult;
use crate::model::lppl_eval;

/// Log-price observations on a strictly increasing time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    times: Vec<f64>,
    log_prices: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl PriceSeries {
    pub fn new(times: Vec<f64>, log_prices: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if times.len() != log_prices.len() {
            return Err(invalid(format!(
                "times and log_prices differ in length ({} vs {})",
                times.len(),
                log_prices.len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != times.len() {
                return Err(invalid("labels must parallel times"));
            }
        }
        if let Some(i) = times.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(invalid(format!("times not strictly increasing at position {}", i + 1)));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("times must be finite"));
        }
        if let Some(i) = log_prices.iter().position(|y| !y.is_finite()) {
            return Err(invalid(format!("log-price at position {i} is not finite")));
        }
        Ok(Self { times, log_prices, labels })
    }

    /// Series indexed `0, 1, ..., n-1`.
    pub fn from_log_prices(log_prices: Vec<f64>) -> Result<Self> {
        let times = (0..log_prices.len()).map(|i| i as f64).collect();
        Self::new(times, log_prices, None)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn log_prices(&self) -> &[f64] {
        &self.log_prices
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.log_prices.iter().copied())
    }
}

/// Inclusive calendar window; either end may be open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DateWindow {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

impl DateWindow {
    fn contains(&self, d: NaiveDate) -> bool {
        self.from.is_none_or(|f| d >= f) && self.to.is_none_or(|t| d <= t)
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// `None` keeps file order and produces a series without labels.
    pub date_column: Option<String>,
    pub price_column: String,
    pub window: DateWindow,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { date_column: Some("date".into()), price_column: "close".into(), window: DateWindow::default() }
    }
}

/// Parses `YYYY-MM-DD` or an ISO 8601 / RFC 3339 timestamp.
pub fn parse_date(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    None
}

pub fn ingest_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<PriceSeries> {
    read_csv(File::open(path)?, opts)
}

/// Reads a price table. Row numbers in errors are file line numbers (header = 1).
pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column =
        |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.to_string()));
    let price_col = column(&opts.price_column)?;
    let date_col = opts.date_column.as_deref().map(column).transpose()?;
    if date_col.is_none() && (opts.window.from.is_some() || opts.window.to.is_some()) {
        return Err(invalid("a date window requires a date column"));
    }

    struct Row {
        line: usize,
        when: Option<NaiveDateTime>,
        label: Option<String>,
        price: f64,
    }

    let mut rows = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let line = k + 2;
        let record = record?;
        let price_raw = record
            .get(price_col)
            .ok_or_else(|| Error::Row { row: line, msg: format!("missing `{}` field", opts.price_column) })?;
        let price: f64 =
            price_raw.parse().map_err(|_| Error::Row { row: line, msg: format!("unparseable price `{price_raw}`") })?;
        let (when, label) = match date_col {
            Some(c) => {
                let raw = record.get(c).ok_or_else(|| Error::Row { row: line, msg: "missing date field".into() })?;
                let when = parse_date(raw)
                    .ok_or_else(|| Error::Row { row: line, msg: format!("unparseable date `{raw}`") })?;
                (Some(when), Some(raw.to_string()))
            }
            None => (None, None),
        };
        rows.push(Row { line, when, label, price });
    }

    if date_col.is_some() {
        rows.retain(|r| opts.window.contains(r.when.unwrap().date()));
        rows.sort_by_key(|r| r.when.unwrap());
        if let Some(w) = rows.windows(2).find(|w| w[0].when == w[1].when) {
            return Err(Error::Row {
                row: w[1].line,
                msg: format!("duplicate date `{}`", w[1].label.as_deref().unwrap_or("")),
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyWindow);
    }

    let mut log_prices = Vec::with_capacity(rows.len());
    for r in &rows {
        if !(r.price > 0.0) || !r.price.is_finite() {
            return Err(Error::Row { row: r.line, msg: format!("price must be positive and finite, got {}", r.price) });
        }
        log_prices.push(r.price.ln());
    }
    let labels = date_col.map(|_| rows.iter().map(|r| r.label.clone().unwrap()).collect());
    let times = (0..rows.len()).map(|i| i as f64).collect();
    PriceSeries::new(times, log_prices, labels)
}

/// Writes `time_index[,date],close,log_price`; `close` is `exp(log_price)`.
pub fn export_series(series: &PriceSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_series(series, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_series<W: Write>(series: &PriceSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let labelled = series.labels().is_some();
    if labelled {
        w.write_record(["time_index", "date", "close", "log_price"])?;
    } else {
        w.write_record(["time_index", "close", "log_price"])?;
    }
    for (i, (t, y)) in series.iter().enumerate() {
        let (t, close, y) = (t.to_string(), y.exp().to_string(), y.to_string());
        match series.label(i) {
            Some(d) => w.write_record([t.as_str(), d, &close, &y])?,
            None => w.write_record([t, close, y])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Path of the JSON sidecar written next to an exported fit CSV.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the observed/fitted CSV and a JSON sidecar with the fit summary.
pub fn export_fit(series: &PriceSeries, result: &FitResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path)?);
    write_fit_csv(series, result, &mut out)?;
    out.flush()?;

    let mut side = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut side, &result.summary())?;
    side.write_all(b"\n")?;
    side.flush()?;
    Ok(())
}

pub fn write_fit_csv<W: Write>(series: &PriceSeries, result: &FitResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_index", "date_label", "observed_log_price", "fitted_log_price", "residual"])?;
    for (i, (t, y)) in series.iter().enumerate() {
        let fitted = lppl_eval(&result.params, t)?;
        w.write_record([
            t.to_string(),
            series.label(i).unwrap_or("").to_string(),
            y.to_string(),
            fitted.to_string(),
            (y - fitted).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
