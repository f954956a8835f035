//! Price-bar ingestion and the return/feature transforms the agents consume.

use std::fs;
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDateTime;
use thiserror::Error;

/// Standard deviations below this are treated as zero and clamped to one.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TimeSeriesError {
    #[error("row {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("row {line}: timestamp does not increase")]
    NonMonotoneTime { line: usize },
    #[error("row {line}: price must be finite and positive")]
    NonPositivePrice { line: usize },
    #[error("series too short: need at least {need} points, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("timestamps and prices differ in length ({timestamps} vs {prices})")]
    LengthMismatch { timestamps: usize, prices: usize },
    #[error("window of length {m} ending at index {t} is out of range")]
    IndexOutOfRange { t: usize, m: usize },
    #[error("empty index range for standardizer fit")]
    EmptyRange,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Timestamped price bars, the raw market input.
///
/// Construction validates the invariants: strictly increasing timestamps,
/// finite positive prices, length at least two. The bar interval is inferred
/// from the first gap; a series whose gaps are not all equal is flagged
/// irregular rather than rejected, and duration statistics then rely on the
/// actual timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    timestamps: Vec<i64>,
    prices: Vec<f64>,
    bar_interval: i64,
    irregular: bool,
}

impl PriceSeries {
    pub fn new(timestamps: Vec<i64>, prices: Vec<f64>) -> Result<Self, TimeSeriesError> {
        if timestamps.len() != prices.len() {
            return Err(TimeSeriesError::LengthMismatch {
                timestamps: timestamps.len(),
                prices: prices.len(),
            });
        }
        if timestamps.len() < 2 {
            return Err(TimeSeriesError::TooShort {
                need: 2,
                got: timestamps.len(),
            });
        }
        for (i, &p) in prices.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(TimeSeriesError::NonPositivePrice { line: i + 1 });
            }
        }
        for i in 1..timestamps.len() {
            if timestamps[i] <= timestamps[i - 1] {
                return Err(TimeSeriesError::NonMonotoneTime { line: i + 1 });
            }
        }
        let bar_interval = timestamps[1] - timestamps[0];
        let irregular = timestamps
            .windows(2)
            .any(|w| w[1] - w[0] != bar_interval);
        Ok(Self {
            timestamps,
            prices,
            bar_interval,
            irregular,
        })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Seconds between consecutive bars, inferred from the first gap.
    pub fn bar_interval(&self) -> i64 {
        self.bar_interval
    }

    pub fn is_irregular(&self) -> bool {
        self.irregular
    }

    /// Contiguous sub-series over `range` (at least two bars).
    pub fn segment(&self, range: Range<usize>) -> Result<Self, TimeSeriesError> {
        if range.end > self.len() || range.len() < 2 {
            return Err(TimeSeriesError::TooShort {
                need: 2,
                got: range.len().min(self.len()),
            });
        }
        Self::new(
            self.timestamps[range.clone()].to_vec(),
            self.prices[range].to_vec(),
        )
    }
}

/// One-bar price differences, aligned to the closing bar's timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
    timestamps: Vec<i64>,
}

impl ReturnSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Timestamp of the bar on which each return realizes.
    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// returns[i] = prices[i+1] - prices[i].
pub fn returns_from_prices(p: &PriceSeries) -> Result<ReturnSeries, TimeSeriesError> {
    if p.len() < 2 {
        return Err(TimeSeriesError::TooShort {
            need: 2,
            got: p.len(),
        });
    }
    let values = p.prices().windows(2).map(|w| w[1] - w[0]).collect();
    let timestamps = p.timestamps()[1..].to_vec();
    Ok(ReturnSeries { values, timestamps })
}

/// Affine map `(v - mean) / std_dev` fitted on a training range and applied
/// unchanged elsewhere, so test data never leaks into the scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: f64,
    pub std_dev: f64,
}

impl Standardizer {
    pub fn identity() -> Self {
        Self {
            mean: 0.0,
            std_dev: 1.0,
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std_dev
    }
}

/// Population mean/standard deviation over `range`; a standard deviation
/// below [`STD_FLOOR`] is clamped to one.
pub fn fit_standardizer(
    r: &ReturnSeries,
    range: Range<usize>,
) -> Result<Standardizer, TimeSeriesError> {
    if range.is_empty() || range.end > r.len() {
        return Err(TimeSeriesError::EmptyRange);
    }
    let slice = &r.values()[range];
    let n = slice.len() as f64;
    let mean = slice.iter().sum::<f64>() / n;
    let var = slice.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std_dev = var.sqrt();
    let std_dev = if std_dev < STD_FLOOR { 1.0 } else { std_dev };
    Ok(Standardizer { mean, std_dev })
}

/// The `m` most recent (standardized) returns ending at some index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    values: Vec<f64>,
}

impl FeatureWindow {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The `m` returns ending at index `t`, each passed through `norm`.
pub fn window_at(
    r: &ReturnSeries,
    t: usize,
    m: usize,
    norm: &Standardizer,
) -> Result<FeatureWindow, TimeSeriesError> {
    if m == 0 || t + 1 < m || t >= r.len() {
        return Err(TimeSeriesError::IndexOutOfRange { t, m });
    }
    let values = r.values()[t + 1 - m..=t]
        .iter()
        .map(|&v| norm.apply(v))
        .collect();
    Ok(FeatureWindow { values })
}

/// One window per return index. The first `m - 1` windows are left-padded
/// with zeros in standardized space (a flat history), so every bar of a
/// split gets a decision.
pub fn window_sequence(r: &ReturnSeries, m: usize, norm: &Standardizer) -> Vec<FeatureWindow> {
    let vals = r.values();
    (0..vals.len())
        .map(|t| {
            let values = (0..m)
                .map(|j| {
                    let lag = m - 1 - j;
                    if t >= lag {
                        norm.apply(vals[t - lag])
                    } else {
                        0.0
                    }
                })
                .collect();
            FeatureWindow { values }
        })
        .collect()
}

/// Which CSV columns hold the timestamp and the price (0-based).
#[derive(Debug, Clone, Copy)]
pub struct CsvSchema {
    pub timestamp_col: usize,
    pub price_col: usize,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp_col: 0,
            price_col: 1,
        }
    }
}

fn parse_timestamp(field: &str) -> Option<i64> {
    if let Ok(secs) = field.parse::<i64>() {
        return Some(secs);
    }
    NaiveDateTime::parse_from_str(field, "%Y-%m-%d %H:%M")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Load `timestamp,price` rows. The header row is optional; timestamps are
/// integer epoch-seconds or `YYYY-MM-DD HH:MM`; decimals use `.`.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<PriceSeries, TimeSeriesError> {
    let text = fs::read_to_string(path)?;
    let mut timestamps = Vec::new();
    let mut prices = Vec::new();
    let mut saw_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let need = schema.timestamp_col.max(schema.price_col) + 1;
        if fields.len() < need {
            return Err(TimeSeriesError::Parse {
                line,
                msg: format!("expected at least {need} columns, got {}", fields.len()),
            });
        }
        let ts_field = fields[schema.timestamp_col];
        let price_field = fields[schema.price_col];
        let ts = match parse_timestamp(ts_field) {
            Some(ts) => ts,
            None if !saw_data => continue, // optional header row
            None => {
                return Err(TimeSeriesError::Parse {
                    line,
                    msg: format!("bad timestamp {ts_field:?}"),
                })
            }
        };
        let price: f64 = match price_field.parse() {
            Ok(p) => p,
            Err(_) if !saw_data => continue,
            Err(_) => {
                return Err(TimeSeriesError::Parse {
                    line,
                    msg: format!("bad price {price_field:?}"),
                })
            }
        };
        if !price.is_finite() || price <= 0.0 {
            return Err(TimeSeriesError::NonPositivePrice { line });
        }
        if let Some(&prev) = timestamps.last() {
            if ts <= prev {
                return Err(TimeSeriesError::NonMonotoneTime { line });
            }
        }
        saw_data = true;
        timestamps.push(ts);
        prices.push(price);
    }
    PriceSeries::new(timestamps, prices)
}
