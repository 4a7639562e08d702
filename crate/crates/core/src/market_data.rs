//! Daily OHLCV + market-cap ingestion, typical prices and log returns.
//!
//! Dates are UTC calendar days. Intraday timestamps in the date column are
//! truncated to the day. The series must be contiguous: a missing day is an
//! error, never interpolated.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MarketDataError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("missing day {0} in market series")]
    MissingDay(NaiveDate),
    #[error("market series is empty")]
    EmptySeries,
    #[error("at least two bars are required to compute returns")]
    TooShort,
    #[error("non-positive typical price on {0}")]
    NonPositivePrice(NaiveDate),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for MarketDataError {
    fn from(e: csv::Error) -> Self {
        MarketDataError::Csv(e.to_string())
    }
}

/// One trading day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcvBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    /// Tokens exchanged.
    pub volume: f64,
    /// USD.
    pub market_cap: f64,
}

impl OhlcvBar {
    /// Checks the bar's price ordering and positivity constraints.
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
            ("volume", self.volume),
            ("market_cap", self.market_cap),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
        }
        for (name, v) in &fields[..4] {
            if *v <= 0.0 {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.market_cap <= 0.0 {
            return Err(format!("market_cap must be positive, got {}", self.market_cap));
        }
        if self.volume < 0.0 {
            return Err(format!("volume must be non-negative, got {}", self.volume));
        }
        if self.high < self.low {
            return Err(format!("high {} < low {}", self.high, self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below open/close", self.high));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above open/close", self.low));
        }
        Ok(())
    }
}

/// `(high + low + close) / 3`.
pub fn typical_price(bar: &OhlcvBar) -> f64 {
    (bar.high + bar.low + bar.close) / 3.0
}

/// A contiguous, date-ordered market series with its typical prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    bars: Vec<OhlcvBar>,
    typical: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series from bars in any order. Bars are validated, sorted and
    /// checked for duplicates and gaps.
    pub fn from_bars(mut bars: Vec<OhlcvBar>) -> Result<Self, MarketDataError> {
        if bars.is_empty() {
            return Err(MarketDataError::EmptySeries);
        }
        for (i, bar) in bars.iter().enumerate() {
            bar.validate().map_err(|reason| MarketDataError::MalformedRow {
                line: i as u64 + 1,
                reason,
            })?;
        }
        bars.sort_by_key(|b| b.date);
        for pair in bars.windows(2) {
            let (prev, next) = (pair[0].date, pair[1].date);
            if prev == next {
                return Err(MarketDataError::DuplicateDate(next));
            }
            if next - prev != Duration::days(1) {
                return Err(MarketDataError::MissingDay(prev + Duration::days(1)));
            }
        }
        let typical = bars.iter().map(typical_price).collect();
        Ok(PriceSeries { bars, typical })
    }

    pub fn bars(&self) -> &[OhlcvBar] {
        &self.bars
    }

    pub fn typical(&self) -> &[f64] {
        &self.typical
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.bars[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.bars[self.bars.len() - 1].date
    }

    /// Multiplies every price and the market cap by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, MarketDataError> {
        let bars = self
            .bars
            .iter()
            .map(|b| OhlcvBar {
                open: b.open * factor,
                high: b.high * factor,
                low: b.low * factor,
                close: b.close * factor,
                market_cap: b.market_cap * factor,
                ..*b
            })
            .collect();
        PriceSeries::from_bars(bars)
    }
}

/// A log return stamped with the day it is measured from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnPoint {
    pub date: NaiveDate,
    pub r: f64,
}

/// `r_t = ln(tau_{t+1}) - ln(tau_t)`, stamped with day `t`.
pub fn log_returns(series: &PriceSeries) -> Result<Vec<ReturnPoint>, MarketDataError> {
    if series.len() < 2 {
        return Err(MarketDataError::TooShort);
    }
    for (bar, &tau) in series.bars.iter().zip(&series.typical) {
        if !(tau > 0.0) {
            return Err(MarketDataError::NonPositivePrice(bar.date));
        }
    }
    Ok(series
        .typical
        .windows(2)
        .zip(&series.bars)
        .map(|(w, bar)| ReturnPoint {
            date: bar.date,
            r: w[1].ln() - w[0].ln(),
        })
        .collect())
}

/// Header names for each OHLCV field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub volume: String,
    pub market_cap: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            date: "date".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: "volume".into(),
            market_cap: "market_cap".into(),
        }
    }
}

impl ColumnMap {
    /// Parses `field=header` overrides separated by commas, e.g.
    /// `date=timeOpen,market_cap=marketCap`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self, String> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected field=header, got `{part}`"))?;
            let slot = match key.trim() {
                "date" => &mut self.date,
                "open" => &mut self.open,
                "high" => &mut self.high,
                "low" => &mut self.low,
                "close" => &mut self.close,
                "volume" => &mut self.volume,
                "market_cap" => &mut self.market_cap,
                other => return Err(format!("unknown OHLCV field `{other}`")),
            };
            *slot = value.trim().to_string();
        }
        Ok(self)
    }
}

/// Reader settings for market files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub delimiter: u8,
    pub columns: ColumnMap,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            delimiter: b',',
            columns: ColumnMap::default(),
        }
    }
}

/// Parses a `YYYY-MM-DD` day, ignoring any trailing time-of-day part.
pub fn parse_day(raw: &str) -> Result<NaiveDate, String> {
    let raw = raw.trim().trim_matches('"');
    let head = raw.get(..10).unwrap_or(raw);
    NaiveDate::parse_from_str(head, "%Y-%m-%d").map_err(|e| format!("bad date `{raw}`: {e}"))
}

fn parse_number(raw: &str, name: &str) -> Result<f64, String> {
    let cleaned: String = raw.trim().chars().filter(|c| *c != '_').collect();
    cleaned
        .parse::<f64>()
        .map_err(|_| format!("bad {name} value `{}`", raw.trim()))
}

/// Reads a delimited OHLCV table. Rows may appear in any order; the result is
/// sorted ascending by date.
pub fn parse_ohlcv_csv<R: Read>(source: R, schema: &CsvSchema) -> Result<PriceSeries, MarketDataError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize, MarketDataError> {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| MarketDataError::MissingColumn(name.to_string()))
    };
    let c = &schema.columns;
    let idx = [
        find(&c.date)?,
        find(&c.open)?,
        find(&c.high)?,
        find(&c.low)?,
        find(&c.close)?,
        find(&c.volume)?,
        find(&c.market_cap)?,
    ];

    let mut by_date: BTreeMap<NaiveDate, OhlcvBar> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| MarketDataError::MalformedRow { line, reason };
        let cell = |i: usize| record.get(i).unwrap_or("");
        let date = parse_day(cell(idx[0])).map_err(malformed)?;
        let num = |i: usize, name: &str| parse_number(cell(idx[i]), name).map_err(malformed);
        let bar = OhlcvBar {
            date,
            open: num(1, "open")?,
            high: num(2, "high")?,
            low: num(3, "low")?,
            close: num(4, "close")?,
            volume: num(5, "volume")?,
            market_cap: num(6, "market_cap")?,
        };
        bar.validate().map_err(malformed)?;
        if by_date.insert(date, bar).is_some() {
            return Err(MarketDataError::DuplicateDate(date));
        }
    }
    PriceSeries::from_bars(by_date.into_values().collect())
}

/// Writes the canonical market file: the default schema plus a `typical`
/// column.
pub fn write_price_csv<W: Write>(series: &PriceSeries, sink: W) -> Result<(), MarketDataError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["date", "open", "high", "low", "close", "volume", "market_cap", "typical"])?;
    for (bar, tau) in series.bars.iter().zip(&series.typical) {
        w.write_record([
            bar.date.format("%Y-%m-%d").to_string(),
            bar.open.to_string(),
            bar.high.to_string(),
            bar.low.to_string(),
            bar.close.to_string(),
            bar.volume.to_string(),
            bar.market_cap.to_string(),
            tau.to_string(),
        ])?;
    }
    w.flush().map_err(|e| MarketDataError::Csv(e.to_string()))?;
    Ok(())
}
