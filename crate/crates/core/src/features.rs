//! Date alignment of market and sentiment series, normalization, and
//! windowing into `(L x d window, next-day return)` samples.
//!
//! Feature order is always `(tau, vol, mcap, senti)`. Targets stay as raw log
//! returns; only inputs are scaled.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{parse_day, PriceSeries, ReturnPoint};
use crate::sentiment::DailySentiment;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("sentiment series does not overlap the price series")]
    EmptyIntersection,
    #[error("need at least 2 rows to fit a scaler, got {0}")]
    TooFewRows(usize),
    #[error("sample {0} uses data from its own target day or later")]
    LookaheadViolation(usize),
    #[error("lookback {lookback} leaves no samples ({returns} returns available)")]
    WindowTooLong { lookback: usize, returns: usize },
    #[error("lookback must be at least 1")]
    ZeroLookback,
    #[error("split leaves an empty side ({train} train / {test} test)")]
    DegenerateSplit { train: usize, test: usize },
    #[error("train fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("rows and returns are not date-aligned: {0}")]
    Misaligned(String),
    #[error("non-finite feature value on {0}")]
    NonFinite(NaiveDate),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("empty feature set")]
    EmptyFeatureSet,
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("scaler file: {0}")]
    ScalerFile(String),
}

impl From<csv::Error> for FeatureError {
    fn from(e: csv::Error) -> Self {
        FeatureError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Tau,
    Vol,
    Mcap,
    Senti,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::Tau, Feature::Vol, Feature::Mcap, Feature::Senti];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Tau => "tau",
            Feature::Vol => "vol",
            Feature::Mcap => "mcap",
            Feature::Senti => "senti",
        }
    }
}

impl FromStr for Feature {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| FeatureError::UnknownFeature(s.trim().to_string()))
    }
}

/// An ordered, duplicate-free subset of the four features in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSet(Vec<Feature>);

impl FeatureSet {
    pub fn new(mut features: Vec<Feature>) -> Result<Self, FeatureError> {
        features.sort();
        features.dedup();
        if features.is_empty() {
            return Err(FeatureError::EmptyFeatureSet);
        }
        Ok(FeatureSet(features))
    }

    /// `tau` only.
    pub fn baseline() -> Self {
        FeatureSet(vec![Feature::Tau])
    }

    /// `(tau, vol, mcap, senti)`.
    pub fn multimodal() -> Self {
        FeatureSet(Feature::ALL.to_vec())
    }

    pub fn features(&self) -> &[Feature] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl FromStr for FeatureSet {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parsed = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(Feature::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        FeatureSet::new(parsed)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|x| x.name()).collect();
        f.write_str(&names.join(","))
    }
}

/// The two model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Baseline,
    Multimodal,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Multimodal => "multimodal",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "baseline" => Ok(Variant::Baseline),
            "multimodal" => Ok(Variant::Multimodal),
            other => Err(format!("unknown variant `{other}` (baseline|multimodal)")),
        }
    }
}

/// One aligned day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRow {
    pub date: NaiveDate,
    pub tau: f64,
    pub vol: f64,
    pub mcap: f64,
    pub senti: f64,
}

impl FeatureRow {
    pub fn get(&self, f: Feature) -> f64 {
        match f {
            Feature::Tau => self.tau,
            Feature::Vol => self.vol,
            Feature::Mcap => self.mcap,
            Feature::Senti => self.senti,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub rows: Vec<FeatureRow>,
    /// Price days with no sentiment entry (filled with `S = 0`).
    pub filled: usize,
    /// Sentiment days outside the price span.
    pub dropped: usize,
}

/// One row per price day, sentiment joined by date.
pub fn align(prices: &PriceSeries, daily: &[DailySentiment]) -> Result<Alignment, FeatureError> {
    let (start, end) = (prices.first_date(), prices.last_date());
    let inside = daily.iter().filter(|d| d.date >= start && d.date <= end).count();
    if !daily.is_empty() && inside == 0 {
        return Err(FeatureError::EmptyIntersection);
    }
    let by_date: std::collections::HashMap<NaiveDate, f64> = daily.iter().map(|d| (d.date, d.score)).collect();
    let mut filled = 0;
    let rows: Vec<FeatureRow> = prices
        .bars()
        .iter()
        .zip(prices.typical())
        .map(|(bar, &tau)| {
            let senti = by_date.get(&bar.date).copied().unwrap_or_else(|| {
                filled += 1;
                0.0
            });
            FeatureRow {
                date: bar.date,
                tau,
                vol: bar.volume,
                mcap: bar.market_cap,
                senti,
            }
        })
        .collect();
    for r in &rows {
        if !Feature::ALL.iter().all(|&f| r.get(f).is_finite()) {
            return Err(FeatureError::NonFinite(r.date));
        }
    }
    Ok(Alignment {
        rows,
        filled,
        dropped: daily.len() - inside,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerMode {
    MinMax,
    ZScore,
}

impl FromStr for ScalerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "minmax" => Ok(ScalerMode::MinMax),
            "zscore" => Ok(ScalerMode::ZScore),
            other => Err(format!("unknown scaler mode `{other}` (minmax|zscore)")),
        }
    }
}

impl fmt::Display for ScalerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalerMode::MinMax => "minmax",
            ScalerMode::ZScore => "zscore",
        })
    }
}

/// Per-feature statistics: `(min, max)` in min-max mode, `(mean, sd)` in
/// z-score mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub feature: Feature,
    pub loc: f64,
    pub scale: f64,
    /// Degenerate range; transforms to 0.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mode: ScalerMode,
    pub stats: Vec<FeatureStats>,
}

impl Scaler {
    fn stats(&self, f: Feature) -> &FeatureStats {
        &self.stats[f as usize]
    }

    pub fn transform(&self, f: Feature, x: f64) -> f64 {
        let s = self.stats(f);
        if s.constant {
            return 0.0;
        }
        match self.mode {
            ScalerMode::MinMax => (x - s.loc) / (s.scale - s.loc),
            ScalerMode::ZScore => (x - s.loc) / s.scale,
        }
    }

    /// Inverse of [`Scaler::transform`]; `None` for constant features.
    pub fn inverse_transform(&self, f: Feature, z: f64) -> Option<f64> {
        let s = self.stats(f);
        if s.constant {
            return None;
        }
        Some(match self.mode {
            ScalerMode::MinMax => z * (s.scale - s.loc) + s.loc,
            ScalerMode::ZScore => z * s.scale + s.loc,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scaler serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let scaler: Scaler = serde_json::from_str(text).map_err(|e| FeatureError::ScalerFile(e.to_string()))?;
        let ordered = scaler.stats.len() == 4 && scaler.stats.iter().zip(Feature::ALL).all(|(s, f)| s.feature == f);
        if !ordered {
            return Err(FeatureError::ScalerFile("expected stats for tau, vol, mcap, senti in order".into()));
        }
        Ok(scaler)
    }
}

/// Fits per-feature statistics on training rows only.
pub fn fit_scaler(rows: &[FeatureRow], mode: ScalerMode) -> Result<Scaler, FeatureError> {
    if rows.len() < 2 {
        return Err(FeatureError::TooFewRows(rows.len()));
    }
    let stats = Feature::ALL
        .iter()
        .map(|&feature| {
            let col = rows.iter().map(|r| r.get(feature));
            match mode {
                ScalerMode::MinMax => {
                    let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
                    FeatureStats {
                        feature,
                        loc: lo,
                        scale: hi,
                        constant: !(hi > lo),
                    }
                }
                ScalerMode::ZScore => {
                    let n = rows.len() as f64;
                    let mean = col.clone().sum::<f64>() / n;
                    let var = col.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    FeatureStats {
                        feature,
                        loc: mean,
                        scale: sd,
                        constant: !(sd > 0.0),
                    }
                }
            }
        })
        .collect();
    Ok(Scaler { mode, stats })
}

/// A supervised pair: a normalized `lookback x dim` window and the log return
/// realized right after the window's last day.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Row-major `lookback x dim`.
    pub window: Vec<f64>,
    pub lookback: usize,
    pub dim: usize,
    pub target: f64,
    /// Day the target return is realized (the day after the window ends).
    pub date: NaiveDate,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
}

impl Sample {
    pub fn step(&self, t: usize) -> &[f64] {
        &self.window[t * self.dim..(t + 1) * self.dim]
    }
}

/// Number of leading rows that feed training windows when the first
/// `train_samples` samples are used for training.
pub fn training_rows(train_samples: usize, lookback: usize) -> usize {
    train_samples + lookback - 1
}

/// Number of samples produced from `returns` returns.
pub fn sample_count(returns: usize, lookback: usize) -> Result<usize, FeatureError> {
    if lookback == 0 {
        return Err(FeatureError::ZeroLookback);
    }
    if lookback > returns {
        return Err(FeatureError::WindowTooLong { lookback, returns });
    }
    Ok(returns - lookback + 1)
}

fn check_alignment(rows: &[FeatureRow], returns: &[ReturnPoint]) -> Result<(), FeatureError> {
    if returns.len() + 1 != rows.len() {
        return Err(FeatureError::Misaligned(format!(
            "{} rows but {} returns (expected rows - 1)",
            rows.len(),
            returns.len()
        )));
    }
    for (row, ret) in rows.iter().zip(returns) {
        if row.date != ret.date {
            return Err(FeatureError::Misaligned(format!("row {} vs return {}", row.date, ret.date)));
        }
    }
    Ok(())
}

/// Sample `k` holds rows `k..k+L` and the return stamped on day `k+L-1`.
pub fn make_samples(
    rows: &[FeatureRow],
    returns: &[ReturnPoint],
    lookback: usize,
    features: &FeatureSet,
    scaler: &Scaler,
) -> Result<Vec<Sample>, FeatureError> {
    check_alignment(rows, returns)?;
    let count = sample_count(returns.len(), lookback)?;
    let dim = features.dim();
    let normalized: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| features.features().iter().map(|&f| scaler.transform(f, r.get(f))).collect())
        .collect();

    let mut samples = Vec::with_capacity(count);
    for k in 0..count {
        let last = k + lookback - 1;
        let target = &returns[last];
        let window: Vec<f64> = normalized[k..=last].iter().flatten().copied().collect();
        let sample = Sample {
            window,
            lookback,
            dim,
            target: target.r,
            date: target.date + Duration::days(1),
            window_start: rows[k].date,
            window_end: rows[last].date,
        };
        if sample.window_end >= sample.date {
            return Err(FeatureError::LookaheadViolation(k));
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// Independent re-check of samples against the source rows: every window
/// value must come from a day strictly before the target's realization day
/// and match the scaled source value.
pub fn audit_samples(
    samples: &[Sample],
    rows: &[FeatureRow],
    returns: &[ReturnPoint],
    features: &FeatureSet,
    scaler: &Scaler,
) -> Result<(), FeatureError> {
    let row_of = |d: NaiveDate| rows.iter().find(|r| r.date == d);
    for (k, s) in samples.iter().enumerate() {
        let realized = returns
            .iter()
            .find(|r| r.date + Duration::days(1) == s.date)
            .ok_or(FeatureError::LookaheadViolation(k))?;
        if realized.r != s.target {
            return Err(FeatureError::LookaheadViolation(k));
        }
        for t in 0..s.lookback {
            let day = s.window_start + Duration::days(t as i64);
            if day >= s.date {
                return Err(FeatureError::LookaheadViolation(k));
            }
            let row = row_of(day).ok_or(FeatureError::LookaheadViolation(k))?;
            for (j, &f) in features.features().iter().enumerate() {
                if s.step(t)[j] != scaler.transform(f, row.get(f)) {
                    return Err(FeatureError::LookaheadViolation(k));
                }
            }
        }
    }
    Ok(())
}

/// Splits at `floor(train_frac * len)` without reordering.
pub fn chronological_split<T>(mut items: Vec<T>, train_frac: f64) -> Result<(Vec<T>, Vec<T>), FeatureError> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(FeatureError::InvalidFraction(train_frac));
    }
    let boundary = split_index(items.len(), train_frac);
    if boundary == 0 || boundary == items.len() {
        return Err(FeatureError::DegenerateSplit {
            train: boundary,
            test: items.len() - boundary,
        });
    }
    let test = items.split_off(boundary);
    Ok((items, test))
}

pub fn split_index(len: usize, train_frac: f64) -> usize {
    (train_frac * len as f64).floor() as usize
}

/// `date,tau,vol,mcap,senti`.
pub fn write_feature_csv<W: Write>(rows: &[FeatureRow], sink: W) -> Result<(), FeatureError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["date", "tau", "vol", "mcap", "senti"])?;
    for r in rows {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.tau.to_string(),
            r.vol.to_string(),
            r.mcap.to_string(),
            r.senti.to_string(),
        ])?;
    }
    w.flush().map_err(|e| FeatureError::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(source: R) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| FeatureError::MalformedRow { line, reason };
        if record.len() != 5 {
            return Err(malformed(format!("expected 5 fields, got {}", record.len())));
        }
        let date = parse_day(&record[0]).map_err(malformed)?;
        let num = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| FeatureError::MalformedRow {
                    line,
                    reason: format!("bad number `{}`", &record[i]),
                })
        };
        rows.push(FeatureRow {
            date,
            tau: num(1)?,
            vol: num(2)?,
            mcap: num(3)?,
            senti: num(4)?,
        });
    }
    Ok(rows)
}
