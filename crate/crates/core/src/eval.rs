//! Regression metrics, single-run experiments and the paired
//! baseline-vs-multimodal comparison with its report formats.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{
    align, chronological_split, fit_scaler, make_samples, sample_count, split_index, training_rows, FeatureError,
    FeatureRow, FeatureSet, Sample, Scaler, ScalerMode, Variant,
};
use crate::market_data::{log_returns, MarketDataError, PriceSeries, ReturnPoint};
use crate::neural::{config_hash, predict, train, Checkpoint, LstmModel, NeuralError, TrainConfig};
use crate::sentiment::{write_daily_csv, DailySentiment};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("actual has {actual} values, predicted has {predicted}")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("no values to evaluate")]
    EmptyInput,
    #[error("actuals are constant; R^2 is undefined")]
    ZeroVariance,
    #[error("seed list must be non-empty with distinct entries")]
    BadSeeds,
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Market(#[from] MarketDataError),
    #[error("io: {0}")]
    Io(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

impl From<csv::Error> for EvalError {
    fn from(e: csv::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    /// `None` when the actuals have zero variance.
    pub r2: Option<f64>,
}

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<(), EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(())
}

/// `1 - SSE / SST`, with the mean taken over the evaluation set itself.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    check_lengths(actual, predicted)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let sst: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if sst == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - sse / sst)
}

pub fn metrics(actual: &[f64], predicted: &[f64]) -> Result<Metrics, EvalError> {
    check_lengths(actual, predicted)?;
    let n = actual.len() as f64;
    let mse = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum::<f64>() / n;
    let mae = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum::<f64>() / n;
    let r2 = match r_squared(actual, predicted) {
        Ok(v) => Some(v),
        Err(EvalError::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    Ok(Metrics { mse, mae, r2 })
}

/// Everything besides the seed that defines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub lookback: usize,
    pub train_frac: f64,
    pub scaler: ScalerMode,
    /// Inputs of the multimodal variant; the baseline always uses `tau`.
    pub multimodal_features: FeatureSet,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lookback: 14,
            train_frac: 0.8,
            scaler: ScalerMode::MinMax,
            multimodal_features: FeatureSet::multimodal(),
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn hash(&self) -> u64 {
        config_hash(&serde_json::to_string(self).expect("config serializes"))
    }

    pub fn features_for(&self, variant: Variant) -> FeatureSet {
        match variant {
            Variant::Baseline => FeatureSet::baseline(),
            Variant::Multimodal => self.multimodal_features.clone(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.train.seed = seed;
        c
    }
}

/// Aligned features and returns for one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub rows: Vec<FeatureRow>,
    pub returns: Vec<ReturnPoint>,
    pub daily: Vec<DailySentiment>,
}

impl ExperimentData {
    pub fn new(prices: &PriceSeries, daily: Vec<DailySentiment>) -> Result<Self, EvalError> {
        let alignment = align(prices, &daily)?;
        Ok(ExperimentData {
            rows: alignment.rows,
            returns: log_returns(prices)?,
            daily,
        })
    }
}

/// Train/test samples for one variant, with the scaler fitted on the rows
/// that feed the training windows.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSplit {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub scaler: Scaler,
    pub features: FeatureSet,
}

pub fn prepare(data: &ExperimentData, cfg: &ExperimentConfig, variant: Variant) -> Result<PreparedSplit, EvalError> {
    let count = sample_count(data.returns.len(), cfg.lookback)?;
    if !(cfg.train_frac > 0.0 && cfg.train_frac < 1.0) {
        return Err(FeatureError::InvalidFraction(cfg.train_frac).into());
    }
    let n_train = split_index(count, cfg.train_frac);
    if n_train == 0 || n_train == count {
        return Err(FeatureError::DegenerateSplit {
            train: n_train,
            test: count - n_train,
        }
        .into());
    }
    let scaler = fit_scaler(&data.rows[..training_rows(n_train, cfg.lookback)], cfg.scaler)?;
    let features = cfg.features_for(variant);
    let samples = make_samples(&data.rows, &data.returns, cfg.lookback, &features, &scaler)?;
    let (train, test) = chronological_split(samples, cfg.train_frac)?;
    Ok(PreparedSplit {
        train,
        test,
        scaler,
        features,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Hex of [`ExperimentConfig::hash`] for the seeded config.
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub features: FeatureSet,
    pub scaler: Scaler,
    pub train_samples: usize,
    pub metrics: Metrics,
    pub train_losses: Vec<f64>,
    pub series: Vec<SeriesPoint>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn recompute_metrics(&self) -> Result<Metrics, EvalError> {
        let actual: Vec<f64> = self.series.iter().map(|p| p.actual).collect();
        let predicted: Vec<f64> = self.series.iter().map(|p| p.predicted).collect();
        metrics(&actual, &predicted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: RunReport,
    pub checkpoint: Checkpoint,
}

/// Trains one variant with `cfg.train.seed` and evaluates it on the test split.
pub fn run_experiment(
    data: &ExperimentData,
    cfg: &ExperimentConfig,
    variant: Variant,
) -> Result<RunOutcome, EvalError> {
    let split = prepare(data, cfg, variant)?;
    run_prepared(&split, cfg, variant, 1)
}

fn run_prepared(split: &PreparedSplit, cfg: &ExperimentConfig, variant: Variant, run_id: usize) -> Result<RunOutcome, EvalError> {
    let seed = cfg.train.seed;
    let model = LstmModel::init(split.features.dim(), cfg.train.hidden_dim, seed);
    let outcome = train(model, &split.train, &cfg.train)?;
    let preds = predict(&outcome.model, &split.test)?;
    let actual: Vec<f64> = split.test.iter().map(|s| s.target).collect();
    let m = metrics(&actual, &preds)?;
    let hash = cfg.hash();
    let series = split
        .test
        .iter()
        .zip(&preds)
        .map(|(s, &p)| SeriesPoint {
            date: s.date,
            actual: s.target,
            predicted: p,
        })
        .collect();
    Ok(RunOutcome {
        report: RunReport {
            run_id,
            seed,
            variant,
            config_hash: format!("{hash:016x}"),
            config: cfg.clone(),
            features: split.features.clone(),
            scaler: split.scaler.clone(),
            train_samples: split.train.len(),
            metrics: m,
            train_losses: outcome.losses,
            series,
        },
        checkpoint: Checkpoint {
            model: outcome.model,
            config_hash: hash,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Marker {
    Better,
    Worse,
    Same,
}

impl Marker {
    fn lower_is_better(delta: f64) -> Self {
        if delta < 0.0 {
            Marker::Better
        } else if delta > 0.0 {
            Marker::Worse
        } else {
            Marker::Same
        }
    }

    fn higher_is_better(delta: f64) -> Self {
        Marker::lower_is_better(-delta)
    }

    fn word(self) -> &'static str {
        match self {
            Marker::Better => "better",
            Marker::Worse => "worse",
            Marker::Same => "same",
        }
    }
}

/// Multimodal minus baseline, with a better/worse marker per metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub mse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
    pub mse_marker: Marker,
    pub mae_marker: Marker,
    pub r2_marker: Option<Marker>,
}

impl MetricDelta {
    pub fn between(baseline: &Metrics, multimodal: &Metrics) -> Self {
        let mse = multimodal.mse - baseline.mse;
        let mae = multimodal.mae - baseline.mae;
        let r2 = match (baseline.r2, multimodal.r2) {
            (Some(b), Some(m)) => Some(m - b),
            _ => None,
        };
        MetricDelta {
            mse,
            mae,
            r2,
            mse_marker: Marker::lower_is_better(mse),
            mae_marker: Marker::lower_is_better(mae),
            r2_marker: r2.map(Marker::higher_is_better),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPair {
    pub run: usize,
    pub seed: u64,
    pub baseline: RunReport,
    pub multimodal: RunReport,
    pub delta: MetricDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub config_hash: String,
    pub pairs: Vec<RunPair>,
    pub average_baseline: Metrics,
    pub average_multimodal: Metrics,
    pub average_delta: MetricDelta,
}

pub fn average_metrics<'a>(items: impl IntoIterator<Item = &'a Metrics>) -> Metrics {
    let items: Vec<&Metrics> = items.into_iter().collect();
    let n = items.len() as f64;
    let r2 = items
        .iter()
        .map(|m| m.r2)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.iter().sum::<f64>() / n);
    Metrics {
        mse: items.iter().map(|m| m.mse).sum::<f64>() / n,
        mae: items.iter().map(|m| m.mae).sum::<f64>() / n,
        r2,
    }
}

pub struct ComparisonOutcome {
    pub report: ComparisonReport,
    /// `(variant, seed, checkpoint)` in run order, baseline first.
    pub checkpoints: Vec<(Variant, u64, Checkpoint)>,
}

/// Trains both variants for every seed on identical data and config.
pub fn compare_runs(data: &ExperimentData, cfg: &ExperimentConfig, seeds: &[u64]) -> Result<ComparisonOutcome, EvalError> {
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if seeds.is_empty() || sorted.len() != seeds.len() {
        return Err(EvalError::BadSeeds);
    }
    let base_split = prepare(data, cfg, Variant::Baseline)?;
    let multi_split = prepare(data, cfg, Variant::Multimodal)?;

    let mut pairs = Vec::with_capacity(seeds.len());
    let mut checkpoints = Vec::with_capacity(2 * seeds.len());
    for (i, &seed) in seeds.iter().enumerate() {
        let seeded = cfg.with_seed(seed);
        let base = run_prepared(&base_split, &seeded, Variant::Baseline, i + 1)?;
        let multi = run_prepared(&multi_split, &seeded, Variant::Multimodal, i + 1)?;
        checkpoints.push((Variant::Baseline, seed, base.checkpoint));
        checkpoints.push((Variant::Multimodal, seed, multi.checkpoint));
        pairs.push(RunPair {
            run: i + 1,
            seed,
            delta: MetricDelta::between(&base.report.metrics, &multi.report.metrics),
            baseline: base.report,
            multimodal: multi.report,
        });
    }
    let average_baseline = average_metrics(pairs.iter().map(|p| &p.baseline.metrics));
    let average_multimodal = average_metrics(pairs.iter().map(|p| &p.multimodal.metrics));
    Ok(ComparisonOutcome {
        report: ComparisonReport {
            config_hash: format!("{:016x}", cfg.hash()),
            average_delta: MetricDelta::between(&average_baseline, &average_multimodal),
            average_baseline,
            average_multimodal,
            pairs,
        },
        checkpoints,
    })
}

/// Flat rows of a comparison: enough to re-render the table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// `(run, seed, baseline, multimodal)`.
    pub runs: Vec<(usize, u64, Metrics, Metrics)>,
    pub average_baseline: Metrics,
    pub average_multimodal: Metrics,
}

impl ComparisonReport {
    pub fn table(&self) -> ComparisonTable {
        ComparisonTable {
            runs: self
                .pairs
                .iter()
                .map(|p| (p.run, p.seed, p.baseline.metrics, p.multimodal.metrics))
                .collect(),
            average_baseline: self.average_baseline,
            average_multimodal: self.average_multimodal,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `run,seed,variant,mse,mae,r2`, two rows per run then two `avg` rows.
pub fn write_comparison_csv<W: Write>(table: &ComparisonTable, sink: W) -> Result<(), EvalError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["run", "seed", "variant", "mse", "mae", "r2"])?;
    for (run, seed, base, multi) in &table.runs {
        for (variant, m) in [(Variant::Baseline, base), (Variant::Multimodal, multi)] {
            w.write_record([
                run.to_string(),
                seed.to_string(),
                variant.to_string(),
                m.mse.to_string(),
                m.mae.to_string(),
                fmt_opt(m.r2),
            ])?;
        }
    }
    for (variant, m) in [
        (Variant::Baseline, &table.average_baseline),
        (Variant::Multimodal, &table.average_multimodal),
    ] {
        w.write_record([
            "avg".to_string(),
            String::new(),
            variant.to_string(),
            m.mse.to_string(),
            m.mae.to_string(),
            fmt_opt(m.r2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_comparison_csv<R: Read>(source: R) -> Result<ComparisonTable, EvalError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut runs: Vec<(usize, u64, Option<Metrics>, Option<Metrics>)> = Vec::new();
    let (mut avg_b, mut avg_m) = (None, None);
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| EvalError::MalformedRow { line, reason };
        if record.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {}", record.len())));
        }
        let num = |i: usize| -> Result<f64, EvalError> {
            record[i].parse().map_err(|_| bad(format!("bad number `{}`", &record[i])))
        };
        let r2 = if record[5].is_empty() { None } else { Some(num(5)?) };
        let m = Metrics {
            mse: num(3)?,
            mae: num(4)?,
            r2,
        };
        let variant: Variant = record[2].parse().map_err(bad)?;
        if &record[0] == "avg" {
            match variant {
                Variant::Baseline => avg_b = Some(m),
                Variant::Multimodal => avg_m = Some(m),
            }
            continue;
        }
        let run: usize = record[0].parse().map_err(|_| bad(format!("bad run `{}`", &record[0])))?;
        let seed: u64 = record[1].parse().map_err(|_| bad(format!("bad seed `{}`", &record[1])))?;
        let idx = match runs.iter().position(|r| r.0 == run) {
            Some(i) => i,
            None => {
                runs.push((run, seed, None, None));
                runs.len() - 1
            }
        };
        match variant {
            Variant::Baseline => runs[idx].2 = Some(m),
            Variant::Multimodal => runs[idx].3 = Some(m),
        }
    }
    let incomplete = |what: &str| EvalError::MalformedRow {
        line: 0,
        reason: format!("comparison file is missing {what}"),
    };
    let runs = runs
        .into_iter()
        .map(|(run, seed, b, m)| match (b, m) {
            (Some(b), Some(m)) => Ok((run, seed, b, m)),
            _ => Err(incomplete(&format!("a variant for run {run}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonTable {
        runs,
        average_baseline: avg_b.ok_or_else(|| incomplete("the baseline average"))?,
        average_multimodal: avg_m.ok_or_else(|| incomplete("the multimodal average"))?,
    })
}

/// MSE as displayed in the table (scaled by 1e4).
pub fn display_mse(mse: f64) -> String {
    format!("{:.2}", mse * 1e4)
}

fn arrow(delta: f64) -> &'static str {
    if delta > 0.0 {
        "↑"
    } else if delta < 0.0 {
        "↓"
    } else {
        "="
    }
}

fn cells(m: &Metrics, delta: Option<&MetricDelta>, mae_digits: usize) -> [String; 3] {
    let r2 = m.r2.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into());
    match delta {
        None => [display_mse(m.mse), format!("{:.*}", mae_digits, m.mae), r2],
        Some(d) => [
            format!("{}{} {}", display_mse(m.mse), arrow(d.mse), d.mse_marker.word()),
            format!("{:.*}{} {}", mae_digits, m.mae, arrow(d.mae), d.mae_marker.word()),
            match (d.r2, d.r2_marker) {
                (Some(v), Some(mk)) => format!("{r2}{} {}", arrow(v), mk.word()),
                _ => r2,
            },
        ],
    }
}

/// Aligned text rendering in the layout of the classic comparison table.
pub fn render_comparison_text(table: &ComparisonTable) -> String {
    let mut rows: Vec<[String; 5]> = vec![[
        "Run".into(),
        "Model".into(),
        "MSE (x1e-4)".into(),
        "MAE".into(),
        "R2".into(),
    ]];
    let mut push = |run: String, model: &str, c: [String; 3]| {
        let [a, b, c] = c;
        rows.push([run, model.into(), a, b, c]);
    };
    for (run, _, base, multi) in &table.runs {
        let d = MetricDelta::between(base, multi);
        push(run.to_string(), "Price Only", cells(base, None, 5));
        push(String::new(), "+Sentiment", cells(multi, Some(&d), 5));
    }
    let d = MetricDelta::between(&table.average_baseline, &table.average_multimodal);
    push("Avg".into(), "Price Only", cells(&table.average_baseline, None, 4));
    push(String::new(), "+Sentiment", cells(&table.average_multimodal, Some(&d), 4));

    let widths: Vec<usize> = (0..5)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!("Comparison of Prediction Models ({} Independent Runs)\n", table.runs.len());
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 8));
        }
    }
    out.push_str("MSE scaled by 1e4. Arrows give the direction of change vs Price Only; lower error / higher R2 is better.\n");
    out
}

/// Files written by [`emit_plot_series`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub series: PathBuf,
    /// `None` when there was no daily sentiment to write.
    pub sentiment: Option<PathBuf>,
}

pub fn series_file_name(variant: Variant, seed: u64) -> String {
    format!("run_{variant}_{seed}_series.csv")
}

/// `date,actual,predicted` per test day, plus `sentiment_daily.csv` when
/// there is a daily sentiment series.
pub fn emit_plot_series(report: &RunReport, daily: &[DailySentiment], dir: &Path) -> Result<PlotFiles, EvalError> {
    fs::create_dir_all(dir)?;
    let series = dir.join(series_file_name(report.variant, report.seed));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&series)?;
    w.write_record(["date", "actual", "predicted"])?;
    for p in &report.series {
        w.write_record([p.date.format("%Y-%m-%d").to_string(), p.actual.to_string(), p.predicted.to_string()])?;
    }
    w.flush()?;

    let sentiment = if daily.is_empty() {
        None
    } else {
        let path = dir.join("sentiment_daily.csv");
        let file = fs::File::create(&path)?;
        write_daily_csv(daily, std::io::BufWriter::new(file)).map_err(|e| EvalError::Io(e.to_string()))?;
        Some(path)
    };
    Ok(PlotFiles { series, sentiment })
}

/// Reads a `date,actual,predicted` file back.
pub fn read_series_csv<R: Read>(source: R) -> Result<Vec<SeriesPoint>, EvalError> {
    let mut reader = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| EvalError::MalformedRow { line, reason };
        if record.len() != 3 {
            return Err(bad("expected date,actual,predicted".into()));
        }
        let num = |i: usize| -> Result<f64, EvalError> { record[i].parse().map_err(|_| bad(format!("bad number `{}`", &record[i]))) };
        out.push(SeriesPoint {
            date: crate::market_data::parse_day(&record[0]).map_err(bad)?,
            actual: num(1)?,
            predicted: num(2)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let m = metrics(&[0.1, -0.2, 0.3], &[0.1, -0.2, 0.3]).unwrap();
        assert_eq!(m, Metrics { mse: 0.0, mae: 0.0, r2: Some(1.0) });

        let actual = [0.1, -0.1];
        let m = metrics(&actual, &[0.0, 0.0]).unwrap();
        assert!((m.mse - 0.01).abs() < 1e-15);
        assert!((m.mae - 0.1).abs() < 1e-15);
        assert_eq!(m.r2, Some(0.0));

        assert_eq!(metrics(&[0.5, 0.5], &[0.1, 0.2]).unwrap().r2, None);
        assert_eq!(r_squared(&[0.5, 0.5], &[0.1, 0.2]), Err(EvalError::ZeroVariance));
        assert_eq!(metrics(&[], &[]), Err(EvalError::EmptyInput));
        assert!(matches!(metrics(&[1.0], &[1.0, 2.0]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn mean_predictor_has_zero_r2() {
        let actual = [0.02, -0.01, 0.03, 0.0, -0.04];
        let mean = actual.iter().sum::<f64>() / 5.0;
        assert_eq!(r_squared(&actual, &[mean; 5]).unwrap(), 0.0);
    }

    #[test]
    fn markers_follow_metric_orientation() {
        let base = Metrics { mse: 5.5e-4, mae: 0.01835, r2: Some(-0.192) };
        let multi = Metrics { mse: 5.53e-4, mae: 0.01816, r2: Some(-0.198) };
        let d = MetricDelta::between(&base, &multi);
        assert_eq!((d.mse_marker, d.mae_marker, d.r2_marker), (Marker::Worse, Marker::Better, Some(Marker::Worse)));
    }

    #[test]
    fn display_scaling() {
        assert_eq!(display_mse(0.000584), "5.84");
        assert_eq!(display_mse(0.00055), "5.50");
    }

    #[test]
    fn comparison_csv_round_trip_and_text() {
        let m = |mse: f64, r2: Option<f64>| Metrics { mse, mae: mse.sqrt(), r2 };
        let table = ComparisonTable {
            runs: vec![(1, 11, m(6e-4, Some(-0.2)), m(5e-4, Some(-0.1))), (2, 12, m(5.5e-4, None), m(5.6e-4, None))],
            average_baseline: m(5.75e-4, None),
            average_multimodal: m(5.3e-4, None),
        };
        let mut buf = Vec::new();
        write_comparison_csv(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 + 2);
        assert!(text.starts_with("run,seed,variant,mse,mae,r2\n"));
        assert_eq!(read_comparison_csv(buf.as_slice()).unwrap(), table);

        let rendered = render_comparison_text(&table);
        assert!(rendered.contains("Price Only"));
        assert!(rendered.contains("5.00↓ better"));
        assert!(rendered.contains("5.60↑ worse"));
        assert!(rendered.contains("n/a"));
    }
}
