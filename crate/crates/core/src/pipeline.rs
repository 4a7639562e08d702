//! Command implementations behind the `senticast` binary.
//!
//! Every command takes a [`Settings`] map (config file overlaid with flags)
//! and writes its outputs plus `<command>.effective.conf` into the output
//! directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

use crate::corpus::{filter_corpus, merge_exports, parse_chat_export, read_corpus_csv, write_corpus_csv, Anonymizer, CorpusError, FilterConfig};
use crate::eval::{
    compare_runs, emit_plot_series, read_comparison_csv, render_comparison_text, run_experiment, write_comparison_csv,
    EvalError, ExperimentConfig, ExperimentData,
};
use crate::features::{align, write_feature_csv, FeatureError, FeatureSet, ScalerMode, Variant};
use crate::market_data::{parse_ohlcv_csv, write_price_csv, ColumnMap, CsvSchema, MarketDataError, PriceSeries};
use crate::neural::{BatchMode, Checkpoint, NeuralError, Optimizer};
use crate::sentiment::{
    aggregate_daily, distribution, load_interchange_scores, read_daily_csv, score_corpus, write_daily_csv,
    write_interchange_scores, Lexicon, LexiconProvider, SentimentError,
};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Contract(String),
    #[error("{0}")]
    Diverged(String),
    #[error("io: {0}")]
    Io(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Parse(_) | PipelineError::Io(_) => 2,
            PipelineError::Contract(_) => 3,
            PipelineError::Diverged(_) => 4,
        }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

impl From<MarketDataError> for PipelineError {
    fn from(e: MarketDataError) -> Self {
        use MarketDataError::*;
        let msg = e.to_string();
        match e {
            MissingColumn(_) | MalformedRow { .. } | Csv(_) => PipelineError::Parse(msg),
            _ => PipelineError::Contract(msg),
        }
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        PipelineError::Parse(e.to_string())
    }
}

impl From<SentimentError> for PipelineError {
    fn from(e: SentimentError) -> Self {
        use SentimentError::*;
        let msg = e.to_string();
        match e {
            LabelOutOfRange { .. } | ConfidenceOutOfRange { .. } | MissingColumn(_) | MalformedRow { .. } | Csv(_) => {
                PipelineError::Parse(msg)
            }
            EmptyLexicon => PipelineError::Usage(msg),
            _ => PipelineError::Contract(msg),
        }
    }
}

impl From<FeatureError> for PipelineError {
    fn from(e: FeatureError) -> Self {
        use FeatureError::*;
        let msg = e.to_string();
        match e {
            MalformedRow { .. } | Csv(_) | ScalerFile(_) => PipelineError::Parse(msg),
            UnknownFeature(_) | EmptyFeatureSet | InvalidFraction(_) | ZeroLookback => PipelineError::Usage(msg),
            _ => PipelineError::Contract(msg),
        }
    }
}

impl From<NeuralError> for PipelineError {
    fn from(e: NeuralError) -> Self {
        let msg = e.to_string();
        match e {
            NeuralError::DivergedLoss(_) => PipelineError::Diverged(msg),
            NeuralError::InvalidConfig(_) => PipelineError::Usage(msg),
            NeuralError::Checkpoint(_) => PipelineError::Parse(msg),
            _ => PipelineError::Contract(msg),
        }
    }
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Features(e) => e.into(),
            EvalError::Neural(e) => e.into(),
            EvalError::Market(e) => e.into(),
            EvalError::Io(m) => PipelineError::Io(m),
            EvalError::BadSeeds => PipelineError::Usage(e.to_string()),
            EvalError::MalformedRow { .. } => PipelineError::Parse(e.to_string()),
            other => PipelineError::Contract(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

pub const COMMANDS: [&str; 7] = ["ingest", "sentiment", "features", "train", "compare", "synth", "report"];

/// Keys each command understands.
pub fn known_keys(command: &str) -> &'static [&'static str] {
    match command {
        "ingest" => &[
            "ohlcv", "chat", "out", "columns", "delimiter", "salt", "bots", "drop-empty", "drop-attachment-only",
            "drop-bots", "drop-duplicates",
        ],
        "sentiment" => &["corpus", "provider", "scores", "lexicon", "strict", "out"],
        "features" => &["prices", "daily", "out"],
        "train" => {
            const K: [&str; 15] = [
                "prices", "daily", "out", "lookback", "train-frac", "scaler", "variant-features", "epochs", "lr",
                "hidden", "clip", "optimizer", "batch", "variant", "seed",
            ];
            &K
        }
        "compare" => {
            const K: [&str; 14] = [
                "prices", "daily", "out", "lookback", "train-frac", "scaler", "variant-features", "epochs", "lr",
                "hidden", "clip", "optimizer", "batch", "seeds",
            ];
            &K
        }
        "synth" => &["days", "seed", "beta", "noise-sd", "sentiment-sd", "start", "out"],
        "report" => &["comparison", "out"],
        _ => &[],
    }
}

/// Resolved string settings for one command.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('_', "-")
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Usage(format!("config line {}: expected key=value", i + 1)))?;
            s.set(k, v.trim());
        }
        Ok(s)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_config(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(normalize_key(key), value.into());
    }

    /// `other` wins on conflicts.
    pub fn overlay(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| PipelineError::Usage(format!("missing required setting `{key}`")))
    }

    fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|e| PipelineError::Usage(format!("bad value `{v}` for `{key}`: {e}"))),
        }
    }

    fn input_file(&self, key: &str) -> Result<PathBuf> {
        let p = PathBuf::from(self.require(key)?);
        if !p.is_file() {
            return Err(PipelineError::Usage(format!("`{key}`: no such file {}", p.display())));
        }
        Ok(p)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let p = PathBuf::from(self.require("out")?);
        fs::create_dir_all(&p)?;
        Ok(p)
    }

    pub fn check_keys(&self, command: &str) -> Result<()> {
        let known = known_keys(command);
        match self.values.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(PipelineError::Usage(format!("unknown setting `{k}` for `{command}`"))),
            None => Ok(()),
        }
    }

    pub fn to_config_text(&self) -> String {
        self.values.iter().fold(String::new(), |mut out, (k, v)| {
            let _ = writeln!(out, "{k} = {v}");
            out
        })
    }
}

fn write_effective(dir: &Path, command: &str, s: &Settings) -> Result<()> {
    fs::write(dir.join(format!("{command}.effective.conf")), s.to_config_text())?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(PipelineError::Usage(format!("bad boolean `{v}` for `{key}`"))),
    }
}

fn flag(s: &Settings, key: &str, default: bool) -> Result<bool> {
    s.get(key).map_or(Ok(default), |v| parse_bool(key, v))
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// `1..8`, `1,3,5` or a mix such as `1..4,9`; ranges are inclusive.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || PipelineError::Usage(format!("bad seed list `{spec}`"));
    let mut seeds = Vec::new();
    for part in list(spec) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if seeds.is_empty() || sorted.len() != seeds.len() {
        return Err(PipelineError::Usage(format!("seed list `{spec}` must be non-empty and distinct")));
    }
    Ok(seeds)
}

/// Dispatches by command name; returns the text printed on stdout.
pub fn run(command: &str, settings: &Settings) -> Result<String> {
    settings.check_keys(command)?;
    match command {
        "ingest" => cmd_ingest(settings),
        "sentiment" => cmd_sentiment(settings),
        "features" => cmd_features(settings),
        "train" => cmd_train(settings),
        "compare" => cmd_compare(settings),
        "synth" => cmd_synth(settings),
        "report" => cmd_report(settings),
        other => Err(PipelineError::Usage(format!("unknown command `{other}`"))),
    }
}

pub fn cmd_ingest(s: &Settings) -> Result<String> {
    let ohlcv = s.input_file("ohlcv")?;
    let chats: Vec<PathBuf> = list(s.require("chat")?).map(PathBuf::from).collect();
    if let Some(p) = chats.iter().find(|p| !p.is_file()) {
        return Err(PipelineError::Usage(format!("`chat`: no such file {}", p.display())));
    }
    let out = s.out_dir()?;

    let delimiter = match s.get("delimiter").unwrap_or(",") {
        "tab" | "\\t" => b'\t',
        d if d.len() == 1 => d.as_bytes()[0],
        d => return Err(PipelineError::Usage(format!("delimiter must be one byte, got `{d}`"))),
    };
    let columns = ColumnMap::default()
        .with_overrides(s.get("columns").unwrap_or(""))
        .map_err(PipelineError::Usage)?;
    let schema = CsvSchema { delimiter, columns };
    let prices = parse_ohlcv_csv(open(&ohlcv)?, &schema)
        .map_err(|e| with_file(e.into(), &ohlcv))?;

    let anon = Anonymizer::new(s.get("salt").unwrap_or(""));
    let mut parts = Vec::new();
    let mut log = String::new();
    for path in &chats {
        let part = parse_chat_export(open(path)?, &anon).map_err(|e| with_file(e.into(), path))?;
        for d in &part.diagnostics {
            let _ = writeln!(log, "{}: {d}", path.display());
        }
        parts.push(part);
    }
    let merged = merge_exports(parts);
    let rules = FilterConfig {
        drop_empty: flag(s, "drop-empty", true)?,
        drop_attachment_only: flag(s, "drop-attachment-only", true)?,
        drop_bots: flag(s, "drop-bots", true)?,
        drop_duplicates: flag(s, "drop-duplicates", true)?,
        ..FilterConfig::default()
    }
    .with_raw_bots(&anon, list(s.get("bots").unwrap_or("")));
    let parsed = merged.messages.len();
    let corpus = filter_corpus(merged.messages, &rules);
    let st = corpus.stats();

    write_price_csv(&prices, create(&out.join("prices.canon.csv"))?)?;
    write_corpus_csv(corpus.messages(), create(&out.join("corpus.csv"))?)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "price days: {} ({} to {})", prices.len(), prices.first_date(), prices.last_date());
    let _ = writeln!(summary, "messages parsed: {parsed}");
    let _ = writeln!(summary, "rows rejected: {}", merged.diagnostics.len());
    let _ = writeln!(summary, "kept: {}", st.kept);
    let _ = writeln!(summary, "dropped empty: {}", st.dropped_empty);
    let _ = writeln!(summary, "dropped attachment-only: {}", st.dropped_attachment_only);
    let _ = writeln!(summary, "dropped bot: {}", st.dropped_bot);
    let _ = writeln!(summary, "dropped duplicate: {}", st.dropped_duplicate);
    fs::write(out.join("ingest.log"), format!("{summary}{log}"))?;
    write_effective(&out, "ingest", s)?;
    Ok(summary)
}

fn with_file(e: PipelineError, path: &Path) -> PipelineError {
    let tag = |m: String| format!("{}: {m}", path.display());
    match e {
        PipelineError::Parse(m) => PipelineError::Parse(tag(m)),
        PipelineError::Contract(m) => PipelineError::Contract(tag(m)),
        other => other,
    }
}

pub fn cmd_sentiment(s: &Settings) -> Result<String> {
    let corpus_path = s.input_file("corpus")?;
    let corpus = read_corpus_csv(open(&corpus_path)?).map_err(|e| with_file(e.into(), &corpus_path))?;
    let strict = flag(s, "strict", false)?;
    let provider = s.get("provider").unwrap_or("lexicon");
    let mut report = String::new();

    let sents = match provider {
        "lexicon" => {
            let lexicon = match s.get("lexicon") {
                Some(_) => Lexicon::from_reader(open(&s.input_file("lexicon")?)?)?,
                None => Lexicon::builtin(),
            };
            score_corpus(&LexiconProvider { lexicon }, &corpus)
        }
        "interchange" => {
            let path = s.input_file("scores")?;
            let loaded = load_interchange_scores(open(&path)?, &corpus).map_err(|e| with_file(e.into(), &path))?;
            let _ = writeln!(report, "unmatched score rows: {}", loaded.unmatched.len());
            let _ = writeln!(report, "unscored messages: {}", loaded.missing.len());
            let _ = writeln!(report, "duplicate score rows: {}", loaded.duplicate_rows);
            if strict {
                loaded.into_complete()?
            } else {
                loaded.sentiments
            }
        }
        other => return Err(PipelineError::Usage(format!("unknown provider `{other}` (lexicon|interchange)"))),
    };
    let out = s.out_dir()?;
    let daily = aggregate_daily(&sents, &corpus)?;
    write_interchange_scores(&sents, &corpus, create(&out.join("scores.csv"))?)?;
    write_daily_csv(&daily, create(&out.join("sentiment_daily.csv"))?)?;
    let dist = distribution(&sents)?;
    let _ = writeln!(report, "scored messages: {}", dist.total);
    let _ = writeln!(report, "days: {}", daily.len());
    let _ = writeln!(report, "{dist}");
    write_effective(&out, "sentiment", s)?;
    Ok(report)
}

fn load_inputs(s: &Settings) -> Result<(PriceSeries, Vec<crate::sentiment::DailySentiment>)> {
    let prices_path = s.input_file("prices")?;
    let prices = parse_ohlcv_csv(open(&prices_path)?, &CsvSchema::default()).map_err(|e| with_file(e.into(), &prices_path))?;
    let daily = match s.get("daily") {
        Some(_) => {
            let p = s.input_file("daily")?;
            read_daily_csv(open(&p)?).map_err(|e| with_file(e.into(), &p))?
        }
        None => Vec::new(),
    };
    Ok((prices, daily))
}

pub fn cmd_features(s: &Settings) -> Result<String> {
    let (prices, daily) = load_inputs(s)?;
    let out = s.out_dir()?;
    let alignment = align(&prices, &daily)?;
    write_feature_csv(&alignment.rows, create(&out.join("features.csv"))?)?;
    write_effective(&out, "features", s)?;
    Ok(format!(
        "rows: {}\ndays without sentiment (S=0): {}\nsentiment days outside price span: {}\n",
        alignment.rows.len(),
        alignment.filled,
        alignment.dropped
    ))
}

/// Builds the experiment config from settings over the defaults.
pub fn experiment_config(s: &Settings) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    cfg.lookback = s.parse_or("lookback", cfg.lookback)?;
    cfg.train_frac = s.parse_or("train-frac", cfg.train_frac)?;
    cfg.scaler = s.parse_or::<ScalerMode>("scaler", cfg.scaler)?;
    if let Some(v) = s.get("variant-features") {
        cfg.multimodal_features = FeatureSet::from_str(v)?;
    }
    let t = &mut cfg.train;
    t.epochs = s.parse_or("epochs", t.epochs)?;
    t.learning_rate = s.parse_or("lr", t.learning_rate)?;
    t.hidden_dim = s.parse_or("hidden", t.hidden_dim)?;
    t.clip = s.parse_or("clip", t.clip)?;
    t.optimizer = match s.get("optimizer").unwrap_or("adam") {
        "adam" => Optimizer::default(),
        "sgd" => Optimizer::Sgd,
        other => return Err(PipelineError::Usage(format!("unknown optimizer `{other}` (adam|sgd)"))),
    };
    t.batch = match s.get("batch").unwrap_or("full") {
        "full" => BatchMode::Full,
        n => BatchMode::Mini(
            n.parse()
                .map_err(|_| PipelineError::Usage(format!("batch must be `full` or a size, got `{n}`")))?,
        ),
    };
    t.validate()?;
    Ok(cfg)
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut w = create(path)?;
    ck.write(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_train(s: &Settings) -> Result<String> {
    let variant: Variant = s.parse_or("variant", Variant::Multimodal)?;
    let seed: u64 = s.parse_or("seed", 1)?;
    let cfg = experiment_config(s)?.with_seed(seed);
    let (prices, daily) = load_inputs(s)?;
    let out = s.out_dir()?;
    let data = ExperimentData::new(&prices, daily)?;
    let run = run_experiment(&data, &cfg, variant)?;
    let stem = format!("run_{variant}_{seed}");
    fs::write(out.join(format!("{stem}.json")), run.report.to_json())?;
    write_checkpoint(&out.join(format!("{stem}.ckpt")), &run.checkpoint)?;
    emit_plot_series(&run.report, &data.daily, &out)?;
    write_effective(&out, "train", s)?;
    let m = run.report.metrics;
    Ok(format!(
        "{variant} seed {seed}: mse {} mae {} r2 {}\n",
        m.mse,
        m.mae,
        m.r2.map_or("n/a".to_string(), |v| v.to_string())
    ))
}

pub fn cmd_compare(s: &Settings) -> Result<String> {
    let seeds = parse_seeds(s.get("seeds").unwrap_or("1..8"))?;
    let cfg = experiment_config(s)?;
    let (prices, daily) = load_inputs(s)?;
    let out = s.out_dir()?;
    let data = ExperimentData::new(&prices, daily)?;
    let outcome = compare_runs(&data, &cfg, &seeds)?;
    let table = outcome.report.table();

    write_comparison_csv(&table, create(&out.join("comparison.csv"))?)?;
    let text = render_comparison_text(&table);
    fs::write(out.join("comparison.txt"), &text)?;
    let mut notice = String::new();
    for pair in &outcome.report.pairs {
        for r in [&pair.baseline, &pair.multimodal] {
            fs::write(out.join(format!("run_{}_{}.json", r.variant, r.seed)), r.to_json())?;
            let files = emit_plot_series(r, &data.daily, &out)?;
            if files.sentiment.is_none() && notice.is_empty() {
                notice.push_str("no daily sentiment given; sentiment_daily.csv not written\n");
            }
        }
    }
    for (variant, seed, ck) in &outcome.checkpoints {
        write_checkpoint(&out.join(format!("run_{variant}_{seed}.ckpt")), ck)?;
    }
    write_effective(&out, "compare", s)?;
    Ok(format!("{text}{notice}"))
}

pub fn cmd_synth(s: &Settings) -> Result<String> {
    let d = SynthConfig::default();
    let start = match s.get("start") {
        Some(v) => NaiveDate::parse_from_str(v.trim(), "%Y-%m-%d")
            .map_err(|e| PipelineError::Usage(format!("bad start date `{v}`: {e}")))?,
        None => d.start,
    };
    let cfg = SynthConfig {
        days: s.parse_or("days", d.days)?,
        seed: s.parse_or("seed", d.seed)?,
        beta: s.parse_or("beta", d.beta)?,
        noise_sd: s.parse_or("noise-sd", d.noise_sd)?,
        sentiment_sd: s.parse_or("sentiment-sd", d.sentiment_sd)?,
        start,
        ..d
    };
    let out = s.out_dir()?;
    let data = generate(&cfg)?;
    write_price_csv(&data.prices, create(&out.join("prices.canon.csv"))?)?;
    write_daily_csv(&data.daily, create(&out.join("sentiment_daily.csv"))?)?;
    write_effective(&out, "synth", s)?;
    Ok(format!(
        "{} days from {} (beta {}, noise sd {}, seed {})\n",
        cfg.days, cfg.start, cfg.beta, cfg.noise_sd, cfg.seed
    ))
}

pub fn cmd_report(s: &Settings) -> Result<String> {
    let path = s.input_file("comparison")?;
    let table = read_comparison_csv(open(&path)?).map_err(|e| with_file(e.into(), &path))?;
    let text = render_comparison_text(&table);
    if s.get("out").is_some() {
        let out = s.out_dir()?;
        fs::write(out.join("comparison.txt"), &text)?;
        write_effective(&out, "report", s)?;
    }
    Ok(text)
}
