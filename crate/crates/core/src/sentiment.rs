//! Per-message sentiment, daily confidence-weighted aggregation and the
//! three-class discretization of daily scores.
//!
//! Scores enter the pipeline either from an interchange file written by an
//! external transformer classifier or from the built-in lexicon provider.
//!
//! Daily score: `S_t = (1/n_t) * sum_i s_i * gamma_i` over the messages of
//! UTC day `t`. Days without messages get `S_t = 0` (neutral).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use thiserror::Error;

use crate::corpus::{Corpus, MessageKey};

#[derive(Debug, Error, PartialEq)]
pub enum SentimentError {
    #[error("score row does not match any corpus message: {0}")]
    UnmatchedScore(MessageKey),
    #[error("no score for corpus message: {0}")]
    MissingScore(MessageKey),
    #[error("line {line}: label `{label}` is not one of negative/neutral/positive")]
    LabelOutOfRange { line: u64, label: String },
    #[error("line {line}: confidence {value} outside [0, 1]")]
    ConfidenceOutOfRange { line: u64, value: String },
    #[error("sentiment references message {0}, which is not in the corpus")]
    DanglingReference(usize),
    #[error("daily score {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("no sentiments given")]
    EmptyInput,
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for SentimentError {
    fn from(e: csv::Error) -> Self {
        SentimentError::Csv(e.to_string())
    }
}

/// Message polarity `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Neutral,
    Positive,
}

impl Label {
    /// `-1`, `0` or `+1`.
    pub fn value(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Neutral => 0.0,
            Label::Positive => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Negative => "negative",
            Label::Neutral => "neutral",
            Label::Positive => "positive",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "negative" => Ok(Label::Negative),
            "neutral" => Ok(Label::Neutral),
            "positive" => Ok(Label::Positive),
            other => Err(other.to_string()),
        }
    }
}

/// Daily class; the same three names as [`Label`] but with threshold
/// semantics.
pub type SentimentClass = Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageSentiment {
    /// Index into [`Corpus::messages`].
    pub index: usize,
    pub label: Label,
    /// Confidence of the chosen label, in `[0, 1]`.
    pub gamma: f64,
}

/// Batch classifier: texts in, `(label, confidence)` out, same length.
pub trait SentimentProvider {
    fn classify(&self, texts: &[&str]) -> Vec<(Label, f64)>;
}

/// Runs a provider over every message of the corpus.
pub fn score_corpus<P: SentimentProvider + ?Sized>(provider: &P, corpus: &Corpus) -> Vec<MessageSentiment> {
    let texts: Vec<&str> = corpus.messages().iter().map(|m| m.content.as_str()).collect();
    let verdicts = provider.classify(&texts);
    assert_eq!(verdicts.len(), texts.len(), "provider returned a short batch");
    verdicts
        .into_iter()
        .enumerate()
        .map(|(index, (label, gamma))| MessageSentiment { index, label, gamma })
        .collect()
}

/// Confidence assigned by the lexicon provider to neutral verdicts.
pub const LEXICON_NEUTRAL_CONFIDENCE: f64 = 0.5;

/// Word -> polarity map.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    words: HashMap<String, f64>,
}

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Result<Self, SentimentError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let words: HashMap<String, f64> = entries
            .into_iter()
            .map(|(w, p)| (w.as_ref().to_lowercase(), p))
            .collect();
        if words.is_empty() {
            return Err(SentimentError::EmptyLexicon);
        }
        Ok(Lexicon { words })
    }

    /// Reads `word,polarity` lines; blank lines and `#` comments are skipped.
    pub fn from_reader<R: Read>(source: R) -> Result<Self, SentimentError> {
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(source).lines().enumerate() {
            let line = line.map_err(|e| SentimentError::Csv(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = || SentimentError::MalformedRow {
                line: i as u64 + 1,
                reason: format!("expected word,polarity: `{line}`"),
            };
            let (word, pol) = line.split_once(',').ok_or_else(malformed)?;
            let pol: f64 = pol.trim().parse().map_err(|_| malformed())?;
            entries.push((word.trim().to_string(), pol));
        }
        Lexicon::new(entries)
    }

    /// A small community-chat polarity list.
    pub fn builtin() -> Self {
        const POSITIVE: &[&str] = &[
            "good", "great", "love", "awesome", "amazing", "nice", "cool", "excited", "exciting", "bullish",
            "moon", "pump", "happy", "thanks", "thank", "beautiful", "fun", "best", "win", "wow", "fantastic",
            "congrats", "gm", "welcome", "like", "enjoy", "helpful", "up", "gain", "gains", "fixed", "works",
        ];
        const NEGATIVE: &[&str] = &[
            "bad", "hate", "terrible", "awful", "scam", "bug", "buggy", "broken", "crash", "crashed", "lag",
            "laggy", "mess", "bearish", "dump", "down", "sad", "angry", "worst", "fail", "failed", "error",
            "issue", "problem", "stuck", "slow", "rug", "lost", "loss", "dead", "annoying", "wrong",
        ];
        Lexicon::new(
            POSITIVE
                .iter()
                .map(|w| (*w, 1.0))
                .chain(NEGATIVE.iter().map(|w| (*w, -1.0))),
        )
        .expect("builtin lexicon is non-empty")
    }

    pub fn polarity(&self, token: &str) -> Option<f64> {
        self.words.get(token).copied()
    }
}

/// Lowercase tokens split on non-alphanumerics.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// `s = sign(sum of polarities)`; `gamma = min(1, |sum| / max(1, tokens))`
/// for a non-neutral verdict, else the fixed neutral confidence.
pub fn lexicon_classify(text: &str, lexicon: &Lexicon) -> (Label, f64) {
    let tokens = tokenize(text);
    let sum: f64 = tokens.iter().filter_map(|t| lexicon.polarity(t)).sum();
    if sum == 0.0 {
        return (Label::Neutral, LEXICON_NEUTRAL_CONFIDENCE);
    }
    let label = if sum > 0.0 { Label::Positive } else { Label::Negative };
    let gamma = (sum.abs() / (tokens.len().max(1) as f64)).min(1.0);
    (label, gamma)
}

pub struct LexiconProvider {
    pub lexicon: Lexicon,
}

impl SentimentProvider for LexiconProvider {
    fn classify(&self, texts: &[&str]) -> Vec<(Label, f64)> {
        texts.iter().map(|t| lexicon_classify(t, &self.lexicon)).collect()
    }
}

/// Result of matching an interchange file against a corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterchangeScores {
    /// Sentiments for every matched message, ordered by message index.
    pub sentiments: Vec<MessageSentiment>,
    /// Score rows whose key matches no message.
    pub unmatched: Vec<MessageKey>,
    /// Messages that received no score.
    pub missing: Vec<MessageKey>,
    /// Score rows repeating a key that was already scored (first row wins).
    pub duplicate_rows: usize,
}

impl InterchangeScores {
    pub fn is_complete(&self) -> bool {
        self.unmatched.is_empty() && self.missing.is_empty()
    }

    pub fn diagnostics(&self) -> usize {
        self.unmatched.len() + self.missing.len() + self.duplicate_rows
    }

    /// Fails on the first unmatched row or unscored message.
    pub fn into_complete(self) -> Result<Vec<MessageSentiment>, SentimentError> {
        if let Some(k) = self.unmatched.into_iter().next() {
            return Err(SentimentError::UnmatchedScore(k));
        }
        if let Some(k) = self.missing.into_iter().next() {
            return Err(SentimentError::MissingScore(k));
        }
        Ok(self.sentiments)
    }
}

const INTERCHANGE_HEADER: [&str; 5] = ["timestamp", "author_hash", "content_sha256", "label", "score"];

/// Reads an interchange file (`timestamp,author_hash,content_sha256,label,score`).
///
/// Lines starting with `#` are comments. Label and confidence violations are
/// hard errors; key mismatches are collected in the result.
pub fn load_interchange_scores<R: Read>(source: R, corpus: &Corpus) -> Result<InterchangeScores, SentimentError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(INTERCHANGE_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SentimentError::MissingColumn(name.into()))?;
    }

    let mut by_key: HashMap<MessageKey, Vec<usize>> = HashMap::new();
    for (i, m) in corpus.messages().iter().enumerate() {
        by_key.entry(m.key()).or_default().push(i);
    }

    let mut assigned: Vec<Option<(Label, f64)>> = vec![None; corpus.len()];
    let mut out = InterchangeScores::default();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| record.get(idx[i]).unwrap_or("");
        let label: Label = cell(3).parse().map_err(|label| SentimentError::LabelOutOfRange { line, label })?;
        let raw_score = cell(4);
        let gamma: f64 = raw_score
            .parse()
            .ok()
            .filter(|g: &f64| (0.0..=1.0).contains(g))
            .ok_or_else(|| SentimentError::ConfidenceOutOfRange {
                line,
                value: raw_score.to_string(),
            })?;
        let key = MessageKey {
            timestamp: cell(0).to_string(),
            author_hash: cell(1).to_string(),
            content_sha256: cell(2).to_ascii_lowercase(),
        };
        match by_key.get(&key) {
            None => out.unmatched.push(key),
            Some(indices) => {
                if assigned[indices[0]].is_some() {
                    out.duplicate_rows += 1;
                    continue;
                }
                for &i in indices {
                    assigned[i] = Some((label, gamma));
                }
            }
        }
    }
    for (index, slot) in assigned.into_iter().enumerate() {
        match slot {
            Some((label, gamma)) => out.sentiments.push(MessageSentiment { index, label, gamma }),
            None => out.missing.push(corpus.messages()[index].key()),
        }
    }
    Ok(out)
}

/// Writes sentiments in the interchange format, one row per sentiment.
pub fn write_interchange_scores<W: Write>(
    sents: &[MessageSentiment],
    corpus: &Corpus,
    sink: W,
) -> Result<(), SentimentError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(INTERCHANGE_HEADER)?;
    for s in sents {
        let m = corpus.messages().get(s.index).ok_or(SentimentError::DanglingReference(s.index))?;
        let key = m.key();
        w.write_record([
            key.timestamp,
            key.author_hash,
            key.content_sha256,
            s.label.to_string(),
            s.gamma.to_string(),
        ])?;
    }
    w.flush().map_err(|e| SentimentError::Csv(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailySentiment {
    pub date: NaiveDate,
    pub score: f64,
    pub n: usize,
    pub klass: SentimentClass,
}

impl DailySentiment {
    /// The fill value for a day without messages.
    pub fn empty(date: NaiveDate) -> Self {
        DailySentiment {
            date,
            score: 0.0,
            n: 0,
            klass: Label::Neutral,
        }
    }
}

/// Negative on `[-1, -0.1)`, neutral on `[-0.1, 0.1]`, positive on `(0.1, 1]`.
pub fn discretize(score: f64) -> Result<SentimentClass, SentimentError> {
    if !(-1.0..=1.0).contains(&score) {
        return Err(SentimentError::OutOfRange(score));
    }
    Ok(if score < -0.1 {
        Label::Negative
    } else if score > 0.1 {
        Label::Positive
    } else {
        Label::Neutral
    })
}

/// One entry per UTC day from the first to the last corpus message.
pub fn aggregate_daily(sents: &[MessageSentiment], corpus: &Corpus) -> Result<Vec<DailySentiment>, SentimentError> {
    let msgs = corpus.messages();
    let (Some(first), Some(last)) = (msgs.first(), msgs.last()) else {
        return Ok(Vec::new());
    };
    let mut buckets: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for s in sents {
        let m = msgs.get(s.index).ok_or(SentimentError::DanglingReference(s.index))?;
        let slot = buckets.entry(m.day()).or_insert((0.0, 0));
        slot.0 += s.label.value() * s.gamma;
        slot.1 += 1;
    }

    let (start, end) = (first.day(), last.day());
    let mut out = Vec::with_capacity((end - start).num_days() as usize + 1);
    let mut day = start;
    while day <= end {
        out.push(match buckets.get(&day) {
            Some(&(sum, n)) if n > 0 => {
                let score = sum / n as f64;
                DailySentiment {
                    date: day,
                    score,
                    n,
                    klass: discretize(score)?,
                }
            }
            _ => DailySentiment::empty(day),
        });
        day += Duration::days(1);
    }
    Ok(out)
}

/// Message-level label shares, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
    pub total: usize,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "positive: {:.2}%", self.positive)?;
        writeln!(f, "neutral: {:.2}%", self.neutral)?;
        write!(f, "negative: {:.2}%", self.negative)
    }
}

pub fn distribution(sents: &[MessageSentiment]) -> Result<Distribution, SentimentError> {
    if sents.is_empty() {
        return Err(SentimentError::EmptyInput);
    }
    let mut counts = [0usize; 3];
    for s in sents {
        counts[s.label as usize] += 1;
    }
    let pct = |c: usize| 100.0 * c as f64 / sents.len() as f64;
    Ok(Distribution {
        negative: pct(counts[Label::Negative as usize]),
        neutral: pct(counts[Label::Neutral as usize]),
        positive: pct(counts[Label::Positive as usize]),
        total: sents.len(),
    })
}

/// `date,score,n,klass`.
pub fn write_daily_csv<W: Write>(daily: &[DailySentiment], sink: W) -> Result<(), SentimentError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["date", "score", "n", "klass"])?;
    for d in daily {
        w.write_record([
            d.date.format("%Y-%m-%d").to_string(),
            d.score.to_string(),
            d.n.to_string(),
            d.klass.to_string(),
        ])?;
    }
    w.flush().map_err(|e| SentimentError::Csv(e.to_string()))?;
    Ok(())
}

/// Reads `date,score[,n[,klass]]`. The class is recomputed from the score.
pub fn read_daily_csv<R: Read>(source: R) -> Result<Vec<DailySentiment>, SentimentError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let date_col = col("date").ok_or_else(|| SentimentError::MissingColumn("date".into()))?;
    let score_col = col("score").ok_or_else(|| SentimentError::MissingColumn("score".into()))?;
    let n_col = col("n");

    let mut out: Vec<DailySentiment> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| SentimentError::MalformedRow { line, reason };
        let date = crate::market_data::parse_day(record.get(date_col).unwrap_or("")).map_err(malformed)?;
        let raw = record.get(score_col).unwrap_or("");
        let score: f64 = raw.parse().map_err(|_| malformed(format!("bad score `{raw}`")))?;
        let n = match n_col.and_then(|i| record.get(i)) {
            Some(v) if !v.is_empty() => v.parse().map_err(|_| malformed(format!("bad count `{v}`")))?,
            _ => 0,
        };
        let klass = discretize(score)?;
        out.push(DailySentiment { date, score, n, klass });
    }
    out.sort_by_key(|d| d.date);
    for pair in out.windows(2) {
        if pair[0].date == pair[1].date {
            return Err(SentimentError::MalformedRow {
                line: 0,
                reason: format!("duplicate date {}", pair[1].date),
            });
        }
    }
    Ok(out)
}
