//! Chat-export parsing, anonymization and message filtering.
//!
//! Exports are header-driven delimited files (the DiscordChatExporter CSV
//! layout works as-is). Author identifiers are replaced by a salted SHA-256
//! digest at parse time, so raw handles never reach the canonical corpus.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {0}: malformed timestamp")]
    MalformedTimestamp(u64),
    #[error("export contains no data rows")]
    EmptyFile,
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for CorpusError {
    fn from(e: csv::Error) -> Self {
        CorpusError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawMessage {
    pub timestamp: DateTime<Utc>,
    /// Anonymized author identifier.
    pub author_id: String,
    pub content: String,
    pub attachments: u32,
    pub reactions: u32,
}

impl RawMessage {
    pub fn day(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    /// Stable key used by the score interchange file.
    pub fn key(&self) -> MessageKey {
        MessageKey {
            timestamp: format_timestamp(&self.timestamp),
            author_hash: self.author_id.clone(),
            content_sha256: content_sha256(&self.content),
        }
    }
}

/// `(timestamp, author_hash, content_sha256)`; survives re-filtering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageKey {
    pub timestamp: String,
    pub author_hash: String,
    pub content_sha256: String,
}

impl std::fmt::Display for MessageKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.timestamp, self.author_hash, self.content_sha256)
    }
}

pub fn content_sha256(content: &str) -> String {
    hex::encode(Sha256::digest(content.as_bytes()))
}

/// Canonical timestamp rendering: RFC 3339, millisecond precision, `Z` suffix.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Accepts RFC 3339 / ISO-8601 (offset or naive-as-UTC) and the
/// `DD-MMM-YY hh:mm AM/PM` form some exporters emit.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    if let Ok(t) = DateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f%z") {
        return Some(t.with_timezone(&Utc));
    }
    const NAIVE: [&str; 6] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
        "%d-%b-%y %I:%M %p",
        "%d-%b-%Y %I:%M %p",
    ];
    NAIVE
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .map(|t| t.and_utc())
}

/// Salted one-way hash for author identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anonymizer {
    salt: String,
}

impl Anonymizer {
    pub fn new(salt: impl Into<String>) -> Self {
        Anonymizer { salt: salt.into() }
    }

    pub fn hash(&self, raw: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.salt.as_bytes());
        h.update([0u8]);
        h.update(raw.trim().as_bytes());
        hex::encode(&h.finalize()[..8])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowIssue {
    MalformedTimestamp(String),
    MissingAuthor,
}

/// A row that was excluded from the parse output, with its source line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostic {
    pub line: u64,
    pub issue: RowIssue,
}

impl std::fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.issue {
            RowIssue::MalformedTimestamp(raw) => {
                write!(f, "line {}: malformed timestamp `{raw}`", self.line)
            }
            RowIssue::MissingAuthor => write!(f, "line {}: empty author identifier", self.line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedExport {
    pub messages: Vec<RawMessage>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

fn normalize_header(h: &str) -> String {
    h.trim_start_matches('\u{feff}')
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

fn count_items(raw: &str, reactions: bool) -> u32 {
    let raw = raw.trim();
    if raw.is_empty() {
        return 0;
    }
    if let Ok(n) = raw.parse::<u32>() {
        return n;
    }
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            // "👍 (3)"
            if reactions {
                if let Some(open) = item.rfind('(') {
                    if let Some(n) = item[open + 1..].strip_suffix(')').and_then(|n| n.trim().parse().ok()) {
                        return n;
                    }
                }
            }
            1
        })
        .sum()
}

enum AuthorColumn {
    Hashed(usize),
    Raw(usize),
}

/// Parses one export. Unparseable rows are reported in the diagnostics and
/// excluded; the returned messages are sorted by timestamp (stable).
pub fn parse_chat_export<R: Read>(source: R, anonymizer: &Anonymizer) -> Result<ParsedExport, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let headers = match reader.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(CorpusError::EmptyFile),
        Err(e) => return Err(e.into()),
    };
    let names: Vec<String> = headers.iter().map(normalize_header).collect();
    let find = |candidates: &[&str]| candidates.iter().find_map(|c| names.iter().position(|n| n == c));

    let date_col = find(&["date", "timestamp", "datetime", "datetimeutc", "datetime"])
        .ok_or_else(|| CorpusError::MissingColumn("Date".into()))?;
    let author_col = if let Some(i) = find(&["authorhash"]) {
        AuthorColumn::Hashed(i)
    } else if let Some(i) = find(&["authorid", "userid", "author"]) {
        AuthorColumn::Raw(i)
    } else {
        return Err(CorpusError::MissingColumn("Author ID".into()));
    };
    let content_col = find(&["content", "message", "text"])
        .ok_or_else(|| CorpusError::MissingColumn("Content".into()))?;
    let attach_col = find(&["attachments"]);
    let react_col = find(&["reactions"]);

    let mut out = ParsedExport::default();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record?;
        rows += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| record.get(i).unwrap_or("");
        let raw_ts = cell(date_col);
        let Some(timestamp) = parse_timestamp(raw_ts) else {
            out.diagnostics.push(ParseDiagnostic {
                line,
                issue: RowIssue::MalformedTimestamp(raw_ts.to_string()),
            });
            continue;
        };
        let author_id = match author_col {
            AuthorColumn::Hashed(i) => cell(i).trim().to_string(),
            AuthorColumn::Raw(i) if cell(i).trim().is_empty() => String::new(),
            AuthorColumn::Raw(i) => anonymizer.hash(cell(i)),
        };
        if author_id.is_empty() {
            out.diagnostics.push(ParseDiagnostic {
                line,
                issue: RowIssue::MissingAuthor,
            });
            continue;
        }
        out.messages.push(RawMessage {
            timestamp,
            author_id,
            content: cell(content_col).to_string(),
            attachments: attach_col.map(|i| count_items(cell(i), false)).unwrap_or(0),
            reactions: react_col.map(|i| count_items(cell(i), true)).unwrap_or(0),
        });
    }
    if rows == 0 {
        return Err(CorpusError::EmptyFile);
    }
    out.messages.sort_by_key(|m| m.timestamp);
    Ok(out)
}

/// Merges several parsed exports of the same channel into one timeline.
pub fn merge_exports(parts: Vec<ParsedExport>) -> ParsedExport {
    let mut merged = ParsedExport::default();
    for part in parts {
        merged.messages.extend(part.messages);
        merged.diagnostics.extend(part.diagnostics);
    }
    merged.messages.sort_by_key(|m| m.timestamp);
    merged
}

/// Why a message was dropped. Rules are evaluated in declaration order and
/// the first match wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    Empty,
    AttachmentOnly,
    Bot,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterConfig {
    pub drop_empty: bool,
    pub drop_attachment_only: bool,
    pub drop_bots: bool,
    pub drop_duplicates: bool,
    /// Anonymized author identifiers treated as bots.
    pub bots: HashSet<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            drop_empty: true,
            drop_attachment_only: true,
            drop_bots: true,
            drop_duplicates: true,
            bots: HashSet::new(),
        }
    }
}

impl FilterConfig {
    /// Adds bots given by raw handle; they are hashed with the same salt
    /// used for parsing.
    pub fn with_raw_bots<'a>(mut self, anonymizer: &Anonymizer, raw: impl IntoIterator<Item = &'a str>) -> Self {
        self.bots.extend(raw.into_iter().map(|r| anonymizer.hash(r)));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorpusStats {
    pub total: usize,
    pub kept: usize,
    pub dropped_empty: usize,
    pub dropped_attachment_only: usize,
    pub dropped_bot: usize,
    pub dropped_duplicate: usize,
}

impl CorpusStats {
    pub fn dropped(&self) -> usize {
        self.dropped_empty + self.dropped_attachment_only + self.dropped_bot + self.dropped_duplicate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    messages: Vec<RawMessage>,
    stats: CorpusStats,
}

impl Corpus {
    /// Wraps an already-filtered message list (e.g. a canonical corpus file).
    pub fn from_messages(mut messages: Vec<RawMessage>) -> Self {
        messages.sort_by_key(|m| m.timestamp);
        let n = messages.len();
        Corpus {
            messages,
            stats: CorpusStats {
                total: n,
                kept: n,
                ..Default::default()
            },
        }
    }

    pub fn messages(&self) -> &[RawMessage] {
        &self.messages
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn into_messages(self) -> Vec<RawMessage> {
        self.messages
    }
}

fn drop_reason(
    m: &RawMessage,
    rules: &FilterConfig,
    seen: &mut HashSet<(DateTime<Utc>, String, String)>,
) -> Option<DropReason> {
    let blank = m.content.trim().is_empty();
    if rules.drop_empty && blank && m.attachments == 0 {
        return Some(DropReason::Empty);
    }
    if rules.drop_attachment_only && blank && m.attachments > 0 {
        return Some(DropReason::AttachmentOnly);
    }
    if rules.drop_bots && rules.bots.contains(&m.author_id) {
        return Some(DropReason::Bot);
    }
    if rules.drop_duplicates && !seen.insert((m.timestamp, m.author_id.clone(), m.content.clone())) {
        return Some(DropReason::Duplicate);
    }
    None
}

/// Applies the filter rules. The first occurrence of a duplicate triple is
/// kept. Survivors keep their relative order.
pub fn filter_corpus(mut messages: Vec<RawMessage>, rules: &FilterConfig) -> Corpus {
    messages.sort_by_key(|m| m.timestamp);
    let mut stats = CorpusStats {
        total: messages.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(messages.len());
    for m in messages {
        match drop_reason(&m, rules, &mut seen) {
            None => kept.push(m),
            Some(DropReason::Empty) => stats.dropped_empty += 1,
            Some(DropReason::AttachmentOnly) => stats.dropped_attachment_only += 1,
            Some(DropReason::Bot) => stats.dropped_bot += 1,
            Some(DropReason::Duplicate) => stats.dropped_duplicate += 1,
        }
    }
    stats.kept = kept.len();
    Corpus { messages: kept, stats }
}

/// Canonical corpus: `timestamp,author_hash,content,attachments,reactions`.
pub fn write_corpus_csv<W: Write>(messages: &[RawMessage], sink: W) -> Result<(), CorpusError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["timestamp", "author_hash", "content", "attachments", "reactions"])?;
    for m in messages {
        w.write_record([
            format_timestamp(&m.timestamp),
            m.author_id.clone(),
            m.content.clone(),
            m.attachments.to_string(),
            m.reactions.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CorpusError::Csv(e.to_string()))?;
    Ok(())
}

/// Reads a canonical corpus; any malformed row is an error. A header-only
/// file is an empty corpus.
pub fn read_corpus_csv<R: Read>(mut source: R) -> Result<Corpus, CorpusError> {
    let mut text = Vec::new();
    source.read_to_end(&mut text).map_err(|e| CorpusError::Csv(e.to_string()))?;
    // Author hashes are taken verbatim from the `author_hash` column.
    let parsed = match parse_chat_export(text.as_slice(), &Anonymizer::new("")) {
        Err(CorpusError::EmptyFile) if text.iter().any(|b| !b.is_ascii_whitespace()) => ParsedExport::default(),
        other => other?,
    };
    if let Some(d) = parsed.diagnostics.first() {
        return Err(match d.issue {
            RowIssue::MalformedTimestamp(_) => CorpusError::MalformedTimestamp(d.line),
            RowIssue::MissingAuthor => CorpusError::MalformedRow {
                line: d.line,
                reason: d.to_string(),
            },
        });
    }
    Ok(Corpus::from_messages(parsed.messages))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(ts: &str, author: &str, content: &str, attachments: u32) -> RawMessage {
        RawMessage {
            timestamp: parse_timestamp(ts).unwrap(),
            author_id: author.into(),
            content: content.into(),
            attachments,
            reactions: 0,
        }
    }

    #[test]
    fn timestamp_formats() {
        let a = parse_timestamp("2023-06-15T15:04:00+00:00").unwrap();
        let b = parse_timestamp("15-Jun-23 03:04 PM").unwrap();
        let c = parse_timestamp("2023-06-15 15:04:00").unwrap();
        let d = parse_timestamp("2023-06-15T17:04:00.000+02:00").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, d);
        assert_eq!(format_timestamp(&a), "2023-06-15T15:04:00.000Z");
        assert!(parse_timestamp("").is_none());
        assert!(parse_timestamp("yesterday").is_none());
    }

    #[test]
    fn discord_export_layout() {
        let csv = "AuthorID,Author,Date,Content,Attachments,Reactions\n\
                   123,alice,2023-06-15T10:00:00+00:00,gm,,\"👍 (3),🎉 (1)\"\n\
                   456,bob,,no date,,\n\
                   123,alice,2023-06-14T09:00:00+00:00,,https://a.png,\n";
        let anon = Anonymizer::new("salt");
        let parsed = parse_chat_export(csv.as_bytes(), &anon).unwrap();
        assert_eq!(parsed.messages.len(), 2);
        assert_eq!(parsed.diagnostics.len(), 1);
        assert_eq!(parsed.diagnostics[0].line, 3);
        assert!(matches!(parsed.diagnostics[0].issue, RowIssue::MalformedTimestamp(_)));
        // sorted by time
        assert_eq!(parsed.messages[0].attachments, 1);
        assert_eq!(parsed.messages[1].reactions, 4);
        assert_eq!(parsed.messages[0].author_id, anon.hash("123"));
        assert!(!parsed.messages.iter().any(|m| m.author_id.contains("123")));
    }

    #[test]
    fn salt_changes_hash() {
        assert_ne!(Anonymizer::new("a").hash("x"), Anonymizer::new("b").hash("x"));
        assert_eq!(Anonymizer::new("a").hash("x"), Anonymizer::new("a").hash(" x "));
    }

    #[test]
    fn missing_columns_and_empty_file() {
        let anon = Anonymizer::new("");
        assert_eq!(
            parse_chat_export("Author,Date\nx,2023-01-01\n".as_bytes(), &anon),
            Err(CorpusError::MissingColumn("Content".into()))
        );
        assert_eq!(parse_chat_export("".as_bytes(), &anon), Err(CorpusError::EmptyFile));
        assert_eq!(
            parse_chat_export("Date,Author,Content\n".as_bytes(), &anon),
            Err(CorpusError::EmptyFile)
        );
    }

    #[test]
    fn concatenated_exports_merge_sorted() {
        let anon = Anonymizer::new("s");
        let a = "Date,AuthorID,Content\n2023-06-15T12:00:00Z,1,b\n2023-06-15T14:00:00Z,1,d\n";
        let b = "Date,AuthorID,Content\n2023-06-15T11:00:00Z,2,a\n2023-06-15T13:00:00Z,2,c\n";
        let merged = merge_exports(vec![
            parse_chat_export(a.as_bytes(), &anon).unwrap(),
            parse_chat_export(b.as_bytes(), &anon).unwrap(),
        ]);
        let order: Vec<_> = merged.messages.iter().map(|m| m.content.as_str()).collect();
        assert_eq!(order, ["a", "b", "c", "d"]);
    }

    #[test]
    fn whitespace_only_is_empty() {
        let c = filter_corpus(vec![msg("2023-06-15T10:00:00Z", "a", "  \t", 0)], &FilterConfig::default());
        assert_eq!(c.len(), 0);
        assert_eq!(c.stats().dropped_empty, 1);
        assert_eq!(c.stats().total, 1);
    }

    #[test]
    fn duplicate_triple_dropped_once() {
        let m = msg("2023-06-15T10:00:00Z", "a", "hello", 0);
        let c = filter_corpus(vec![m.clone(), m], &FilterConfig::default());
        assert_eq!(c.len(), 1);
        assert_eq!(c.stats().dropped_duplicate, 1);
    }

    #[test]
    fn rule_order_and_toggles() {
        let anon = Anonymizer::new("s");
        let bot = anon.hash("bot");
        let msgs = vec![
            msg("2023-06-15T10:00:00Z", &bot, "", 2),
            msg("2023-06-15T10:01:00Z", &bot, "", 0),
            msg("2023-06-15T10:02:00Z", &bot, "beep", 0),
            msg("2023-06-15T10:03:00Z", "human", "hi", 0),
        ];
        let rules = FilterConfig::default().with_raw_bots(&anon, ["bot"]);
        let c = filter_corpus(msgs.clone(), &rules);
        let s = c.stats();
        assert_eq!((s.dropped_attachment_only, s.dropped_empty, s.dropped_bot, s.kept), (1, 1, 1, 1));
        assert_eq!(s.kept + s.dropped(), s.total);

        let lenient = FilterConfig {
            drop_attachment_only: false,
            drop_bots: false,
            ..rules
        };
        assert_eq!(filter_corpus(msgs, &lenient).len(), 3);
    }

    #[test]
    fn canonical_round_trip() {
        let msgs = vec![
            msg("2023-06-15T10:00:00.250Z", "abc", "quote \"this\", ok\nnewline", 1),
            msg("2023-06-16T10:00:00Z", "def", "plain", 0),
        ];
        let mut buf = Vec::new();
        write_corpus_csv(&msgs, &mut buf).unwrap();
        let back = read_corpus_csv(buf.as_slice()).unwrap();
        assert_eq!(back.messages(), msgs.as_slice());
    }
}
