//! Keyword-filtered stream monitoring: acquire tweet events, filter by the
//! keyword set, classify, emit alerts and aggregate statistics.
//!
//! Event sources are pluggable behind [`EventSource`]: a JSONL replay file
//! makes runs reproducible, and a live filtered-stream adapter ships as
//! documented plumbing in [`live`]. In replay, an alert's `emitted_at` is the
//! event's own timestamp so primary outputs stay byte-identical across runs.

pub mod live;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::exec;
use crate::pipeline::Pipeline;

/// One stream item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetEvent {
    #[serde(rename = "id")]
    pub event_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    #[serde(rename = "retweeted")]
    pub is_retweet: bool,
    #[serde(rename = "user")]
    pub author: String,
}

/// A related-classified event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub event_id: String,
    pub label: Label,
    pub score: f64,
    pub matched_keywords: Vec<String>,
    pub emitted_at: DateTime<Utc>,
    pub seq: u64,
}

/// Aggregate counters for a monitoring run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorStats {
    pub collected: u64,
    pub related: u64,
    pub unrelated: u64,
    pub retweets: u64,
    /// related / collected.
    pub harvest_rate_total: Option<f64>,
    /// related / unrelated; the headline harvest-rate convention.
    pub harvest_rate_vs_unrelated: Option<f64>,
    /// retweets / collected.
    pub retweet_fraction: Option<f64>,
    /// Malformed source lines skipped before classification.
    pub skipped_events: u64,
    /// True when the run aborted mid-stream.
    pub partial: bool,
}

#[derive(Default)]
struct Counters {
    collected: u64,
    related: u64,
    unrelated: u64,
    retweets: u64,
}

impl Counters {
    fn finalize(&self, skipped_events: u64, partial: bool) -> MonitorStats {
        let rate = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        MonitorStats {
            collected: self.collected,
            related: self.related,
            unrelated: self.unrelated,
            retweets: self.retweets,
            harvest_rate_total: rate(self.related, self.collected),
            harvest_rate_vs_unrelated: rate(self.related, self.unrelated),
            retweet_fraction: rate(self.retweets, self.collected),
            skipped_events,
            partial,
        }
    }
}

/// The default 11-keyword filter.
pub const DEFAULT_KEYWORDS: [&str; 11] = [
    "IoT",
    "iotvulnerability",
    "exploitIOT",
    "remote attacker",
    "cyberSecurity",
    "cyberAttack",
    "snapdragon",
    "IoTsecurity",
    "CVE",
    "affected device",
    "devices firmware",
];

/// Case-insensitive keyword matcher. Single-word keywords match at token
/// boundaries; multi-word keywords match as contiguous substrings after
/// collapsing interior whitespace.
#[derive(Debug, Clone)]
pub struct KeywordSet {
    keywords: Vec<String>,
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_gap = false;
    for ch in text.chars() {
        if ch.is_whitespace() {
            in_gap = true;
        } else {
            if in_gap && !out.is_empty() {
                out.push(' ');
            }
            in_gap = false;
            out.push(ch);
        }
    }
    out
}

impl KeywordSet {
    pub fn new(keywords: Vec<String>) -> Result<KeywordSet> {
        let keywords: Vec<String> = keywords
            .into_iter()
            .map(|k| k.trim().to_string())
            .filter(|k| !k.is_empty())
            .collect();
        if keywords.is_empty() {
            return Err(Error::EmptyInput("keyword list"));
        }
        Ok(KeywordSet { keywords })
    }

    pub fn default_list() -> &'static KeywordSet {
        static DEFAULT: OnceLock<KeywordSet> = OnceLock::new();
        DEFAULT.get_or_init(|| {
            KeywordSet::new(DEFAULT_KEYWORDS.iter().map(|k| k.to_string()).collect()).unwrap()
        })
    }

    /// One keyword per line, blank lines ignored.
    pub fn from_file(path: &Path) -> Result<KeywordSet> {
        let bytes = std::fs::read(path)?;
        KeywordSet::new(
            String::from_utf8_lossy(&bytes)
                .lines()
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    /// The keywords matching `text`, in list order; empty means no match.
    pub fn match_text(&self, text: &str) -> Vec<String> {
        let lower = text.to_lowercase();
        let normalized = collapse_whitespace(&lower);
        self.keywords
            .iter()
            .filter(|kw| {
                let kw_lower = kw.to_lowercase();
                if kw_lower.chars().any(char::is_whitespace) {
                    normalized.contains(&collapse_whitespace(&kw_lower))
                } else {
                    token_boundary_match(&lower, &kw_lower)
                }
            })
            .cloned()
            .collect()
    }

    pub fn is_match(&self, text: &str) -> bool {
        !self.match_text(text).is_empty()
    }
}

fn token_boundary_match(haystack: &str, needle: &str) -> bool {
    for (pos, _) in haystack.match_indices(needle) {
        let before_ok = haystack[..pos]
            .chars()
            .next_back()
            .map_or(true, |c| !c.is_alphanumeric());
        let after_ok = haystack[pos + needle.len()..]
            .chars()
            .next()
            .map_or(true, |c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return true;
        }
    }
    false
}

/// A sequential supply of tweet events.
pub trait EventSource {
    fn next_event(&mut self) -> Result<Option<TweetEvent>>;

    /// Malformed items dropped so far.
    fn skipped(&self) -> u64 {
        0
    }
}

/// File-backed JSONL event source; malformed lines are skipped and counted.
pub struct ReplaySource<R: BufRead> {
    reader: R,
    skipped: u64,
}

impl ReplaySource<BufReader<std::fs::File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(ReplaySource {
            reader: BufReader::new(file),
            skipped: 0,
        })
    }
}

impl<R: BufRead> ReplaySource<R> {
    pub fn from_reader(reader: R) -> Self {
        ReplaySource { reader, skipped: 0 }
    }
}

impl<R: BufRead> EventSource for ReplaySource<R> {
    fn next_event(&mut self) -> Result<Option<TweetEvent>> {
        loop {
            let mut buf = Vec::new();
            let read = self.reader.read_until(b'\n', &mut buf)?;
            if read == 0 {
                return Ok(None);
            }
            let line = String::from_utf8_lossy(&buf);
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match serde_json::from_str::<TweetEvent>(line) {
                Ok(event) if !event.event_id.is_empty() => return Ok(Some(event)),
                _ => self.skipped += 1,
            }
        }
    }

    fn skipped(&self) -> u64 {
        self.skipped
    }
}

/// In-memory source, mainly for tests and embedding.
pub struct VecSource {
    events: std::vec::IntoIter<TweetEvent>,
}

impl VecSource {
    pub fn new(events: Vec<TweetEvent>) -> Self {
        VecSource {
            events: events.into_iter(),
        }
    }
}

impl EventSource for VecSource {
    fn next_event(&mut self) -> Result<Option<TweetEvent>> {
        Ok(self.events.next())
    }
}

/// Alert consumer.
pub trait AlertSink {
    fn emit(&mut self, alert: &Alert) -> Result<()>;
}

/// JSONL alert writer (file or standard output).
pub struct JsonlSink<W: Write> {
    writer: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(writer: W) -> Self {
        JsonlSink { writer }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> AlertSink for JsonlSink<W> {
    fn emit(&mut self, alert: &Alert) -> Result<()> {
        serde_json::to_writer(&mut self.writer, alert)?;
        self.writer.write_all(b"\n")?;
        Ok(())
    }
}

/// Collecting sink for tests and programmatic use.
#[derive(Default)]
pub struct VecSink {
    pub alerts: Vec<Alert>,
}

impl AlertSink for VecSink {
    fn emit(&mut self, alert: &Alert) -> Result<()> {
        self.alerts.push(alert.clone());
        Ok(())
    }
}

/// When to stop a run.
#[derive(Debug, Clone, Copy)]
pub enum StopBound {
    /// Run until the source ends.
    Exhausted,
    /// Stop after this many collected (keyword-passing) events.
    Events(u64),
    /// Stop after this wall-clock duration.
    After(Duration),
}

const CLASSIFY_BATCH: usize = 128;

/// The monitoring loop. Events failing the keyword filter are not counted;
/// passing events are preprocessed, transformed and classified (batches run
/// in parallel when enabled), related events emit ordered alerts, and the
/// final stats are returned. A sink or source failure aborts with partial
/// stats inside the error.
pub fn run_monitor<S: EventSource, K: AlertSink>(
    source: &mut S,
    pipeline: &Pipeline,
    keywords: &KeywordSet,
    sink: &mut K,
    stop: StopBound,
) -> Result<MonitorStats> {
    let mut counters = Counters::default();
    let mut seq = 0u64;
    let started = Instant::now();
    let abort = |counters: &Counters, source: &S, reason: String| Error::MonitorAborted {
        reason,
        stats: Box::new(counters.finalize(source.skipped(), true)),
    };

    'outer: loop {
        // Fill a batch with keyword-passing events.
        let mut batch: Vec<(TweetEvent, Vec<String>)> = Vec::with_capacity(CLASSIFY_BATCH);
        loop {
            if let StopBound::Events(max) = stop {
                if counters.collected + batch.len() as u64 >= max {
                    break;
                }
            }
            if let StopBound::After(limit) = stop {
                if started.elapsed() >= limit {
                    break;
                }
            }
            match source.next_event() {
                Ok(Some(event)) => {
                    let matched = keywords.match_text(&event.text);
                    if !matched.is_empty() {
                        batch.push((event, matched));
                        if batch.len() == CLASSIFY_BATCH {
                            break;
                        }
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    // Classify what we already pulled? No: abort with what
                    // has been fully processed so far.
                    return Err(abort(&counters, source, format!("source error: {e}")));
                }
            }
        }
        if batch.is_empty() {
            break 'outer;
        }

        let classified: Vec<(Label, f64)> =
            exec::map_items(&batch, |(event, _)| pipeline.classify(&event.text));

        for ((event, matched), (label, score)) in batch.into_iter().zip(classified) {
            counters.collected += 1;
            if event.is_retweet {
                counters.retweets += 1;
            }
            match label {
                Label::Related => {
                    counters.related += 1;
                    seq += 1;
                    let alert = Alert {
                        event_id: event.event_id,
                        label,
                        score,
                        matched_keywords: matched,
                        emitted_at: event.created_at,
                        seq,
                    };
                    if let Err(e) = sink.emit(&alert) {
                        return Err(abort(&counters, source, format!("sink error: {e}")));
                    }
                }
                Label::Unrelated => counters.unrelated += 1,
            }
        }

        match stop {
            StopBound::Events(max) if counters.collected >= max => break,
            StopBound::After(limit) if started.elapsed() >= limit => break,
            _ => {}
        }
    }

    Ok(counters.finalize(source.skipped(), false))
}

#[cfg(test)]
mod tests;
