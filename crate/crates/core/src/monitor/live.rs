//! Live filtered-stream adapter.
//!
//! Plumbing for a bearer-token filtered-stream endpoint (v2-style API): it
//! replaces the server-side rule set with one rule OR-ing the keyword list,
//! opens the stream and yields [`TweetEvent`]s through the same
//! [`EventSource`] contract as replay. Network-facing and excluded from the
//! test suite; replay is the reproducible path.

use std::io::{BufRead, BufReader};

use serde_json::{json, Value};

use super::{EventSource, TweetEvent};
use crate::error::{Error, Result};

/// Default bearer-token environment variable.
pub const DEFAULT_TOKEN_ENV: &str = "TWITTER_BEARER_TOKEN";
pub const DEFAULT_STREAM_ENDPOINT: &str = "https://api.twitter.com/2/tweets/search/stream";
pub const DEFAULT_RULES_ENDPOINT: &str = "https://api.twitter.com/2/tweets/search/stream/rules";

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub stream_endpoint: String,
    pub rules_endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub keywords: Vec<String>,
}

impl LiveConfig {
    pub fn new(keywords: Vec<String>) -> LiveConfig {
        LiveConfig {
            stream_endpoint: DEFAULT_STREAM_ENDPOINT.into(),
            rules_endpoint: DEFAULT_RULES_ENDPOINT.into(),
            token_env: DEFAULT_TOKEN_ENV.into(),
            keywords,
        }
    }
}

pub struct LiveSource {
    reader: BufReader<reqwest::blocking::Response>,
    skipped: u64,
}

impl LiveSource {
    /// Install the keyword rule and open the stream.
    pub fn connect(config: &LiveConfig) -> Result<LiveSource> {
        let token = std::env::var(&config.token_env)
            .map_err(|_| Error::Live(format!("environment variable {} not set", config.token_env)))?;
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| Error::Live(e.to_string()))?;

        // Replace existing rules with a single OR rule over the keywords.
        let current: Value = client
            .get(&config.rules_endpoint)
            .bearer_auth(&token)
            .send()
            .and_then(|r| r.json())
            .map_err(|e| Error::Live(format!("fetching rules: {e}")))?;
        let ids: Vec<Value> = current["data"]
            .as_array()
            .map(|rules| rules.iter().filter_map(|r| r.get("id").cloned()).collect())
            .unwrap_or_default();
        if !ids.is_empty() {
            client
                .post(&config.rules_endpoint)
                .bearer_auth(&token)
                .json(&json!({"delete": {"ids": ids}}))
                .send()
                .map_err(|e| Error::Live(format!("deleting rules: {e}")))?;
        }
        let rule = config
            .keywords
            .iter()
            .map(|k| if k.contains(' ') { format!("\"{k}\"") } else { k.clone() })
            .collect::<Vec<_>>()
            .join(" OR ");
        client
            .post(&config.rules_endpoint)
            .bearer_auth(&token)
            .json(&json!({"add": [{"value": rule, "tag": "keyword-filter"}]}))
            .send()
            .map_err(|e| Error::Live(format!("adding rule: {e}")))?;

        let response = client
            .get(&config.stream_endpoint)
            .query(&[
                ("tweet.fields", "created_at,author_id,referenced_tweets"),
                ("expansions", "author_id"),
            ])
            .bearer_auth(&token)
            .send()
            .map_err(|e| Error::Live(format!("opening stream: {e}")))?;
        if !response.status().is_success() {
            return Err(Error::Live(format!("stream status {}", response.status())));
        }
        Ok(LiveSource {
            reader: BufReader::new(response),
            skipped: 0,
        })
    }

    fn parse_frame(line: &str) -> Option<TweetEvent> {
        let frame: Value = serde_json::from_str(line).ok()?;
        let data = frame.get("data")?;
        let id = data["id"].as_str()?.to_string();
        if id.is_empty() {
            return None;
        }
        let created_at = data["created_at"]
            .as_str()
            .and_then(|s| chrono::DateTime::parse_from_rfc3339(s).ok())?
            .with_timezone(&chrono::Utc);
        let is_retweet = data["referenced_tweets"]
            .as_array()
            .map(|refs| refs.iter().any(|r| r["type"] == "retweeted"))
            .unwrap_or(false);
        Some(TweetEvent {
            event_id: id,
            created_at,
            text: data["text"].as_str()?.to_string(),
            is_retweet,
            author: data["author_id"].as_str().unwrap_or_default().to_string(),
        })
    }
}

impl EventSource for LiveSource {
    fn next_event(&mut self) -> Result<Option<TweetEvent>> {
        loop {
            let mut line = String::new();
            let read = self
                .reader
                .read_line(&mut line)
                .map_err(|e| Error::Live(format!("stream read: {e}")))?;
            if read == 0 {
                return Ok(None);
            }
            let line = line.trim();
            if line.is_empty() {
                continue; // keep-alive newline
            }
            match Self::parse_frame(line) {
                Some(event) => return Ok(Some(event)),
                None => self.skipped += 1,
            }
        }
    }

    fn skipped(&self) -> u64 {
        self.skipped
    }
}
