//! Text normalization: entity decoding, URL removal, tokenization and
//! stopword filtering.
//!
//! The chain, in order: HTML entity decoding (named and numeric), removal of
//! whitespace-delimited chunks starting with `http://`, `https://` or `www.`,
//! lowercasing, splitting into maximal alphanumeric runs (which also strips
//! `#`/`@` sigils and punctuation), and stopword removal. The bundled English
//! stopword list ships under `data/` and is compiled in; an alternative list
//! can be loaded from file.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::Result;

/// Tokens output by [`preprocess`]: lowercase alphanumeric runs, stopwords
/// removed, original order preserved.
pub type TokenSequence = Vec<String>;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// A stopword inventory, one lowercase token per entry.
#[derive(Debug, Clone)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    /// The bundled English list.
    pub fn bundled() -> &'static Stopwords {
        static BUNDLED: OnceLock<Stopwords> = OnceLock::new();
        BUNDLED.get_or_init(|| Stopwords::from_str_list(BUNDLED_STOPWORDS))
    }

    /// Parse a list, one word per line; blank lines ignored.
    pub fn from_str_list(text: &str) -> Stopwords {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.to_lowercase())
            .collect();
        Stopwords { words }
    }

    /// Load a list from a UTF-8 file (invalid bytes replaced).
    pub fn from_file(path: &Path) -> Result<Stopwords> {
        let bytes = std::fs::read(path)?;
        Ok(Self::from_str_list(&String::from_utf8_lossy(&bytes)))
    }

    pub fn from_reader<R: BufRead>(mut reader: R) -> Result<Stopwords> {
        let mut buf = Vec::new();
        reader.read_to_end(&mut buf)?;
        Ok(Self::from_str_list(&String::from_utf8_lossy(&buf)))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn is_url_chunk(chunk: &str) -> bool {
    let lower_prefix: String = chunk.chars().take(8).collect::<String>().to_lowercase();
    lower_prefix.starts_with("http://")
        || lower_prefix.starts_with("https://")
        || lower_prefix.starts_with("www.")
}

/// Normalize raw text into a token sequence.
pub fn preprocess(text: &str, stopwords: &Stopwords) -> TokenSequence {
    let decoded = html_escape::decode_html_entities(text);
    let mut tokens = Vec::new();
    for chunk in decoded.split_whitespace() {
        if is_url_chunk(chunk) {
            continue;
        }
        let lower = chunk.to_lowercase();
        let mut run = String::new();
        for ch in lower.chars() {
            if ch.is_alphanumeric() {
                run.push(ch);
            } else if !run.is_empty() {
                if !stopwords.contains(&run) {
                    tokens.push(std::mem::take(&mut run));
                } else {
                    run.clear();
                }
            }
        }
        if !run.is_empty() && !stopwords.contains(&run) {
            tokens.push(run);
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prep(text: &str) -> Vec<String> {
        preprocess(text, Stopwords::bundled())
    }

    #[test]
    fn bundled_list_loads() {
        let sw = Stopwords::bundled();
        assert_eq!(sw.len(), 318);
        for w in ["a", "could", "have", "in", "see", "the"] {
            assert!(sw.contains(w), "missing stopword {w}");
        }
        assert!(!sw.contains("attack"));
    }

    #[test]
    fn hashtags_and_stopwords() {
        assert_eq!(
            prep("Could Blackberry have a real chance in IoT? #IoT"),
            vec!["blackberry", "real", "chance", "iot", "iot"]
        );
    }

    #[test]
    fn entities_urls_and_stopwords() {
        assert_eq!(prep("&amp; see https://t.co/xyz attack"), vec!["attack"]);
    }

    #[test]
    fn empty_input_gives_no_tokens() {
        assert_eq!(prep(""), Vec::<String>::new());
    }

    #[test]
    fn numeric_entities_decode() {
        // &#64; is '@', a sigil, so it vanishes; &#65; is 'A'.
        assert_eq!(prep("&#64;user &#65;ttack"), vec!["user", "attack"]);
    }

    #[test]
    fn url_prefixes_are_case_insensitive() {
        assert_eq!(prep("HTTPS://EXAMPLE.COM overflow Www.x.y flaw"), vec!["overflow", "flaw"]);
        // "www" without the dot is an ordinary token.
        assert_eq!(prep("www overflow"), vec!["www", "overflow"]);
    }

    #[test]
    fn version_fragments_survive() {
        assert_eq!(prep("UniFi Protect before v1.17.1"), vec!["unifi", "protect", "v1", "17", "1"]);
    }

    /// Independent step-by-step oracle: a second implementation of the same
    /// chain built from different primitives (regex-style scanning and a
    /// local entity decoder), used to cross-check `preprocess`.
    mod oracle {
        use super::Stopwords;

        fn decode_entities(text: &str) -> String {
            let mut out = String::new();
            let mut rest = text;
            while let Some(pos) = rest.find('&') {
                out.push_str(&rest[..pos]);
                rest = &rest[pos..];
                let end = match rest.find(';') {
                    Some(e) if e <= 12 => e,
                    _ => {
                        out.push('&');
                        rest = &rest[1..];
                        continue;
                    }
                };
                let entity = &rest[1..end];
                let decoded = match entity {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some('\u{a0}'),
                    _ => {
                        if let Some(num) = entity.strip_prefix("#x").or(entity.strip_prefix("#X")) {
                            u32::from_str_radix(num, 16).ok().and_then(char::from_u32)
                        } else if let Some(num) = entity.strip_prefix('#') {
                            num.parse::<u32>().ok().and_then(char::from_u32)
                        } else {
                            None
                        }
                    }
                };
                match decoded {
                    Some(c) => {
                        out.push(c);
                        rest = &rest[end + 1..];
                    }
                    None => {
                        out.push('&');
                        rest = &rest[1..];
                    }
                }
            }
            out.push_str(rest);
            out
        }

        pub fn preprocess(text: &str, stopwords: &Stopwords) -> Vec<String> {
            let decoded = decode_entities(text);
            let kept: Vec<String> = decoded
                .split_whitespace()
                .filter(|c| {
                    let lc = c.to_lowercase();
                    !(lc.starts_with("http://") || lc.starts_with("https://") || lc.starts_with("www."))
                })
                .map(|c| c.to_lowercase())
                .collect();
            let mut tokens = Vec::new();
            for chunk in kept {
                for piece in chunk.split(|c: char| !c.is_alphanumeric()) {
                    if !piece.is_empty() && !stopwords.contains(piece) {
                        tokens.push(piece.to_string());
                    }
                }
            }
            tokens
        }
    }

    #[test]
    fn matches_independent_oracle_on_fixed_corpus() {
        let fixtures = [
            "Could Blackberry have a real chance in IoT? #IoT",
            "&amp; see https://t.co/xyz attack",
            "CVE-2021-22882 UniFi Protect before v1.17.1 allows an attacker",
            "Misconfigured Baby Monitors Allow Unauthorized Viewing #CloudSecurity #IoT",
            "@vendor &lt;script&gt; injection!! www.example.com/more detail &#38; PoC",
            "heap overflow in    HTTP   parser (OOB write)",
            "",
            "   ",
            "100% re-movable???",
        ];
        let sw = Stopwords::bundled();
        for text in fixtures {
            assert_eq!(preprocess(text, sw), oracle::preprocess(text, sw), "input: {text:?}");
        }
    }

    proptest! {
        // '&' excluded: the production decoder follows HTML5 semicolon-less
        // entity rules that the simpler oracle does not model; entity inputs
        // are covered by the fixed corpus above.
        #[test]
        fn matches_oracle_on_generated_text(text in "[ -%'-~]{0,80}") {
            let sw = Stopwords::bundled();
            prop_assert_eq!(preprocess(&text, sw), oracle::preprocess(&text, sw));
        }

        #[test]
        fn idempotent_on_detokenized_output(text in "\\PC{0,60}") {
            let sw = Stopwords::bundled();
            let once = preprocess(&text, sw);
            let again = preprocess(&once.join(" "), sw);
            prop_assert_eq!(once, again);
        }

        #[test]
        fn output_tokens_are_clean(text in "\\PC{0,60}") {
            let sw = Stopwords::bundled();
            for tok in preprocess(&text, sw) {
                prop_assert!(!tok.is_empty());
                prop_assert!(tok.chars().all(|c| c.is_alphanumeric()));
                // Fully lowercased (some letters are their own lowercase form).
                prop_assert_eq!(tok.to_lowercase(), tok.clone());
                prop_assert!(!sw.contains(&tok));
            }
        }
    }

    #[test]
    fn order_preserved() {
        assert_eq!(prep("zebra then alpha then mango"), vec!["zebra", "alpha", "mango"]);
    }
}
