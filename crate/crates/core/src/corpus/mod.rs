//! CVE corpus handling: NVD feed ingestion, hardware-CPE labeling, CVE-tag
//! stripping and balanced train/validation splits.

mod nvd;

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

pub use nvd::{ingest_feeds, parse_nvd_feed, parse_nvd_feed_json, IngestStats, ParsedFeed, SkippedItem};

use crate::error::{Error, Result};

/// Binary document label; `related` means related to IoT vulnerabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Related,
    Unrelated,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Related => write!(f, "related"),
            Label::Unrelated => write!(f, "unrelated"),
        }
    }
}

/// Where a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Cve,
    Tweet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CveStatus {
    Active,
    Rejected,
}

/// One parsed NVD entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CveRecord {
    pub id: String,
    pub description: String,
    pub cpe_uris: Vec<String>,
    pub year: u16,
    pub status: CveStatus,
}

/// A labeled text unit (CVE description or tweet text).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub doc_id: String,
    pub text: String,
    pub label: Label,
    pub source: Source,
}

/// Which training-text variant a split carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    CveTagged,
    NoCveTag,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::CveTagged => write!(f, "cve_tagged"),
            Variant::NoCveTag => write!(f, "no_cve_tag"),
        }
    }
}

/// Balanced, seeded train/validation split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<LabeledDoc>,
    pub validation: Vec<LabeledDoc>,
    pub seed: u64,
    pub variant: Variant,
}

fn cve_id_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^CVE-\d{4}-\d{4,7}$").unwrap())
}

fn cve_tag_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)CVE-\d{4}-\d{4,7}").unwrap())
}

/// Whether a string is a well-formed CVE identifier.
pub fn is_cve_id(id: &str) -> bool {
    cve_id_pattern().is_match(id)
}

/// The `part` letter of a CPE URI: `h` (hardware), `a` (application),
/// `o` (operating system). Understands formatted-string (`cpe:2.3:h:...`)
/// and legacy (`cpe:/h:...`) forms; anything else is unparseable.
pub fn cpe_part(uri: &str) -> Option<char> {
    let part_str = if let Some(rest) = uri.strip_prefix("cpe:2.3:") {
        rest.split(':').next()?
    } else if let Some(rest) = uri.strip_prefix("cpe:/") {
        rest.split(':').next()?
    } else {
        return None;
    };
    let mut chars = part_str.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => Some(c.to_ascii_lowercase()),
        _ => None,
    }
}

/// Label a record by its CPE descriptors: related iff any URI has part `h`.
/// Depends only on `cpe_uris`; unparseable URIs count as non-hardware.
pub fn label_by_cpe(record: &CveRecord) -> Label {
    label_by_cpe_counting(record).0
}

/// As [`label_by_cpe`], also returning how many URIs failed to parse.
pub fn label_by_cpe_counting(record: &CveRecord) -> (Label, u64) {
    let mut unparsed = 0u64;
    let mut hardware = false;
    for uri in &record.cpe_uris {
        match cpe_part(uri) {
            Some('h') => hardware = true,
            Some(_) => {}
            None => unparsed += 1,
        }
    }
    let label = if hardware { Label::Related } else { Label::Unrelated };
    (label, unparsed)
}

/// Delete every case-insensitive `CVE-NNNN-NNNN+` tag, collapsing the
/// whitespace around each removal to a single space and trimming the result.
/// Text without a tag is returned unchanged.
pub fn strip_cve_tags(text: &str) -> String {
    let matches: Vec<(usize, usize)> = cve_tag_pattern()
        .find_iter(text)
        .map(|m| (m.start(), m.end()))
        .collect();
    if matches.is_empty() {
        return text.to_string();
    }
    let bytes = text.as_bytes();
    // Extend each match over adjacent whitespace, merging overlapping spans.
    let mut spans: Vec<(usize, usize)> = Vec::with_capacity(matches.len());
    for (mut start, mut end) in matches {
        while start > 0 && bytes[start - 1].is_ascii_whitespace() {
            start -= 1;
        }
        while end < bytes.len() && bytes[end].is_ascii_whitespace() {
            end += 1;
        }
        match spans.last_mut() {
            Some(last) if start <= last.1 => last.1 = last.1.max(end),
            _ => spans.push((start, end)),
        }
    }
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for (start, end) in spans {
        out.push_str(&text[cursor..start]);
        if start > 0 && end < text.len() {
            out.push(' ');
        }
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    out.trim().to_string()
}

/// Build a balanced, seeded split: a single shuffle followed by per-label
/// sequential draws, train before validation. With [`Variant::NoCveTag`],
/// selected texts have their CVE tags stripped (docs whose text would become
/// empty are excluded from the draw pool).
pub fn build_balanced_splits(
    pool: &[LabeledDoc],
    train_size: usize,
    val_size: usize,
    seed: u64,
    variant: Variant,
) -> Result<DatasetSplit> {
    if train_size % 2 != 0 || val_size % 2 != 0 {
        return Err(Error::OddSplitSize {
            train: train_size,
            validation: val_size,
        });
    }
    let mut seen = HashSet::new();
    for doc in pool {
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Error::DuplicateDocId(doc.doc_id.clone()));
        }
    }
    let eligible: Vec<&LabeledDoc> = match variant {
        Variant::CveTagged => pool.iter().collect(),
        Variant::NoCveTag => pool
            .iter()
            .filter(|d| !strip_cve_tags(&d.text).is_empty())
            .collect(),
    };
    let per_label_need = train_size / 2 + val_size / 2;
    for label in [Label::Related, Label::Unrelated] {
        let available = eligible.iter().filter(|d| d.label == label).count();
        if available < per_label_need {
            return Err(Error::Capacity {
                label,
                needed: per_label_need,
                available,
            });
        }
    }

    let mut order: Vec<usize> = (0..eligible.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut train = Vec::with_capacity(train_size);
    let mut validation = Vec::with_capacity(val_size);
    let mut taken_train = [0usize; 2];
    let mut taken_val = [0usize; 2];
    let slot = |label: Label| match label {
        Label::Related => 0,
        Label::Unrelated => 1,
    };
    for idx in order {
        let doc = eligible[idx];
        let s = slot(doc.label);
        let dest = if taken_train[s] < train_size / 2 {
            taken_train[s] += 1;
            &mut train
        } else if taken_val[s] < val_size / 2 {
            taken_val[s] += 1;
            &mut validation
        } else {
            continue;
        };
        let mut doc = doc.clone();
        if variant == Variant::NoCveTag {
            doc.text = strip_cve_tags(&doc.text);
        }
        dest.push(doc);
    }
    debug_assert_eq!(train.len(), train_size);
    debug_assert_eq!(validation.len(), val_size);
    Ok(DatasetSplit {
        train,
        validation,
        seed,
        variant,
    })
}

/// Write a labeled corpus as JSONL (one object per line, LF endings).
pub fn write_corpus<W: Write>(mut writer: W, docs: &[LabeledDoc]) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut writer, doc)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_corpus_file(path: &Path, docs: &[LabeledDoc]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_corpus(&mut buf, docs)?;
    buf.flush()?;
    Ok(())
}

/// Read a labeled JSONL corpus. Entries missing a label or with empty text
/// are rejected with the offending line number.
pub fn read_corpus<R: Read>(reader: R) -> Result<Vec<LabeledDoc>> {
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: LabeledDoc = serde_json::from_str(&line).map_err(|e| Error::CorpusLoad {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if doc.text.trim().is_empty() {
            return Err(Error::CorpusLoad {
                line: i + 1,
                reason: "empty text".into(),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<LabeledDoc>> {
    let bytes = std::fs::read(path)?;
    read_corpus(String::from_utf8_lossy(&bytes).as_bytes())
}
