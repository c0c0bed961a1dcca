//! NVD "CVE JSON 1.1" feed parsing and multi-feed corpus ingestion.
//!
//! Feeds are tolerated item by item: a malformed item is collected into a
//! skipped-items report and parsing continues. Whole-document JSON failures
//! are hard errors.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{is_cve_id, label_by_cpe_counting, CveRecord, CveStatus, Label, LabeledDoc, Source};
use crate::error::{Error, Result};
use crate::exec;

const REJECT_MARKER: &str = "** REJECT **";

/// One feed item that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedItem {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feed: Option<String>,
}

/// Parse result: records in feed order plus the skipped-items report.
#[derive(Debug, Clone, Default)]
pub struct ParsedFeed {
    pub records: Vec<CveRecord>,
    pub skipped: Vec<SkippedItem>,
}

/// Aggregate counters from a multi-feed ingest.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestStats {
    pub files: usize,
    pub items: usize,
    /// Corpus size after deduplication and reject removal.
    pub records: usize,
    pub duplicates_removed: usize,
    pub rejected_removed: usize,
    pub related: usize,
    pub unrelated: usize,
    pub cpe_warnings: u64,
    pub skipped: Vec<SkippedItem>,
}

/// Parse a feed from raw bytes; gzip is detected by magic number.
pub fn parse_nvd_feed(bytes: &[u8]) -> Result<ParsedFeed> {
    let text = if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut decoder = flate2::read::GzDecoder::new(bytes);
        let mut buf = Vec::new();
        decoder
            .read_to_end(&mut buf)
            .map_err(|e| Error::FeedParse(format!("gzip: {e}")))?;
        String::from_utf8_lossy(&buf).into_owned()
    } else {
        String::from_utf8_lossy(bytes).into_owned()
    };
    parse_nvd_feed_json(&text)
}

/// Parse a feed from JSON text.
pub fn parse_nvd_feed_json(text: &str) -> Result<ParsedFeed> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::FeedParse(e.to_string()))?;
    let items = doc
        .get("CVE_Items")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::FeedParse("missing CVE_Items array".into()))?;
    let mut feed = ParsedFeed::default();
    for (index, item) in items.iter().enumerate() {
        match parse_item(item) {
            Ok(record) => feed.records.push(record),
            Err(reason) => feed.skipped.push(SkippedItem {
                index,
                id: item
                    .pointer("/cve/CVE_data_meta/ID")
                    .and_then(Value::as_str)
                    .map(str::to_string),
                reason,
                feed: None,
            }),
        }
    }
    Ok(feed)
}

fn parse_item(item: &Value) -> std::result::Result<CveRecord, String> {
    let id = item
        .pointer("/cve/CVE_data_meta/ID")
        .and_then(Value::as_str)
        .ok_or("missing id")?;
    if !is_cve_id(id) {
        return Err(format!("malformed id {id:?}"));
    }
    let description = first_english_description(item).ok_or("missing description")?;
    let year: u16 = id[4..8].parse().map_err(|_| "unparseable year")?;
    let status = if description.starts_with(REJECT_MARKER) {
        CveStatus::Rejected
    } else {
        CveStatus::Active
    };
    let mut cpe_uris = Vec::new();
    if let Some(configurations) = item.get("configurations") {
        collect_cpe_uris(configurations, &mut cpe_uris);
    }
    Ok(CveRecord {
        id: id.to_string(),
        description,
        cpe_uris,
        year,
        status,
    })
}

fn first_english_description(item: &Value) -> Option<String> {
    let entries = item
        .pointer("/cve/description/description_data")?
        .as_array()?;
    for entry in entries {
        if entry.get("lang").and_then(Value::as_str) == Some("en") {
            let value = entry.get("value").and_then(Value::as_str)?;
            if value.trim().is_empty() {
                return None;
            }
            return Some(value.to_string());
        }
    }
    None
}

/// Collect CPE URI strings from every node of every configuration, walking
/// nested children in document order. Both formatted-string (`cpe23Uri`) and
/// legacy (`cpe22Uri`) keys are kept.
fn collect_cpe_uris(value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (key, v) in map {
                if (key == "cpe23Uri" || key == "cpe22Uri") && v.is_string() {
                    out.push(v.as_str().unwrap().to_string());
                } else {
                    collect_cpe_uris(v, out);
                }
            }
        }
        Value::Array(items) => {
            for v in items {
                collect_cpe_uris(v, out);
            }
        }
        _ => {}
    }
}

fn filename_year(path: &Path) -> u16 {
    let name = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    let mut year = 0u16;
    let mut run = String::new();
    for ch in name.chars().chain(std::iter::once('.')) {
        if ch.is_ascii_digit() {
            run.push(ch);
        } else {
            if run.len() == 4 {
                if let Ok(y) = run.parse() {
                    year = y;
                }
            }
            run.clear();
        }
    }
    year
}

/// Ingest one or more annual feed files into a labeled corpus.
///
/// Files are parsed in parallel, then merged in ascending year order (year
/// taken from the file name, ties broken by name) so deduplication is
/// deterministic: the later feed's version of a CVE id wins. Rejected
/// records are dropped; the rest are labeled by the hardware-CPE rule.
pub fn ingest_feeds(paths: &[PathBuf]) -> Result<(Vec<LabeledDoc>, IngestStats)> {
    let mut ordered: Vec<PathBuf> = paths.to_vec();
    ordered.sort_by_key(|p| (filename_year(p), p.file_name().map(|n| n.to_os_string())));

    let parsed: Vec<Result<ParsedFeed>> = exec::map_items(&ordered, |path| {
        let bytes = std::fs::read(path)?;
        parse_nvd_feed(&bytes)
    });

    let mut stats = IngestStats {
        files: ordered.len(),
        ..IngestStats::default()
    };
    let mut by_id = std::collections::BTreeMap::new();
    for (path, result) in ordered.iter().zip(parsed) {
        let feed = result?;
        stats.items += feed.records.len() + feed.skipped.len();
        for mut item in feed.skipped {
            item.feed = Some(path.display().to_string());
            stats.skipped.push(item);
        }
        for record in feed.records {
            if by_id.insert(record.id.clone(), record).is_some() {
                stats.duplicates_removed += 1;
            }
        }
    }

    let mut docs = Vec::with_capacity(by_id.len());
    for record in by_id.into_values() {
        if record.status == CveStatus::Rejected {
            stats.rejected_removed += 1;
            continue;
        }
        let (label, warnings) = label_by_cpe_counting(&record);
        stats.cpe_warnings += warnings;
        match label {
            Label::Related => stats.related += 1,
            Label::Unrelated => stats.unrelated += 1,
        }
        docs.push(LabeledDoc {
            doc_id: record.id,
            text: record.description,
            label,
            source: Source::Cve,
        });
    }
    stats.records = docs.len();
    Ok((docs, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn feed_json(items: &[(&str, &str, &[&str])]) -> String {
        let items: Vec<Value> = items
            .iter()
            .map(|(id, desc, cpes)| {
                let matches: Vec<Value> = cpes
                    .iter()
                    .map(|c| serde_json::json!({"vulnerable": true, "cpe23Uri": c}))
                    .collect();
                serde_json::json!({
                    "cve": {
                        "CVE_data_meta": {"ID": id, "ASSIGNER": "cve@mitre.org"},
                        "description": {"description_data": [
                            {"lang": "es", "value": "otro idioma"},
                            {"lang": "en", "value": desc}
                        ]}
                    },
                    "configurations": {
                        "CVE_data_version": "4.0",
                        "nodes": [{"operator": "OR", "cpe_match": matches,
                                   "children": [{"operator": "AND", "cpe_match": []}]}]
                    },
                    "publishedDate": "2021-02-01T00:00Z"
                })
            })
            .collect();
        serde_json::json!({
            "CVE_data_type": "CVE",
            "CVE_data_format": "MITRE",
            "CVE_data_version": "4.0",
            "CVE_Items": items
        })
        .to_string()
    }

    #[test]
    fn reject_marker_sets_status() {
        let json = feed_json(&[("CVE-2021-0001", "** REJECT ** DO NOT USE THIS CANDIDATE", &[])]);
        let feed = parse_nvd_feed_json(&json).unwrap();
        assert_eq!(feed.records.len(), 1);
        assert_eq!(feed.records[0].status, CveStatus::Rejected);
        assert_eq!(feed.records[0].year, 2021);
    }

    #[test]
    fn empty_item_list_gives_empty_records() {
        let feed = parse_nvd_feed_json(&feed_json(&[])).unwrap();
        assert!(feed.records.is_empty());
        assert!(feed.skipped.is_empty());
    }

    #[test]
    fn malformed_json_is_a_feed_error() {
        assert!(matches!(parse_nvd_feed_json("{ nope"), Err(Error::FeedParse(_))));
        assert!(matches!(parse_nvd_feed_json("{}"), Err(Error::FeedParse(_))));
    }

    #[test]
    fn item_without_description_is_skipped_and_parsing_continues() {
        let mut doc: Value = serde_json::from_str(&feed_json(&[
            ("CVE-2021-0001", "first", &[]),
            ("CVE-2021-0002", "second", &[]),
        ]))
        .unwrap();
        doc["CVE_Items"][0]["cve"]["description"]["description_data"] = serde_json::json!([]);
        let feed = parse_nvd_feed_json(&doc.to_string()).unwrap();
        assert_eq!(feed.records.len(), 1);
        assert_eq!(feed.records[0].id, "CVE-2021-0002");
        assert_eq!(feed.skipped.len(), 1);
        assert_eq!(feed.skipped[0].index, 0);
        assert_eq!(feed.skipped[0].id.as_deref(), Some("CVE-2021-0001"));
    }

    #[test]
    fn description_takes_first_english_value() {
        let json = feed_json(&[("CVE-2021-0003", "english text", &[])]);
        let feed = parse_nvd_feed_json(&json).unwrap();
        assert_eq!(feed.records[0].description, "english text");
    }

    #[test]
    fn cpe_uris_collected_from_nested_nodes() {
        let mut doc: Value = serde_json::from_str(&feed_json(&[(
            "CVE-2021-0004",
            "desc",
            &["cpe:2.3:a:v:p:*:*:*:*:*:*:*:*"],
        )]))
        .unwrap();
        doc["CVE_Items"][0]["configurations"]["nodes"][0]["children"][0]["cpe_match"] =
            serde_json::json!([
                {"vulnerable": true, "cpe23Uri": "cpe:2.3:h:v:dev:*:*:*:*:*:*:*:*"},
                {"vulnerable": true, "cpe22Uri": "cpe:/o:v:os"}
            ]);
        let feed = parse_nvd_feed_json(&doc.to_string()).unwrap();
        assert_eq!(
            feed.records[0].cpe_uris,
            vec![
                "cpe:2.3:a:v:p:*:*:*:*:*:*:*:*",
                "cpe:2.3:h:v:dev:*:*:*:*:*:*:*:*",
                "cpe:/o:v:os"
            ]
        );
    }

    #[test]
    fn gzip_feeds_are_detected() {
        let json = feed_json(&[("CVE-2021-0005", "zipped", &[])]);
        let mut encoder = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        encoder.write_all(json.as_bytes()).unwrap();
        let gz = encoder.finish().unwrap();
        let feed = parse_nvd_feed(&gz).unwrap();
        assert_eq!(feed.records.len(), 1);
        assert_eq!(feed.records[0].description, "zipped");
    }

    #[test]
    fn ingest_dedupes_last_feed_wins_and_drops_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let old = dir.path().join("nvdcve-1.1-2018.json");
        let new = dir.path().join("nvdcve-1.1-2019.json");
        std::fs::write(
            &old,
            feed_json(&[
                ("CVE-2018-1111", "old version", &["cpe:2.3:h:v:dev:*:*:*:*:*:*:*:*"]),
                ("CVE-2018-2222", "** REJECT ** withdrawn", &[]),
                ("CVE-2018-1111", "same-feed duplicate", &[]),
            ]),
        )
        .unwrap();
        std::fs::write(
            &new,
            feed_json(&[("CVE-2018-1111", "new version", &["cpe:2.3:a:v:p:*:*:*:*:*:*:*:*"])]),
        )
        .unwrap();
        // Pass paths out of order; merge must still be year-ascending.
        let (docs, stats) = ingest_feeds(&[new, old]).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].doc_id, "CVE-2018-1111");
        assert_eq!(docs[0].text, "new version");
        assert_eq!(docs[0].label, Label::Unrelated);
        assert_eq!(stats.duplicates_removed, 2);
        assert_eq!(stats.rejected_removed, 1);
        assert_eq!(stats.records, 1);
        assert_eq!(stats.files, 2);
    }

    #[test]
    fn filename_year_extraction() {
        assert_eq!(filename_year(Path::new("/x/nvdcve-1.1-2019.json")), 2019);
        assert_eq!(filename_year(Path::new("nvdcve-1.1-2002.json.gz")), 2002);
        assert_eq!(filename_year(Path::new("feed.json")), 0);
    }
}
