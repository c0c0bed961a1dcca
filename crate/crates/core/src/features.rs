//! Vocabulary fitting and sparse TF-IDF document vectors.
//!
//! Weights follow the smoothed-idf convention: `tf * (ln((1+n)/(1+df)) + 1)`
//! with raw term counts for tf and L2 row normalization. A raw-count mode is
//! available for count-based experiments.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec;
use crate::text::TokenSequence;

/// Hash binding models and feature matrices to the vocabulary that produced
/// them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint(pub String);

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Fingerprint {
    /// Fingerprint for hand-built matrices not backed by a vocabulary.
    pub fn adhoc(dim: usize) -> Fingerprint {
        Fingerprint(format!("adhoc:{dim}"))
    }
}

/// Fitted term statistics: lexicographically ordered terms, per-term document
/// frequency and the training corpus size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: BTreeMap<String, usize>,
    doc_freq: Vec<u64>,
    n_docs: u64,
}

/// On-disk form: `{"n_docs": N, "terms": [[term, index, doc_freq], ...]}`.
#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    n_docs: u64,
    terms: Vec<(String, usize, u64)>,
}

impl Vocabulary {
    /// Fit over a training corpus: terms are all distinct tokens ordered
    /// lexicographically; `doc_freq` counts documents, not occurrences.
    pub fn fit(corpus: &[TokenSequence]) -> Result<Vocabulary> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, u64> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let doc_freq: Vec<u64> = df.values().copied().collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            terms,
            index,
            doc_freq,
            n_docs: corpus.len() as u64,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn doc_freq(&self, index: usize) -> u64 {
        self.doc_freq[index]
    }

    /// Smoothed inverse document frequency for a column.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[index] as f64)).ln() + 1.0
    }

    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            n_docs: self.n_docs,
            terms: self
                .terms
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i, self.doc_freq[i]))
                .collect(),
        };
        serde_json::to_string(&file).expect("vocabulary serializes")
    }

    pub fn from_json(json: &str) -> Result<Vocabulary> {
        let file: VocabularyFile = serde_json::from_str(json)?;
        let mut terms = vec![String::new(); file.terms.len()];
        let mut doc_freq = vec![0u64; file.terms.len()];
        for (term, index, df) in &file.terms {
            if *index >= terms.len() || !terms[*index].is_empty() {
                return Err(Error::ModelFormat(format!("bad vocabulary index {index}")));
            }
            terms[*index] = term.clone();
            doc_freq[*index] = *df;
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            terms,
            index,
            doc_freq,
            n_docs: file.n_docs,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &std::path::Path) -> Result<Vocabulary> {
        let bytes = std::fs::read(path)?;
        Vocabulary::from_json(&String::from_utf8_lossy(&bytes))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> Fingerprint {
        let digest = Sha256::digest(self.to_json().as_bytes());
        Fingerprint(format!("{digest:x}"))
    }
}

/// How counts become weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Smoothed idf times raw tf, L2-normalized. The default.
    TfIdf,
    /// Plain term counts, no normalization.
    RawCount,
}

/// Sparse vector: `(column, weight)` entries strictly increasing by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value(&self, column: usize) -> f64 {
        match self.entries.binary_search_by_key(&column, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.entries[i].1 * other.entries[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() || j < other.entries.len() {
            let a = self.entries.get(i);
            let b = other.entries.get(j);
            match (a, b) {
                (Some(&(ca, va)), Some(&(cb, vb))) => match ca.cmp(&cb) {
                    std::cmp::Ordering::Less => {
                        acc += va * va;
                        i += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        acc += vb * vb;
                        j += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        let d = va - vb;
                        acc += d * d;
                        i += 1;
                        j += 1;
                    }
                },
                (Some(&(_, va)), None) => {
                    acc += va * va;
                    i += 1;
                }
                (None, Some(&(_, vb))) => {
                    acc += vb * vb;
                    j += 1;
                }
                (None, None) => break,
            }
        }
        acc
    }
}

/// Map a token sequence to a TF-IDF vector under a fitted vocabulary.
/// Out-of-vocabulary tokens are ignored; nonzero vectors are L2-normalized.
pub fn transform(doc: &TokenSequence, vocab: &Vocabulary) -> FeatureVector {
    transform_with(doc, vocab, Weighting::TfIdf)
}

/// As [`transform`] with an explicit weighting mode.
pub fn transform_with(doc: &TokenSequence, vocab: &Vocabulary, weighting: Weighting) -> FeatureVector {
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for token in doc {
        if let Some(col) = vocab.index_of(token) {
            *counts.entry(col).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts.into_iter().collect();
    entries.sort_unstable_by_key(|e| e.0);
    if weighting == Weighting::TfIdf {
        for (col, weight) in &mut entries {
            *weight *= vocab.idf(*col);
        }
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, weight) in &mut entries {
                *weight /= norm;
            }
        }
    }
    FeatureVector { entries }
}

/// Row-major sparse matrix bound to the vocabulary that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<FeatureVector>,
    dim: usize,
    fingerprint: Fingerprint,
}

impl FeatureMatrix {
    /// Transform a corpus of token sequences under a vocabulary.
    pub fn from_corpus(corpus: &[TokenSequence], vocab: &Vocabulary, weighting: Weighting) -> FeatureMatrix {
        let rows = exec::map_items(corpus, |doc| transform_with(doc, vocab, weighting));
        FeatureMatrix {
            rows,
            dim: vocab.len(),
            fingerprint: vocab.fingerprint(),
        }
    }

    /// Wrap hand-built rows (tests, fixtures).
    pub fn from_rows(rows: Vec<FeatureVector>, dim: usize) -> FeatureMatrix {
        debug_assert!(rows.iter().all(|r| r.entries.iter().all(|e| e.0 < dim)));
        FeatureMatrix {
            rows,
            dim,
            fingerprint: Fingerprint::adhoc(dim),
        }
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            dim: self.dim,
            fingerprint: self.fingerprint.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &FeatureVector {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }
}
