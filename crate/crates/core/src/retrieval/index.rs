use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RetrievalError;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitKind {
    Paragraph,
    TreeText,
}

/// A retrievable text with the metadata shown alongside evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub unit_id: String,
    pub text: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub doc_type: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

/// Okapi BM25 inverted index. Units are stored sorted by `unit_id`, so the
/// internal position order is also the id order used for tie-breaking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertedIndex {
    kind: UnitKind,
    params: Bm25Params,
    units: Vec<Unit>,
    /// term -> (unit position, term frequency), ascending by position.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
}

/// Shared by the index and by tests that need the bare scoring function.
pub fn bm25_idf(n_units: usize, doc_freq: usize) -> f64 {
    let n = n_units as f64;
    let df = doc_freq as f64;
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

pub fn build_index(units: Vec<Unit>, kind: UnitKind) -> Result<InvertedIndex, RetrievalError> {
    build_index_with(units, kind, Bm25Params::default())
}

pub fn build_index_with(
    mut units: Vec<Unit>,
    kind: UnitKind,
    params: Bm25Params,
) -> Result<InvertedIndex, RetrievalError> {
    if units.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    units.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));
    if let Some(w) = units.windows(2).find(|w| w[0].unit_id == w[1].unit_id) {
        return Err(RetrievalError::DuplicateUnit(w[0].unit_id.clone()));
    }
    let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(units.len());
    for (pos, unit) in units.iter().enumerate() {
        let tokens = tokenize(&unit.text);
        doc_lengths.push(tokens.len() as u32);
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        for (term, tf) in counts {
            postings.entry(term).or_default().push((pos as u32, tf));
        }
    }
    let avg_doc_length = doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / units.len() as f64;
    Ok(InvertedIndex { kind, params, units, postings, doc_lengths, avg_doc_length })
}

impl InvertedIndex {
    pub fn kind(&self) -> UnitKind {
        self.kind
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Number of indexed units.
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, unit_id: &str) -> Option<&Unit> {
        self.position(unit_id).map(|p| &self.units[p])
    }

    pub fn doc_length(&self, unit_id: &str) -> Option<usize> {
        self.position(unit_id).map(|p| self.doc_lengths[p] as usize)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Frequency of `term` in `unit_id`.
    pub fn term_frequency(&self, term: &str, unit_id: &str) -> usize {
        let Some(pos) = self.position(unit_id) else { return 0 };
        self.postings
            .get(term)
            .and_then(|list| list.binary_search_by_key(&(pos as u32), |&(p, _)| p).ok().map(|i| list[i].1 as usize))
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, usize)> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.len()))
    }

    fn position(&self, unit_id: &str) -> Option<usize> {
        self.units.binary_search_by(|u| u.unit_id.as_str().cmp(unit_id)).ok()
    }

    /// BM25 top-`k`. Each distinct query term contributes once. Results are
    /// ordered by descending score, then ascending `unit_id`; units scoring
    /// zero are omitted.
    pub fn search(&self, query: &str, k: usize) -> Vec<(String, f64)> {
        let terms: HashSet<String> = tokenize(query).into_iter().collect();
        if terms.is_empty() || k == 0 {
            return Vec::new();
        }
        let Bm25Params { k1, b } = self.params;
        let n = self.units.len();
        let mut scores = vec![0.0f64; n];
        let mut terms: Vec<_> = terms.into_iter().collect();
        terms.sort();
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = bm25_idf(n, list.len());
            for &(pos, tf) in list {
                let tf = tf as f64;
                let len_norm = 1.0 - b + b * self.doc_lengths[pos as usize] as f64 / self.avg_doc_length;
                scores[pos as usize] += idf * tf * (k1 + 1.0) / (tf + k1 * len_norm);
            }
        }
        let mut hits: Vec<(usize, f64)> = scores.into_iter().enumerate().filter(|&(_, s)| s > 0.0).collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hits.truncate(k);
        hits.into_iter().map(|(p, s)| (self.units[p].unit_id.clone(), s)).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| RetrievalError::Io(format!("{}: {e}", path.display())))?;
        serde_json::to_writer(std::io::BufWriter::new(f), self).map_err(|e| RetrievalError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| RetrievalError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| RetrievalError::Io(e.to_string()))
    }
}

pub fn bm25_search(index: &InvertedIndex, query: &str, k: usize) -> Vec<(String, f64)> {
    index.search(query, k)
}
