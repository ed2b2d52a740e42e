use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{InvertedIndex, Reranker, RetrievalError};

pub const AP_CUTOFFS: [usize; 4] = [5, 10, 20, 100];

/// Average precision truncated at rank `k`: the mean of precision@i over the
/// ranks i ≤ k that hold a relevant item, divided by min(|relevant|, k).
pub fn average_precision_at_k<S: AsRef<str>>(ranking: &[S], relevant: &HashSet<String>, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    if relevant.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    let mut seen = HashSet::new();
    for (i, item) in ranking.iter().take(k).enumerate() {
        let item = item.as_ref();
        if relevant.contains(item) && seen.insert(item) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / relevant.len().min(k) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedQuery {
    pub query: String,
    pub relevant: Vec<String>,
}

pub fn load_judged_queries(path: impl AsRef<Path>) -> Result<Vec<JudgedQuery>, RetrievalError> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| RetrievalError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| RetrievalError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| RetrievalError::Malformed { line: i + 1, reason: e.to_string() })?);
    }
    Ok(out)
}

/// Which ranking a pipeline evaluation scores.
#[derive(Clone, Copy)]
pub enum PipelineConfig<'a> {
    Bm25,
    /// BM25 top-`n1` reordered by the reranker.
    Bm25Rerank { reranker: &'a dyn Reranker, n1: usize },
}

impl PipelineConfig<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineConfig::Bm25 => "BM25",
            PipelineConfig::Bm25Rerank { .. } => "BM25+rerank",
        }
    }

    pub fn rank(&self, index: &InvertedIndex, query: &str, depth: usize) -> Vec<String> {
        match *self {
            PipelineConfig::Bm25 => index.search(query, depth).into_iter().map(|(id, _)| id).collect(),
            PipelineConfig::Bm25Rerank { reranker, n1 } => {
                let mut scored: Vec<(String, f64)> = index
                    .search(query, n1)
                    .into_iter()
                    .map(|(id, _)| {
                        let s = reranker.score(query, &index.unit(&id).expect("indexed").text);
                        (id, s)
                    })
                    .collect();
                scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                scored.into_iter().take(depth).map(|(id, _)| id).collect()
            }
        }
    }
}

/// One row of mean AP@k values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApRow {
    pub pipeline: String,
    pub queries: usize,
    /// Keyed by cutoff k.
    pub ap: BTreeMap<usize, f64>,
}

/// Mean AP@k over already-ranked queries.
pub fn mean_ap(pipeline: &str, runs: &[(Vec<String>, HashSet<String>)]) -> Result<ApRow, RetrievalError> {
    if runs.is_empty() {
        return Err(RetrievalError::NoQueries);
    }
    let ap = AP_CUTOFFS
        .iter()
        .map(|&k| {
            let total: f64 = runs.iter().map(|(r, rel)| average_precision_at_k(r, rel, k)).sum();
            (k, total / runs.len() as f64)
        })
        .collect();
    Ok(ApRow { pipeline: pipeline.to_string(), queries: runs.len(), ap })
}

pub fn evaluate_pipeline(
    queries: &[JudgedQuery],
    index: &InvertedIndex,
    config: PipelineConfig<'_>,
) -> Result<ApRow, RetrievalError> {
    let depth = *AP_CUTOFFS.iter().max().unwrap();
    let runs: Vec<_> = queries
        .iter()
        .map(|q| (config.rank(index, &q.query, depth), q.relevant.iter().cloned().collect::<HashSet<_>>()))
        .collect();
    mean_ap(config.name(), &runs)
}
