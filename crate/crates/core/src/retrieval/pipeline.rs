use serde::{Deserialize, Serialize};

use super::{cosine, Encoder, InvertedIndex, Reranker, RetrievalError};
use crate::inference::{stance_of, NliProvider, NliTriplet, Stance};
use crate::text::split_sentences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    /// BM25 candidates.
    pub n1: usize,
    /// Units kept after reranking.
    pub n2: usize,
    /// Sentences kept per unit.
    pub n3: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { n1: 100, n2: 10, n3: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvidenceKind {
    Document,
    Sentence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub unit_id: String,
    /// For sentences, the unit the sentence was taken from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub text: String,
    /// Cosine between claim and text embeddings.
    pub relevance: f64,
    pub stance_triplet: NliTriplet,
    pub stance: Stance,
    pub source: String,
    pub doc_type: String,
    pub kind: EvidenceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub documents: Vec<EvidenceRecord>,
    pub sentences: Vec<EvidenceRecord>,
    /// BM25 candidates with their scores, in BM25 order.
    pub stage1: Vec<(String, f64)>,
    /// Kept candidates with their reranker scores, in reranker order.
    pub stage2: Vec<(String, f64)>,
}

/// BM25 top-`n1`, rerank and keep `n2`, then the `n3` sentences of each kept
/// unit closest to the claim.
pub fn retrieve_evidence(
    claim: &str,
    index: &InvertedIndex,
    encoder: &dyn Encoder,
    reranker: &dyn Reranker,
    nli: &dyn NliProvider,
    config: RetrievalConfig,
) -> Result<EvidenceSet, RetrievalError> {
    if index.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let stage1 = index.search(claim, config.n1);

    let mut stage2: Vec<(String, f64)> = stage1
        .iter()
        .map(|(id, _)| {
            let unit = index.unit(id).expect("search returns indexed ids");
            (id.clone(), reranker.score(claim, &unit.text))
        })
        .collect();
    stage2.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    stage2.truncate(config.n2);

    let claim_vec = encoder.encode(claim);
    let mut documents = Vec::with_capacity(stage2.len());
    let mut sentences = Vec::new();
    for (id, _) in &stage2 {
        let unit = index.unit(id).expect("stage-2 ids come from the index");
        documents.push(record(claim, &claim_vec, id, None, &unit.text, &unit.source, &unit.doc_type, EvidenceKind::Document, encoder, nli)?);

        let mut scored: Vec<(usize, String, f64)> = split_sentences(&unit.text)
            .into_iter()
            .enumerate()
            .map(|(k, s)| {
                let rel = cosine(&claim_vec, &encoder.encode(&s));
                (k, s, rel)
            })
            .collect();
        scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        for (k, s, _) in scored.into_iter().take(config.n3) {
            let sid = format!("{id}/s{k}");
            sentences.push(record(
                claim, &claim_vec, &sid, Some(id), &s, &unit.source, &unit.doc_type, EvidenceKind::Sentence, encoder, nli,
            )?);
        }
    }
    Ok(EvidenceSet { documents, sentences, stage1, stage2 })
}

#[allow(clippy::too_many_arguments)]
fn record(
    claim: &str,
    claim_vec: &[f64],
    unit_id: &str,
    parent_id: Option<&String>,
    text: &str,
    source: &str,
    doc_type: &str,
    kind: EvidenceKind,
    encoder: &dyn Encoder,
    nli: &dyn NliProvider,
) -> Result<EvidenceRecord, RetrievalError> {
    let stance_triplet = nli.infer(text, claim);
    let stance = stance_of(&stance_triplet).map_err(|e| RetrievalError::Inference(e.to_string()))?;
    Ok(EvidenceRecord {
        unit_id: unit_id.to_string(),
        parent_id: parent_id.cloned(),
        text: text.to_string(),
        relevance: cosine(claim_vec, &encoder.encode(text)),
        stance_triplet,
        stance,
        source: source.to_string(),
        doc_type: doc_type.to_string(),
        kind,
    })
}
