//! BM25 retrieval, embedding adapters, the multi-stage evidence pipeline and
//! the AP@k evaluation harness.

mod encoder;
mod eval;
mod index;
mod pipeline;

pub use encoder::{cosine, CosineReranker, Encoder, HashedTfidfEncoder, Reranker, DEFAULT_ENCODER_DIM};
pub use eval::{
    average_precision_at_k, evaluate_pipeline, load_judged_queries, mean_ap, ApRow, JudgedQuery, PipelineConfig,
    AP_CUTOFFS,
};
pub use index::{bm25_idf, bm25_search, build_index, build_index_with, Bm25Params, InvertedIndex, Unit, UnitKind};
pub use pipeline::{retrieve_evidence, EvidenceKind, EvidenceRecord, EvidenceSet, RetrievalConfig};

use thiserror::Error;

use crate::corpus::Paragraph;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("no units to index")]
    EmptyCorpus,
    #[error("duplicate unit id {0}")]
    DuplicateUnit(String),
    #[error("no judged queries")]
    NoQueries,
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("inference: {0}")]
    Inference(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<&Paragraph> for Unit {
    fn from(p: &Paragraph) -> Self {
        Unit { unit_id: p.para_id.clone(), text: p.raw_text.clone(), source: p.source.clone(), doc_type: p.doc_type.clone() }
    }
}
