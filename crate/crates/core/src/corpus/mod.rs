//! Documents, claims and propagation trees: data model, chunking, ingestion
//! and a file-backed store.
//!
//! The store keeps three append-only line-record files (`documents.jsonl`,
//! `claims.jsonl`, `trees.jsonl`) plus `tree_labels.jsonl` for label updates,
//! and rebuilds its in-memory indices when opened.

mod chunk;
mod store;
mod types;
mod validate;

pub use chunk::{chunk_document, MAX_PARAGRAPH_TOKENS};
pub use store::{
    ClaimIngestReport, DocumentIngestReport, Store, TreeIngestReport, TreeNodeRecord, TreeRejection,
    DEFAULT_MIN_TREE_SIZE,
};
pub use types::*;
pub use validate::{validate_tree, TreeReport, TreeViolation};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("document {0} has no tokens")]
    EmptyDocument(String),
    #[error("node {0} refers to a parent that is not in its tree")]
    OrphanNode(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.display().to_string(), source }
    }

    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        CorpusError::MalformedRecord { line, reason: reason.into() }
    }
}
