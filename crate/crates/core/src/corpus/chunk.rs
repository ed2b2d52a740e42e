use super::{CorpusError, Document, Paragraph};
use crate::text::token_spans;

pub const MAX_PARAGRAPH_TOKENS: usize = 300;

/// Greedy left-to-right chunking of the document body into runs of at most
/// `max_tokens` tokens.
pub fn chunk_document(doc: &Document, max_tokens: usize) -> Result<Vec<Paragraph>, CorpusError> {
    assert!(max_tokens >= 1, "max_tokens must be positive");
    let spans = token_spans(&doc.body);
    if spans.is_empty() {
        return Err(CorpusError::EmptyDocument(doc.doc_id.clone()));
    }
    let runs: Vec<&[(usize, usize)]> = spans.chunks(max_tokens).collect();
    let mut out = Vec::with_capacity(runs.len());
    for (ordinal, run) in runs.iter().enumerate() {
        let text = run
            .iter()
            .map(|&(s, e)| doc.body[s..e].chars().flat_map(char::to_lowercase).collect::<String>())
            .collect::<Vec<_>>()
            .join(" ");
        // Raw span runs to the start of the next run so trailing punctuation
        // stays with the sentence it terminates.
        let raw_start = if ordinal == 0 { 0 } else { run[0].0 };
        let raw_end = runs
            .get(ordinal + 1)
            .map(|next| next[0].0)
            .unwrap_or(doc.body.len());
        out.push(Paragraph {
            para_id: format!("{}#{}", doc.doc_id, ordinal),
            doc_id: doc.doc_id.clone(),
            ordinal,
            text,
            raw_text: doc.body[raw_start..raw_end].trim().to_string(),
            token_count: run.len(),
            source: doc.source.clone(),
            doc_type: doc.doc_type.clone(),
        });
    }
    Ok(out)
}
