use std::collections::HashMap;
use std::sync::Arc;

use super::InvertedIndex;
use crate::text::tokenize;

/// Text to fixed-length dense vector.
pub trait Encoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Vec<f64>;
}

/// Scores how relevant a unit text is to a query. Higher is more relevant.
pub trait Reranker: Send + Sync {
    fn score(&self, query: &str, text: &str) -> f64;
}

pub const DEFAULT_ENCODER_DIM: usize = 256;

/// Signed feature hashing of tf·idf weights into `dim` buckets, L2-normalised.
#[derive(Debug, Clone)]
pub struct HashedTfidfEncoder {
    dim: usize,
    idf: HashMap<String, f64>,
    default_idf: f64,
}

impl HashedTfidfEncoder {
    /// Every term weighted by its raw frequency (idf = 1).
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "encoder dimension must be positive");
        HashedTfidfEncoder { dim, idf: HashMap::new(), default_idf: 1.0 }
    }

    /// Smoothed idf `ln((N+1)/(df+1)) + 1` taken from an index; terms the
    /// index has never seen get `ln(N+1) + 1`.
    pub fn from_index(index: &InvertedIndex, dim: usize) -> Self {
        assert!(dim > 0, "encoder dimension must be positive");
        let n = index.len() as f64;
        let idf = index
            .terms()
            .map(|(t, df)| (t.to_string(), ((n + 1.0) / (df as f64 + 1.0)).ln() + 1.0))
            .collect();
        HashedTfidfEncoder { dim, idf, default_idf: (n + 1.0).ln() + 1.0 }
    }

    pub fn with_dim(&self, dim: usize) -> Self {
        HashedTfidfEncoder { dim, ..self.clone() }
    }
}

/// 64-bit FNV-1a; stable across platforms and releases.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Encoder for HashedTfidfEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Vec<f64> {
        let mut tf: HashMap<String, f64> = HashMap::new();
        for t in tokenize(text) {
            *tf.entry(t).or_insert(0.0) += 1.0;
        }
        let mut terms: Vec<_> = tf.into_iter().collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut v = vec![0.0; self.dim];
        for (term, count) in terms {
            let h = fnv1a(term.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            let idf = self.idf.get(&term).copied().unwrap_or(self.default_idf);
            v[bucket] += sign * count * idf;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Cosine of encoder embeddings.
#[derive(Clone)]
pub struct CosineReranker {
    encoder: Arc<dyn Encoder>,
}

impl CosineReranker {
    pub fn new(encoder: Arc<dyn Encoder>) -> Self {
        CosineReranker { encoder }
    }
}

impl Reranker for CosineReranker {
    fn score(&self, query: &str, text: &str) -> f64 {
        cosine(&self.encoder.encode(query), &self.encoder.encode(text))
    }
}
