use std::collections::HashMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::retrieval::{cosine, Encoder};
use crate::text::content_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Document–topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(k: usize) -> Self {
        LdaConfig { k, alpha: None, beta: 0.01, iterations: 500, seed: 0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub vocabulary: Vec<String>,
    /// k × V topic–word distributions.
    pub phi: Array2<f64>,
    /// D × k document–topic distributions.
    pub theta: Array2<f64>,
    /// Final topic of every token, per document.
    pub assignments: Vec<Vec<usize>>,
    /// k × V assignment counts.
    pub topic_word_counts: Array2<usize>,
}

/// Collapsed Gibbs sampling over token–topic assignments. Documents are
/// reduced to content tokens first; `phi` and `theta` come from the smoothed
/// counts after the last sweep.
pub fn lda_fit<S: AsRef<str>>(docs: &[S], config: &LdaConfig) -> Result<TopicModel, AnalyticsError> {
    let k = config.k;
    if k == 0 {
        return Err(AnalyticsError::InvalidK);
    }
    let mut vocab_index: HashMap<String, usize> = HashMap::new();
    let mut vocabulary = Vec::new();
    let words: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| {
            content_tokens(d.as_ref())
                .into_iter()
                .map(|t| {
                    *vocab_index.entry(t.clone()).or_insert_with(|| {
                        vocabulary.push(t);
                        vocabulary.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    if vocabulary.is_empty() {
        return Err(AnalyticsError::EmptyCorpus);
    }
    let v = vocabulary.len();
    let (alpha, beta) = (config.alpha(), config.beta);
    let v_beta = v as f64 * beta;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut n_dk = Array2::<usize>::zeros((words.len(), k));
    let mut n_kw = Array2::<usize>::zeros((k, v));
    let mut n_k = vec![0usize; k];
    let mut z: Vec<Vec<usize>> = words
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            doc.iter()
                .map(|&w| {
                    let t = rng.gen_range(0..k);
                    n_dk[[d, t]] += 1;
                    n_kw[[t, w]] += 1;
                    n_k[t] += 1;
                    t
                })
                .collect()
        })
        .collect();

    let mut cumulative = vec![0.0; k];
    for _ in 0..config.iterations {
        for (d, doc) in words.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                n_dk[[d, old]] -= 1;
                n_kw[[old, w]] -= 1;
                n_k[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (n_dk[[d, t]] as f64 + alpha) * (n_kw[[t, w]] as f64 + beta) / (n_k[t] as f64 + v_beta);
                    cumulative[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);
                z[d][i] = new;
                n_dk[[d, new]] += 1;
                n_kw[[new, w]] += 1;
                n_k[new] += 1;
            }
        }
    }

    let phi = Array2::from_shape_fn((k, v), |(t, w)| (n_kw[[t, w]] as f64 + beta) / (n_k[t] as f64 + v_beta));
    let theta = Array2::from_shape_fn((words.len(), k), |(d, t)| {
        (n_dk[[d, t]] as f64 + alpha) / (words[d].len() as f64 + k as f64 * alpha)
    });
    Ok(TopicModel { k, vocabulary, phi, theta, assignments: z, topic_word_counts: n_kw })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordWeight {
    pub word: String,
    pub weight: f64,
}

/// Highest-probability words of a topic; ties in lexicographic order.
pub fn topic_top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<WordWeight>, AnalyticsError> {
    if topic >= model.k {
        return Err(AnalyticsError::BadTopicIndex(topic));
    }
    let row = model.phi.row(topic);
    let mut order: Vec<usize> = (0..model.vocabulary.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then_with(|| model.vocabulary[a].cmp(&model.vocabulary[b])));
    Ok(order
        .into_iter()
        .take(n)
        .map(|w| WordWeight { word: model.vocabulary[w].clone(), weight: row[w] })
        .collect())
}

/// Phi-weighted mean of the embeddings of the topic's top 10 words.
pub fn topic_vector(model: &TopicModel, topic: usize, encoder: &dyn Encoder) -> Result<Vec<f64>, AnalyticsError> {
    let top = topic_top_words(model, topic, 10)?;
    let total: f64 = top.iter().map(|w| w.weight).sum();
    let mut out = vec![0.0; encoder.dim()];
    for w in &top {
        for (o, e) in out.iter_mut().zip(encoder.encode(&w.word)) {
            *o += w.weight / total * e;
        }
    }
    Ok(out)
}

/// The tweet whose embedding is most cosine-similar to the topic vector;
/// ties go to the smaller tweet id.
pub fn representative_tweet<'a>(
    model: &TopicModel,
    topic: usize,
    tweets: &[(&'a str, &str)],
    encoder: &dyn Encoder,
) -> Result<&'a str, AnalyticsError> {
    if tweets.is_empty() {
        return Err(AnalyticsError::NoTweets);
    }
    let target = topic_vector(model, topic, encoder)?;
    let mut best: Option<(&str, f64)> = None;
    for &(id, text) in tweets {
        let score = cosine(&encoder.encode(text), &target);
        best = match best {
            Some((bid, bs)) if bs > score || (bs == score && bid <= id) => Some((bid, bs)),
            _ => Some((id, score)),
        };
    }
    Ok(best.expect("non-empty").0)
}
