use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::counts::{tweet_count_series, word_cloud, DayCount, WordCloud, WORD_CLOUD_SIZE};
use super::geo::{geo_points, Gazetteer, GeoPoint};
use super::pca::pca_project;
use super::sentiment::{sentiment, Lexicon, SentimentLabel};
use super::topics::{lda_fit, representative_tweet, topic_top_words, topic_vector, LdaConfig, WordWeight};
use super::trees::{propagation_graph_export, spread_metrics, ClaimTrees, PropagationGraph, SpreadRecord};
use super::{AnalyticsError, StancedTweet};
use crate::corpus::PropagationTree;
use crate::inference::{tweet_stances, NliProvider, Stance};
use crate::retrieval::Encoder;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelOptions {
    pub topics: usize,
    pub lda_iterations: usize,
    pub seed: u64,
    pub word_cloud_size: usize,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions { topics: 5, lda_iterations: 500, seed: 0, word_cloud_size: WORD_CLOUD_SIZE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic: usize,
    pub top_words: Vec<WordWeight>,
    /// Position in the 2-D projection of the topic vectors.
    pub x: f64,
    pub y: f64,
    pub representative_tweet: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicsPanel {
    pub topics: Vec<TopicSummary>,
    pub explained_variance_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSpread {
    pub tree_id: String,
    pub records: Vec<SpreadRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentSummary {
    pub negative: usize,
    pub neutral: usize,
    pub positive: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StanceSummary {
    pub support: usize,
    pub neutral: usize,
    pub refute: usize,
}

/// Everything the rumour dashboard draws for one claim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RumourPanels {
    pub tweet_count: Vec<DayCount>,
    pub word_cloud: WordCloud,
    pub topics: TopicsPanel,
    pub spread: Vec<TreeSpread>,
    /// Largest retrieved tree plus comparison claims; absent without trees.
    pub propagation: Option<PropagationGraph>,
    pub map: Vec<GeoPoint>,
    pub sentiment: SentimentSummary,
    pub stances: StanceSummary,
}

fn topics_panel(
    tweets: &[StancedTweet],
    encoder: &dyn Encoder,
    options: &PanelOptions,
) -> Result<TopicsPanel, AnalyticsError> {
    let texts: Vec<&str> = tweets.iter().map(|t| t.node.text.as_str()).collect();
    let config = LdaConfig { iterations: options.lda_iterations, seed: options.seed, ..LdaConfig::new(options.topics) };
    let model = match lda_fit(&texts, &config) {
        Ok(m) => m,
        Err(AnalyticsError::EmptyCorpus) => return Ok(TopicsPanel::default()),
        Err(e) => return Err(e),
    };
    let pairs: Vec<(&str, &str)> = tweets.iter().map(|t| (t.node.tweet_id.as_str(), t.node.text.as_str())).collect();

    let mut vectors = Array2::zeros((model.k, encoder.dim()));
    for k in 0..model.k {
        vectors.row_mut(k).assign(&ndarray::ArrayView1::from(&topic_vector(&model, k, encoder)?));
    }
    let (coords, ratios) = match pca_project(&vectors, 2.min(encoder.dim())) {
        Ok(p) => (p.coordinates, p.explained_variance_ratio),
        Err(AnalyticsError::TooFewPoints(_) | AnalyticsError::DegenerateInput) => (vec![vec![0.0, 0.0]; model.k], vec![]),
        Err(e) => return Err(e),
    };
    let mut topics = Vec::with_capacity(model.k);
    for k in 0..model.k {
        topics.push(TopicSummary {
            topic: k,
            top_words: topic_top_words(&model, k, 10)?,
            x: coords[k].first().copied().unwrap_or(0.0),
            y: coords[k].get(1).copied().unwrap_or(0.0),
            representative_tweet: representative_tweet(&model, k, &pairs, encoder).ok().map(String::from),
        });
    }
    Ok(TopicsPanel { topics, explained_variance_ratio: ratios })
}

/// Builds all dashboard panels for the trees retrieved for `claim`.
/// Tweet stances come from `nli` with each tweet as premise.
pub fn build_rumour_panels(
    claim: &str,
    trees: &[&PropagationTree],
    nli: &dyn NliProvider,
    encoder: &dyn Encoder,
    comparison_pool: &[ClaimTrees],
    options: &PanelOptions,
) -> Result<RumourPanels, AnalyticsError> {
    if trees.is_empty() {
        return Ok(RumourPanels::default());
    }
    let nodes: Vec<_> = trees.iter().flat_map(|t| &t.nodes).collect();
    let texts: Vec<&str> = nodes.iter().map(|n| n.text.as_str()).collect();
    let stances = tweet_stances(claim, &texts, nli);
    let tweets: Vec<StancedTweet> = nodes.iter().zip(&stances).map(|(&node, &stance)| StancedTweet { node, stance }).collect();

    let mut sentiment_summary = SentimentSummary::default();
    let lexicon = Lexicon::bundled();
    for t in &texts {
        match sentiment(t, lexicon).label {
            SentimentLabel::Negative => sentiment_summary.negative += 1,
            SentimentLabel::Neutral => sentiment_summary.neutral += 1,
            SentimentLabel::Positive => sentiment_summary.positive += 1,
        }
    }
    let mut stance_summary = StanceSummary::default();
    for s in &stances {
        match s {
            Stance::Support => stance_summary.support += 1,
            Stance::Neutral => stance_summary.neutral += 1,
            Stance::Refute => stance_summary.refute += 1,
        }
    }

    let spread = trees
        .iter()
        .map(|t| Ok(TreeSpread { tree_id: t.tree_id.clone(), records: spread_metrics(t)? }))
        .collect::<Result<_, AnalyticsError>>()?;
    let largest = trees
        .iter()
        .max_by(|a, b| a.size().cmp(&b.size()).then_with(|| b.tree_id.cmp(&a.tree_id)))
        .expect("non-empty");

    Ok(RumourPanels {
        tweet_count: tweet_count_series(trees),
        word_cloud: word_cloud(&tweets, options.word_cloud_size),
        topics: topics_panel(&tweets, encoder, options)?,
        spread,
        propagation: Some(propagation_graph_export(largest, comparison_pool, options.seed)?),
        map: geo_points(&tweets, Gazetteer::bundled()),
        sentiment: sentiment_summary,
        stances: stance_summary,
    })
}
