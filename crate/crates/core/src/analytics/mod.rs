//! Data behind the rumour dashboard: tweet counts, word clouds, topics,
//! spread, propagation graphs, the stance map and sentiment.

mod counts;
mod geo;
mod panels;
mod pca;
mod sentiment;
mod topics;
mod trees;

pub use counts::{tweet_count_series, word_cloud, DayCount, WordCloud, WordCount, WORD_CLOUD_SIZE};
pub use geo::{geo_points, stance_color, Gazetteer, GeoPoint, StanceColor};
pub use panels::{
    build_rumour_panels, PanelOptions, RumourPanels, SentimentSummary, StanceSummary, TopicSummary, TopicsPanel,
    TreeSpread,
};
pub use pca::{pca_project, PcaResult, POWER_MAX_ITERATIONS, POWER_TOLERANCE};
pub use sentiment::{
    label_for, sentiment, sentiment_words, valence_sum, Lexicon, SentimentLabel, SentimentScore, BOOSTER_INCREMENT,
    COMPOUND_ALPHA, LABEL_THRESHOLD, NEGATION_WINDOW,
};
pub use topics::{lda_fit, representative_tweet, topic_top_words, topic_vector, LdaConfig, TopicModel, WordWeight};
pub use trees::{
    export_tree_graph, propagation_graph_export, select_comparisons, spread_metrics, ClaimTrees, Comparison, GraphNode,
    PropagationGraph, SpreadRecord, TreeGraphExport, COMPARISON_COUNT, POPULAR_POOL,
};

use thiserror::Error;

use crate::corpus::TweetNode;
use crate::inference::Stance;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("no tokens left after stopword removal")]
    EmptyCorpus,
    #[error("topic count must be at least 1")]
    InvalidK,
    #[error("topic {0} does not exist")]
    BadTopicIndex(usize),
    #[error("no tweets")]
    NoTweets,
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("cannot project onto {requested} of {available} dimensions")]
    BadDimension { requested: usize, available: usize },
    #[error("all points are identical")]
    DegenerateInput,
    #[error("invalid tree {0}")]
    InvalidTree(String),
}

/// A tweet with its stance toward the claim under analysis.
#[derive(Debug, Clone, Copy)]
pub struct StancedTweet<'a> {
    pub node: &'a TweetNode,
    pub stance: Stance,
}
