use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub source: String,
    pub doc_type: String,
    pub url: String,
    pub date: NaiveDate,
}

/// A retrieval unit of at most `MAX_PARAGRAPH_TOKENS` tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub para_id: String,
    pub doc_id: String,
    pub ordinal: usize,
    /// The paragraph's tokens joined by single spaces.
    pub text: String,
    /// The span of the original body covering the same tokens, punctuation
    /// and casing intact. Sentence selection runs on this.
    pub raw_text: String,
    pub token_count: usize,
    pub source: String,
    pub doc_type: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClaimLabel {
    True,
    False,
    Unlabelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: String,
    pub text: String,
    pub label: ClaimLabel,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub subtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Coordinates { lat: f64, lon: f64 },
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetNode {
    pub tweet_id: String,
    pub parent_id: Option<String>,
    pub user_id: String,
    pub post_time: DateTime<Utc>,
    pub text: String,
    pub location: Option<Location>,
    pub retweet_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TreeStance {
    Support,
    Refute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RumourClass {
    Rumour,
    NonRumour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelProvenance {
    Annotated,
    Pseudo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RumourLabel {
    pub class: RumourClass,
    pub provenance: LabelProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationTree {
    pub tree_id: String,
    pub nodes: Vec<TweetNode>,
    pub claim_ref: Option<String>,
    pub stance_label: Option<TreeStance>,
    pub rumour_label: Option<RumourLabel>,
    pub rumour_prob: Option<f64>,
}

impl PropagationTree {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> Option<&TweetNode> {
        self.nodes.iter().find(|n| n.parent_id.is_none())
    }

    pub fn node(&self, tweet_id: &str) -> Option<&TweetNode> {
        self.nodes.iter().find(|n| n.tweet_id == tweet_id)
    }
}
