//! Engine for claim fact-checking and tweet-tree rumour detection.

pub mod corpus;
pub mod text;
pub mod inference;
pub mod retrieval;
pub mod checkpoint;
pub mod nlisan;
pub mod optim;
pub mod rumournet;
pub mod analytics;
