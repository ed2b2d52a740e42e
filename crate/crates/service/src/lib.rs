//! Queued HTTP service over the fact-checking and rumour-detection engine.

pub mod api;
pub mod autocomplete;
pub mod cache;
pub mod clock;
pub mod config;
pub mod demo;
pub mod engine;
pub mod jobs;

pub use config::ServiceConfig;
pub use engine::{Engine, PanaceaEngine};
pub use jobs::{Job, JobKind, JobState, Service, ServiceError, ServiceOptions};
