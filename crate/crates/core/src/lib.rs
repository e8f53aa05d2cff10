//! Stance and premise detection for health-mandate tweets.
//!
//! The crate covers the whole offline pipeline: corpus I/O and split
//! statistics, tweet cleaning and filtering, hashtag weak labeling and
//! annotation aggregation, hashed n-gram features with claim fusion and
//! dependency-rank features, a dual-view gated fusion classifier trained with
//! hand-written backpropagation, and the claim-averaged relevant-macro-F1
//! scorer with report emission.

pub mod chart;
pub mod corpus;
pub mod curation;
pub mod emotion;
pub mod eval;
pub mod features;
pub mod fixture;
pub mod hashing;
pub mod neural;
pub mod preprocess;

pub use corpus::{ClaimTopic, Premise, Stance, TweetRecord};
pub use corpus::Task;
