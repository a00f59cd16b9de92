//! Offline evaluation of Top-N recommenders, classical and LLM-prompted,
//! on accuracy, diversity, novelty and popularity-bias metrics.

pub mod corpus;
pub mod error;
pub mod harness;
pub mod llm_bridge;
pub mod matching;
pub mod metrics;
pub mod recommenders;
pub mod rng;
pub mod text;

pub use error::{Error, Result};
