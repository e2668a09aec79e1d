//! Truncated sampling for text generation.
//!
//! The crate provides:
//!
//! - [`dist`]: log-space categorical distributions with entropy, surprisal and
//!   the ε deviation `|H - I(y)|`;
//! - [`ngram`]: a trainable interpolated n-gram model with a uniform floor;
//! - [`strategies`]: greedy, ancestral, temperature, top-k, nucleus and
//!   locally typical truncation;
//! - [`generation`]: a seeded decode loop that records per-token diagnostics;
//! - [`metrics`]: perplexity, REP, Zipf coefficient, n-gram diversity and the
//!   ε profile.
//!
//! All information quantities are in nats unless a name says otherwise.

pub mod dist;
pub mod error;
pub mod generation;
pub mod lm;
pub mod metrics;
pub mod ngram;
pub mod rng;
pub mod strategies;

pub use dist::{CategoricalLogDist, TokenId};
pub use error::{Error, Result};
pub use generation::{batch_generate, generate, GenerationRecord, Termination, TokenDiagnostics};
pub use lm::{perplexity, sequence_information, sequence_information_after, LanguageModel};
pub use ngram::{tokenize, NGramModel, TrainConfig, Vocab};
pub use rng::RandomSource;
pub use strategies::{apply_strategy, truncate_nucleus, truncate_top_k, truncate_typical, StrategyConfig, TruncatedDist};
