//! Interpolated count-based n-gram language model with a uniform floor.
//!
//! For a context `c`, the model returns
//!
//! ```text
//! q(y | c) = (1 - α) Σ_k λ_k ML_k(y | last k-1 tokens of c) + α / |V|
//! ```
//!
//! where `ML_k` is the maximum-likelihood k-gram estimate. An order whose
//! context was never observed contributes the uniform distribution instead.
//! With `α > 0` every token, BOS included, keeps at least `α / |V|` mass.

mod format;
mod vocab;

use std::collections::{BTreeMap, HashMap};

pub use format::{FORMAT_MAGIC, FORMAT_VERSION};
pub use vocab::{tokenize, Vocab, BOS, BOS_TOKEN, EOS, EOS_TOKEN, UNK, UNK_TOKEN};

use crate::dist::{CategoricalLogDist, TokenId};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;

const LAMBDA_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub order: usize,
    /// Interpolation weights, index `k - 1` for k-grams.
    pub lambdas: Vec<f64>,
    /// Mass `α` spread uniformly over the vocabulary.
    pub floor: f64,
    /// Words seen fewer times than this become UNK.
    pub min_count: u64,
    pub lowercase: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            order: 3,
            lambdas: vec![0.1, 0.3, 0.6],
            floor: 0.01,
            min_count: 1,
            lowercase: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::invalid("order must be at least 1"));
        }
        if self.lambdas.len() != self.order {
            return Err(Error::invalid(format!(
                "expected {} interpolation weights for order {}, got {}",
                self.order,
                self.order,
                self.lambdas.len()
            )));
        }
        if self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::invalid("interpolation weights must be non-negative"));
        }
        let sum: f64 = self.lambdas.iter().sum();
        if (sum - 1.0).abs() > LAMBDA_SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "interpolation weights must sum to 1, got {sum}"
            )));
        }
        // A zero floor is accepted for exact maximum-likelihood checks.
        if !(0.0..1.0).contains(&self.floor) {
            return Err(Error::invalid(format!(
                "floor mass must lie in [0, 1), got {}",
                self.floor
            )));
        }
        if self.min_count == 0 {
            return Err(Error::invalid("min_count must be at least 1"));
        }
        Ok(())
    }
}

/// Next-token counts observed after one context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct ContextCounts {
    pub(crate) total: u64,
    pub(crate) next: BTreeMap<TokenId, u64>,
}

impl ContextCounts {
    fn add(&mut self, token: TokenId, n: u64) {
        *self.next.entry(token).or_insert(0) += n;
        self.total += n;
    }
}

/// `tables[k - 1]` maps each length-`k-1` context to its k-gram counts.
type CountTables = Vec<BTreeMap<Vec<TokenId>, ContextCounts>>;

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    config: TrainConfig,
    vocab: Vocab,
    tables: CountTables,
}

impl NGramModel {
    /// A model with no counts: every order falls back to uniform.
    pub fn untrained(vocab: Vocab, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let tables = vec![BTreeMap::new(); config.order];
        Ok(Self {
            config,
            vocab,
            tables,
        })
    }

    /// Trains on one document per line. Blank lines are skipped.
    pub fn train<I, S>(lines: I, config: TrainConfig) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        config.validate()?;
        let docs: Vec<Vec<String>> = lines
            .into_iter()
            .map(|l| tokenize(l.as_ref(), config.lowercase))
            .filter(|t| !t.is_empty())
            .collect();
        if docs.is_empty() {
            return Err(Error::invalid("training corpus has no non-blank lines"));
        }

        let mut freq: HashMap<&str, u64> = HashMap::new();
        for w in docs.iter().flatten() {
            *freq.entry(w.as_str()).or_insert(0) += 1;
        }
        let mut words: Vec<&str> = freq
            .iter()
            .filter(|(w, &c)| c >= config.min_count && ![BOS_TOKEN, EOS_TOKEN, UNK_TOKEN].contains(w))
            .map(|(w, _)| *w)
            .collect();
        words.sort_unstable();
        let vocab = Vocab::new(words)?;

        let m = config.order;
        let mut tables: CountTables = vec![BTreeMap::new(); m];
        let mut padded: Vec<TokenId> = Vec::new();
        for doc in &docs {
            padded.clear();
            padded.extend(std::iter::repeat_n(BOS, m - 1));
            padded.extend(doc.iter().map(|w| vocab.id(w)));
            padded.push(EOS);
            for i in (m - 1)..padded.len() {
                let y = padded[i];
                for k in 1..=m {
                    let ctx = padded[i + 1 - k..i].to_vec();
                    tables[k - 1].entry(ctx).or_default().add(y, 1);
                }
            }
        }

        Ok(Self {
            config,
            vocab,
            tables,
        })
    }

    pub(crate) fn from_parts(config: TrainConfig, vocab: Vocab, tables: CountTables) -> Result<Self> {
        config.validate()?;
        if tables.len() != config.order {
            return Err(Error::format("tables", "table count does not match order"));
        }
        Ok(Self {
            config,
            vocab,
            tables,
        })
    }

    pub(crate) fn tables(&self) -> &CountTables {
        &self.tables
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn order(&self) -> usize {
        self.config.order
    }

    pub fn floor(&self) -> f64 {
        self.config.floor
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Raw count of `token` following `context` (`context.len() < order`).
    pub fn count(&self, context: &[TokenId], token: TokenId) -> u64 {
        self.tables
            .get(context.len())
            .and_then(|t| t.get(context))
            .and_then(|c| c.next.get(&token))
            .copied()
            .unwrap_or(0)
    }

    /// Sum of all unigram counts: corpus tokens plus one EOS per document.
    pub fn total_tokens(&self) -> u64 {
        self.tables[0].get(&[][..]).map_or(0, |c| c.total)
    }

    /// Tokenizes with the model's casing and maps to ids.
    pub fn encode_text(&self, text: &str) -> Vec<TokenId> {
        self.vocab.encode(&tokenize(text, self.config.lowercase))
    }

    /// Mixture probabilities (not logged) for the next token.
    pub fn next_probs(&self, context: &[TokenId]) -> Result<Vec<f64>> {
        let v = self.vocab.len();
        if let Some(&bad) = context.iter().find(|&&t| t as usize >= v) {
            return Err(Error::invalid(format!(
                "context token {bad} out of range for vocabulary of size {v}"
            )));
        }
        let m = self.config.order;
        let keep = 1.0 - self.config.floor;

        // BOS^(m-1) ++ context, truncated to the last m-1 tokens.
        let mut history = vec![BOS; (m - 1).saturating_sub(context.len())];
        history.extend_from_slice(&context[context.len().saturating_sub(m - 1)..]);

        let mut probs = vec![0.0; v];
        let mut uniform_mass = self.config.floor;
        for k in 1..=m {
            let lambda = self.config.lambdas[k - 1];
            if lambda == 0.0 {
                continue;
            }
            let ctx = &history[history.len() - (k - 1)..];
            match self.tables[k - 1].get(ctx) {
                Some(c) if c.total > 0 => {
                    let w = keep * lambda / c.total as f64;
                    for (&y, &n) in &c.next {
                        probs[y as usize] += w * n as f64;
                    }
                }
                _ => uniform_mass += keep * lambda,
            }
        }
        let share = uniform_mass / v as f64;
        for p in probs.iter_mut() {
            *p += share;
        }
        Ok(probs)
    }
}

impl LanguageModel for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn next_dist(&self, context: &[TokenId]) -> Result<CategoricalLogDist> {
        let probs = self.next_probs(context)?;
        Ok(CategoricalLogDist::normalize_unchecked(
            probs.into_iter().map(f64::ln).collect(),
        ))
    }
}
