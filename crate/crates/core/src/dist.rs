//! Categorical distributions stored as natural-log probabilities.
//!
//! All quantities are in nats. A [`CategoricalLogDist`] built by
//! [`CategoricalLogDist::log_normalize`] always has full support. The only way
//! to obtain a `-inf` entry is [`CategoricalLogDist::from_probs`] with an
//! explicit zero, which unsmoothed (zero-floor) n-gram models rely on.

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Index of a token in a vocabulary.
pub type TokenId = u32;

/// Tolerance on `|Σ exp(lp) - 1|` accepted for a constructed distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalLogDist {
    log_probs: Vec<f64>,
}

/// Max-shifted log-sum-exp over the finite entries. `-inf` entries add nothing.
fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = scores.iter().map(|&s| (s - max).exp()).sum();
    max + sum.ln()
}

impl CategoricalLogDist {
    /// Builds a distribution from unnormalized log-scores.
    ///
    /// Scores must be finite and there must be at least two of them.
    pub fn log_normalize(scores: &[f64]) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 scores, got {}",
                scores.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!(
                "score at index {i} is not finite ({})",
                scores[i]
            )));
        }
        Ok(Self::normalize_unchecked(scores.to_vec()))
    }

    /// Builds a distribution from non-negative weights (not necessarily summing
    /// to one). Zero weights become `-inf` log-probabilities.
    pub fn from_probs(weights: &[f64]) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 weights, got {}",
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!(
                "weight at index {i} is negative or not finite ({})",
                weights[i]
            )));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::invalid("all weights are zero"));
        }
        Ok(Self::normalize_unchecked(
            weights.iter().map(|w| w.ln()).collect(),
        ))
    }

    /// Uniform distribution over `vocab_size` tokens.
    pub fn uniform(vocab_size: usize) -> Result<Self> {
        Self::log_normalize(&vec![0.0; vocab_size])
    }

    /// Callers guarantee at least one finite entry and no NaN/+inf.
    pub(crate) fn normalize_unchecked(mut scores: Vec<f64>) -> Self {
        let lse = log_sum_exp(&scores);
        for s in scores.iter_mut() {
            *s -= lse;
        }
        Self { log_probs: scores }
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn vocab_size(&self) -> usize {
        self.log_probs.len()
    }

    pub fn prob(&self, token: TokenId) -> Result<f64> {
        self.log_prob(token).map(f64::exp)
    }

    pub fn log_prob(&self, token: TokenId) -> Result<f64> {
        self.log_probs
            .get(token as usize)
            .copied()
            .ok_or_else(|| {
                Error::invalid(format!(
                    "token {token} out of range for vocabulary of size {}",
                    self.vocab_size()
                ))
            })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|lp| lp.exp()).collect()
    }

    /// Shannon entropy `-Σ p ln p`. Terms whose probability underflows to
    /// zero contribute nothing.
    pub fn entropy(&self) -> f64 {
        let h: f64 = self
            .log_probs
            .iter()
            .map(|&lp| {
                let p = lp.exp();
                if p == 0.0 {
                    0.0
                } else {
                    -p * lp
                }
            })
            .sum();
        h.max(0.0)
    }

    /// Information content `-ln q(token)`.
    pub fn surprisal(&self, token: TokenId) -> Result<f64> {
        let lp = self.log_prob(token)?;
        // -0.0 for a certain event
        Ok((-lp).max(0.0))
    }

    /// Deviation `|H - I(token)|` of a token's surprisal from the entropy.
    pub fn epsilon(&self, token: TokenId) -> Result<f64> {
        let i = self.surprisal(token)?;
        Ok((self.entropy() - i).abs())
    }

    /// Renormalizes `q^(1/t)`.
    pub fn apply_temperature(&self, t: f64) -> Result<Self> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::invalid(format!(
                "temperature must be positive and finite, got {t}"
            )));
        }
        Ok(Self::normalize_unchecked(
            self.log_probs.iter().map(|lp| lp / t).collect(),
        ))
    }

    /// Highest-probability token, lowest id on ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &lp) in self.log_probs.iter().enumerate() {
            if lp > self.log_probs[best] {
                best = i;
            }
        }
        best as TokenId
    }

    /// Draws one token by inverting the CDF with a single uniform draw.
    pub fn sample(&self, rng: &mut RandomSource) -> TokenId {
        let u = rng.next_f64();
        let mut cumulative = 0.0;
        let mut last_positive = 0;
        for (i, &lp) in self.log_probs.iter().enumerate() {
            let p = lp.exp();
            if p > 0.0 {
                last_positive = i;
            }
            cumulative += p;
            if u < cumulative {
                return i as TokenId;
            }
        }
        // Rounding left the total mass just below u.
        last_positive as TokenId
    }
}
