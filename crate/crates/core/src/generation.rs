//! Seeded autoregressive decoding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::TokenId;
use crate::error::{Error, Result};
use crate::lm::LanguageModel;
use crate::ngram::EOS;
use crate::rng::RandomSource;
use crate::strategies::{apply_strategy, StrategyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Eos,
    MaxLength,
}

/// Per-step diagnostics. Entropy and ε refer to the untruncated model
/// distribution `q`, not to the sampling distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenDiagnostics {
    pub token: TokenId,
    /// Log-probability under the truncated sampling distribution.
    pub pi_log_prob: f64,
    /// Log-probability under the model.
    pub q_log_prob: f64,
    pub entropy: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub prompt: Vec<TokenId>,
    /// Generated continuation, including the final EOS if one was emitted.
    pub generated: Vec<TokenId>,
    pub strategy: StrategyConfig,
    pub seed: u64,
    pub max_len: usize,
    pub per_token: Vec<TokenDiagnostics>,
    pub terminated_by: Termination,
}

impl GenerationRecord {
    /// Generated tokens without the terminal EOS.
    pub fn content(&self) -> &[TokenId] {
        match self.terminated_by {
            Termination::Eos => &self.generated[..self.generated.len() - 1],
            Termination::MaxLength => &self.generated,
        }
    }
}

/// Decodes up to `max_len` tokens after `prompt`, stopping early on EOS.
///
/// Greedy decoding takes the argmax and consumes no randomness; every other
/// strategy draws once per step.
pub fn generate<M: LanguageModel + ?Sized>(
    model: &M,
    cfg: &StrategyConfig,
    prompt: &[TokenId],
    max_len: usize,
    seed: u64,
) -> Result<GenerationRecord> {
    cfg.validate()?;
    if max_len == 0 {
        return Err(Error::invalid("max_len must be at least 1"));
    }
    let v = model.vocab_size();
    if let Some(&bad) = prompt.iter().find(|&&t| t as usize >= v) {
        return Err(Error::invalid(format!(
            "prompt token {bad} out of range for vocabulary of size {v}"
        )));
    }

    let mut rng = RandomSource::new(seed);
    let mut context = prompt.to_vec();
    let mut per_token = Vec::with_capacity(max_len);
    let mut terminated_by = Termination::MaxLength;

    while per_token.len() < max_len {
        let q = model.next_dist(&context)?;
        let truncated = apply_strategy(&q, cfg)?;
        let y = match cfg {
            StrategyConfig::Greedy => truncated.argmax(),
            _ => truncated.sample(&mut rng),
        };
        per_token.push(TokenDiagnostics {
            token: y,
            pi_log_prob: truncated.prob_of(y).ln(),
            q_log_prob: q.log_prob(y)?,
            entropy: q.entropy(),
            epsilon: q.epsilon(y)?,
        });
        context.push(y);
        if y == EOS {
            terminated_by = Termination::Eos;
            break;
        }
    }

    Ok(GenerationRecord {
        generated: context.split_off(prompt.len()),
        prompt: context,
        strategy: *cfg,
        seed,
        max_len,
        per_token,
        terminated_by,
    })
}

/// Runs [`generate`] for each prompt in parallel; record `i` uses seed
/// `base_seed + i` (wrapping) and results keep input order.
pub fn batch_generate<M: LanguageModel + ?Sized>(
    model: &M,
    cfg: &StrategyConfig,
    prompts: &[Vec<TokenId>],
    max_len: usize,
    base_seed: u64,
) -> Result<Vec<GenerationRecord>> {
    prompts
        .par_iter()
        .enumerate()
        .map(|(i, p)| generate(model, cfg, p, max_len, base_seed.wrapping_add(i as u64)))
        .collect()
}
