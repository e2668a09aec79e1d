//! Per-token deviation of surprisal from conditional entropy.

use std::f64::consts::LN_2;

use crate::dist::TokenId;
use crate::error::{Error, Result};
use crate::lm::LanguageModel;

pub const DEFAULT_BIN_WIDTH: f64 = 0.1;
pub const DEFAULT_BINS: usize = 60;

/// Fixed-width bins starting at 0 plus one overflow bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bin_width: f64,
    /// `regular bins + 1`; the last entry counts values `>= bins * width`.
    counts: Vec<u64>,
}

impl Default for Histogram {
    fn default() -> Self {
        Self::new(DEFAULT_BIN_WIDTH, DEFAULT_BINS)
    }
}

impl Histogram {
    pub fn new(bin_width: f64, bins: usize) -> Self {
        assert!(bin_width > 0.0 && bins > 0, "histogram needs positive width and bins");
        Self {
            bin_width,
            counts: vec![0; bins + 1],
        }
    }

    pub fn add(&mut self, value: f64) {
        let regular = self.counts.len() - 1;
        let idx = ((value / self.bin_width).floor() as usize).min(regular);
        self.counts[idx] += 1;
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Counts including the overflow bin.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(lower edge, upper edge, count)` rows; the overflow row has an
    /// infinite upper edge.
    pub fn bins(&self) -> Vec<(f64, f64, u64)> {
        let regular = self.counts.len() - 1;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let lo = i as f64 * self.bin_width;
                let hi = if i == regular {
                    f64::INFINITY
                } else {
                    (i + 1) as f64 * self.bin_width
                };
                (lo, hi, c)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonProfile {
    pub mean: f64,
    pub histogram: Histogram,
    pub n_tokens: usize,
}

/// ε at every position of `tokens`, each step conditioned on `context` plus
/// the preceding tokens.
pub fn epsilon_values_after<M: LanguageModel + ?Sized>(
    model: &M,
    context: &[TokenId],
    tokens: &[TokenId],
) -> Result<Vec<f64>> {
    let mut history = context.to_vec();
    let mut out = Vec::with_capacity(tokens.len());
    for &y in tokens {
        out.push(model.next_dist(&history)?.epsilon(y)?);
        history.push(y);
    }
    Ok(out)
}

/// Profile over `(context, scored tokens)` pairs with the default binning.
pub fn epsilon_profile_after<M: LanguageModel + ?Sized>(
    model: &M,
    items: &[(Vec<TokenId>, Vec<TokenId>)],
) -> Result<EpsilonProfile> {
    let mut histogram = Histogram::default();
    let mut sum = 0.0;
    let mut n = 0usize;
    for (ctx, toks) in items {
        for e in epsilon_values_after(model, ctx, toks)? {
            histogram.add(e);
            sum += e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::undefined("no tokens to profile"));
    }
    Ok(EpsilonProfile {
        mean: sum / n as f64,
        histogram,
        n_tokens: n,
    })
}

/// Mean ε and histogram over every position of every sequence, each scored
/// from the start of a sequence.
pub fn epsilon_profile<M: LanguageModel + ?Sized>(model: &M, sequences: &[Vec<TokenId>]) -> Result<EpsilonProfile> {
    let items: Vec<(Vec<TokenId>, Vec<TokenId>)> = sequences.iter().map(|s| (Vec::new(), s.clone())).collect();
    epsilon_profile_after(model, &items)
}

/// Whether a message lies in the ε-typical band: with N tokens and H the mean
/// per-step conditional entropy in bits, `-N(H + ε) <= log2 p <= -N(H - ε)`.
pub fn check_epsilon_typical<M: LanguageModel + ?Sized>(
    model: &M,
    tokens: &[TokenId],
    epsilon_bits: f64,
) -> Result<bool> {
    if tokens.is_empty() {
        return Err(Error::invalid("message must contain at least one token"));
    }
    if !epsilon_bits.is_finite() || epsilon_bits <= 0.0 {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon_bits}")));
    }
    let mut history = Vec::with_capacity(tokens.len());
    let (mut info, mut entropy) = (0.0, 0.0);
    for &y in tokens {
        let d = model.next_dist(&history)?;
        info += d.surprisal(y)?;
        entropy += d.entropy();
        history.push(y);
    }
    let n = tokens.len() as f64;
    let h_bits = entropy / n / LN_2;
    let info_bits = info / LN_2;
    Ok(info_bits >= n * (h_bits - epsilon_bits) && info_bits <= n * (h_bits + epsilon_bits))
}
