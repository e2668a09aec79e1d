//! Truncation-based decoding strategies.
//!
//! Each truncation keeps a subset of the vocabulary and renormalizes the
//! original probabilities over it. Mass thresholds are compared with a slack
//! of [`MASS_TOLERANCE`] so that a cumulative sum landing one rounding error
//! short of the threshold still counts as reaching it. A threshold of exactly
//! 1 always keeps the whole vocabulary.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::{CategoricalLogDist, TokenId};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Slack on cumulative-mass threshold comparisons.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum StrategyConfig {
    Greedy,
    Ancestral,
    Temperature { t: f64 },
    #[serde(rename = "topk")]
    TopK { k: usize },
    Nucleus { n: f64 },
    Typical { tau: f64 },
}

impl StrategyConfig {
    pub fn temperature(t: f64) -> Result<Self> {
        let cfg = StrategyConfig::Temperature { t };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn top_k(k: usize) -> Result<Self> {
        let cfg = StrategyConfig::TopK { k };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn nucleus(n: f64) -> Result<Self> {
        let cfg = StrategyConfig::Nucleus { n };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn typical(tau: f64) -> Result<Self> {
        let cfg = StrategyConfig::Typical { tau };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategyConfig::Greedy | StrategyConfig::Ancestral => Ok(()),
            StrategyConfig::Temperature { t } => {
                if t.is_finite() && t > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("temperature must be positive, got {t}")))
                }
            }
            StrategyConfig::TopK { k } => check_k(k),
            StrategyConfig::Nucleus { n } => check_mass("n", n),
            StrategyConfig::Typical { tau } => check_mass("tau", tau),
        }
    }

    /// Short lowercase name used in tables and file records.
    pub fn name(&self) -> &'static str {
        match self {
            StrategyConfig::Greedy => "greedy",
            StrategyConfig::Ancestral => "ancestral",
            StrategyConfig::Temperature { .. } => "temperature",
            StrategyConfig::TopK { .. } => "topk",
            StrategyConfig::Nucleus { .. } => "nucleus",
            StrategyConfig::Typical { .. } => "typical",
        }
    }
}

impl fmt::Display for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StrategyConfig::Greedy | StrategyConfig::Ancestral => f.write_str(self.name()),
            StrategyConfig::Temperature { t } => write!(f, "temperature(t={t})"),
            StrategyConfig::TopK { k } => write!(f, "topk(k={k})"),
            StrategyConfig::Nucleus { n } => write!(f, "nucleus(n={n})"),
            StrategyConfig::Typical { tau } => write!(f, "typical(tau={tau})"),
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k >= 1 {
        Ok(())
    } else {
        Err(Error::invalid("k must be at least 1"))
    }
}

fn check_mass(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (0, 1], got {x}")))
    }
}

/// A renormalized subset of the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDist {
    support: Vec<TokenId>,
    probs: Vec<f64>,
    mass: f64,
}

impl TruncatedDist {
    /// Renormalizes `d` over `support` (ids in selection order).
    fn over(d: &CategoricalLogDist, support: Vec<TokenId>) -> Self {
        let lp = d.log_probs();
        let raw: Vec<f64> = support.iter().map(|&y| lp[y as usize].exp()).collect();
        let mass: f64 = raw.iter().sum();
        let probs = raw.into_iter().map(|p| p / mass).collect();
        Self {
            support,
            probs,
            mass,
        }
    }

    fn full(d: &CategoricalLogDist) -> Self {
        Self::over(d, (0..d.vocab_size() as TokenId).collect())
    }

    /// Selected tokens, in the order the strategy ranked them.
    pub fn support(&self) -> &[TokenId] {
        &self.support
    }

    /// Renormalized probabilities aligned with [`TruncatedDist::support`].
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Original probability mass `Z_t` of the support.
    pub fn mass_retained(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Renormalized probability of `token`, zero outside the support.
    pub fn prob_of(&self, token: TokenId) -> f64 {
        self.support
            .iter()
            .position(|&y| y == token)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Most probable retained token, lowest id on ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for i in 1..self.support.len() {
            let (p, b) = (self.probs[i], self.probs[best]);
            if p > b || (p == b && self.support[i] < self.support[best]) {
                best = i;
            }
        }
        self.support[best]
    }

    /// Draws one token with a single uniform draw.
    pub fn sample(&self, rng: &mut RandomSource) -> TokenId {
        let u = rng.next_f64();
        let mut cumulative = 0.0;
        let mut last_positive = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = i;
            }
            cumulative += p;
            if u < cumulative {
                return self.support[i];
            }
        }
        self.support[last_positive]
    }
}

/// Probability-descending order, lower id first on ties.
fn by_probability(lp: &[f64]) -> Vec<TokenId> {
    let mut ids: Vec<TokenId> = (0..lp.len() as TokenId).collect();
    ids.sort_unstable_by(|&a, &b| {
        lp[b as usize]
            .partial_cmp(&lp[a as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    ids
}

/// Length of the shortest prefix of `ranked` whose original mass reaches
/// `threshold`; never less than one.
fn prefix_reaching(lp: &[f64], ranked: &[TokenId], threshold: f64) -> usize {
    if threshold >= 1.0 {
        return ranked.len();
    }
    let mut cumulative = 0.0;
    for (i, &y) in ranked.iter().enumerate() {
        cumulative += lp[y as usize].exp();
        if cumulative >= threshold - MASS_TOLERANCE {
            return i + 1;
        }
    }
    ranked.len()
}

/// Keeps the `min(k, |V|)` most probable tokens.
pub fn truncate_top_k(d: &CategoricalLogDist, k: usize) -> Result<TruncatedDist> {
    check_k(k)?;
    let lp = d.log_probs();
    let keep = k.min(lp.len());
    let mut ranked = by_probability(lp);
    ranked.truncate(keep);
    Ok(TruncatedDist::over(d, ranked))
}

/// Keeps the smallest probability-descending prefix with mass at least `n`.
pub fn truncate_nucleus(d: &CategoricalLogDist, n: f64) -> Result<TruncatedDist> {
    check_mass("n", n)?;
    let lp = d.log_probs();
    let mut ranked = by_probability(lp);
    let keep = prefix_reaching(lp, &ranked, n);
    ranked.truncate(keep);
    Ok(TruncatedDist::over(d, ranked))
}

/// Locally typical truncation.
///
/// Tokens are ranked by how far their surprisal lies from the conditional
/// entropy, `|H + ln q(y)|`, ascending (ties: higher probability, then lower
/// id). The shortest ranked prefix holding at least `tau` of the original mass
/// is kept. Cost is one entropy pass plus one sort, `O(|V| log |V|)`.
pub fn truncate_typical(d: &CategoricalLogDist, tau: f64) -> Result<TruncatedDist> {
    check_mass("tau", tau)?;
    let lp = d.log_probs();
    let h = d.entropy();

    // Distances are non-negative, so their bit patterns sort like the values.
    let mut keyed: Vec<(u64, TokenId)> = lp
        .iter()
        .enumerate()
        .map(|(y, &l)| ((h + l).abs().to_bits(), y as TokenId))
        .collect();
    keyed.sort_unstable();
    let mut start = 0;
    while start < keyed.len() {
        let end = start + keyed[start..].iter().take_while(|k| k.0 == keyed[start].0).count();
        if end - start > 1 {
            keyed[start..end].sort_by(|a, b| {
                lp[b.1 as usize]
                    .partial_cmp(&lp[a.1 as usize])
                    .unwrap_or(Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
        }
        start = end;
    }
    let mut ranked: Vec<TokenId> = keyed.into_iter().map(|(_, y)| y).collect();
    let keep = prefix_reaching(lp, &ranked, tau);
    ranked.truncate(keep);
    Ok(TruncatedDist::over(d, ranked))
}

/// Truncated (or reshaped) distribution for one decoding step.
pub fn apply_strategy(d: &CategoricalLogDist, cfg: &StrategyConfig) -> Result<TruncatedDist> {
    match *cfg {
        StrategyConfig::Greedy => truncate_top_k(d, 1),
        StrategyConfig::Ancestral => Ok(TruncatedDist::full(d)),
        StrategyConfig::Temperature { t } => Ok(TruncatedDist::full(&d.apply_temperature(t)?)),
        StrategyConfig::TopK { k } => truncate_top_k(d, k),
        StrategyConfig::Nucleus { n } => truncate_nucleus(d, n),
        StrategyConfig::Typical { tau } => truncate_typical(d, tau),
    }
}
