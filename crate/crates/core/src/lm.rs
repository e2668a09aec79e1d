//! The autoregressive model contract and chain-rule scoring.

use crate::dist::{CategoricalLogDist, TokenId};
use crate::error::{Error, Result};

/// A model that yields `q(· | context)` over a fixed vocabulary.
///
/// Implementations decide how an empty or short context is padded; the
/// n-gram model left-pads with BOS.
pub trait LanguageModel: Sync {
    fn vocab_size(&self) -> usize;

    fn next_dist(&self, context: &[TokenId]) -> Result<CategoricalLogDist>;
}

/// Total information `Σ_t -ln q(y_t | y_<t)` of `tokens` scored from the start
/// of a sequence.
pub fn sequence_information<M: LanguageModel + ?Sized>(model: &M, tokens: &[TokenId]) -> Result<f64> {
    sequence_information_after(model, &[], tokens)
}

/// Like [`sequence_information`], but every step also conditions on `context`,
/// which itself is not scored.
pub fn sequence_information_after<M: LanguageModel + ?Sized>(
    model: &M,
    context: &[TokenId],
    tokens: &[TokenId],
) -> Result<f64> {
    let mut history = Vec::with_capacity(context.len() + tokens.len());
    history.extend_from_slice(context);
    let mut total = 0.0;
    for &y in tokens {
        let d = model.next_dist(&history)?;
        total += d.surprisal(y)?;
        history.push(y);
    }
    Ok(total)
}

/// `exp(information / length)`, counting every scored token.
pub fn perplexity<M: LanguageModel + ?Sized>(model: &M, tokens: &[TokenId]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::invalid("perplexity of an empty sequence"));
    }
    let info = sequence_information(model, tokens)?;
    Ok((info / tokens.len() as f64).exp())
}

#[cfg(test)]
pub(crate) mod testing {
    //! Small hand-built models shared by unit tests.
    use super::*;

    /// Same distribution for every context.
    pub struct FixedModel(pub CategoricalLogDist);

    impl LanguageModel for FixedModel {
        fn vocab_size(&self) -> usize {
            self.0.vocab_size()
        }

        fn next_dist(&self, context: &[TokenId]) -> Result<CategoricalLogDist> {
            if context.iter().any(|&t| t as usize >= self.vocab_size()) {
                return Err(Error::invalid("token out of range"));
            }
            Ok(self.0.clone())
        }
    }

    /// Always puts all mass on `token`.
    pub fn one_hot_chain(vocab_size: usize, token: TokenId) -> FixedModel {
        let mut w = vec![0.0; vocab_size];
        w[token as usize] = 1.0;
        FixedModel(CategoricalLogDist::from_probs(&w).unwrap())
    }

    /// Scores each position by a fixed per-position probability table.
    pub struct PositionalModel(pub Vec<Vec<f64>>);

    impl LanguageModel for PositionalModel {
        fn vocab_size(&self) -> usize {
            self.0[0].len()
        }

        fn next_dist(&self, context: &[TokenId]) -> Result<CategoricalLogDist> {
            CategoricalLogDist::from_probs(&self.0[context.len()])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn uniform_information_and_perplexity() {
        let m = FixedModel(CategoricalLogDist::uniform(4).unwrap());
        let info = sequence_information(&m, &[0, 3, 1]).unwrap();
        assert!((info - 3.0 * 4f64.ln()).abs() < 1e-12);
        assert!((info - 4.158883).abs() < 1e-6);

        let m = FixedModel(CategoricalLogDist::uniform(100).unwrap());
        let ppl = perplexity(&m, &[5, 6, 7, 99]).unwrap();
        assert!((ppl - 100.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_chain_has_no_information() {
        let m = one_hot_chain(3, 2);
        assert_eq!(sequence_information(&m, &[2, 2, 2, 2]).unwrap(), 0.0);
    }

    #[test]
    fn perplexity_examples() {
        let m = FixedModel(CategoricalLogDist::from_probs(&[0.5, 0.5]).unwrap());
        assert!((perplexity(&m, &[0, 1, 1]).unwrap() - 2.0).abs() < 1e-12);

        let m = PositionalModel(vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.25, 0.25, 0.25, 0.25]]);
        let ppl = perplexity(&m, &[0, 3]).unwrap();
        assert!((ppl - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((ppl - 2.828427).abs() < 1e-6);
    }

    #[test]
    fn perplexity_rejects_empty() {
        let m = FixedModel(CategoricalLogDist::uniform(4).unwrap());
        assert!(perplexity(&m, &[]).is_err());
    }

    #[test]
    fn invalid_ids_are_rejected() {
        let m = FixedModel(CategoricalLogDist::uniform(4).unwrap());
        assert!(sequence_information(&m, &[0, 9]).is_err());
    }
}
