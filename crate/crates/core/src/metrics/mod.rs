//! Automatic quality and diversity metrics for generated text.
//!
//! Corpus aggregation conventions:
//! - perplexity is token-weighted, `exp(total information / total tokens)`;
//! - REP and n-gram diversity are averaged over sequences weighted by length;
//! - the Zipf coefficient is fitted on the pooled token stream.

mod diversity;
mod epsilon;
mod rep;
mod zipf;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use diversity::{ngram_diversity, MAX_DIVERSITY_ORDER};
pub use epsilon::{
    check_epsilon_typical, epsilon_profile, epsilon_profile_after, epsilon_values_after, EpsilonProfile, Histogram,
    DEFAULT_BINS, DEFAULT_BIN_WIDTH,
};
pub use rep::{corpus_rep, rep, rep_l, REP_WINDOWS};
pub use zipf::{rank_frequencies, zipf_coefficient, zipf_from_frequencies};

use crate::dist::TokenId;
use crate::error::{Error, Result};
use crate::lm::sequence_information_after;
use crate::ngram::{NGramModel, EOS};

/// Decimal places used when writing reports.
pub const REPORT_PRECISION: usize = 6;

/// One text to evaluate: an unscored conditioning prefix and the scored
/// continuation. When `ends_with_eos` is set, EOS is scored after the last
/// token.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TextSequence {
    pub context: Vec<String>,
    pub tokens: Vec<String>,
    pub ends_with_eos: bool,
}

impl TextSequence {
    fn scored_ids(&self, model: &NGramModel) -> (Vec<TokenId>, Vec<TokenId>) {
        let ctx = model.vocab().encode(&self.context);
        let mut ids = model.vocab().encode(&self.tokens);
        if self.ends_with_eos {
            ids.push(EOS);
        }
        (ctx, ids)
    }
}

/// Token-weighted perplexity of the scored parts of `sequences`.
pub fn corpus_perplexity(model: &NGramModel, sequences: &[TextSequence]) -> Result<f64> {
    let mut info = 0.0;
    let mut n = 0usize;
    for s in sequences {
        let (ctx, ids) = s.scored_ids(model);
        info += sequence_information_after(model, &ctx, &ids)?;
        n += ids.len();
    }
    if n == 0 {
        return Err(Error::undefined("no tokens to score"));
    }
    Ok((info / n as f64).exp())
}

/// Length-weighted mean of per-sequence n-gram diversity.
pub fn corpus_diversity<S: AsRef<[String]>>(sequences: &[S]) -> Result<f64> {
    let mut sum = 0.0;
    let mut weight = 0usize;
    for s in sequences {
        let s = s.as_ref();
        sum += s.len() as f64 * ngram_diversity(s);
        weight += s.len();
    }
    if weight == 0 {
        return Err(Error::undefined("no tokens for n-gram diversity"));
    }
    Ok(sum / weight as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n_sequences: usize,
    /// Scored tokens (continuations plus EOS where emitted).
    pub n_tokens: usize,
    pub ppl_g: f64,
    pub ppl_i: f64,
    pub rep: f64,
    pub rep_per_l: BTreeMap<usize, f64>,
    pub zipf: f64,
    pub diversity: f64,
    /// Mean ε under the generating model, in nats.
    pub eps_mean: f64,
    pub eps_histogram: Histogram,
}

fn round_trip(x: f64) -> f64 {
    format!("{x:.REPORT_PRECISION$}").parse().unwrap_or(f64::NAN)
}

impl MetricsReport {
    /// Named scalar fields in output order.
    pub fn scalars(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("ppl_g".to_owned(), self.ppl_g),
            ("ppl_i".to_owned(), self.ppl_i),
            ("rep".to_owned(), self.rep),
        ];
        for (l, v) in &self.rep_per_l {
            out.push((format!("rep_{l}"), *v));
        }
        out.push(("zipf".to_owned(), self.zipf));
        out.push(("diversity".to_owned(), self.diversity));
        out.push(("eps_mean".to_owned(), self.eps_mean));
        out
    }

    /// `self - reference` for every scalar, computed on the values as
    /// written (rounded to [`REPORT_PRECISION`] places).
    pub fn deltas(&self, reference: &MetricsReport) -> Vec<(String, f64)> {
        self.scalars()
            .into_iter()
            .zip(reference.scalars())
            .map(|((k, a), (_, b))| (k, round_trip(a) - round_trip(b)))
            .collect()
    }

    /// Flat `key=value` lines, every key prefixed with `prefix`.
    pub fn to_kv(&self, prefix: &str) -> String {
        let p = REPORT_PRECISION;
        let mut out = String::new();
        let _ = writeln!(out, "{prefix}n_sequences={}", self.n_sequences);
        let _ = writeln!(out, "{prefix}n_tokens={}", self.n_tokens);
        for (k, v) in self.scalars() {
            let _ = writeln!(out, "{prefix}{k}={v:.p$}");
        }
        let _ = writeln!(out, "{prefix}eps_unit=nats");
        let _ = writeln!(out, "{prefix}eps_bin_width={:.p$}", self.eps_histogram.bin_width());
        let counts: Vec<String> = self.eps_histogram.counts().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{prefix}eps_hist={}", counts.join(","));
        out
    }
}

/// `key=value` lines written by [`MetricsReport::to_kv`] and
/// [`deltas_to_kv`], parsed back into a map.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format("report", format!("line {} has no `=`", i + 1)))?;
        map.insert(k.to_owned(), v.to_owned());
    }
    Ok(map)
}

pub fn deltas_to_kv(deltas: &[(String, f64)], prefix: &str) -> String {
    let p = REPORT_PRECISION;
    deltas.iter().map(|(k, v)| format!("{prefix}{k}={v:.p$}\n")).collect()
}

/// Computes every report field. Text-level metrics (REP, Zipf, diversity) use
/// the continuation words without EOS; perplexities and ε use the scored ids.
/// Text-level metrics that are undefined for this corpus are reported as NaN.
pub fn evaluate_corpus(model_g: &NGramModel, model_i: &NGramModel, sequences: &[TextSequence]) -> Result<MetricsReport> {
    if sequences.is_empty() {
        return Err(Error::undefined("empty corpus"));
    }
    let ppl_g = corpus_perplexity(model_g, sequences)?;
    let ppl_i = corpus_perplexity(model_i, sequences)?;

    let items: Vec<(Vec<TokenId>, Vec<TokenId>)> = sequences.iter().map(|s| s.scored_ids(model_g)).collect();
    let profile = epsilon_profile_after(model_g, &items)?;

    let texts: Vec<&[String]> = sequences.iter().map(|s| s.tokens.as_slice()).collect();
    let (rep, rep_per_l) = corpus_rep(&texts).unwrap_or_else(|_| {
        (f64::NAN, REP_WINDOWS.iter().map(|&l| (l, f64::NAN)).collect())
    });
    let pooled: Vec<&String> = texts.iter().flat_map(|t| t.iter()).collect();
    let zipf = zipf_coefficient(&pooled).unwrap_or(f64::NAN);
    let diversity = corpus_diversity(&texts).unwrap_or(f64::NAN);

    Ok(MetricsReport {
        n_sequences: sequences.len(),
        n_tokens: profile.n_tokens,
        ppl_g,
        ppl_i,
        rep,
        rep_per_l,
        zipf,
        diversity,
        eps_mean: profile.mean,
        eps_histogram: profile.histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::{TrainConfig, Vocab};

    fn uniform_model(n_words: usize) -> NGramModel {
        let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
        NGramModel::untrained(Vocab::new(words).unwrap(), TrainConfig::default()).unwrap()
    }

    fn seq(text: &str, eos: bool) -> TextSequence {
        TextSequence {
            context: vec![],
            tokens: text.split_whitespace().map(str::to_owned).collect(),
            ends_with_eos: eos,
        }
    }

    #[test]
    fn uniform_models_give_vocab_perplexity() {
        let m = uniform_model(97);
        assert_eq!(m.vocab().len(), 100);
        let s = [seq("w1 w2 w3 w50 w1", true)];
        let r = evaluate_corpus(&m, &m, &s).unwrap();
        assert!((r.ppl_g - 100.0).abs() < 1e-9);
        assert!((r.ppl_i - 100.0).abs() < 1e-9);
        assert_eq!(r.n_tokens, 6);
        assert!(r.eps_mean < 1e-12);
    }

    #[test]
    fn report_is_internally_consistent() {
        let m = NGramModel::train(["a b c a b", "c c a", "b a"], TrainConfig::default()).unwrap();
        let s = [seq("a b a b c", true), seq("c a", false), seq("b b b b b b", true)];
        let r = evaluate_corpus(&m, &m, &s).unwrap();
        let mean = r.rep_per_l.values().sum::<f64>() / r.rep_per_l.len() as f64;
        assert!((r.rep - mean).abs() <= 1e-12);
        assert_eq!(r.eps_histogram.total() as usize, r.n_tokens);
        assert_eq!(r.n_tokens, 6 + 2 + 7);
        assert!((0.0..=1.0).contains(&r.rep));
        assert!((0.0..=1.0).contains(&r.diversity));
    }

    #[test]
    fn report_matches_single_metric_calls() {
        let corpus: Vec<String> = (0..50).map(|i| format!("w{} w{} w{} w{}", i % 7, i % 3, i % 5, i % 2)).collect();
        let mg = NGramModel::train(&corpus, TrainConfig::default()).unwrap();
        let mi = NGramModel::train(&corpus[..25], TrainConfig::default()).unwrap();
        let seqs: Vec<TextSequence> = (0..100)
            .map(|i| seq(&format!("w{} w{} w{} w{} w1", i % 4, i % 6, i % 3, i % 9), i % 3 != 0))
            .collect();
        let r = evaluate_corpus(&mg, &mi, &seqs).unwrap();

        let mut info = 0.0;
        let mut n = 0;
        for s in &seqs {
            let mut ids = mi.vocab().encode(&s.tokens);
            if s.ends_with_eos {
                ids.push(EOS);
            }
            info += crate::lm::sequence_information(&mi, &ids).unwrap();
            n += ids.len();
        }
        assert!((r.ppl_i - (info / n as f64).exp()).abs() < 1e-9);

        let texts: Vec<Vec<String>> = seqs.iter().map(|s| s.tokens.clone()).collect();
        let weighted: f64 = texts.iter().map(|t| t.len() as f64 * rep(t).unwrap()).sum();
        let total: usize = texts.iter().map(Vec::len).sum();
        assert!((r.rep - weighted / total as f64).abs() < 1e-12);

        let pooled: Vec<String> = texts.concat();
        assert_eq!(r.zipf, zipf_coefficient(&pooled).unwrap());

        let ids: Vec<Vec<TokenId>> = seqs
            .iter()
            .map(|s| {
                let mut v = mg.vocab().encode(&s.tokens);
                if s.ends_with_eos {
                    v.push(EOS);
                }
                v
            })
            .collect();
        let p = epsilon_profile(&mg, &ids).unwrap();
        assert!((r.eps_mean - p.mean).abs() < 1e-12);
        assert_eq!(r.eps_histogram, p.histogram);
    }

    #[test]
    fn empty_corpus_is_undefined() {
        let m = uniform_model(3);
        assert!(matches!(evaluate_corpus(&m, &m, &[]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn kv_round_trip_and_deltas() {
        let m = NGramModel::train(["a b c a b", "c c a"], TrainConfig::default()).unwrap();
        let r1 = evaluate_corpus(&m, &m, &[seq("a b a b c", true)]).unwrap();
        let r2 = evaluate_corpus(&m, &m, &[seq("c c a b", true)]).unwrap();
        let text = format!("{}{}", r1.to_kv(""), deltas_to_kv(&r1.deltas(&r2), "delta."));
        let kv = parse_kv(&text).unwrap();
        assert_eq!(kv["eps_unit"], "nats");
        assert_eq!(kv["n_tokens"], "6");
        for (k, d) in r1.deltas(&r2) {
            let parsed: f64 = kv[&format!("delta.{k}")].parse().unwrap();
            assert!((parsed - d).abs() < 1e-9);
        }
        let hist: Vec<u64> = kv["eps_hist"].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(hist.len(), 61);
        assert_eq!(hist.iter().sum::<u64>(), 6);
    }
}
