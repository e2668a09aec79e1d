use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use crate::error::{Error, Result};

/// Window sizes averaged by [`rep`].
pub const REP_WINDOWS: [usize; 3] = [16, 32, 128];

/// Fraction of positions `t = 2..L` whose token also occurs among the
/// previous `min(ell, t - 1)` tokens.
pub fn rep_l<T: Eq + Hash>(tokens: &[T], ell: usize) -> Result<f64> {
    if ell == 0 {
        return Err(Error::invalid("rep window must be at least 1"));
    }
    if tokens.len() < 2 {
        return Err(Error::undefined(format!(
            "rep needs at least 2 tokens, got {}",
            tokens.len()
        )));
    }
    let mut last_seen: HashMap<&T, usize> = HashMap::new();
    let mut hits = 0usize;
    for (i, tok) in tokens.iter().enumerate() {
        if let Some(&j) = last_seen.get(tok) {
            if i - j <= ell {
                hits += 1;
            }
        }
        last_seen.insert(tok, i);
    }
    Ok(hits as f64 / (tokens.len() - 1) as f64)
}

/// Mean of [`rep_l`] over [`REP_WINDOWS`].
pub fn rep<T: Eq + Hash>(tokens: &[T]) -> Result<f64> {
    let mut sum = 0.0;
    for ell in REP_WINDOWS {
        sum += rep_l(tokens, ell)?;
    }
    Ok(sum / REP_WINDOWS.len() as f64)
}

/// Corpus REP: per-window values averaged over sequences weighted by token
/// count, then averaged over windows. Sequences shorter than 2 are skipped.
pub fn corpus_rep<T: Eq + Hash, S: AsRef<[T]>>(sequences: &[S]) -> Result<(f64, BTreeMap<usize, f64>)> {
    let mut per_l: BTreeMap<usize, f64> = REP_WINDOWS.iter().map(|&l| (l, 0.0)).collect();
    let mut weight = 0usize;
    for s in sequences {
        let s = s.as_ref();
        if s.len() < 2 {
            continue;
        }
        for ell in REP_WINDOWS {
            *per_l.get_mut(&ell).unwrap() += s.len() as f64 * rep_l(s, ell)?;
        }
        weight += s.len();
    }
    if weight == 0 {
        return Err(Error::undefined("no sequence with at least 2 tokens"));
    }
    for v in per_l.values_mut() {
        *v /= weight as f64;
    }
    let mean = per_l.values().sum::<f64>() / per_l.len() as f64;
    Ok((mean, per_l))
}
