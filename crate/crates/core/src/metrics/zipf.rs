use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Rank-frequency table: counts in descending order, equal counts ordered by
/// ascending token.
pub fn rank_frequencies<T: Ord + Hash>(tokens: &[T]) -> Vec<(&T, u64)> {
    let mut counts: HashMap<&T, u64> = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut table: Vec<(&T, u64)> = counts.into_iter().collect();
    table.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    table
}

/// Zipf coefficient of a token stream: the negated slope of the least-squares
/// line through `(ln rank, ln frequency)` over every observed type.
pub fn zipf_coefficient<T: Ord + Hash>(tokens: &[T]) -> Result<f64> {
    let freqs: Vec<f64> = rank_frequencies(tokens).into_iter().map(|(_, c)| c as f64).collect();
    zipf_from_frequencies(&freqs)
}

/// Same fit on an explicit frequency table (any order; sorted internally).
pub fn zipf_from_frequencies(freqs: &[f64]) -> Result<f64> {
    if freqs.len() < 2 {
        return Err(Error::undefined(format!(
            "zipf coefficient needs at least 2 types, got {}",
            freqs.len()
        )));
    }
    if freqs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::invalid("frequencies must be positive"));
    }
    let mut sorted = freqs.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());

    let n = sorted.len() as f64;
    let xs: Vec<f64> = (1..=sorted.len()).map(|r| (r as f64).ln()).collect();
    // Relative to the top frequency, so equal counts give exactly zero.
    let ys: Vec<f64> = sorted.iter().map(|f| (f / sorted[0]).ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - x_mean) * (y - y_mean);
        sxx += (x - x_mean) * (x - x_mean);
    }
    let s = -sxy / sxx;
    // avoid reporting -0
    Ok(if s == 0.0 { 0.0 } else { s })
}
