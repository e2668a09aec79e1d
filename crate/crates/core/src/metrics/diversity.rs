use std::collections::HashSet;
use std::hash::Hash;

/// Largest n-gram order averaged by [`ngram_diversity`].
pub const MAX_DIVERSITY_ORDER: usize = 4;

/// Mean over n = 1..=4 of distinct/total n-gram ratios, skipping orders
/// longer than the text. Empty input scores 0.
pub fn ngram_diversity<T: Eq + Hash>(tokens: &[T]) -> f64 {
    let mut sum = 0.0;
    let mut orders = 0;
    for n in 1..=MAX_DIVERSITY_ORDER.min(tokens.len()) {
        let total = tokens.len() + 1 - n;
        let distinct: HashSet<&[T]> = tokens.windows(n).collect();
        sum += distinct.len() as f64 / total as f64;
        orders += 1;
    }
    if orders == 0 {
        0.0
    } else {
        sum / orders as f64
    }
}
