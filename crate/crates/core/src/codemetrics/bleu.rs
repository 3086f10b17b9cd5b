//! Clipped n-gram precision with brevity penalty, plain and keyword-weighted.

use alloc::collections::BTreeMap;

use crate::error::{config, Result};

/// Floor applied to an order whose clipped precision is zero.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

/// Geometric mean of clipped n-gram precisions for n = 1..=max_n, times the
/// brevity penalty.
///
/// Orders longer than the generated sequence contribute no n-grams and are
/// left out of the mean. Two empty sequences score 1, one empty sequence 0.
pub fn ngram_match(gen: &[&str], reference: &[&str], max_n: usize) -> Result<f64> {
    weighted(gen, reference, max_n, |_| 1.0)
}

/// Like [`ngram_match`], but an n-gram counts `keyword_weight` times when any
/// of its tokens satisfies `is_keyword`.
pub fn weighted_ngram_match(
    gen: &[&str],
    reference: &[&str],
    max_n: usize,
    keyword_weight: f64,
    is_keyword: impl Fn(&str) -> bool,
) -> Result<f64> {
    if !(keyword_weight >= 1.0) || !keyword_weight.is_finite() {
        return Err(config("keyword_weight must be a finite value >= 1"));
    }
    weighted(gen, reference, max_n, |gram: &[&str]| {
        if gram.iter().any(|t| is_keyword(t)) {
            keyword_weight
        } else {
            1.0
        }
    })
}

fn weighted(gen: &[&str], reference: &[&str], max_n: usize, weight: impl Fn(&[&str]) -> f64) -> Result<f64> {
    if max_n == 0 {
        return Err(config("max_n must be at least 1"));
    }
    match (gen.is_empty(), reference.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }

    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n.min(gen.len()) {
        let gen_counts = count_ngrams(gen, n);
        let ref_counts = count_ngrams(reference, n);
        let mut matched = 0.0;
        let mut total = 0.0;
        for (gram, &count) in &gen_counts {
            let w = weight(gram);
            let clip = ref_counts.get(gram).copied().unwrap_or(0).min(count);
            matched += w * clip as f64;
            total += w * count as f64;
        }
        let p = if matched > 0.0 { matched / total } else { SMOOTHING_EPSILON };
        log_sum += libm::log(p);
        orders += 1;
    }

    let precision = libm::exp(log_sum / orders as f64);
    let bp = if gen.len() < reference.len() {
        libm::exp(1.0 - reference.len() as f64 / gen.len() as f64)
    } else {
        1.0
    };
    Ok((bp * precision).clamp(0.0, 1.0))
}

fn count_ngrams<'a, 'b>(tokens: &'b [&'a str], n: usize) -> BTreeMap<&'b [&'a str], usize> {
    let mut counts = BTreeMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}
