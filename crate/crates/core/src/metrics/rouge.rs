use std::collections::HashMap;

use super::tokenize;
use crate::error::MetricError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RougeVariant {
    One,
    Two,
    L,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RougeDetail {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// ROUGE F1.
pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> Result<f64, MetricError> {
    rouge_detail(candidate, reference, variant).map(|d| d.f1)
}

pub fn rouge_detail(
    candidate: &str,
    reference: &str,
    variant: RougeVariant,
) -> Result<RougeDetail, MetricError> {
    let cand = tokenize(candidate);
    let refs = tokenize(reference);
    if cand.is_empty() || refs.is_empty() {
        return Err(MetricError::EmptyText);
    }
    let (hits, cand_total, ref_total) = match variant {
        RougeVariant::One => ngram_overlap(&cand, &refs, 1),
        RougeVariant::Two => ngram_overlap(&cand, &refs, 2),
        RougeVariant::L => (lcs_len(&cand, &refs), cand.len(), refs.len()),
    };
    if cand_total == 0 && ref_total == 0 {
        // Single-token texts have no bigrams; only identical texts count as a match.
        let same = if cand == refs { 1.0 } else { 0.0 };
        return Ok(RougeDetail {
            precision: same,
            recall: same,
            f1: same,
        });
    }
    let precision = ratio(hits, cand_total);
    let recall = ratio(hits, ref_total);
    let f1 = if hits == 0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(RougeDetail {
        precision,
        recall,
        f1,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(super) fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// (clipped overlap, candidate n-gram total, reference n-gram total)
fn ngram_overlap(cand: &[String], refs: &[String], n: usize) -> (usize, usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(refs, n);
    let hits = c
        .iter()
        .map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (
        hits,
        cand.len().saturating_sub(n - 1),
        refs.len().saturating_sub(n - 1),
    )
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
