use super::rouge::ngram_counts;
use super::tokenize;
use crate::error::MetricError;

const MAX_ORDER: usize = 4;
/// Stand-in match count for orders with no clipped matches.
const SMOOTHING_EPSILON: f64 = 1e-9;

/// Sentence BLEU with uniform weights up to order `min(4, |candidate|)`,
/// brevity penalty, and epsilon smoothing of zero match counts.
pub fn bleu(candidate: &str, reference: &str) -> Result<f64, MetricError> {
    let cand = tokenize(candidate);
    let refs = tokenize(reference);
    if cand.is_empty() {
        return Err(MetricError::EmptyText);
    }
    let max_order = MAX_ORDER.min(cand.len());
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let c = ngram_counts(&cand, n);
        let r = ngram_counts(&refs, n);
        let matches: usize = c
            .iter()
            .map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0)))
            .sum();
        let total = cand.len() - n + 1;
        let matches = if matches == 0 {
            SMOOTHING_EPSILON
        } else {
            matches as f64
        };
        log_sum += (matches / total as f64).ln();
    }
    let (c, r) = (cand.len() as f64, refs.len() as f64);
    let brevity = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    Ok(brevity * (log_sum / max_order as f64).exp())
}
