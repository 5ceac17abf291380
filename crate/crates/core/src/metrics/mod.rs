//! Text similarity (ROUGE-1/2/L, BLEU) between student and teacher triples,
//! plus valid-token throughput.

mod bleu;
mod efficiency;
mod report;
mod rouge;
mod tokenize;

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

pub use bleu::bleu;
pub use efficiency::{speedup, EfficiencyRecord};
pub use report::{EvalColumn, EvalReport};
pub use rouge::{rouge, rouge_detail, RougeDetail, RougeVariant};
pub use tokenize::tokenize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    pub bleu: f64,
}

impl SimilarityScores {
    pub fn compute(candidate: &str, reference: &str) -> Result<Self, MetricError> {
        Ok(Self {
            rouge1: rouge(candidate, reference, RougeVariant::One)?,
            rouge2: rouge(candidate, reference, RougeVariant::Two)?,
            rouge_l: rouge(candidate, reference, RougeVariant::L)?,
            bleu: bleu(candidate, reference)?,
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.rouge1, self.rouge2, self.rouge_l, self.bleu]
    }
}

/// Mean scores over `(student, teacher)` text pairs.
pub fn score_corpus<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<SimilarityScores, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut sum = [0.0; 4];
    for (student, teacher) in pairs {
        let s = SimilarityScores::compute(student.as_ref(), teacher.as_ref())?;
        for (acc, v) in sum.iter_mut().zip(s.as_array()) {
            *acc += v;
        }
    }
    let n = pairs.len() as f64;
    Ok(SimilarityScores {
        rouge1: sum[0] / n,
        rouge2: sum[1] / n,
        rouge_l: sum[2] / n,
        bleu: sum[3] / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pairs_average_to_one() {
        let pairs = [("a b c", "a b c"), ("x y", "x y")];
        let s = score_corpus(&pairs).unwrap();
        for v in s.as_array() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bleu_mean_of_perfect_and_disjoint() {
        let pairs = [("a b c d e", "a b c d e"), ("v w x y z", "a b c d e")];
        let s = score_corpus(&pairs).unwrap();
        assert!((s.bleu - 0.5).abs() < 1e-9);
    }

    #[test]
    fn empty_corpus() {
        let pairs: [(&str, &str); 0] = [];
        assert_eq!(score_corpus(&pairs), Err(MetricError::EmptyCorpus));
    }
}
