use std::fmt::Write as _;

use super::SimilarityScores;

/// One column of the evaluation table: a model under one setting
/// (e.g. zero-shot or fine-tuned) with its mean scores and sample count.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalColumn {
    pub model: String,
    pub setting: String,
    pub samples: usize,
    pub scores: SimilarityScores,
}

/// Metric rows × (model, setting) columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub columns: Vec<EvalColumn>,
}

impl EvalReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut header = String::from("| Metric  |");
        let mut sub = String::from("|         |");
        let mut rule = String::from("|---------|");
        for c in &self.columns {
            let _ = write!(header, " {:^14} |", c.model);
            let _ = write!(sub, " {:^14} |", c.setting);
            rule.push_str("----------------|");
        }
        for line in [header, sub, rule] {
            out.push_str(&line);
            out.push('\n');
        }
        let rows = ["ROUGE-1", "ROUGE-2", "ROUGE-L", "BLEU"];
        for (i, name) in rows.iter().enumerate() {
            let _ = write!(out, "| {name:<7} |");
            for c in &self.columns {
                let _ = write!(out, " {:^14.4} |", c.scores.as_array()[i]);
            }
            out.push('\n');
        }
        let _ = write!(out, "| Samples |");
        for c in &self.columns {
            let _ = write!(out, " {:^14} |", c.samples);
        }
        out.push('\n');
        out
    }
}
