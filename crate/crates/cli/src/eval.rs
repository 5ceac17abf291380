use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use intentgraph_core::metrics::{score_corpus, EvalColumn, EvalReport, SimilarityScores};
use intentgraph_core::{MetricError, Triple};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// JSON Lines file of `{"candidate": ..., "reference": ...}` pairs.
    pub pairs: PathBuf,
    /// Where to write the JSON report; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "student")]
    pub model: String,
    #[arg(long, default_value = "fine-tuned")]
    pub setting: String,
}

/// One line of the pairs file. Sides are either plain text or a triple
/// document, which is compared in its canonical serialized form.
#[derive(Debug, Deserialize)]
struct PairLine {
    #[serde(alias = "student")]
    candidate: Value,
    #[serde(alias = "teacher")]
    reference: Value,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub model: String,
    pub setting: String,
    pub samples: usize,
    pub scores: SimilarityScores,
}

fn side_text(v: Value) -> String {
    match v {
        Value::String(s) => s,
        other => match Triple::from_value(other.clone()) {
            Ok(t) => t.to_canonical_json(),
            Err(_) => serde_json::to_string_pretty(&other).expect("values serialize"),
        },
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let p: PairLine = serde_json::from_str(l).map_err(|e| {
                CliError::Validation(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            Ok((side_text(p.candidate), side_text(p.reference)))
        })
        .collect()
}

pub fn run(args: EvalArgs) -> Result<Report, CliError> {
    let pairs = read_pairs(&args.pairs)?;
    let scores = score_corpus(&pairs).map_err(|e| match e {
        MetricError::EmptyCorpus => {
            CliError::Validation(format!("{}: EmptyCorpus, no pairs", args.pairs.display()))
        }
        other => CliError::Validation(other.to_string()),
    })?;
    let report = Report {
        model: args.model,
        setting: args.setting,
        samples: pairs.len(),
        scores,
    };
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    match &args.out {
        Some(path) => {
            fs::write(path, &json).map_err(|e| CliError::io(path, e))?;
            let table = EvalReport {
                columns: vec![EvalColumn {
                    model: report.model.clone(),
                    setting: report.setting.clone(),
                    samples: report.samples,
                    scores: report.scores,
                }],
            };
            print!("{}", table.render());
        }
        None => println!("{json}"),
    }
    Ok(report)
}
