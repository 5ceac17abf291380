use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use intentgraph_llm::playground::{run_many, PlaygroundStatus};
use serde::Serialize;

use crate::models::ModelArgs;
use crate::CliError;

#[derive(Args, Debug)]
pub struct PlaygroundArgs {
    /// Task descriptions, one per non-empty line (`#` starts a comment line).
    pub seeds: PathBuf,
    /// Number of simulated sessions; seeds are reused in order when fewer.
    #[arg(long, default_value_t = 1)]
    pub sessions: usize,
    /// Output directory for `transcripts/` and `dataset.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub max_rounds: u32,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[command(flatten)]
    pub models: ModelArgs,
}

/// Counts written to `summary.json`.
#[derive(Debug, Default, Serialize)]
pub struct Summary {
    pub sessions: usize,
    pub completed: usize,
    pub stalled: usize,
    pub running: usize,
    pub failed: usize,
    pub dataset_lines: usize,
}

pub fn read_seeds(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let seeds: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect();
    if seeds.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no task descriptions",
            path.display()
        )));
    }
    Ok(seeds)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub async fn run(args: PlaygroundArgs) -> Result<Summary, CliError> {
    if args.sessions == 0 {
        return Err(CliError::Usage("--sessions must be at least 1".into()));
    }
    if args.max_rounds == 0 {
        return Err(CliError::Usage("--max-rounds must be at least 1".into()));
    }
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let seeds = read_seeds(&args.seeds)?;
    let models = args.models.models()?;
    let descriptions: Vec<String> = seeds.iter().cycle().take(args.sessions).cloned().collect();
    let runs = run_many(
        &descriptions,
        &models.gateway,
        &models.templates,
        args.max_rounds,
        args.workers,
    )
    .await;

    let transcripts = args.out.join("transcripts");
    fs::create_dir_all(&transcripts).map_err(|e| CliError::io(&transcripts, e))?;
    let mut dataset = Vec::new();
    let mut summary = Summary {
        sessions: runs.len(),
        ..Summary::default()
    };
    let mut failures = Vec::new();
    for (k, run) in runs.iter().enumerate() {
        let path = transcripts.join(format!("session-{:03}.json", k + 1));
        let body = match run {
            Ok(run) => {
                match run.session.status {
                    PlaygroundStatus::Completed => summary.completed += 1,
                    PlaygroundStatus::Stalled => summary.stalled += 1,
                    PlaygroundStatus::Running => summary.running += 1,
                }
                if let Some(e) = &run.error {
                    failures.push(format!("session {}: {e}", k + 1));
                }
                for line in &run.dataset {
                    serde_json::to_writer(&mut dataset, line).expect("dataset lines serialize");
                    dataset.push(b'\n');
                    summary.dataset_lines += 1;
                }
                serde_json::to_vec_pretty(run).expect("transcripts serialize")
            }
            Err(e) => {
                summary.failed += 1;
                failures.push(format!("session {}: {e}", k + 1));
                serde_json::to_vec_pretty(&serde_json::json!({
                    "description": descriptions[k],
                    "error": e.to_string(),
                }))
                .expect("json serializes")
            }
        };
        write(&path, &body)?;
    }
    write(&args.out.join("dataset.jsonl"), &dataset)?;
    write(
        &args.out.join("summary.json"),
        &serde_json::to_vec_pretty(&summary).expect("summary serializes"),
    )?;
    println!(
        "{} sessions: {} completed, {} stalled, {} running, {} failed; {} dataset lines",
        summary.sessions,
        summary.completed,
        summary.stalled,
        summary.running,
        summary.failed,
        summary.dataset_lines
    );
    let _ = std::io::stdout().flush();
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(CliError::Runtime(failures.join("\n")))
    }
}
