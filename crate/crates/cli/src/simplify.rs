use std::fs;
use std::path::PathBuf;

use clap::Args;
use intentgraph_core::{simplify, FocusSet, IntentId, SimplifiedView, Triple};

use crate::CliError;

#[derive(Args, Debug)]
pub struct SimplifyArgs {
    /// Triple document (JSON).
    pub triple: PathBuf,
    /// Focused intent ids; repeat or separate with commas. Empty focus
    /// collapses every second-layer intent.
    #[arg(long, value_delimiter = ',')]
    pub focus: Vec<String>,
    /// Focus every intent of the tree.
    #[arg(long, conflicts_with = "focus")]
    pub all: bool,
    /// Where to write the view; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: SimplifyArgs) -> Result<SimplifiedView, CliError> {
    let text = fs::read_to_string(&args.triple).map_err(|e| CliError::io(&args.triple, e))?;
    let triple = Triple::from_json(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.triple.display())))?;
    let focus: FocusSet = if args.all {
        FocusSet::all(triple.intent_tree())
    } else {
        args.focus
            .iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(IntentId::from)
            .collect()
    };
    let view = simplify(&triple, &focus).map_err(|e| CliError::Validation(e.to_string()))?;
    let json = serde_json::to_string_pretty(&view).expect("views serialize");
    match &args.out {
        Some(path) => fs::write(path, json).map_err(|e| CliError::io(path, e))?,
        None => println!("{json}"),
    }
    Ok(view)
}
