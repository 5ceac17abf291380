//! Operator entry points. Exit codes: 0 success, 1 usage, 2 validation,
//! 3 gateway or runtime failure.

pub mod error;
pub mod eval;
pub mod models;
pub mod playground;
pub mod serve;
pub mod simplify;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "intentgraph", version, about = "Intent-aligned code generation tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the session server.
    Serve(serve::ServeArgs),
    /// Simulate multi-round sessions and write a distillation dataset.
    Playground(playground::PlaygroundArgs),
    /// Score candidate triples against references with ROUGE and BLEU.
    Eval(eval::EvalArgs),
    /// Compute the simplified view of a stored triple.
    Simplify(simplify::SimplifyArgs),
}

pub async fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve(a) => serve::run(a).await,
        Command::Playground(a) => playground::run(a).await.map(drop),
        Command::Eval(a) => eval::run(a).map(drop),
        Command::Simplify(a) => simplify::run(a).map(drop),
    }
}
