mod commands;
mod hash;
mod report;

use clap::{Parser, Subcommand};

use commands::{detect, evaluate, ingest, recognize, train};

/// Skeletal action recognition and detection from 3D joint coordinates.
#[derive(Parser)]
#[command(name = "skelact", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw joint-coordinate files into the canonical format and
    /// write a dataset manifest.
    Ingest(ingest::IngestArgs),
    /// Fit the full pipeline on the training split and write a model
    /// bundle plus a training log.
    Train(train::TrainArgs),
    /// Classify segmented canonical sequences against a trained bundle.
    Recognize(recognize::RecognizeArgs),
    /// Label every frame of an unsegmented canonical stream.
    Detect(detect::DetectArgs),
    /// Score a trained bundle on the test split and write a report.
    Evaluate(evaluate::EvaluateArgs),
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest(args) => ingest::run(args),
        Command::Train(args) => train::run(args),
        Command::Recognize(args) => recognize::run(args),
        Command::Detect(args) => detect::run(args),
        Command::Evaluate(args) => evaluate::run(args),
    }
}
