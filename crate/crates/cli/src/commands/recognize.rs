use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Args;

use skelact_core::{load_bundle, load_canonical, recognize, Classification};

#[derive(Args)]
pub struct RecognizeArgs {
    /// Trained model bundle.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Canonical sequence files to classify.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Also print every model's log-likelihood.
    #[arg(long)]
    pub scores: bool,
}

pub fn run(args: RecognizeArgs) -> anyhow::Result<()> {
    let bundle = load_bundle(&args.bundle)
        .with_context(|| format!("loading bundle {}", args.bundle.display()))?;
    for path in &args.input {
        let seq = load_canonical(path, Arc::clone(&bundle.topology))
            .with_context(|| format!("loading {}", path.display()))?;
        let (outcome, scores) = recognize(&bundle, &seq)?;
        match outcome {
            Classification::Label(l) => println!("{}\tlabel {l}", path.display()),
            Classification::Rejected => println!("{}\trejected", path.display()),
        }
        if args.scores {
            for (label, ll) in scores {
                println!("\tmodel {label}: log-likelihood {ll:.6}");
            }
        }
    }
    Ok(())
}
