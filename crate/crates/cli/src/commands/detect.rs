use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Args;

use skelact_core::{load_bundle, load_canonical};

#[derive(Args)]
pub struct DetectArgs {
    /// Trained model bundle.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Canonical sequence file holding the unsegmented stream.
    #[arg(long)]
    pub input: PathBuf,
    /// File receiving the per-frame/segment export; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the bundle's sliding-window width.
    #[arg(long)]
    pub window_width: Option<usize>,
}

pub fn run(args: DetectArgs) -> anyhow::Result<()> {
    let mut bundle = load_bundle(&args.bundle)
        .with_context(|| format!("loading bundle {}", args.bundle.display()))?;
    if let Some(w) = args.window_width {
        bundle.config.detection.window_width = w;
    }
    let stream = load_canonical(&args.input, Arc::clone(&bundle.topology))
        .with_context(|| format!("loading {}", args.input.display()))?;
    let result = skelact_core::detect(&bundle, &stream)?;
    match &args.out {
        Some(path) => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
            result.write_export(&mut w)?;
            println!(
                "{} frames, {} segments -> {}",
                result.frame_labels.len(),
                result.segments.len(),
                path.display()
            );
        }
        None => result.write_export(std::io::stdout().lock())?,
    }
    Ok(())
}
