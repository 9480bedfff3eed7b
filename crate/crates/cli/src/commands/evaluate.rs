use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Args;
use rayon::prelude::*;

use skelact_core::{
    concat_labeled_stream, load_bundle, make_split, recognize, score_detection, Classification,
    SplitSpec,
};

use super::{exclusions_from, load_entries, load_manifest_checked};
use crate::hash::hash_file;
use crate::report::{DetectionReport, RecognitionReport, RunMeta};

#[derive(Args)]
pub struct EvaluateArgs {
    /// Trained model bundle.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Dataset manifest (TOML).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Train/test subject split (TOML); evaluation uses the test side.
    #[arg(long)]
    pub split: PathBuf,
    /// What to score.
    #[arg(long, value_enum, default_value_t = Mode::Recognition)]
    pub mode: Mode,
    /// Report file to write.
    #[arg(long)]
    pub report: PathBuf,
    /// Exclusion list applied before splitting.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    /// Detection mode: also export per-frame labels to this file.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Recognition,
    Detection,
}

pub fn run(args: EvaluateArgs) -> anyhow::Result<()> {
    let bundle = load_bundle(&args.bundle)
        .with_context(|| format!("loading bundle {}", args.bundle.display()))?;
    let manifest = load_manifest_checked(&args.manifest, &bundle.topology)?;
    let split = SplitSpec::load(&args.split)
        .with_context(|| format!("loading split {}", args.split.display()))?;
    let exclusions = exclusions_from(args.exclude.as_deref())?;
    let (_, test_entries) = make_split(&manifest, &split, &exclusions)?;
    anyhow::ensure!(!test_entries.is_empty(), "test split is empty");
    let test_seqs = load_entries(&args.manifest, &test_entries, Arc::clone(&bundle.topology))?;

    let meta = RunMeta {
        config_hash: format!(
            "{:016x}",
            crate::hash::fnv1a64(skelact_core::bundle::config_text(&bundle.config)?.as_bytes())
        ),
        bundle_hash: hash_file(&args.bundle)?,
        seed: bundle.config.seed,
        manifest_hash: hash_file(&args.manifest)?,
    };

    match args.mode {
        Mode::Recognition => {
            let pairs: Vec<(u32, Option<u32>)> = test_seqs
                .par_iter()
                .map(|seq| {
                    let truth = seq.label.expect("manifest entries are labeled");
                    let predicted = match recognize(&bundle, seq) {
                        Ok((Classification::Label(l), _)) => Some(l),
                        Ok((Classification::Rejected, _)) => None,
                        Err(e) => {
                            log::warn!("sequence failed to classify: {e}");
                            None
                        }
                    };
                    (truth, predicted)
                })
                .collect();
            let report = RecognitionReport::tally(meta, &pairs);
            let mut w = std::io::BufWriter::new(std::fs::File::create(&args.report)?);
            report.write_text(&mut w)?;
            print!("{}", report.render_table());
            println!(
                "recognition over {} sequences -> {}",
                pairs.len(),
                args.report.display()
            );
        }
        Mode::Detection => {
            let (stream, truth) = concat_labeled_stream(&test_seqs)?;
            let result = skelact_core::detect(&bundle, &stream)?;
            let score = score_detection(&result.frame_labels, &truth)?;
            let report = DetectionReport {
                meta,
                frames: truth.len(),
                score,
            };
            let mut w = std::io::BufWriter::new(std::fs::File::create(&args.report)?);
            report.write_text(&mut w)?;
            if let Some(path) = &args.export {
                let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
                result.write_export(&mut w)?;
            }
            print!("{}", report.render_table());
            println!(
                "detection over {} frames -> {}",
                truth.len(),
                args.report.display()
            );
        }
    }
    Ok(())
}
