use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use skelact_core::{
    make_split, save_bundle, AngleTable, DescriptorKind, PipelineConfig, SkeletonTopology,
    SplitSpec,
};

use super::{exclusions_from, load_entries, load_manifest_checked};
use crate::hash::hash_file;

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Skeleton topology config (TOML).
    #[arg(long)]
    pub topology: PathBuf,
    /// Train/test subject split (TOML).
    #[arg(long)]
    pub split: PathBuf,
    /// Pipeline configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Bundle file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log file to write.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Angle table config; defaults to the built-in 35-angle table.
    #[arg(long)]
    pub angles: Option<PathBuf>,
    /// Exclusion list applied before splitting.
    #[arg(long)]
    pub exclude: Option<PathBuf>,

    // Flag overrides; these win over the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub descriptor: Option<DescriptorKind>,
    #[arg(long)]
    pub states: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long)]
    pub variance_fraction: Option<f64>,
    #[arg(long)]
    pub sample_cap: Option<usize>,
    #[arg(long)]
    pub window_width: Option<usize>,
    #[arg(long)]
    pub exit_prob: Option<f64>,
}

pub fn apply_overrides(cfg: &mut PipelineConfig, args: &TrainArgs) {
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.descriptor {
        cfg.descriptor.kind = v;
    }
    if let Some(v) = args.states {
        cfg.hmm.states = v;
    }
    if let Some(v) = args.restarts {
        cfg.hmm.restarts = v;
    }
    if let Some(v) = args.smoothing {
        cfg.hmm.smoothing = v;
    }
    if let Some(v) = args.variance_fraction {
        cfg.reduction.variance_fraction = v;
    }
    if let Some(v) = args.sample_cap {
        cfg.quantization.sample_cap = v;
    }
    if let Some(v) = args.window_width {
        cfg.detection.window_width = v;
    }
    if let Some(v) = args.exit_prob {
        cfg.detection.exit_prob = v;
    }
}

pub fn load_angles(path: Option<&std::path::Path>) -> anyhow::Result<AngleTable> {
    match path {
        Some(p) => {
            AngleTable::load(p).with_context(|| format!("loading angle table {}", p.display()))
        }
        None => Ok(AngleTable::default_table()),
    }
}

pub fn run(args: TrainArgs) -> anyhow::Result<()> {
    let topology = SkeletonTopology::load(&args.topology)
        .with_context(|| format!("loading topology {}", args.topology.display()))?;
    let mut config = PipelineConfig::load(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    apply_overrides(&mut config, &args);
    config.validate()?;
    let angles = load_angles(args.angles.as_deref())?;
    let manifest = load_manifest_checked(&args.manifest, &topology)?;
    let split = SplitSpec::load(&args.split)
        .with_context(|| format!("loading split {}", args.split.display()))?;
    let exclusions = exclusions_from(args.exclude.as_deref())?;

    let (train_entries, _) = make_split(&manifest, &split, &exclusions)?;
    anyhow::ensure!(!train_entries.is_empty(), "training split is empty");
    let train_seqs = load_entries(&args.manifest, &train_entries, topology)?;

    let outcome = skelact_core::train(&train_seqs, &config, &angles)?;
    save_bundle(&outcome.bundle, &args.out)
        .with_context(|| format!("writing bundle {}", args.out.display()))?;

    if let Some(log_path) = &args.log {
        let mut w = std::io::BufWriter::new(std::fs::File::create(log_path)?);
        write_log(&mut w, &args, &config, &outcome.log)?;
        w.flush()?;
    }

    println!(
        "trained {} models over {} sequences ({} descriptor rows, {} clustered, codebook {}, {} components retained) -> {}",
        outcome.bundle.models.len(),
        train_seqs.len(),
        outcome.log.rows_total,
        outcome.log.rows_clustered,
        outcome.log.codebook_size,
        outcome.log.pca_retained,
        args.out.display()
    );
    Ok(())
}

fn write_log(
    w: &mut impl Write,
    args: &TrainArgs,
    config: &PipelineConfig,
    log: &skelact_core::pipeline::TrainingLog,
) -> anyhow::Result<()> {
    writeln!(w, "skelact-train-log v1")?;
    writeln!(w, "config_hash {}", hash_file(&args.config)?)?;
    writeln!(w, "manifest_hash {}", hash_file(&args.manifest)?)?;
    writeln!(w, "seed {}", config.seed)?;
    writeln!(w, "descriptor {}", config.descriptor.kind)?;
    writeln!(w, "rows_total {}", log.rows_total)?;
    writeln!(w, "rows_clustered {}", log.rows_clustered)?;
    writeln!(w, "pca_retained {}", log.pca_retained)?;
    writeln!(w, "codebook_size {}", log.codebook_size)?;
    writeln!(w, "ap_iterations {}", log.ap_iterations)?;
    writeln!(w, "ap_converged {}", log.ap_converged)?;
    for l in &log.per_label {
        writeln!(
            w,
            "label {} sequences {} restarts {} winner {} converged {}",
            l.label,
            l.sequences,
            l.restart_finals.len(),
            l.winning_restart,
            l.converged
        )?;
        let finals: Vec<String> = l.restart_finals.iter().map(|v| format!("{v:.9}")).collect();
        writeln!(w, "restart_finals {}", finals.join(" "))?;
        for (i, ll) in l.log_likelihoods.iter().enumerate() {
            writeln!(w, "label {} iteration {i} loglik {ll:.9}", l.label)?;
        }
    }
    writeln!(w, "end")?;
    Ok(())
}
