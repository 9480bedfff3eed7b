use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Args;

use skelact_core::{
    load_joint_text, parse_msr_filename, save_canonical, DatasetManifest, LoaderLayout,
    ManifestEntry, SkeletonTopology,
};

use super::exclusions_from;

#[derive(Args)]
pub struct IngestArgs {
    /// Directory of raw joint-coordinate files.
    #[arg(long)]
    pub input: PathBuf,
    /// Loader layout preset (TOML).
    #[arg(long)]
    pub layout: PathBuf,
    /// Skeleton topology config (TOML).
    #[arg(long)]
    pub topology: PathBuf,
    /// Directory receiving the canonical sequence files.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Manifest file to write.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Exclusion list: file names (with or without extension) to skip.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    /// File-name convention carrying (action, subject, instance).
    #[arg(long, value_enum, default_value_t = Naming::Msr)]
    pub naming: Naming,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Naming {
    /// `a<AA>_s<SS>_e<EE>*`
    Msr,
}

pub fn run(args: IngestArgs) -> anyhow::Result<()> {
    let topology = SkeletonTopology::load(&args.topology)
        .with_context(|| format!("loading topology {}", args.topology.display()))?;
    let layout = LoaderLayout::load(&args.layout)
        .with_context(|| format!("loading layout {}", args.layout.display()))?;
    let exclusions = exclusions_from(args.exclude.as_deref())?;

    let mut names: Vec<PathBuf> = std::fs::read_dir(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.path())
        .collect();
    names.sort();
    anyhow::ensure!(!names.is_empty(), "{} contains no files", args.input.display());

    std::fs::create_dir_all(&args.out_dir)?;
    let mut entries = Vec::new();
    let mut failures: Vec<(PathBuf, String)> = Vec::new();
    let mut excluded = 0usize;
    for path in &names {
        let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let stem = path.file_stem().and_then(|n| n.to_str()).unwrap_or_default();
        if exclusions.contains(file_name) || exclusions.contains(stem) {
            excluded += 1;
            continue;
        }
        let parsed = match args.naming {
            Naming::Msr => parse_msr_filename(file_name),
        };
        let (label, subject, instance) = match parsed {
            Ok(t) => t,
            Err(e) => {
                failures.push((path.clone(), e.to_string()));
                continue;
            }
        };
        match load_joint_text(path, &layout, Arc::clone(&topology)) {
            Ok(seq) => {
                let seq = seq.with_label(label).with_subject(subject).with_instance(instance);
                let out_name = format!("{stem}.skel");
                let out_path = args.out_dir.join(&out_name);
                save_canonical(&seq, &out_path)
                    .with_context(|| format!("writing {}", out_path.display()))?;
                // store the path relative to the manifest when possible
                let manifest_dir = args
                    .manifest
                    .parent()
                    .unwrap_or_else(|| std::path::Path::new("."));
                let rel = out_path
                    .strip_prefix(manifest_dir)
                    .map(|p| p.to_path_buf())
                    .unwrap_or(out_path.clone());
                entries.push(ManifestEntry {
                    path: rel,
                    label,
                    subject,
                    instance,
                });
            }
            Err(e) => failures.push((path.clone(), e.to_string())),
        }
    }

    if !failures.is_empty() {
        eprintln!("failures ({}):", failures.len());
        for (path, reason) in &failures {
            eprintln!("  {}: {reason}", path.display());
        }
    }
    anyhow::ensure!(
        !entries.is_empty(),
        "no file could be ingested ({} failures, {excluded} excluded)",
        failures.len()
    );

    let manifest = DatasetManifest {
        topology_ref: topology.name().to_string(),
        entries,
    };
    manifest.validate()?;
    manifest.save(&args.manifest)?;
    println!(
        "ingested {} sequences ({} failed, {excluded} excluded) -> {}",
        manifest.entries.len(),
        failures.len(),
        args.manifest.display()
    );
    Ok(())
}
