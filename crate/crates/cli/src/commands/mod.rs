pub mod detect;
pub mod evaluate;
pub mod ingest;
pub mod recognize;
pub mod train;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;

use skelact_core::{
    load_canonical, load_exclusions, ActionSequence, DatasetManifest, ManifestEntry,
    SkeletonTopology,
};

/// Manifest entry paths are stored relative to the manifest file itself;
/// absolute paths pass through.
pub fn resolve_entry_path(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
    if entry.path.is_absolute() {
        entry.path.clone()
    } else {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&entry.path)
    }
}

pub fn load_entries(
    manifest_path: &Path,
    entries: &[ManifestEntry],
    topology: Arc<SkeletonTopology>,
) -> anyhow::Result<Vec<ActionSequence>> {
    entries
        .iter()
        .map(|e| {
            let path = resolve_entry_path(manifest_path, e);
            let mut seq = load_canonical(&path, Arc::clone(&topology))
                .with_context(|| format!("loading {}", path.display()))?;
            // the manifest is authoritative for labels and split metadata
            seq.label = Some(e.label);
            seq.subject = Some(e.subject);
            seq.instance = Some(e.instance);
            Ok(seq)
        })
        .collect()
}

pub fn load_manifest_checked(
    manifest_path: &Path,
    topology: &SkeletonTopology,
) -> anyhow::Result<DatasetManifest> {
    let manifest = DatasetManifest::load(manifest_path)
        .with_context(|| format!("loading manifest {}", manifest_path.display()))?;
    anyhow::ensure!(
        manifest.topology_ref == topology.name(),
        "manifest references topology '{}' but '{}' was provided",
        manifest.topology_ref,
        topology.name()
    );
    Ok(manifest)
}

pub fn exclusions_from(path: Option<&Path>) -> anyhow::Result<BTreeSet<String>> {
    match path {
        Some(p) => {
            load_exclusions(p).with_context(|| format!("loading exclusions {}", p.display()))
        }
        None => Ok(BTreeSet::new()),
    }
}
