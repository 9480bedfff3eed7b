//! Shared fixture for the command-line tests: a tiny synthetic dataset
//! written as raw MSR-style joint text files, plus the config files a run
//! needs. Everything is seeded and deterministic.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use skelact_core::synthetic::generate_instance;
use skelact_core::ActionSequence;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skelact"))
}

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Write a sequence as a raw joint text file: one `x y z confidence` row
/// per joint, frame after frame, matching the msr-action3d layout preset.
pub fn write_raw(seq: &ActionSequence, path: &Path) {
    let mut body = String::new();
    for frame in &seq.frames {
        for p in &frame.positions {
            let _ = writeln!(body, "{:.9} {:.9} {:.9} 1", p[0], p[1], p[2]);
        }
    }
    std::fs::write(path, body).unwrap();
}

pub struct Fixture {
    pub raw_dir: PathBuf,
    pub data_dir: PathBuf,
    pub manifest: PathBuf,
    pub split: PathBuf,
    pub config: PathBuf,
    pub topology: PathBuf,
    pub layout: PathBuf,
}

/// Two actions by subjects 1..=4, three repetitions each, as raw files
/// named `a<A>_s<S>_e<E>_skeleton3D.txt`.
pub fn build_fixture(root: &Path) -> Fixture {
    let raw_dir = root.join("raw");
    let data_dir = root.join("data");
    std::fs::create_dir_all(&raw_dir).unwrap();
    for action in 1..=2u32 {
        for subject in 1..=4u32 {
            for instance in 1..=3u32 {
                let seq = generate_instance(action - 1, subject, instance, 4096);
                let name = format!("a{action:02}_s{subject:02}_e{instance:02}_skeleton3D.txt");
                write_raw(&seq, &raw_dir.join(name));
            }
        }
    }
    // a file outside the naming scheme exercises the failures path
    std::fs::write(raw_dir.join("readme.txt"), "not a skeleton\n").unwrap();

    let split = root.join("split.toml");
    std::fs::write(&split, "train_subjects = [1, 2, 3]\ntest_subjects = [4]\n").unwrap();

    let config = root.join("pipeline.toml");
    std::fs::write(
        &config,
        "seed = 11\n\
         [descriptor]\n\
         kind = \"cartesian\"\n\
         [quantization]\n\
         sample_cap = 200\n\
         [hmm]\n\
         states = 3\n\
         restarts = 2\n\
         max_iterations = 50\n",
    )
    .unwrap();

    Fixture {
        raw_dir,
        manifest: data_dir.join("manifest.toml"),
        data_dir,
        split,
        config,
        topology: configs_dir().join("kinect20.topology.toml"),
        layout: configs_dir().join("msr_action3d.layout.toml"),
    }
}

pub fn ingest(f: &Fixture) {
    let out = bin()
        .args(["ingest", "--input"])
        .arg(&f.raw_dir)
        .arg("--layout")
        .arg(&f.layout)
        .arg("--topology")
        .arg(&f.topology)
        .arg("--out-dir")
        .arg(&f.data_dir)
        .arg("--manifest")
        .arg(&f.manifest)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "ingest failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn train(f: &Fixture, bundle: &Path, log: Option<&Path>) {
    let mut cmd = bin();
    cmd.arg("train")
        .arg("--manifest")
        .arg(&f.manifest)
        .arg("--topology")
        .arg(&f.topology)
        .arg("--split")
        .arg(&f.split)
        .arg("--config")
        .arg(&f.config)
        .arg("--out")
        .arg(bundle);
    if let Some(log) = log {
        cmd.arg("--log").arg(log);
    }
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
