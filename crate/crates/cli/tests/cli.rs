mod common;

use common::{bin, build_fixture, ingest, train};

#[test]
fn full_command_line_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = build_fixture(dir.path());

    // ---- ingest ----
    ingest(&f);
    let manifest_text = std::fs::read_to_string(&f.manifest).unwrap();
    assert_eq!(manifest_text.matches("[[entries]]").count(), 24);
    assert!(!manifest_text.contains("readme"));

    // ---- train ----
    let bundle = dir.path().join("model.bundle");
    train(&f, &bundle, None);
    assert!(bundle.exists());

    // a second run with smoothing disabled checks the training log: pure
    // expectation-maximization likelihoods never decrease
    let log = dir.path().join("train.log");
    let out = bin()
        .arg("train")
        .arg("--manifest")
        .arg(&f.manifest)
        .arg("--topology")
        .arg(&f.topology)
        .arg("--split")
        .arg(&f.split)
        .arg("--config")
        .arg(&f.config)
        .arg("--out")
        .arg(dir.path().join("unsmoothed.bundle"))
        .arg("--log")
        .arg(&log)
        .arg("--smoothing")
        .arg("0.0")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log_text = std::fs::read_to_string(&log).unwrap();
    let mut per_label: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for line in log_text.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() == 6 && fields[0] == "label" && fields[2] == "iteration" {
            per_label
                .entry(fields[1])
                .or_default()
                .push(fields[5].parse().unwrap());
        }
    }
    assert_eq!(per_label.len(), 2, "log:\n{log_text}");
    for (label, lls) in per_label {
        assert!(lls.len() >= 2);
        for w in lls.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "label {label}: {lls:?}");
        }
    }

    // ---- recognize ----
    let probe = f.data_dir.join("a01_s04_e01_skeleton3D.skel");
    let out = bin()
        .arg("recognize")
        .arg("--bundle")
        .arg(&bundle)
        .arg("--input")
        .arg(&probe)
        .arg("--scores")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("label 1"), "{stdout}");
    assert!(stdout.contains("log-likelihood"));

    // ---- detect ----
    let export = dir.path().join("detect.txt");
    let out = bin()
        .arg("detect")
        .arg("--bundle")
        .arg(&bundle)
        .arg("--input")
        .arg(&probe)
        .arg("--out")
        .arg(&export)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let export_text = std::fs::read_to_string(&export).unwrap();
    assert!(export_text.starts_with("frames\n0\t"));
    assert!(export_text.contains("\nsegments\n"));

    // ---- evaluate: recognition ----
    let report = dir.path().join("recognition.report");
    let out = bin()
        .arg("evaluate")
        .arg("--bundle")
        .arg(&bundle)
        .arg("--manifest")
        .arg(&f.manifest)
        .arg("--split")
        .arg(&f.split)
        .arg("--mode")
        .arg("recognition")
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report_text = std::fs::read_to_string(&report).unwrap();
    assert!(report_text.contains("mode recognition"));
    assert!(report_text.contains("overall correct 6 total 6 accuracy 1.000000"), "{report_text}");
    // accounting identity: confusion trace / total equals overall accuracy
    let mut trace = 0usize;
    let mut labels: Vec<u32> = Vec::new();
    for line in report_text.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.first() == Some(&"confusion_labels") {
            labels = fields[1..].iter().map(|v| v.parse().unwrap()).collect();
        }
        if fields.first() == Some(&"confusion") && fields.len() > 2 {
            let truth: u32 = fields[1].parse().unwrap();
            let row_idx = labels.iter().position(|&l| l == truth).unwrap();
            let count: usize = fields[2 + row_idx].parse().unwrap();
            trace += count;
        }
    }
    assert_eq!(trace, 6);

    // ---- evaluate: detection ----
    let dreport = dir.path().join("detection.report");
    let out = bin()
        .arg("evaluate")
        .arg("--bundle")
        .arg(&bundle)
        .arg("--manifest")
        .arg(&f.manifest)
        .arg("--split")
        .arg(&f.split)
        .arg("--mode")
        .arg("detection")
        .arg("--report")
        .arg(&dreport)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dreport_text = std::fs::read_to_string(&dreport).unwrap();
    assert!(dreport_text.contains("mode detection"));
    assert!(dreport_text.contains("micro tp "), "{dreport_text}");
    assert!(dreport_text.contains(" f1 "), "{dreport_text}");
}

#[test]
fn ingest_applies_exclusions_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let f = build_fixture(dir.path());
    let exclude = dir.path().join("exclude.txt");
    std::fs::write(&exclude, "a01_s01_e01_skeleton3D\n").unwrap();
    let out = bin()
        .arg("ingest")
        .arg("--input")
        .arg(&f.raw_dir)
        .arg("--layout")
        .arg(&f.layout)
        .arg("--topology")
        .arg(&f.topology)
        .arg("--out-dir")
        .arg(&f.data_dir)
        .arg("--manifest")
        .arg(&f.manifest)
        .arg("--exclude")
        .arg(&exclude)
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest_text = std::fs::read_to_string(&f.manifest).unwrap();
    assert!(!manifest_text.contains("a01_s01_e01"));
    assert_eq!(manifest_text.matches("[[entries]]").count(), 23);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("readme.txt"), "{stderr}");
}

#[test]
fn ingest_of_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let f = build_fixture(dir.path());
    let out = bin()
        .arg("ingest")
        .arg("--input")
        .arg(&empty)
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
    assert!(!out.status.success());
}

#[test]
fn train_rejects_config_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    let f = build_fixture(dir.path());
    ingest(&f);
    let bad_config = dir.path().join("bad.toml");
    std::fs::write(&bad_config, "[descriptor]\nkind = \"cartesian\"\n").unwrap();
    let out = bin()
        .arg("train")
        .arg("--manifest")
        .arg(&f.manifest)
        .arg("--topology")
        .arg(&f.topology)
        .arg("--split")
        .arg(&f.split)
        .arg("--config")
        .arg(&bad_config)
        .arg("--out")
        .arg(dir.path().join("never.bundle"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("seed"), "{stderr}");
    assert!(!dir.path().join("never.bundle").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = build_fixture(dir.path());
    ingest(&f);
    let bundle = dir.path().join("override.bundle");
    let out = bin()
        .arg("train")
        .arg("--manifest")
        .arg(&f.manifest)
        .arg("--topology")
        .arg(&f.topology)
        .arg("--split")
        .arg(&f.split)
        .arg("--config")
        .arg(&f.config)
        .arg("--out")
        .arg(&bundle)
        .arg("--seed")
        .arg("99")
        .arg("--window-width")
        .arg("3")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&bundle).unwrap();
    assert!(text.contains("\nseed 99\n"));
    assert!(text.contains("\ndetection_window_width 3\n"));
}

