//! Dataset ingestion: raw joint-coordinate text files, the canonical
//! sequence interchange format, manifests and subject-based splits.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{ActionSequence, Frame, SkeletonTopology};
use crate::textnum::{parse_f64, write_f64};

/// How to read one raw joint-coordinate text file: how many lines of
/// header to skip, how rows group into frames, and which whitespace-
/// separated columns carry x, y and z. Joint `j` of a frame is read from
/// frame-local row `row_offset + j * row_stride`, which covers both plain
/// one-row-per-joint files and interleaved variants that alternate world
/// and screen coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoaderLayout {
    pub name: String,
    pub joints: usize,
    #[serde(default)]
    pub header_lines: usize,
    /// Rows making up one frame; defaults to `joints`.
    #[serde(default)]
    pub rows_per_frame: Option<usize>,
    #[serde(default)]
    pub row_offset: usize,
    #[serde(default = "default_stride")]
    pub row_stride: usize,
    pub x_col: usize,
    pub y_col: usize,
    pub z_col: usize,
    /// Minimum columns a data row must have; extra columns (confidence
    /// flags and the like) are ignored. Defaults to the highest
    /// coordinate column + 1.
    #[serde(default)]
    pub min_columns: Option<usize>,
}

fn default_stride() -> usize {
    1
}

impl LoaderLayout {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let layout: LoaderLayout = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        layout.validate().map_err(|e| match e {
            Error::InvalidManifest(m) => Error::Config {
                path: path.to_path_buf(),
                message: m,
            },
            other => other,
        })?;
        Ok(layout)
    }

    pub fn rows_per_frame(&self) -> usize {
        self.rows_per_frame.unwrap_or(self.joints)
    }

    pub fn min_columns(&self) -> usize {
        self.min_columns
            .unwrap_or(self.x_col.max(self.y_col).max(self.z_col) + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints == 0 {
            return Err(Error::InvalidManifest("layout needs at least one joint".into()));
        }
        if self.row_stride == 0 {
            return Err(Error::InvalidManifest("row stride must be at least 1".into()));
        }
        let last = self.row_offset + (self.joints - 1) * self.row_stride;
        if last >= self.rows_per_frame() {
            return Err(Error::InvalidManifest(format!(
                "joint rows run to {last} but a frame has only {} rows",
                self.rows_per_frame()
            )));
        }
        Ok(())
    }
}

/// Parse one raw joint text file into a sequence over `topology`.
pub fn load_joint_text(
    path: impl AsRef<Path>,
    layout: &LoaderLayout,
    topology: Arc<SkeletonTopology>,
) -> Result<ActionSequence> {
    let path = path.as_ref();
    layout.validate()?;
    if layout.joints != topology.joint_count() {
        return Err(Error::TopologyMismatch {
            expected: format!("{} joints ({})", topology.joint_count(), topology.name()),
            found: format!("layout '{}' with {} joints", layout.name, layout.joints),
        });
    }
    let text = std::fs::read_to_string(path)?;
    let mut lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .collect();
    while lines.last().is_some_and(|(_, l)| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.len() <= layout.header_lines {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let data = &lines[layout.header_lines..];
    let rpf = layout.rows_per_frame();
    if !data.len().is_multiple_of(rpf) {
        return Err(Error::FrameCountMismatch {
            path: path.to_path_buf(),
            found: data.len(),
            rows_per_frame: rpf,
        });
    }
    let min_cols = layout.min_columns();
    let mut frames = Vec::with_capacity(data.len() / rpf);
    for (fi, chunk) in data.chunks(rpf).enumerate() {
        let mut positions = Vec::with_capacity(layout.joints);
        for j in 0..layout.joints {
            let (line_no, line) = chunk[layout.row_offset + j * layout.row_stride];
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < min_cols {
                return Err(Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("{} columns, expected at least {min_cols}", fields.len()),
                });
            }
            let coord = |col: usize| -> Result<f64> {
                parse_f64(fields[col]).map_err(|m| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: m,
                })
            };
            positions.push([
                coord(layout.x_col)?,
                coord(layout.y_col)?,
                coord(layout.z_col)?,
            ]);
        }
        frames.push(Frame::new(positions, fi as u64));
    }
    ActionSequence::new(topology, frames)
}

/// Extract `(action, subject, instance)` from an `a<AA>_s<SS>_e<EE>*`
/// file name.
pub fn parse_msr_filename(name: &str) -> Result<(u32, u32, u32)> {
    fn eat_number(s: &str) -> Option<(u32, &str)> {
        let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits == 0 {
            return None;
        }
        let value: u32 = s[..digits].parse().ok()?;
        Some((value, &s[digits..]))
    }
    let err = || Error::BadFileName(name.to_string());
    let rest = name.strip_prefix('a').ok_or_else(err)?;
    let (action, rest) = eat_number(rest).ok_or_else(err)?;
    let rest = rest.strip_prefix("_s").ok_or_else(err)?;
    let (subject, rest) = eat_number(rest).ok_or_else(err)?;
    let rest = rest.strip_prefix("_e").ok_or_else(err)?;
    let (instance, _) = eat_number(rest).ok_or_else(err)?;
    Ok((action, subject, instance))
}

const CANONICAL_MAGIC: &str = "skelact-seq v1";

/// Write a sequence in the canonical interchange format: a short header
/// (format version, topology name, joint and frame counts, optional
/// label/subject/instance and explicit timestamps) followed by one line
/// per frame of x y z triples in joint order, 17 significant digits each.
pub fn write_canonical(seq: &ActionSequence, mut w: impl Write) -> Result<()> {
    writeln!(w, "{CANONICAL_MAGIC}")?;
    writeln!(w, "topology {}", seq.topology.name())?;
    writeln!(w, "joints {}", seq.topology.joint_count())?;
    writeln!(w, "frames {}", seq.frames.len())?;
    if let Some(l) = seq.label {
        writeln!(w, "label {l}")?;
    }
    if let Some(s) = seq.subject {
        writeln!(w, "subject {s}")?;
    }
    if let Some(i) = seq.instance {
        writeln!(w, "instance {i}")?;
    }
    let default_timestamps = seq
        .frames
        .iter()
        .enumerate()
        .all(|(i, f)| f.timestamp_index == i as u64);
    if !default_timestamps {
        let ts: Vec<String> = seq
            .frames
            .iter()
            .map(|f| f.timestamp_index.to_string())
            .collect();
        writeln!(w, "timestamps {}", ts.join(" "))?;
    }
    writeln!(w, "data")?;
    let mut line = String::new();
    for frame in &seq.frames {
        line.clear();
        for (j, p) in frame.positions.iter().enumerate() {
            for (k, &c) in p.iter().enumerate() {
                if j + k > 0 {
                    line.push(' ');
                }
                write_f64(&mut line, c, "canonical coordinates")?;
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn save_canonical(seq: &ActionSequence, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_canonical(seq, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Read a canonical sequence file; `topology` must match the name and
/// joint count recorded in the header.
pub fn load_canonical(
    path: impl AsRef<Path>,
    topology: Arc<SkeletonTopology>,
) -> Result<ActionSequence> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_canonical(BufReader::new(file), topology, path)
}

pub fn read_canonical(
    r: impl BufRead,
    topology: Arc<SkeletonTopology>,
    path: &Path,
) -> Result<ActionSequence> {
    let fail = |line: usize, message: String| Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = r.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::EmptyFile(path.to_path_buf()))?;
    let first = first?;
    if first.trim() != CANONICAL_MAGIC {
        return Err(fail(1, format!("expected '{CANONICAL_MAGIC}', found '{first}'")));
    }
    let mut joints: Option<usize> = None;
    let mut frames_decl: Option<usize> = None;
    let mut topology_name: Option<String> = None;
    let mut label = None;
    let mut subject = None;
    let mut instance = None;
    let mut timestamps: Option<Vec<u64>> = None;
    let mut data_line = 0usize;
    for (idx, line) in &mut lines {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end();
        if line == "data" {
            data_line = line_no;
            break;
        }
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| fail(line_no, format!("malformed header line '{line}'")))?;
        let parse_u64 = |v: &str| -> Result<u64> {
            v.parse()
                .map_err(|_| fail(line_no, format!("'{v}' is not a nonnegative integer")))
        };
        match key {
            "topology" => topology_name = Some(value.to_string()),
            "joints" => joints = Some(parse_u64(value)? as usize),
            "frames" => frames_decl = Some(parse_u64(value)? as usize),
            "label" => label = Some(parse_u64(value)? as u32),
            "subject" => subject = Some(parse_u64(value)? as u32),
            "instance" => instance = Some(parse_u64(value)? as u32),
            "timestamps" => {
                let ts: Result<Vec<u64>> = value.split_whitespace().map(parse_u64).collect();
                timestamps = Some(ts?);
            }
            other => return Err(fail(line_no, format!("unknown header key '{other}'"))),
        }
    }
    if data_line == 0 {
        return Err(fail(0, "missing 'data' marker".into()));
    }
    let joints = joints.ok_or_else(|| fail(data_line, "missing 'joints' header".into()))?;
    let frames_decl =
        frames_decl.ok_or_else(|| fail(data_line, "missing 'frames' header".into()))?;
    let declared_name =
        topology_name.ok_or_else(|| fail(data_line, "missing 'topology' header".into()))?;
    if declared_name != topology.name() || joints != topology.joint_count() {
        return Err(Error::TopologyMismatch {
            expected: format!("{} ({} joints)", topology.name(), topology.joint_count()),
            found: format!("{declared_name} ({joints} joints)"),
        });
    }
    let mut frames = Vec::with_capacity(frames_decl);
    for (idx, line) in &mut lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 * joints {
            return Err(fail(
                line_no,
                format!("{} values, expected {}", fields.len(), 3 * joints),
            ));
        }
        let mut positions = Vec::with_capacity(joints);
        for j in 0..joints {
            let coord = |k: usize| -> Result<f64> {
                parse_f64(fields[3 * j + k]).map_err(|m| fail(line_no, m))
            };
            positions.push([coord(0)?, coord(1)?, coord(2)?]);
        }
        let t = frames.len();
        let timestamp = match &timestamps {
            Some(ts) => *ts.get(t).ok_or_else(|| {
                fail(line_no, "more frames than declared timestamps".into())
            })?,
            None => t as u64,
        };
        frames.push(Frame::new(positions, timestamp));
    }
    if frames.len() != frames_decl {
        return Err(fail(
            0,
            format!("{} data lines, header declares {frames_decl}", frames.len()),
        ));
    }
    let mut seq = ActionSequence::new(topology, frames)?;
    seq.label = label;
    seq.subject = subject;
    seq.instance = instance;
    Ok(seq)
}

/// One dataset file with its action label, actor and repetition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: u32,
    pub subject: u32,
    pub instance: u32,
}

/// The file list of one ingested dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub topology_ref: String,
    #[serde(default)]
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(&e.path) {
                return Err(Error::InvalidManifest(format!(
                    "duplicate path '{}'",
                    e.path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let manifest: DatasetManifest = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::InvalidManifest(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Disjoint train/test subject sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_subjects: BTreeSet<u32>,
    pub test_subjects: BTreeSet<u32>,
}

impl SplitSpec {
    pub fn new(train: impl IntoIterator<Item = u32>, test: impl IntoIterator<Item = u32>) -> Result<Self> {
        let spec = Self {
            train_subjects: train.into_iter().collect(),
            test_subjects: test.into_iter().collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_subjects.is_empty() || self.test_subjects.is_empty() {
            return Err(Error::InvalidSplit("both subject sets must be nonempty".into()));
        }
        if let Some(s) = self.train_subjects.intersection(&self.test_subjects).next() {
            return Err(Error::InvalidSplit(format!(
                "subject {s} appears in both train and test"
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let spec: SplitSpec = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Read an exclusion list: one file name per line, `#` comments allowed.
pub fn load_exclusions(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_exclusions(&text))
}

pub fn parse_exclusions(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn is_excluded(path: &Path, exclusions: &BTreeSet<String>) -> bool {
    let name = path.file_name().and_then(|n| n.to_str());
    let stem = path.file_stem().and_then(|n| n.to_str());
    name.is_some_and(|n| exclusions.contains(n)) || stem.is_some_and(|s| exclusions.contains(s))
}

/// Partition manifest entries into train and test lists by subject.
/// Excluded file names (matched with or without extension) land in
/// neither list; subjects outside both sets are dropped with a warning.
pub fn make_split(
    manifest: &DatasetManifest,
    spec: &SplitSpec,
    exclusions: &BTreeSet<String>,
) -> Result<(Vec<ManifestEntry>, Vec<ManifestEntry>)> {
    spec.validate()?;
    manifest.validate()?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for e in &manifest.entries {
        if is_excluded(&e.path, exclusions) {
            continue;
        }
        if spec.train_subjects.contains(&e.subject) {
            train.push(e.clone());
        } else if spec.test_subjects.contains(&e.subject) {
            test.push(e.clone());
        } else {
            log::warn!(
                "subject {} of '{}' is in neither split; dropped",
                e.subject,
                e.path.display()
            );
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topology3() -> Arc<SkeletonTopology> {
        Arc::new(
            SkeletonTopology::new(
                "t3",
                vec!["r".into(), "a".into(), "b".into()],
                Some("r"),
                &[("r".into(), "a".into()), ("a".into(), "b".into())],
            )
            .unwrap(),
        )
    }

    fn layout3() -> LoaderLayout {
        LoaderLayout {
            name: "test".into(),
            joints: 3,
            header_lines: 1,
            rows_per_frame: None,
            row_offset: 0,
            row_stride: 1,
            x_col: 0,
            y_col: 1,
            z_col: 2,
            min_columns: Some(4),
        }
    }

    #[test]
    fn loads_minimal_well_formed_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.txt");
        let mut body = String::from("1\n");
        for j in 0..3 {
            body.push_str(&format!("{}.5 1.25 -0.75 1.0\n", j));
        }
        std::fs::write(&path, body).unwrap();
        let seq = load_joint_text(&path, &layout3(), topology3()).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.frames[0].positions[0], [0.5, 1.25, -0.75]);
        assert_eq!(seq.frames[0].positions[2], [2.5, 1.25, -0.75]);
    }

    #[test]
    fn interleaved_rows_respect_stride() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("strided.txt");
        // two rows per joint: world row then screen row
        let mut body = String::new();
        for j in 0..3 {
            body.push_str(&format!("{j}.0 0.0 0.0 1\n"));
            body.push_str("999 999 999 0\n");
        }
        std::fs::write(&path, body).unwrap();
        let layout = LoaderLayout {
            header_lines: 0,
            rows_per_frame: Some(6),
            row_stride: 2,
            min_columns: None,
            ..layout3()
        };
        let seq = load_joint_text(&path, &layout, topology3()).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.frames[0].positions[1], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn malformed_line_is_reported_with_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "1\n0 0 0 1\n0 0\n0 0 0 1\n").unwrap();
        let err = load_joint_text(&path, &layout3(), topology3()).unwrap_err();
        match err {
            Error::MalformedLine { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_frame_count_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.txt");
        std::fs::write(&path, "1\n0 0 0 1\n0 0 0 1\n").unwrap();
        let err = load_joint_text(&path, &layout3(), topology3()).unwrap_err();
        assert!(matches!(err, Error::FrameCountMismatch { found: 2, .. }));
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.txt");
        std::fs::write(&path, "1\n").unwrap();
        let err = load_joint_text(&path, &layout3(), topology3()).unwrap_err();
        assert!(matches!(err, Error::EmptyFile(_)));
    }

    #[test]
    fn msr_names_parse() {
        assert_eq!(parse_msr_filename("a02_s03_e02_skeleton3D.txt").unwrap(), (2, 3, 2));
        assert_eq!(parse_msr_filename("a20_s10_e03_skeleton3D.txt").unwrap(), (20, 10, 3));
        assert_eq!(parse_msr_filename("a1_s2_e3").unwrap(), (1, 2, 3));
        assert!(matches!(
            parse_msr_filename("readme.txt").unwrap_err(),
            Error::BadFileName(_)
        ));
        assert!(parse_msr_filename("a_s1_e1").is_err());
    }

    fn sample_sequence() -> ActionSequence {
        let frames = vec![
            Frame::new(vec![[0.1, 0.2, 0.3], [1.0, -2.0, 0.5], [0.25, 1e-7, 3.5]], 0),
            Frame::new(
                vec![[0.11, 0.19, 0.31], [1.05, -1.9, 0.52], [0.24, 2e-7, 3.4]],
                1,
            ),
        ];
        ActionSequence::new(topology3(), frames)
            .unwrap()
            .with_label(4)
            .with_subject(2)
            .with_instance(1)
    }

    #[test]
    fn canonical_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.skel");
        let seq = sample_sequence();
        save_canonical(&seq, &path).unwrap();
        let back = load_canonical(&path, topology3()).unwrap();
        assert_eq!(seq, back);
    }

    #[test]
    fn canonical_omits_optional_fields() {
        let frames = vec![Frame::new(vec![[0.0; 3]; 3], 0), Frame::new(vec![[1.0; 3]; 3], 1)];
        let seq = ActionSequence::new(topology3(), frames).unwrap();
        let mut buf = Vec::new();
        write_canonical(&seq, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("label"));
        assert!(!text.contains("timestamps"));
        assert!(text.contains("frames 2"));
    }

    #[test]
    fn canonical_preserves_sparse_timestamps() {
        let frames = vec![Frame::new(vec![[0.0; 3]; 3], 3), Frame::new(vec![[1.0; 3]; 3], 9)];
        let seq = ActionSequence::new(topology3(), frames).unwrap();
        let mut buf = Vec::new();
        write_canonical(&seq, &mut buf).unwrap();
        let back = read_canonical(
            std::io::Cursor::new(buf),
            topology3(),
            Path::new("mem.skel"),
        )
        .unwrap();
        assert_eq!(seq, back);
    }

    #[test]
    fn canonical_rejects_wrong_topology() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.skel");
        save_canonical(&sample_sequence(), &path).unwrap();
        let other = Arc::new(
            SkeletonTopology::new(
                "other",
                vec!["x".into(), "y".into(), "z".into()],
                Some("x"),
                &[("x".into(), "y".into()), ("y".into(), "z".into())],
            )
            .unwrap(),
        );
        let err = load_canonical(&path, other).unwrap_err();
        assert!(matches!(err, Error::TopologyMismatch { .. }));
    }

    fn manifest_of(subjects: &[u32]) -> DatasetManifest {
        DatasetManifest {
            topology_ref: "t3".into(),
            entries: subjects
                .iter()
                .enumerate()
                .map(|(i, &s)| ManifestEntry {
                    path: PathBuf::from(format!("a01_s{s:02}_e{i:02}.skel")),
                    label: 1,
                    subject: s,
                    instance: i as u32,
                })
                .collect(),
        }
    }

    #[test]
    fn split_partitions_by_subject() {
        let manifest = manifest_of(&[1, 3, 6, 9]);
        let spec = SplitSpec::new(1..=5, 6..=10).unwrap();
        let (train, test) = make_split(&manifest, &spec, &BTreeSet::new()).unwrap();
        assert_eq!(train.len(), 2);
        assert_eq!(test.len(), 2);
        assert!(train.iter().all(|e| e.subject <= 5));
        assert!(test.iter().all(|e| e.subject >= 6));
    }

    #[test]
    fn excluded_files_in_neither_list() {
        let manifest = manifest_of(&[1, 6]);
        let spec = SplitSpec::new(1..=5, 6..=10).unwrap();
        let mut exclusions = BTreeSet::new();
        exclusions.insert("a01_s01_e00".to_string()); // stem form
        let (train, test) = make_split(&manifest, &spec, &exclusions).unwrap();
        assert!(train.is_empty());
        assert_eq!(test.len(), 1);
    }

    #[test]
    fn split_counts_add_up() {
        // 100 entries over 10 subjects, 5/5 split, one exclusion
        let subjects: Vec<u32> = (0..100).map(|i| (i % 10) + 1).collect();
        let manifest = manifest_of(&subjects);
        let spec = SplitSpec::new(1..=5, 6..=10).unwrap();
        let mut exclusions = BTreeSet::new();
        exclusions.insert(manifest.entries[17].path.file_name().unwrap().to_str().unwrap().to_string());
        let (train, test) = make_split(&manifest, &spec, &exclusions).unwrap();
        assert_eq!(train.len() + test.len(), 99);
        // disjointness and union
        let all: BTreeSet<_> = train.iter().chain(&test).map(|e| e.path.clone()).collect();
        assert_eq!(all.len(), 99);
        assert!(!all.contains(&manifest.entries[17].path));
    }

    #[test]
    fn split_validation() {
        assert!(SplitSpec::new([1, 2], [2, 3]).is_err());
        assert!(SplitSpec::new([], [1]).is_err());
        assert!(SplitSpec::new([1], [2]).is_ok());
    }

    #[test]
    fn manifest_round_trip_and_duplicate_detection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.toml");
        let manifest = manifest_of(&[1, 2]);
        manifest.save(&path).unwrap();
        let back = DatasetManifest::load(&path).unwrap();
        assert_eq!(manifest, back);
        let mut dup = manifest.clone();
        dup.entries.push(dup.entries[0].clone());
        assert!(dup.validate().is_err());
    }

    #[test]
    fn exclusion_parsing_skips_comments() {
        let set = parse_exclusions("# corrupted\na02_s03_e02_skeleton3D\n\n a04_s03_e01_skeleton3D \n");
        assert_eq!(set.len(), 2);
        assert!(set.contains("a02_s03_e02_skeleton3D"));
    }
}
