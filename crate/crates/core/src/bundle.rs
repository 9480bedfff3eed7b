//! Model bundle file format: one sectioned text container holding every
//! fitted stage at full decimal precision. The leading line carries the
//! format version; unknown versions are rejected. Identical bundles
//! serialize to identical bytes, which is what makes seeded training runs
//! comparable file-to-file.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::descriptors::{AnglePoint, AngleTable, AngleTriple, DescriptorKind};
use crate::error::{Error, Result};
use crate::hmm::DiscreteHmm;
use crate::pipeline::{ModelBundle, PipelineConfig};
use crate::quantization::{Codebook, Preference, PreferenceName};
use crate::reduction::{Normalizer, PcaModel};
use crate::skeleton::{BoneLengthProfile, SkeletonTopology};
use crate::textnum::{parse_f64, write_f64};

const BUNDLE_MAGIC: &str = "skelact-bundle";
const BUNDLE_VERSION: &str = "v1";

pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_bundle(bundle, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_bundle(BufReader::new(file), path)
}

fn float_list(out: &mut String, values: impl IntoIterator<Item = f64>, what: &'static str) -> Result<()> {
    for v in values {
        out.push(' ');
        write_f64(out, v, what)?;
    }
    Ok(())
}

/// The `[config]` section exactly as the bundle stores it; a canonical,
/// hashable rendering of a pipeline configuration.
pub fn config_text(cfg: &PipelineConfig) -> Result<String> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let mut line = String::new();
    writeln!(out, "[config]").expect("write to String");
    writeln!(out, "seed {}", cfg.seed).expect("write to String");
    writeln!(out, "descriptor {}", cfg.descriptor.kind).expect("write to String");
    writeln!(out, "dct_keep {}", cfg.descriptor.dct_keep).expect("write to String");
    writeln!(out, "amdf_n {}", cfg.descriptor.amdf_n).expect("write to String");
    writeln!(out, "constant_centroid {}", cfg.descriptor.constant_centroid)
        .expect("write to String");
    write_f64(&mut line, cfg.reduction.variance_fraction, "config")?;
    writeln!(out, "variance_fraction {line}").expect("write to String");
    line.clear();
    write_f64(&mut line, cfg.quantization.damping, "config")?;
    writeln!(out, "ap_damping {line}").expect("write to String");
    writeln!(out, "ap_max_iterations {}", cfg.quantization.max_iterations)
        .expect("write to String");
    writeln!(out, "ap_convergence_window {}", cfg.quantization.convergence_window)
        .expect("write to String");
    match cfg.quantization.preference {
        Preference::Named(PreferenceName::Median) => {
            writeln!(out, "ap_preference median").expect("write to String")
        }
        Preference::Value(v) => {
            line.clear();
            write_f64(&mut line, v, "config")?;
            writeln!(out, "ap_preference {line}").expect("write to String");
        }
    }
    writeln!(out, "ap_sample_cap {}", cfg.quantization.sample_cap).expect("write to String");
    writeln!(out, "hmm_states {}", cfg.hmm.states).expect("write to String");
    writeln!(out, "hmm_restarts {}", cfg.hmm.restarts).expect("write to String");
    line.clear();
    write_f64(&mut line, cfg.hmm.smoothing, "config")?;
    writeln!(out, "hmm_smoothing {line}").expect("write to String");
    writeln!(out, "hmm_max_iterations {}", cfg.hmm.max_iterations).expect("write to String");
    line.clear();
    write_f64(&mut line, cfg.hmm.tolerance, "config")?;
    writeln!(out, "hmm_tolerance {line}").expect("write to String");
    writeln!(out, "hmm_left_to_right {}", cfg.hmm.left_to_right).expect("write to String");
    writeln!(out, "detection_window_width {}", cfg.detection.window_width)
        .expect("write to String");
    line.clear();
    write_f64(&mut line, cfg.detection.exit_prob, "config")?;
    writeln!(out, "detection_exit_prob {line}").expect("write to String");
    Ok(out)
}

pub fn write_bundle(bundle: &ModelBundle, mut w: impl Write) -> Result<()> {
    bundle.validate()?;
    writeln!(w, "{BUNDLE_MAGIC} {BUNDLE_VERSION}")?;
    w.write_all(config_text(&bundle.config)?.as_bytes())?;
    let mut line = String::new();

    let topo = &bundle.topology;
    writeln!(w, "[topology]")?;
    writeln!(w, "name {}", topo.name())?;
    writeln!(w, "joints {}", topo.joint_count())?;
    for name in topo.joint_names() {
        writeln!(w, "joint {name}")?;
    }
    writeln!(w, "root {}", topo.joint_names()[topo.root()])?;
    writeln!(w, "bones {}", topo.bone_count())?;
    for b in topo.bones() {
        writeln!(
            w,
            "bone {} {}",
            topo.joint_names()[b.parent],
            topo.joint_names()[b.child]
        )?;
    }

    writeln!(w, "[angles]")?;
    writeln!(w, "count {}", bundle.angles.len())?;
    for t in bundle.angles.triples() {
        writeln!(w, "triple {} {} {}", t.a.name(), t.vertex.name(), t.b.name())?;
    }

    writeln!(w, "[bone_profile]")?;
    line.clear();
    float_list(&mut line, bundle.profile.lengths().iter().copied(), "bone profile")?;
    writeln!(w, "lengths{line}")?;

    writeln!(w, "[normalizer]")?;
    writeln!(w, "dim {}", bundle.normalizer.dim())?;
    line.clear();
    float_list(&mut line, bundle.normalizer.means().iter().copied(), "normalizer")?;
    writeln!(w, "means{line}")?;
    line.clear();
    float_list(&mut line, bundle.normalizer.stds().iter().copied(), "normalizer")?;
    writeln!(w, "stds{line}")?;
    let degenerate: Vec<String> = bundle
        .normalizer
        .degenerate()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d)
        .map(|(i, _)| i.to_string())
        .collect();
    writeln!(w, "degenerate {}", degenerate.join(" "))?;

    writeln!(w, "[pca]")?;
    writeln!(w, "dim {}", bundle.pca.input_dim())?;
    writeln!(w, "retained {}", bundle.pca.retained())?;
    line.clear();
    float_list(
        &mut line,
        bundle.pca.eigenvalues().iter().take(bundle.pca.retained()).copied(),
        "eigenvalues",
    )?;
    writeln!(w, "eigenvalues{line}")?;
    line.clear();
    float_list(&mut line, bundle.pca.mean().iter().copied(), "pca mean")?;
    writeln!(w, "mean{line}")?;
    for k in 0..bundle.pca.retained() {
        line.clear();
        float_list(&mut line, bundle.pca.components().row(k).iter().copied(), "pca component")?;
        writeln!(w, "component{line}")?;
    }

    writeln!(w, "[codebook]")?;
    writeln!(w, "count {}", bundle.codebook.len())?;
    writeln!(w, "dim {}", bundle.codebook.dim())?;
    for row in bundle.codebook.exemplars().rows() {
        line.clear();
        float_list(&mut line, row.iter().copied(), "codebook")?;
        writeln!(w, "exemplar{line}")?;
    }

    writeln!(w, "[hmm]")?;
    writeln!(w, "count {}", bundle.models.len())?;
    for m in &bundle.models {
        writeln!(w, "model {} states {} symbols {}", m.label(), m.states(), m.symbols())?;
        line.clear();
        float_list(&mut line, m.initial().iter().copied(), "hmm initial")?;
        writeln!(w, "initial{line}")?;
        for row in m.transition().rows() {
            line.clear();
            float_list(&mut line, row.iter().copied(), "hmm transition")?;
            writeln!(w, "transition{line}")?;
        }
        for row in m.emission().rows() {
            line.clear();
            float_list(&mut line, row.iter().copied(), "hmm emission")?;
            writeln!(w, "emission{line}")?;
        }
    }
    writeln!(w, "end")?;
    Ok(())
}

struct Reader<R: BufRead> {
    lines: std::iter::Enumerate<std::io::Lines<R>>,
    path: PathBuf,
    line_no: usize,
}

impl<R: BufRead> Reader<R> {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::BundleFormat {
            path: self.path.clone(),
            line: self.line_no,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<String> {
        match self.lines.next() {
            Some((idx, line)) => {
                self.line_no = idx + 1;
                Ok(line?)
            }
            None => {
                self.line_no += 1;
                Err(self.fail("unexpected end of file"))
            }
        }
    }

    /// Read a `key rest...` line, checking the key.
    fn keyed(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.to_string()),
            _ if line == key => Ok(String::new()),
            _ => Err(self.fail(format!("expected '{key} ...', found '{line}'"))),
        }
    }

    fn expect(&mut self, literal: &str) -> Result<()> {
        let line = self.next_line()?;
        if line.trim_end() == literal {
            Ok(())
        } else {
            Err(self.fail(format!("expected '{literal}', found '{line}'")))
        }
    }

    fn usize_field(&mut self, key: &str) -> Result<usize> {
        let v = self.keyed(key)?;
        v.trim()
            .parse()
            .map_err(|_| self.fail(format!("'{v}' is not a nonnegative integer")))
    }

    fn f64_field(&mut self, key: &str) -> Result<f64> {
        let v = self.keyed(key)?;
        parse_f64(v.trim()).map_err(|m| self.fail(m))
    }

    fn bool_field(&mut self, key: &str) -> Result<bool> {
        let v = self.keyed(key)?;
        match v.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.fail(format!("'{other}' is not a boolean"))),
        }
    }

    fn float_row(&mut self, key: &str, expected: usize) -> Result<Vec<f64>> {
        let rest = self.keyed(key)?;
        let values: std::result::Result<Vec<f64>, String> =
            rest.split_whitespace().map(parse_f64).collect();
        let values = values.map_err(|m| self.fail(m))?;
        if values.len() != expected {
            return Err(self.fail(format!("{} values, expected {expected}", values.len())));
        }
        Ok(values)
    }
}

pub fn read_bundle(r: impl BufRead, path: &Path) -> Result<ModelBundle> {
    let mut rd = Reader {
        lines: r.lines().enumerate(),
        path: path.to_path_buf(),
        line_no: 0,
    };
    let header = rd.next_line()?;
    match header.trim_end().split_once(' ') {
        Some((BUNDLE_MAGIC, BUNDLE_VERSION)) => {}
        Some((BUNDLE_MAGIC, other)) => {
            return Err(Error::UnsupportedBundleVersion(other.to_string()))
        }
        _ => return Err(rd.fail(format!("expected '{BUNDLE_MAGIC} {BUNDLE_VERSION}'"))),
    }

    rd.expect("[config]")?;
    let seed = rd.usize_field("seed")? as u64;
    let kind: DescriptorKind = rd
        .keyed("descriptor")?
        .trim()
        .parse()
        .map_err(|e| rd.fail(format!("{e}")))?;
    let mut config = PipelineConfig::new(seed, kind);
    config.descriptor.dct_keep = rd.usize_field("dct_keep")?;
    config.descriptor.amdf_n = rd.usize_field("amdf_n")?;
    config.descriptor.constant_centroid = rd.bool_field("constant_centroid")?;
    config.reduction.variance_fraction = rd.f64_field("variance_fraction")?;
    config.quantization.damping = rd.f64_field("ap_damping")?;
    config.quantization.max_iterations = rd.usize_field("ap_max_iterations")?;
    config.quantization.convergence_window = rd.usize_field("ap_convergence_window")?;
    let pref = rd.keyed("ap_preference")?;
    config.quantization.preference = match pref.trim() {
        "median" => Preference::MEDIAN,
        v => Preference::Value(parse_f64(v).map_err(|m| rd.fail(m))?),
    };
    config.quantization.sample_cap = rd.usize_field("ap_sample_cap")?;
    config.hmm.states = rd.usize_field("hmm_states")?;
    config.hmm.restarts = rd.usize_field("hmm_restarts")?;
    config.hmm.smoothing = rd.f64_field("hmm_smoothing")?;
    config.hmm.max_iterations = rd.usize_field("hmm_max_iterations")?;
    config.hmm.tolerance = rd.f64_field("hmm_tolerance")?;
    config.hmm.left_to_right = rd.bool_field("hmm_left_to_right")?;
    config.detection.window_width = rd.usize_field("detection_window_width")?;
    config.detection.exit_prob = rd.f64_field("detection_exit_prob")?;
    config.validate()?;

    rd.expect("[topology]")?;
    let topo_name = rd.keyed("name")?.trim().to_string();
    let joint_count = rd.usize_field("joints")?;
    let mut joints = Vec::with_capacity(joint_count);
    for _ in 0..joint_count {
        joints.push(rd.keyed("joint")?.trim().to_string());
    }
    let root = rd.keyed("root")?.trim().to_string();
    let bone_count = rd.usize_field("bones")?;
    let mut bones = Vec::with_capacity(bone_count);
    for _ in 0..bone_count {
        let pair = rd.keyed("bone")?;
        let (p, c) = pair
            .trim()
            .split_once(' ')
            .ok_or_else(|| rd.fail("bone line needs two joint names"))?;
        bones.push((p.to_string(), c.to_string()));
    }
    let topology = Arc::new(SkeletonTopology::new(topo_name, joints, Some(&root), &bones)?);

    rd.expect("[angles]")?;
    let angle_count = rd.usize_field("count")?;
    let mut triples = Vec::with_capacity(angle_count);
    for _ in 0..angle_count {
        let t = rd.keyed("triple")?;
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(rd.fail("angle triple needs three names"));
        }
        let point = |n: &str| {
            if n == crate::descriptors::CAMERA_NAME {
                AnglePoint::Camera
            } else {
                AnglePoint::Joint(n.to_string())
            }
        };
        triples.push(AngleTriple {
            a: point(parts[0]),
            vertex: point(parts[1]),
            b: point(parts[2]),
        });
    }
    let angles = AngleTable::new(triples)?;

    rd.expect("[bone_profile]")?;
    let lengths = rd.float_row("lengths", bone_count)?;
    let profile = BoneLengthProfile::new(lengths)?;

    rd.expect("[normalizer]")?;
    let dim = rd.usize_field("dim")?;
    let means = rd.float_row("means", dim)?;
    let stds = rd.float_row("stds", dim)?;
    let degenerate_line = rd.keyed("degenerate")?;
    let mut degenerate = vec![false; dim];
    for token in degenerate_line.split_whitespace() {
        let i: usize = token
            .parse()
            .map_err(|_| rd.fail(format!("'{token}' is not an index")))?;
        if i >= dim {
            return Err(rd.fail(format!("degenerate index {i} out of range")));
        }
        degenerate[i] = true;
    }
    let normalizer = Normalizer::from_parts(means, stds, degenerate)?;

    rd.expect("[pca]")?;
    let pca_dim = rd.usize_field("dim")?;
    let retained = rd.usize_field("retained")?;
    let eigenvalues = rd.float_row("eigenvalues", retained)?;
    let mean = rd.float_row("mean", pca_dim)?;
    let mut comp_flat = Vec::with_capacity(retained * pca_dim);
    for _ in 0..retained {
        comp_flat.extend(rd.float_row("component", pca_dim)?);
    }
    let components = Array2::from_shape_vec((retained, pca_dim), comp_flat).expect("shape");
    let pca = PcaModel::from_parts(mean, components, eigenvalues, retained)?;

    rd.expect("[codebook]")?;
    let cb_count = rd.usize_field("count")?;
    let cb_dim = rd.usize_field("dim")?;
    let mut cb_flat = Vec::with_capacity(cb_count * cb_dim);
    for _ in 0..cb_count {
        cb_flat.extend(rd.float_row("exemplar", cb_dim)?);
    }
    let codebook = Codebook::new(Array2::from_shape_vec((cb_count, cb_dim), cb_flat).expect("shape"))?;

    rd.expect("[hmm]")?;
    let model_count = rd.usize_field("count")?;
    let mut models = Vec::with_capacity(model_count);
    for _ in 0..model_count {
        let head = rd.keyed("model")?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 5 || parts[1] != "states" || parts[3] != "symbols" {
            return Err(rd.fail("expected 'model <label> states <S> symbols <M>'"));
        }
        let label: u32 = parts[0]
            .parse()
            .map_err(|_| rd.fail(format!("'{}' is not a label", parts[0])))?;
        let states: usize = parts[2]
            .parse()
            .map_err(|_| rd.fail(format!("'{}' is not a state count", parts[2])))?;
        let symbols: usize = parts[4]
            .parse()
            .map_err(|_| rd.fail(format!("'{}' is not a symbol count", parts[4])))?;
        let initial = rd.float_row("initial", states)?;
        let mut trans_flat = Vec::with_capacity(states * states);
        for _ in 0..states {
            trans_flat.extend(rd.float_row("transition", states)?);
        }
        let mut emis_flat = Vec::with_capacity(states * symbols);
        for _ in 0..states {
            emis_flat.extend(rd.float_row("emission", symbols)?);
        }
        models.push(DiscreteHmm::new(
            Array1::from_vec(initial),
            Array2::from_shape_vec((states, states), trans_flat).expect("shape"),
            Array2::from_shape_vec((states, symbols), emis_flat).expect("shape"),
            label,
        )?);
    }
    rd.expect("end")?;

    let bundle = ModelBundle {
        config,
        topology,
        angles,
        profile,
        normalizer,
        pca,
        codebook,
        models,
    };
    bundle.validate()?;
    Ok(bundle)
}
