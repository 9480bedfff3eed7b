//! End-to-end orchestration: bone normalization, descriptor extraction,
//! feature normalization and projection, vector quantization, and one
//! trained HMM per action class, bundled into a single deployable model.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::{extract, AngleTable, DescriptorKind, DescriptorParams};
use crate::detection::{compose_parallel, detect_sliding, DetectionResult};
use crate::error::{Error, Result};
use crate::hmm::{classify, derive_seed, train_with_restarts, Classification, DiscreteHmm, HmmTrainConfig, SymbolSequence};
use crate::quantization::{affinity_propagation, similarity_matrix, ApConfig, Codebook, Preference};
use crate::reduction::{fit_normalizer, fit_pca, Normalizer, PcaModel};
use crate::skeleton::{compute_average_bone_lengths, normalize_bones, ActionSequence, BoneLengthProfile, SkeletonTopology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSection {
    pub kind: DescriptorKind,
    #[serde(default = "default_dct_keep")]
    pub dct_keep: usize,
    #[serde(default = "default_amdf_n")]
    pub amdf_n: usize,
    #[serde(default)]
    pub constant_centroid: bool,
}

fn default_dct_keep() -> usize {
    DescriptorParams::default().dct_keep
}

fn default_amdf_n() -> usize {
    DescriptorParams::default().amdf_n
}

impl DescriptorSection {
    pub fn params(&self) -> DescriptorParams {
        DescriptorParams {
            dct_keep: self.dct_keep,
            amdf_n: self.amdf_n,
            constant_centroid: self.constant_centroid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionSection {
    pub variance_fraction: f64,
}

impl Default for ReductionSection {
    fn default() -> Self {
        Self {
            variance_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantizationSection {
    pub damping: f64,
    pub max_iterations: usize,
    pub convergence_window: usize,
    pub preference: Preference,
    /// Training frames are uniformly subsampled (seeded) down to this many
    /// rows before clustering; message passing is quadratic in rows.
    pub sample_cap: usize,
}

impl Default for QuantizationSection {
    fn default() -> Self {
        let ap = ApConfig::default();
        Self {
            damping: ap.damping,
            max_iterations: ap.max_iterations,
            convergence_window: ap.convergence_window,
            preference: ap.preference,
            sample_cap: 20_000,
        }
    }
}

impl QuantizationSection {
    pub fn ap_config(&self) -> ApConfig {
        ApConfig {
            damping: self.damping,
            max_iterations: self.max_iterations,
            convergence_window: self.convergence_window,
            preference: self.preference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionParams {
    pub window_width: usize,
    pub exit_prob: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            window_width: 7,
            exit_prob: 0.05,
        }
    }
}

/// Everything that parameterizes a training run. The seed is mandatory:
/// runs are pure functions of (data, config, seed), with no entropy
/// source anywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub descriptor: DescriptorSection,
    #[serde(default)]
    pub reduction: ReductionSection,
    #[serde(default)]
    pub quantization: QuantizationSection,
    #[serde(default)]
    pub hmm: HmmTrainConfig,
    #[serde(default)]
    pub detection: DetectionParams,
}

impl PipelineConfig {
    pub fn new(seed: u64, kind: DescriptorKind) -> Self {
        Self {
            seed,
            descriptor: DescriptorSection {
                kind,
                dct_keep: default_dct_keep(),
                amdf_n: default_amdf_n(),
                constant_centroid: false,
            },
            reduction: ReductionSection::default(),
            quantization: QuantizationSection::default(),
            hmm: HmmTrainConfig::default(),
            detection: DetectionParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.descriptor.params().validate()?;
        if !(self.reduction.variance_fraction > 0.0 && self.reduction.variance_fraction <= 1.0) {
            return Err(Error::InvalidVarianceFraction(self.reduction.variance_fraction));
        }
        self.quantization.ap_config().validate()?;
        if self.quantization.sample_cap == 0 {
            return Err(Error::InvalidApConfig("sample cap must be at least 1".into()));
        }
        if self.hmm.states == 0 || self.hmm.restarts == 0 {
            return Err(Error::InvalidModel(
                "state count and restart count must be at least 1".into(),
            ));
        }
        if self.detection.window_width == 0 {
            return Err(Error::InvalidWindowWidth);
        }
        if !(0.0..1.0).contains(&self.detection.exit_prob) {
            return Err(Error::InvalidExitProb(self.detection.exit_prob));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidManifest(format!("pipeline config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidManifest(m) => Error::Config {
                path: path.to_path_buf(),
                message: m,
            },
            other => other,
        })
    }
}

/// All fitted stages of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: PipelineConfig,
    pub topology: Arc<SkeletonTopology>,
    pub angles: AngleTable,
    pub profile: BoneLengthProfile,
    pub normalizer: Normalizer,
    pub pca: PcaModel,
    pub codebook: Codebook,
    pub models: Vec<DiscreteHmm>,
}

impl ModelBundle {
    /// Check the dimension chain between consecutive stages.
    pub fn validate(&self) -> Result<()> {
        if self.profile.len() != self.topology.bone_count() {
            return Err(Error::InvalidModel("profile does not cover the topology".into()));
        }
        if self.normalizer.dim() != self.pca.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.normalizer.dim(),
                found: self.pca.input_dim(),
            });
        }
        if self.pca.retained() != self.codebook.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.pca.retained(),
                found: self.codebook.dim(),
            });
        }
        for m in &self.models {
            if m.symbols() != self.codebook.len() {
                return Err(Error::AlphabetMismatch(self.codebook.len(), m.symbols()));
            }
        }
        if self.models.is_empty() {
            return Err(Error::NoModels);
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<u32> {
        self.models.iter().map(|m| m.label()).collect()
    }
}

/// Training trace for the run log: likelihood histories and stage sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub rows_total: usize,
    pub rows_clustered: usize,
    pub pca_retained: usize,
    pub codebook_size: usize,
    pub ap_iterations: usize,
    pub ap_converged: bool,
    pub per_label: Vec<LabelTrainLog>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelTrainLog {
    pub label: u32,
    pub sequences: usize,
    /// Final log-likelihood of every restart, in restart order.
    pub restart_finals: Vec<f64>,
    pub winning_restart: usize,
    /// Iteration history of the winning restart.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub log: TrainingLog,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Uniform seeded subsample of `0..n` (ascending), at most `cap` indices.
fn subsample_indices(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, 0x5a3713, 0));
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..cap {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut picked = pool[..cap].to_vec();
    picked.sort_unstable();
    picked
}

/// Fit every stage on the training sequences, strictly in order: bone
/// normalization, descriptor extraction, per-dimension normalization,
/// projection, clustering, then one HMM per label over that label's
/// symbol streams. Nothing here ever sees test data.
pub fn train(train_seqs: &[ActionSequence], cfg: &PipelineConfig, angles: &AngleTable) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_seqs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut usable: Vec<&ActionSequence> = Vec::with_capacity(train_seqs.len());
    let mut requested_labels: std::collections::BTreeSet<u32> = Default::default();
    for (i, s) in train_seqs.iter().enumerate() {
        let label = s.label.ok_or(Error::UnlabeledSequence(i))?;
        requested_labels.insert(label);
        if s.is_empty() {
            log::warn!("dropping empty training sequence {i} (label {label})");
            continue;
        }
        usable.push(s);
    }
    let mut by_label: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, s) in usable.iter().enumerate() {
        by_label.entry(s.label.expect("checked")).or_default().push(i);
    }
    for &label in &requested_labels {
        if !by_label.contains_key(&label) {
            return Err(Error::LabelWithoutSequences(label));
        }
    }
    if by_label.len() < 2 {
        return Err(Error::TooFewLabels(by_label.len()));
    }

    let owned: Vec<ActionSequence> = usable.iter().map(|&s| s.clone()).collect();
    let profile = stage("bone-normalization", compute_average_bone_lengths(&owned))?;
    let normalized: Vec<ActionSequence> = stage(
        "bone-normalization",
        owned
            .par_iter()
            .map(|s| normalize_bones(s, &profile))
            .collect(),
    )?;

    let params = cfg.descriptor.params();
    let descriptors: Vec<Array2<f64>> = stage(
        "feature-extraction",
        normalized
            .par_iter()
            .map(|s| extract(s, cfg.descriptor.kind, &params, angles).map(|d| d.vectors))
            .collect(),
    )?;

    let dim = descriptors[0].ncols();
    let rows_total: usize = descriptors.iter().map(|d| d.nrows()).sum();
    let mut stacked = Vec::with_capacity(rows_total * dim);
    for d in &descriptors {
        stacked.extend(d.iter().copied());
    }
    let stacked = Array2::from_shape_vec((rows_total, dim), stacked).expect("shape");

    let normalizer = stage("feature-normalization", fit_normalizer(&stacked))?;
    let zscored = stage("feature-normalization", normalizer.apply_rows(&stacked))?;
    let pca = stage(
        "dimension-reduction",
        fit_pca(&zscored, cfg.reduction.variance_fraction),
    )?;
    let projected = stage("dimension-reduction", pca.project_rows(&zscored))?;

    let picked = subsample_indices(projected.nrows(), cfg.quantization.sample_cap, cfg.seed);
    let sampled = {
        let mut flat = Vec::with_capacity(picked.len() * projected.ncols());
        for &i in &picked {
            flat.extend(projected.row(i).iter().copied());
        }
        Array2::from_shape_vec((picked.len(), projected.ncols()), flat).expect("shape")
    };
    let similarity = stage(
        "vector-quantization",
        similarity_matrix(&sampled, &cfg.quantization.preference),
    )?;
    let ap = stage(
        "vector-quantization",
        affinity_propagation(&similarity, &cfg.quantization.ap_config()),
    )?;
    let codebook = stage(
        "vector-quantization",
        Codebook::from_exemplar_rows(&sampled, &ap.exemplars),
    )?;

    // per-sequence symbol streams over the shared codebook
    let mut streams: Vec<SymbolSequence> = Vec::with_capacity(normalized.len());
    let mut offset = 0usize;
    for d in &descriptors {
        let mut stream = Vec::with_capacity(d.nrows());
        for t in 0..d.nrows() {
            let row = projected.row(offset + t);
            stream.push(codebook.assign_symbol(row.as_slice().expect("contiguous"))?);
        }
        offset += d.nrows();
        streams.push(stream);
    }

    let mut models = Vec::with_capacity(by_label.len());
    let mut per_label = Vec::with_capacity(by_label.len());
    for (&label, idxs) in &by_label {
        let data: Vec<SymbolSequence> = idxs.iter().map(|&i| streams[i].clone()).collect();
        let outcome = stage(
            "hmm-training",
            train_with_restarts(label, &data, codebook.len(), &cfg.hmm, cfg.seed),
        )?;
        per_label.push(LabelTrainLog {
            label,
            sequences: data.len(),
            restart_finals: outcome.finals,
            winning_restart: outcome.winner,
            log_likelihoods: outcome.best.log_likelihoods.clone(),
            converged: outcome.best.converged,
        });
        models.push(outcome.best.model);
    }

    let bundle = ModelBundle {
        config: cfg.clone(),
        topology: Arc::clone(&normalized[0].topology),
        angles: angles.clone(),
        profile,
        normalizer,
        pca,
        codebook,
        models,
    };
    bundle.validate()?;
    let log = TrainingLog {
        rows_total,
        rows_clustered: picked.len(),
        pca_retained: bundle.pca.retained(),
        codebook_size: bundle.codebook.len(),
        ap_iterations: ap.iterations,
        ap_converged: ap.converged,
        per_label,
    };
    Ok(TrainOutcome { bundle, log })
}

/// Run the fitted front end on one sequence: bone normalization,
/// extraction, z-scoring, projection, nearest-exemplar assignment.
pub fn symbol_stream(bundle: &ModelBundle, seq: &ActionSequence) -> Result<SymbolSequence> {
    if seq.topology != bundle.topology {
        return Err(Error::TopologyMismatch {
            expected: bundle.topology.name().to_string(),
            found: seq.topology.name().to_string(),
        });
    }
    if seq.is_empty() {
        return Err(Error::InvalidSequence("empty sequence".into()));
    }
    let normalized = normalize_bones(seq, &bundle.profile)?;
    let d = extract(
        &normalized,
        bundle.config.descriptor.kind,
        &bundle.config.descriptor.params(),
        &bundle.angles,
    )?;
    let mut stream = Vec::with_capacity(d.frame_count());
    for row in d.vectors.rows() {
        let z = bundle.normalizer.apply(row.as_slice().expect("contiguous"))?;
        let p = bundle.pca.project(&z)?;
        stream.push(bundle.codebook.assign_symbol(&p)?);
    }
    Ok(stream)
}

/// Classify one segmented sequence against every trained action model.
pub fn recognize(bundle: &ModelBundle, seq: &ActionSequence) -> Result<(Classification, Vec<(u32, f64)>)> {
    let stream = symbol_stream(bundle, seq)?;
    classify(&bundle.models, &stream)
}

/// Label every frame of an unsegmented stream via the parallel model
/// composition and sliding-window smoothing from the bundle's detection
/// settings.
pub fn detect(bundle: &ModelBundle, stream: &ActionSequence) -> Result<DetectionResult> {
    let symbols = symbol_stream(bundle, stream)?;
    let composite = compose_parallel(bundle.models.clone(), bundle.config.detection.exit_prob)?;
    detect_sliding(&composite, &symbols, bundle.config.detection.window_width)
}
