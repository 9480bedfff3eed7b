//! Skeletal action recognition and detection from 3D joint coordinates.
//!
//! The pipeline: per-actor bone lengths are normalized away, each frame is
//! turned into a pose descriptor (raw coordinates, bone angles or centroid
//! trajectories, extended with windowed moments and central-difference
//! derivatives, optionally cosine-transformed and lag-averaged), features
//! are z-scored and projected onto principal axes, affinity propagation
//! picks exemplar vectors whose indices become discrete symbols, and one
//! discrete hidden Markov model per action class is trained on the symbol
//! streams. Segmented sequences are classified by maximum likelihood;
//! unsegmented streams are decoded frame-by-frame on a parallel
//! composition of the per-action models.
//!
//! Every operation is a pure function of its inputs and the configured
//! seed; repeated runs are bit-identical.

pub mod bundle;
pub mod dataset;
pub mod descriptors;
pub mod detection;
pub mod error;
pub mod hmm;
pub mod pipeline;
pub mod quantization;
pub mod reduction;
pub mod skeleton;
pub mod synthetic;
mod textnum;

pub use bundle::{load_bundle, save_bundle};
pub use dataset::{
    load_canonical, load_exclusions, load_joint_text, make_split, parse_msr_filename,
    save_canonical, DatasetManifest, LoaderLayout, ManifestEntry, SplitSpec,
};
pub use descriptors::{
    extract, AngleTable, DescriptorKind, DescriptorParams, DescriptorSequence,
};
pub use detection::{
    compose_parallel, concat_labeled_stream, detect_sliding, score_detection, CompositeHmm,
    DetectionResult, DetectionScore, FrameLabel, Segment,
};
pub use error::{Error, Result};
pub use hmm::{
    baum_welch, classify, forward_log_likelihood, viterbi, Classification, DiscreteHmm,
    HmmTrainConfig, SymbolSequence,
};
pub use pipeline::{
    detect, recognize, symbol_stream, train, ModelBundle, PipelineConfig, TrainOutcome,
};
pub use quantization::{
    affinity_propagation, similarity_matrix, ApConfig, Codebook, Preference,
};
pub use reduction::{fit_normalizer, fit_pca, Normalizer, PcaModel};
pub use skeleton::{
    compute_average_bone_lengths, normalize_bones, ActionSequence, BoneLengthProfile, Frame,
    SkeletonTopology,
};
