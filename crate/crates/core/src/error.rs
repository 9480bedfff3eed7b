use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- skeleton ----
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("topology mismatch: expected '{expected}', found '{found}'")]
    TopologyMismatch { expected: String, found: String },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("bone '{bone}' has zero length in frame {frame}: direction is undefined")]
    DegenerateBone { bone: String, frame: u64 },
    #[error("bone '{bone}' is degenerate in every training frame; no average length")]
    AllFramesDegenerate { bone: String },
    #[error("bone length profile does not cover bone '{bone}'")]
    ProfileMismatch { bone: String },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    // ---- dataset ----
    #[error("{path}:{line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {found} data rows do not form whole frames of {rows_per_frame} rows")]
    FrameCountMismatch {
        path: PathBuf,
        found: usize,
        rows_per_frame: usize,
    },
    #[error("{0}: file contains no frames")]
    EmptyFile(PathBuf),
    #[error("file name '{0}' does not match the a<AA>_s<SS>_e<EE> pattern")]
    BadFileName(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    // ---- config files ----
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    // ---- descriptors ----
    #[error("invalid descriptor window: {0}")]
    InvalidWindow(String),
    #[error("degenerate angle ray at triple ({a}, {vertex}, {b}): endpoint coincides with vertex")]
    DegenerateRay {
        a: String,
        vertex: String,
        b: String,
    },
    #[error("invalid angle table: {0}")]
    InvalidAngleTable(String),
    #[error("invalid descriptor parameters: {0}")]
    InvalidDescriptorParams(String),
    #[error("vector of length {len} is too short for lag averaging over {n} terms (need at least {})", n + 1)]
    VectorTooShort { len: usize, n: usize },

    // ---- reduction ----
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input matrix is empty")]
    EmptyMatrix,
    #[error("non-finite value in input matrix at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("principal component analysis needs at least 2 rows, found {0}")]
    TooFewRows(usize),
    #[error("variance fraction must lie in (0, 1], found {0}")]
    InvalidVarianceFraction(f64),

    // ---- quantization ----
    #[error("affinity propagation produced no exemplars; raise the preference value")]
    NoExemplars,
    #[error("invalid clustering configuration: {0}")]
    InvalidApConfig(String),

    // ---- hmm ----
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("symbol {symbol} is out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("observation sequence is empty")]
    EmptyObservation,
    #[error("no state path has nonzero probability for this observation (structural zero, not numeric underflow; decoding runs in log space)")]
    ImpossiblePath,
    #[error("a training sequence has zero probability under the initial model; enable emission smoothing")]
    ZeroProbabilityData,
    #[error("models disagree on alphabet size: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("no models supplied")]
    NoModels,

    // ---- detection ----
    #[error("predicted and truth label sequences differ in length: {predicted} vs {truth}")]
    LabelLengthMismatch { predicted: usize, truth: usize },
    #[error("exit probability must lie in [0, 1), found {0}")]
    InvalidExitProb(f64),
    #[error("window width must be at least 1")]
    InvalidWindowWidth,

    // ---- pipeline ----
    #[error("label {0} has no usable training sequences")]
    LabelWithoutSequences(u32),
    #[error("recognition training needs at least 2 distinct labels, found {0}")]
    TooFewLabels(usize),
    #[error("training sequence without a label (index {0})")]
    UnlabeledSequence(usize),
    #[error("pipeline stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    // ---- bundle / canonical files ----
    #[error("{path}:{line}: bundle format error: {message}")]
    BundleFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("unsupported bundle format version '{0}' (this build reads v1)")]
    UnsupportedBundleVersion(String),
    #[error("cannot serialize non-finite value in {0}")]
    NonFiniteSerialize(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
