//! Per-frame pose descriptors: a base vector per frame (coordinates,
//! angles, centroid or combinations) extended with four statistical
//! moments and three central-difference derivatives over a five-frame
//! window, with optional cosine-transform compression and lag averaging.

mod angles;
mod transform;
mod window;

pub use angles::{vertex_angle, AnglePoint, AngleTable, AngleTriple, CAMERA_NAME};
pub use transform::{amdf, dct_truncate};
pub use window::{window_calculus, window_stats, Window5, WindowCalculus, WindowStats, VARIANCE_FLOOR};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::ActionSequence;

/// The seven descriptor families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescriptorKind {
    /// Flattened joint coordinates.
    Cartesian,
    /// The table of most-active bone angles.
    Angular,
    /// Coordinates and angles concatenated.
    Mixed,
    /// The all-joint centroid trajectory.
    Centro,
    /// Centroid block and Cartesian block concatenated.
    RelaCentro,
    /// Cosine transform of the rela-centro vector, truncated.
    RelaCentroDct,
    /// Lag-averaged magnitude differences of the truncated transform.
    RelaCentroDctAmdf,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 7] = [
        DescriptorKind::Cartesian,
        DescriptorKind::Angular,
        DescriptorKind::Mixed,
        DescriptorKind::Centro,
        DescriptorKind::RelaCentro,
        DescriptorKind::RelaCentroDct,
        DescriptorKind::RelaCentroDctAmdf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DescriptorKind::Cartesian => "cartesian",
            DescriptorKind::Angular => "angular",
            DescriptorKind::Mixed => "mixed",
            DescriptorKind::Centro => "centro",
            DescriptorKind::RelaCentro => "rela-centro",
            DescriptorKind::RelaCentroDct => "rela-centro-dct",
            DescriptorKind::RelaCentroDctAmdf => "rela-centro-dct-amdf",
        }
    }
}

impl std::fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorKind::ALL
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| {
                Error::InvalidDescriptorParams(format!("unknown descriptor kind '{s}'"))
            })
    }
}

/// Numeric parameters shared by the descriptor kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptorParams {
    /// Coefficients kept after the cosine transform.
    pub dct_keep: usize,
    /// Averaging depth of the magnitude difference function.
    pub amdf_n: usize,
    /// Use the literal sequence-constant centroid instead of the per-frame
    /// centroid trajectory. A constant base has identically zero
    /// derivative blocks, which defeats the point of tracking the actor,
    /// so this is off by default.
    pub constant_centroid: bool,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        Self {
            dct_keep: 100,
            amdf_n: 45,
            constant_centroid: false,
        }
    }
}

impl DescriptorParams {
    pub fn validate(&self) -> Result<()> {
        if self.dct_keep < 1 {
            return Err(Error::InvalidDescriptorParams("dct_keep must be >= 1".into()));
        }
        if self.amdf_n < 1 {
            return Err(Error::InvalidDescriptorParams("amdf_n must be >= 1".into()));
        }
        if self.amdf_n >= self.dct_keep {
            return Err(Error::InvalidDescriptorParams(format!(
                "amdf_n ({}) must be smaller than dct_keep ({})",
                self.amdf_n, self.dct_keep
            )));
        }
        Ok(())
    }
}

/// Per-frame feature vectors produced by one descriptor kind; one row per
/// source frame, constant dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSequence {
    pub vectors: Array2<f64>,
    pub kind: DescriptorKind,
}

impl DescriptorSequence {
    pub fn frame_count(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Arithmetic mean of all joint positions, one point per frame.
pub fn per_frame_centroid(seq: &ActionSequence) -> Vec<[f64; 3]> {
    let nj = seq.topology.joint_count() as f64;
    seq.frames
        .iter()
        .map(|f| {
            let mut c = [0.0; 3];
            for p in &f.positions {
                c[0] += p[0];
                c[1] += p[1];
                c[2] += p[2];
            }
            [c[0] / nj, c[1] / nj, c[2] / nj]
        })
        .collect()
}

/// Mean over all frames and joints of the sequence (a single fixed point).
pub fn sequence_centroid(seq: &ActionSequence) -> [f64; 3] {
    let per_frame = per_frame_centroid(seq);
    let n = per_frame.len() as f64;
    let mut c = [0.0; 3];
    for p in &per_frame {
        c[0] += p[0];
        c[1] += p[1];
        c[2] += p[2];
    }
    [c[0] / n, c[1] / n, c[2] / n]
}

/// `[base, mean, variance, skewness, kurtosis, velocity, acceleration,
/// jerk]` per frame, windows clamped to the sequence edges (frames before
/// the start replicate frame 0, symmetric at the end). Output dimension is
/// 8x the base dimension.
fn stats_calculus(bases: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let t_max = bases.len() as isize - 1;
    let mut rows = Vec::with_capacity(bases.len());
    for t in 0..bases.len() as isize {
        let at = |d: isize| -> &[f64] { bases[(t + d).clamp(0, t_max) as usize].as_slice() };
        let w = Window5::new([at(-2), at(-1), at(0), at(1), at(2)])?;
        let stats = window_stats(&w);
        let calc = window_calculus(&w);
        let dim = w.dim();
        let mut row = Vec::with_capacity(8 * dim);
        row.extend_from_slice(&bases[t as usize]);
        row.extend(stats.mean);
        row.extend(stats.variance);
        row.extend(stats.skewness);
        row.extend(stats.kurtosis);
        row.extend(calc.velocity);
        row.extend(calc.acceleration);
        row.extend(calc.jerk);
        rows.push(row);
    }
    Ok(rows)
}

fn cartesian_bases(seq: &ActionSequence) -> Vec<Vec<f64>> {
    seq.frames
        .iter()
        .map(|f| f.positions.iter().flatten().copied().collect())
        .collect()
}

fn angular_bases(seq: &ActionSequence, angles: &AngleTable) -> Result<Vec<Vec<f64>>> {
    let resolved = angles.resolve(&seq.topology)?;
    seq.frames
        .iter()
        .map(|f| resolved.angles_of_frame(&f.positions))
        .collect()
}

fn centro_bases(seq: &ActionSequence, constant: bool) -> Vec<Vec<f64>> {
    if constant {
        let c = sequence_centroid(seq);
        vec![c.to_vec(); seq.len()]
    } else {
        per_frame_centroid(seq).iter().map(|c| c.to_vec()).collect()
    }
}

/// Extract the per-frame descriptor vectors of `seq` under `kind`.
///
/// The output always has exactly one row per input frame.
pub fn extract(
    seq: &ActionSequence,
    kind: DescriptorKind,
    params: &DescriptorParams,
    angles: &AngleTable,
) -> Result<DescriptorSequence> {
    params.validate()?;
    if seq.is_empty() {
        return Err(Error::InvalidSequence(
            "descriptor extraction needs at least one frame".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = match kind {
        DescriptorKind::Cartesian => stats_calculus(&cartesian_bases(seq))?,
        DescriptorKind::Angular => stats_calculus(&angular_bases(seq, angles)?)?,
        DescriptorKind::Mixed => {
            let cart = cartesian_bases(seq);
            let ang = angular_bases(seq, angles)?;
            let mixed: Vec<Vec<f64>> = cart
                .into_iter()
                .zip(ang)
                .map(|(mut c, a)| {
                    c.extend(a);
                    c
                })
                .collect();
            stats_calculus(&mixed)?
        }
        DescriptorKind::Centro => stats_calculus(&centro_bases(seq, params.constant_centroid))?,
        DescriptorKind::RelaCentro
        | DescriptorKind::RelaCentroDct
        | DescriptorKind::RelaCentroDctAmdf => {
            let centro_sc = stats_calculus(&centro_bases(seq, params.constant_centroid))?;
            let cart_sc = stats_calculus(&cartesian_bases(seq))?;
            let rela: Vec<Vec<f64>> = centro_sc
                .into_iter()
                .zip(cart_sc)
                .map(|(mut c, p)| {
                    c.extend(p);
                    c
                })
                .collect();
            match kind {
                DescriptorKind::RelaCentro => rela,
                DescriptorKind::RelaCentroDct => rela
                    .iter()
                    .map(|v| dct_truncate(v, params.dct_keep))
                    .collect(),
                DescriptorKind::RelaCentroDctAmdf => rela
                    .iter()
                    .map(|v| amdf(&dct_truncate(v, params.dct_keep), params.amdf_n))
                    .collect::<Result<_>>()?,
                _ => unreachable!(),
            }
        }
    };
    let dim = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let vectors = Array2::from_shape_vec((seq.len(), dim), flat)
        .expect("row dimensions are uniform by construction");
    Ok(DescriptorSequence { vectors, kind })
}
