//! Vertex angles between joint rays, and the 35-triple table of the most
//! active bone angles used by the angular descriptor.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::skeleton::SkeletonTopology;

/// Reserved name for the camera origin in angle table files.
pub const CAMERA_NAME: &str = "CAMERA";

/// One endpoint of an angle: a named joint, or the fixed camera origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnglePoint {
    Joint(String),
    Camera,
}

impl AnglePoint {
    fn parse(name: &str) -> AnglePoint {
        if name == CAMERA_NAME {
            AnglePoint::Camera
        } else {
            AnglePoint::Joint(name.to_string())
        }
    }

    pub fn name(&self) -> &str {
        match self {
            AnglePoint::Joint(n) => n,
            AnglePoint::Camera => CAMERA_NAME,
        }
    }
}

/// The angle at `vertex` between the rays vertex->a and vertex->b.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleTriple {
    pub a: AnglePoint,
    pub vertex: AnglePoint,
    pub b: AnglePoint,
}

/// An ordered list of angle triples referencing joints by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleTable {
    triples: Vec<AngleTriple>,
}

#[derive(Deserialize)]
struct AngleFile {
    triples: Vec<(String, String, String)>,
}

impl AngleTable {
    pub fn new(triples: Vec<AngleTriple>) -> Result<Self> {
        for (i, t) in triples.iter().enumerate() {
            if t.a == t.vertex || t.b == t.vertex {
                return Err(Error::InvalidAngleTable(format!(
                    "triple {i} ({}, {}, {}) has an endpoint equal to its vertex",
                    t.a.name(),
                    t.vertex.name(),
                    t.b.name()
                )));
            }
        }
        Ok(Self { triples })
    }

    /// Parse an angle table config file (TOML: `triples`, a list of
    /// `[a, vertex, b]` joint-name triples; `CAMERA` denotes the origin).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidAngleTable(m) => Error::Config {
                path: path.to_path_buf(),
                message: m,
            },
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: AngleFile = toml::from_str(text)
            .map_err(|e| Error::InvalidAngleTable(format!("parse error: {e}")))?;
        let triples = file
            .triples
            .iter()
            .map(|(a, v, b)| AngleTriple {
                a: AnglePoint::parse(a),
                vertex: AnglePoint::parse(v),
                b: AnglePoint::parse(b),
            })
            .collect();
        Self::new(triples)
    }

    pub fn triples(&self) -> &[AngleTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples that do not reference the camera origin; angles over these
    /// are invariant under global translation of the skeleton.
    pub fn without_camera(&self) -> AngleTable {
        AngleTable {
            triples: self
                .triples
                .iter()
                .filter(|t| {
                    t.a != AnglePoint::Camera
                        && t.vertex != AnglePoint::Camera
                        && t.b != AnglePoint::Camera
                })
                .cloned()
                .collect(),
        }
    }

    /// Resolve joint names against a topology.
    pub(crate) fn resolve(&self, topology: &SkeletonTopology) -> Result<ResolvedAngles> {
        let resolve_point = |p: &AnglePoint| -> Result<ResolvedPoint> {
            match p {
                AnglePoint::Camera => Ok(ResolvedPoint::Camera),
                AnglePoint::Joint(n) => topology.joint_index(n).map(ResolvedPoint::Joint).ok_or_else(
                    || {
                        Error::InvalidAngleTable(format!(
                            "joint '{n}' not present in topology '{}'",
                            topology.name()
                        ))
                    },
                ),
            }
        };
        let mut triples = Vec::with_capacity(self.triples.len());
        for t in &self.triples {
            triples.push(ResolvedTriple {
                a: resolve_point(&t.a)?,
                vertex: resolve_point(&t.vertex)?,
                b: resolve_point(&t.b)?,
                names: (
                    t.a.name().to_string(),
                    t.vertex.name().to_string(),
                    t.b.name().to_string(),
                ),
            });
        }
        Ok(ResolvedAngles { triples })
    }

    /// The default 35-angle table over the 20-joint Kinect skeleton:
    /// three angles along each arm and each leg, three symmetric trunk
    /// angles, four big symmetric angles, four hand-foot crossings and
    /// twelve camera-facing angles.
    pub fn default_table() -> AngleTable {
        const T: &[(&str, &str, &str)] = &[
            // right arm
            ("ShoulderCenter", "ShoulderRight", "ElbowRight"),
            ("ShoulderRight", "ElbowRight", "WristRight"),
            ("ElbowRight", "WristRight", "HandRight"),
            // left arm
            ("ShoulderCenter", "ShoulderLeft", "ElbowLeft"),
            ("ShoulderLeft", "ElbowLeft", "WristLeft"),
            ("ElbowLeft", "WristLeft", "HandLeft"),
            // right leg
            ("HipCenter", "HipRight", "KneeRight"),
            ("HipRight", "KneeRight", "AnkleRight"),
            ("KneeRight", "AnkleRight", "FootRight"),
            // left leg
            ("HipCenter", "HipLeft", "KneeLeft"),
            ("HipLeft", "KneeLeft", "AnkleLeft"),
            ("KneeLeft", "AnkleLeft", "FootLeft"),
            // symmetric
            ("ShoulderLeft", "ShoulderCenter", "ShoulderRight"),
            ("Head", "ShoulderCenter", "Spine"),
            ("ShoulderCenter", "Spine", "HipCenter"),
            // big symmetric
            ("ElbowLeft", "ShoulderCenter", "ElbowRight"),
            ("WristLeft", "ShoulderCenter", "WristRight"),
            ("KneeLeft", "HipCenter", "KneeRight"),
            ("AnkleLeft", "HipCenter", "AnkleRight"),
            // big hand-foot
            ("WristLeft", "HipCenter", "AnkleLeft"),
            ("WristRight", "HipCenter", "AnkleRight"),
            ("WristLeft", "HipCenter", "AnkleRight"),
            ("WristRight", "HipCenter", "AnkleLeft"),
            // camera-facing
            ("WristLeft", "CAMERA", "ShoulderCenter"),
            ("ElbowLeft", "CAMERA", "ShoulderCenter"),
            ("ShoulderLeft", "CAMERA", "ShoulderCenter"),
            ("AnkleLeft", "CAMERA", "HipCenter"),
            ("KneeLeft", "CAMERA", "HipCenter"),
            ("HipLeft", "CAMERA", "HipCenter"),
            ("WristRight", "CAMERA", "ShoulderCenter"),
            ("ElbowRight", "CAMERA", "ShoulderCenter"),
            ("ShoulderRight", "CAMERA", "ShoulderCenter"),
            ("AnkleRight", "CAMERA", "HipCenter"),
            ("KneeRight", "CAMERA", "HipCenter"),
            ("HipRight", "CAMERA", "HipCenter"),
        ];
        let triples = T
            .iter()
            .map(|&(a, v, b)| AngleTriple {
                a: AnglePoint::parse(a),
                vertex: AnglePoint::parse(v),
                b: AnglePoint::parse(b),
            })
            .collect();
        AngleTable::new(triples).expect("default table is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ResolvedPoint {
    Joint(usize),
    Camera,
}

#[derive(Debug, Clone)]
pub(crate) struct ResolvedTriple {
    pub a: ResolvedPoint,
    pub vertex: ResolvedPoint,
    pub b: ResolvedPoint,
    pub names: (String, String, String),
}

#[derive(Debug, Clone)]
pub(crate) struct ResolvedAngles {
    pub triples: Vec<ResolvedTriple>,
}

impl ResolvedAngles {
    pub fn angles_of_frame(&self, positions: &[[f64; 3]]) -> Result<Vec<f64>> {
        let point = |p: ResolvedPoint| -> [f64; 3] {
            match p {
                ResolvedPoint::Joint(j) => positions[j],
                ResolvedPoint::Camera => [0.0, 0.0, 0.0],
            }
        };
        let mut out = Vec::with_capacity(self.triples.len());
        for t in &self.triples {
            let angle = vertex_angle(point(t.a), point(t.vertex), point(t.b)).map_err(|e| {
                match e {
                    Error::DegenerateRay { .. } => Error::DegenerateRay {
                        a: t.names.0.clone(),
                        vertex: t.names.1.clone(),
                        b: t.names.2.clone(),
                    },
                    other => other,
                }
            })?;
            out.push(angle);
        }
        Ok(out)
    }
}

/// The angle at `v` between rays v->a and v->b, in [0, pi].
///
/// Computed as the arccosine of the normalized dot product, clamped to
/// [-1, 1] against rounding. Rays shorter than 1e-12 are an error.
pub fn vertex_angle(a: [f64; 3], v: [f64; 3], b: [f64; 3]) -> Result<f64> {
    let ra = [a[0] - v[0], a[1] - v[1], a[2] - v[2]];
    let rb = [b[0] - v[0], b[1] - v[1], b[2] - v[2]];
    let na = (ra[0] * ra[0] + ra[1] * ra[1] + ra[2] * ra[2]).sqrt();
    let nb = (rb[0] * rb[0] + rb[1] * rb[1] + rb[2] * rb[2]).sqrt();
    if na < 1e-12 || nb < 1e-12 {
        return Err(Error::DegenerateRay {
            a: format!("{a:?}"),
            vertex: format!("{v:?}"),
            b: format!("{b:?}"),
        });
    }
    let dot = (ra[0] * rb[0] + ra[1] * rb[1] + ra[2] * rb[2]) / (na * nb);
    Ok(dot.clamp(-1.0, 1.0).acos())
}
