//! Skeleton data model and actor-invariant bone-length normalization.
//!
//! A skeleton is a tree of named joints. Normalization rescales every bone
//! to a population-average length while preserving bone directions, walking
//! parent-before-child from the root so each repositioned joint carries its
//! whole subtree with it.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Euclidean length below which a bone direction is considered undefined.
pub const ZERO_BONE_EPS: f64 = 1e-12;

/// A directed bone joining a parent joint to a child joint (joint indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bone {
    pub parent: usize,
    pub child: usize,
}

/// Joint names, root and bone list of one skeleton layout.
///
/// Bones always form a tree rooted at `root`; construction rejects anything
/// else. The bone order exposed by [`SkeletonTopology::bones`] is
/// breadth-first from the root, so iterating it visits every parent before
/// its children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonTopology {
    name: String,
    joint_names: Vec<String>,
    root: usize,
    bones: Vec<Bone>,
}

#[derive(Deserialize)]
struct TopologyFile {
    name: String,
    root: Option<String>,
    joints: Vec<String>,
    bones: Vec<(String, String)>,
}

impl SkeletonTopology {
    pub fn new(
        name: impl Into<String>,
        joint_names: Vec<String>,
        root: Option<&str>,
        bone_pairs: &[(String, String)],
    ) -> Result<Self> {
        let name = name.into();
        if joint_names.is_empty() {
            return Err(Error::InvalidTopology("no joints".into()));
        }
        // joint names appear space-separated in the bundle and angle table
        // text formats
        if let Some(bad) = joint_names
            .iter()
            .find(|n| n.is_empty() || n.chars().any(char::is_whitespace))
        {
            return Err(Error::InvalidTopology(format!(
                "joint name '{bad}' is empty or contains whitespace; use CamelCase or underscores"
            )));
        }
        {
            let mut sorted = joint_names.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != joint_names.len() {
                return Err(Error::InvalidTopology("duplicate joint name".into()));
            }
        }
        let index_of = |n: &str| -> Result<usize> {
            joint_names
                .iter()
                .position(|j| j == n)
                .ok_or_else(|| Error::InvalidTopology(format!("unknown joint '{n}' in bone list")))
        };
        let root = match root {
            Some(r) => index_of(r)?,
            None => default_root(&joint_names),
        };
        let mut bones = Vec::with_capacity(bone_pairs.len());
        for (p, c) in bone_pairs {
            bones.push(Bone {
                parent: index_of(p)?,
                child: index_of(c)?,
            });
        }
        if bones.len() != joint_names.len() - 1 {
            return Err(Error::InvalidTopology(format!(
                "{} bones cannot form a tree over {} joints",
                bones.len(),
                joint_names.len()
            )));
        }
        let mut parent_count = vec![0usize; joint_names.len()];
        for b in &bones {
            parent_count[b.child] += 1;
        }
        if parent_count[root] != 0 {
            return Err(Error::InvalidTopology(format!(
                "root joint '{}' appears as a bone child",
                joint_names[root]
            )));
        }
        for (j, &n) in parent_count.iter().enumerate() {
            if j != root && n != 1 {
                return Err(Error::InvalidTopology(format!(
                    "joint '{}' has {} parents, expected 1",
                    joint_names[j], n
                )));
            }
        }
        // Breadth-first order from the root; also proves reachability
        // (no cycles detached from the root).
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); joint_names.len()];
        for (i, b) in bones.iter().enumerate() {
            children[b.parent].push(i);
        }
        let mut ordered = Vec::with_capacity(bones.len());
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(j) = queue.pop_front() {
            for &bi in &children[j] {
                ordered.push(bones[bi]);
                queue.push_back(bones[bi].child);
            }
        }
        if ordered.len() != bones.len() {
            return Err(Error::InvalidTopology(
                "bone list contains a cycle not reachable from the root".into(),
            ));
        }
        Ok(Self {
            name,
            joint_names,
            root,
            bones: ordered,
        })
    }

    /// Parse a topology config file (TOML: `name`, optional `root`,
    /// `joints` list, `bones` pair list).
    pub fn load(path: impl AsRef<Path>) -> Result<Arc<Self>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidTopology(m) => Error::Config {
                path: path.to_path_buf(),
                message: m,
            },
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Arc<Self>> {
        let file: TopologyFile = toml::from_str(text)
            .map_err(|e| Error::InvalidTopology(format!("parse error: {e}")))?;
        Ok(Arc::new(Self::new(
            file.name,
            file.joints,
            file.root.as_deref(),
            &file.bones,
        )?))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|j| j == name)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Bones in breadth-first (parent-before-child) order.
    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    pub fn bone_count(&self) -> usize {
        self.bones.len()
    }

    pub fn bone_name(&self, bone: Bone) -> String {
        format!(
            "{}->{}",
            self.joint_names[bone.parent], self.joint_names[bone.child]
        )
    }
}

/// Hip-center style joint when the topology has one, else the first joint.
fn default_root(joint_names: &[String]) -> usize {
    joint_names
        .iter()
        .position(|n| {
            let k: String = n.chars().filter(|c| c.is_alphanumeric()).collect();
            k.eq_ignore_ascii_case("hipcenter")
        })
        .unwrap_or(0)
}

/// One captured pose: a 3D position per topology joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub positions: Vec<[f64; 3]>,
    pub timestamp_index: u64,
}

impl Frame {
    pub fn new(positions: Vec<[f64; 3]>, timestamp_index: u64) -> Self {
        Self {
            positions,
            timestamp_index,
        }
    }
}

/// An ordered sequence of frames over one topology, optionally labeled with
/// the action class, actor and repetition it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence {
    pub topology: Arc<SkeletonTopology>,
    pub frames: Vec<Frame>,
    pub label: Option<u32>,
    pub subject: Option<u32>,
    pub instance: Option<u32>,
}

impl ActionSequence {
    pub fn new(topology: Arc<SkeletonTopology>, frames: Vec<Frame>) -> Result<Self> {
        for (i, f) in frames.iter().enumerate() {
            if f.positions.len() != topology.joint_count() {
                return Err(Error::InvalidSequence(format!(
                    "frame {i} has {} joints, topology '{}' has {}",
                    f.positions.len(),
                    topology.name(),
                    topology.joint_count()
                )));
            }
            if f.positions.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::InvalidSequence(format!(
                    "frame {i} contains a non-finite coordinate"
                )));
            }
            if i > 0 && frames[i - 1].timestamp_index >= f.timestamp_index {
                return Err(Error::InvalidSequence(format!(
                    "timestamp indices not strictly increasing at frame {i}"
                )));
            }
        }
        Ok(Self {
            topology,
            frames,
            label: None,
            subject: None,
            instance: None,
        })
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_subject(mut self, subject: u32) -> Self {
        self.subject = Some(subject);
        self
    }

    pub fn with_instance(mut self, instance: u32) -> Self {
        self.instance = Some(instance);
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Per-bone target lengths, parallel to `SkeletonTopology::bones`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoneLengthProfile {
    lengths: Vec<f64>,
}

impl BoneLengthProfile {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidTopology(
                "bone length profile must be strictly positive and finite".into(),
            ));
        }
        Ok(Self { lengths })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }
}

fn bone_vector(frame: &Frame, bone: Bone) -> [f64; 3] {
    let p = frame.positions[bone.parent];
    let c = frame.positions[bone.child];
    [c[0] - p[0], c[1] - p[1], c[2] - p[2]]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Mean Euclidean length of every bone over all frames of all training
/// sequences. Frames where a bone degenerates to zero length are skipped
/// for that bone (and logged); a bone degenerate everywhere is an error.
pub fn compute_average_bone_lengths(training: &[ActionSequence]) -> Result<BoneLengthProfile> {
    let first = training.first().ok_or(Error::EmptyTrainingSet)?;
    let topology = &first.topology;
    if training.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyTrainingSet);
    }
    for seq in training {
        if seq.topology != *topology {
            return Err(Error::TopologyMismatch {
                expected: topology.name().to_string(),
                found: seq.topology.name().to_string(),
            });
        }
    }
    let nb = topology.bone_count();
    let mut sums = vec![0.0f64; nb];
    let mut counts = vec![0usize; nb];
    let mut skipped = vec![0usize; nb];
    for seq in training {
        for frame in &seq.frames {
            for (bi, &bone) in topology.bones().iter().enumerate() {
                let len = norm3(bone_vector(frame, bone));
                if len < ZERO_BONE_EPS {
                    skipped[bi] += 1;
                } else {
                    sums[bi] += len;
                    counts[bi] += 1;
                }
            }
        }
    }
    let mut lengths = Vec::with_capacity(nb);
    for (bi, &bone) in topology.bones().iter().enumerate() {
        if counts[bi] == 0 {
            return Err(Error::AllFramesDegenerate {
                bone: topology.bone_name(bone),
            });
        }
        if skipped[bi] > 0 {
            log::warn!(
                "bone {}: skipped {} degenerate frame(s) while averaging",
                topology.bone_name(bone),
                skipped[bi]
            );
        }
        lengths.push(sums[bi] / counts[bi] as f64);
    }
    BoneLengthProfile::new(lengths)
}

/// Rescale every bone of every frame to its profile length.
///
/// Frames are rewritten breadth-first from the root: each child joint is
/// placed along the original parent-to-child unit vector at the profile
/// length, measured from the already-updated parent position. The root
/// position and all bone directions are unchanged.
pub fn normalize_bones(seq: &ActionSequence, profile: &BoneLengthProfile) -> Result<ActionSequence> {
    let topology = &seq.topology;
    if profile.len() != topology.bone_count() {
        return Err(Error::ProfileMismatch {
            bone: format!(
                "profile has {} lengths, topology '{}' has {} bones",
                profile.len(),
                topology.name(),
                topology.bone_count()
            ),
        });
    }
    let mut frames = Vec::with_capacity(seq.frames.len());
    for frame in &seq.frames {
        let mut positions = frame.positions.clone();
        for (bi, &bone) in topology.bones().iter().enumerate() {
            let dir = bone_vector(frame, bone);
            let len = norm3(dir);
            if len < ZERO_BONE_EPS {
                return Err(Error::DegenerateBone {
                    bone: topology.bone_name(bone),
                    frame: frame.timestamp_index,
                });
            }
            let scale = profile.lengths()[bi] / len;
            let base = positions[bone.parent];
            positions[bone.child] = [
                base[0] + dir[0] * scale,
                base[1] + dir[1] * scale,
                base[2] + dir[2] * scale,
            ];
        }
        frames.push(Frame::new(positions, frame.timestamp_index));
    }
    Ok(ActionSequence {
        topology: Arc::clone(topology),
        frames,
        label: seq.label,
        subject: seq.subject,
        instance: seq.instance,
    })
}
