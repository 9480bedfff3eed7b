//! Seeded synthetic skeletal motion over the 20-joint skeleton: three
//! visually distinct action generators (arm wave, squat, torso twist) with
//! per-subject body scale, per-instance phase and timing jitter, and
//! coordinate noise. Used by the test harnesses and handy for demos;
//! everything is a pure function of the seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::detection::FrameLabel;
use crate::error::Result;
use crate::hmm::derive_seed;
use crate::skeleton::{ActionSequence, Frame, SkeletonTopology};

const KINECT20_JOINTS: [&str; 20] = [
    "HipCenter",
    "Spine",
    "ShoulderCenter",
    "Head",
    "ShoulderLeft",
    "ElbowLeft",
    "WristLeft",
    "HandLeft",
    "ShoulderRight",
    "ElbowRight",
    "WristRight",
    "HandRight",
    "HipLeft",
    "KneeLeft",
    "AnkleLeft",
    "FootLeft",
    "HipRight",
    "KneeRight",
    "AnkleRight",
    "FootRight",
];

const KINECT20_BONES: [(&str, &str); 19] = [
    ("HipCenter", "Spine"),
    ("Spine", "ShoulderCenter"),
    ("ShoulderCenter", "Head"),
    ("ShoulderCenter", "ShoulderLeft"),
    ("ShoulderLeft", "ElbowLeft"),
    ("ElbowLeft", "WristLeft"),
    ("WristLeft", "HandLeft"),
    ("ShoulderCenter", "ShoulderRight"),
    ("ShoulderRight", "ElbowRight"),
    ("ElbowRight", "WristRight"),
    ("WristRight", "HandRight"),
    ("HipCenter", "HipLeft"),
    ("HipLeft", "KneeLeft"),
    ("KneeLeft", "AnkleLeft"),
    ("AnkleLeft", "FootLeft"),
    ("HipCenter", "HipRight"),
    ("HipRight", "KneeRight"),
    ("KneeRight", "AnkleRight"),
    ("AnkleRight", "FootRight"),
];

/// The default 20-joint skeleton matching the shipped topology config.
pub fn kinect20_topology() -> Arc<SkeletonTopology> {
    let joints = KINECT20_JOINTS.iter().map(|s| s.to_string()).collect();
    let bones: Vec<(String, String)> = KINECT20_BONES
        .iter()
        .map(|(p, c)| (p.to_string(), c.to_string()))
        .collect();
    Arc::new(
        SkeletonTopology::new("kinect20", joints, Some("HipCenter"), &bones)
            .expect("built-in topology is valid"),
    )
}

/// A neutral standing pose, one position per topology joint. The body
/// stands 2.4 units in front of the camera origin so rays from the camera
/// to any joint are well defined.
pub fn rest_pose(topology: &SkeletonTopology) -> Vec<[f64; 3]> {
    const OFFSET: [f64; 3] = [0.0, 0.8, 2.4];
    const POSE: [(&str, [f64; 3]); 20] = [
        ("HipCenter", [0.0, 0.0, 0.0]),
        ("Spine", [0.0, 0.25, 0.02]),
        ("ShoulderCenter", [0.0, 0.50, 0.0]),
        ("Head", [0.0, 0.70, 0.03]),
        ("ShoulderLeft", [-0.20, 0.45, 0.0]),
        ("ElbowLeft", [-0.42, 0.42, 0.04]),
        ("WristLeft", [-0.62, 0.40, 0.08]),
        ("HandLeft", [-0.72, 0.39, 0.10]),
        ("ShoulderRight", [0.20, 0.45, 0.0]),
        ("ElbowRight", [0.42, 0.42, 0.04]),
        ("WristRight", [0.62, 0.40, 0.08]),
        ("HandRight", [0.72, 0.39, 0.10]),
        ("HipLeft", [-0.10, -0.04, 0.0]),
        ("KneeLeft", [-0.12, -0.48, 0.03]),
        ("AnkleLeft", [-0.12, -0.90, 0.0]),
        ("FootLeft", [-0.12, -0.96, 0.12]),
        ("HipRight", [0.10, -0.04, 0.0]),
        ("KneeRight", [0.12, -0.48, 0.03]),
        ("AnkleRight", [0.12, -0.90, 0.0]),
        ("FootRight", [0.12, -0.96, 0.12]),
    ];
    let mut out = vec![[0.0; 3]; topology.joint_count()];
    for (name, p) in POSE {
        let j = topology
            .joint_index(name)
            .expect("pose covers the 20-joint topology");
        out[j] = [p[0] + OFFSET[0], p[1] + OFFSET[1], p[2] + OFFSET[2]];
    }
    out
}

/// Number of distinct synthetic action patterns.
pub const ACTION_COUNT: u32 = 3;

fn fraction(x: u64) -> f64 {
    (x >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic per-subject body scale in [0.85, 1.15].
pub fn subject_scale(subject: u32) -> f64 {
    0.85 + 0.3 * fraction(derive_seed(0x5ca1e, subject as u64, 0))
}

struct MotionSpec {
    frequency: f64,
    phase: f64,
    amplitude: f64,
}

/// Generate one action instance. The same `(action, subject, instance,
/// seed)` always yields the same sequence; `subject` also fixes the body
/// scale so bone normalization has real work to do.
pub fn generate_instance(action: u32, subject: u32, instance: u32, seed: u64) -> ActionSequence {
    let topology = kinect20_topology();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(
        seed,
        action as u64,
        ((subject as u64) << 32) | instance as u64,
    ));
    let scale = subject_scale(subject);
    let base: Vec<[f64; 3]> = rest_pose(&topology)
        .into_iter()
        .map(|p| [p[0] * scale, p[1] * scale, p[2] * scale])
        .collect();
    let frames_n = rng.random_range(40..56);
    let spec = MotionSpec {
        frequency: match action % ACTION_COUNT {
            0 => 0.10,
            1 => 0.05,
            _ => 0.08,
        } * (1.0 + 0.1 * (rng.random_range(0.0..1.0) - 0.5)),
        phase: rng.random_range(0.0..std::f64::consts::TAU),
        amplitude: 1.0 + 0.15 * (rng.random_range(0.0..1.0) - 0.5),
    };
    let idx = |name: &str| topology.joint_index(name).expect("known joint");
    let arms = [
        idx("ElbowLeft"),
        idx("WristLeft"),
        idx("HandLeft"),
        idx("ElbowRight"),
        idx("WristRight"),
        idx("HandRight"),
    ];
    let upper = [
        idx("Spine"),
        idx("ShoulderCenter"),
        idx("Head"),
        idx("ShoulderLeft"),
        idx("ElbowLeft"),
        idx("WristLeft"),
        idx("HandLeft"),
        idx("ShoulderRight"),
        idx("ElbowRight"),
        idx("WristRight"),
        idx("HandRight"),
    ];
    let mut frames = Vec::with_capacity(frames_n);
    for t in 0..frames_n {
        let clock = std::f64::consts::TAU * spec.frequency * t as f64 + spec.phase;
        let mut positions = base.clone();
        match action % ACTION_COUNT {
            0 => {
                // arm wave: forearms oscillate vertically, hands swing
                let lift = 0.28 * spec.amplitude * clock.sin();
                let swing = 0.10 * spec.amplitude * (2.0 * clock).sin();
                for &j in &arms {
                    positions[j][1] += lift;
                    positions[j][2] += swing;
                }
            }
            1 => {
                // squat: the whole body compresses vertically, knees flare
                let bend = 0.22 * spec.amplitude * (0.5 + 0.5 * clock.sin());
                for p in &mut positions {
                    p[1] *= 1.0 - bend;
                }
                positions[idx("KneeLeft")][0] -= 0.12 * bend;
                positions[idx("KneeRight")][0] += 0.12 * bend;
                positions[idx("KneeLeft")][2] += 0.10 * bend;
                positions[idx("KneeRight")][2] += 0.10 * bend;
            }
            _ => {
                // torso twist: upper body rotates about the vertical axis
                // through the hip center
                let hip = positions[idx("HipCenter")];
                let theta = 0.9 * spec.amplitude * clock.sin();
                let (s, c) = theta.sin_cos();
                for &j in &upper {
                    let [x, y, z] = positions[j];
                    let (dx, dz) = (x - hip[0], z - hip[2]);
                    positions[j] = [hip[0] + c * dx + s * dz, y, hip[2] - s * dx + c * dz];
                }
            }
        }
        for p in &mut positions {
            for coord in p.iter_mut() {
                *coord += rng.random_range(-0.006..0.006);
            }
        }
        frames.push(Frame::new(positions, t as u64));
    }
    ActionSequence::new(topology, frames)
        .expect("generated frames are valid")
        .with_label(action)
        .with_subject(subject)
        .with_instance(instance)
}

/// A labeled batch: `instances` repetitions of every action by every
/// subject.
pub fn generate_batch(
    actions: std::ops::Range<u32>,
    subjects: std::ops::Range<u32>,
    instances: u32,
    seed: u64,
) -> Vec<ActionSequence> {
    let mut out = Vec::new();
    for action in actions {
        for subject in subjects.clone() {
            for instance in 0..instances {
                out.push(generate_instance(action, subject, instance, seed));
            }
        }
    }
    out
}

/// Concatenate instances into one unsegmented stream, returning the
/// per-frame ground-truth labels alongside.
pub fn concat_stream(parts: &[ActionSequence]) -> Result<(ActionSequence, Vec<FrameLabel>)> {
    crate::detection::concat_labeled_stream(parts)
}
