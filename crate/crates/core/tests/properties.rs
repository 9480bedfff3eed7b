//! Property tests over the spec-level invariants that hold for arbitrary
//! valid inputs, not just the hand-picked unit-test cases.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use proptest::collection::vec;
use proptest::prelude::*;

use skelact_core::descriptors::{
    amdf, dct_truncate, extract, AngleTable, DescriptorKind, DescriptorParams,
};
use skelact_core::detection::{compose_parallel, score_detection, FrameLabel};
use skelact_core::hmm::{forward_log_likelihood, viterbi, DiscreteHmm};
use skelact_core::skeleton::{
    compute_average_bone_lengths, normalize_bones, ActionSequence, Frame, SkeletonTopology,
};
use skelact_core::synthetic::{generate_instance, kinect20_topology, rest_pose};

fn chain_topology(joints: usize) -> Arc<SkeletonTopology> {
    let names: Vec<String> = (0..joints).map(|i| format!("j{i}")).collect();
    let bones: Vec<(String, String)> = (1..joints)
        .map(|i| (format!("j{}", i - 1), format!("j{i}")))
        .collect();
    Arc::new(SkeletonTopology::new("chain", names, Some("j0"), &bones).unwrap())
}

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![-5.0..5.0f64, -0.01..0.01f64]
}

prop_compose! {
    /// A small sequence over a 4-joint chain with nondegenerate bones.
    fn small_sequence()(frames in vec(vec(coord(), 12), 1..6)) -> Option<ActionSequence> {
        let topology = chain_topology(4);
        let frames: Vec<Frame> = frames
            .into_iter()
            .enumerate()
            .map(|(t, flat)| {
                let positions: Vec<[f64; 3]> = flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
                Frame::new(positions, t as u64)
            })
            .collect();
        // reject frames with degenerate bones
        let seq = ActionSequence::new(topology, frames).ok()?;
        let ok = seq.frames.iter().all(|f| {
            seq.topology.bones().iter().all(|b| {
                let p = f.positions[b.parent];
                let c = f.positions[b.child];
                let d2: f64 = (0..3).map(|k| (p[k] - c[k]).powi(2)).sum();
                d2.sqrt() > 1e-6
            })
        });
        ok.then_some(seq)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_round_trip_is_identity(seq in small_sequence()) {
        prop_assume!(seq.is_some());
        let mut seq = seq.unwrap();
        seq.label = Some(3);
        seq.subject = Some(1);
        let mut buf = Vec::new();
        skelact_core::dataset::write_canonical(&seq, &mut buf).unwrap();
        let back = skelact_core::dataset::read_canonical(
            std::io::Cursor::new(buf),
            Arc::clone(&seq.topology),
            std::path::Path::new("mem.skel"),
        )
        .unwrap();
        prop_assert_eq!(seq, back);
    }

    #[test]
    fn normalization_hits_profile_and_is_idempotent(
        seq in small_sequence(),
        lengths in vec(0.1..4.0f64, 3),
    ) {
        prop_assume!(seq.is_some());
        let seq = seq.unwrap();
        let profile = skelact_core::skeleton::BoneLengthProfile::new(lengths).unwrap();
        let once = normalize_bones(&seq, &profile).unwrap();
        let twice = normalize_bones(&once, &profile).unwrap();
        for (f1, f0) in once.frames.iter().zip(&seq.frames) {
            for (bi, b) in seq.topology.bones().iter().enumerate() {
                let v1: Vec<f64> = (0..3).map(|k| f1.positions[b.child][k] - f1.positions[b.parent][k]).collect();
                let v0: Vec<f64> = (0..3).map(|k| f0.positions[b.child][k] - f0.positions[b.parent][k]).collect();
                let n1 = v1.iter().map(|x| x * x).sum::<f64>().sqrt();
                let n0 = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
                // length matches the profile, direction matches the input
                prop_assert!(((n1 - profile.lengths()[bi]) / profile.lengths()[bi]).abs() < 1e-9);
                for k in 0..3 {
                    prop_assert!((v1[k] / n1 - v0[k] / n0).abs() < 1e-9);
                }
            }
        }
        for (f2, f1) in twice.frames.iter().zip(&once.frames) {
            for (p2, p1) in f2.positions.iter().zip(&f1.positions) {
                for k in 0..3 {
                    prop_assert!((p2[k] - p1[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn averaging_is_order_invariant(
        a in small_sequence(),
        b in small_sequence(),
    ) {
        prop_assume!(a.is_some() && b.is_some());
        let (a, b) = (a.unwrap(), b.unwrap());
        let p1 = compute_average_bone_lengths(&[a.clone(), b.clone()]).unwrap();
        let p2 = compute_average_bone_lengths(&[b, a]).unwrap();
        for (x, y) in p1.lengths().iter().zip(p2.lengths()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn extract_preserves_frame_count(seq in small_sequence(), kind_idx in 0..7usize) {
        prop_assume!(seq.is_some());
        let seq = seq.unwrap();
        let kind = DescriptorKind::ALL[kind_idx];
        // the chain topology has no named table joints; descriptors that
        // need angles use an empty table, which is valid (dimension 0
        // contributes nothing) except for pure Angular extraction
        let table = AngleTable::new(vec![]).unwrap();
        if matches!(kind, DescriptorKind::Angular) {
            return Ok(());
        }
        let params = DescriptorParams { dct_keep: 24, amdf_n: 8, constant_centroid: false };
        let d = extract(&seq, kind, &params, &table).unwrap();
        prop_assert_eq!(d.frame_count(), seq.len());
        prop_assert!(d.vectors.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn transform_chain_stays_finite(x in vec(-1e6..1e6f64, 10..200), n in 1..9usize) {
        let keep = 50usize;
        let d = dct_truncate(&x, keep);
        prop_assert!(d.iter().all(|v| v.is_finite()));
        if d.len() > n {
            let out = amdf(&d, n).unwrap();
            prop_assert_eq!(out.len(), d.len() - n);
            prop_assert!(out.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn swapping_prediction_and_truth_swaps_precision_recall(
        pred_raw in vec(0..4u32, 1..60),
        truth_raw in vec(0..4u32, 1..60),
    ) {
        let n = pred_raw.len().min(truth_raw.len());
        let to_labels = |raw: &[u32]| -> Vec<FrameLabel> {
            raw[..n]
                .iter()
                .map(|&v| if v == 0 { FrameLabel::Background } else { FrameLabel::Action(v) })
                .collect()
        };
        let pred = to_labels(&pred_raw);
        let truth = to_labels(&truth_raw);
        let a = score_detection(&pred, &truth).unwrap();
        let b = score_detection(&truth, &pred).unwrap();
        prop_assert_eq!(a.micro.precision, b.micro.recall);
        prop_assert_eq!(a.micro.recall, b.micro.precision);
        prop_assert_eq!(a.micro.true_positives, b.micro.true_positives);
    }
}

fn arbitrary_model(seed: u64, states: usize, symbols: usize, label: u32) -> DiscreteHmm {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut dist = |n: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    };
    let initial = dist(states);
    let transition: Vec<f64> = (0..states).flat_map(|_| dist(states)).collect();
    let emission: Vec<f64> = (0..states).flat_map(|_| dist(symbols)).collect();
    DiscreteHmm::new(
        Array1::from_vec(initial),
        Array2::from_shape_vec((states, states), transition).unwrap(),
        Array2::from_shape_vec((states, symbols), emission).unwrap(),
        label,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn viterbi_never_exceeds_forward(seed in 0..10_000u64, obs in vec(0..4usize, 1..30)) {
        let m = arbitrary_model(seed, 3, 4, 0);
        let (_, vll) = viterbi(&m, &obs).unwrap();
        let fll = forward_log_likelihood(&m, &obs).unwrap();
        prop_assert!(vll <= fll + 1e-12);
    }

    #[test]
    fn forward_is_permutation_invariant(seed in 0..10_000u64, obs in vec(0..4usize, 1..20)) {
        let m = arbitrary_model(seed, 3, 4, 0);
        let perm = [1usize, 2, 0];
        let s = 3;
        let mut initial = vec![0.0; s];
        let mut transition = vec![0.0; s * s];
        let mut emission = vec![0.0; s * 4];
        for i in 0..s {
            initial[perm[i]] = m.initial()[i];
            for j in 0..s {
                transition[perm[i] * s + perm[j]] = m.transition()[[i, j]];
            }
            for k in 0..4 {
                emission[perm[i] * 4 + k] = m.emission()[[i, k]];
            }
        }
        let pm = DiscreteHmm::new(
            Array1::from_vec(initial),
            Array2::from_shape_vec((s, s), transition).unwrap(),
            Array2::from_shape_vec((s, 4), emission).unwrap(),
            0,
        )
        .unwrap();
        let a = forward_log_likelihood(&m, &obs).unwrap();
        let b = forward_log_likelihood(&pm, &obs).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn composition_is_always_stochastic(
        seeds in vec(0..10_000u64, 1..5),
        exit_milli in 0..999usize,
    ) {
        let units: Vec<DiscreteHmm> = seeds
            .iter()
            .enumerate()
            .map(|(i, &s)| arbitrary_model(s, 1 + (s % 3) as usize, 4, i as u32))
            .collect();
        let exit_prob = exit_milli as f64 / 1000.0;
        let c = compose_parallel(units.clone(), exit_prob).unwrap();
        let total: usize = units.iter().map(|u| u.states()).sum();
        prop_assert_eq!(c.states(), total);
        let isum: f64 = c.initial().sum();
        prop_assert!((isum - 1.0).abs() < 1e-9);
        for i in 0..total {
            let sum: f64 = c.transition().row(i).sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "row {}: {}", i, sum);
            prop_assert!(c.transition().row(i).iter().all(|&p| p >= 0.0));
            // the owning unit is recoverable from every state index
            let u = c.unit_of_state(i);
            prop_assert!(i >= c.state_offsets()[u]);
        }
    }
}

/// Angular descriptors over joint-only triples are unchanged by a global
/// translation of the skeleton; camera-facing triples break this because
/// the origin stays put.
#[test]
fn angular_translation_invariance_without_camera_triples() {
    let topology = kinect20_topology();
    let base = generate_instance(2, 1, 0, 55);
    let shift = [0.7, -0.4, 1.3];
    let shifted_frames: Vec<Frame> = base
        .frames
        .iter()
        .map(|f| {
            let positions = f
                .positions
                .iter()
                .map(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]])
                .collect();
            Frame::new(positions, f.timestamp_index)
        })
        .collect();
    let shifted = ActionSequence::new(Arc::clone(&topology), shifted_frames).unwrap();
    let params = DescriptorParams::default();

    let joint_only = AngleTable::default_table().without_camera();
    assert_eq!(joint_only.len(), 23);
    let a = extract(&base, DescriptorKind::Angular, &params, &joint_only).unwrap();
    let b = extract(&shifted, DescriptorKind::Angular, &params, &joint_only).unwrap();
    let max_diff = a
        .vectors
        .iter()
        .zip(b.vectors.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    assert!(max_diff < 1e-9, "translation moved angles by {max_diff}");

    // with the camera triples included the invariance must fail
    let full = AngleTable::default_table();
    let a = extract(&base, DescriptorKind::Angular, &params, &full).unwrap();
    let b = extract(&shifted, DescriptorKind::Angular, &params, &full).unwrap();
    let max_diff = a
        .vectors
        .iter()
        .zip(b.vectors.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    assert!(max_diff > 1e-3, "camera angles unexpectedly invariant");
}

/// The rest pose stands clear of the camera origin, so all 35 default
/// angles resolve on it.
#[test]
fn default_table_angles_resolve_on_rest_pose() {
    let topology = kinect20_topology();
    let pose = rest_pose(&topology);
    let frames = vec![Frame::new(pose, 0)];
    let seq = ActionSequence::new(topology, frames).unwrap();
    let d = extract(
        &seq,
        DescriptorKind::Angular,
        &DescriptorParams::default(),
        &AngleTable::default_table(),
    )
    .unwrap();
    assert_eq!(d.dim(), 35 * 8);
    assert!(d.vectors.iter().all(|v| v.is_finite()));
}
