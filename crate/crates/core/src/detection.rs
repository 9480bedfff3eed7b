//! Segmentation-free detection: per-action models composed in parallel
//! into one big HMM, Viterbi decoding of unsegmented symbol streams into
//! per-frame action labels, and frame-level precision/recall/F1 scoring.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::hmm::{viterbi_tables, DiscreteHmm};

/// Per-action models embedded as blocks of one larger state space.
///
/// Within a unit the original transitions run scaled by `1 - exit_prob`;
/// the remaining mass leaves the unit and re-enters through the entry
/// (trained initial) distribution of a uniformly chosen unit, own unit
/// included. The composite initial distribution is the uniform mixture of
/// unit initials and emissions are stacked unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeHmm {
    units: Vec<DiscreteHmm>,
    state_offsets: Vec<usize>,
    unit_of_state: Vec<usize>,
    initial: Array1<f64>,
    transition: Array2<f64>,
    emission: Array2<f64>,
    exit_prob: f64,
}

impl CompositeHmm {
    pub fn units(&self) -> &[DiscreteHmm] {
        &self.units
    }

    pub fn states(&self) -> usize {
        self.initial.len()
    }

    pub fn symbols(&self) -> usize {
        self.emission.ncols()
    }

    pub fn exit_prob(&self) -> f64 {
        self.exit_prob
    }

    pub fn state_offsets(&self) -> &[usize] {
        &self.state_offsets
    }

    /// Index of the unit owning a composite state.
    pub fn unit_of_state(&self, state: usize) -> usize {
        self.unit_of_state[state]
    }

    pub fn unit_label(&self, unit: usize) -> u32 {
        self.units[unit].label()
    }

    pub fn initial(&self) -> &Array1<f64> {
        &self.initial
    }

    pub fn transition(&self) -> &Array2<f64> {
        &self.transition
    }

    pub fn emission(&self) -> &Array2<f64> {
        &self.emission
    }
}

/// Build the parallel composition of per-action models.
pub fn compose_parallel(units: Vec<DiscreteHmm>, exit_prob: f64) -> Result<CompositeHmm> {
    if units.is_empty() {
        return Err(Error::NoModels);
    }
    if !(0.0..1.0).contains(&exit_prob) {
        return Err(Error::InvalidExitProb(exit_prob));
    }
    let alphabet = units[0].symbols();
    for u in &units {
        if u.symbols() != alphabet {
            return Err(Error::AlphabetMismatch(alphabet, u.symbols()));
        }
    }
    let n_units = units.len();
    let total: usize = units.iter().map(|u| u.states()).sum();
    let mut state_offsets = Vec::with_capacity(n_units);
    let mut unit_of_state = Vec::with_capacity(total);
    let mut offset = 0;
    for (ui, u) in units.iter().enumerate() {
        state_offsets.push(offset);
        unit_of_state.extend(std::iter::repeat_n(ui, u.states()));
        offset += u.states();
    }

    let mut initial = Array1::zeros(total);
    let mut transition = Array2::zeros((total, total));
    let mut emission = Array2::zeros((total, alphabet));
    let unit_weight = 1.0 / n_units as f64;
    for (ui, u) in units.iter().enumerate() {
        let o = state_offsets[ui];
        for i in 0..u.states() {
            initial[o + i] = unit_weight * u.initial()[i];
            for k in 0..alphabet {
                emission[[o + i, k]] = u.emission()[[i, k]];
            }
            for j in 0..u.states() {
                transition[[o + i, o + j]] = (1.0 - exit_prob) * u.transition()[[i, j]];
            }
            if exit_prob > 0.0 {
                for (vi, v) in units.iter().enumerate() {
                    let vo = state_offsets[vi];
                    for j in 0..v.states() {
                        transition[[o + i, vo + j]] += exit_prob * unit_weight * v.initial()[j];
                    }
                }
            }
        }
    }
    for i in 0..total {
        let sum: f64 = transition.row(i).sum();
        debug_assert!((sum - 1.0).abs() < 1e-9, "row {i} sums to {sum}");
    }
    Ok(CompositeHmm {
        units,
        state_offsets,
        unit_of_state,
        initial,
        transition,
        emission,
        exit_prob,
    })
}

/// A per-frame verdict: one of the trained action classes, or background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FrameLabel {
    Action(u32),
    Background,
}

/// Concatenate segmented instances into one unsegmented stream, returning
/// the per-frame ground-truth labels alongside. Unlabeled parts become
/// background frames.
pub fn concat_labeled_stream(
    parts: &[crate::skeleton::ActionSequence],
) -> Result<(crate::skeleton::ActionSequence, Vec<FrameLabel>)> {
    use crate::skeleton::{ActionSequence, Frame};
    let first = parts.first().ok_or(Error::EmptyTrainingSet)?;
    let mut frames = Vec::new();
    let mut truth = Vec::new();
    for part in parts {
        if part.topology != first.topology {
            return Err(Error::TopologyMismatch {
                expected: first.topology.name().to_string(),
                found: part.topology.name().to_string(),
            });
        }
        let label = match part.label {
            Some(l) => FrameLabel::Action(l),
            None => FrameLabel::Background,
        };
        for f in &part.frames {
            frames.push(Frame::new(f.positions.clone(), frames.len() as u64));
            truth.push(label);
        }
    }
    let stream = ActionSequence::new(std::sync::Arc::clone(&first.topology), frames)?;
    Ok((stream, truth))
}

impl std::fmt::Display for FrameLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameLabel::Action(a) => write!(f, "{a}"),
            FrameLabel::Background => f.write_str("background"),
        }
    }
}

/// A maximal run of equal frame labels, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub label: FrameLabel,
}

/// Frame labels plus their run-length segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub frame_labels: Vec<FrameLabel>,
    pub segments: Vec<Segment>,
}

impl DetectionResult {
    pub fn from_frame_labels(frame_labels: Vec<FrameLabel>) -> Self {
        let mut segments = Vec::new();
        let mut start = 0usize;
        for t in 1..=frame_labels.len() {
            if t == frame_labels.len() || frame_labels[t] != frame_labels[start] {
                segments.push(Segment {
                    start,
                    end: t - 1,
                    label: frame_labels[start],
                });
                start = t;
            }
        }
        Self {
            frame_labels,
            segments,
        }
    }

    /// Plain-text export: `frames` block with one `index<TAB>label` line
    /// per frame, then a `segments` block with `start<TAB>end<TAB>label`.
    pub fn write_export(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "frames")?;
        for (t, l) in self.frame_labels.iter().enumerate() {
            writeln!(w, "{t}\t{l}")?;
        }
        writeln!(w, "segments")?;
        for s in &self.segments {
            writeln!(w, "{}\t{}\t{}", s.start, s.end, s.label)?;
        }
        Ok(())
    }
}

fn window_bounds(t: usize, len: usize, width: usize) -> (usize, usize) {
    let left = (width - 1) / 2;
    let right = width / 2;
    let lo = t.saturating_sub(left);
    let hi = (t + right).min(len - 1);
    (lo, hi)
}

fn majority_vote(raw: &[usize], n_units: usize, width: usize) -> Vec<usize> {
    let len = raw.len();
    let mut out = Vec::with_capacity(len);
    let mut counts = vec![0usize; n_units];
    for t in 0..len {
        counts.iter_mut().for_each(|c| *c = 0);
        let (lo, hi) = window_bounds(t, len, width);
        for &u in &raw[lo..=hi] {
            counts[u] += 1;
        }
        let best = *counts.iter().max().expect("nonempty");
        // tie rule: keep the center frame's own label when it is among the
        // leaders, otherwise the lowest leading unit index
        let winner = if counts[raw[t]] == best {
            raw[t]
        } else {
            counts.iter().position(|&c| c == best).expect("max exists")
        };
        out.push(winner);
    }
    out
}

fn units_to_labels(c: &CompositeHmm, units: &[usize]) -> Vec<FrameLabel> {
    units
        .iter()
        .map(|&u| FrameLabel::Action(c.unit_label(u)))
        .collect()
}

/// Decode the whole stream once on the composite model, then smooth the
/// per-frame unit labels with a majority vote over a window of
/// `window_width` frames centered on each frame (truncated at the edges,
/// ties resolved toward the center frame's label).
pub fn detect_sliding(c: &CompositeHmm, obs: &[usize], window_width: usize) -> Result<DetectionResult> {
    if window_width == 0 {
        return Err(Error::InvalidWindowWidth);
    }
    if obs.is_empty() {
        return Err(Error::EmptyObservation);
    }
    for &o in obs {
        if o >= c.symbols() {
            return Err(Error::SymbolOutOfRange {
                symbol: o,
                alphabet: c.symbols(),
            });
        }
    }
    let (path, _) = viterbi_tables(&c.initial, &c.transition, &c.emission, obs)?;
    let raw: Vec<usize> = path.iter().map(|&s| c.unit_of_state(s)).collect();
    let smoothed = majority_vote(&raw, c.units.len(), window_width);
    Ok(DetectionResult::from_frame_labels(units_to_labels(c, &smoothed)))
}

/// Alternative scheme for comparison: decode each window independently and
/// keep the unit decoded at the window's center frame. Quadratic in the
/// window width but free of any cross-window coupling.
pub fn detect_windowed_independent(
    c: &CompositeHmm,
    obs: &[usize],
    window_width: usize,
) -> Result<DetectionResult> {
    if window_width == 0 {
        return Err(Error::InvalidWindowWidth);
    }
    if obs.is_empty() {
        return Err(Error::EmptyObservation);
    }
    let mut units = Vec::with_capacity(obs.len());
    for t in 0..obs.len() {
        let (lo, hi) = window_bounds(t, obs.len(), window_width);
        let (path, _) = viterbi_tables(&c.initial, &c.transition, &c.emission, &obs[lo..=hi])?;
        units.push(c.unit_of_state(path[t - lo]));
    }
    Ok(DetectionResult::from_frame_labels(units_to_labels(c, &units)))
}

/// Precision, recall and F1 with raw confusion counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

impl ClassScore {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let (precision, recall, f1) = prf(tp, fp, fn_);
        Self {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1,
        }
    }
}

/// Frame-level detection scores, per class and micro-averaged over all
/// action frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionScore {
    pub per_class: BTreeMap<u32, ClassScore>,
    pub micro: ClassScore,
}

/// Count frame-level hits per action class. Background is not a class of
/// its own: an action predicted on a background frame is a false positive
/// of that action, background predicted on an action frame is a false
/// negative of the true action.
pub fn score_detection(predicted: &[FrameLabel], truth: &[FrameLabel]) -> Result<DetectionScore> {
    if predicted.len() != truth.len() {
        return Err(Error::LabelLengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    let mut classes: Vec<u32> = predicted
        .iter()
        .chain(truth)
        .filter_map(|l| match l {
            FrameLabel::Action(a) => Some(*a),
            FrameLabel::Background => None,
        })
        .collect();
    classes.sort_unstable();
    classes.dedup();
    let mut per_class = BTreeMap::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    for &c in &classes {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (p, t) in predicted.iter().zip(truth) {
            let p_is = *p == FrameLabel::Action(c);
            let t_is = *t == FrameLabel::Action(c);
            match (p_is, t_is) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        per_class.insert(c, ClassScore::from_counts(tp, fp, fn_));
    }
    Ok(DetectionScore {
        per_class,
        micro: ClassScore::from_counts(tp_all, fp_all, fn_all),
    })
}

/// Segment-level scores at an intersection-over-union threshold; an
/// auxiliary view, not the headline frame-level metric.
pub fn score_segments(
    predicted: &[Segment],
    truth: &[Segment],
    iou_threshold: f64,
) -> DetectionScore {
    let action_segments = |segs: &[Segment]| -> Vec<Segment> {
        segs.iter()
            .filter(|s| matches!(s.label, FrameLabel::Action(_)))
            .copied()
            .collect()
    };
    let preds = action_segments(predicted);
    let truths = action_segments(truth);
    let iou = |a: &Segment, b: &Segment| -> f64 {
        let inter_lo = a.start.max(b.start);
        let inter_hi = a.end.min(b.end);
        if inter_lo > inter_hi {
            return 0.0;
        }
        let inter = (inter_hi - inter_lo + 1) as f64;
        let union = (a.end - a.start + 1 + b.end - b.start + 1) as f64 - inter;
        inter / union
    };
    let mut matched = vec![false; truths.len()];
    let mut counts: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
    let class_of = |s: &Segment| match s.label {
        FrameLabel::Action(a) => a,
        FrameLabel::Background => unreachable!(),
    };
    for s in preds.iter().chain(truths.iter()) {
        counts.entry(class_of(s)).or_default();
    }
    for p in &preds {
        let mut best: Option<(usize, f64)> = None;
        for (ti, t) in truths.iter().enumerate() {
            if matched[ti] || t.label != p.label {
                continue;
            }
            let v = iou(p, t);
            if v >= iou_threshold && best.map(|(_, bv)| v > bv).unwrap_or(true) {
                best = Some((ti, v));
            }
        }
        let e = counts.get_mut(&class_of(p)).expect("inserted");
        match best {
            Some((ti, _)) => {
                matched[ti] = true;
                e.0 += 1;
            }
            None => e.1 += 1,
        }
    }
    for (ti, t) in truths.iter().enumerate() {
        if !matched[ti] {
            counts.get_mut(&class_of(t)).expect("inserted").2 += 1;
        }
    }
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    let mut per_class = BTreeMap::new();
    for (c, (tp, fp, fn_)) in counts {
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        per_class.insert(c, ClassScore::from_counts(tp, fp, fn_));
    }
    DetectionScore {
        per_class,
        micro: ClassScore::from_counts(tp_all, fp_all, fn_all),
    }
}
