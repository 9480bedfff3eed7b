//! Evaluation reports: machine-parseable structured text plus a rendered
//! table for the terminal. Reports embed the bundle hash, seed and
//! manifest hash, so every number is reproducible from the command line
//! alone. No timestamps; identical runs write identical bytes.

use std::fmt::Write as _;
use std::io::Write;

use skelact_core::DetectionScore;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunMeta {
    pub config_hash: String,
    pub bundle_hash: String,
    pub seed: u64,
    pub manifest_hash: String,
}

impl RunMeta {
    fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "config_hash {}", self.config_hash)?;
        writeln!(w, "bundle_hash {}", self.bundle_hash)?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "manifest_hash {}", self.manifest_hash)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassAccuracy {
    pub label: u32,
    pub instances: usize,
    pub correct: usize,
}

impl ClassAccuracy {
    pub fn accuracy(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.correct as f64 / self.instances as f64
        }
    }
}

/// Recognition scores: per-class and overall accuracy with the confusion
/// matrix. Rows are truth classes; columns are predicted classes in the
/// same order, plus a trailing column for rejected sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionReport {
    pub meta: RunMeta,
    pub labels: Vec<u32>,
    pub per_class: Vec<ClassAccuracy>,
    pub confusion: Vec<Vec<usize>>,
    pub rejected: usize,
    pub correct: usize,
    pub total: usize,
}

impl RecognitionReport {
    /// Tally predicted-vs-truth pairs. `predicted` is `None` for rejected
    /// sequences.
    pub fn tally(
        meta: RunMeta,
        pairs: &[(u32, Option<u32>)], // (truth, predicted)
    ) -> Self {
        let mut labels: Vec<u32> = pairs
            .iter()
            .flat_map(|&(t, p)| [Some(t), p])
            .flatten()
            .collect();
        labels.sort_unstable();
        labels.dedup();
        let index_of = |l: u32| labels.binary_search(&l).expect("collected");
        let k = labels.len();
        let mut confusion = vec![vec![0usize; k + 1]; k];
        let mut correct = 0usize;
        let mut rejected = 0usize;
        for &(truth, predicted) in pairs {
            let row = index_of(truth);
            match predicted {
                Some(p) => {
                    confusion[row][index_of(p)] += 1;
                    if p == truth {
                        correct += 1;
                    }
                }
                None => {
                    confusion[row][k] += 1;
                    rejected += 1;
                }
            }
        }
        let per_class = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| ClassAccuracy {
                label,
                instances: confusion[i].iter().sum(),
                correct: confusion[i][i],
            })
            .collect();
        Self {
            meta,
            labels,
            per_class,
            confusion,
            rejected,
            correct,
            total: pairs.len(),
        }
    }

    pub fn overall_accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "skelact-report v1")?;
        writeln!(w, "mode recognition")?;
        self.meta.write_text(&mut w)?;
        writeln!(w, "classes {}", self.labels.len())?;
        for c in &self.per_class {
            writeln!(
                w,
                "class {} instances {} correct {} accuracy {:.6}",
                c.label,
                c.instances,
                c.correct,
                c.accuracy()
            )?;
        }
        writeln!(w, "rejected {}", self.rejected)?;
        writeln!(
            w,
            "overall correct {} total {} accuracy {:.6}",
            self.correct,
            self.total,
            self.overall_accuracy()
        )?;
        let label_list: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        writeln!(w, "confusion_labels {}", label_list.join(" "))?;
        for (i, row) in self.confusion.iter().enumerate() {
            let counts: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(w, "confusion {} {}", self.labels[i], counts.join(" "))?;
        }
        writeln!(w, "end")
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>8} {:>10} {:>8} {:>10}", "class", "instances", "correct", "accuracy");
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:>8} {:>10} {:>8} {:>10.4}",
                c.label,
                c.instances,
                c.correct,
                c.accuracy()
            );
        }
        let _ = writeln!(
            out,
            "{:>8} {:>10} {:>8} {:>10.4}",
            "overall",
            self.total,
            self.correct,
            self.overall_accuracy()
        );
        if self.rejected > 0 {
            let _ = writeln!(out, "rejected sequences: {}", self.rejected);
        }
        out
    }
}

/// Detection scores: per-class and micro frame-level precision/recall/F1.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub meta: RunMeta,
    pub frames: usize,
    pub score: DetectionScore,
}

impl DetectionReport {
    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "skelact-report v1")?;
        writeln!(w, "mode detection")?;
        self.meta.write_text(&mut w)?;
        writeln!(w, "frames {}", self.frames)?;
        for (label, s) in &self.score.per_class {
            writeln!(
                w,
                "class {} tp {} fp {} fn {} precision {:.6} recall {:.6} f1 {:.6}",
                label,
                s.true_positives,
                s.false_positives,
                s.false_negatives,
                s.precision,
                s.recall,
                s.f1
            )?;
        }
        let m = &self.score.micro;
        writeln!(
            w,
            "micro tp {} fp {} fn {} precision {:.6} recall {:.6} f1 {:.6}",
            m.true_positives, m.false_positives, m.false_negatives, m.precision, m.recall, m.f1
        )?;
        writeln!(w, "end")
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>8} {:>6} {:>6} {:>6} {:>10} {:>10} {:>10}",
            "class", "tp", "fp", "fn", "precision", "recall", "f1"
        );
        for (label, s) in &self.score.per_class {
            let _ = writeln!(
                out,
                "{:>8} {:>6} {:>6} {:>6} {:>10.4} {:>10.4} {:>10.4}",
                label,
                s.true_positives,
                s.false_positives,
                s.false_negatives,
                s.precision,
                s.recall,
                s.f1
            );
        }
        let m = &self.score.micro;
        let _ = writeln!(
            out,
            "{:>8} {:>6} {:>6} {:>6} {:>10.4} {:>10.4} {:>10.4}",
            "micro", m.true_positives, m.false_positives, m.false_negatives, m.precision, m.recall, m.f1
        );
        out
    }
}
