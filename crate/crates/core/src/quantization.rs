//! Vector quantization: affinity propagation over training descriptors and
//! nearest-exemplar symbol assignment.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Self-similarity assigned to every point: a fixed value, or the median
/// of the off-diagonal similarities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, rename_all = "kebab-case")]
pub enum Preference {
    Named(PreferenceName),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreferenceName {
    Median,
}

impl Preference {
    pub const MEDIAN: Preference = Preference::Named(PreferenceName::Median);
}

/// Message-passing configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApConfig {
    /// Fraction of the previous message kept in each update, in [0.5, 1).
    pub damping: f64,
    pub max_iterations: usize,
    /// Iterations the exemplar set must stay unchanged to declare
    /// convergence.
    pub convergence_window: usize,
    pub preference: Preference,
}

impl Default for ApConfig {
    fn default() -> Self {
        Self {
            damping: 0.9,
            max_iterations: 500,
            convergence_window: 50,
            preference: Preference::MEDIAN,
        }
    }
}

impl ApConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping >= 0.5 && self.damping < 1.0) {
            return Err(Error::InvalidApConfig(format!(
                "damping must lie in [0.5, 1), found {}",
                self.damping
            )));
        }
        if self.convergence_window == 0 {
            return Err(Error::InvalidApConfig(
                "convergence window must be at least 1".into(),
            ));
        }
        if self.convergence_window >= self.max_iterations {
            return Err(Error::InvalidApConfig(format!(
                "convergence window ({}) must be smaller than max iterations ({})",
                self.convergence_window, self.max_iterations
            )));
        }
        if let Preference::Value(v) = self.preference {
            if !v.is_finite() {
                return Err(Error::InvalidApConfig("preference must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Pairwise similarities `s(i,k) = -|x_i - x_k|^2` with the preference on
/// the diagonal (median of the off-diagonal entries when so configured).
pub fn similarity_matrix(rows: &Array2<f64>, preference: &Preference) -> Result<Array2<f64>> {
    let n = rows.nrows();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    for (i, row) in rows.rows().into_iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteInput { row: i, col: j });
            }
        }
    }
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        for k in (i + 1)..n {
            let d2: f64 = rows
                .row(i)
                .iter()
                .zip(rows.row(k))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            s[[i, k]] = -d2;
            s[[k, i]] = -d2;
        }
    }
    let p = match preference {
        Preference::Value(v) => *v,
        Preference::Named(PreferenceName::Median) => {
            let mut off: Vec<f64> = Vec::with_capacity(n * n - n);
            for i in 0..n {
                for k in 0..n {
                    if i != k {
                        off.push(s[[i, k]]);
                    }
                }
            }
            median(&mut off)
        }
    };
    for k in 0..n {
        s[[k, k]] = p;
    }
    Ok(s)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite similarities"));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Outcome of message passing: exemplar row indices (ascending), one
/// symbol per input row (an index into `exemplars`), and convergence info.
#[derive(Debug, Clone, PartialEq)]
pub struct ApOutcome {
    pub exemplars: Vec<usize>,
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

/// Affinity propagation on a square similarity matrix.
///
/// Responsibilities and availabilities are updated with damping until the
/// exemplar set `{k : r(k,k) + a(k,k) > 0}` has been stable for the
/// configured window, or the iteration budget runs out. Exemplars label
/// themselves; every other row gets its most similar exemplar (lowest
/// index on exact ties).
///
/// Before iterating, each self-preference receives a strictly decreasing
/// tilt of at most 1e-12 of the similarity scale. Exactly symmetric
/// instances (duplicate points, mirrored pairs) would otherwise oscillate
/// or mint one exemplar per duplicate; the tilt resolves them toward the
/// lowest index without measurably moving anything else. Message passing
/// itself uses no randomness, so identical inputs give identical results.
pub fn affinity_propagation(s: &Array2<f64>, cfg: &ApConfig) -> Result<ApOutcome> {
    cfg.validate()?;
    let n = s.nrows();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if s.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.ncols(),
        });
    }
    if n == 1 {
        return Ok(ApOutcome {
            exemplars: vec![0],
            labels: vec![0],
            iterations: 0,
            converged: true,
        });
    }

    let mut s = s.clone();
    let scale = s
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-100);
    for k in 0..n {
        s[[k, k]] -= (k as f64 / n as f64) * 1e-12 * scale;
    }

    let lambda = cfg.damping;
    let keep = 1.0 - lambda;
    let mut r: Array2<f64> = Array2::zeros((n, n));
    let mut a: Array2<f64> = Array2::zeros((n, n));
    let mut is_exemplar = vec![false; n];
    let mut stable = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    for it in 1..=cfg.max_iterations {
        iterations = it;
        // responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k'))
        for i in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut second = f64::NEG_INFINITY;
            let mut best_k = 0usize;
            for k in 0..n {
                let v = a[[i, k]] + s[[i, k]];
                if v > best {
                    second = best;
                    best = v;
                    best_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competing = if k == best_k { second } else { best };
                r[[i, k]] = lambda * r[[i, k]] + keep * (s[[i, k]] - competing);
            }
        }
        // availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))
        //                 a(k,k) = sum_{i' != k} max(0, r(i',k))
        for k in 0..n {
            let mut sum_pos = 0.0;
            for i in 0..n {
                if i != k {
                    sum_pos += r[[i, k]].max(0.0);
                }
            }
            let rkk = r[[k, k]];
            for i in 0..n {
                let fresh = if i == k {
                    sum_pos
                } else {
                    (rkk + sum_pos - r[[i, k]].max(0.0)).min(0.0)
                };
                a[[i, k]] = lambda * a[[i, k]] + keep * fresh;
            }
        }

        let mut changed = false;
        let mut any = false;
        for k in 0..n {
            let e = r[[k, k]] + a[[k, k]] > 0.0;
            if e != is_exemplar[k] {
                changed = true;
            }
            any |= e;
            is_exemplar[k] = e;
        }
        if !changed && any {
            stable += 1;
            if stable >= cfg.convergence_window {
                converged = true;
                break;
            }
        } else {
            stable = 0;
        }
    }

    let exemplars: Vec<usize> = (0..n).filter(|&k| is_exemplar[k]).collect();
    if exemplars.is_empty() {
        return Err(Error::NoExemplars);
    }
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        if is_exemplar[i] {
            labels.push(exemplars.binary_search(&i).expect("own exemplar"));
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_sym = 0usize;
        for (sym, &k) in exemplars.iter().enumerate() {
            let v = s[[i, k]];
            if v > best {
                best = v;
                best_sym = sym;
            }
        }
        labels.push(best_sym);
    }
    Ok(ApOutcome {
        exemplars,
        labels,
        iterations,
        converged,
    })
}

/// Exemplar vectors chosen by clustering; the index of an exemplar is the
/// discrete observation symbol it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    exemplars: Array2<f64>,
}

impl Codebook {
    pub fn new(exemplars: Array2<f64>) -> Result<Self> {
        if exemplars.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self { exemplars })
    }

    /// Build a codebook from the rows of `rows` selected by `indices`.
    pub fn from_exemplar_rows(rows: &Array2<f64>, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::NoExemplars);
        }
        let dim = rows.ncols();
        let mut flat = Vec::with_capacity(indices.len() * dim);
        for &i in indices {
            flat.extend(rows.row(i).iter().copied());
        }
        Codebook::new(Array2::from_shape_vec((indices.len(), dim), flat).expect("shape"))
    }

    pub fn len(&self) -> usize {
        self.exemplars.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.exemplars.ncols()
    }

    pub fn exemplars(&self) -> &Array2<f64> {
        &self.exemplars
    }

    /// Index of the exemplar nearest to `v` in Euclidean distance, lowest
    /// index on ties.
    pub fn assign_symbol(&self, v: &[f64]) -> Result<usize> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let mut best = f64::INFINITY;
        let mut best_k = 0usize;
        for (k, row) in self.exemplars.rows().into_iter().enumerate() {
            let d2: f64 = row.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best {
                best = d2;
                best_k = k;
            }
        }
        Ok(best_k)
    }
}
