//! Per-dimension z-score normalization and principal component analysis,
//! fitted on training rows and applied everywhere else.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Standard deviation below which a dimension is treated as constant.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-dimension population mean and standard deviation. Dimensions whose
/// deviation falls below [`STD_FLOOR`] are flagged and pass through with a
/// recorded deviation of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    means: Vec<f64>,
    stds: Vec<f64>,
    degenerate: Vec<bool>,
}

impl Normalizer {
    pub fn from_parts(means: Vec<f64>, stds: Vec<f64>, degenerate: Vec<bool>) -> Result<Self> {
        if means.len() != stds.len() || means.len() != degenerate.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                found: stds.len(),
            });
        }
        if stds.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidModel(
                "normalizer deviations must be positive and finite".into(),
            ));
        }
        Ok(Self {
            means,
            stds,
            degenerate,
        })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Flags of dimensions that were constant in the training rows.
    pub fn degenerate(&self) -> &[bool] {
        &self.degenerate
    }

    /// `(v - mean) / std` componentwise.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(v.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }

    pub fn apply_rows(&self, rows: &Array2<f64>) -> Result<Array2<f64>> {
        if rows.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rows.ncols(),
            });
        }
        let mut out = rows.clone();
        for mut row in out.rows_mut() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (*x - self.means[j]) / self.stds[j];
            }
        }
        Ok(out)
    }

    /// Inverse map: `v * std + mean`.
    pub fn invert(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(v.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((x, m), s)| x * s + m)
            .collect())
    }
}

/// Population mean/std per column of `rows`.
pub fn fit_normalizer(rows: &Array2<f64>) -> Result<Normalizer> {
    let (n, d) = (rows.nrows(), rows.ncols());
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    check_finite(rows)?;
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    let mut degenerate = vec![false; d];
    for j in 0..d {
        let col = rows.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        means[j] = mean;
        let std = var.sqrt();
        if std < STD_FLOOR {
            stds[j] = 1.0;
            degenerate[j] = true;
        } else {
            stds[j] = std;
        }
    }
    Normalizer::from_parts(means, stds, degenerate)
}

/// Principal axes of a training matrix: orthonormal components in
/// descending eigenvalue order, the training mean, and how many leading
/// components cover the requested variance fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// One component per row.
    components: Array2<f64>,
    eigenvalues: Vec<f64>,
    retained: usize,
}

impl PcaModel {
    pub fn from_parts(
        mean: Vec<f64>,
        components: Array2<f64>,
        eigenvalues: Vec<f64>,
        retained: usize,
    ) -> Result<Self> {
        if components.ncols() != mean.len()
            || components.nrows() != eigenvalues.len()
            || retained == 0
            || retained > components.nrows()
        {
            return Err(Error::InvalidModel("inconsistent projection model".into()));
        }
        Ok(Self {
            mean,
            components,
            eigenvalues,
            retained,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    /// Fraction of total variance along each component.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().map(|&l| l.max(0.0)).sum();
        if total <= 0.0 {
            return vec![0.0; self.eigenvalues.len()];
        }
        self.eigenvalues.iter().map(|&l| l.max(0.0) / total).collect()
    }

    /// Coordinates of `v - mean` on the first `retained` components.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: v.len(),
            });
        }
        let mut out = Vec::with_capacity(self.retained);
        for k in 0..self.retained {
            let row = self.components.row(k);
            let mut acc = 0.0;
            for (j, &x) in v.iter().enumerate() {
                acc += (x - self.mean[j]) * row[j];
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn project_rows(&self, rows: &Array2<f64>) -> Result<Array2<f64>> {
        let n = rows.nrows();
        let mut flat = Vec::with_capacity(n * self.retained);
        for row in rows.rows() {
            flat.extend(self.project(row.as_slice().expect("contiguous row"))?);
        }
        Ok(Array2::from_shape_vec((n, self.retained), flat).expect("shape"))
    }

    /// Map projected coordinates back into the input space.
    pub fn reconstruct(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() > self.components.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.retained,
                found: coords.len(),
            });
        }
        let mut out = self.mean.clone();
        for (k, &c) in coords.iter().enumerate() {
            let row = self.components.row(k);
            for (j, o) in out.iter_mut().enumerate() {
                *o += c * row[j];
            }
        }
        Ok(out)
    }
}

fn check_finite(rows: &Array2<f64>) -> Result<()> {
    for (i, row) in rows.rows().into_iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteInput { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Eigendecomposition of the population covariance of `rows`, keeping the
/// smallest leading set of components whose eigenvalues cover
/// `variance_fraction` of the total (at least one).
#[allow(clippy::needless_range_loop)]
pub fn fit_pca(rows: &Array2<f64>, variance_fraction: f64) -> Result<PcaModel> {
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        return Err(Error::InvalidVarianceFraction(variance_fraction));
    }
    let (n, d) = (rows.nrows(), rows.ncols());
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    check_finite(rows)?;

    let mut mean = vec![0.0; d];
    for row in rows.rows() {
        for (j, &x) in row.iter().enumerate() {
            mean[j] += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    // population covariance of the centered rows
    let mut cov = vec![vec![0.0f64; d]; d];
    let mut centered = vec![0.0f64; d];
    for row in rows.rows() {
        for (j, &x) in row.iter().enumerate() {
            centered[j] = x - mean[j];
        }
        for a in 0..d {
            let ca = centered[a];
            let cov_a = &mut cov[a];
            for b in a..d {
                cov_a[b] += ca * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[a][b] / n as f64;
            cov[a][b] = v;
        }
        for b in 0..a {
            cov[a][b] = cov[b][a];
        }
    }

    let (mut eigenvalues, mut components) = jacobi_eigen_symmetric(cov);

    // descending eigenvalue order metric, stable under ties
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[b]
            .partial_cmp(&eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    eigenvalues = order.iter().map(|&i| eigenvalues[i]).collect();
    components = order.iter().map(|&i| std::mem::take(&mut components[i])).collect();

    // reproducible sign: largest-magnitude entry of each component positive
    for comp in &mut components {
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|(ai, a), (bi, b)| {
                a.abs()
                    .partial_cmp(&b.abs())
                    .expect("finite components")
                    .then(bi.cmp(ai))
            })
            .map(|(_, &v)| v)
            .unwrap_or(1.0);
        if lead < 0.0 {
            for x in comp.iter_mut() {
                *x = -*x;
            }
        }
    }

    let total: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    let retained = if total <= 0.0 {
        1
    } else {
        let target = variance_fraction * total;
        let mut cum = 0.0;
        let mut m = d;
        for (i, &l) in eigenvalues.iter().enumerate() {
            cum += l.max(0.0);
            // tiny slack so that fraction 1.0 is reachable despite rounding
            if cum >= target - 1e-12 * total {
                m = i + 1;
                break;
            }
        }
        m.max(1)
    };

    let flat: Vec<f64> = components.into_iter().flatten().collect();
    PcaModel::from_parts(
        mean,
        Array2::from_shape_vec((d, d), flat).expect("shape"),
        eigenvalues,
        retained,
    )
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors-as-rows), unsorted.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen_symmetric(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if n <= 1 {
        return (a.iter().map(|r| r.first().copied().unwrap_or(0.0)).collect(), v);
    }
    let off = |a: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[p][q] * a[p][q];
            }
        }
        s.sqrt()
    };
    let scale: f64 = (0..n)
        .map(|i| a[i][i].abs())
        .fold(off(&a), f64::max)
        .max(1e-300);
    for _sweep in 0..100 {
        if off(&a) <= 1e-14 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let eigenvalues: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    // columns of v are the eigenvectors; emit them as rows
    let mut rows = vec![vec![0.0; n]; n];
    for (i, vrow) in v.iter().enumerate() {
        for (j, &x) in vrow.iter().enumerate() {
            rows[j][i] = x;
        }
    }
    (eigenvalues, rows)
}
