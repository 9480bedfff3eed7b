//! Orthonormal type-II discrete cosine transform with truncation, and the
//! average magnitude difference function over its coefficients.

use crate::error::{Error, Result};

/// Orthonormal DCT-II of `x`, keeping the first `min(keep, len)` coefficients.
///
/// Coefficient k is `s_k * sum_n x[n] * cos(pi * (2n + 1) * k / (2N))` with
/// `s_0 = sqrt(1/N)` and `s_k = sqrt(2/N)` otherwise, so the full transform
/// is an isometry (Parseval). Inputs shorter than `keep` come back whole,
/// without padding.
pub fn dct_truncate(x: &[f64], keep: usize) -> Vec<f64> {
    let n = x.len();
    let out_len = keep.min(n);
    let mut out = Vec::with_capacity(out_len);
    if n == 0 {
        return out;
    }
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    let step = std::f64::consts::PI / (2.0 * n as f64);
    for k in 0..out_len {
        let mut acc = 0.0;
        for (i, &v) in x.iter().enumerate() {
            acc += v * ((2 * i + 1) as f64 * k as f64 * step).cos();
        }
        out.push(acc * if k == 0 { scale0 } else { scale });
    }
    out
}

/// Average magnitude difference function of `d` with averaging depth `n`:
/// component k (k = 1..len-n) is the mean over i = 1..n of |d[i] - d[i+k]|
/// (1-based indexing). Requires `len >= n + 1`.
pub fn amdf(d: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidDescriptorParams(
            "averaging depth must be at least 1".into(),
        ));
    }
    if d.len() < n + 1 {
        return Err(Error::VectorTooShort { len: d.len(), n });
    }
    let lags = d.len() - n;
    let mut out = Vec::with_capacity(lags);
    for k in 1..=lags {
        let mut acc = 0.0;
        for i in 0..n {
            acc += (d[i] - d[i + k]).abs();
        }
        out.push(acc / n as f64);
    }
    Ok(out)
}
