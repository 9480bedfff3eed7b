//! Five-frame window operators: central-difference derivatives and
//! statistical moments, applied componentwise to per-frame vectors.

use crate::error::{Error, Result};

/// Variance below which skewness and kurtosis are defined as 0 instead of
/// the 0/0 forms a constant window would produce.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Five consecutive per-frame vectors centered at frame t
/// (positions t-2, t-1, t, t+1, t+2), all of one dimension.
#[derive(Debug, Clone, Copy)]
pub struct Window5<'a> {
    values: [&'a [f64]; 5],
}

impl<'a> Window5<'a> {
    pub fn new(values: [&'a [f64]; 5]) -> Result<Self> {
        let dim = values[0].len();
        for (i, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidWindow(format!(
                    "entry {i} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidWindow(format!(
                    "entry {i} contains a non-finite value"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    fn column(&self, d: usize) -> [f64; 5] {
        [
            self.values[0][d],
            self.values[1][d],
            self.values[2][d],
            self.values[3][d],
            self.values[4][d],
        ]
    }
}

/// First, second and third derivative estimates over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowCalculus {
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub jerk: Vec<f64>,
}

/// Central-difference velocity, acceleration and jerk at the window center,
/// assuming a unit time step.
///
/// The acceleration stencil is the standard five-point second-derivative
/// rule (-1, 16, -30, 16, -1)/12. Note the -30 center coefficient: the
/// variant with +30 sometimes seen in print does not annihilate constant
/// input (its coefficients sum to 60, not 0).
pub fn window_calculus(w: &Window5) -> WindowCalculus {
    let dim = w.dim();
    let mut velocity = Vec::with_capacity(dim);
    let mut acceleration = Vec::with_capacity(dim);
    let mut jerk = Vec::with_capacity(dim);
    for d in 0..dim {
        let [m2, m1, c, p1, p2] = w.column(d);
        velocity.push((m2 - 8.0 * m1 + 8.0 * p1 - p2) / 12.0);
        acceleration.push((-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / 12.0);
        jerk.push((-m2 + 2.0 * m1 - 2.0 * p1 + p2) / 2.0);
    }
    WindowCalculus {
        velocity,
        acceleration,
        jerk,
    }
}

/// Four population moments over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub skewness: Vec<f64>,
    pub kurtosis: Vec<f64>,
}

/// Componentwise population mean, variance, skewness and (non-excess)
/// kurtosis over the five samples. When the variance falls below
/// [`VARIANCE_FLOOR`], skewness and kurtosis are 0.
pub fn window_stats(w: &Window5) -> WindowStats {
    let dim = w.dim();
    let mut mean = Vec::with_capacity(dim);
    let mut variance = Vec::with_capacity(dim);
    let mut skewness = Vec::with_capacity(dim);
    let mut kurtosis = Vec::with_capacity(dim);
    for d in 0..dim {
        let xs = w.column(d);
        let mu = xs.iter().sum::<f64>() / 5.0;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        let mut m4 = 0.0;
        for x in xs {
            let e = x - mu;
            let e2 = e * e;
            m2 += e2;
            m3 += e2 * e;
            m4 += e2 * e2;
        }
        m2 /= 5.0;
        m3 /= 5.0;
        m4 /= 5.0;
        mean.push(mu);
        variance.push(m2);
        if m2 < VARIANCE_FLOOR {
            skewness.push(0.0);
            kurtosis.push(0.0);
        } else {
            skewness.push(m3 / m2.powf(1.5));
            kurtosis.push(m4 / (m2 * m2));
        }
    }
    WindowStats {
        mean,
        variance,
        skewness,
        kurtosis,
    }
}
