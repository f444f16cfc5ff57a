//! Log–log least-squares decay fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of fitting `value ≈ prefactor · s^exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub window: [f64; 2],
    /// Coefficient of determination of the log–log regression.
    pub goodness: f64,
    pub samples: usize,
}

/// Fits below this goodness are reported as unreliable.
pub const MIN_GOODNESS: f64 = 0.9;

impl DecayFit {
    pub fn reliable(&self) -> bool {
        self.goodness >= MIN_GOODNESS
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, R²)`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - icpt - slope * a;
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, icpt, r2)
}

/// Fits `log value` against `log abscissa`; non-positive or non-finite
/// values are dropped.
pub fn loglog_fit(abscissa: &[f64], values: &[f64], window: [f64; 2]) -> Result<DecayFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = abscissa
        .iter()
        .zip(values)
        .filter(|(a, v)| **a > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(a, v)| (a.ln(), v.ln()))
        .unzip();
    if lx.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 3 positive samples, got {}",
            lx.len()
        )));
    }
    let (slope, icpt, r2) = linear_regression(&lx, &ly);
    Ok(DecayFit {
        exponent: slope,
        prefactor: icpt.exp(),
        window,
        goodness: r2,
        samples: lx.len(),
    })
}

/// Log–log fit of `value` against `1 + t` over samples with `t` in `window`.
pub fn fit_temporal_decay(t: &[f64], value: &[f64], window: [f64; 2]) -> Result<DecayFit> {
    if t.len() != value.len() {
        return Err(Error::InvalidArgument("series lengths differ".into()));
    }
    if !(window[0] < window[1]) {
        return Err(Error::InvalidArgument("empty fit window".into()));
    }
    let (a, v): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(value)
        .filter(|(s, _)| **s >= window[0] - 1e-12 && **s <= window[1] + 1e-12)
        .map(|(s, y)| (1.0 + s, *y))
        .unzip();
    if a.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "temporal fit needs at least 8 samples in the window, got {}",
            a.len()
        )));
    }
    loglog_fit(&a, &v, window)
}
