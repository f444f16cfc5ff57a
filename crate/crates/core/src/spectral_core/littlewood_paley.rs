use num_complex::Complex64;

use super::field::ComplexField;
use super::grid::FourierGrid3;
use crate::error::{Error, Result};

fn bump_tail(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth radial cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn phi(r: f64) -> f64 {
    let a = bump_tail(2.0 - r);
    let b = bump_tail(r - 1.0);
    a / (a + b)
}

/// Dyadic profile `ψ(r) = φ(r) - φ(2r)`, supported on `[1/2, 2]`.
/// Its dyadic dilates telescope: `Σ_k ψ(r/2^k) = 1` for `r > 0`.
pub fn psi(r: f64) -> f64 {
    phi(r) - phi(2.0 * r)
}

pub fn psi_k(r: f64, k: i32) -> f64 {
    psi(r * 2f64.powi(-k))
}

/// Bands `k` with `2^{k-1} ≥ 2π/L` and `2^{k+1} ≤ ξ_max`.
pub fn resolvable_bands(grid: &FourierGrid3) -> Vec<i32> {
    let lo = 2.0 * std::f64::consts::PI / grid.box_length();
    let hi = grid.xi_max();
    (-40..40)
        .filter(|&k| 2f64.powi(k - 1) >= lo && 2f64.powi(k + 1) <= hi)
        .collect()
}

/// Littlewood–Paley projection `P_k f`.
pub fn lp_project(f: &ComplexField, k: i32) -> Result<ComplexField> {
    let grid = f.grid();
    if !resolvable_bands(grid).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "band {k} is not resolvable on this grid"
        )));
    }
    let repr = f.representation();
    let mut s = f.clone().into_spectral();
    let g = grid.clone();
    for (idx, z) in s.data_mut().iter_mut().enumerate() {
        let x = g.xi_at(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        *z *= psi_k(r, k);
    }
    Ok(s.into_representation(repr))
}

/// `‖P_k |∇|^b f‖ / (2^{bk} ‖f‖)`, the Bernstein constant realized by `f`.
pub fn bernstein_ratio(f: &ComplexField, k: i32, b: f64) -> Result<f64> {
    let p = lp_project(f, k)?.into_spectral();
    let g = p.grid().clone();
    let num: f64 = p
        .data()
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let x = g.xi_at(idx);
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            (*z * Complex64::new(r2.powf(0.5 * b), 0.0)).norm_sqr()
        })
        .sum::<f64>()
        / g.volume();
    let den = f.l2_norm();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num.sqrt() / (2f64.powf(b * k as f64) * den))
}
