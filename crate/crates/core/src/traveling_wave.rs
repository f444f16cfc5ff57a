//! Inertial (traveling-wave) profiles, the zero-force identity, spatial decay
//! fits and the supersonic divergence scan.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, DecayFit};
use crate::potentials::{grid_spectrum, PotentialSpec};
use crate::spectral_core::{japanese, ComplexField, FourierGrid3, Representation};

/// Nodes with `|h_v|` below this are excluded from the sonic solve.
pub const SONIC_EXCLUSION: f64 = 1e-12;
/// Resonance-surface exclusion for the supersonic scan.
pub const SUPERSONIC_EXCLUSION: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subsonic,
    Sonic,
    Supersonic,
}

pub fn speed(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn regime(v: [f64; 3]) -> Regime {
    let s = speed(v);
    if (s - 1.0).abs() <= 1e-12 {
        Regime::Sonic
    } else if s < 1.0 {
        Regime::Subsonic
    } else {
        Regime::Supersonic
    }
}

/// Traveling-wave profile in diagonalized variables, `γ_v = U_r G_v`.
#[derive(Clone, Debug)]
pub struct WaveProfile {
    pub velocity: [f64; 3],
    pub regime: Regime,
    /// `Ĝ_v`, spectral representation.
    pub g: ComplexField,
    /// `min |h_v|` over the grid nodes other than the origin.
    pub min_abs_h_v: f64,
    /// Number of nodes excluded as near-resonant.
    pub excluded_nodes: usize,
}

impl WaveProfile {
    /// `γ̂_v = u Re Ĝ + i Im Ĝ`, spectral.
    pub fn gamma_spectral(&self) -> ComplexField {
        let grid = self.g.grid();
        let re = self.g.real_part();
        let im = self.g.imag_part();
        let data = (0..grid.len())
            .map(|idx| {
                let x = grid.xi_at(idx);
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                re.data()[idx] * (r / japanese(r)) + Complex64::new(0.0, 1.0) * im.data()[idx]
            })
            .collect();
        ComplexField::from_data(grid, data, Representation::Spectral).expect("same grid")
    }

    /// `γ_v` in physical space.
    pub fn gamma(&self) -> ComplexField {
        self.gamma_spectral().into_physical()
    }

    /// `Re γ_v` in physical space (imaginary samples are zero).
    pub fn gamma_re(&self) -> ComplexField {
        self.gamma().real_part()
    }

    /// `Im γ_v` in physical space, stored as real samples.
    pub fn gamma_im(&self) -> ComplexField {
        self.gamma().imag_part()
    }
}

/// Solves `H_v G = -W` on the grid: `Ĝ = -Ŵ/h_v`, origin set to zero.
pub fn solve_profile(v: [f64; 3], spec: &PotentialSpec, grid: &FourierGrid3) -> Result<WaveProfile> {
    let w_hat = grid_spectrum(spec, grid)?;
    solve_profile_with(v, &w_hat)
}

/// As [`solve_profile`], from a precomputed spectral potential.
pub fn solve_profile_with(v: [f64; 3], w_hat: &ComplexField) -> Result<WaveProfile> {
    if !v.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidArgument("velocity must be finite".into()));
    }
    let reg = regime(v);
    if reg == Regime::Supersonic {
        return Err(Error::InvalidArgument(format!(
            "|v| = {} > 1: no finite-energy profile; use supersonic_scan",
            speed(v)
        )));
    }
    if w_hat.representation() != Representation::Spectral {
        return Err(Error::InvalidArgument("potential must be spectral".into()));
    }
    let grid = w_hat.grid();
    let xi = grid.wavenumbers();
    let xd = grid.derivative_wavenumbers();
    let n = grid.n();
    let mut g = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut min_h = f64::INFINITY;
    let mut excluded = 0;
    let mut idx = 0;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                if idx != 0 {
                    let r = (xi[i] * xi[i] + xi[j] * xi[j] + xi[k] * xi[k]).sqrt();
                    let hv = r * japanese(r) - (v[0] * xd[i] + v[1] * xd[j] + v[2] * xd[k]);
                    min_h = min_h.min(hv.abs());
                    if hv.abs() < SONIC_EXCLUSION {
                        excluded += 1;
                    } else {
                        g[idx] = -w_hat.data()[idx] / hv;
                    }
                }
                idx += 1;
            }
        }
    }
    Ok(WaveProfile {
        velocity: v,
        regime: reg,
        g: ComplexField::from_data(grid, g, Representation::Spectral)?,
        min_abs_h_v: min_h,
        excluded_nodes: excluded,
    })
}

/// L² norm of `-i v·∇γ - (-Δγ + Re γ + W)`, evaluated spectrally without
/// the origin mode.
pub fn residual(profile: &WaveProfile, w_hat: &ComplexField) -> Result<f64> {
    profile.g.check_compatible(w_hat)?;
    let grid = w_hat.grid();
    let v = profile.velocity;
    let gamma = profile.gamma_spectral();
    let re_gamma = gamma.real_part();
    let s: f64 = (1..grid.len())
        .map(|idx| {
            let x = grid.xi_at(idx);
            let xd = grid.xi_d_at(idx);
            let vx = v[0] * xd[0] + v[1] * xd[1] + v[2] * xd[2];
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let lhs = gamma.data()[idx] * vx;
            let rhs = gamma.data()[idx] * r2 + re_gamma.data()[idx] + w_hat.data()[idx];
            (lhs - rhs).norm_sqr()
        })
        .sum();
    Ok((s / grid.volume()).sqrt())
}

/// `∫ ∇W(x - X) Re β(x) dx`, evaluated by Parseval with the translation
/// realized as a spectral phase.
pub fn force_on_particle(beta: &ComplexField, w_hat: &ComplexField, x: [f64; 3]) -> Result<[f64; 3]> {
    let b = beta.clone().into_spectral();
    b.check_compatible(w_hat)?;
    let re = b.real_part();
    let grid = w_hat.grid();
    let n = grid.n();
    let xd = grid.derivative_wavenumbers();
    let ph = grid.axis_phases(x);
    let mut f = [0.0; 3];
    let mut idx = 0;
    for k in 0..n {
        for j in 0..n {
            let pjk = ph[1][j] * ph[2][k];
            for i in 0..n {
                let a = w_hat.data()[idx] * ph[0][i] * pjk * re.data()[idx].conj();
                // Re(i ξ a) = -ξ Im a
                f[0] -= xd[i] * a.im;
                f[1] -= xd[j] * a.im;
                f[2] -= xd[k] * a.im;
                idx += 1;
            }
        }
    }
    let s = 1.0 / grid.volume();
    Ok([f[0] * s, f[1] * s, f[2] * s])
}

/// Least-squares fit of `log(shell-max |f|)` against `log⟨r⟩` over shells of
/// width `L/N` centered at `r0, r0 + L/N, ..` up to `r1`; each maximum is
/// placed at the radius where it is attained.
pub fn fit_spatial_decay(f: &ComplexField, window: [f64; 2]) -> Result<DecayFit> {
    let p = f.clone().into_physical();
    let grid = p.grid();
    let l = grid.box_length();
    if !(window[0] > 0.0 && window[0] < window[1] && window[1] <= 0.4 * l + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "fit window {:?} must lie in (0, 0.4 L]",
            window
        )));
    }
    let (r, m) = shell_max(&p, window);
    let lx: Vec<f64> = r.iter().map(|s| japanese(*s)).collect();
    loglog_fit(&lx, &m, window)
}

/// Shell maxima of `|f|` over `window`, shells of width `L/N` centered at
/// `r0, r0 + L/N, ..`; returns the radius attaining each maximum.
pub fn shell_max(f: &ComplexField, window: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let grid = f.grid();
    let dr = grid.dx();
    let count = ((window[1] - window[0]) / dr + 1e-9).floor() as usize + 1;
    let mut maxima = vec![0.0f64; count];
    let mut radii: Vec<f64> = (0..count).map(|c| window[0] + c as f64 * dr).collect();
    for (idx, z) in f.data().iter().enumerate() {
        let x = grid.position(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let s = ((r - window[0]) / dr + 0.5).floor();
        if s >= 0.0 && (s as usize) < count {
            let c = s as usize;
            let a = z.norm();
            if a > maxima[c] || (a == maxima[c] && r < radii[c]) {
                maxima[c] = a;
                radii[c] = r;
            }
        }
    }
    (radii, maxima)
}

/// Norm sequence of `Re γ_v` for a fixed mesh spacing and growing `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupersonicReport {
    pub velocity: [f64; 3],
    pub dx: f64,
    pub resolutions: Vec<usize>,
    pub norms: Vec<f64>,
    /// `norms[i+1] / norms[i]`.
    pub ratios: Vec<f64>,
    pub excluded_nodes: Vec<usize>,
    pub strictly_increasing: bool,
    /// `norms.last / norms.first`.
    pub growth: f64,
}

/// `‖Re γ_v‖_{L²}` with `Re γ̂_v = -Ŵ/(1 + |ξ|² - (v·ξ̂)²)` on boxes
/// `L = N dx`; nodes within `1e-8` of the resonance surface are excluded.
/// The same path runs for subsonic `v` as a convergent control.
pub fn supersonic_scan(
    v: [f64; 3],
    spec: &PotentialSpec,
    resolutions: &[usize],
    dx: f64,
) -> Result<SupersonicReport> {
    spec.validate()?;
    if resolutions.is_empty() || !(dx > 0.0) {
        return Err(Error::InvalidArgument("need resolutions and dx > 0".into()));
    }
    let mut norms = Vec::new();
    let mut excl = Vec::new();
    for &n in resolutions {
        let grid = FourierGrid3::new(n, n as f64 * dx)?;
        let xi = grid.wavenumbers();
        let mut s = 0.0;
        let mut e = 0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let x = [xi[i], xi[j], xi[k]];
                    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                    if r2 == 0.0 {
                        continue;
                    }
                    let vx = v[0] * x[0] + v[1] * x[1] + v[2] * x[2];
                    let den = 1.0 + r2 - vx * vx / r2;
                    if den.abs() < SUPERSONIC_EXCLUSION {
                        e += 1;
                        continue;
                    }
                    let g = spec.w_hat(x) / den;
                    s += g * g;
                }
            }
        }
        norms.push((s / grid.volume()).sqrt());
        excl.push(e);
    }
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(SupersonicReport {
        velocity: v,
        dx,
        resolutions: resolutions.to_vec(),
        strictly_increasing: norms.windows(2).all(|w| w[1] > w[0]),
        growth: norms[norms.len() - 1] / norms[0],
        norms,
        ratios,
        excluded_nodes: excl,
    })
}

/// Operator-norm ratios of the velocity-uniform resolvent bounds on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBoundSample {
    pub n: usize,
    pub box_length: f64,
    /// `‖U H_v^{-1} W‖_∞ / ‖W‖_2`.
    pub u_hv_inv: f64,
    /// `‖H_v^{-1} W‖_∞ / ‖W‖_2`.
    pub hv_inv: f64,
    /// `‖(H_v^{-1} - H_{v'}^{-1}) W‖_∞ / (|v - v'| ‖W‖_2)`.
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBoundsReport {
    pub v: [f64; 3],
    pub v_prime: [f64; 3],
    pub samples: Vec<UniformBoundSample>,
    /// All ratios finite and within ±10% between successive grids.
    pub stable: bool,
}

pub fn check_uniform_bounds(
    v: [f64; 3],
    v_prime: [f64; 3],
    spec: &PotentialSpec,
    grids: &[FourierGrid3],
) -> Result<UniformBoundsReport> {
    if speed(v) >= 1.0 || speed(v_prime) >= 1.0 {
        return Err(Error::InvalidArgument("velocities must be subsonic".into()));
    }
    let dv = speed([v[0] - v_prime[0], v[1] - v_prime[1], v[2] - v_prime[2]]);
    let mut samples = Vec::new();
    for grid in grids {
        let w_hat = grid_spectrum(spec, grid)?;
        let wn = w_hat.l2_norm();
        let g1 = solve_profile_with(v, &w_hat)?.g;
        let g2 = solve_profile_with(v_prime, &w_hat)?.g;
        let mut ug = g1.clone();
        for (idx, z) in ug.data_mut().iter_mut().enumerate() {
            let x = grid.xi_at(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            *z *= r / japanese(r);
        }
        let a = ug.into_physical().max_abs() / wn;
        let b = g1.clone().into_physical().max_abs() / wn;
        let c = if dv == 0.0 {
            0.0
        } else {
            g1.axpy(Complex64::new(-1.0, 0.0), &g2)?.into_physical().max_abs() / (dv * wn)
        };
        samples.push(UniformBoundSample {
            n: grid.n(),
            box_length: grid.box_length(),
            u_hv_inv: a,
            hv_inv: b,
            difference: c,
        });
    }
    let close = |x: f64, y: f64| {
        x.is_finite() && y.is_finite() && (x == y || (x - y).abs() <= 0.1 * x.abs().max(y.abs()))
    };
    let stable = samples.windows(2).all(|w| {
        close(w[0].u_hv_inv, w[1].u_hv_inv)
            && close(w[0].hv_inv, w[1].hv_inv)
            && close(w[0].difference, w[1].difference)
    }) && samples
        .iter()
        .all(|s| s.u_hv_inv.is_finite() && s.hv_inv.is_finite() && s.difference.is_finite());
    Ok(UniformBoundsReport {
        v,
        v_prime,
        samples,
        stable,
    })
}
