//! Memory kernel `M(t)` of the acceleration equation, its half-line Fourier
//! transform, the resolvent kernel `K`, the Volterra solve, the remainder
//! terms `r0, r1, r2`, and numerical verifiers for oscillatory-integral and
//! dispersive decay.
//!
//! Kernel integrals are continuum quadratures over ℝ³ in spherical
//! coordinates with the polar axis along `v0`; they never touch the FFT box.
//! Transforms are unitary: `Ŵ(ξ) = (2π)^{-3/2} ∫ W e^{-iξ·x} dx`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{wrap_horizon, Dynamics, Trajectory};
use crate::error::{Error, Result};
use crate::fit::{fit_temporal_decay, loglog_fit, DecayFit};
use crate::potentials::{w_hat_unitary, PotentialSpec};
use crate::spectral_core::{psi_k, resolvable_bands, ComplexField, Representation, SymbolFn};

type Mat3 = [[f64; 3]; 3];
type CMat3 = [[Complex64; 3]; 3];

const ZERO3: Mat3 = [[0.0; 3]; 3];

/// Max phase change across one 16-node Gauss–Legendre panel.
pub const PHASE_PER_PANEL: f64 = 20.0;

/// Relative discrepancy between the two `M̂` paths above which the
/// quadrature is reported as under-resolved.
pub const FOURIER_PATH_TOLERANCE: f64 = 1e-3;

/// Required bound on `‖M̂‖` at `|ω| = π/dt` for `compute_k`.
pub const EDGE_LIMIT: f64 = 1e-3;

/// Causality residual above which `compute_K` fails.
pub const CAUSALITY_LIMIT: f64 = 1e-6;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn composite(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut x = Vec::with_capacity((breaks.len() - 1) * order);
    let mut w = Vec::with_capacity(x.capacity());
    for p in breaks.windows(2) {
        let (a, b) = (p[0], p[1]);
        let half = 0.5 * (b - a);
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(a + half * (xi + 1.0));
            w.push(half * wi);
        }
    }
    (x, w)
}

/// Node layout of a [`SphericalQuadrature`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Radial cutoff.
    pub r_max: f64,
    /// Uniform radial panels above the graded region.
    pub radial_panels: usize,
    /// Geometric refinement levels towards the origin.
    pub grading_levels: usize,
    pub nodes_per_panel: usize,
    /// `cos θ` panels at the outermost radius; inner shells use fewer.
    pub cos_panels: usize,
    /// Trapezoid nodes in the azimuth.
    pub n_phi: usize,
}

impl QuadratureSettings {
    /// Settings resolving `e^{-i t h_v}` for `t ≤ t_max` with Gaussian-type
    /// weights negligible beyond `r_max`.
    pub fn for_oscillation(r_max: f64, t_max: f64, speed: f64) -> Self {
        let slope = (1.0 + 2.0 * r_max * r_max) / (1.0 + r_max * r_max).sqrt() + speed;
        let radial = ((t_max * r_max * slope / PHASE_PER_PANEL).ceil() as usize).max(16);
        let cos = ((t_max * speed * r_max * 2.0 / PHASE_PER_PANEL).ceil() as usize).max(2);
        Self {
            r_max,
            radial_panels: radial,
            grading_levels: 8,
            nodes_per_panel: 16,
            cos_panels: cos,
            n_phi: 1,
        }
    }

    /// Non-oscillatory settings for resolvent-type integrals.
    pub fn smooth(r_max: f64) -> Self {
        Self {
            r_max,
            radial_panels: 48,
            grading_levels: 12,
            nodes_per_panel: 16,
            cos_panels: 4,
            n_phi: 1,
        }
    }
}

/// Product rule in `(ρ, cos θ, φ)` about a polar axis. Radial panels are
/// geometrically refined towards `ρ = 0`; the number of `cos θ` panels grows
/// with the shell radius.
#[derive(Clone, Debug)]
pub struct SphericalQuadrature {
    settings: QuadratureSettings,
    /// Rows are the frame vectors `e1, e2, e3`; `e3` is the polar axis.
    frame: Mat3,
    radial_breaks: Vec<f64>,
    /// `(ρ, c, w)` with `w` including `ρ²` and the full `φ` measure `2π`.
    nodes: Vec<[f64; 3]>,
}

fn frame_for(axis: [f64; 3]) -> Mat3 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if n == 0.0 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let a = [axis[0] / n, axis[1] / n, axis[2] / n];
    for k in 0..3 {
        if (a[k].abs() - 1.0).abs() < 1e-15 {
            let s = a[k].signum();
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let mut e1 = [0.0; 3];
            let mut e2 = [0.0; 3];
            let mut e3 = [0.0; 3];
            e1[i] = 1.0;
            e2[j] = s;
            e3[k] = s;
            return [e1, e2, e3];
        }
    }
    let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = helper[0] * a[0] + helper[1] * a[1] + helper[2] * a[2];
    let mut e1 = [helper[0] - d * a[0], helper[1] - d * a[1], helper[2] - d * a[2]];
    let m = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = [e1[0] / m, e1[1] / m, e1[2] / m];
    let e2 = [
        a[1] * e1[2] - a[2] * e1[1],
        a[2] * e1[0] - a[0] * e1[2],
        a[0] * e1[1] - a[1] * e1[0],
    ];
    [e1, e2, a]
}

impl SphericalQuadrature {
    pub fn new(settings: QuadratureSettings, axis: [f64; 3]) -> Result<Self> {
        let s = &settings;
        if !(s.r_max > 0.0 && s.r_max.is_finite())
            || s.radial_panels == 0
            || s.nodes_per_panel == 0
            || s.cos_panels == 0
            || s.n_phi == 0
        {
            return Err(Error::InvalidArgument(format!("invalid quadrature settings {s:?}")));
        }
        let rg = (s.r_max / s.radial_panels as f64).min(0.5 * s.r_max);
        let mut breaks = vec![0.0];
        for k in (0..s.grading_levels).rev() {
            breaks.push(rg * 0.5f64.powi(k as i32 + 1));
        }
        let width = (s.r_max - rg) / s.radial_panels as f64;
        for p in 0..=s.radial_panels {
            breaks.push(rg + width * p as f64);
        }
        let (gx, gw) = gauss_legendre(s.nodes_per_panel);
        let mut nodes = Vec::new();
        for p in breaks.windows(2) {
            let (a, b) = (p[0], p[1]);
            let nc = ((s.cos_panels as f64 * b / s.r_max).ceil() as usize).clamp(2, s.cos_panels.max(2));
            let cbreaks: Vec<f64> = (0..=nc).map(|i| -1.0 + 2.0 * i as f64 / nc as f64).collect();
            let (cx, cw) = composite(&cbreaks, s.nodes_per_panel);
            let half = 0.5 * (b - a);
            for (xi, wi) in gx.iter().zip(&gw) {
                let r = a + half * (xi + 1.0);
                let wr = half * wi * r * r * 2.0 * PI;
                for (c, wc) in cx.iter().zip(&cw) {
                    nodes.push([r, *c, wr * wc]);
                }
            }
        }
        Ok(Self {
            frame: frame_for(axis),
            radial_breaks: breaks,
            nodes,
            settings,
        })
    }

    pub fn settings(&self) -> &QuadratureSettings {
        &self.settings
    }

    pub fn frame(&self) -> Mat3 {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.nodes.len() * self.settings.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Same nodes about a new polar axis.
    pub fn oriented(&self, axis: [f64; 3]) -> Self {
        let mut q = self.clone();
        q.frame = frame_for(axis);
        q
    }

    fn lab(&self, rho: f64, c: f64, phi: f64) -> [f64; 3] {
        let s = (1.0 - c * c).max(0.0).sqrt();
        let f = [rho * s * phi.cos(), rho * s * phi.sin(), rho * c];
        let e = &self.frame;
        [
            f[0] * e[0][0] + f[1] * e[1][0] + f[2] * e[2][0],
            f[0] * e[0][1] + f[1] * e[1][1] + f[2] * e[2][1],
            f[0] * e[0][2] + f[1] * e[1][2] + f[2] * e[2][2],
        ]
    }

    fn phis(&self) -> Vec<f64> {
        let n = self.settings.n_phi;
        (0..n).map(|k| 2.0 * PI * (k as f64 + 0.5) / n as f64).collect()
    }

    /// `∫_{|ξ| ≤ r_max} f(ξ) dξ`.
    pub fn integrate<F: Fn([f64; 3]) -> f64 + Sync>(&self, f: F) -> f64 {
        let phis = self.phis();
        let wphi = 1.0 / phis.len() as f64;
        self.nodes
            .iter()
            .map(|[r, c, w]| phis.iter().map(|&p| f(self.lab(*r, *c, p))).sum::<f64>() * w * wphi)
            .sum()
    }

    /// Largest phase change of `e^{-i t h_v}` across a single panel.
    pub fn max_phase_per_panel(&self, t: f64, speed: f64) -> f64 {
        let h = |r: f64| r * (1.0 + r * r).sqrt() + speed * r;
        let radial = self
            .radial_breaks
            .windows(2)
            .map(|p| t * (h(p[1]) - h(p[0])))
            .fold(0.0, f64::max);
        let nc = self.settings.cos_panels.max(2) as f64;
        let angular = t * speed * self.settings.r_max * 2.0 / nc;
        radial.max(angular) * 16.0 / self.settings.nodes_per_panel as f64
    }
}

/// Sampled `M_ij(t_k)`, `t_k = k dt`.
#[derive(Clone, Debug)]
pub struct MemoryKernel {
    pub dt: f64,
    pub samples: Vec<Mat3>,
    pub v0: [f64; 3],
    pub spec: Option<PotentialSpec>,
    pub quadrature: Option<QuadratureSettings>,
    pub warnings: Vec<String>,
}

fn frob(m: &Mat3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

impl MemoryKernel {
    /// Kernel given directly by samples (no quadrature; closed-form
    /// transforms unavailable).
    pub fn from_samples(dt: f64, samples: Vec<Mat3>) -> Result<Self> {
        if !(dt > 0.0) || samples.is_empty() {
            return Err(Error::InvalidArgument("kernel needs dt > 0 and samples".into()));
        }
        Ok(Self {
            dt,
            samples,
            v0: [0.0; 3],
            spec: None,
            quadrature: None,
            warnings: Vec::new(),
        })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn component(&self, i: usize, j: usize) -> Vec<f64> {
        self.samples.iter().map(|m| m[i][j]).collect()
    }

    pub fn frobenius(&self) -> Vec<f64> {
        self.samples.iter().map(frob).collect()
    }

    /// `max |M_ij| (i ≠ j) / max |M_ii|` over all samples.
    pub fn offdiag_ratio(&self) -> f64 {
        let mut off: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for m in &self.samples {
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        diag = diag.max(m[i][j].abs());
                    } else {
                        off = off.max(m[i][j].abs());
                    }
                }
            }
        }
        if diag > 0.0 {
            off / diag
        } else {
            0.0
        }
    }

    /// `max |M_ij - M_ji|` over samples.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for m in &self.samples {
            for i in 0..3 {
                for j in 0..3 {
                    d = d.max((m[i][j] - m[j][i]).abs());
                }
            }
        }
        d
    }

    /// Log–log fit of `|M_ij|` against `1 + t` on `window`.
    pub fn decay_fit(&self, i: usize, j: usize, window: [f64; 2]) -> Result<DecayFit> {
        let a: Vec<f64> = self.component(i, j).iter().map(|x| x.abs()).collect();
        fit_temporal_decay(&self.times(), &a, window)
    }
}

fn check_subsonic(v: [f64; 3]) -> Result<f64> {
    let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(s < 1.0) {
        return Err(Error::InvalidArgument(format!("velocity must be subsonic, |v| = {s}")));
    }
    Ok(s)
}

#[inline]
fn disp(r: f64, c: f64, speed: f64) -> f64 {
    r * ((1.0 + r * r).sqrt() - speed * c)
}

#[inline]
fn disp_deriv(r: f64, c: f64, speed: f64) -> f64 {
    (1.0 + 2.0 * r * r) / (1.0 + r * r).sqrt() - speed * c
}

/// Radial cutoff at which `|Ŵ|²` has fallen below `1e-14` of its peak.
pub fn radial_cutoff(spec: &PotentialSpec) -> f64 {
    let peak = (0..200)
        .map(|k| w_hat_unitary(spec, [0.0, 0.0, 0.05 * k as f64]).abs())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return 1.0;
    }
    let mut r = 1.0;
    while r < 200.0 {
        let tail = (0..20)
            .map(|k| w_hat_unitary(spec, [0.0, 0.0, r + 0.25 * k as f64]).abs())
            .fold(0.0, f64::max);
        if tail < 1e-7 * peak {
            return r;
        }
        r += 0.25;
    }
    r
}

/// `M_ij(t) = ∫ ξ_i ξ_j |Ŵ|² u h_{v0}^{-2} sin(t h_{v0}) dξ` on `t_k = k dt`,
/// `k = 0..=k_max`. Spherically symmetric potentials use the analytic
/// azimuthal tensor weights; others integrate the azimuth numerically.
pub fn compute_m(
    v0: [f64; 3],
    spec: &PotentialSpec,
    dt: f64,
    k_max: usize,
    quad: &SphericalQuadrature,
) -> Result<MemoryKernel> {
    let speed = check_subsonic(v0)?;
    spec.validate()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let quad = quad.oriented(v0);
    let t_max = dt * k_max as f64;
    let mut warnings = Vec::new();
    let phase = quad.max_phase_per_panel(t_max, speed);
    if phase > PHASE_PER_PANEL * 1.25 {
        warnings.push(format!(
            "radial oscillation under-resolved at t = {t_max}: {phase:.1} rad per panel"
        ));
    }
    let nk = k_max + 1;
    let spherical = spec.is_spherically_symmetric();
    if !spherical && quad.settings.n_phi < 4 {
        warnings.push(format!("only {} azimuthal nodes for a non-radial potential", quad.settings.n_phi));
    }
    let frame = quad.frame;
    let phis = quad.phis();
    let chunks: Vec<&[[f64; 3]]> = quad.nodes.chunks(2048).collect();
    let partial: Vec<Vec<[f64; 6]>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut acc = vec![[0.0; 6]; nk];
            for &[r, c, w] in chunk.iter() {
                let h = disp(r, c, speed);
                if h <= 0.0 {
                    continue;
                }
                let u = r / (1.0 + r * r).sqrt();
                let step = Complex64::from_polar(1.0, dt * h);
                let mut coef = [0.0; 6];
                if spherical {
                    let wh = w_hat_unitary(spec, [0.0, 0.0, r]);
                    let base = w * r * r * u * wh * wh / (h * h);
                    let perp = 0.5 * (1.0 - c * c) * base;
                    let par = c * c * base;
                    let d = [perp, perp, par];
                    let mut k = 0;
                    for i in 0..3 {
                        for j in i..3 {
                            coef[k] = (0..3).map(|a| frame[a][i] * frame[a][j] * d[a]).sum();
                            k += 1;
                        }
                    }
                } else {
                    for &p in &phis {
                        let x = quad.lab(r, c, p);
                        let wh = w_hat_unitary(spec, x);
                        let base = w / phis.len() as f64 * u * wh * wh / (h * h);
                        let mut k = 0;
                        for i in 0..3 {
                            for j in i..3 {
                                coef[k] += base * x[i] * x[j];
                                k += 1;
                            }
                        }
                    }
                }
                let mut z = Complex64::new(1.0, 0.0);
                for a in acc.iter_mut() {
                    let s = z.im;
                    for q in 0..6 {
                        a[q] += coef[q] * s;
                    }
                    z *= step;
                }
            }
            acc
        })
        .collect();
    let mut samples = vec![ZERO3; nk];
    for part in &partial {
        for (m, a) in samples.iter_mut().zip(part) {
            let mut k = 0;
            for i in 0..3 {
                for j in i..3 {
                    m[i][j] += a[k];
                    k += 1;
                }
            }
        }
    }
    for m in samples.iter_mut() {
        for i in 0..3 {
            for j in 0..i {
                m[i][j] = m[j][i];
            }
        }
    }
    Ok(MemoryKernel {
        dt,
        samples,
        v0,
        spec: Some(spec.clone()),
        quadrature: Some(quad.settings.clone()),
        warnings,
    })
}

/// `compute_m` with quadrature chosen from the potential and `t_max`.
pub fn compute_m_auto(v0: [f64; 3], spec: &PotentialSpec, dt: f64, k_max: usize) -> Result<MemoryKernel> {
    let speed = check_subsonic(v0)?;
    let mut settings = QuadratureSettings::for_oscillation(radial_cutoff(spec), dt * k_max as f64, speed);
    if !spec.is_spherically_symmetric() {
        settings.n_phi = 16;
    }
    let quad = SphericalQuadrature::new(settings, v0)?;
    compute_m(v0, spec, dt, k_max, &quad)
}

fn to_cmat(m: &Matrix3<Complex64>) -> CMat3 {
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[(i, j)];
        }
    }
    out
}

fn cfrob(m: &Matrix3<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Path A: trapezoidal half-line transform `∫_0^∞ M(t) e^{-izt} dt`,
/// `z = ω - i y`, from the samples with the Euler–Maclaurin endpoint term
/// `dt²/12 · f'(0)`, `f'(0)` by a one-sided three-point difference.
pub fn mhat_discrete(kern: &MemoryKernel, omega: f64, y: f64) -> Matrix3<Complex64> {
    let dt = kern.dt;
    let mut out = Matrix3::<Complex64>::zeros();
    let step = Complex64::from_polar((-y * dt).exp(), -omega * dt);
    let mut z = Complex64::new(1.0, 0.0);
    for (k, m) in kern.samples.iter().enumerate() {
        let w = if k == 0 { 0.5 } else { 1.0 };
        for i in 0..3 {
            for j in 0..3 {
                out[(i, j)] += z * (w * m[i][j]);
            }
        }
        z *= step;
    }
    out *= Complex64::new(dt, 0.0);
    let s = &kern.samples;
    if s.len() >= 3 {
        let zc = Complex64::new(omega, -y);
        for i in 0..3 {
            for j in 0..3 {
                let d = (-3.0 * s[0][i][j] + 4.0 * s[1][i][j] - s[2][i][j]) / (2.0 * dt);
                let fp = Complex64::new(d, 0.0) - Complex64::i() * zc * s[0][i][j];
                out[(i, j)] += fp * (dt * dt / 12.0);
            }
        }
    }
    out
}

/// `∫_0^{R} g(ρ) / (h(ρ) - a - i s y) dρ`, with the `y → 0⁺` limit taken as
/// principal value plus `i s π g(ρ*) / h'(ρ*)` at the root `h(ρ*) = a`.
fn radial_resolvent<G: Fn(f64) -> f64>(
    rx: &[f64],
    rw: &[f64],
    r_max: f64,
    g: G,
    c: f64,
    speed: f64,
    a: f64,
    s: f64,
    y: f64,
) -> Complex64 {
    if y > 1e-9 {
        return rx
            .iter()
            .zip(rw)
            .map(|(&r, &w)| Complex64::new(w * g(r), 0.0) / Complex64::new(disp(r, c, speed) - a, -s * y))
            .sum();
    }
    let h_end = disp(r_max, c, speed);
    if a <= 0.0 || h_end <= a {
        return Complex64::new(
            rx.iter()
                .zip(rw)
                .map(|(&r, &w)| w * g(r) / (disp(r, c, speed) - a))
                .sum(),
            0.0,
        );
    }
    let (mut lo, mut hi) = (0.0, r_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if disp(mid, c, speed) < a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * r_max {
            break;
        }
    }
    let rs = 0.5 * (lo + hi);
    let gs = g(rs);
    let ds = disp_deriv(rs, c, speed);
    let ratio = gs / ds;
    let pv: f64 = rx
        .iter()
        .zip(rw)
        .map(|(&r, &w)| {
            let den = disp(r, c, speed) - a;
            w * (g(r) - ratio * disp_deriv(r, c, speed)) / den
        })
        .sum::<f64>()
        + ratio * ((h_end - a) / a).ln();
    Complex64::new(pv, s * PI * ratio)
}

/// Path B: `M̂_ij(z) = ½ ∫ ξ_i ξ_j |Ŵ|² u h^{-2} [(h + z)^{-1} + (h - z)^{-1}] dξ`.
pub fn mhat_closed_form(v0: [f64; 3], spec: &PotentialSpec, omega: f64, y: f64) -> Result<Matrix3<Complex64>> {
    let speed = check_subsonic(v0)?;
    let r_max = radial_cutoff(spec);
    let set = QuadratureSettings::smooth(r_max);
    let quad = SphericalQuadrature::new(set.clone(), v0)?;
    let (gx, gw) = gauss_legendre(set.nodes_per_panel);
    let (rx, rw) = {
        let mut x = Vec::new();
        let mut w = Vec::new();
        for p in quad.radial_breaks.windows(2) {
            let half = 0.5 * (p[1] - p[0]);
            for (a, b) in gx.iter().zip(&gw) {
                x.push(p[0] + half * (a + 1.0));
                w.push(half * b);
            }
        }
        (x, w)
    };
    let (cx, cw) = composite(
        &(0..=8).map(|i| -1.0 + 0.25 * i as f64).collect::<Vec<_>>(),
        16,
    );
    let frame = quad.frame;
    let spherical = spec.is_spherically_symmetric();
    let n_phi = if spherical { 1 } else { 16 };
    let phis: Vec<f64> = (0..n_phi).map(|k| 2.0 * PI * (k as f64 + 0.5) / n_phi as f64).collect();
    let mut out = Matrix3::<Complex64>::zeros();
    for (&c, &wc) in cx.iter().zip(&cw) {
        for &phi in &phis {
            let dir = quad.lab(1.0, c, phi);
            let mut terms = Complex64::new(0.0, 0.0);
            let mut angular = [[0.0; 3]; 3];
            if spherical {
                let d = [PI * (1.0 - c * c), PI * (1.0 - c * c), 2.0 * PI * c * c];
                for i in 0..3 {
                    for j in 0..3 {
                        angular[i][j] = (0..3).map(|a| frame[a][i] * frame[a][j] * d[a]).sum();
                    }
                }
            } else {
                for i in 0..3 {
                    for j in 0..3 {
                        angular[i][j] = dir[i] * dir[j] * 2.0 * PI / n_phi as f64;
                    }
                }
            }
            let g = |r: f64| {
                let wh = w_hat_unitary(spec, [dir[0] * r, dir[1] * r, dir[2] * r]);
                let h = disp(r, c, speed);
                let u = r / (1.0 + r * r).sqrt();
                r.powi(4) * u * wh * wh / (h * h)
            };
            for s in [1.0, -1.0] {
                // (h + s z)^{-1} = (h - a - i s y)^{-1}, a = -s ω
                terms += radial_resolvent(&rx, &rw, r_max, g, c, speed, -s * omega, s, y);
            }
            let scale = 0.5 * wc;
            for i in 0..3 {
                for j in 0..3 {
                    out[(i, j)] += terms * (scale * angular[i][j]);
                }
            }
        }
    }
    Ok(out)
}

/// Both evaluation paths of `M̂(ω - i y)` and their relative discrepancy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierMReport {
    pub omega: f64,
    pub y: f64,
    pub path_a: CMat3,
    pub path_b: CMat3,
    pub discrepancy: f64,
    /// Discrepancy above [`FOURIER_PATH_TOLERANCE`].
    pub resolution_failure: bool,
}

pub fn fourier_m(kern: &MemoryKernel, omega: f64, y: f64) -> Result<FourierMReport> {
    if !(omega.is_finite() && y >= 0.0 && y.is_finite()) {
        return Err(Error::InvalidArgument("z must lie in the closed lower half-plane".into()));
    }
    let spec = kern
        .spec
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("closed form needs the potential".into()))?;
    let a = mhat_discrete(kern, omega, y);
    let b = mhat_closed_form(kern.v0, spec, omega, y)?;
    let disc = cfrob(&(a - b)) / cfrob(&b).max(f64::MIN_POSITIVE);
    Ok(FourierMReport {
        omega,
        y,
        path_a: to_cmat(&a),
        path_b: to_cmat(&b),
        discrepancy: disc,
        resolution_failure: disc > FOURIER_PATH_TOLERANCE,
    })
}

/// Log–log fit of `‖M̂(ω)‖` (closed form) against `1 + ω` on `omegas`.
pub fn mhat_tail_fit(v0: [f64; 3], spec: &PotentialSpec, omegas: &[f64]) -> Result<DecayFit> {
    let vals: Vec<f64> = omegas
        .iter()
        .map(|&w| mhat_closed_form(v0, spec, w, 0.0).map(|m| cfrob(&m)))
        .collect::<Result<_>>()?;
    let lo = omegas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = omegas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let a: Vec<f64> = omegas.iter().map(|w| 1.0 + w).collect();
    loglog_fit(&a, &vals, [lo, hi])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvertibilityRecord {
    pub omega: f64,
    /// Eigenvalues of the Hermitian part `(M̂ + M̂*)/2`.
    pub hermitian_eigenvalues: [f64; 3],
    /// Eigenvalues of `(M̂ - M̂*)/(2i)`.
    pub imaginary_eigenvalues: [f64; 3],
    /// Eigenvalue moduli of `1 + M̂`.
    pub one_plus_eigenvalues: [f64; 3],
    pub det: Complex64,
    pub abs_det: f64,
    /// Definiteness with the expected sign: `M̂(0) > 0`, `Im M̂ < 0` for
    /// `ω > 0`, `Im M̂ > 0` for `ω < 0`.
    pub sign_ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvertibilityReport {
    pub records: Vec<InvertibilityRecord>,
    pub min_abs_det: f64,
    pub all_signs_ok: bool,
}

fn sym_eigs(m: Matrix3<f64>) -> [f64; 3] {
    let e = SymmetricEigen::new(m).eigenvalues;
    let mut v = [e[0], e[1], e[2]];
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn invertibility_record(mhat: &Matrix3<Complex64>, omega: f64) -> InvertibilityRecord {
    let adj = mhat.adjoint();
    let herm = (mhat + adj).map(|z| z.re * 0.5);
    let imag = (mhat - adj).map(|z| z.im * 0.5);
    let he = sym_eigs(herm);
    let ie = sym_eigs(imag);
    let one = Matrix3::<Complex64>::identity() + mhat;
    let det = one.determinant();
    let mut ope = [0.0; 3];
    if let Some(ev) = one.eigenvalues() {
        for k in 0..3 {
            ope[k] = ev[k].norm();
        }
    } else {
        let se = one.clone().schur().eigenvalues();
        if let Some(ev) = se {
            for k in 0..3 {
                ope[k] = ev[k].norm();
            }
        }
    }
    let sign_ok = if omega == 0.0 {
        he[0] > 0.0
    } else if omega > 0.0 {
        ie[2] < 0.0
    } else {
        ie[0] > 0.0
    };
    InvertibilityRecord {
        omega,
        hermitian_eigenvalues: he,
        imaginary_eigenvalues: ie,
        one_plus_eigenvalues: ope,
        det,
        abs_det: det.norm(),
        sign_ok,
    }
}

/// Certificate that `1 + M̂(ω)` is invertible on `omegas` (closed form).
pub fn check_invertibility(kern: &MemoryKernel, omegas: &[f64]) -> Result<InvertibilityReport> {
    let spec = kern
        .spec
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("closed form needs the potential".into()))?;
    if omegas.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument("frequencies must be finite".into()));
    }
    let records: Vec<InvertibilityRecord> = omegas
        .par_iter()
        .map(|&w| mhat_closed_form(kern.v0, spec, w, 0.0).map(|m| invertibility_record(&m, w)))
        .collect::<Result<_>>()?;
    let min_abs_det = records.iter().map(|r| r.abs_det).fold(f64::INFINITY, f64::min);
    let all_signs_ok = records.iter().all(|r| r.sign_ok);
    Ok(InvertibilityReport {
        records,
        min_abs_det,
        all_signs_ok,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelDerivation {
    FourierInversion,
    VolterraResolvent,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolventKernel {
    pub dt: f64,
    pub samples: Vec<Mat3>,
    pub derivation: KernelDerivation,
    /// `max_{t<0} ‖K(t)‖ / max_t ‖K(t)‖` of the reconstruction.
    pub causality_residual: f64,
    pub peak: f64,
    pub omega_max: f64,
    pub d_omega: f64,
    /// `‖M̂‖` at the edge of the frequency grid.
    pub edge_mhat: f64,
    /// Max difference from the time-domain resolvent relative to its peak.
    pub volterra_discrepancy: Option<f64>,
}

impl ResolventKernel {
    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn frobenius(&self) -> Vec<f64> {
        self.samples.iter().map(frob).collect()
    }

    pub fn decay_fit(&self, window: [f64; 2]) -> Result<DecayFit> {
        fit_temporal_decay(&self.times(), &self.frobenius(), window)
    }
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = ZERO3;
    for i in 0..3 {
        for k in 0..3 {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..3 {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

fn mat_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

fn inverse3(a: &Mat3) -> Result<Mat3> {
    let m = Matrix3::from_fn(|i, j| a[i][j]);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::NumericalGuard("singular 3x3 system in Volterra step".into()))?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
}

/// Time-domain resolvent `K + M + M∗K = 0`, trapezoidal in time.
pub fn resolvent_time_domain(kern: &MemoryKernel) -> Result<ResolventKernel> {
    let dt = kern.dt;
    let m = &kern.samples;
    let n = m.len();
    let mut implicit = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            implicit[i][j] = 0.5 * dt * m[0][i][j] + if i == j { 1.0 } else { 0.0 };
        }
    }
    let inv = inverse3(&implicit)?;
    let mut k: Vec<Mat3> = Vec::with_capacity(n);
    let mut k0 = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            k0[i][j] = -m[0][i][j];
        }
    }
    k.push(k0);
    for step in 1..n {
        let mut rhs = ZERO3;
        let half = mat_mul(&m[step], &k[0]);
        for j in 1..step {
            let p = mat_mul(&m[step - j], &k[j]);
            for a in 0..3 {
                for b in 0..3 {
                    rhs[a][b] += p[a][b];
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                rhs[a][b] = -m[step][a][b] - dt * (rhs[a][b] + 0.5 * half[a][b]);
            }
        }
        k.push(mat_mul(&inv, &rhs));
    }
    let peak = k.iter().map(frob).fold(0.0, f64::max);
    Ok(ResolventKernel {
        dt,
        samples: k,
        derivation: KernelDerivation::VolterraResolvent,
        causality_residual: 0.0,
        peak,
        omega_max: PI / dt,
        d_omega: 0.0,
        edge_mhat: 0.0,
        volterra_discrepancy: None,
    })
}

/// `K(t) = -(2π)^{-1} ∫ M̂ (1 + M̂)^{-1} e^{iωt} dω` on the uniform frequency
/// grid of a zero-padded discrete transform (`Δω = 2π / (n_pad dt)`,
/// `|ω| ≤ π/dt`), with `n_pad ≥ pad · (k_max + 1)`.
pub fn compute_k(kern: &MemoryKernel, pad: usize) -> Result<ResolventKernel> {
    let dt = kern.dt;
    let nk = kern.samples.len();
    let n = (pad.max(2) * nk).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut mh: Vec<Vec<Complex64>> = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for (k, m) in kern.samples.iter().enumerate() {
                let w = if k == 0 { 0.5 } else { 1.0 };
                buf[k] = Complex64::new(w * dt * m[i][j], 0.0);
            }
            fwd.process(&mut buf);
            mh.push(buf);
        }
    }
    let mut kh: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 9];
    let mut edge: f64 = 0.0;
    for f in 0..n {
        let m = Matrix3::from_fn(|i, j| mh[3 * i + j][f]);
        if f == n / 2 {
            edge = cfrob(&m);
        }
        let one = Matrix3::<Complex64>::identity() + m;
        let oinv = one
            .try_inverse()
            .ok_or_else(|| Error::NumericalGuard(format!("1 + M̂ singular at grid index {f}")))?;
        let r = -(m * oinv);
        for i in 0..3 {
            for j in 0..3 {
                kh[3 * i + j][f] = r[(i, j)];
            }
        }
    }
    if edge >= EDGE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "|M̂| = {edge:.2e} at the frequency grid edge π/dt; reduce dt"
        )));
    }
    for buf in kh.iter_mut() {
        inv.process(buf);
    }
    let scale = 1.0 / (n as f64 * dt);
    let at = |k: usize| -> Mat3 {
        std::array::from_fn(|i| std::array::from_fn(|j| kh[3 * i + j][k].re * scale))
    };
    let samples: Vec<Mat3> = (0..nk).map(at).collect();
    let peak = (0..n / 2).map(|k| frob(&at(k))).fold(0.0, f64::max);
    let neg = (n / 2..n).map(|k| frob(&at(k))).fold(0.0, f64::max);
    let causality = if peak > 0.0 { neg / peak } else { 0.0 };
    let td = resolvent_time_domain(kern)?;
    let tpeak = td.peak.max(f64::MIN_POSITIVE);
    let disc = samples
        .iter()
        .zip(&td.samples)
        .map(|(a, b)| {
            let mut d = ZERO3;
            for i in 0..3 {
                for j in 0..3 {
                    d[i][j] = a[i][j] - b[i][j];
                }
            }
            frob(&d)
        })
        .fold(0.0, f64::max)
        / tpeak;
    if causality > CAUSALITY_LIMIT {
        return Err(Error::NumericalGuard(format!(
            "resolvent causality residual {causality:.3e} exceeds {CAUSALITY_LIMIT:.0e}; widen the padding"
        )));
    }
    Ok(ResolventKernel {
        dt,
        samples,
        derivation: KernelDerivation::FourierInversion,
        causality_residual: causality,
        peak,
        omega_max: PI / dt,
        d_omega: 2.0 * PI / (n as f64 * dt),
        edge_mhat: edge,
        volterra_discrepancy: Some(if td.peak > 0.0 { disc } else { 0.0 }),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolterraSolution {
    pub dt: f64,
    /// Direct solve of `v̇ = r - M ∗ v̇`.
    pub vdot: Vec<[f64; 3]>,
    /// `v̇ = r + K ∗ r`.
    pub vdot_kform: Vec<[f64; 3]>,
    /// `max_k |v̇ - v̇_K| / max_k |v̇|`.
    pub discrepancy: f64,
}

fn conv_trap(kern: &[Mat3], x: &[[f64; 3]], k: usize, dt: f64) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for j in 0..=k {
        let w = if j == 0 || j == k { 0.5 } else { 1.0 };
        if k == 0 {
            break;
        }
        let p = mat_vec(&kern[k - j], &x[j]);
        for a in 0..3 {
            acc[a] += w * p[a];
        }
    }
    acc.map(|a| a * dt)
}

/// Trapezoidal forward substitution for `v̇ = r - ∫_0^t M(t-s) v̇_s ds`,
/// with the resolvent form for comparison.
pub fn solve_volterra(kern: &MemoryKernel, r: &[[f64; 3]]) -> Result<VolterraSolution> {
    let dt = kern.dt;
    let n = r.len();
    if n > kern.samples.len() {
        return Err(Error::InvalidArgument(format!(
            "forcing has {n} samples, kernel only {}",
            kern.samples.len()
        )));
    }
    let m = &kern.samples;
    let mut implicit = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            implicit[i][j] = 0.5 * dt * m[0][i][j] + if i == j { 1.0 } else { 0.0 };
        }
    }
    let inv = inverse3(&implicit)?;
    let mut v: Vec<[f64; 3]> = Vec::with_capacity(n);
    for k in 0..n {
        let mut rhs = r[k];
        if k > 0 {
            let mut acc = [0.0; 3];
            for j in 0..k {
                let w = if j == 0 { 0.5 } else { 1.0 };
                let p = mat_vec(&m[k - j], &v[j]);
                for a in 0..3 {
                    acc[a] += w * p[a];
                }
            }
            for a in 0..3 {
                rhs[a] -= dt * acc[a];
            }
        }
        v.push(if k == 0 { r[0] } else { mat_vec(&inv, &rhs) });
    }
    let trimmed = MemoryKernel::from_samples(dt, m[..n].to_vec())?;
    let kk = resolvent_time_domain(&trimmed)?;
    let vk: Vec<[f64; 3]> = (0..n)
        .map(|k| {
            let c = conv_trap(&kk.samples, r, k, dt);
            [r[k][0] + c[0], r[k][1] + c[1], r[k][2] + c[2]]
        })
        .collect();
    let norm = |x: &[f64; 3]| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let scale = v.iter().map(norm).fold(0.0, f64::max);
    let diff = v
        .iter()
        .zip(&vk)
        .map(|(a, b)| norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]))
        .fold(0.0, f64::max);
    Ok(VolterraSolution {
        dt,
        vdot: v,
        vdot_kform: vk,
        discrepancy: if scale > 0.0 { diff / scale } else { 0.0 },
    })
}

/// `r0(t) = Re ⟨∇W^{X_t}, U e^{-iHt} D0⟩` for spectral `D0`.
pub fn compute_r0(dynamics: &Dynamics, t: f64, d0: &ComplexField, x_t: [f64; 3]) -> Result<[f64; 3]> {
    if d0.grid() != dynamics.grid() {
        return Err(Error::GridMismatch);
    }
    let d = d0.clone().into_spectral();
    let evolved: Vec<Complex64> = d
        .data()
        .iter()
        .zip(dynamics.dispersion())
        .map(|(z, h)| z * Complex64::from_polar(1.0, -h * t))
        .collect();
    Ok(dynamics.force(x_t, &evolved))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct R12Sample {
    pub t: f64,
    pub r1: [f64; 3],
    pub r2: [f64; 3],
    /// Step-halving differences.
    pub r1_error: f64,
    pub r2_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct R12Report {
    pub samples: Vec<R12Sample>,
    pub warnings: Vec<String>,
}

fn trap_weights(n: usize, stride: usize) -> Vec<f64> {
    // weights on indices 0..n (inclusive) using every `stride`-th node
    let mut w = vec![0.0; n + 1];
    let last = n - n % stride;
    let mut k = 0;
    while k <= last {
        w[k] = if k == 0 || k == last { 0.5 } else { 1.0 } * stride as f64;
        k += stride;
    }
    w
}

/// Remainders `r1`, `r2` at up to five `sample_times`, by trapezoidal
/// quadrature over the recorded history (uniform cadence) and Fourier
/// quadrature on the box.
pub fn compute_r12(
    dynamics: &Dynamics,
    traj: &Trajectory,
    v0: [f64; 3],
    sample_times: &[f64],
) -> Result<R12Report> {
    if sample_times.len() > 5 {
        return Err(Error::InvalidArgument("at most 5 sample times".into()));
    }
    let s = &traj.samples;
    if s.len() < 3 {
        return Err(Error::InvalidArgument("trajectory too short".into()));
    }
    let ds = s[1].t - s[0].t;
    let mass = dynamics.params().mass;
    let g = dynamics.grid();
    let n = g.n();
    let xd = g.derivative_wavenumbers().to_vec();
    let w_hat = dynamics.w_hat();
    let wh = w_hat.data();
    let h = dynamics.dispersion();
    let u = dynamics.u_symbol();
    let vol = g.volume();
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for &t in sample_times {
        let kt = (t / ds).round() as usize;
        if kt >= s.len() || ((kt as f64) * ds - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidArgument(format!("sample time {t} not on the history grid")));
        }
        if kt < 2 {
            out.push(R12Sample { t, r1: [0.0; 3], r2: [0.0; 3], r1_error: 0.0, r2_error: 0.0 });
            continue;
        }
        let xt = s[kt].x;
        let per_s: Vec<([f64; 3], [f64; 3])> = (0..=kt)
            .into_par_iter()
            .map(|j| {
                let vdot = s[j].force.map(|f| f / mass);
                if vdot.iter().all(|c| *c == 0.0) {
                    return ([0.0; 3], [0.0; 3]);
                }
                let vs = s[j].p.map(|p| p / mass);
                let tau = t - s[j].t;
                let y = [
                    xt[0] - s[j].x[0] - v0[0] * tau,
                    xt[1] - s[j].x[1] - v0[1] * tau,
                    xt[2] - s[j].x[2] - v0[2] * tau,
                ];
                let mut a1 = [0.0; 3];
                let mut a2 = [0.0; 3];
                let mut idx = 0;
                for k in 0..n {
                    for jj in 0..n {
                        for i in 0..n {
                            if idx != 0 {
                                let xi = [xd[i], xd[jj], xd[k]];
                                let hv0 = h[idx] - (v0[0] * xi[0] + v0[1] * xi[1] + v0[2] * xi[2]);
                                let hvs = h[idx] - (vs[0] * xi[0] + vs[1] * xi[1] + vs[2] * xi[2]);
                                let proj = vdot[0] * xi[0] + vdot[1] * xi[1] + vdot[2] * xi[2];
                                let amp = wh[idx].norm_sqr() * u[idx] * proj;
                                if amp != 0.0 && hv0 > 0.0 && hvs > 0.0 {
                                    let ph = tau * hv0;
                                    let shift = xi[0] * y[0] + xi[1] * y[1] + xi[2] * y[2];
                                    let sin0 = ph.sin();
                                    let c1 = amp / (hvs * hvs) * ((ph - shift).sin() - sin0);
                                    let c2 = amp * (1.0 / (hvs * hvs) - 1.0 / (hv0 * hv0)) * sin0;
                                    for a in 0..3 {
                                        a1[a] += xi[a] * c1;
                                        a2[a] += xi[a] * c2;
                                    }
                                }
                            }
                            idx += 1;
                        }
                    }
                }
                (a1.map(|x| x / vol), a2.map(|x| x / vol))
            })
            .collect();
        let integrate = |stride: usize| {
            let w = trap_weights(kt, stride);
            let mut r1 = [0.0; 3];
            let mut r2 = [0.0; 3];
            for (j, (a1, a2)) in per_s.iter().enumerate() {
                for a in 0..3 {
                    r1[a] += w[j] * ds * a1[a];
                    r2[a] += w[j] * ds * a2[a];
                }
            }
            (r1, r2)
        };
        let (r1, r2) = integrate(1);
        let (c1, c2) = integrate(2);
        let d = |a: [f64; 3], b: [f64; 3]| {
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        };
        let nrm = |a: [f64; 3]| (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let (e1, e2) = (d(r1, c1), d(r2, c2));
        if e1 > 0.1 * nrm(r1) || e2 > 0.1 * nrm(r2) {
            warnings.push(format!("step-halving discrepancy above 10% at t = {t}"));
        }
        out.push(R12Sample { t, r1, r2, r1_error: e1, r2_error: e2 });
    }
    Ok(R12Report { samples: out, warnings })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillatoryReport {
    pub t: Vec<f64>,
    pub values: Vec<Complex64>,
    pub fit: DecayFit,
    pub warnings: Vec<String>,
}

fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::InvalidArgument("time grid needs at least 2 points".into()));
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::InvalidArgument("time grid must be uniform and increasing".into()));
    }
    Ok(dt)
}

/// `I(t) = ∫ e^{-i t h_v} |ξ|^l m(ξ) f̂(ξ) conj(ĝ(ξ)) dξ` on a uniform
/// `t_grid`, with a log–log fit of `|I|` against `t`.
pub fn oscillatory_decay(
    l: u32,
    m: &SymbolFn,
    v: [f64; 3],
    f: &PotentialSpec,
    g: &PotentialSpec,
    t_grid: &[f64],
    quad: Option<&SphericalQuadrature>,
) -> Result<OscillatoryReport> {
    let speed = check_subsonic(v)?;
    if let Some((_, b)) = m.class_tag() {
        if b > 0.0 {
            return Err(Error::InvalidArgument("symbol must have high-frequency order b ≤ 0".into()));
        }
    }
    let dt = uniform_step(t_grid)?;
    let t_max = *t_grid.last().unwrap();
    let quad = match quad {
        Some(q) => q.oriented(v),
        None => {
            let r = radial_cutoff(f).min(radial_cutoff(g));
            let mut set = QuadratureSettings::for_oscillation(r, t_max, speed);
            if !(f.is_spherically_symmetric() && g.is_spherically_symmetric()) {
                set.n_phi = 8;
            }
            SphericalQuadrature::new(set, v)?
        }
    };
    let mut warnings = Vec::new();
    let phase = quad.max_phase_per_panel(t_max, speed);
    if phase > PHASE_PER_PANEL * 1.25 {
        warnings.push(format!("oscillation under-resolved: {phase:.1} rad per panel"));
    }
    let phis = quad.phis();
    let nt = t_grid.len();
    let t0 = t_grid[0];
    let partial: Vec<Vec<Complex64>> = quad
        .nodes
        .par_chunks(2048)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); nt];
            for &[r, c, w] in chunk {
                for &p in &phis {
                    let x = quad.lab(r, c, p);
                    let hv = r * (1.0 + r * r).sqrt() - (v[0] * x[0] + v[1] * x[1] + v[2] * x[2]);
                    let amp = m.eval(x)
                        * (w / phis.len() as f64
                            * r.powi(l as i32)
                            * w_hat_unitary(f, x)
                            * w_hat_unitary(g, x));
                    if amp == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let step = Complex64::from_polar(1.0, -dt * hv);
                    let mut z = amp * Complex64::from_polar(1.0, -t0 * hv);
                    for a in acc.iter_mut() {
                        *a += z;
                        z *= step;
                    }
                }
            }
            acc
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); nt];
    for p in &partial {
        for (a, b) in values.iter_mut().zip(p) {
            *a += b;
        }
    }
    let abs: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let fit = loglog_fit(t_grid, &abs, [t0, t_max])?;
    Ok(OscillatoryReport { t: t_grid.to_vec(), values, fit, warnings })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvenModeReport {
    pub t: Vec<f64>,
    /// `‖I(t)‖_F` with `I_ij = Im ⟨∂_i f, U e^{-itH_v} H_v^{-2} ∂_j f⟩`.
    pub values: Vec<f64>,
    pub fit: DecayFit,
    pub warnings: Vec<String>,
}

/// Even-integrand case: `I_ij(t) = -M_ij(t)` for potential `f`; fit of the
/// Frobenius norm against `t` on `window`.
pub fn even_mode_decay(v: [f64; 3], f: &PotentialSpec, dt: f64, window: [f64; 2]) -> Result<EvenModeReport> {
    let k_max = (window[1] / dt).round() as usize;
    let kern = compute_m_auto(v, f, dt, k_max)?;
    let k0 = (window[0] / dt).round() as usize;
    let t: Vec<f64> = (k0..=k_max).map(|k| k as f64 * dt).collect();
    let values: Vec<f64> = kern.samples[k0..=k_max].iter().map(frob).collect();
    let fit = loglog_fit(&t, &values, window)?;
    Ok(EvenModeReport { t, values, fit, warnings: kern.warnings })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersiveReport {
    pub band: i32,
    pub sigma: f64,
    pub t: Vec<f64>,
    pub linf: Vec<f64>,
    /// `t^{3/2 - σ} ‖P_k H^{-σ} e^{-itH} f‖_∞`.
    pub compensated: Vec<f64>,
    pub median: f64,
    pub max_over_median: f64,
    pub min_over_median: f64,
    /// Both ratios within a factor 2 of the median.
    pub bounded: bool,
    pub fit: DecayFit,
    /// `max_t |‖e^{-itH} f‖ - ‖f‖| / ‖f‖`.
    pub unitarity_defect: f64,
    pub t_wrap: f64,
}

/// Dyadic dispersive decay of `P_k H^{-σ} e^{-itH} f` on the box.
pub fn dispersive_decay(f: &ComplexField, k: i32, sigma: f64, t_grid: &[f64]) -> Result<DispersiveReport> {
    let grid = f.grid().clone();
    if !resolvable_bands(&grid).contains(&k) {
        return Err(Error::InvalidArgument(format!("band {k} is not resolvable")));
    }
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidArgument("sigma must lie in [0, 1]".into()));
    }
    let t_wrap = wrap_horizon(grid.box_length(), 0.0, 1.0);
    if t_grid.iter().any(|&t| !(t > 0.0) || t > t_wrap) {
        return Err(Error::InvalidArgument(format!(
            "times must lie in (0, {t_wrap}] (wrap-around horizon)"
        )));
    }
    let fh = f.clone().into_spectral();
    let norm0 = fh.l2_norm();
    let xi2 = grid.xi_sq_table();
    let h: Vec<f64> = xi2.iter().map(|&r2| (r2 * (1.0 + r2)).sqrt()).collect();
    let band: Vec<f64> = xi2
        .iter()
        .zip(&h)
        .map(|(&r2, &hh)| {
            let p = psi_k(r2.sqrt(), k);
            if p == 0.0 {
                0.0
            } else {
                p * hh.powf(-sigma)
            }
        })
        .collect();
    let mut linf = Vec::with_capacity(t_grid.len());
    let mut defect: f64 = 0.0;
    for &t in t_grid {
        let prop: Vec<Complex64> = h.iter().map(|&x| Complex64::from_polar(1.0, -x * t)).collect();
        let data: Vec<Complex64> = fh.data().iter().zip(&band).zip(&prop).map(|((z, b), p)| z * p * *b).collect();
        let out = ComplexField::from_data(&grid, data, Representation::Spectral)?.into_physical();
        linf.push(out.max_abs());
        let free: Vec<Complex64> = fh.data().iter().zip(&prop).map(|(z, p)| z * p).collect();
        let free = ComplexField::from_data(&grid, free, Representation::Spectral)?.into_physical();
        if norm0 > 0.0 {
            defect = defect.max((free.l2_norm() - norm0).abs() / norm0);
        }
    }
    let expo = 1.5 - sigma;
    let compensated: Vec<f64> = t_grid.iter().zip(&linf).map(|(t, x)| t.powf(expo) * x).collect();
    let mut sorted = compensated.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let maxr = sorted[m - 1] / median;
    let minr = sorted[0] / median;
    let lo = t_grid[0];
    let hi = t_grid[t_grid.len() - 1];
    let fit = loglog_fit(t_grid, &compensated, [lo, hi])?;
    Ok(DispersiveReport {
        band: k,
        sigma,
        t: t_grid.to_vec(),
        linf,
        compensated,
        median,
        max_over_median: maxr,
        min_over_median: minr,
        bounded: maxr <= 2.0 && minr >= 0.5,
        fit,
        unitarity_defect: defect,
        t_wrap,
    })
}
