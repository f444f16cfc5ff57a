//! Time integration of the coupled particle–field system in diagonalized
//! variables, conservation diagnostics and scaling-covariance checks.
//!
//! Equations (mass `M`, parameter `μ`):
//! `Ẋ = P/M`, `Ṗ = ∫ ∇W^X U Re B`, `i Ḃ = H B + W^X`, with
//! `h = |ξ| (|ξ|² + μ)^{1/2}` and `u = |ξ| (|ξ|² + μ)^{-1/2}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{grid_spectrum, weighted_norm, PotentialSpec};
use crate::spectral_core::{apply_ur_inv, ComplexField, FourierGrid3, Representation};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Blow-up guard: abort when `‖B‖` exceeds this multiple of its reference.
pub const BLOWUP_FACTOR: f64 = 1e3;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
const GL3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub mass: f64,
    pub mu: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { mass: 1.0, mu: 1.0 }
    }
}

impl SystemParams {
    pub fn sound_speed(&self) -> f64 {
        self.mu.sqrt()
    }
}

/// Coupling update of the integrator. Both advance the field with the exact
/// propagator `e^{-iH dt}` and integrate the source exactly along the
/// straight particle path between the step endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Velocity Verlet for the particle; second order.
    Verlet2,
    /// Hermite predictor–corrector using the analytic force derivative, with
    /// a cubic-path correction of the source; fourth order.
    #[default]
    Hermite4,
}

impl Scheme {
    pub fn order(&self) -> u32 {
        match self {
            Scheme::Verlet2 => 2,
            Scheme::Hermite4 => 4,
        }
    }
}

/// Particle and field at one instant. `b` is spectral.
#[derive(Clone, Debug)]
pub struct SystemState {
    pub t: f64,
    pub x: [f64; 3],
    pub p: [f64; 3],
    pub b: ComplexField,
}

/// Complex Gaussian bump `ε (1 + i) e^{-|x - X0 - x_δ|² / (2σ²)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perturbation {
    pub amplitude: f64,
    pub width: f64,
    pub offset: [f64; 3],
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            amplitude: 0.01,
            width: 1.0,
            offset: [0.0, 0.0, 1.0],
        }
    }
}

impl Perturbation {
    pub fn field(&self, grid: &FourierGrid3, center: [f64; 3]) -> ComplexField {
        let c = [
            center[0] + self.offset[0],
            center[1] + self.offset[1],
            center[2] + self.offset[2],
        ];
        let l = grid.box_length();
        let s2 = 2.0 * self.width * self.width;
        let amp = Complex64::new(self.amplitude, self.amplitude);
        ComplexField::from_fn(grid, |x| {
            let mut r2 = 0.0;
            for a in 0..3 {
                let mut d = x[a] - c[a];
                d -= l * (d / l).round();
                r2 += d * d;
            }
            amp * (-r2 / s2).exp()
        })
    }
}

/// Initial field choice.
#[derive(Clone, Debug)]
pub enum InitialField {
    /// Field `β0` given directly (any representation).
    Given(ComplexField),
    /// Traveling wave of velocity `v0` centered at `X0` plus a perturbation.
    Traveling { v0: [f64; 3], perturbation: Perturbation },
}

/// One diagnostic sample along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: [f64; 3],
    pub p: [f64; 3],
    /// Force on the particle, `Ṗ`.
    pub force: [f64; 3],
    pub energy: f64,
    pub momentum: [f64; 3],
    pub field_norm: f64,
    pub re_delta_linf: Option<f64>,
    pub im_delta_linf: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// `(t, β_t)` in physical representation.
    pub snapshots: Vec<(f64, ComplexField)>,
    pub t_wrap: f64,
    pub final_state: SystemState,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        self.samples
            .iter()
            .map(|s| (s.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Max over samples of `|𝒫(t) - 𝒫(0)| / |𝒫(0)|`.
    pub fn max_momentum_drift(&self) -> f64 {
        let m0 = self.samples[0].momentum;
        let n0 = norm3(m0).max(f64::MIN_POSITIVE);
        self.samples
            .iter()
            .map(|s| norm3(sub3(s.momentum, m0)) / n0)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Diagnostic sample cadence in steps.
    pub sample_every: usize,
    /// Field snapshot cadence in steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Compute `‖Re δ‖_∞`, `‖Im δ‖_∞` at each sample.
    pub delta_diagnostics: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            sample_every: 1,
            snapshot_every: 0,
            delta_diagnostics: false,
        }
    }
}

#[inline]
fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Wrap-around horizon `0.4 L / (|v0| + c)`.
pub fn wrap_horizon(l: f64, speed: f64, sound_speed: f64) -> f64 {
    0.4 * l / (speed + sound_speed).max(sound_speed)
}

/// Precomputed tables for one grid, potential, parameter set and step.
#[derive(Clone, Debug)]
pub struct Dynamics {
    grid: FourierGrid3,
    params: SystemParams,
    scheme: Scheme,
    dt: f64,
    w_hat: Vec<Complex64>,
    h: Vec<f64>,
    u: Vec<f64>,
    xi2: Vec<f64>,
    prop: Vec<Complex64>,
    half_prop: Vec<Complex64>,
    gl_prop: Vec<Vec<Complex64>>,
    w_norm: f64,
}

impl Dynamics {
    pub fn new(
        spec: &PotentialSpec,
        grid: &FourierGrid3,
        params: SystemParams,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        let w = grid_spectrum(spec, grid)?;
        Self::with_spectrum(&w, params, dt, scheme)
    }

    /// From a spectral potential (unpaired Nyquist planes should be zero).
    pub fn with_spectrum(
        w_hat: &ComplexField,
        params: SystemParams,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt <= 0.1) {
            return Err(Error::InvalidArgument(format!(
                "time step must lie in (0, 0.1], got {dt}"
            )));
        }
        if !(params.mass > 0.0 && params.mu > 0.0) {
            return Err(Error::InvalidArgument("mass and mu must be positive".into()));
        }
        if w_hat.representation() != Representation::Spectral {
            return Err(Error::InvalidArgument("potential must be spectral".into()));
        }
        let grid = w_hat.grid().clone();
        let xi2 = grid.xi_sq_table();
        let mu = params.mu;
        let h: Vec<f64> = xi2.iter().map(|&r2| (r2 * (r2 + mu)).sqrt()).collect();
        let u: Vec<f64> = xi2
            .iter()
            .map(|&r2| (r2 / (r2 + mu)).sqrt())
            .collect();
        let mut wv = w_hat.data().to_vec();
        wv[0] = ZERO;
        let prop = h.iter().map(|&x| Complex64::from_polar(1.0, -x * dt)).collect();
        let half_prop = h
            .iter()
            .map(|&x| Complex64::from_polar(1.0, -0.5 * x * dt))
            .collect();
        let gl_prop = match scheme {
            Scheme::Verlet2 => Vec::new(),
            Scheme::Hermite4 => GL3
                .iter()
                .map(|(c, _)| {
                    h.iter()
                        .map(|&x| Complex64::from_polar(1.0, -x * dt * (1.0 - c)))
                        .collect()
                })
                .collect(),
        };
        let w_norm = (wv.iter().map(|z| z.norm_sqr()).sum::<f64>() / grid.volume()).sqrt();
        Ok(Self {
            grid,
            params,
            scheme,
            dt,
            w_hat: wv,
            h,
            u,
            xi2,
            prop,
            half_prop,
            gl_prop,
            w_norm,
        })
    }

    pub fn grid(&self) -> &FourierGrid3 {
        &self.grid
    }

    pub fn params(&self) -> SystemParams {
        self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// `‖W‖_{L²}` of the (origin-free) discrete potential.
    pub fn w_norm(&self) -> f64 {
        self.w_norm
    }

    /// Spectral potential with the origin mode removed.
    pub fn w_hat(&self) -> ComplexField {
        ComplexField::from_data(&self.grid, self.w_hat.clone(), Representation::Spectral)
            .expect("same grid")
    }

    pub fn dispersion(&self) -> &[f64] {
        &self.h
    }

    pub fn u_symbol(&self) -> &[f64] {
        &self.u
    }

    fn velocity(&self, p: [f64; 3]) -> [f64; 3] {
        let m = self.params.mass;
        [p[0] / m, p[1] / m, p[2] / m]
    }

    /// Diagonalized traveling-wave field `Ĝ_v e^{-iξ·X}`, `Ĝ_v = -Ŵ/h_v`.
    pub fn traveling_field(&self, v: [f64; 3], x: [f64; 3]) -> ComplexField {
        let g = &self.grid;
        let n = g.n();
        let xd = g.derivative_wavenumbers();
        let ph = g.axis_phases(x);
        let mut data = vec![ZERO; g.len()];
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                let pjk = ph[1][j] * ph[2][k];
                for i in 0..n {
                    if idx != 0 {
                        let hv = self.h[idx] - (v[0] * xd[i] + v[1] * xd[j] + v[2] * xd[k]);
                        if hv.abs() >= crate::traveling_wave::SONIC_EXCLUSION {
                            data[idx] = -self.w_hat[idx] * ph[0][i] * pjk / hv;
                        }
                    }
                    idx += 1;
                }
            }
        }
        ComplexField::from_data(g, data, Representation::Spectral).expect("same grid")
    }

    /// `B0 = U_r^{-1} β0` and the reported `‖⟨x⟩⁴ δ0‖_{L²}`.
    pub fn init_state(
        &self,
        x0: [f64; 3],
        p0: [f64; 3],
        beta0: &InitialField,
    ) -> Result<(SystemState, f64)> {
        if !(x0.iter().chain(p0.iter()).all(|c| c.is_finite())) {
            return Err(Error::InvalidArgument("initial X0, P0 must be finite".into()));
        }
        let (b, wn) = match beta0 {
            InitialField::Given(beta) => {
                if beta.grid() != &self.grid {
                    return Err(Error::GridMismatch);
                }
                if beta.data().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::InvalidArgument("initial field must be finite".into()));
                }
                (self.ur_inv(&beta.clone().into_spectral()), 0.0)
            }
            InitialField::Traveling { v0, perturbation } => {
                if !(v0.iter().all(|c| c.is_finite())
                    && perturbation.amplitude.is_finite()
                    && perturbation.width > 0.0)
                {
                    return Err(Error::InvalidArgument("invalid traveling-wave data".into()));
                }
                if norm3(*v0) >= self.params.sound_speed() {
                    return Err(Error::InvalidArgument(
                        "traveling-wave initial data needs a subsonic velocity".into(),
                    ));
                }
                let delta = perturbation.field(&self.grid, x0);
                let wn = weighted_norm(&delta, 4);
                let mut d = delta.into_spectral();
                for (idx, z) in d.data_mut().iter_mut().enumerate() {
                    if self.grid.is_nyquist_plane(idx) {
                        *z = ZERO;
                    }
                }
                let b = self
                    .traveling_field(*v0, x0)
                    .axpy(Complex64::new(1.0, 0.0), &self.ur_inv(&d))?;
                (b, wn)
            }
        };
        Ok((
            SystemState {
                t: 0.0,
                x: x0,
                p: p0,
                b,
            },
            wn,
        ))
    }

    fn ur_inv(&self, beta_hat: &ComplexField) -> ComplexField {
        if self.params.mu == 1.0 {
            return apply_ur_inv(beta_hat);
        }
        let re = beta_hat.real_part();
        let im = beta_hat.imag_part();
        let data = (0..self.grid.len())
            .map(|idx| {
                let s = if self.u[idx] > 0.0 { 1.0 / self.u[idx] } else { 0.0 };
                re.data()[idx] * s + I * im.data()[idx]
            })
            .collect();
        ComplexField::from_data(&self.grid, data, Representation::Spectral).expect("same grid")
    }

    /// Spectral `Re β = U Re B` and `Im β = Im B`.
    fn beta_parts(&self, b: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = b.len();
        let mut a = vec![ZERO; n];
        let mut c = vec![ZERO; n];
        for idx in 0..n {
            let m = b[self.grid.neg_index(idx)].conj();
            a[idx] = (b[idx] + m) * (0.5 * self.u[idx]);
            c[idx] = (b[idx] - m) * Complex64::new(0.0, -0.5);
        }
        (a, c)
    }

    /// `β = U_r B` in physical representation.
    pub fn beta(&self, s: &SystemState) -> ComplexField {
        let (a, c) = self.beta_parts(s.b.data());
        let data = a.iter().zip(&c).map(|(x, y)| x + I * y).collect();
        ComplexField::from_data(&self.grid, data, Representation::Spectral)
            .expect("same grid")
            .into_physical()
    }

    /// Force `∫ ∇W^X U Re B` via Parseval.
    pub fn force(&self, x: [f64; 3], b: &[Complex64]) -> [f64; 3] {
        let g = &self.grid;
        let n = g.n();
        let xd = g.derivative_wavenumbers();
        let ph = g.axis_phases(x);
        let mut f = [0.0; 3];
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                let pjk = ph[1][j] * ph[2][k];
                let mut fx = 0.0;
                let mut sy = 0.0;
                for i in 0..n {
                    let a = self.w_hat[idx] * ph[0][i] * pjk * b[idx].conj();
                    let im = a.im * self.u[idx];
                    fx -= xd[i] * im;
                    sy += im;
                    idx += 1;
                }
                f[0] += fx;
                f[1] -= xd[j] * sy;
                f[2] -= xd[k] * sy;
            }
        }
        let s = 1.0 / g.volume();
        [f[0] * s, f[1] * s, f[2] * s]
    }

    /// Force and its time derivative along the flow.
    fn force_jerk(&self, x: [f64; 3], p: [f64; 3], b: &[Complex64]) -> ([f64; 3], [f64; 3]) {
        let g = &self.grid;
        let n = g.n();
        let xd = g.derivative_wavenumbers();
        let ph = g.axis_phases(x);
        let v = self.velocity(p);
        let mut f = [0.0; 3];
        let mut jk = [0.0; 3];
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                let pjk = ph[1][j] * ph[2][k];
                let kv_jk = v[1] * xd[j] + v[2] * xd[k];
                let (mut fx, mut fs, mut jx, mut js) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..n {
                    let e = self.w_hat[idx] * ph[0][i] * pjk;
                    let cb = b[idx].conj();
                    let eu = e * self.u[idx];
                    let a = eu * cb;
                    let kv = v[0] * xd[i] + kv_jk;
                    let d = Complex64::new(0.0, self.h[idx] - kv) * cb + I * e.conj();
                    let aj = eu * d;
                    fx -= xd[i] * a.im;
                    fs += a.im;
                    jx -= xd[i] * aj.im;
                    js += aj.im;
                    idx += 1;
                }
                f[0] += fx;
                f[1] -= xd[j] * fs;
                f[2] -= xd[k] * fs;
                jk[0] += jx;
                jk[1] -= xd[j] * js;
                jk[2] -= xd[k] * js;
            }
        }
        let s = 1.0 / g.volume();
        (
            [f[0] * s, f[1] * s, f[2] * s],
            [jk[0] * s, jk[1] * s, jk[2] * s],
        )
    }

    /// `e^{-iH dt} B + S`, with `S` the source integrated exactly along the
    /// straight path from `x` with velocity `vel`.
    fn propagate_linear(&self, b: &[Complex64], x: [f64; 3], vel: [f64; 3]) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.n();
        let dt = self.dt;
        let xd = g.derivative_wavenumbers();
        let mid = [
            x[0] + 0.5 * vel[0] * dt,
            x[1] + 0.5 * vel[1] * dt,
            x[2] + 0.5 * vel[2] * dt,
        ];
        let ph = g.axis_phases(mid);
        let mut out = vec![ZERO; b.len()];
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                let pjk = ph[1][j] * ph[2][k];
                let kv_jk = vel[1] * xd[j] + vel[2] * xd[k];
                for i in 0..n {
                    let q = self.h[idx] - (vel[0] * xd[i] + kv_jk);
                    let src = self.w_hat[idx] * ph[0][i] * pjk * self.half_prop[idx]
                        * (-I * (dt * sinc(0.5 * q * dt)));
                    out[idx] = self.prop[idx] * b[idx] + src;
                    idx += 1;
                }
            }
        }
        out
    }

    /// Adds the source difference between the cubic Hermite path and the
    /// straight path, by 3-point Gauss–Legendre quadrature in time.
    fn add_path_correction(
        &self,
        out: &mut [Complex64],
        x0: [f64; 3],
        v0: [f64; 3],
        x1: [f64; 3],
        v1: [f64; 3],
    ) {
        let g = &self.grid;
        let n = g.n();
        let dt = self.dt;
        let vl = [
            (x1[0] - x0[0]) / dt,
            (x1[1] - x0[1]) / dt,
            (x1[2] - x0[2]) / dt,
        ];
        for (node, (c, w)) in GL3.iter().enumerate() {
            let c = *c;
            let h00 = 2.0 * c * c * c - 3.0 * c * c + 1.0;
            let h10 = c * c * c - 2.0 * c * c + c;
            let h01 = -2.0 * c * c * c + 3.0 * c * c;
            let h11 = c * c * c - c * c;
            let mut xh = [0.0; 3];
            let mut xl = [0.0; 3];
            for a in 0..3 {
                xh[a] = h00 * x0[a] + h10 * dt * v0[a] + h01 * x1[a] + h11 * dt * v1[a];
                xl[a] = x0[a] + vl[a] * c * dt;
            }
            let ph = g.axis_phases(xh);
            let pl = g.axis_phases(xl);
            let pr = &self.gl_prop[node];
            let coef = -I * (w * dt);
            let mut idx = 0;
            for k in 0..n {
                for j in 0..n {
                    let hjk = ph[1][j] * ph[2][k];
                    let ljk = pl[1][j] * pl[2][k];
                    for i in 0..n {
                        let diff = ph[0][i] * hjk - pl[0][i] * ljk;
                        out[idx] += coef * pr[idx] * self.w_hat[idx] * diff;
                        idx += 1;
                    }
                }
            }
        }
    }

    /// Advances the state by one step `dt`.
    pub fn step(&self, s: &SystemState) -> SystemState {
        let dt = self.dt;
        let m = self.params.mass;
        match self.scheme {
            Scheme::Verlet2 => {
                let f0 = self.force(s.x, s.b.data());
                let mut x1 = [0.0; 3];
                let mut vel = [0.0; 3];
                for a in 0..3 {
                    x1[a] = s.x[a] + s.p[a] / m * dt + 0.5 * f0[a] / m * dt * dt;
                    vel[a] = (x1[a] - s.x[a]) / dt;
                }
                let b1 = self.propagate_linear(s.b.data(), s.x, vel);
                let f1 = self.force(x1, &b1);
                let mut p1 = [0.0; 3];
                for a in 0..3 {
                    p1[a] = s.p[a] + 0.5 * (f0[a] + f1[a]) * dt;
                }
                SystemState {
                    t: s.t + dt,
                    x: x1,
                    p: p1,
                    b: ComplexField::from_data(&self.grid, b1, Representation::Spectral)
                        .expect("same grid"),
                }
            }
            Scheme::Hermite4 => {
                let (f0, j0) = self.force_jerk(s.x, s.p, s.b.data());
                let mut xp = [0.0; 3];
                let mut pp = [0.0; 3];
                let mut vel = [0.0; 3];
                for a in 0..3 {
                    xp[a] = s.x[a]
                        + s.p[a] / m * dt
                        + f0[a] / m * dt * dt / 2.0
                        + j0[a] / m * dt * dt * dt / 6.0;
                    pp[a] = s.p[a] + f0[a] * dt + j0[a] * dt * dt / 2.0;
                    vel[a] = (xp[a] - s.x[a]) / dt;
                }
                let mut b1 = self.propagate_linear(s.b.data(), s.x, vel);
                self.add_path_correction(&mut b1, s.x, self.velocity(s.p), xp, self.velocity(pp));
                let (f1, j1) = self.force_jerk(xp, pp, &b1);
                let mut x1 = [0.0; 3];
                let mut p1 = [0.0; 3];
                for a in 0..3 {
                    p1[a] = s.p[a] + (f0[a] + f1[a]) * dt / 2.0 + (j0[a] - j1[a]) * dt * dt / 12.0;
                }
                for a in 0..3 {
                    x1[a] = s.x[a]
                        + (s.p[a] + p1[a]) / m * dt / 2.0
                        + (f0[a] - f1[a]) / m * dt * dt / 12.0;
                }
                SystemState {
                    t: s.t + dt,
                    x: x1,
                    p: p1,
                    b: ComplexField::from_data(&self.grid, b1, Representation::Spectral)
                        .expect("same grid"),
                }
            }
        }
    }

    /// `|P|²/(2M) + ∫ [½|∇β|² + (μ/2)(Re β)² + W^X Re β]`.
    pub fn energy(&self, s: &SystemState) -> f64 {
        let (a, c) = self.beta_parts(s.b.data());
        let g = &self.grid;
        let mut field = 0.0;
        for idx in 0..a.len() {
            let aa = a[idx].norm_sqr();
            field += 0.5 * self.xi2[idx] * (aa + c[idx].norm_sqr()) + 0.5 * self.params.mu * aa;
        }
        let coupling = self.coupling(s.x, &a);
        0.5 * (s.p[0] * s.p[0] + s.p[1] * s.p[1] + s.p[2] * s.p[2]) / self.params.mass
            + (field + coupling) / g.volume()
    }

    /// `Σ Re Ŵ e^{-iξ·X} conj(â)` (unnormalized).
    fn coupling(&self, x: [f64; 3], a: &[Complex64]) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let ph = g.axis_phases(x);
        let mut s = 0.0;
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                let pjk = ph[1][j] * ph[2][k];
                for i in 0..n {
                    s += (self.w_hat[idx] * ph[0][i] * pjk * a[idx].conj()).re;
                    idx += 1;
                }
            }
        }
        s
    }

    /// `𝒫_j = P_j + ½ Im ∫ β̄ ∂_j β = P_j + ∫ Re β ∂_j Im β`.
    pub fn total_momentum(&self, s: &SystemState) -> [f64; 3] {
        let (a, c) = self.beta_parts(s.b.data());
        let g = &self.grid;
        let n = g.n();
        let xd = g.derivative_wavenumbers();
        let mut m = [0.0; 3];
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let z = (a[idx] * c[idx].conj()).im;
                    m[0] += xd[i] * z;
                    m[1] += xd[j] * z;
                    m[2] += xd[k] * z;
                    idx += 1;
                }
            }
        }
        let v = g.volume();
        [s.p[0] + m[0] / v, s.p[1] + m[1] / v, s.p[2] + m[2] / v]
    }

    /// Field energy bound check: `|P|²/(2M) + field terms ≤ 𝓗0 + ½‖W‖²`.
    pub fn energy_bound_terms(&self, s: &SystemState) -> f64 {
        let (a, c) = self.beta_parts(s.b.data());
        let mut field = 0.0;
        for idx in 0..a.len() {
            let aa = a[idx].norm_sqr();
            field += 0.5 * self.xi2[idx] * (aa + c[idx].norm_sqr()) + 0.25 * self.params.mu * aa;
        }
        0.5 * (s.p[0] * s.p[0] + s.p[1] * s.p[1] + s.p[2] * s.p[2]) / self.params.mass
            + field / self.grid.volume()
    }

    /// `‖Re δ‖_∞`, `‖Im δ‖_∞` for `δ = β - γ_{v}^{X}` with `v = P/M`;
    /// `None` when `v` is not subsonic.
    pub fn delta_linf(&self, s: &SystemState) -> Option<(f64, f64)> {
        let v = self.velocity(s.p);
        if norm3(v) >= self.params.sound_speed() {
            return None;
        }
        let gv = self.traveling_field(v, s.x);
        let d: Vec<Complex64> = s.b.data().iter().zip(gv.data()).map(|(a, b)| a - b).collect();
        let (a, c) = self.beta_parts(&d);
        let data = a.iter().zip(&c).map(|(x, y)| x + I * y).collect();
        let f = ComplexField::from_data(&self.grid, data, Representation::Spectral)
            .expect("same grid")
            .into_physical();
        Some((f.max_abs_re(), f.max_abs_im()))
    }

    fn sample(&self, s: &SystemState, delta: bool) -> Sample {
        let dl = if delta { self.delta_linf(s) } else { None };
        Sample {
            t: s.t,
            x: s.x,
            p: s.p,
            force: self.force(s.x, s.b.data()),
            energy: self.energy(s),
            momentum: self.total_momentum(s),
            field_norm: s.b.l2_norm(),
            re_delta_linf: dl.map(|d| d.0),
            im_delta_linf: dl.map(|d| d.1),
        }
    }

    /// Integrates to time `t_end` (a multiple of `dt`).
    pub fn integrate(&self, s0: &SystemState, t_end: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
        let steps_f = t_end / self.dt;
        let steps = steps_f.round();
        if !(t_end >= 0.0) || (steps_f - steps).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "T = {t_end} is not a multiple of dt = {}",
                self.dt
            )));
        }
        let steps = steps as usize;
        let every = opts.sample_every.max(1);
        let reference = s0.b.l2_norm().max(self.w_norm).max(f64::MIN_POSITIVE);
        let mut s = s0.clone();
        let mut samples = vec![self.sample(&s, opts.delta_diagnostics)];
        let mut snaps = Vec::new();
        if opts.snapshot_every > 0 {
            snaps.push((s.t, self.beta(&s)));
        }
        for n in 1..=steps {
            s = self.step(&s);
            if n % every == 0 || n == steps {
                let norm = s.b.l2_norm();
                if !norm.is_finite() || norm > BLOWUP_FACTOR * reference {
                    return Err(Error::NumericalGuard(format!(
                        "field norm {norm:.3e} exceeded {BLOWUP_FACTOR:.0e} x reference at t = {:.4}",
                        s.t
                    )));
                }
                samples.push(self.sample(&s, opts.delta_diagnostics));
            }
            if opts.snapshot_every > 0 && n % opts.snapshot_every == 0 {
                snaps.push((s.t, self.beta(&s)));
            }
        }
        let v0 = norm3(self.velocity(s0.p));
        Ok(Trajectory {
            dt: self.dt,
            samples,
            snapshots: snaps,
            t_wrap: wrap_horizon(self.grid.box_length(), v0, self.params.sound_speed()),
            final_state: s,
        })
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSetup {
    pub n: usize,
    pub box_length: f64,
    pub potential: PotentialSpec,
    pub params: SystemParams,
    pub x0: [f64; 3],
    pub p0: [f64; 3],
    /// Traveling-wave velocity of the initial field; `None` starts from `β0 = 0`.
    pub v0: Option<[f64; 3]>,
    pub perturbation: Perturbation,
    pub dt: f64,
    pub scheme: Scheme,
}

impl RunSetup {
    /// Normalized-units traveling start `X0 = 0`, `P0 = v0`.
    pub fn traveling(n: usize, l: f64, v0: [f64; 3], perturbation: Perturbation, dt: f64) -> Self {
        Self {
            n,
            box_length: l,
            potential: PotentialSpec::default(),
            params: SystemParams::default(),
            x0: [0.0; 3],
            p0: v0,
            v0: Some(v0),
            perturbation,
            dt,
            scheme: Scheme::default(),
        }
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        let mut s = self.clone();
        s.dt = dt;
        s
    }

    pub fn build(&self) -> Result<(Dynamics, SystemState)> {
        let grid = FourierGrid3::new(self.n, self.box_length)?;
        let dynamics = Dynamics::new(&self.potential, &grid, self.params, self.dt, self.scheme)?;
        let init = match self.v0 {
            Some(v0) => InitialField::Traveling {
                v0,
                perturbation: self.perturbation,
            },
            None => InitialField::Given(ComplexField::zeros(&grid, Representation::Physical)),
        };
        let (s, _) = dynamics.init_state(self.x0, self.p0, &init)?;
        Ok((dynamics, s))
    }

    pub fn run(&self, t_end: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
        let (d, s) = self.build()?;
        d.integrate(&s, t_end, opts)
    }
}

/// Self-convergence of the particle state at `t_end` from runs with
/// `dt`, `dt/2`, `dt/4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dt: f64,
    /// `|Y(dt) - Y(dt/2)|` with `Y = (X, P)`.
    pub error_coarse: f64,
    /// `|Y(dt/2) - Y(dt/4)|`.
    pub error_fine: f64,
    pub ratio: f64,
    pub order: f64,
}

fn endpoint(setup: &RunSetup, t_end: f64) -> Result<[f64; 6]> {
    let opts = IntegrateOptions {
        sample_every: usize::MAX,
        ..Default::default()
    };
    let tr = setup.run(t_end, &opts)?;
    let s = &tr.final_state;
    Ok([s.x[0], s.x[1], s.x[2], s.p[0], s.p[1], s.p[2]])
}

fn dist6(a: [f64; 6], b: [f64; 6]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn self_convergence(setup: &RunSetup, t_end: f64) -> Result<ConvergenceReport> {
    let y1 = endpoint(setup, t_end)?;
    let y2 = endpoint(&setup.with_dt(setup.dt / 2.0), t_end)?;
    let y4 = endpoint(&setup.with_dt(setup.dt / 4.0), t_end)?;
    let e1 = dist6(y1, y2);
    let e2 = dist6(y2, y4);
    let ratio = e1 / e2;
    Ok(ConvergenceReport {
        dt: setup.dt,
        error_coarse: e1,
        error_fine: e2,
        ratio,
        order: ratio.log2(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitTransform {
    /// `M → M/λ`, `W → λ^{-1/2} W`, `P → P/λ`, `β → λ^{-1/2} β`.
    D,
    /// `μ → μ/λ²`, `W → λ^{-7/2} W(·/λ)`, `X → λ X(λ^{-2} t)`,
    /// `P → P/λ`, `β → λ^{-3/2} β(λ^{-2} t, ·/λ)`.
    E,
}

impl RunSetup {
    /// The setup whose solution is the image of this one under the unit
    /// transformation, together with the time dilation factor.
    pub fn transformed(&self, which: UnitTransform, lambda: f64) -> (RunSetup, f64) {
        let mut s = self.clone();
        match which {
            UnitTransform::D => {
                s.params.mass /= lambda;
                s.potential = self.potential.scaled(lambda.powf(-0.5));
                s.p0 = self.p0.map(|c| c / lambda);
                s.perturbation.amplitude *= lambda.powf(-0.5);
                (s, 1.0)
            }
            UnitTransform::E => {
                let l2 = lambda * lambda;
                s.params.mu /= l2;
                s.box_length *= lambda;
                s.potential = self.potential.dilated(lambda).scaled(lambda.powf(-3.5));
                s.x0 = self.x0.map(|c| c * lambda);
                s.p0 = self.p0.map(|c| c / lambda);
                s.v0 = self.v0.map(|v| v.map(|c| c / lambda));
                s.perturbation.amplitude *= lambda.powf(-1.5);
                s.perturbation.width *= lambda;
                s.perturbation.offset = self.perturbation.offset.map(|c| c * lambda);
                s.dt *= l2;
                (s, l2)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub which: UnitTransform,
    pub lambda: f64,
    pub t_end: f64,
    /// Max over samples of `|X - X̃'| + |P - P̃'|`, with the transformed run
    /// mapped back to base units.
    pub max_deviation: f64,
    pub self_convergence_error: f64,
    pub pass: bool,
}

/// Runs the base and transformed systems and compares trajectories.
pub fn scaling_covariance_check(
    base: &RunSetup,
    which: UnitTransform,
    lambda: f64,
    t_end: f64,
) -> Result<CovarianceReport> {
    if !(0.5..=2.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie in [0.5, 2], got {lambda}"
        )));
    }
    let (tr_setup, tscale) = base.transformed(which, lambda);
    let opts = IntegrateOptions::default();
    let a = base.run(t_end, &opts)?;
    let b = tr_setup.run(t_end * tscale, &opts)?;
    let xs = match which {
        UnitTransform::D => 1.0,
        UnitTransform::E => lambda,
    };
    let mut dev: f64 = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        let dx = norm3(sub3(sa.x, sb.x.map(|c| c / xs)));
        let dp = norm3(sub3(sa.p, sb.p.map(|c| c * lambda)));
        dev = dev.max(dx + dp);
    }
    let conv = self_convergence(base, t_end)?;
    let err = conv.error_coarse;
    Ok(CovarianceReport {
        which,
        lambda,
        t_end,
        max_deviation: dev,
        self_convergence_error: err,
        pass: dev <= 10.0 * err,
    })
}

/// Group-speed bound used for documentation of wrap-around windows.
pub fn max_group_speed(grid: &FourierGrid3, mu: f64) -> f64 {
    let k = grid.xi_max() * 3f64.sqrt();
    (2.0 * k * k + mu) / (k * k + mu).sqrt()
}
