//! Coupling potentials `W` with closed-form transforms, hypothesis checks and
//! weighted norms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_core::{ComplexField, FourierGrid3};

/// One Gaussian term `A e^{-|x|²/(2σ²)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub width: f64,
}

/// Analytic description of the coupling potential.
///
/// Transforms use the convention `Ŵ(ξ) = ∫ W(x) e^{-iξ·x} dx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Gaussian { amplitude: f64, width: f64 },
    /// Sum of Gaussians; a difference of two has a spherical shell of zeros
    /// in `Ŵ`.
    GaussianSum { terms: Vec<GaussianTerm> },
    /// Radial profile sampled on a uniform grid `r_k = k Δr`, linearly
    /// interpolated and zero beyond the last sample.
    TabulatedRadial { dr: f64, values: Vec<f64> },
    /// Gaussian multiplied in Fourier space by
    /// `(|ξ|²(1 + |ξ|²) - (v·ξ)²)/s²`, which vanishes on the supersonic
    /// resonance surface of `v`.
    ResonanceNotched {
        amplitude: f64,
        width: f64,
        velocity: [f64; 3],
    },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Gaussian {
            amplitude: 1.0,
            width: 1.0,
        }
    }
}

fn gauss_hat(a: f64, s: f64, r2: f64) -> f64 {
    a * (2.0 * PI).powf(1.5) * s.powi(3) * (-0.5 * s * s * r2).exp()
}

impl PotentialSpec {
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        PotentialSpec::Gaussian { amplitude, width }
    }

    /// A difference of Gaussians with a root of `Ŵ`.
    pub fn gaussian_difference() -> Self {
        PotentialSpec::GaussianSum {
            terms: vec![
                GaussianTerm {
                    amplitude: 1.0,
                    width: 1.0,
                },
                GaussianTerm {
                    amplitude: -2.0,
                    width: 0.5,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match self {
            PotentialSpec::Gaussian { amplitude, width }
            | PotentialSpec::ResonanceNotched {
                amplitude, width, ..
            } => {
                if !amplitude.is_finite() || !(*width > 0.0 && width.is_finite()) {
                    return bad("gaussian amplitude must be finite and width positive");
                }
            }
            PotentialSpec::GaussianSum { terms } => {
                if terms.is_empty() {
                    return bad("gaussian sum needs at least one term");
                }
                for t in terms {
                    if !t.amplitude.is_finite() || !(t.width > 0.0 && t.width.is_finite()) {
                        return bad("gaussian term amplitude must be finite and width positive");
                    }
                }
            }
            PotentialSpec::TabulatedRadial { dr, values } => {
                if !(*dr > 0.0) || values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    return bad("tabulated potential needs dr > 0 and >= 2 finite samples");
                }
            }
        }
        Ok(())
    }

    /// Radius beyond which the potential is negligible; used for the
    /// box-size precondition.
    pub fn extent(&self) -> f64 {
        match self {
            PotentialSpec::Gaussian { width, .. } | PotentialSpec::ResonanceNotched { width, .. } => {
                *width
            }
            PotentialSpec::GaussianSum { terms } => {
                terms.iter().fold(0.0, |m: f64, t| m.max(t.width))
            }
            PotentialSpec::TabulatedRadial { dr, values } => {
                dr * (values.len() - 1) as f64 / 8.0
            }
        }
    }

    pub fn is_spherically_symmetric(&self) -> bool {
        match self {
            PotentialSpec::ResonanceNotched { velocity, .. } => {
                velocity.iter().all(|v| *v == 0.0)
            }
            _ => true,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Gaussian { amplitude, .. }
            | PotentialSpec::ResonanceNotched { amplitude, .. } => *amplitude == 0.0,
            PotentialSpec::GaussianSum { terms } => terms.iter().all(|t| t.amplitude == 0.0),
            PotentialSpec::TabulatedRadial { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Returns a copy with the amplitude multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self.clone() {
            PotentialSpec::Gaussian { amplitude, width } => PotentialSpec::Gaussian {
                amplitude: c * amplitude,
                width,
            },
            PotentialSpec::ResonanceNotched {
                amplitude,
                width,
                velocity,
            } => PotentialSpec::ResonanceNotched {
                amplitude: c * amplitude,
                width,
                velocity,
            },
            PotentialSpec::GaussianSum { terms } => PotentialSpec::GaussianSum {
                terms: terms
                    .into_iter()
                    .map(|t| GaussianTerm {
                        amplitude: c * t.amplitude,
                        width: t.width,
                    })
                    .collect(),
            },
            PotentialSpec::TabulatedRadial { dr, values } => PotentialSpec::TabulatedRadial {
                dr,
                values: values.into_iter().map(|v| c * v).collect(),
            },
        }
    }

    /// Returns `W(x/λ)` (spatial dilation by `λ`).
    pub fn dilated(&self, lambda: f64) -> Self {
        match self.clone() {
            PotentialSpec::Gaussian { amplitude, width } => PotentialSpec::Gaussian {
                amplitude,
                width: lambda * width,
            },
            PotentialSpec::ResonanceNotched {
                amplitude,
                width,
                velocity,
            } => PotentialSpec::ResonanceNotched {
                amplitude,
                width: lambda * width,
                velocity,
            },
            PotentialSpec::GaussianSum { terms } => PotentialSpec::GaussianSum {
                terms: terms
                    .into_iter()
                    .map(|t| GaussianTerm {
                        amplitude: t.amplitude,
                        width: lambda * t.width,
                    })
                    .collect(),
            },
            PotentialSpec::TabulatedRadial { dr, values } => PotentialSpec::TabulatedRadial {
                dr: lambda * dr,
                values,
            },
        }
    }

    /// Radial profile `W(r)` for spherically symmetric kinds.
    pub fn radial(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Gaussian { amplitude, width } => {
                amplitude * (-0.5 * r * r / (width * width)).exp()
            }
            PotentialSpec::GaussianSum { terms } => terms
                .iter()
                .map(|t| t.amplitude * (-0.5 * r * r / (t.width * t.width)).exp())
                .sum(),
            PotentialSpec::TabulatedRadial { dr, values } => {
                let s = r / dr;
                let k = s.floor() as usize;
                if k + 1 >= values.len() {
                    if k + 1 == values.len() && s == k as f64 {
                        values[k]
                    } else {
                        0.0
                    }
                } else {
                    let f = s - k as f64;
                    values[k] * (1.0 - f) + values[k + 1] * f
                }
            }
            PotentialSpec::ResonanceNotched { .. } => f64::NAN,
        }
    }

    /// Closed-form (or radial-quadrature) transform `Ŵ(ξ)`.
    pub fn w_hat(&self, xi: [f64; 3]) -> f64 {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        match self {
            PotentialSpec::Gaussian { amplitude, width } => gauss_hat(*amplitude, *width, r2),
            PotentialSpec::GaussianSum { terms } => {
                terms.iter().map(|t| gauss_hat(t.amplitude, t.width, r2)).sum()
            }
            PotentialSpec::ResonanceNotched {
                amplitude,
                width,
                velocity,
            } => {
                let vx = velocity[0] * xi[0] + velocity[1] * xi[1] + velocity[2] * xi[2];
                let s2 = 1.0 / (width * width);
                gauss_hat(*amplitude, *width, r2) * (r2 * (1.0 + r2) - vx * vx) / (s2 * s2)
            }
            PotentialSpec::TabulatedRadial { dr, values } => tabulated_hat(*dr, values, r2.sqrt()),
        }
    }

    /// Samples `W` on the grid (physical representation, real-valued).
    pub fn eval(&self, grid: &FourierGrid3) -> ComplexField {
        match self {
            PotentialSpec::ResonanceNotched { .. } => {
                let mut f = ComplexField::from_symbol(grid, |x| Complex64::new(self.w_hat(x), 0.0));
                for (idx, z) in f.data_mut().iter_mut().enumerate() {
                    if grid.is_nyquist_plane(idx) {
                        *z = Complex64::new(0.0, 0.0);
                    }
                }
                let mut p = f.into_physical();
                p.data_mut().iter_mut().for_each(|z| z.im = 0.0);
                p
            }
            _ => ComplexField::from_fn(grid, |x| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                Complex64::new(self.radial(r), 0.0)
            }),
        }
    }
}

/// `4π ∫ W(r) r² sinc(ρ r) dr` for the piecewise-linear profile, with
/// Gauss–Legendre quadrature on each interval.
fn tabulated_hat(dr: f64, values: &[f64], rho: f64) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let mut s = 0.0;
    for k in 0..values.len() - 1 {
        let a = k as f64 * dr;
        for (x, w) in X.iter().zip(W.iter()) {
            let f = 0.5 * (x + 1.0);
            let r = a + f * dr;
            let wr = values[k] * (1.0 - f) + values[k + 1] * f;
            let sinc = if rho * r == 0.0 {
                1.0
            } else {
                (rho * r).sin() / (rho * r)
            };
            s += 0.5 * dr * w * wr * r * r * sinc;
        }
    }
    4.0 * PI * s
}

/// `W` sampled on the grid: `eval_W`.
pub fn eval_w(spec: &PotentialSpec, grid: &FourierGrid3) -> Result<ComplexField> {
    spec.validate()?;
    if spec.extent() > grid.box_length() / 8.0 {
        return Err(Error::InvalidArgument(format!(
            "potential width {} exceeds L/8 = {}",
            spec.extent(),
            grid.box_length() / 8.0
        )));
    }
    Ok(spec.eval(grid))
}

/// Discrete spectrum of the sampled potential with the unpaired Nyquist
/// planes removed, so that every field it drives stays real-consistent.
pub fn grid_spectrum(spec: &PotentialSpec, grid: &FourierGrid3) -> Result<ComplexField> {
    let mut s = eval_w(spec, grid)?.into_spectral();
    let g = grid.clone();
    for (idx, z) in s.data_mut().iter_mut().enumerate() {
        if g.is_nyquist_plane(idx) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    Ok(s)
}

/// Discrete `‖⟨x⟩^N f‖_{L²}` with minimal-image `|x|`.
pub fn weighted_norm(f: &ComplexField, n: u32) -> f64 {
    let p = f.clone().into_physical();
    let g = p.grid().clone();
    let s: f64 = p
        .data()
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let x = g.position(idx);
            let w = 1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            w.powi(n as i32) * z.norm_sqr()
        })
        .sum();
    (s * g.cell_volume()).sqrt()
}

/// Hypothesis report for a potential and a velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub spherically_symmetric: bool,
    /// `min |Ŵ|` of the closed form over the grid nodes.
    pub min_abs_w_hat: f64,
    /// Radius of a sign change of `Ŵ` located by bisection, if any.
    pub w_hat_root: Option<f64>,
    pub nonvanishing: bool,
    pub weighted_norm_6: f64,
    pub weighted_norm_finite: bool,
    pub subsonic: bool,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.spherically_symmetric && self.nonvanishing && self.weighted_norm_finite && self.subsonic
    }
}

/// Locates a sign change of the radial transform on `(0, r_max]`.
pub fn find_w_hat_root(spec: &PotentialSpec, r_max: f64) -> Option<f64> {
    let f = |r: f64| spec.w_hat([0.0, 0.0, r]);
    let steps = 4000;
    let mut a = 0.0;
    let mut fa = f(a);
    for s in 1..=steps {
        let b = r_max * s as f64 / steps as f64;
        let fb = f(b);
        if fa == 0.0 {
            return Some(a);
        }
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    return Some(mid);
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    None
}

pub fn check_hypotheses(spec: &PotentialSpec, v: [f64; 3], grid: &FourierGrid3) -> Result<HypothesisReport> {
    spec.validate()?;
    let n = grid.len();
    let min_abs = (0..n)
        .map(|idx| spec.w_hat(grid.xi_at(idx)).abs())
        .fold(f64::INFINITY, f64::min);
    let xi_corner = grid.xi_max() * 3f64.sqrt();
    let root = if spec.is_spherically_symmetric() {
        find_w_hat_root(spec, xi_corner)
    } else {
        None
    };
    let w = spec.eval(grid);
    let wn = weighted_norm(&w, 6);
    let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    Ok(HypothesisReport {
        spherically_symmetric: spec.is_spherically_symmetric(),
        min_abs_w_hat: min_abs,
        w_hat_root: root,
        nonvanishing: min_abs > 0.0 && root.is_none(),
        weighted_norm_6: wn,
        weighted_norm_finite: wn.is_finite(),
        subsonic: speed < 1.0,
    })
}

/// `Ŵ` in the unitary convention `(2π)^{-3/2} ∫ W e^{-iξ·x} dx`.
pub fn w_hat_unitary(spec: &PotentialSpec, xi: [f64; 3]) -> f64 {
    spec.w_hat(xi) * (2.0 * PI).powf(-1.5)
}
