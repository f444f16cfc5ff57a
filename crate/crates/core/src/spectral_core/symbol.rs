use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::field::{ComplexField, Representation};
use crate::error::{Error, Result};

/// Value assigned to the `ξ = 0` mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Origin {
    Value(Complex64),
    /// The symbol is singular or undefined at the origin; the mode is set to 0.
    Excluded,
}

/// Fourier multiplier symbol `m(ξ)`.
#[derive(Clone)]
pub struct SymbolFn {
    eval: Arc<dyn Fn([f64; 3]) -> Complex64 + Send + Sync>,
    origin: Origin,
    class_tag: Option<(f64, f64)>,
    odd: bool,
    name: String,
}

impl fmt::Debug for SymbolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolFn")
            .field("name", &self.name)
            .field("origin", &self.origin)
            .field("class_tag", &self.class_tag)
            .finish()
    }
}

#[inline]
fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[inline]
fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`.
#[inline]
pub fn japanese(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

/// Dispersion symbol `h_v(ξ) = |ξ|⟨ξ⟩ - v·ξ`.
#[inline]
pub fn symbol_h_v(xi: [f64; 3], v: [f64; 3]) -> f64 {
    let r = norm3(xi);
    r * japanese(r) - dot3(v, xi)
}

impl SymbolFn {
    pub fn new<F>(name: &str, f: F, origin: Origin) -> Self
    where
        F: Fn([f64; 3]) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            origin,
            class_tag: None,
            odd: false,
            name: name.to_string(),
        }
    }

    /// Real-valued symbol.
    pub fn real<F>(name: &str, f: F, origin: Origin) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, move |x| Complex64::new(f(x), 0.0), origin)
    }

    /// Claims membership of the class `M_a^b`.
    pub fn with_class(mut self, a: f64, b: f64) -> Self {
        self.class_tag = Some((a, b));
        self
    }

    /// Marks the symbol as having an odd part, so the unpaired Nyquist planes
    /// are zeroed when it is applied on a grid.
    pub fn odd(mut self) -> Self {
        self.odd = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn class_tag(&self) -> Option<(f64, f64)> {
        self.class_tag
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    #[inline]
    pub fn eval(&self, xi: [f64; 3]) -> Complex64 {
        (self.eval)(xi)
    }

    pub fn identity() -> Self {
        Self::real("1", |_| 1.0, Origin::Value(Complex64::new(1.0, 0.0))).with_class(0.0, 0.0)
    }

    /// `i ξ_j`.
    pub fn derivative(j: usize) -> Self {
        Self::new(
            "i xi_j",
            move |x| Complex64::new(0.0, x[j]),
            Origin::Value(Complex64::new(0.0, 0.0)),
        )
        .odd()
    }

    /// `|ξ|^b ⟨ξ⟩^{-b}`, the symbol of `U^b`.
    pub fn u_power(b: f64) -> Self {
        let origin = if b > 0.0 {
            Origin::Value(Complex64::new(0.0, 0.0))
        } else if b == 0.0 {
            Origin::Value(Complex64::new(1.0, 0.0))
        } else {
            Origin::Excluded
        };
        Self::real(
            "u^b",
            move |x| {
                let r = norm3(x);
                (r / japanese(r)).powf(b)
            },
            origin,
        )
        .with_class(b, 0.0)
    }

    /// `|ξ|⟨ξ⟩`, the symbol of `H`.
    pub fn h() -> Self {
        Self::real(
            "h",
            |x| {
                let r = norm3(x);
                r * japanese(r)
            },
            Origin::Value(Complex64::new(0.0, 0.0)),
        )
        .with_class(1.0, 2.0)
    }

    /// `h_v`, the symbol of `H_v`.
    pub fn h_v(v: [f64; 3]) -> Self {
        Self::real("h_v", move |x| symbol_h_v(x, v), Origin::Value(Complex64::new(0.0, 0.0)))
            .with_class(1.0, 2.0)
            .odd()
    }

    /// `h_v^{-1}`.
    pub fn h_v_inverse(v: [f64; 3]) -> Self {
        Self::real("h_v^-1", move |x| 1.0 / symbol_h_v(x, v), Origin::Excluded)
            .with_class(-1.0, -2.0)
            .odd()
    }

    /// `h^{-σ}`.
    pub fn h_power(sigma: f64) -> Self {
        let origin = if sigma > 0.0 {
            Origin::Excluded
        } else {
            Origin::Value(Complex64::new(if sigma == 0.0 { 1.0 } else { 0.0 }, 0.0))
        };
        Self::real(
            "h^-sigma",
            move |x| {
                let r = norm3(x);
                (r * japanese(r)).powf(-sigma)
            },
            origin,
        )
    }

    /// `e^{-ith}`, the free propagator.
    pub fn propagator(t: f64) -> Self {
        Self::new(
            "exp(-ith)",
            move |x| {
                let r = norm3(x);
                Complex64::from_polar(1.0, -t * r * japanese(r))
            },
            Origin::Value(Complex64::new(1.0, 0.0)),
        )
    }

    /// `|ξ|^b`.
    pub fn abs_power(b: f64) -> Self {
        let origin = if b > 0.0 {
            Origin::Value(Complex64::new(0.0, 0.0))
        } else {
            Origin::Excluded
        };
        Self::real("|xi|^b", move |x| norm3(x).powf(b), origin)
    }

    /// `log|ξ|`.
    pub fn log_abs() -> Self {
        Self::real("log|xi|", |x| norm3(x).ln(), Origin::Excluded).with_class(0.0, 0.0)
    }
}

/// Multiplies the spectral samples of `f` by `m(ξ)`; the result is returned
/// in the representation of the input.
pub fn apply_multiplier(f: &ComplexField, m: &SymbolFn) -> Result<ComplexField> {
    let repr = f.representation();
    let mut s = f.clone().into_spectral();
    let grid = s.grid().clone();
    let data = s.data_mut();
    for (idx, z) in data.iter_mut().enumerate() {
        let factor = if idx == 0 {
            match m.origin() {
                Origin::Value(c) => c,
                Origin::Excluded => Complex64::new(0.0, 0.0),
            }
        } else if m.is_odd() && grid.is_nyquist_plane(idx) {
            Complex64::new(0.0, 0.0)
        } else {
            m.eval(grid.xi_at(idx))
        };
        if !(factor.re.is_finite() && factor.im.is_finite()) {
            return Err(Error::NonFiniteSymbol { index: idx });
        }
        *z *= factor;
    }
    Ok(s.into_representation(repr))
}

/// `U_r f = U(Re f) + i Im f`.
pub fn apply_ur(f: &ComplexField) -> ComplexField {
    ur_map(f, false)
}

/// `U_r^{-1} f = U^{-1}(Re f) + i Im f`, with the `ξ = 0` mode of the real
/// part set to zero.
pub fn apply_ur_inv(f: &ComplexField) -> ComplexField {
    ur_map(f, true)
}

fn ur_map(f: &ComplexField, inverse: bool) -> ComplexField {
    let repr = f.representation();
    let s = f.clone().into_spectral();
    let grid = s.grid().clone();
    let re = s.real_part();
    let im = s.imag_part();
    let data: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let x = grid.xi_at(idx);
            let r = norm3(x);
            let u = r / japanese(r);
            let scale = if inverse {
                if idx == 0 {
                    0.0
                } else {
                    1.0 / u
                }
            } else {
                u
            };
            re.data()[idx] * scale + Complex64::new(0.0, 1.0) * im.data()[idx]
        })
        .collect();
    ComplexField::from_data(&grid, data, Representation::Spectral)
        .expect("same grid")
        .into_representation(repr)
}
