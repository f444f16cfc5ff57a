use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::grid::FourierGrid3;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Physical,
    Spectral,
}

/// Complex samples on a grid, in physical or spectral representation.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: FourierGrid3,
    data: Vec<Complex64>,
    repr: Representation,
}

impl ComplexField {
    pub fn zeros(grid: &FourierGrid3, repr: Representation) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
            repr,
        }
    }

    pub fn from_data(grid: &FourierGrid3, data: Vec<Complex64>, repr: Representation) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            data,
            repr,
        })
    }

    /// Samples `f` at the minimal-image positions of the grid.
    pub fn from_fn<F>(grid: &FourierGrid3, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64,
    {
        let x = grid.coordinates();
        let n = grid.n();
        let mut data = Vec::with_capacity(grid.len());
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    data.push(f([x[i], x[j], x[k]]));
                }
            }
        }
        Self {
            grid: grid.clone(),
            data,
            repr: Representation::Physical,
        }
    }

    /// Spectral field `f̂(ξ)` sampled at the full wavenumbers.
    pub fn from_symbol<F>(grid: &FourierGrid3, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64,
    {
        Self {
            grid: grid.clone(),
            data: grid.mode_table(f),
            repr: Representation::Spectral,
        }
    }

    pub fn grid(&self) -> &FourierGrid3 {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn into_spectral(mut self) -> Self {
        if self.repr == Representation::Physical {
            fft::forward_in_place(&self.grid, &mut self.data);
            self.repr = Representation::Spectral;
        }
        self
    }

    pub fn into_physical(mut self) -> Self {
        if self.repr == Representation::Spectral {
            fft::inverse_in_place(&self.grid, &mut self.data);
            self.repr = Representation::Physical;
        }
        self
    }

    pub fn into_representation(self, repr: Representation) -> Self {
        match repr {
            Representation::Physical => self.into_physical(),
            Representation::Spectral => self.into_spectral(),
        }
    }

    /// Squared L² norm, `∫|f|² dx`, valid in either representation.
    pub fn norm_sq(&self) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        match self.repr {
            Representation::Physical => s * self.grid.cell_volume(),
            Representation::Spectral => s / self.grid.volume(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `∫ conj(f) g dx`; both fields must share grid and representation.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(match self.repr {
            Representation::Physical => s * self.grid.cell_volume(),
            Representation::Spectral => s / self.grid.volume(),
        })
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.repr != other.repr {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_re(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.re.abs()))
    }

    pub fn max_abs_im(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn scale(mut self, a: Complex64) -> Self {
        self.data.iter_mut().for_each(|z| *z *= a);
        self
    }

    /// `self + a * other`.
    pub fn axpy(mut self, a: Complex64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
        Ok(self)
    }

    /// Pointwise real part of the represented function, as a field in the
    /// same representation.
    pub fn real_part(&self) -> Self {
        self.split_parts(true)
    }

    /// Pointwise imaginary part of the represented function.
    pub fn imag_part(&self) -> Self {
        self.split_parts(false)
    }

    fn split_parts(&self, real: bool) -> Self {
        let data = match self.repr {
            Representation::Physical => self
                .data
                .iter()
                .map(|z| Complex64::new(if real { z.re } else { z.im }, 0.0))
                .collect(),
            Representation::Spectral => (0..self.data.len())
                .map(|idx| {
                    let a = self.data[idx];
                    let b = self.data[self.grid.neg_index(idx)].conj();
                    if real {
                        (a + b) * 0.5
                    } else {
                        (a - b) * Complex64::new(0.0, -0.5)
                    }
                })
                .collect(),
        };
        Self {
            grid: self.grid.clone(),
            data,
            repr: self.repr,
        }
    }

    /// Translation `f(x - X)`, realized as the spectral phase `e^{-iξ·X}`.
    /// Exact for lattice vectors.
    pub fn translate(&self, x: [f64; 3]) -> Self {
        let repr = self.repr;
        let mut s = self.clone().into_spectral();
        let g = &s.grid;
        let n = g.n();
        let xi = g.wavenumbers();
        let ph: Vec<[Complex64; 3]> = (0..n)
            .map(|i| {
                [
                    Complex64::from_polar(1.0, -xi[i] * x[0]),
                    Complex64::from_polar(1.0, -xi[i] * x[1]),
                    Complex64::from_polar(1.0, -xi[i] * x[2]),
                ]
            })
            .collect();
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                let pjk = ph[j][1] * ph[k][2];
                for p in ph.iter() {
                    s.data[idx] *= p[0] * pjk;
                    idx += 1;
                }
            }
        }
        s.into_representation(repr)
    }
}
