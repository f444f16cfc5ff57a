use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic cubic box `[-L/2, L/2)^3` sampled with `N` points per axis.
///
/// Samples are stored with the x index fastest: `idx = i + N (j + N k)`.
/// Wavenumbers follow the FFT ordering `0, 1, .., N/2-1, -N/2, .., -1`
/// scaled by `2π/L`.
#[derive(Clone)]
pub struct FourierGrid3 {
    n: usize,
    l: f64,
    xi: Vec<f64>,
    xi_d: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FourierGrid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierGrid3")
            .field("n", &self.n)
            .field("l", &self.l)
            .finish()
    }
}

impl PartialEq for FourierGrid3 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.l.to_bits() == other.l.to_bits()
    }
}

/// Builds a grid; `N` must be even and at least 8, `L` positive and finite.
pub fn make_grid(n: usize, l: f64) -> Result<FourierGrid3> {
    FourierGrid3::new(n, l)
}

impl FourierGrid3 {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {n}"
            )));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {l}"
            )));
        }
        let dk = 2.0 * PI / l;
        let xi: Vec<f64> = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                m as f64 * dk
            })
            .collect();
        let mut xi_d = xi.clone();
        xi_d[n / 2] = 0.0;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            n,
            l,
            xi,
            xi_d,
            fwd,
            inv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.l
    }

    /// Number of samples, `N^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.l.powi(3)
    }

    /// Per-axis wavenumber table in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.xi
    }

    /// Wavenumbers used for odd symbols (derivatives, `v·ξ`): the unpaired
    /// Nyquist entry is set to zero.
    pub fn derivative_wavenumbers(&self) -> &[f64] {
        &self.xi_d
    }

    /// Largest paired per-axis wavenumber, `2π (N/2 - 1) / L`.
    pub fn xi_max(&self) -> f64 {
        2.0 * PI * (self.n / 2 - 1) as f64 / self.l
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Index of the mode `-ξ` (or of the sample at `-x`).
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (i, j, k) = self.coords(idx);
        self.index((n - i) % n, (n - j) % n, (n - k) % n)
    }

    #[inline]
    pub fn xi_at(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.coords(idx);
        [self.xi[i], self.xi[j], self.xi[k]]
    }

    #[inline]
    pub fn xi_d_at(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.coords(idx);
        [self.xi_d[i], self.xi_d[j], self.xi_d[k]]
    }

    /// True if any axis index of the mode is the unpaired Nyquist index.
    #[inline]
    pub fn is_nyquist_plane(&self, idx: usize) -> bool {
        let (i, j, k) = self.coords(idx);
        let h = self.n / 2;
        i == h || j == h || k == h
    }

    /// Minimal-image coordinate of axis index `i`.
    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        let m = if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        };
        m as f64 * self.dx()
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.coords(idx);
        [self.coordinate(i), self.coordinate(j), self.coordinate(k)]
    }

    /// Minimal-image coordinates of all axis indices.
    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coordinate(i)).collect()
    }

    pub(crate) fn fft_forward(&self) -> &Arc<dyn Fft<f64>> {
        &self.fwd
    }

    pub(crate) fn fft_inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.inv
    }

    /// Fills a table `f(ξ)` over all modes using the full wavenumbers.
    pub fn mode_table<T, F>(&self, f: F) -> Vec<T>
    where
        F: Fn([f64; 3]) -> T,
    {
        let n = self.n;
        let mut out = Vec::with_capacity(self.len());
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    out.push(f([self.xi[i], self.xi[j], self.xi[k]]));
                }
            }
        }
        out
    }

    /// `|ξ|^2` over all modes.
    pub fn xi_sq_table(&self) -> Vec<f64> {
        self.mode_table(|x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    }

    /// Nyquist-plane mask (0 on planes, 1 elsewhere).
    pub fn nyquist_mask(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| if self.is_nyquist_plane(idx) { 0.0 } else { 1.0 })
            .collect()
    }

    /// Separable phase `e^{-i ξ_d · X}` with derivative wavenumbers, per axis.
    pub fn axis_phases(&self, x: [f64; 3]) -> [Vec<num_complex::Complex64>; 3] {
        let f = |a: f64| -> Vec<num_complex::Complex64> {
            self.xi_d
                .iter()
                .map(|&k| num_complex::Complex64::from_polar(1.0, -k * a))
                .collect()
        };
        [f(x[0]), f(x[1]), f(x[2])]
    }
}
