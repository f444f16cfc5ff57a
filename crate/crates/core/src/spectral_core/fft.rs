use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::Fft;

use super::grid::FourierGrid3;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn transpose_square(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 16;
    for jb in (0..n).step_by(B) {
        for ib in (0..n).step_by(B) {
            for j in jb..(jb + B).min(n) {
                for i in ib..(ib + B).min(n) {
                    dst[i * n + j] = src[j * n + i];
                }
            }
        }
    }
}

fn transform(n: usize, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
    let n2 = n * n;
    let scratch_len = fft.get_inplace_scratch_len();
    // x and y axes, plane by plane
    data.par_chunks_mut(n2).for_each(|plane| {
        let mut scratch = vec![ZERO; scratch_len];
        fft.process_with_scratch(plane, &mut scratch);
        let mut buf = vec![ZERO; n2];
        transpose_square(plane, &mut buf, n);
        fft.process_with_scratch(&mut buf, &mut scratch);
        transpose_square(&buf, plane, n);
    });
    // z axis: (k, p) -> (p, k) with p = i + n j
    let mut buf = vec![ZERO; data.len()];
    for k in 0..n {
        let row = &data[k * n2..(k + 1) * n2];
        for (p, v) in row.iter().enumerate() {
            buf[p * n + k] = *v;
        }
    }
    buf.par_chunks_mut(n * 64).for_each(|chunk| {
        let mut scratch = vec![ZERO; scratch_len];
        fft.process_with_scratch(chunk, &mut scratch);
    });
    for k in 0..n {
        let row = &mut data[k * n2..(k + 1) * n2];
        for (p, v) in row.iter_mut().enumerate() {
            *v = buf[p * n + k];
        }
    }
}

/// Forward transform `f̂(ξ) = (L/N)^3 Σ_x f(x) e^{-iξ·x}`, in place.
pub fn forward_in_place(grid: &FourierGrid3, data: &mut [Complex64]) {
    assert_eq!(data.len(), grid.len());
    transform(grid.n(), data, grid.fft_forward());
    let s = grid.cell_volume();
    data.par_iter_mut().for_each(|v| *v *= s);
}

/// Inverse transform `f(x) = L^{-3} Σ_ξ f̂(ξ) e^{iξ·x}`, in place.
pub fn inverse_in_place(grid: &FourierGrid3, data: &mut [Complex64]) {
    assert_eq!(data.len(), grid.len());
    transform(grid.n(), data, grid.fft_inverse());
    let s = 1.0 / grid.volume();
    data.par_iter_mut().for_each(|v| *v *= s);
}
