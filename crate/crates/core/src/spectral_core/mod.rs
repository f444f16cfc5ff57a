//! Fourier grids, transforms, multipliers and symbol diagnostics.

mod fft;
mod field;
mod grid;
mod littlewood_paley;
mod symbol;
mod symbol_class;

pub use field::{ComplexField, Representation};
pub use grid::{make_grid, FourierGrid3};
pub use littlewood_paley::{bernstein_ratio, lp_project, phi, psi, psi_k, resolvable_bands};
pub use symbol::{apply_multiplier, apply_ur, apply_ur_inv, japanese, symbol_h_v, Origin, SymbolFn};
pub use symbol_class::{verify_symbol_class, SymbolClassReport};

/// `to_spectral`: forward transform with the cell-volume normalization.
pub fn to_spectral(f: &ComplexField) -> ComplexField {
    f.clone().into_spectral()
}

/// `to_physical`: inverse transform.
pub fn to_physical(f: &ComplexField) -> ComplexField {
    f.clone().into_physical()
}
