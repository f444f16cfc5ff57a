//! Spectral simulation of a classical particle coupled to a Klein–Gordon-type
//! field on a periodic box: traveling waves, coupled dynamics and the
//! memory-kernel reduction of the particle motion.

mod error;
pub mod dynamics;
pub mod fit;
pub mod memory_kernel;
pub mod potentials;
pub mod spectral_core;
pub mod traveling_wave;

pub use error::{Error, Result};
pub use fit::{fit_temporal_decay, linear_regression, loglog_fit, DecayFit};
pub use spectral_core::{ComplexField, FourierGrid3, Representation, SymbolFn};
pub use potentials::PotentialSpec;
pub use dynamics::{Dynamics, Scheme, SystemParams, SystemState, Trajectory};
pub use traveling_wave::{Regime, WaveProfile};
