//! Simulation of high-gain twin-beam generation (parametric down-conversion
//! and four-wave mixing) in waveguides.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod coupling;
pub mod decompose;
pub mod dump;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod profile;
pub mod propagator;
pub mod pump;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use coupling::{GeneratorSource, TwinBeamGenerator, WaveguideSpec};
pub use decompose::{schmidt_decompose, TwinBeamDecomposition, TwinBeamObservables};
pub use grid::{make_grid, FrequencyGrid};
pub use propagator::{check_su11, propagate_trotter, propagate_uniform, Propagator};
pub use pump::{PumpField, PumpSpec};

/// Double-precision instantiations, used by the command-line tool.
pub type Grid64 = FrequencyGrid<f64>;
pub type Pump64 = PumpField<f64>;
pub type Waveguide64 = WaveguideSpec<f64>;
pub type Generator64 = TwinBeamGenerator<f64>;
pub type Propagator64 = Propagator<f64>;
pub type Decomposition64 = TwinBeamDecomposition<f64>;

/// Single-precision instantiations.
pub type Grid32 = FrequencyGrid<f32>;
pub type Pump32 = PumpField<f32>;
pub type Waveguide32 = WaveguideSpec<f32>;
pub type Generator32 = TwinBeamGenerator<f32>;
pub type Propagator32 = Propagator<f32>;
pub type Decomposition32 = TwinBeamDecomposition<f32>;
