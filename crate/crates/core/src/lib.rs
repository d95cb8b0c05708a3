//! Ruelle transfer operators on discretized symbolic spaces `Ω = E^ℕ`.
//!
//! The crate tabulates potentials on cylinders, applies the transfer operator
//! `ℒ_f φ(x) = ∫ e^{f(ax)} φ(ax) dp(a)` through a sparse kernel, and computes
//! the maximal eigendata: pressure, spectral radius, eigenfunction and
//! eigenmeasure. From those it builds the shift-invariant equilibrium measure
//! `μ = h·ν` and the entropy and variational diagnostics around it.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the common double-precision case.

pub mod error;
pub mod measures;
pub mod potential;
pub mod scalar;
pub mod space;
pub mod spectral;
pub mod transfer;

pub use error::{Error, Result};
pub use measures::{
    CylinderMeasure, CylinderProcess, EntropyReport, EquilibriumState, MarkovMeasure,
};
pub use potential::{GeneralPotential, Potential, TailRule};
pub use scalar::Real;
pub use space::{SymbolSpace, Word};
pub use spectral::{PressureEstimate, SpectralData, SpectralSettings};
pub use transfer::{CylinderFunction, TransferKernel};

/// Library version, echoed in CLI report headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type SymbolSpace64 = SymbolSpace<f64>;
pub type Potential64 = Potential<f64>;
pub type GeneralPotential64 = GeneralPotential<f64>;
pub type CylinderFunction64 = CylinderFunction<f64>;
pub type TransferKernel64 = TransferKernel<f64>;
pub type CylinderMeasure64 = CylinderMeasure<f64>;
pub type SpectralData64 = SpectralData<f64>;
pub type PressureEstimate64 = PressureEstimate<f64>;
pub type EquilibriumState64 = EquilibriumState<f64>;
pub type MarkovMeasure64 = MarkovMeasure<f64>;
pub type EntropyReport64 = EntropyReport<f64>;

pub type SymbolSpace32 = SymbolSpace<f32>;
pub type Potential32 = Potential<f32>;
pub type SpectralData32 = SpectralData<f32>;
