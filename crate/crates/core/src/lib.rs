//! Thermodynamic formalism on subshifts of finite type, at scales where
//! everything is exactly enumerable: pressure along several routes,
//! equilibrium states of the transfer operator, Legendre-dual rate
//! functions, entropy approximation by moment matching, and empirical
//! large-deviation reports.

pub mod convex;
pub mod error;
pub mod io;
pub mod ldp;
pub mod linalg;
pub mod measure;
pub mod potential;
pub mod pressure;
pub mod report;
pub mod scalar;
pub mod shift;

pub use error::{Error, Result};
pub use scalar::{ExtReal, KahanSum, Scalar};
pub use shift::{LatticeBox, Recoding, ShiftSpace, Symbol, Word};

/// Concrete `f64` aliases for the common case.
pub type Potential64 = potential::Potential<f64>;
pub type ObservableFamily64 = potential::ObservableFamily<f64>;
pub type PairPotential64 = potential::PairPotential<f64>;
pub type MarkovMeasure64 = measure::MarkovMeasure<f64>;
pub type InvariantMeasure64 = measure::InvariantMeasure<f64>;
pub type ExtReal64 = scalar::ExtReal<f64>;
pub type PressureResult64 = pressure::PressureResult<f64>;
pub type RateFunctionHandle64 = convex::RateFunctionHandle<f64>;
pub type RateValue64 = convex::RateValue<f64>;
pub type GridConjugate64 = convex::GridConjugate<f64>;
pub type ApproximationStep64 = convex::ApproximationStep<f64>;
pub type WeightedPointCloud64 = ldp::WeightedPointCloud<f64>;
pub type BoxQuery64 = ldp::BoxQuery<f64>;
pub type LdpReport64 = ldp::LdpReport<f64>;
