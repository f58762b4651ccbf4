//! Mixed extreme value model for calibrating long reanalysis extremes
//! against short instrumental records.
//!
//! An extreme value law (GEV or Pareto-Poisson) is fitted to reanalysis
//! annual maxima `x`, a heteroscedastic normal regression to the paired
//! differences `y = z - x`, and the two are composed into the distribution
//! of instrumental maxima `z`. Return levels come with delta-method bands.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for the common case.

pub mod diagnostics;
pub mod error;
pub mod evd;
pub mod fitting;
pub mod hetreg;
pub mod linalg;
pub mod mixed;
pub mod optimize;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod series;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type GevParams64 = evd::GevParams<f64>;
pub type GevParams32 = evd::GevParams<f32>;
pub type ParetoPoissonParams64 = evd::ParetoPoissonParams<f64>;
pub type ParetoPoissonParams32 = evd::ParetoPoissonParams<f32>;
pub type EvModel64 = evd::EvModel<f64>;
pub type EvModel32 = evd::EvModel<f32>;
pub type FitResult64 = fitting::FitResult<f64>;
pub type FitResult32 = fitting::FitResult<f32>;
pub type EvFit64 = fitting::EvFit<f64>;
pub type EvFit32 = fitting::EvFit<f32>;
pub type HetRegModel64 = hetreg::HetRegModel<f64>;
pub type HetRegModel32 = hetreg::HetRegModel<f32>;
pub type HetRegFit64 = hetreg::HetRegFit<f64>;
pub type HetRegFit32 = hetreg::HetRegFit<f32>;
pub type PairedMaxima64 = hetreg::PairedMaxima<f64>;
pub type MixedModel64 = mixed::MixedModel<f64>;
pub type MixedModel32 = mixed::MixedModel<f32>;
pub type MixtureDist64 = mixed::MixtureDist<f64>;
pub type SimulationConfig64 = simulate::SimulationConfig<f64>;
