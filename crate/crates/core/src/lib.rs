//! Consistent stochastic forward mortality surfaces.
//!
//! Surfaces live on the domain `{(s, y) : s + y ≥ 0}` (time to horizon `s`,
//! current age `y`) and are stored on a square grid in the chart
//! `(s, z = s + y)`. On that grid the shift semigroup is a row shift and
//! constant-age integration paths are grid diagonals.
//!
//! Modules, bottom up:
//! - [`levy`]: driving noise and cumulant functions.
//! - [`surface`]: grids, surfaces, transforms, quadrature, Gompertz-Makeham
//!   initial surfaces, the weighted Sobolev-type norm, CSV I/O.
//! - [`drift`]: consistency drifts for forward rates and improvements.
//! - [`simulate`]: path stepping, survival probabilities, ensembles and
//!   their diagnostics.
//! - [`cohort`]: death-time sampling from hazard paths, LLN and compensator
//!   checks.
//! - [`pricing`]: survivor bonds and annuities under deterministic rates.
//! - [`config`]: JSON scenario files.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cohort;
pub mod config;
pub mod drift;
pub mod error;
pub mod levy;
pub mod pricing;
pub mod scalar;
pub mod simulate;
pub mod surface;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LevyDriver = levy::LevyDriverSpec<f64>;
pub type Grid = surface::SurfaceGrid<f64>;
pub type Surface64 = surface::Surface<f64>;
pub type Surface32 = surface::Surface<f32>;
pub type AgeCurve64 = surface::AgeCurve<f64>;
pub type Gompertz = surface::GompertzParams<f64>;
pub type VolModel = drift::VolatilityModel<f64>;
pub type ScalarVol = drift::LevyScalarVol<f64>;
pub type Scenario64 = simulate::ScenarioConfig<f64>;
pub type State64 = simulate::PathState<f64>;
pub type Ensemble64 = simulate::PathEnsemble<f64>;
