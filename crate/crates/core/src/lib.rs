//! Portfolio choice under small proportional transaction costs.
//!
//! Closed-form frictionless solutions (Black–Scholes and Kim–Omberg), the
//! explicit first-corrector solution and the resulting no-trade regions,
//! leading-order welfare losses, path simulation of the frictional policies,
//! and a policy-iteration solver for the multi-asset ergodic corrector.
//!
//! Numerical code is generic over the scalar type. The aliases at the crate
//! root fix it to `f64`.

pub mod corrector;
pub mod dense;
pub mod ergodic;
pub mod error;
pub mod frictionless;
pub mod models;
pub mod montecarlo;
pub mod quadrature;
pub mod scalar;
pub mod simulate;
pub mod welfare;

pub use error::{Error, Result};
pub use models::Validate;
pub use scalar::{Rational, Real, Scalar};

pub type BlackScholes = models::BlackScholesParams<f64>;
pub type KimOmberg = models::KimOmbergParams<f64>;
pub type Prefs = models::Preferences<f64>;
pub type Costs = models::CostSpec<f64>;
pub type MultiAsset = models::MultiAssetParams<f64>;
pub type Riccati = frictionless::RiccatiCoefficients<f64>;
pub type Stationary = frictionless::StationaryPolicy<f64>;
pub type KimOmbergSolution = frictionless::KimOmbergModel<f64>;
pub type Corrector = corrector::CorrectorSolution<f64>;
pub type Region = corrector::NoTradeRegion<f64>;
