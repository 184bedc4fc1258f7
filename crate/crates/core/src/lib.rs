//! Reflecting random walks in curvilinear wedges.
//!
//! The geometric, spectral and Lyapunov layers are generic over [`Scalar`]
//! (`f32` or `f64`); the kernels, simulator and statistics work in `f64`.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod lyapunov;
pub mod scalar;
pub mod simulator;
pub mod spectral;

pub use error::{Result, WedgeError};
pub use geometry::{Point, Region, Side, WedgeGeometry};
pub use lyapunov::{DriftPrediction, DriftSetting, FunctionKind, LyapunovParams};
pub use scalar::Scalar;
pub use spectral::{CovarianceSpec, DerivedAngles, Mat2, Thresholds};

pub type Point64 = Point<f64>;
pub type Point32 = Point<f32>;
pub type Geometry64 = WedgeGeometry<f64>;
pub type Geometry32 = WedgeGeometry<f32>;
pub type Covariance64 = CovarianceSpec<f64>;
pub type Covariance32 = CovarianceSpec<f32>;
pub type Params64 = LyapunovParams<f64>;
pub type Setting64 = DriftSetting<f64>;
