//! Boundary estimation from antenna reflection coefficients.
//!
//! A synthetic forward model turns a closed boundary and a ring of antennas
//! into swept-frequency reflection signals. Those are compressed with PCA and
//! regressed onto the per-antenna distance to the boundary by a small MLP; the
//! predicted landing points are closed with a periodic spline. Two classical
//! baselines and a set of shape metrics are provided for comparison.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dataset;
pub mod dimred;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod regressor;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double precision instantiations used by the forward model, baselines and CLI.
pub type Point = geometry::Point2<f64>;
pub type Boundary = geometry::Boundary<f64>;
pub type AntennaArray = geometry::AntennaArray<f64>;
pub type NormalLengths = geometry::NormalLengths<f64>;
pub type PcaModel = dimred::PcaModel<f64>;
pub type Mlp = regressor::Mlp<f64>;
pub type TrainedModel = regressor::TrainedModel<f64>;

/// Single precision variants for the dtype comparison.
pub type PcaModel32 = dimred::PcaModel<f32>;
pub type Mlp32 = regressor::Mlp<f32>;
pub type TrainedModel32 = regressor::TrainedModel<f32>;
