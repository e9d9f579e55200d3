//! Regression-discontinuity estimation for outcomes in geodesic metric
//! spaces: local Frechet regression, sharp and fuzzy estimators, automatic
//! bandwidth selection and a Monte Carlo lab.

pub mod bandwidth;
pub mod error;
pub mod frechet;
pub mod fuzzy;
pub mod sample;
pub mod sharp;
pub mod simlab;
pub mod spaces;

pub use bandwidth::{select_bandwidth, BandwidthConfig, BandwidthSearch};
pub use error::{Error, Result, Warning};
pub use frechet::{
    FrechetSolveConfig, KernelKind, KernelSide, KernelSpec, LfrEngine, Side, WeightProfile,
};
pub use sample::{RddSample, Record};
pub use spaces::{GeodesicEffect, MetricObject, Space, SpaceDescriptor, SpaceTag, SpdMetric};
