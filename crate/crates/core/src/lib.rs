//! Natural-image segmentation by minimizing the total lossy coding length of
//! region textures and region boundaries.
//!
//! The pipeline: convert to Lab, stack `w x w` color windows and project them
//! with PCA ([`features`]), model each region's interior features as a
//! Gaussian and charge its rate-distortion cost ([`texturecoding`]), charge
//! region contours with an adaptive difference chain code
//! ([`boundarycoding`]), then greedily merge adjacent regions while the total
//! shrinks, over a hierarchy of window sizes ([`segmenter`]). [`metrics`]
//! and [`epsilonmodel`] cover evaluation and the learned choice of the
//! distortion level; [`harness`] ties them to datasets on disk.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common double-precision instantiations.

pub mod boundarycoding;
pub mod epsilonmodel;
pub mod error;
pub mod features;
pub mod harness;
pub mod imagecore;
pub mod labelmap;
mod mask;
pub mod metrics;
pub mod netpbm;
pub mod scalar;
pub mod segmenter;
pub mod texturecoding;

pub use error::{Error, Result};
pub use imagecore::ColorSpace;
pub use labelmap::LabelMap;
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type RasterImage = imagecore::RasterImage<Real>;
pub type RasterImageF32 = imagecore::RasterImage<f32>;
pub type FeatureField = features::FeatureField<Real>;
pub type PcaBasis = features::PcaBasis<Real>;
pub type RegionStats = features::RegionStats<Real>;
pub type CodingParams = texturecoding::CodingParams<Real>;
pub type ChainCodePrior = boundarycoding::ChainCodePrior<Real>;
pub type SegmentationReport = segmenter::SegmentationReport;
pub type EpsilonRegressor = epsilonmodel::EpsilonRegressor;
pub type DiscrepancyFit = epsilonmodel::DiscrepancyFit;
pub type ContrastFeatures = epsilonmodel::ContrastFeatures;
