//! Learned choice of the distortion level from image contrast.
//!
//! Each training image contributes a convex quadratic fit of its discrepancy
//! against ε; a linear model ε = θᵀf over four contrast features is then
//! fitted in closed form to minimize the summed quadratics.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundarycoding::ChainCodePrior;
use crate::error::{Error, Result};
use crate::imagecore::RasterImage;
use crate::labelmap::LabelMap;
use crate::metrics::{evaluate, Metric};
use crate::scalar::Scalar;
use crate::segmenter::{build_features, to_lab, Segmenter, SegmenterConfig};

/// Downsampling factors of the contrast features.
pub const CONTRAST_SCALES: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// Range predictions are clamped into; also the span of the default grid.
pub const EPSILON_RANGE: [f64; 2] = [25.0, 400.0];

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// `25, 50, ..., 400`.
pub fn default_grid() -> Vec<f64> {
    (1..=16).map(|k| 25.0 * k as f64).collect()
}

/// Standard deviation of the lightness channel at four scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastFeatures {
    pub values: [f64; 4],
}

impl ContrastFeatures {
    fn vector(&self) -> Vector4<f64> {
        Vector4::from(self.values)
    }
}

/// Averages non-overlapping `f x f` blocks; trailing rows and columns that
/// do not fill a block are dropped unless the image is smaller than one.
fn box_downsample(values: &[f64], width: usize, height: usize, f: usize) -> (Vec<f64>, usize, usize) {
    let (bw, bh) = (f.min(width), f.min(height));
    let (ow, oh) = ((width / f).max(1), (height / f).max(1));
    let mut out = Vec::with_capacity(ow * oh);
    for br in 0..oh {
        for bc in 0..ow {
            let mut acc = 0.0;
            for r in br * bh..(br + 1) * bh {
                for c in bc * bw..(bc + 1) * bw {
                    acc += values[r * width + c];
                }
            }
            out.push(acc / (bw * bh) as f64);
        }
    }
    (out, ow, oh)
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Contrast of the Lab lightness channel at scales 1, 1/2, 1/4 and 1/8.
pub fn contrast_features<T: Scalar>(img: &RasterImage<T>) -> ContrastFeatures {
    let lab = to_lab(img);
    let lightness: Vec<f64> = lab.pixels().map(|p| p[0].as_f64()).collect();
    let (w, h) = (lab.width(), lab.height());
    let mut values = [0.0; 4];
    for (v, scale) in values.iter_mut().zip(CONTRAST_SCALES) {
        let f = (1.0 / scale).round() as usize;
        let (small, _, _) = box_downsample(&lightness, w, h, f);
        *v = population_std(&small);
    }
    ContrastFeatures { values }
}

/// Least-squares quadratic `a ε² + b ε + c` through discrepancy samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub samples: Vec<(f64, f64)>,
}

impl DiscrepancyFit {
    pub fn vertex(&self) -> f64 {
        -self.b / (2.0 * self.a)
    }

    pub fn eval(&self, eps: f64) -> f64 {
        (self.a * eps + self.b) * eps + self.c
    }
}

/// Ordinary least squares on the `(1, ε, ε²)` design. Fits whose curvature
/// is not clearly positive are rejected with [`Error::NonConvexFit`].
pub fn fit_quadratic(samples: &[(f64, f64)]) -> Result<DiscrepancyFit> {
    if samples.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "quadratic fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(e, d)| !e.is_finite() || !d.is_finite()) {
        return Err(Error::InvalidArgument("non-finite discrepancy sample".into()));
    }
    // scale ε to unit range so the design stays well conditioned
    let s = samples.iter().map(|(e, _)| e.abs()).fold(0.0, f64::max).max(1.0);
    let x = DMatrix::from_fn(samples.len(), 3, |r, c| (samples[r].0 / s).powi(c as i32));
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|(_, d)| *d));
    let svd = x.svd(true, true);
    let rank = svd.rank(1e-12 * svd.singular_values.max());
    if rank < 3 {
        return Err(Error::InvalidArgument(
            "quadratic fit needs at least 3 distinct distortion values".into(),
        ));
    }
    let coef = svd.solve(&y, 0.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (c, b, a) = (coef[0], coef[1] / s, coef[2] / (s * s));
    let d_max = samples.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max);
    if a <= 1e-12 * (d_max + 1.0) / (s * s) {
        return Err(Error::NonConvexFit(a));
    }
    Ok(DiscrepancyFit {
        a,
        b,
        c,
        samples: samples.to_vec(),
    })
}

/// Linear map from contrast features to ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRegressor {
    pub theta: [f64; 4],
    pub clamp: [f64; 2],
}

impl EpsilonRegressor {
    pub fn new(theta: [f64; 4]) -> Self {
        Self {
            theta,
            clamp: EPSILON_RANGE,
        }
    }

    /// θᵀf without clamping.
    pub fn predict_raw(&self, f: &ContrastFeatures) -> f64 {
        Vector4::from(self.theta).dot(&f.vector())
    }
}

/// Minimizes `Σ a_k (θᵀf_k)² + b_k θᵀf_k + ridge ‖θ‖²`:
/// θ = -½ (Σ a_k f_k f_kᵀ + ridge I)⁻¹ Σ b_k f_k.
pub fn train_regressor(
    fits: &[DiscrepancyFit],
    features: &[ContrastFeatures],
    ridge: f64,
) -> Result<EpsilonRegressor> {
    if fits.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if fits.len() != features.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} feature vectors", fits.len()),
            actual: format!("{}", features.len()),
        });
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge must be nonnegative, got {ridge}")));
    }
    let mut m = Matrix4::<f64>::identity() * ridge;
    let mut v = Vector4::<f64>::zeros();
    for (fit, f) in fits.iter().zip(features) {
        if !(fit.a > 0.0) {
            return Err(Error::NonConvexFit(fit.a));
        }
        let f = f.vector();
        m += f * f.transpose() * fit.a;
        v += f * fit.b;
    }
    let solution = match m.cholesky() {
        Some(chol) => chol.solve(&v),
        // rank-deficient without ridge: minimum-norm solution
        None => m
            .svd(true, true)
            .solve(&v, 1e-12 * m.norm())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?,
    };
    let theta = solution * -0.5;
    Ok(EpsilonRegressor::new([theta[0], theta[1], theta[2], theta[3]]))
}

/// θᵀf clamped into the regressor's range.
pub fn predict_epsilon(reg: &EpsilonRegressor, f: &ContrastFeatures) -> f64 {
    reg.predict_raw(f).clamp(reg.clamp[0], reg.clamp[1])
}

/// Discrepancy of the segmentation at each ε of `grid` (returned in
/// ascending ε). Features are computed once and the runs share them.
pub fn sample_discrepancy<T: Scalar>(
    img: &RasterImage<T>,
    superpixels: &LabelMap,
    truths: &[LabelMap],
    metric: Metric,
    grid: &[f64],
    config: &SegmenterConfig<T>,
) -> Result<Vec<(f64, f64)>> {
    if truths.is_empty() {
        return Err(Error::Empty("ground-truth list"));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let features = build_features(img, config.w_max, config.dim)?;
    grid.par_iter()
        .map(|&eps| {
            let mut seg = Segmenter::new(&features, superpixels, T::lit(eps), config.prior.clone())?;
            seg.run()?;
            let result = evaluate(metric, &seg.labels(), truths, None)?;
            Ok((eps, metric.discrepancy(result.value)))
        })
        .collect()
}

/// Same as [`sample_discrepancy`] with default segmentation settings.
pub fn sample_discrepancy_default<T: Scalar>(
    img: &RasterImage<T>,
    superpixels: &LabelMap,
    truths: &[LabelMap],
    metric: Metric,
) -> Result<Vec<(f64, f64)>> {
    let config = SegmenterConfig {
        prior: ChainCodePrior::bsd(),
        ..SegmenterConfig::new(T::lit(100.0))
    };
    sample_discrepancy(img, superpixels, truths, metric, &default_grid(), &config)
}

/// On-disk form of a trained regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonModel {
    pub theta: [f64; 4],
    pub scales: [f64; 4],
    pub clamp: [f64; 2],
    pub metric: Metric,
    pub trained_on: usize,
}

impl EpsilonModel {
    pub fn new(reg: &EpsilonRegressor, metric: Metric, trained_on: usize) -> Self {
        Self {
            theta: reg.theta,
            scales: CONTRAST_SCALES,
            clamp: reg.clamp,
            metric,
            trained_on,
        }
    }

    pub fn regressor(&self) -> EpsilonRegressor {
        EpsilonRegressor {
            theta: self.theta,
            clamp: self.clamp,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.scales != CONTRAST_SCALES {
            return Err(Error::Unsupported(format!("contrast scales {:?}", model.scales)));
        }
        if !(model.clamp[0] <= model.clamp[1]) || model.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Format("invalid epsilon model".into()));
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
