//! Dataset-level drivers: batch segmentation and evaluation, ε training and
//! the color-space compressibility study. Images are processed in parallel
//! on the current rayon pool; results are always sorted by image id.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epsilonmodel::{
    contrast_features, fit_quadratic, predict_epsilon, sample_discrepancy, train_regressor,
    ContrastFeatures, DiscrepancyFit, EpsilonModel, DEFAULT_RIDGE,
};
use crate::error::{Error, Result};
use crate::features::{image_features, region_stats, DEFAULT_FEATURE_DIM};
use crate::imagecore::{color_scale_factor, convert_color, load_image, to_rgb, ColorSpace, RasterImage};
use crate::labelmap::LabelMap;
use crate::mask::RegionMask;
use crate::metrics::{evaluate, Metric};
use crate::netpbm::write_atomic;
use crate::segmenter::{grid_superpixels, load_superpixels, tbes_segment_with, SegmenterConfig};
use crate::texturecoding::{coding_length_full, CodingParams};

/// Default grid cell when no superpixel files are supplied.
pub const DEFAULT_CELL_SIZE: usize = 16;

/// ε used for the color-space study's coding lengths.
pub const STUDY_EPSILON: f64 = 100.0;

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn sorted_files(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && has_extension(&path, exts) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// File name without extension.
pub fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// PPM and PNG files of a directory, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    sorted_files(dir, &["ppm", "png"])
}

/// PGM files of a directory, sorted by name.
pub fn list_label_maps(dir: &Path) -> Result<Vec<PathBuf>> {
    sorted_files(dir, &["pgm"])
}

/// Ground truths of image `id`: every PGM in `<truths>/<id>/`, or the single
/// file `<truths>/<id>.pgm`. `None` when neither exists.
pub fn load_truths(truths: &Path, id: &str) -> Result<Option<Vec<LabelMap>>> {
    let dir = truths.join(id);
    let files = if dir.is_dir() {
        list_label_maps(&dir)?
    } else {
        let single = truths.join(format!("{id}.pgm"));
        if single.is_file() {
            vec![single]
        } else {
            Vec::new()
        }
    };
    if files.is_empty() {
        return Ok(None);
    }
    files.iter().map(|f| LabelMap::load_pgm(f)).collect::<Result<_>>().map(Some)
}

/// Where initial regions come from.
#[derive(Debug, Clone)]
pub enum SuperpixelSource {
    Grid(usize),
    /// `<dir>/<id>.pgm` per image.
    Directory(PathBuf),
}

impl SuperpixelSource {
    pub fn for_image(&self, img: &RasterImage<f64>, id: &str) -> Result<LabelMap> {
        match self {
            SuperpixelSource::Grid(cell) => grid_superpixels(img, *cell),
            SuperpixelSource::Directory(dir) => {
                load_superpixels(&dir.join(format!("{id}.pgm")), img.width(), img.height())
            }
        }
    }
}

/// Fixed ε or one predicted per image.
#[derive(Debug, Clone)]
pub enum EpsilonChoice {
    Fixed(f64),
    Model(EpsilonModel),
}

impl EpsilonChoice {
    pub fn for_image(&self, img: &RasterImage<f64>) -> f64 {
        match self {
            EpsilonChoice::Fixed(e) => *e,
            EpsilonChoice::Model(m) => predict_epsilon(&m.regressor(), &contrast_features(img)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub id: String,
    pub epsilon: Option<f64>,
    pub pri: Option<f64>,
    pub voi: Option<f64>,
    pub gfm: Option<f64>,
    pub bits: Option<f64>,
    pub regions: usize,
    pub seconds: Option<f64>,
    /// Number of ground truths the metrics were averaged over.
    pub truths: usize,
}

/// Arithmetic means over the images that report each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub epsilon: Option<f64>,
    pub pri: Option<f64>,
    pub voi: Option<f64>,
    pub gfm: Option<f64>,
    pub bits: Option<f64>,
    pub regions: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub images: Vec<ImageResult>,
    pub mean: Aggregate,
    /// Images left out, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

impl BenchmarkSummary {
    pub fn new(mut images: Vec<ImageResult>, skipped: Vec<(String, String)>) -> Self {
        images.sort_by(|a, b| a.id.cmp(&b.id));
        let mean = Aggregate {
            epsilon: mean_of(images.iter().map(|r| r.epsilon)),
            pri: mean_of(images.iter().map(|r| r.pri)),
            voi: mean_of(images.iter().map(|r| r.voi)),
            gfm: mean_of(images.iter().map(|r| r.gfm)),
            bits: mean_of(images.iter().map(|r| r.bits)),
            regions: mean_of(images.iter().map(|r| Some(r.regions as f64))),
            seconds: mean_of(images.iter().map(|r| r.seconds)),
        };
        Self {
            images,
            mean,
            skipped,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Fixed-width text table, one row per image plus the mean.
    pub fn table(&self) -> String {
        let cell = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
        let mut out = format!(
            "{:<20} {:>8} {:>7} {:>7} {:>7} {:>12} {:>8} {:>8}\n",
            "image", "epsilon", "PRI", "VOI", "GFM", "bits", "regions", "seconds"
        );
        for r in &self.images {
            out += &format!(
                "{:<20} {:>8} {:>7} {:>7} {:>7} {:>12} {:>8} {:>8}\n",
                r.id,
                cell(r.epsilon, 1),
                cell(r.pri, 4),
                cell(r.voi, 4),
                cell(r.gfm, 4),
                cell(r.bits, 1),
                r.regions,
                cell(r.seconds, 2)
            );
        }
        let m = &self.mean;
        out += &format!(
            "{:<20} {:>8} {:>7} {:>7} {:>7} {:>12} {:>8} {:>8}\n",
            "mean",
            cell(m.epsilon, 1),
            cell(m.pri, 4),
            cell(m.voi, 4),
            cell(m.gfm, 4),
            cell(m.bits, 1),
            cell(m.regions, 1),
            cell(m.seconds, 2)
        );
        out
    }
}

fn score(
    result: &mut ImageResult,
    labels: &LabelMap,
    truths: &[LabelMap],
    metrics: &[Metric],
    tolerance: Option<f64>,
) -> Result<()> {
    result.truths = truths.len();
    for &m in metrics {
        let v = Some(evaluate(m, labels, truths, tolerance)?.value);
        match m {
            Metric::Pri => result.pri = v,
            Metric::Voi => result.voi = v,
            Metric::Gfm => result.gfm = v,
        }
    }
    Ok(())
}

/// Scores every label map `<test>/<id>.pgm` against `<truths>/<id>/`.
pub fn evaluate_dir(
    test: &Path,
    truths: &Path,
    metrics: &[Metric],
    tolerance: Option<f64>,
) -> Result<BenchmarkSummary> {
    let files = list_label_maps(test)?;
    let outcomes = files
        .par_iter()
        .map(|path| {
            let id = image_id(path);
            let Some(gt) = load_truths(truths, &id)? else {
                return Ok(Err((id, "no ground truth".to_string())));
            };
            let labels = LabelMap::load_pgm(path)?;
            let mut result = ImageResult {
                id,
                epsilon: None,
                pri: None,
                voi: None,
                gfm: None,
                bits: None,
                regions: labels.region_count() as usize,
                seconds: None,
                truths: 0,
            };
            score(&mut result, &labels, &gt, metrics, tolerance)?;
            Ok(Ok(result))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect_outcomes(outcomes))
}

fn collect_outcomes(outcomes: Vec<std::result::Result<ImageResult, (String, String)>>) -> BenchmarkSummary {
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => images.push(r),
            Err(s) => skipped.push(s),
        }
    }
    BenchmarkSummary::new(images, skipped)
}

/// Settings of a segment-and-evaluate run.
#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub superpixels: SuperpixelSource,
    pub epsilon: EpsilonChoice,
    pub segmenter: SegmenterConfig<f64>,
    pub tolerance: Option<f64>,
    /// Label maps and reports are written here when set.
    pub out_dir: Option<PathBuf>,
}

/// Segments every image with ground truth and scores it on all metrics.
pub fn benchmark(images: &Path, truths: &Path, config: &BenchmarkConfig) -> Result<BenchmarkSummary> {
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let files = list_images(images)?;
    let outcomes = files
        .par_iter()
        .map(|path| {
            let id = image_id(path);
            let Some(gt) = load_truths(truths, &id)? else {
                return Ok(Err((id, "no ground truth".to_string())));
            };
            let start = Instant::now();
            let img = load_image::<f64>(path)?;
            let sp = config.superpixels.for_image(&img, &id)?;
            let epsilon = config.epsilon.for_image(&img);
            let seg_config = SegmenterConfig {
                epsilon,
                ..config.segmenter.clone()
            };
            let (labels, report) = tbes_segment_with(&img, &sp, &seg_config)?;
            let seconds = start.elapsed().as_secs_f64();
            if let Some(dir) = &config.out_dir {
                labels.save_pgm(&dir.join(format!("{id}.pgm")))?;
                write_atomic(&dir.join(format!("{id}.json")), report.to_json().as_bytes())?;
            }
            let mut result = ImageResult {
                id,
                epsilon: Some(epsilon),
                pri: None,
                voi: None,
                gfm: None,
                bits: Some(report.bits_total),
                regions: report.regions,
                seconds: Some(seconds),
                truths: 0,
            };
            score(&mut result, &labels, &gt, &Metric::ALL, config.tolerance)?;
            Ok(Ok(result))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect_outcomes(outcomes))
}

/// Per-image record of ε training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub id: String,
    pub features: ContrastFeatures,
    pub fit: Option<DiscrepancyFit>,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: EpsilonModel,
    pub used: Vec<TrainingSample>,
    /// Images whose discrepancy curve was not convex.
    pub rejected: Vec<String>,
    /// Images without ground truth.
    pub skipped: Vec<String>,
}

/// Samples the discrepancy curve of every image with ground truth, fits
/// quadratics and trains the regressor on the convex ones.
pub fn train_epsilon(
    images: &Path,
    truths: &Path,
    metric: Metric,
    superpixels: &SuperpixelSource,
    grid: &[f64],
    segmenter: &SegmenterConfig<f64>,
) -> Result<TrainingOutcome> {
    let files = list_images(images)?;
    let outcomes = files
        .par_iter()
        .map(|path| {
            let id = image_id(path);
            let Some(gt) = load_truths(truths, &id)? else {
                return Ok(Err(id));
            };
            let img = load_image::<f64>(path)?;
            let sp = superpixels.for_image(&img, &id)?;
            let samples = sample_discrepancy(&img, &sp, &gt, metric, grid, segmenter)?;
            let fit = match fit_quadratic(&samples) {
                Ok(f) => Some(f),
                Err(Error::NonConvexFit(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(Ok(TrainingSample {
                id,
                features: contrast_features(&img),
                fit,
                samples,
            }))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut used = Vec::new();
    let mut rejected = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(s) if s.fit.is_some() => used.push(s),
            Ok(s) => rejected.push(s.id),
            Err(id) => skipped.push(id),
        }
    }
    if used.is_empty() {
        return Err(Error::Empty("training images with ground truth and a convex fit"));
    }
    let fits: Vec<_> = used.iter().map(|s| s.fit.clone().expect("kept fits")).collect();
    let features: Vec<_> = used.iter().map(|s| s.features).collect();
    let reg = train_regressor(&fits, &features, DEFAULT_RIDGE)?;
    Ok(TrainingOutcome {
        model: EpsilonModel::new(&reg, metric, used.len()),
        used,
        rejected,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageBits {
    pub id: String,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorspaceResult {
    pub colorspace: String,
    pub scale_factor: f64,
    pub mean_bits: f64,
    pub images: Vec<ImageBits>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorspaceStudy {
    pub epsilon: f64,
    pub window: usize,
    pub dim: usize,
    /// Sorted by mean coding length, shortest first.
    pub ranking: Vec<ColorspaceResult>,
}

impl ColorspaceStudy {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("study serializes")
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<5} {:<6} {:>14} {:>12}\n", "rank", "space", "mean bits", "scale c");
        for (i, r) in self.ranking.iter().enumerate() {
            out += &format!(
                "{:<5} {:<6} {:>14.1} {:>12.6}\n",
                i + 1,
                r.colorspace,
                r.mean_bits,
                r.scale_factor
            );
        }
        out
    }
}

struct RegionSummary {
    mean: nalgebra::DVector<f64>,
    cov: nalgebra::DMatrix<f64>,
    samples: usize,
    max_eigenvalue: f64,
}

// stats of every nondegenerate region of every truth, grouped by truth
fn truth_region_stats(
    img: &RasterImage<f64>,
    truths: &[LabelMap],
    space: ColorSpace,
    window: usize,
    dim: usize,
) -> Result<Vec<Vec<RegionSummary>>> {
    let converted = convert_color(&to_rgb(img), space)?;
    let (_, field) = image_features(&converted, window, dim)?;
    truths
        .iter()
        .map(|gt| {
            if gt.width() != img.width() || gt.height() != img.height() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", img.width(), img.height()),
                    actual: format!("{}x{}", gt.width(), gt.height()),
                });
            }
            let split = gt.split_components();
            let mut out = Vec::new();
            for (id, px) in split.region_pixels().into_iter().enumerate() {
                let mask = RegionMask::from_pixels(gt.width(), px.iter().copied())
                    .expect("dense labels have pixels");
                let interior = mask.interior(window);
                if interior.is_empty() {
                    continue;
                }
                let stats = region_stats(&field, &interior, id as u32, mask.count())?;
                let eig = SymmetricEigen::new(stats.covariance.clone());
                let max_eigenvalue = eig.eigenvalues.max();
                out.push(RegionSummary {
                    mean: stats.mean,
                    cov: stats.covariance,
                    samples: interior.len(),
                    max_eigenvalue,
                });
            }
            Ok(out)
        })
        .collect()
}

/// For each color space: normalizes features by the scale factor over all
/// ground-truth regions, then charges each region's interior features with
/// the Gaussian coding length at `epsilon`. An image's length is the sum
/// over regions, averaged over its ground truths.
pub fn colorspace_study(
    images: &Path,
    truths: &Path,
    window: usize,
    epsilon: f64,
) -> Result<ColorspaceStudy> {
    let dim = DEFAULT_FEATURE_DIM;
    let params = CodingParams::new(epsilon, window, dim.min(3 * window * window))?;
    let mut data = Vec::new();
    for path in list_images(images)? {
        let id = image_id(&path);
        if let Some(gt) = load_truths(truths, &id)? {
            data.push((id, load_image::<f64>(&path)?, gt));
        }
    }
    if data.is_empty() {
        return Err(Error::Empty("images with ground truth"));
    }
    let mut ranking = ColorSpace::ALL
        .par_iter()
        .map(|&space| {
            let per_image = data
                .iter()
                .map(|(_, img, gt)| truth_region_stats(img, gt, space, window, dim))
                .collect::<Result<Vec<_>>>()?;
            let maxima: Vec<f64> = per_image
                .iter()
                .flatten()
                .flatten()
                .map(|r| r.max_eigenvalue)
                .collect();
            let c = color_scale_factor(&maxima)?;
            let mut bits_per_image = Vec::new();
            for ((id, _, _), truths_stats) in data.iter().zip(&per_image) {
                let mut sum = 0.0;
                for regions in truths_stats {
                    for r in regions {
                        let mean = &r.mean * c;
                        let cov = &r.cov * (c * c);
                        sum += coding_length_full(&mean, &cov, r.samples, &params)?;
                    }
                }
                bits_per_image.push(ImageBits {
                    id: id.clone(),
                    bits: sum / truths_stats.len() as f64,
                });
            }
            let mean_bits =
                bits_per_image.iter().map(|b| b.bits).sum::<f64>() / bits_per_image.len() as f64;
            Ok(ColorspaceResult {
                colorspace: space.name().to_string(),
                scale_factor: c,
                mean_bits,
                images: bits_per_image,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|a, b| a.mean_bits.total_cmp(&b.mean_bits));
    Ok(ColorspaceStudy {
        epsilon,
        window,
        dim: params.dim,
        ranking,
    })
}
