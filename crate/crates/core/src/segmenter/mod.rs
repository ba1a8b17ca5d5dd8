//! Greedy agglomerative merging of superpixels under the total coding length,
//! over a schedule of shrinking window sizes.
//!
//! Every adjacent pair competes at exactly one window: the smallest window at
//! which both regions are still nondegenerate, i.e. the largest window at
//! which the smaller of the two has a nonempty interior. A step scans the
//! schedule from the largest window down and merges the best pair of the
//! first window offering a positive gain. The run ends when no window does.
//!
//! Regions degenerate at a window are charged at the largest smaller window
//! where they are not, so the total at the merge window drops by exactly the
//! merge gain.

mod rag;
mod report;
mod superpixels;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::boundarycoding::{contours_bits, trace_region_mask, ChainCodePrior};
use crate::error::{Error, Result};
use crate::features::{image_features, region_stats, FeatureField, DEFAULT_FEATURE_DIM};
use crate::imagecore::{convert_color, to_rgb, ColorSpace, RasterImage};
use crate::labelmap::LabelMap;
use crate::mask::RegionMask;
use crate::scalar::Scalar;
use crate::texturecoding::{region_coding_length, CodingParams};

pub use rag::RegionAdjacencyGraph;
pub use report::{SegmentationReport, StageEntry};
pub use superpixels::{grid_labels, grid_superpixels, load_superpixels, MAX_SUPERPIXELS};

/// Default largest window of the schedule.
pub const DEFAULT_MAX_WINDOW: usize = 7;

/// Odd windows from `w_max` down to 1.
pub fn window_schedule(w_max: usize) -> Result<Vec<usize>> {
    if w_max == 0 || w_max % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "largest window {w_max} must be odd and positive"
        )));
    }
    Ok((1..=w_max).rev().step_by(2).collect())
}

/// Feature fields for every window of a schedule, largest window first.
#[derive(Debug, Clone)]
pub struct FeatureStack<T> {
    fields: Vec<FeatureField<T>>,
}

impl<T: Scalar> FeatureStack<T> {
    /// Fits PCA and projects the image at each window. The image is used in
    /// whatever color space it is in.
    pub fn build(img: &RasterImage<T>, windows: &[usize], dim: usize) -> Result<Self> {
        let fields = windows
            .par_iter()
            .map(|&w| image_features(img, w, dim).map(|(_, f)| f))
            .collect::<Result<Vec<_>>>()?;
        Self::from_fields(fields)
    }

    /// Windows must strictly decrease and end at 1; all fields must share
    /// one geometry.
    pub fn from_fields(fields: Vec<FeatureField<T>>) -> Result<Self> {
        let last = fields.last().ok_or(Error::Empty("feature fields"))?;
        if last.window() != 1 {
            return Err(Error::InvalidArgument("window schedule must end at 1".into()));
        }
        for pair in fields.windows(2) {
            if pair[0].window() <= pair[1].window() {
                return Err(Error::InvalidArgument(
                    "window schedule must strictly decrease".into(),
                ));
            }
            if pair[0].width() != pair[1].width() || pair[0].height() != pair[1].height() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", pair[0].width(), pair[0].height()),
                    actual: format!("{}x{}", pair[1].width(), pair[1].height()),
                });
            }
        }
        Ok(Self { fields })
    }

    pub fn levels(&self) -> usize {
        self.fields.len()
    }

    pub fn level(&self, i: usize) -> &FeatureField<T> {
        &self.fields[i]
    }

    pub fn windows(&self) -> Vec<usize> {
        self.fields.iter().map(FeatureField::window).collect()
    }

    pub fn field_for_window(&self, w: usize) -> Option<&FeatureField<T>> {
        self.fields.iter().find(|f| f.window() == w)
    }

    pub fn width(&self) -> usize {
        self.fields[0].width()
    }

    pub fn height(&self) -> usize {
        self.fields[0].height()
    }
}

/// Lab version of `img`, converting through RGB when needed.
pub fn to_lab<T: Scalar>(img: &RasterImage<T>) -> RasterImage<T> {
    match img.colorspace() {
        ColorSpace::Lab => img.clone(),
        _ => convert_color(&to_rgb(img), ColorSpace::Lab).expect("RGB converts to Lab"),
    }
}

/// Segmentation settings besides the image and the superpixels.
#[derive(Debug, Clone)]
pub struct SegmenterConfig<T> {
    pub epsilon: T,
    pub w_max: usize,
    pub dim: usize,
    pub prior: ChainCodePrior<T>,
}

impl<T: Scalar> SegmenterConfig<T> {
    pub fn new(epsilon: T) -> Self {
        Self {
            epsilon,
            w_max: DEFAULT_MAX_WINDOW,
            dim: DEFAULT_FEATURE_DIM,
            prior: ChainCodePrior::bsd(),
        }
    }

    fn validate(&self) -> Result<()> {
        CodingParams::new(self.epsilon, 1, self.dim).map(|_| ())
    }
}

/// Lab features for the schedule of `w_max`, skipping windows too large for
/// the image.
pub fn build_features<T: Scalar>(
    img: &RasterImage<T>,
    w_max: usize,
    dim: usize,
) -> Result<FeatureStack<T>> {
    let limit = 2 * img.width().min(img.height());
    let windows: Vec<usize> = window_schedule(w_max)?
        .into_iter()
        .filter(|&w| w <= limit)
        .collect();
    FeatureStack::build(&to_lab(img), &windows, dim)
}

/// Segments `img` starting from `superpixels` with the default prior and
/// feature dimension.
pub fn tbes_segment<T: Scalar>(
    img: &RasterImage<T>,
    superpixels: &LabelMap,
    epsilon: T,
    w_max: usize,
) -> Result<(LabelMap, SegmentationReport)> {
    let config = SegmenterConfig {
        w_max,
        ..SegmenterConfig::new(epsilon)
    };
    tbes_segment_with(img, superpixels, &config)
}

pub fn tbes_segment_with<T: Scalar>(
    img: &RasterImage<T>,
    superpixels: &LabelMap,
    config: &SegmenterConfig<T>,
) -> Result<(LabelMap, SegmentationReport)> {
    config.validate()?;
    let features = build_features(img, config.w_max, config.dim)?;
    let mut seg = Segmenter::new(&features, superpixels, config.epsilon, config.prior.clone())?;
    seg.run()?;
    Ok((seg.labels(), seg.report()))
}

/// Total coding length of a segmentation with every region coded at window
/// `window`. Fails if some region has no interior at that window.
pub fn total_coding_length<T: Scalar>(
    labels: &LabelMap,
    features: &FeatureStack<T>,
    prior: &ChainCodePrior<T>,
    epsilon: T,
    window: usize,
) -> Result<SegmentationReport> {
    let field = features.field_for_window(window).ok_or_else(|| {
        Error::InvalidArgument(format!("no features for window {window}"))
    })?;
    if labels.width() != field.width() || labels.height() != field.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", field.width(), field.height()),
            actual: format!("{}x{}", labels.width(), labels.height()),
        });
    }
    let params = CodingParams::new(epsilon, window, field.dim())?;
    let per_region = labels
        .region_pixels()
        .into_par_iter()
        .enumerate()
        .map(|(id, px)| {
            let id = id as u32;
            let mask = RegionMask::from_pixels(labels.width(), px.iter().copied())
                .ok_or(Error::UnknownRegion(id))?;
            if !mask.is_connected() {
                return Err(Error::DisconnectedRegion(id));
            }
            let stats = region_stats(field, &mask.interior(window), id, mask.count())?;
            let texture = region_coding_length(&stats, &params)?;
            let boundary = contours_bits(&trace_region_mask(&mask), prior);
            Ok((texture, boundary))
        })
        .collect::<Result<Vec<_>>>()?;
    let (texture, boundary) = per_region
        .iter()
        .fold((T::zero(), T::zero()), |(t, b), &(x, y)| (t + x, b + y));
    Ok(SegmentationReport {
        epsilon: epsilon.as_f64(),
        w_schedule: vec![window],
        merges: 0,
        regions: labels.region_count() as usize,
        bits_texture: texture.as_f64(),
        bits_boundary: boundary.as_f64(),
        bits_total: (texture + T::lit(0.5) * boundary).as_f64(),
        stage_log: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy)]
struct Candidate<T> {
    gain: T,
    i: u32,
    vi: u32,
    j: u32,
    vj: u32,
}

impl<T: Scalar> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Candidate<T> {}

impl<T: Scalar> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// larger gain first; equal gains prefer the lexicographically smaller pair
impl<T: Scalar> Ord for Candidate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .partial_cmp(&other.gain)
            .unwrap_or(Ordering::Equal)
            .then_with(|| (other.i, other.j).cmp(&(self.i, self.j)))
    }
}

/// Greedy merging state: the region graph plus one lazily invalidated
/// max-heap of pair gains per schedule window.
pub struct Segmenter<'a, T: Scalar> {
    rag: RegionAdjacencyGraph<'a, T>,
    heaps: Vec<BinaryHeap<Candidate<T>>>,
    log: Vec<StageEntry>,
}

impl<'a, T: Scalar> Segmenter<'a, T> {
    pub fn new(
        features: &'a FeatureStack<T>,
        superpixels: &LabelMap,
        epsilon: T,
        prior: ChainCodePrior<T>,
    ) -> Result<Self> {
        CodingParams::new(epsilon, 1, features.level(0).dim())?;
        let rag = RegionAdjacencyGraph::new(features, superpixels, epsilon, prior)?;
        let mut seg = Self {
            heaps: vec![BinaryHeap::new(); features.levels()],
            rag,
            log: Vec::new(),
        };
        let pairs: Vec<_> = seg.rag.edges().into_iter().collect();
        seg.push_candidates(&pairs)?;
        Ok(seg)
    }

    fn push_candidates(&mut self, pairs: &[(u32, u32)]) -> Result<()> {
        let rag = &self.rag;
        let scored = pairs
            .par_iter()
            .map(|&(i, j)| {
                let (i, j) = (i.min(j), i.max(j));
                let level = rag.candidate_level(i, j).expect("live pair");
                let gain = rag.merge_gain(i, j, level)?;
                Ok((
                    level,
                    Candidate {
                        gain,
                        i,
                        vi: rag.version(i).expect("live region"),
                        j,
                        vj: rag.version(j).expect("live region"),
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        for (level, c) in scored {
            self.heaps[level].push(c);
        }
        Ok(())
    }

    fn is_current(&self, c: &Candidate<T>) -> bool {
        self.rag.version(c.i) == Some(c.vi) && self.rag.version(c.j) == Some(c.vj)
    }

    /// Best live candidate at `level`, discarding stale entries on the way.
    fn peek(&mut self, level: usize) -> Option<Candidate<T>> {
        while let Some(top) = self.heaps[level].peek().copied() {
            if self.is_current(&top) {
                return Some(top);
            }
            self.heaps[level].pop();
        }
        None
    }

    /// Performs the next merge, or returns `None` once no window offers a
    /// positive gain.
    pub fn step(&mut self) -> Result<Option<StageEntry>> {
        for level in 0..self.heaps.len() {
            let Some(best) = self.peek(level) else {
                continue;
            };
            if !(best.gain > T::zero()) {
                continue;
            }
            self.heaps[level].pop();
            let (before_tex, before_bnd) = self.rag.total_bits(level);
            let keep = self.rag.merge(best.i, best.j)?;
            let (after_tex, after_bnd) = self.rag.total_bits(level);
            let half = T::lit(0.5);
            let before = before_tex + half * before_bnd;
            let after = after_tex + half * after_bnd;
            debug_assert!(after < before, "merge must shrink the total");

            let pairs: Vec<_> = self.rag.neighbours(keep).map(|n| (keep, n)).collect();
            self.push_candidates(&pairs)?;

            let entry = StageEntry {
                step: self.log.len() + 1,
                window: self.rag.features().level(level).window(),
                merged: [best.i, best.j],
                gain: best.gain.as_f64(),
                bits_before: before.as_f64(),
                bits_after: after.as_f64(),
                regions: self.rag.region_count(),
            };
            self.log.push(entry.clone());
            return Ok(Some(entry));
        }
        Ok(None)
    }

    /// Merges until no positive gain remains.
    pub fn run(&mut self) -> Result<usize> {
        while self.step()?.is_some() {}
        Ok(self.log.len())
    }

    pub fn rag(&self) -> &RegionAdjacencyGraph<'a, T> {
        &self.rag
    }

    pub fn stage_log(&self) -> &[StageEntry] {
        &self.log
    }

    /// Current region id per pixel (surviving superpixel ids).
    pub fn region_map(&self) -> &[u32] {
        self.rag.region_map()
    }

    pub fn labels(&self) -> LabelMap {
        self.rag.labels()
    }

    /// Coding length of the current state with each region charged at the
    /// largest scheduled window where it is nondegenerate.
    pub fn report(&self) -> SegmentationReport {
        let (texture, boundary) = self.rag.total_bits(0);
        SegmentationReport {
            epsilon: self.rag.epsilon().as_f64(),
            w_schedule: self.rag.features().windows(),
            merges: self.log.len(),
            regions: self.rag.region_count(),
            bits_texture: texture.as_f64(),
            bits_boundary: boundary.as_f64(),
            bits_total: (texture + T::lit(0.5) * boundary).as_f64(),
            stage_log: self.log.clone(),
        }
    }
}
