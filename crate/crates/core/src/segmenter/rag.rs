//! Region adjacency graph with cached per-region coding lengths.

use std::collections::BTreeSet;

use crate::boundarycoding::{contours_bits, trace_region_mask, ChainCodePrior};
use crate::error::{Error, Result};
use crate::features::region_stats;
use crate::labelmap::{adjacency_of, LabelMap};
use crate::mask::RegionMask;
use crate::scalar::Scalar;
use crate::texturecoding::{region_coding_length, CodingParams};

use super::FeatureStack;

/// Cached coding lengths of one region.
#[derive(Debug, Clone)]
pub(crate) struct Region<T> {
    pub mask: RegionMask,
    pub version: u32,
    /// Texture bits per schedule level (largest window first); `None` where
    /// the region is degenerate.
    pub texture: Vec<Option<T>>,
    pub boundary: T,
}

impl<T: Scalar> Region<T> {
    /// First schedule level at which the region has a nonempty interior.
    pub fn top_level(&self) -> usize {
        self.texture
            .iter()
            .position(Option::is_some)
            .expect("every region is nondegenerate at window 1")
    }

    /// Texture bits at `level`, or at the largest smaller window where the
    /// region stops being degenerate.
    pub fn texture_at_or_below(&self, level: usize) -> T {
        self.texture[level..]
            .iter()
            .flatten()
            .copied()
            .next()
            .expect("every region is nondegenerate at window 1")
    }
}

/// Regions of the current segmentation, their 4-adjacency and cached
/// coding lengths at every window size of the schedule.
pub struct RegionAdjacencyGraph<'a, T: Scalar> {
    features: &'a FeatureStack<T>,
    epsilon: T,
    prior: ChainCodePrior<T>,
    width: usize,
    height: usize,
    owner: Vec<u32>,
    regions: Vec<Option<Region<T>>>,
    neighbours: Vec<BTreeSet<u32>>,
}

impl<'a, T: Scalar> RegionAdjacencyGraph<'a, T> {
    pub fn new(
        features: &'a FeatureStack<T>,
        labels: &LabelMap,
        epsilon: T,
        prior: ChainCodePrior<T>,
    ) -> Result<Self> {
        if labels.width() != features.width() || labels.height() != features.height() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", features.width(), features.height()),
                actual: format!("{}x{}", labels.width(), labels.height()),
            });
        }
        if !labels.is_connected() {
            return Err(Error::InvalidArgument(
                "superpixels must be 4-connected regions".into(),
            ));
        }
        let k = labels.region_count() as usize;
        let mut neighbours = vec![BTreeSet::new(); k];
        for (a, b) in labels.adjacency() {
            neighbours[a as usize].insert(b);
            neighbours[b as usize].insert(a);
        }
        let mut rag = Self {
            features,
            epsilon,
            prior,
            width: labels.width(),
            height: labels.height(),
            owner: labels.labels().to_vec(),
            regions: Vec::new(),
            neighbours,
        };
        let pixels = labels.region_pixels();
        let regions: Result<Vec<_>> = {
            use rayon::prelude::*;
            pixels
                .par_iter()
                .enumerate()
                .map(|(id, px)| {
                    let mask = RegionMask::from_pixels(rag.width, px.iter().copied())
                        .expect("dense labels have pixels");
                    rag.summarize(mask, id as u32)
                })
                .collect()
        };
        rag.regions = regions?.into_iter().map(Some).collect();
        Ok(rag)
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn prior(&self) -> &ChainCodePrior<T> {
        &self.prior
    }

    pub fn features(&self) -> &FeatureStack<T> {
        self.features
    }

    pub(crate) fn params(&self, level: usize) -> CodingParams<T> {
        let field = self.features.level(level);
        CodingParams {
            epsilon: self.epsilon,
            window: field.window(),
            dim: field.dim(),
        }
    }

    fn texture_bits(&self, mask: &RegionMask, id: u32, level: usize) -> Result<Option<T>> {
        let field = self.features.level(level);
        let interior = mask.interior(field.window());
        if interior.is_empty() {
            return Ok(None);
        }
        let stats = region_stats(field, &interior, id, mask.count())?;
        region_coding_length(&stats, &self.params(level)).map(Some)
    }

    fn boundary_bits(&self, mask: &RegionMask) -> T {
        contours_bits(&trace_region_mask(mask), &self.prior)
    }

    pub(crate) fn summarize(&self, mask: RegionMask, id: u32) -> Result<Region<T>> {
        let texture = (0..self.features.levels())
            .map(|level| self.texture_bits(&mask, id, level))
            .collect::<Result<Vec<_>>>()?;
        debug_assert!(texture.last().is_some_and(Option::is_some));
        let boundary = self.boundary_bits(&mask);
        Ok(Region {
            mask,
            version: 0,
            texture,
            boundary,
        })
    }

    pub(crate) fn region(&self, id: u32) -> Option<&Region<T>> {
        self.regions.get(id as usize).and_then(Option::as_ref)
    }

    pub fn contains(&self, id: u32) -> bool {
        self.region(id).is_some()
    }

    pub fn version(&self, id: u32) -> Option<u32> {
        self.region(id).map(|r| r.version)
    }

    /// Ids of live regions, ascending.
    pub fn region_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_some())
            .map(|(i, _)| i as u32)
    }

    pub fn region_count(&self) -> usize {
        self.regions.iter().flatten().count()
    }

    pub fn neighbours(&self, id: u32) -> impl Iterator<Item = u32> + '_ {
        self.neighbours[id as usize].iter().copied()
    }

    pub fn are_adjacent(&self, i: u32, j: u32) -> bool {
        self.neighbours
            .get(i as usize)
            .is_some_and(|n| n.contains(&j))
    }

    /// Incrementally maintained edge set, `(i, j)` with `i < j`.
    pub fn edges(&self) -> BTreeSet<(u32, u32)> {
        self.region_ids()
            .flat_map(|i| self.neighbours(i).filter(move |&j| i < j).map(move |j| (i, j)))
            .collect()
    }

    /// Edge set recomputed from the current region map.
    pub fn edges_from_scratch(&self) -> BTreeSet<(u32, u32)> {
        adjacency_of(self.width, self.height, &self.owner)
    }

    /// Current region id of every pixel. Ids are the initial superpixel ids;
    /// a merged region keeps the smaller id of its two parents.
    pub fn region_map(&self) -> &[u32] {
        &self.owner
    }

    /// Dense relabelling of the current segmentation.
    pub fn labels(&self) -> LabelMap {
        LabelMap::from_ids(self.width, self.height, &self.owner).expect("owner map matches dims")
    }

    /// Texture bits of region `id` at schedule `level`, if nondegenerate.
    pub fn texture_bits_at(&self, id: u32, level: usize) -> Option<T> {
        self.region(id).and_then(|r| r.texture[level])
    }

    pub fn boundary_bits_of(&self, id: u32) -> Option<T> {
        self.region(id).map(|r| r.boundary)
    }

    pub fn is_degenerate(&self, id: u32, level: usize) -> bool {
        self.texture_bits_at(id, level).is_none()
    }

    /// The single schedule level at which the pair competes: both regions
    /// nondegenerate there and at least one of them degenerate one level up.
    pub fn candidate_level(&self, i: u32, j: u32) -> Option<usize> {
        let a = self.region(i)?.top_level();
        let b = self.region(j)?.top_level();
        Some(a.max(b))
    }

    /// Reduction in total coding length from merging `i` and `j`, evaluated
    /// at schedule `level` with the union's statistics recomputed from its
    /// own interior.
    pub fn merge_gain(&self, i: u32, j: u32, level: usize) -> Result<T> {
        let ri = self.region(i).ok_or(Error::UnknownRegion(i))?;
        let rj = self.region(j).ok_or(Error::UnknownRegion(j))?;
        if !self.are_adjacent(i, j) {
            return Err(Error::NotAdjacent(i, j));
        }
        let window = self.features.level(level).window();
        let ti = ri.texture[level].ok_or(Error::DegenerateRegion { region: i, window })?;
        let tj = rj.texture[level].ok_or(Error::DegenerateRegion { region: j, window })?;
        let union = RegionMask::union(&ri.mask, &rj.mask);
        let tu = self
            .texture_bits(&union, i.min(j), level)?
            .expect("union contains a nonempty interior");
        let bu = self.boundary_bits(&union);
        let half = T::lit(0.5);
        Ok(ti + tj - tu + half * (ri.boundary + rj.boundary - bu))
    }

    /// Merges `j` into `i` (or vice versa); the smaller id survives.
    pub fn merge(&mut self, i: u32, j: u32) -> Result<u32> {
        if !self.are_adjacent(i, j) {
            return Err(Error::NotAdjacent(i, j));
        }
        let (keep, gone) = (i.min(j), i.max(j));
        let a = self.regions[keep as usize].take().ok_or(Error::UnknownRegion(keep))?;
        let b = self.regions[gone as usize].take().ok_or(Error::UnknownRegion(gone))?;
        for p in b.mask.pixels() {
            self.owner[p] = keep;
        }
        let union = RegionMask::union(&a.mask, &b.mask);
        let mut merged = self.summarize(union, keep)?;
        merged.version = a.version.max(b.version) + 1;
        self.regions[keep as usize] = Some(merged);

        let moved = std::mem::take(&mut self.neighbours[gone as usize]);
        for n in moved {
            self.neighbours[n as usize].remove(&gone);
            if n != keep {
                self.neighbours[n as usize].insert(keep);
                self.neighbours[keep as usize].insert(n);
            }
        }
        self.neighbours[keep as usize].remove(&gone);
        Ok(keep)
    }

    /// Total bits with every region coded at `level`'s window, or at the
    /// largest smaller window where it is nondegenerate.
    pub fn total_bits(&self, level: usize) -> (T, T) {
        let mut texture = T::zero();
        let mut boundary = T::zero();
        for r in self.regions.iter().flatten() {
            texture += r.texture_at_or_below(level);
            boundary += r.boundary;
        }
        (texture, boundary)
    }
}
