//! Per-pixel region labels.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::netpbm::{self, Netpbm};

/// Dense per-pixel region ids `0..k`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabelMap {
    /// Wraps labels that are already dense: every id in `0..k` occurs.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k as usize];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "label ids are not dense: id {missing} never occurs"
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            count: k,
        })
    }

    /// Renumbers arbitrary ids to `0..k`, preserving their relative order.
    pub fn from_ids(width: usize, height: usize, ids: &[u32]) -> Result<Self> {
        check_dims(width, height, ids.len())?;
        let distinct: BTreeSet<u32> = ids.iter().copied().collect();
        let table: Vec<u32> = distinct.into_iter().collect();
        let labels = ids
            .iter()
            .map(|id| table.binary_search(id).expect("id present") as u32)
            .collect();
        Ok(Self {
            width,
            height,
            labels,
            count: table.len() as u32,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of regions `k`.
    pub fn region_count(&self) -> u32 {
        self.count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn same_dims(&self, other: &LabelMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Pixel indices of every region, each list in raster order.
    pub fn region_pixels(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count as usize];
        for (p, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(p);
        }
        out
    }

    /// Splits every region into its 4-connected components. Components keep
    /// the order of their parent id, ties broken by first raster pixel.
    pub fn split_components(&self) -> LabelMap {
        let comp = self.components();
        let mut first: Vec<(u32, usize, u32)> = Vec::new();
        let mut seen = vec![false; comp.iter().copied().max().map_or(0, |m| m as usize + 1)];
        for (p, &c) in comp.iter().enumerate() {
            if !seen[c as usize] {
                seen[c as usize] = true;
                first.push((self.labels[p], p, c));
            }
        }
        first.sort_unstable();
        let mut remap = vec![0u32; first.len()];
        for (new, &(_, _, c)) in first.iter().enumerate() {
            remap[c as usize] = new as u32;
        }
        LabelMap {
            width: self.width,
            height: self.height,
            labels: comp.iter().map(|&c| remap[c as usize]).collect(),
            count: first.len() as u32,
        }
    }

    /// True when every region is a single 4-connected component.
    pub fn is_connected(&self) -> bool {
        let comp = self.components();
        let n = comp.iter().copied().max().map_or(0, |m| m + 1);
        n == self.count
    }

    // 4-connected component ids in raster order of discovery.
    fn components(&self) -> Vec<u32> {
        let (w, h) = (self.width, self.height);
        let mut comp = vec![u32::MAX; self.labels.len()];
        let mut next = 0u32;
        let mut stack = Vec::new();
        for start in 0..self.labels.len() {
            if comp[start] != u32::MAX {
                continue;
            }
            let lab = self.labels[start];
            comp[start] = next;
            stack.push(start);
            while let Some(p) = stack.pop() {
                let (r, c) = (p / w, p % w);
                let mut visit = |q: usize| {
                    if comp[q] == u32::MAX && self.labels[q] == lab {
                        comp[q] = next;
                        stack.push(q);
                    }
                };
                if r > 0 {
                    visit(p - w);
                }
                if r + 1 < h {
                    visit(p + w);
                }
                if c > 0 {
                    visit(p - 1);
                }
                if c + 1 < w {
                    visit(p + 1);
                }
            }
            next += 1;
        }
        comp
    }

    /// Unordered pairs `(i, j)`, `i < j`, of regions sharing a 4-neighbor
    /// pixel pair.
    pub fn adjacency(&self) -> BTreeSet<(u32, u32)> {
        adjacency_of(self.width, self.height, &self.labels)
    }

    /// Loads a PGM label map (8- or 16-bit) and densifies its ids.
    pub fn load_pgm(path: &Path) -> Result<Self> {
        let pnm = netpbm::read(path)?;
        if pnm.channels != 1 {
            return Err(Error::Unsupported("label maps must be single-channel PGM".into()));
        }
        let ids: Vec<u32> = pnm.samples.iter().map(|&s| s as u32).collect();
        Self::from_ids(pnm.width, pnm.height, &ids)
    }

    /// 16-bit binary PGM bytes with pixel value = region id.
    pub fn to_pgm(&self) -> Result<Vec<u8>> {
        if self.count > 65536 {
            return Err(Error::Unsupported(format!(
                "{} regions do not fit a 16-bit PGM",
                self.count
            )));
        }
        Ok(netpbm::encode(&Netpbm {
            width: self.width,
            height: self.height,
            maxval: 65535,
            channels: 1,
            samples: self.labels.iter().map(|&l| l as u16).collect(),
        }))
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        netpbm::write_atomic(path, &self.to_pgm()?)
    }
}

pub(crate) fn adjacency_of(width: usize, height: usize, labels: &[u32]) -> BTreeSet<(u32, u32)> {
    let mut edges = BTreeSet::new();
    let mut add = |a: u32, b: u32| {
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    };
    for r in 0..height {
        for c in 0..width {
            let p = r * width + c;
            if c + 1 < width {
                add(labels[p], labels[p + 1]);
            }
            if r + 1 < height {
                add(labels[p], labels[p + width]);
            }
        }
    }
    edges
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("label map dimensions must be positive".into()));
    }
    if len != width * height {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", width * height),
            actual: format!("{len} labels"),
        });
    }
    Ok(())
}
