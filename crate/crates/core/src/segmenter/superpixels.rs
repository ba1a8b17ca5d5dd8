//! Initial over-segmentations.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imagecore::RasterImage;
use crate::labelmap::LabelMap;
use crate::scalar::Scalar;

/// Largest number of regions a 16-bit label file can carry.
pub const MAX_SUPERPIXELS: u32 = 65535;

/// Regular grid of `cell x cell` blocks; the last row and column of blocks
/// absorb any remainder. A fallback when no edge-aware superpixels exist:
/// grid cells straddle edges, so results are noticeably worse.
pub fn grid_superpixels<T: Scalar>(img: &RasterImage<T>, cell: usize) -> Result<LabelMap> {
    grid_labels(img.width(), img.height(), cell)
}

pub fn grid_labels(width: usize, height: usize, cell: usize) -> Result<LabelMap> {
    if cell == 0 {
        return Err(Error::InvalidArgument("grid cell size must be at least 1".into()));
    }
    let cols = (width / cell).max(1);
    let rows = (height / cell).max(1);
    let labels = (0..height)
        .flat_map(|r| {
            let br = (r / cell).min(rows - 1);
            (0..width).map(move |c| (br * cols + (c / cell).min(cols - 1)) as u32)
        })
        .collect();
    LabelMap::new(width, height, labels)
}

/// Reads a PGM superpixel map whose pixel values are region ids. Ids are
/// densified in order and disconnected ids are split into components.
pub fn load_superpixels(path: &Path, width: usize, height: usize) -> Result<LabelMap> {
    let raw = LabelMap::load_pgm(path)?;
    if raw.width() != width || raw.height() != height {
        return Err(Error::DimensionMismatch {
            expected: format!("{width}x{height}"),
            actual: format!("{}x{}", raw.width(), raw.height()),
        });
    }
    let split = raw.split_components();
    if split.region_count() > MAX_SUPERPIXELS {
        return Err(Error::Unsupported(format!(
            "{} superpixels (at most {MAX_SUPERPIXELS})",
            split.region_count()
        )));
    }
    Ok(split)
}
