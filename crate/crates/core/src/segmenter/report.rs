use serde::{Deserialize, Serialize};

/// One accepted merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub step: usize,
    pub window: usize,
    /// The merged pair `(i, j)` with `i < j`; `i` survives.
    pub merged: [u32; 2],
    pub gain: f64,
    pub bits_before: f64,
    pub bits_after: f64,
    pub regions: usize,
}

/// Summary of a segmentation and its coding length. `bits_boundary` is the
/// raw contour cost; `bits_total` charges half of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub epsilon: f64,
    pub w_schedule: Vec<usize>,
    pub merges: usize,
    pub regions: usize,
    pub bits_texture: f64,
    pub bits_boundary: f64,
    pub bits_total: f64,
    pub stage_log: Vec<StageEntry>,
}

impl SegmentationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
