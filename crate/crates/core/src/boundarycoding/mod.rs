//! Region boundaries as chain codes and their adaptive coding length.
//!
//! Contours are traced with the Moore neighbourhood on the pixel grid. The
//! outer contour of a region starts at its topmost-leftmost pixel and runs
//! clockwise; every hole contributes one more closed contour. A contour of
//! `T` moves is charged 3 bits for its first orientation plus the ideal code
//! length of its `T - 1` difference codes under a prior.

mod trace;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelmap::LabelMap;
use crate::mask::RegionMask;
use crate::scalar::Scalar;

pub use trace::OFFSETS as FREEMAN_OFFSETS;

/// Probability floor applied when a prior entry is zero.
pub const PROBABILITY_FLOOR: f64 = 5e-4;

/// Bits charged for the first orientation of a non-empty contour.
pub const INITIAL_CODE_BITS: f64 = 3.0;

/// Difference-code prior measured on human segmentations of natural images.
pub const BSD_PRIOR: [f64; 8] = [0.585, 0.190, 0.020, 0.000, 0.002, 0.003, 0.031, 0.169];

/// A start pixel and the Freeman orientations of successive moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainCodeSequence {
    pub start: (usize, usize),
    pub codes: Vec<u8>,
    pub closed: bool,
}

impl ChainCodeSequence {
    pub fn new(start: (usize, usize), codes: Vec<u8>, closed: bool) -> Self {
        Self {
            start,
            codes,
            closed,
        }
    }

    /// Number of moves `T`.
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Pixels visited when replaying the moves, starting pixel included.
    /// `None` if a move would leave the non-negative quadrant.
    pub fn replay(&self) -> Option<Vec<(usize, usize)>> {
        let mut pos = (self.start.0 as isize, self.start.1 as isize);
        let mut out = vec![self.start];
        for &code in &self.codes {
            let (dr, dc) = FREEMAN_OFFSETS[code as usize % 8];
            pos = (pos.0 + dr, pos.1 + dc);
            if pos.0 < 0 || pos.1 < 0 {
                return None;
            }
            out.push((pos.0 as usize, pos.1 as usize));
        }
        Some(out)
    }
}

/// Probabilities of the eight difference codes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainCodePrior<T> {
    probabilities: [T; 8],
}

impl<T: Scalar> ChainCodePrior<T> {
    pub fn new(probabilities: [T; 8]) -> Result<Self> {
        if probabilities.iter().any(|&p| !(p >= T::zero())) {
            return Err(Error::InvalidArgument("prior probabilities must be nonnegative".into()));
        }
        let sum = probabilities.iter().fold(T::zero(), |a, &b| a + b);
        if (sum - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::InvalidArgument(format!(
                "prior probabilities sum to {}, not 1",
                sum.as_f64()
            )));
        }
        Ok(Self { probabilities })
    }

    pub fn bsd() -> Self {
        Self {
            probabilities: BSD_PRIOR.map(T::lit),
        }
    }

    pub fn uniform() -> Self {
        Self {
            probabilities: [T::lit(0.125); 8],
        }
    }

    pub fn probabilities(&self) -> &[T; 8] {
        &self.probabilities
    }

    /// Ideal code length of each difference code, with the floor applied.
    pub fn code_bits(&self) -> [T; 8] {
        let floor = T::lit(PROBABILITY_FLOOR);
        self.probabilities.map(|p| -p.max(floor).log2())
    }

    /// JSON array of eight probabilities rounded to three decimals.
    pub fn to_json(&self) -> String {
        let rounded: Vec<f64> = self
            .probabilities
            .iter()
            .map(|p| (p.as_f64() * 1000.0).round() / 1000.0)
            .collect();
        serde_json::to_string(&rounded).expect("plain numbers serialize")
    }

    /// Parses a JSON array of eight reals. Values rounded on export may be
    /// off from 1 by a few thousandths; they are renormalized.
    pub fn from_json(text: &str) -> Result<Self> {
        let values: Vec<f64> = serde_json::from_str(text)?;
        let arr: [f64; 8] = values.as_slice().try_into().map_err(|_| {
            Error::Format(format!("prior must list 8 probabilities, found {}", values.len()))
        })?;
        if arr.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("prior probabilities must be nonnegative".into()));
        }
        let sum: f64 = arr.iter().sum();
        if (sum - 1.0).abs() > 0.01 {
            return Err(Error::InvalidArgument(format!(
                "prior probabilities sum to {sum}, not 1"
            )));
        }
        Self::new(arr.map(|p| T::lit(p / sum)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl<T: Scalar> Serialize for ChainCodePrior<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<f64> = self.probabilities.iter().map(|p| p.as_f64()).collect();
        v.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ChainCodePrior<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 8]>::deserialize(d)?;
        Self::new(v.map(T::lit)).map_err(serde::de::Error::custom)
    }
}

fn region_mask(labels: &LabelMap, region: u32) -> Result<RegionMask> {
    let mask = RegionMask::from_region(labels, region).ok_or(Error::UnknownRegion(region))?;
    if !mask.is_connected() {
        return Err(Error::DisconnectedRegion(region));
    }
    Ok(mask)
}

/// All closed contours of a 4-connected region: the outer one first, then
/// one per hole.
pub fn trace_boundaries(labels: &LabelMap, region: u32) -> Result<Vec<ChainCodeSequence>> {
    Ok(trace::trace_mask(&region_mask(labels, region)?))
}

pub(crate) fn trace_region_mask(mask: &RegionMask) -> Vec<ChainCodeSequence> {
    trace::trace_mask(mask)
}

/// Plain Freeman cost: 3 bits per move.
pub fn freeman_length<T: Scalar>(seq: &ChainCodeSequence) -> T {
    T::lit(3.0) * T::from_count(seq.len())
}

/// `(o_t - o_{t+1}) mod 8` for consecutive moves; `T - 1` values.
pub fn difference_codes(seq: &ChainCodeSequence) -> Vec<u8> {
    seq.codes
        .windows(2)
        .map(|w| (w[0] + 8 - w[1]) % 8)
        .collect()
}

fn histogram(diffs: &[u8]) -> [usize; 8] {
    let mut h = [0usize; 8];
    for &d in diffs {
        h[d as usize] += 1;
    }
    h
}

/// Bits for one contour: the initial orientation plus the ideal code length
/// of its difference codes under `prior`.
pub fn entropy_boundary_length<T: Scalar>(seq: &ChainCodeSequence, prior: &ChainCodePrior<T>) -> T {
    if seq.is_empty() {
        return T::zero();
    }
    let counts = histogram(&difference_codes(seq));
    let bits = prior.code_bits();
    let mut total = T::zero();
    for i in 0..8 {
        total += T::from_count(counts[i]) * bits[i];
    }
    total + T::lit(INITIAL_CODE_BITS)
}

pub(crate) fn contours_bits<T: Scalar>(contours: &[ChainCodeSequence], prior: &ChainCodePrior<T>) -> T {
    contours
        .iter()
        .fold(T::zero(), |acc, s| acc + entropy_boundary_length(s, prior))
}

/// Boundary bits of a region: sum over all of its traced contours.
pub fn region_boundary_length<T: Scalar>(
    labels: &LabelMap,
    region: u32,
    prior: &ChainCodePrior<T>,
) -> Result<T> {
    Ok(contours_bits(&trace_boundaries(labels, region)?, prior))
}

/// Normalized histogram of difference codes over every contour of every
/// region of every map. Disconnected labels are split before tracing.
pub fn estimate_prior<T: Scalar>(truths: &[LabelMap]) -> Result<ChainCodePrior<T>> {
    if truths.is_empty() {
        return Err(Error::Empty("ground-truth list"));
    }
    let mut counts = [0usize; 8];
    for map in truths {
        let map = map.split_components();
        let pixels = map.region_pixels();
        for px in &pixels {
            let mask = RegionMask::from_pixels(map.width(), px.iter().copied())
                .expect("dense labels have pixels");
            for seq in trace::trace_mask(&mask) {
                for (c, h) in counts.iter_mut().zip(histogram(&difference_codes(&seq))) {
                    *c += h;
                }
            }
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("difference codes (all contours are trivial)"));
    }
    let t = T::from_count(total);
    ChainCodePrior::new(counts.map(|c| T::from_count(c) / t))
}
