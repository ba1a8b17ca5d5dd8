//! Segmentation discrepancy against one or more human segmentations:
//! probabilistic Rand index, variation of information and boundary F-measure.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelmap::LabelMap;

/// Default boundary-matching tolerance as a fraction of the image diagonal.
pub const TOLERANCE_FRACTION: f64 = 0.0075;

/// Largest `k1 * k2` for which the contingency table is stored densely.
const DENSE_TABLE_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Pri,
    Voi,
    Gfm,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Pri, Metric::Voi, Metric::Gfm];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Pri => "pri",
            Metric::Voi => "voi",
            Metric::Gfm => "gfm",
        }
    }

    /// Turns a metric value into a discrepancy (lower is better).
    pub fn discrepancy(self, value: f64) -> f64 {
        match self {
            Metric::Pri | Metric::Gfm => 1.0 - value,
            Metric::Voi => value,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pri" => Ok(Metric::Pri),
            "voi" => Ok(Metric::Voi),
            "gfm" => Ok(Metric::Gfm),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric '{other}' (expected pri, voi or gfm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub name: Metric,
    pub value: f64,
    /// Value against each ground truth (PRI and VOI only).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_ground_truth: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recall: Option<f64>,
}

fn check_inputs(test: &LabelMap, truths: &[LabelMap]) -> Result<()> {
    if truths.is_empty() {
        return Err(Error::Empty("ground-truth list"));
    }
    for t in truths {
        if !test.same_dims(t) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", test.width(), test.height()),
                actual: format!("{}x{}", t.width(), t.height()),
            });
        }
    }
    Ok(())
}

/// Nonzero cells of the contingency table with row and column sums.
struct Contingency {
    cells: Vec<u64>,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

fn contingency(a: &LabelMap, b: &LabelMap) -> Contingency {
    let k1 = a.region_count() as usize;
    let k2 = b.region_count() as usize;
    let mut rows = vec![0u64; k1];
    let mut cols = vec![0u64; k2];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        rows[x as usize] += 1;
        cols[y as usize] += 1;
    }
    let cells = if k1.saturating_mul(k2) <= DENSE_TABLE_LIMIT {
        let mut table = vec![0u64; k1 * k2];
        for (&x, &y) in a.labels().iter().zip(b.labels()) {
            table[x as usize * k2 + y as usize] += 1;
        }
        table.retain(|&c| c > 0);
        table
    } else {
        let mut keys: Vec<u64> = a
            .labels()
            .iter()
            .zip(b.labels())
            .map(|(&x, &y)| (u64::from(x) << 32) | u64::from(y))
            .collect();
        keys.sort_unstable();
        let mut cells = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let j = keys[i..].iter().position(|&k| k != keys[i]).map_or(keys.len(), |o| i + o);
            cells.push((j - i) as u64);
            i = j;
        }
        cells
    };
    Contingency { cells, rows, cols }
}

fn pairs(n: u64) -> u128 {
    u128::from(n) * u128::from(n.saturating_sub(1)) / 2
}

/// Rand index between two maps: fraction of pixel pairs labelled
/// consistently (together in both or apart in both).
fn rand_index(a: &LabelMap, b: &LabelMap) -> f64 {
    let n = a.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let t = contingency(a, b);
    let same_both: u128 = t.cells.iter().map(|&c| pairs(c)).sum();
    let same_a: u128 = t.rows.iter().map(|&c| pairs(c)).sum();
    let same_b: u128 = t.cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    let consistent = total + 2 * same_both - same_a - same_b;
    consistent as f64 / total as f64
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn variation_of_information(a: &LabelMap, b: &LabelMap) -> f64 {
    let n = a.len() as f64;
    let t = contingency(a, b);
    let joint = entropy(&t.cells, n);
    (2.0 * joint - entropy(&t.rows, n) - entropy(&t.cols, n)).max(0.0)
}

fn averaged(name: Metric, per: Vec<f64>) -> MetricResult {
    let value = per.iter().sum::<f64>() / per.len() as f64;
    MetricResult {
        name,
        value,
        per_ground_truth: per,
        precision: None,
        recall: None,
    }
}

/// Rand index averaged over the ground truths.
pub fn pri(test: &LabelMap, truths: &[LabelMap]) -> Result<MetricResult> {
    check_inputs(test, truths)?;
    let per = truths.par_iter().map(|t| rand_index(test, t)).collect();
    Ok(averaged(Metric::Pri, per))
}

/// Variation of information in bits, averaged over the ground truths.
pub fn voi(test: &LabelMap, truths: &[LabelMap]) -> Result<MetricResult> {
    check_inputs(test, truths)?;
    let per = truths
        .par_iter()
        .map(|t| variation_of_information(test, t))
        .collect();
    Ok(averaged(Metric::Voi, per))
}

/// Pixels with a 4-neighbour of a different label.
pub fn boundary_map(labels: &LabelMap) -> Vec<bool> {
    let (w, h) = (labels.width(), labels.height());
    let l = labels.labels();
    let mut out = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            if c + 1 < w && l[p] != l[p + 1] {
                out[p] = true;
                out[p + 1] = true;
            }
            if r + 1 < h && l[p] != l[p + w] {
                out[p] = true;
                out[p + w] = true;
            }
        }
    }
    out
}

/// One-dimensional squared distance transform of a sampled function.
fn dt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q].is_infinite() {
            continue;
        }
        if f[v[0]].is_infinite() {
            v[0] = q;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if f[v[0]].is_infinite() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact squared Euclidean distance from every pixel to the nearest set
/// pixel; infinite when nothing is set.
pub fn squared_distance_transform(sites: &[bool], width: usize, height: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = sites
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();
    let n = width.max(height);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for c in 0..width {
        for r in 0..height {
            f[r] = grid[r * width + c];
        }
        dt_1d(&f[..height], &mut out[..height], &mut v, &mut z);
        for r in 0..height {
            grid[r * width + c] = out[r];
        }
    }
    for r in 0..height {
        let row = &mut grid[r * width..(r + 1) * width];
        f[..width].copy_from_slice(row);
        dt_1d(&f[..width], &mut out[..width], &mut v, &mut z);
        row.copy_from_slice(&out[..width]);
    }
    grid
}

/// `TOLERANCE_FRACTION` of the image diagonal.
pub fn default_tolerance(width: usize, height: usize) -> f64 {
    TOLERANCE_FRACTION * ((width * width + height * height) as f64).sqrt()
}

fn matched(points: &[bool], dist2: &[f64], tol2: f64) -> (u64, u64) {
    let mut hit = 0;
    let mut total = 0;
    for (&b, &d) in points.iter().zip(dist2) {
        if b {
            total += 1;
            if d <= tol2 {
                hit += 1;
            }
        }
    }
    (hit, total)
}

/// Boundary F-measure. Precision: share of test boundary pixels within
/// `tolerance` of any ground-truth boundary. Recall: ground-truth boundary
/// pixels within `tolerance` of the test boundary, pooled over all truths.
pub fn gfm(test: &LabelMap, truths: &[LabelMap], tolerance: f64) -> Result<MetricResult> {
    check_inputs(test, truths)?;
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "boundary tolerance must be nonnegative, got {tolerance}"
        )));
    }
    let (w, h) = (test.width(), test.height());
    let tol2 = tolerance * tolerance;
    let test_b = boundary_map(test);
    let test_dt = squared_distance_transform(&test_b, w, h);
    let truth_b: Vec<Vec<bool>> = truths.par_iter().map(boundary_map).collect();
    let mut union = vec![false; w * h];
    for b in &truth_b {
        for (u, &x) in union.iter_mut().zip(b) {
            *u |= x;
        }
    }
    let union_dt = squared_distance_transform(&union, w, h);
    let (tp, test_total) = matched(&test_b, &union_dt, tol2);
    let (hit, truth_total) = truth_b
        .iter()
        .map(|b| matched(b, &test_dt, tol2))
        .fold((0, 0), |(a, b), (x, y)| (a + x, b + y));

    let precision = if test_total == 0 { 1.0 } else { tp as f64 / test_total as f64 };
    let recall = if truth_total == 0 { 1.0 } else { hit as f64 / truth_total as f64 };
    let value = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MetricResult {
        name: Metric::Gfm,
        value,
        per_ground_truth: Vec::new(),
        precision: Some(precision),
        recall: Some(recall),
    })
}

/// Evaluates one metric; `tolerance` is only used by GFM and defaults to
/// [`default_tolerance`].
pub fn evaluate(
    metric: Metric,
    test: &LabelMap,
    truths: &[LabelMap],
    tolerance: Option<f64>,
) -> Result<MetricResult> {
    match metric {
        Metric::Pri => pri(test, truths),
        Metric::Voi => voi(test, truths),
        Metric::Gfm => {
            let tol = tolerance.unwrap_or_else(|| default_tolerance(test.width(), test.height()));
            gfm(test, truths, tol)
        }
    }
}
