//! Bounding-box binary masks for single regions.

use crate::labelmap::LabelMap;

/// A region stored as a bit mask over its bounding box, plus the width of
/// the image it lives in so pixel indices can be translated back.
#[derive(Debug, Clone)]
pub(crate) struct RegionMask {
    image_width: usize,
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
    count: usize,
}

impl RegionMask {
    /// Builds the mask of a set of pixel indices. Returns `None` when empty.
    pub fn from_pixels<I>(image_width: usize, pixels: I) -> Option<Self>
    where
        I: IntoIterator<Item = usize> + Clone,
    {
        let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
        let mut any = false;
        for p in pixels.clone() {
            let (r, c) = (p / image_width, p % image_width);
            r0 = r0.min(r);
            r1 = r1.max(r);
            c0 = c0.min(c);
            c1 = c1.max(c);
            any = true;
        }
        if !any {
            return None;
        }
        let (rows, cols) = (r1 - r0 + 1, c1 - c0 + 1);
        let mut bits = vec![false; rows * cols];
        let mut count = 0;
        for p in pixels {
            let i = (p / image_width - r0) * cols + (p % image_width - c0);
            if !bits[i] {
                bits[i] = true;
                count += 1;
            }
        }
        Some(Self {
            image_width,
            row0: r0,
            col0: c0,
            rows,
            cols,
            bits,
            count,
        })
    }

    pub fn from_region(labels: &LabelMap, region: u32) -> Option<Self> {
        let w = labels.width();
        let pixels = labels
            .labels()
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == region)
            .map(|(p, _)| p);
        Self::from_pixels(w, pixels)
    }

    /// Mask of the union of two disjoint regions of the same image.
    pub fn union(a: &RegionMask, b: &RegionMask) -> RegionMask {
        debug_assert_eq!(a.image_width, b.image_width);
        let row0 = a.row0.min(b.row0);
        let col0 = a.col0.min(b.col0);
        let rows = (a.row0 + a.rows).max(b.row0 + b.rows) - row0;
        let cols = (a.col0 + a.cols).max(b.col0 + b.cols) - col0;
        let mut bits = vec![false; rows * cols];
        for m in [a, b] {
            for r in 0..m.rows {
                let dst = (m.row0 - row0 + r) * cols + (m.col0 - col0);
                for c in 0..m.cols {
                    bits[dst + c] |= m.bits[r * m.cols + c];
                }
            }
        }
        let count = bits.iter().filter(|&&b| b).count();
        RegionMask {
            image_width: a.image_width,
            row0,
            col0,
            rows,
            cols,
            bits,
            count,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.row0, self.col0)
    }

    /// Membership in local bounding-box coordinates; anything outside the
    /// box is outside the region.
    #[inline]
    pub fn at(&self, r: isize, c: isize) -> bool {
        r >= 0
            && c >= 0
            && (r as usize) < self.rows
            && (c as usize) < self.cols
            && self.bits[r as usize * self.cols + c as usize]
    }

    #[inline]
    pub fn global_index(&self, r: usize, c: usize) -> usize {
        (self.row0 + r) * self.image_width + self.col0 + c
    }

    /// Global pixel indices of the region in raster order.
    pub fn pixels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows).flat_map(move |r| {
            (0..self.cols)
                .filter(move |&c| self.bits[r * self.cols + c])
                .map(move |c| self.global_index(r, c))
        })
    }

    /// True when the set pixels form one 4-connected component.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.bits.iter().position(|&b| b) else {
            return false;
        };
        let mut seen = vec![false; self.bits.len()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut reached = 0;
        while let Some(i) = stack.pop() {
            reached += 1;
            let (r, c) = (i / self.cols, i % self.cols);
            let mut push = |j: usize| {
                if self.bits[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if r > 0 {
                push(i - self.cols);
            }
            if r + 1 < self.rows {
                push(i + self.cols);
            }
            if c > 0 {
                push(i - 1);
            }
            if c + 1 < self.cols {
                push(i + 1);
            }
        }
        reached == self.count
    }

    /// Pixels whose whole `w x w` window lies inside the region, in raster
    /// order. Computed as a separable erosion with a square element.
    pub fn interior(&self, w: usize) -> Vec<usize> {
        let radius = w / 2;
        if radius == 0 {
            return self.pixels().collect();
        }
        let (rows, cols) = (self.rows, self.cols);
        // horizontal reach: how many set pixels extend to both sides
        let mut reach = vec![0usize; rows * cols];
        let mut left = vec![0usize; cols];
        for r in 0..rows {
            let row = &self.bits[r * cols..(r + 1) * cols];
            let mut run = 0;
            for c in 0..cols {
                run = if row[c] { run + 1 } else { 0 };
                left[c] = run;
            }
            run = 0;
            for c in (0..cols).rev() {
                run = if row[c] { run + 1 } else { 0 };
                reach[r * cols + c] = left[c].min(run);
            }
        }
        let mut up = vec![0usize; rows];
        let mut out = Vec::new();
        for c in 0..cols {
            let mut run = 0;
            for r in 0..rows {
                run = if reach[r * cols + c] > radius { run + 1 } else { 0 };
                up[r] = run;
            }
            run = 0;
            for r in (0..rows).rev() {
                run = if reach[r * cols + c] > radius { run + 1 } else { 0 };
                if up[r].min(run) > radius {
                    out.push(self.global_index(r, c));
                }
            }
        }
        out.sort_unstable();
        out
    }
}
