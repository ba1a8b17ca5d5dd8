//! Seeded generators and brute-force references shared by the test targets.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use tbes::imagecore::RasterImage;
use tbes::{ColorSpace, LabelMap};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two constant Lab colors split at column `split`, plus Gaussian noise.
pub fn two_tone_lab(
    width: usize,
    height: usize,
    split: usize,
    left: [f64; 3],
    right: [f64; 3],
    sigma: f64,
    seed: u64,
) -> RasterImage<f64> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    RasterImage::from_fn(width, height, ColorSpace::Lab, |_, c| {
        let base = if c < split { left } else { right };
        base.map(|v| v + noise.sample(&mut r))
    })
    .unwrap()
}

/// Partition into at most `k` 4-connected regions grown from random seeds.
pub fn random_partition(width: usize, height: usize, k: usize, r: &mut impl Rng) -> LabelMap {
    let n = width * height;
    let mut owner = vec![u32::MAX; n];
    let mut pixels: Vec<usize> = (0..n).collect();
    pixels.shuffle(r);
    let mut frontier: Vec<(usize, u32)> = pixels[..k].iter().enumerate().map(|(l, &p)| (p, l as u32)).collect();
    while !frontier.is_empty() {
        let i = r.gen_range(0..frontier.len());
        let (p, l) = frontier.swap_remove(i);
        if owner[p] != u32::MAX {
            continue;
        }
        owner[p] = l;
        for q in neighbours4(p, width, height) {
            if owner[q] == u32::MAX {
                frontier.push((q, l));
            }
        }
    }
    LabelMap::from_ids(width, height, &owner).unwrap()
}

pub fn neighbours4(p: usize, width: usize, height: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (p / width, p % width);
    let mut out = Vec::with_capacity(4);
    if r > 0 {
        out.push(p - width);
    }
    if r + 1 < height {
        out.push(p + width);
    }
    if c > 0 {
        out.push(p - 1);
    }
    if c + 1 < width {
        out.push(p + 1);
    }
    out.into_iter()
}

/// Pixels reachable from outside the grid through 4-steps over cells where
/// `blocked` is false.
pub fn exterior(blocked: &[bool], width: usize, height: usize) -> Vec<bool> {
    let mut seen = vec![false; width * height];
    let mut queue = VecDeque::new();
    for p in 0..width * height {
        let (r, c) = (p / width, p % width);
        let edge = r == 0 || c == 0 || r + 1 == height || c + 1 == width;
        if edge && !blocked[p] {
            seen[p] = true;
            queue.push_back(p);
        }
    }
    while let Some(p) = queue.pop_front() {
        for q in neighbours4(p, width, height) {
            if !seen[q] && !blocked[q] {
                seen[q] = true;
                queue.push_back(q);
            }
        }
    }
    seen
}

/// Random 4-connected mask grown pixel by pixel, with holes filled. The
/// mask never touches the grid edge so its outside is one component.
pub fn random_blob(width: usize, height: usize, r: &mut impl Rng) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    let start = (r.gen_range(1..height - 1)) * width + r.gen_range(1..width - 1);
    mask[start] = true;
    let target = r.gen_range(1..=(width - 2) * (height - 2));
    let mut members = vec![start];
    while members.len() < target {
        let p = members[r.gen_range(0..members.len())];
        let options: Vec<usize> = neighbours4(p, width, height)
            .filter(|&q| {
                let (qr, qc) = (q / width, q % width);
                !mask[q] && qr > 0 && qc > 0 && qr + 1 < height && qc + 1 < width
            })
            .collect();
        if let Some(&q) = options.choose(r) {
            mask[q] = true;
            members.push(q);
        } else if members.len() >= (width - 2) * (height - 2) {
            break;
        }
    }
    let outside = exterior(&mask, width, height);
    outside.iter().map(|&o| !o).collect()
}

/// Every unordered pixel pair, counted directly.
pub fn brute_force_rand_index(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len();
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

/// `H(A) + H(B) - 2 I(A; B)` from joint counts, in bits.
pub fn entropy_voi(a: &[u32], b: &[u32]) -> f64 {
    use std::collections::HashMap;
    let n = a.len() as f64;
    let mut pa: HashMap<u32, f64> = HashMap::new();
    let mut pb: HashMap<u32, f64> = HashMap::new();
    let mut pab: HashMap<(u32, u32), f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *pa.entry(x).or_default() += 1.0 / n;
        *pb.entry(y).or_default() += 1.0 / n;
        *pab.entry((x, y)).or_default() += 1.0 / n;
    }
    let h = |ps: &mut dyn Iterator<Item = f64>| -> f64 { ps.map(|p| -p * p.log2()).sum() };
    let ha = h(&mut pa.values().copied());
    let hb = h(&mut pb.values().copied());
    let mi: f64 = pab
        .iter()
        .map(|(&(x, y), &p)| p * (p / (pa[&x] * pb[&y])).log2())
        .sum();
    ha + hb - 2.0 * mi
}

/// Guillotine partition into axis-aligned rectangles with sides of at least
/// `min_side` pixels.
pub fn rectangle_partition(width: usize, height: usize, min_side: usize, r: &mut impl Rng) -> LabelMap {
    let mut ids = vec![0u32; width * height];
    let mut next = 0u32;
    let mut stack = vec![(0usize, 0usize, height, width)];
    while let Some((r0, c0, h, w)) = stack.pop() {
        let can_h = h >= 2 * min_side;
        let can_w = w >= 2 * min_side;
        let split = (can_h || can_w) && r.gen_bool(0.8);
        if split {
            if can_w && (!can_h || r.gen_bool(0.5)) {
                let cut = r.gen_range(min_side..=w - min_side);
                stack.push((r0, c0, h, cut));
                stack.push((r0, c0 + cut, h, w - cut));
            } else {
                let cut = r.gen_range(min_side..=h - min_side);
                stack.push((r0, c0, cut, w));
                stack.push((r0 + cut, c0, h - cut, w));
            }
            continue;
        }
        for rr in r0..r0 + h {
            for cc in c0..c0 + w {
                ids[rr * width + cc] = next;
            }
        }
        next += 1;
    }
    LabelMap::from_ids(width, height, &ids).unwrap()
}
