//! Moore-neighbour contour tracing over a region mask.

use super::ChainCodeSequence;
use crate::mask::RegionMask;

/// `(drow, dcol)` for each Freeman direction; 0 is east, counting
/// counter-clockwise on screen.
pub const OFFSETS: [(isize, isize); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];

fn direction_of(dr: isize, dc: isize) -> usize {
    OFFSETS
        .iter()
        .position(|&o| o == (dr, dc))
        .expect("unit step between 8-neighbours")
}

/// Scans the neighbours of `p` clockwise starting just after the backtrack
/// direction. Returns the direction of the first region pixel and the new
/// backtrack direction relative to that pixel.
fn next_step(mask: &RegionMask, p: (isize, isize), back: usize) -> Option<(usize, usize)> {
    for i in 1..8 {
        let k = (back + 8 - i) % 8;
        let (dr, dc) = OFFSETS[k];
        if mask.at(p.0 + dr, p.1 + dc) {
            let prev = OFFSETS[(k + 1) % 8];
            let nb = direction_of(prev.0 - dr, prev.1 - dc);
            return Some((k, nb));
        }
    }
    None
}

/// Traces one closed contour from `start` with the given background
/// direction. Stops when the start pixel is about to repeat its first move.
fn moore(mask: &RegionMask, start: (isize, isize), back: usize) -> Vec<u8> {
    let Some((first, mut b)) = next_step(mask, start, back) else {
        return Vec::new();
    };
    let mut codes = vec![first as u8];
    let mut p = (start.0 + OFFSETS[first].0, start.1 + OFFSETS[first].1);
    // every boundary pixel is entered at most 4 times
    let cap = 4 * mask.count() + 8;
    while codes.len() <= cap {
        let (k, nb) = next_step(mask, p, b).expect("traced pixel has a region neighbour");
        if p == start && k == first {
            return codes;
        }
        codes.push(k as u8);
        p = (p.0 + OFFSETS[k].0, p.1 + OFFSETS[k].1);
        b = nb;
    }
    unreachable!("contour tracing failed to close");
}

/// Outer contour first (clockwise from the topmost-leftmost pixel), then one
/// contour per hole ordered by the hole's topmost-leftmost pixel.
pub(crate) fn trace_mask(mask: &RegionMask) -> Vec<ChainCodeSequence> {
    let (rows, cols) = (mask.rows(), mask.cols());
    let (row0, col0) = mask.origin();
    let to_global = |r: isize, c: isize| (row0 + r as usize, col0 + c as usize);

    let mut out = Vec::new();
    // topmost row of the bounding box always holds a region pixel
    let first_col = (0..cols as isize).find(|&c| mask.at(0, c)).expect("nonempty mask");
    let outer = moore(mask, (0, first_col), 4);
    out.push(ChainCodeSequence::new(to_global(0, first_col), outer, true));

    // 4-connected background components not reaching the box edge are holes
    let mut seen = vec![false; rows * cols];
    let mut stack = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if seen[i] || mask.at(r as isize, c as isize) {
                continue;
            }
            let mut touches_edge = false;
            seen[i] = true;
            stack.push((r, c));
            while let Some((y, x)) = stack.pop() {
                if y == 0 || x == 0 || y + 1 == rows || x + 1 == cols {
                    touches_edge = true;
                }
                let nbrs = [
                    (y.wrapping_sub(1), x),
                    (y + 1, x),
                    (y, x.wrapping_sub(1)),
                    (y, x + 1),
                ];
                for (ny, nx) in nbrs {
                    if ny < rows && nx < cols {
                        let j = ny * cols + nx;
                        if !seen[j] && !mask.at(ny as isize, nx as isize) {
                            seen[j] = true;
                            stack.push((ny, nx));
                        }
                    }
                }
            }
            if !touches_edge {
                // (r, c) is the hole's topmost-leftmost pixel; the pixel above
                // belongs to the region and the hole lies south of it
                let start = (r as isize - 1, c as isize);
                let codes = moore(mask, start, 6);
                out.push(ChainCodeSequence::new(to_global(start.0, start.1), codes, true));
            }
        }
    }
    out
}
