//! FAST-9 corner detection on the 16-pixel Bresenham circle of radius 3.

use serde::{Deserialize, Serialize};

use crate::image::SyntheticImage;

/// Default intensity threshold used for characterization and matching.
pub const DEFAULT_THRESHOLD: u8 = 20;

/// Minimum contiguous arc length.
pub const ARC_LENGTH: usize = 9;

/// Circle offsets, clockwise starting straight above the center.
pub const CIRCLE: [(isize, isize); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Corner {
    pub x: usize,
    pub y: usize,
    /// Sum of absolute center differences over the qualifying arc.
    pub score: u32,
}

/// Circle offsets as flat indices into a row-major raster of `width`.
fn ring_offsets(width: usize) -> [isize; 16] {
    CIRCLE.map(|(dx, dy)| dy * width as isize + dx)
}

/// Whether the 16-bit circular mask holds `ARC_LENGTH` consecutive set bits.
#[inline]
fn has_arc(mask: u32) -> bool {
    let doubled = mask | (mask << 16);
    let mut run = doubled;
    for _ in 1..ARC_LENGTH {
        run &= run >> 1;
    }
    run != 0
}

/// Score of the pixel at flat index `i` if it is a FAST-9 corner. The
/// caller guarantees a 3-pixel border.
#[inline]
fn corner_score(pixels: &[u8], i: usize, ring_at: &[isize; 16], threshold: u8) -> Option<u32> {
    let px = |k: usize| pixels[(i as isize + ring_at[k]) as usize] as i32;
    let p = pixels[i] as i32;
    let t = threshold as i32;
    // Any 9 contiguous circle pixels include at least two of the four
    // compass points, so fewer than two on either side rules the pixel out.
    let (mut brighter, mut darker) = (0, 0);
    for k in [0, 4, 8, 12] {
        let v = px(k);
        brighter += (v > p + t) as u32;
        darker += (v < p - t) as u32;
    }
    if brighter < 2 && darker < 2 {
        return None;
    }
    let (mut bright_mask, mut dark_mask) = (0u32, 0u32);
    for k in 0..16 {
        let v = px(k);
        bright_mask |= ((v > p + t) as u32) << k;
        dark_mask |= ((v < p - t) as u32) << k;
    }
    if !has_arc(bright_mask) && !has_arc(dark_mask) {
        return None;
    }
    let mut ring = [0i32; 16];
    let mut state = [0i8; 16];
    for k in 0..16 {
        let v = px(k);
        ring[k] = v;
        state[k] = if v > p + t {
            1
        } else if v < p - t {
            -1
        } else {
            0
        };
    }
    // Longest cyclic run of identical non-zero state; walk twice around.
    let mut best: Option<(usize, usize)> = None; // (end index in doubled walk, length)
    let mut run = 0usize;
    for i in 0..32 {
        let s = state[i % 16];
        if s != 0 && i > 0 && s == state[(i - 1) % 16] {
            run += 1;
        } else if s != 0 {
            run = 1;
        } else {
            run = 0;
        }
        let len = run.min(16);
        if len >= ARC_LENGTH && best.is_none_or(|(_, l)| len > l) {
            best = Some((i, len));
        }
    }
    let (end, len) = best?;
    let score = (0..len).map(|j| (ring[(end + 32 - j) % 16] - p).unsigned_abs()).sum();
    Some(score)
}

/// All pixels that pass the segment test, with scores, before suppression.
/// Row-major order.
pub fn detect_fast_candidates(img: &SyntheticImage, threshold: u8) -> Vec<Corner> {
    let threshold = threshold.max(1);
    let mut out = Vec::new();
    if img.width < 7 || img.height < 7 {
        return out;
    }
    let (w, t) = (img.width, threshold as i16);
    let ring_at = ring_offsets(w);
    let row = |y: usize| &img.pixels[y * w..(y + 1) * w];
    let mut compass = vec![false; w - 6];
    for y in 3..img.height - 3 {
        // Any 9 contiguous circle pixels include at least two of the four
        // compass points, so fewer than two on either side rules the pixel
        // out. Done a row at a time so the bulk of pixels skip the ring.
        let (up, mid, down) = (row(y - 3), row(y), row(y + 3));
        for ((((pass, &p), &n), &s), (&e, &wst)) in compass
            .iter_mut()
            .zip(&mid[3..w - 3])
            .zip(&up[3..w - 3])
            .zip(&down[3..w - 3])
            .zip(mid[6..].iter().zip(&mid[..w - 6]))
        {
            let (hi, lo) = (p as i16 + t, p as i16 - t);
            let bright =
                (n as i16 > hi) as u8 + (e as i16 > hi) as u8 + (s as i16 > hi) as u8 + (wst as i16 > hi) as u8;
            let dark =
                ((n as i16) < lo) as u8 + ((e as i16) < lo) as u8 + ((s as i16) < lo) as u8 + ((wst as i16) < lo) as u8;
            *pass = bright >= 2 || dark >= 2;
        }
        for (k, _) in compass.iter().enumerate().filter(|(_, &pass)| pass) {
            let x = k + 3;
            if let Some(score) = corner_score(&img.pixels, y * w + x, &ring_at, threshold) {
                out.push(Corner { x, y, score });
            }
        }
    }
    out
}

/// FAST-9 corners after 3x3 non-maximum suppression on score. Among equal
/// scores the earlier pixel in row-major order wins.
pub fn detect_fast_corners(img: &SyntheticImage, threshold: u8) -> Vec<Corner> {
    let candidates = detect_fast_candidates(img, threshold);
    if candidates.is_empty() {
        return candidates;
    }
    let mut scores = vec![0u32; img.width * img.height];
    let mut present = vec![false; img.width * img.height];
    for c in &candidates {
        scores[c.y * img.width + c.x] = c.score;
        present[c.y * img.width + c.x] = true;
    }
    candidates
        .into_iter()
        .filter(|c| {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = (c.x as isize + dx) as usize;
                    let ny = (c.y as isize + dy) as usize;
                    let idx = ny * img.width + nx;
                    if !present[idx] {
                        continue;
                    }
                    let earlier = (ny, nx) < (c.y, c.x);
                    if scores[idx] > c.score || (scores[idx] == c.score && earlier) {
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_image_has_no_corners() {
        let img = SyntheticImage::filled(32, 32, 128);
        assert!(detect_fast_corners(&img, 20).is_empty());
    }

    #[test]
    fn single_bright_pixel_is_one_corner() {
        let mut img = SyntheticImage::filled(21, 21, 0);
        img.set(10, 10, 255);
        let corners = detect_fast_corners(&img, 20);
        assert_eq!(corners.len(), 1);
        assert_eq!((corners[0].x, corners[0].y), (10, 10));
        assert_eq!(corners[0].score, 16 * 255);
    }

    #[test]
    fn eight_pixel_arc_is_rejected_nine_accepted() {
        for (arc, expect) in [(8usize, false), (9, true)] {
            let mut img = SyntheticImage::filled(9, 9, 100);
            for (dx, dy) in CIRCLE.iter().take(arc) {
                img.set((4 + dx) as usize, (4 + dy) as usize, 200);
            }
            let found = detect_fast_candidates(&img, 20).iter().any(|c| c.x == 4 && c.y == 4);
            assert_eq!(found, expect, "arc {arc}");
        }
    }

    #[test]
    fn arc_wrapping_past_index_zero_counts() {
        let mut img = SyntheticImage::filled(9, 9, 100);
        for k in [12usize, 13, 14, 15, 0, 1, 2, 3, 4] {
            let (dx, dy) = CIRCLE[k];
            img.set((4 + dx) as usize, (4 + dy) as usize, 10);
        }
        let c = detect_fast_candidates(&img, 20).into_iter().find(|c| c.x == 4 && c.y == 4).expect("wrapped arc");
        assert_eq!(c.score, 9 * 90);
    }

    #[test]
    fn threshold_is_strict() {
        let mut img = SyntheticImage::filled(9, 9, 100);
        for (dx, dy) in CIRCLE {
            img.set((4 + dx) as usize, (4 + dy) as usize, 120);
        }
        assert!(detect_fast_candidates(&img, 20).iter().all(|c| (c.x, c.y) != (4, 4)));
        assert!(detect_fast_candidates(&img, 19).iter().any(|c| (c.x, c.y) == (4, 4)));
    }
}
