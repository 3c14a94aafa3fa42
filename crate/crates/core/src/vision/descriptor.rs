//! 256-bit intensity-comparison descriptors over a 31x31 patch.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fast::Corner;
use crate::image::SyntheticImage;

/// Seed of the fixed sampling pattern.
pub const PATTERN_SEED: u64 = 0x5EED;
/// Half the patch side: offsets lie in `[-15, 15]`.
pub const PATCH_RADIUS: isize = 15;
pub const BITS: usize = 256;
/// Side of the pre-smoothing box filter.
pub const SMOOTHING: usize = 5;

/// A point pair `(ax, ay, bx, by)` relative to the keypoint.
pub type PointPair = (isize, isize, isize, isize);

/// The 256 comparison pairs, drawn once from a uniform distribution over
/// the patch.
pub fn sampling_pattern() -> &'static [PointPair; BITS] {
    static PATTERN: OnceLock<[PointPair; BITS]> = OnceLock::new();
    PATTERN.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(PATTERN_SEED);
        let mut pairs = [(0, 0, 0, 0); BITS];
        for p in pairs.iter_mut() {
            let r = PATCH_RADIUS as i32;
            let mut draw = || rng.random_range(-r..=r) as isize;
            *p = (draw(), draw(), draw(), draw());
        }
        pairs
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Descriptor {
    pub bits: [u64; 4],
    pub anchor: Corner,
}

impl Descriptor {
    #[inline]
    pub fn hamming(&self, other: &Descriptor) -> u32 {
        self.bits.iter().zip(other.bits.iter()).map(|(a, b)| (a ^ b).count_ones()).sum()
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }
}

fn inside_margin(img: &SyntheticImage, c: &Corner) -> bool {
    let r = PATCH_RADIUS as usize;
    c.x >= r && c.y >= r && c.x + r < img.width && c.y + r < img.height
}

/// Describe every corner whose patch fits inside the image; others are
/// skipped. Bit `i` is set iff the smoothed intensity at the first point of
/// pair `i` is strictly below the second.
pub fn extract_descriptors(img: &SyntheticImage, corners: &[Corner]) -> Vec<Descriptor> {
    let smoothed = img.box_blur(SMOOTHING);
    let pattern = sampling_pattern();
    corners
        .iter()
        .filter(|c| inside_margin(img, c))
        .map(|c| {
            let mut bits = [0u64; 4];
            let (cx, cy) = (c.x as isize, c.y as isize);
            for (i, &(ax, ay, bx, by)) in pattern.iter().enumerate() {
                let a = smoothed.get((cx + ax) as usize, (cy + ay) as usize);
                let b = smoothed.get((cx + bx) as usize, (cy + by) as usize);
                if a < b {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            Descriptor { bits, anchor: *c }
        })
        .collect()
}
