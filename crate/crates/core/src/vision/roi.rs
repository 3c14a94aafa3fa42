//! Marker region-of-interest: locate the square dark patch, crop to it, and
//! resample it into the reference frame for matching.

use crate::image::{to_pixel, SyntheticImage};
use crate::scene::{REFERENCE_MARGIN, REFERENCE_SIZE};

/// Pixels added around the detected component on each side.
pub const CROP_PAD: usize = 4;
/// Components at or below this area are treated as noise.
pub const MIN_COMPONENT_AREA: usize = 100;
/// Minimum gap between dark and light class means for a marker to be
/// considered present at all.
pub const MIN_CLASS_SEPARATION: f64 = 8.0;

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.x1 + 1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 + 1 - self.y0
    }
}

/// Iterative intermediate-means threshold: start from the global mean and
/// move to the midpoint of the two class means until it stops changing.
/// Returns the threshold and the class-mean separation.
pub fn iterative_threshold(img: &SyntheticImage) -> (f64, f64) {
    let mut hist = [0u64; 256];
    for &p in &img.pixels {
        hist[p as usize] += 1;
    }
    // Prefix counts and sums; all values are integers well below 2^53, so
    // the class sums are exact whatever the order.
    let mut count_upto = [0u64; 256];
    let mut sum_upto = [0.0f64; 256];
    let (mut n, mut sum) = (0u64, 0.0);
    for (v, &c) in hist.iter().enumerate() {
        n += c;
        sum += v as f64 * c as f64;
        count_upto[v] = n;
        sum_upto[v] = sum;
    }
    let class_means = |t: f64| {
        // Pixel values v <= t are exactly those v <= floor(t).
        let (n0, s0) = if t < 0.0 {
            (0, 0.0)
        } else {
            let k = (t as usize).min(255);
            (count_upto[k], sum_upto[k])
        };
        let (n1, s1) = (n - n0, sum - s0);
        let m0 = if n0 > 0 { s0 / n0 as f64 } else { t };
        let m1 = if n1 > 0 { s1 / n1 as f64 } else { t };
        (m0, m1)
    };
    let mut t = sum / n as f64;
    for _ in 0..64 {
        let (m0, m1) = class_means(t);
        let next = (m0 + m1) / 2.0;
        if (next - t).abs() < 1e-9 {
            break;
        }
        t = next;
    }
    let (m0, m1) = class_means(t);
    (t, m1 - m0)
}

/// Bounding box of the largest 4-connected dark component, if the image
/// holds one larger than [`MIN_COMPONENT_AREA`].
pub fn locate_marker(img: &SyntheticImage) -> Option<BoundingBox> {
    let smoothed = img.box_blur(5);
    let (threshold, separation) = iterative_threshold(&smoothed);
    if separation < MIN_CLASS_SEPARATION {
        return None;
    }
    let (w, h) = (img.width, img.height);
    let dark: Vec<bool> = smoothed.pixels.iter().map(|&p| (p as f64) <= threshold).collect();
    let mut label = vec![0u32; w * h];
    let mut next_label = 0u32;
    let mut best: Option<(usize, BoundingBox)> = None;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !dark[start] || label[start] != 0 {
            continue;
        }
        next_label += 1;
        label[start] = next_label;
        stack.push(start);
        let mut area = 0usize;
        let mut bb = BoundingBox { x0: usize::MAX, y0: usize::MAX, x1: 0, y1: 0 };
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = (i % w, i / w);
            bb.x0 = bb.x0.min(x);
            bb.y0 = bb.y0.min(y);
            bb.x1 = bb.x1.max(x);
            bb.y1 = bb.y1.max(y);
            let mut visit = |j: usize| {
                if dark[j] && label[j] == 0 {
                    label[j] = next_label;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        // Strictly larger wins, so the first component in scan order keeps ties.
        if best.is_none_or(|(a, _)| area > a) {
            best = Some((area, bb));
        }
    }
    best.filter(|(area, _)| *area > MIN_COMPONENT_AREA).map(|(_, bb)| bb)
}

fn padded(bb: BoundingBox, w: usize, h: usize) -> BoundingBox {
    BoundingBox {
        x0: bb.x0.saturating_sub(CROP_PAD),
        y0: bb.y0.saturating_sub(CROP_PAD),
        x1: (bb.x1 + CROP_PAD).min(w - 1),
        y1: (bb.y1 + CROP_PAD).min(h - 1),
    }
}

/// Crop to the marker's bounding box expanded by [`CROP_PAD`] pixels, or
/// return the whole image when no marker-sized dark component exists.
pub fn crop_to_marker_roi(img: &SyntheticImage) -> SyntheticImage {
    match locate_marker(img) {
        Some(bb) => {
            let p = padded(bb, img.width, img.height);
            img.crop(p.x0, p.y0, p.width(), p.height())
        }
        None => img.clone(),
    }
}

/// Marker outline with sub-pixel edges, pixel edges at integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerOutline {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl From<BoundingBox> for MarkerOutline {
    fn from(bb: BoundingBox) -> Self {
        Self { left: bb.x0 as f64, top: bb.y0 as f64, right: (bb.x1 + 1) as f64, bottom: (bb.y1 + 1) as f64 }
    }
}

/// Where a mean intensity profile crosses `level`, walking from the outside
/// (index 0) inward. Returns the crossing as a fractional index between
/// sample centers.
fn crossing(profile: &[f64], level: f64) -> Option<f64> {
    profile
        .windows(2)
        .enumerate()
        .find_map(|(i, w)| (w[0] > level && w[1] <= level).then(|| i as f64 + (w[0] - level) / (w[0] - w[1])))
}

/// Refine the four sides of `bb` to where the raw image crosses the
/// midpoint between the marker frame and its surround. Rows (or columns) of
/// the middle half of each side are averaged to suppress noise.
pub fn refine_outline(img: &SyntheticImage, bb: BoundingBox) -> MarkerOutline {
    const SEARCH: isize = 4;
    let coarse = MarkerOutline::from(bb);
    if bb.width() < 8 || bb.height() < 8 {
        return coarse;
    }
    let (w, h) = (img.width as isize, img.height as isize);
    let mean_over = |xs: std::ops::RangeInclusive<isize>, ys: std::ops::RangeInclusive<isize>| {
        let mut sum = 0.0;
        let mut n = 0usize;
        for y in ys {
            for x in xs.clone() {
                let (xc, yc) = (x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize);
                sum += img.get(xc, yc) as f64;
                n += 1;
            }
        }
        sum / n as f64
    };
    let (x0, y0, x1, y1) = (bb.x0 as isize, bb.y0 as isize, bb.x1 as isize, bb.y1 as isize);
    let rows = (y0 + (y1 - y0) / 4)..=(y1 - (y1 - y0) / 4);
    let cols = (x0 + (x1 - x0) / 4)..=(x1 - (x1 - x0) / 4);

    // Profiles sampled from outside to inside across each side.
    let left: Vec<f64> = (x0 - SEARCH..=x0 + SEARCH).map(|x| mean_over(x..=x, rows.clone())).collect();
    let right: Vec<f64> = (x1 - SEARCH..=x1 + SEARCH).rev().map(|x| mean_over(x..=x, rows.clone())).collect();
    let top: Vec<f64> = (y0 - SEARCH..=y0 + SEARCH).map(|y| mean_over(cols.clone(), y..=y)).collect();
    let bottom: Vec<f64> = (y1 - SEARCH..=y1 + SEARCH).rev().map(|y| mean_over(cols.clone(), y..=y)).collect();

    let side = |profile: &[f64]| {
        let outside = profile[0];
        let inside = profile.iter().cloned().fold(f64::INFINITY, f64::min);
        crossing(profile, (outside + inside) / 2.0)
    };
    // Pixel i's center sits at i + 0.5; a crossing at fractional index c
    // between samples is at edge coordinate start + c + 0.5.
    MarkerOutline {
        left: side(&left).map_or(coarse.left, |c| (x0 - SEARCH) as f64 + c + 0.5),
        top: side(&top).map_or(coarse.top, |c| (y0 - SEARCH) as f64 + c + 0.5),
        right: side(&right).map_or(coarse.right, |c| (x1 + SEARCH) as f64 - c + 0.5),
        bottom: side(&bottom).map_or(coarse.bottom, |c| (y1 + SEARCH) as f64 - c + 0.5),
    }
}

/// Resample the marker inside `outline` so that it occupies the same frame
/// as the reference render (a `REFERENCE_SIZE` square with a light margin).
pub fn rectify(img: &SyntheticImage, outline: MarkerOutline) -> SyntheticImage {
    let inner = (REFERENCE_SIZE - 2 * REFERENCE_MARGIN) as f64;
    let sx = (outline.right - outline.left) / inner;
    let sy = (outline.bottom - outline.top) / inner;
    let margin = REFERENCE_MARGIN as f64;
    // Axis-aligned scaling: the bilinear taps of each column and row are
    // shared by the whole output row and column.
    let taps = |start: f64, scale: f64, len: usize| -> Vec<(usize, usize, f64)> {
        let max = (len - 1) as f64;
        (0..REFERENCE_SIZE)
            .map(|i| {
                let c = (start + (i as f64 + 0.5 - margin) * scale - 0.5).clamp(0.0, max);
                let c0 = c.floor() as usize;
                (c0, (c0 + 1).min(len - 1), c - c0 as f64)
            })
            .collect()
    };
    let xs = taps(outline.left, sx, img.width);
    let ys = taps(outline.top, sy, img.height);
    let mut pixels = Vec::with_capacity(REFERENCE_SIZE * REFERENCE_SIZE);
    for &(y0, y1, fy) in &ys {
        let (r0, r1) = (&img.pixels[y0 * img.width..], &img.pixels[y1 * img.width..]);
        for &(x0, x1, fx) in &xs {
            let top = r0[x0] as f64 * (1.0 - fx) + r0[x1] as f64 * fx;
            let bottom = r1[x0] as f64 * (1.0 - fx) + r1[x1] as f64 * fx;
            pixels.push(to_pixel(top * (1.0 - fy) + bottom * fy));
        }
    }
    let mut out = SyntheticImage::new(REFERENCE_SIZE, REFERENCE_SIZE, pixels).expect("square reference frame");
    out.seed = img.seed;
    out
}

/// Locate, refine and rectify in one step. `None` when no marker is visible.
pub fn marker_view(img: &SyntheticImage) -> Option<SyntheticImage> {
    locate_marker(img).map(|bb| rectify(img, refine_outline(img, bb)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch_image(x0: usize, y0: usize, w: usize, h: usize) -> SyntheticImage {
        SyntheticImage::from_fn(
            160,
            120,
            |x, y| {
                if (x0..x0 + w).contains(&x) && (y0..y0 + h).contains(&y) {
                    20
                } else {
                    220
                }
            },
        )
    }

    #[test]
    fn crop_hugs_a_dark_patch() {
        let img = patch_image(50, 30, 40, 40);
        let bb = locate_marker(&img).unwrap();
        for (got, want) in [(bb.x0, 50), (bb.y0, 30), (bb.x1, 89), (bb.y1, 69)] {
            assert!(got.abs_diff(want) <= 4, "{bb:?}");
        }
        let crop = crop_to_marker_roi(&img);
        assert!(crop.width.abs_diff(48) <= 4 && crop.height.abs_diff(48) <= 4);
    }

    #[test]
    fn uniform_image_is_returned_whole() {
        let img = SyntheticImage::filled(64, 64, 230);
        let crop = crop_to_marker_roi(&img);
        assert_eq!(crop, img);
    }

    #[test]
    fn tiny_components_are_ignored() {
        let img = patch_image(10, 10, 8, 8);
        assert!(locate_marker(&img).is_none());
    }

    #[test]
    fn crop_is_clamped_at_image_edges() {
        let img = patch_image(0, 0, 30, 30);
        let crop = crop_to_marker_roi(&img);
        assert!(crop.width <= 36 && crop.height <= 36);
    }

    #[test]
    fn threshold_splits_two_levels() {
        let img = SyntheticImage::from_fn(10, 10, |x, _| if x < 5 { 40 } else { 200 });
        let (t, sep) = iterative_threshold(&img);
        assert!(t > 40.0 && t < 200.0);
        assert_eq!(sep, 160.0);
    }
}
