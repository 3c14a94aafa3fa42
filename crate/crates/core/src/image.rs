//! Grayscale raster shared by the renderer and every vision operation,
//! plus binary PGM (P5) encoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    /// Seed of the noise realization that produced this frame (0 for
    /// images that did not come from the renderer).
    pub seed: u64,
}

impl SyntheticImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "pixel buffer has {} values, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, pixels, seed: 0 })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, pixels: vec![value; width * height], seed: 0 }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels, seed: 0 }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Bilinear sample with edge clamping.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) as f64 * (1.0 - fx) + self.get(x1, y0) as f64 * fx;
        let bottom = self.get(x0, y1) as f64 * (1.0 - fx) + self.get(x1, y1) as f64 * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Copy of the rectangle `[x0, x0+w) x [y0, y0+h)`; the rectangle must lie
    /// inside the image.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> SyntheticImage {
        assert!(x0 + w <= self.width && y0 + h <= self.height, "crop outside image");
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            pixels.extend_from_slice(&self.pixels[row + x0..row + x0 + w]);
        }
        SyntheticImage { width: w, height: h, pixels, seed: self.seed }
    }

    /// Nearest-neighbour resample to `width x height`.
    pub fn resize_nearest(&self, width: usize, height: usize) -> SyntheticImage {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut out = SyntheticImage::from_fn(width, height, |x, y| {
            let src_x = (((x as f64 + 0.5) * sx) as usize).min(self.width - 1);
            let src_y = (((y as f64 + 0.5) * sy) as usize).min(self.height - 1);
            self.get(src_x, src_y)
        });
        out.seed = self.seed;
        out
    }

    /// Box filter of odd side `size`, borders handled by clamping
    /// coordinates. Output is kept in fixed point as `u16` sums scaled back
    /// to intensities with rounding.
    pub fn box_blur(&self, size: usize) -> SyntheticImage {
        assert!(size % 2 == 1, "box filter side must be odd");
        let r = (size / 2) as isize;
        let h = self.height as isize;
        let area = (size * size) as u32;
        // Separable running sums over a border-replicated row, then down
        // the columns.
        let (wu, hu, ru) = (self.width, self.height, r as usize);
        let mut padded = vec![0u32; wu + 2 * ru + 1];
        let mut horiz = vec![0u32; wu * hu];
        for y in 0..hu {
            let row = &self.pixels[y * wu..(y + 1) * wu];
            padded[..ru].fill(row[0] as u32);
            for (d, &p) in padded[ru..ru + wu].iter_mut().zip(row) {
                *d = p as u32;
            }
            padded[ru + wu..].fill(row[wu - 1] as u32);
            let mut s: u32 = padded[..size].iter().sum();
            let out_row = &mut horiz[y * wu..(y + 1) * wu];
            for x in 0..wu {
                out_row[x] = s;
                s = s + padded[x + size] - padded[x];
            }
        }
        // Rounded division by the window area, tabulated over every
        // possible window sum.
        let mean: Vec<u8> = (0..=area * 255).map(|s| ((s + area / 2) / area) as u8).collect();
        let mut out = vec![0u8; wu * hu];
        let mut acc: Vec<u32> = vec![0; wu];
        for dy in -r..=r {
            let yy = dy.clamp(0, h - 1) as usize;
            for (a, &v) in acc.iter_mut().zip(&horiz[yy * wu..(yy + 1) * wu]) {
                *a += v;
            }
        }
        for y in 0..hu {
            let dst = &mut out[y * wu..(y + 1) * wu];
            for (d, &a) in dst.iter_mut().zip(&acc) {
                *d = mean[a as usize];
            }
            let add = &horiz[(y + ru + 1).min(hu - 1) * wu..][..wu];
            let sub = &horiz[(y as isize - r).max(0) as usize * wu..][..wu];
            for ((a, &p), &m) in acc.iter_mut().zip(add).zip(sub) {
                *a = *a + p - m;
            }
        }
        SyntheticImage { width: self.width, height: self.height, pixels: out, seed: self.seed }
    }

    pub fn inverted(&self) -> SyntheticImage {
        SyntheticImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| 255 - p).collect(),
            seed: self.seed,
        }
    }

    /// Encode as binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Decode a binary PGM (P5). Only maxval 255 is accepted.
    pub fn from_pgm(bytes: &[u8]) -> Result<SyntheticImage> {
        let mut cursor = 0usize;
        let magic = next_token(bytes, &mut cursor)?;
        if magic != b"P5" {
            return Err(Error::Pgm("bad magic, expected P5".into()));
        }
        let width = parse_header_number(bytes, &mut cursor, "width")?;
        let height = parse_header_number(bytes, &mut cursor, "height")?;
        let maxval = parse_header_number(bytes, &mut cursor, "maxval")?;
        if width == 0 || height == 0 {
            return Err(Error::Pgm(format!("bad dimensions {width}x{height}")));
        }
        if maxval != 255 {
            return Err(Error::Pgm(format!("unsupported maxval {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cursor) {
            Some(b) if b.is_ascii_whitespace() => cursor += 1,
            _ => return Err(Error::Pgm("missing raster separator".into())),
        }
        let needed = width.checked_mul(height).ok_or_else(|| Error::Pgm("dimensions overflow".into()))?;
        let raster = &bytes[cursor..];
        if raster.len() < needed {
            return Err(Error::Pgm(format!("truncated raster: {} of {} bytes", raster.len(), needed)));
        }
        SyntheticImage::new(width, height, raster[..needed].to_vec())
    }
}

fn next_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*cursor) {
            Some(b'#') => {
                while let Some(&b) = bytes.get(*cursor) {
                    *cursor += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *cursor += 1,
            Some(_) => break,
            None => return Err(Error::Pgm("unexpected end of header".into())),
        }
    }
    let start = *cursor;
    while let Some(b) = bytes.get(*cursor) {
        if b.is_ascii_whitespace() {
            break;
        }
        *cursor += 1;
    }
    Ok(&bytes[start..*cursor])
}

fn parse_header_number(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, cursor)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::Pgm(format!("bad {what} field")))
}

/// `f64::round` (half away from zero) for values well inside `i64`,
/// without the libm call the baseline x86-64 target makes for it.
#[inline]
pub fn round_half_away(v: f64) -> f64 {
    let i = v as i64;
    let frac = v - i as f64;
    let r = if frac >= 0.5 {
        i + 1
    } else if frac <= -0.5 {
        i - 1
    } else {
        i
    };
    r as f64
}

/// `round_half_away(v)` clamped to the 8-bit range.
#[inline]
pub fn to_pixel(v: f64) -> u8 {
    let c = v.max(0.0).min(255.0);
    let r = c as u8;
    r + (c - r as f64 >= 0.5) as u8
}
