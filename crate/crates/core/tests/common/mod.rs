//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ambientd::image::SyntheticImage;
use ambientd::policy::ControlConstraint;
use ambientd::scene::{render_region, render_region_with, Region, RenderConfig, TextureSpec};
use ambientd::vision::detect_fast_corners;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Radius-3 Bresenham circle, written out independently of the detector.
const RING: [(isize, isize); 16] = [
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

/// Every start and every arc length from 16 down to 9 is tried directly; the
/// first qualifying arc is the longest, and its absolute differences give
/// the score. Then 3x3 suppression with row-major tie breaking.
pub fn oracle_fast(img: &SyntheticImage, t: i32) -> Vec<(usize, usize, u32)> {
    let mut candidates: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    if img.width < 7 || img.height < 7 {
        return Vec::new();
    }
    for y in 3..img.height - 3 {
        for x in 3..img.width - 3 {
            let p = img.get(x, y) as i32;
            let circle: Vec<i32> = RING
                .iter()
                .map(|&(dx, dy)| img.get((x as isize + dx) as usize, (y as isize + dy) as usize) as i32)
                .collect();
            'search: for len in (9..=16).rev() {
                for start in 0..16 {
                    let arc: Vec<i32> = (0..len).map(|j| circle[(start + j) % 16]).collect();
                    if arc.iter().all(|&v| v > p + t) || arc.iter().all(|&v| v < p - t) {
                        let score = arc.iter().map(|&v| (v - p).unsigned_abs()).sum();
                        candidates.insert((y, x), score);
                        break 'search;
                    }
                }
            }
        }
    }
    candidates
        .iter()
        .filter(|&(&(y, x), &s)| {
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    if (ny, nx) == (y, x) {
                        continue;
                    }
                    if let Some(&ns) = candidates.get(&(ny, nx)) {
                        if ns > s || (ns == s && (ny, nx) < (y, x)) {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .map(|(&(y, x), &s)| (x, y, s))
        .collect()
}

pub fn detector(img: &SyntheticImage, t: u8) -> Vec<(usize, usize, u32)> {
    let mut v: Vec<_> = detect_fast_corners(img, t).into_iter().map(|c| (c.x, c.y, c.score)).collect();
    v.sort_by_key(|&(x, y, _)| (y, x));
    v
}

pub fn noiseless(texture: TextureSpec, lux: f64, w: usize, h: usize) -> SyntheticImage {
    render_region_with(&RenderConfig::noiseless(), &Region::new("t", texture, lux), 0, w, h).unwrap()
}

pub fn fast_test_images() -> Vec<(String, SyntheticImage, u8)> {
    let mut out = Vec::new();
    out.push(("flat 0".into(), SyntheticImage::filled(64, 64, 0), 20));
    out.push(("flat 128".into(), SyntheticImage::filled(64, 64, 128), 20));
    for (name, bg, fg, t) in [("bright dot", 0u8, 255u8, 20u8), ("dark dot", 255, 0, 20), ("faint dot", 100, 121, 20)] {
        let mut img = SyntheticImage::filled(64, 64, bg);
        img.set(32, 32, fg);
        out.push((name.into(), img, t));
    }
    for (cell, low, high, lux) in [
        (1, 0.1, 0.9, 500.0),
        (2, 0.1, 0.9, 500.0),
        (3, 0.2, 0.8, 500.0),
        (4, 0.1, 0.9, 300.0),
        (5, 0.3, 0.7, 500.0),
        (8, 0.1, 0.9, 500.0),
        (8, 0.45, 0.55, 500.0),
        (16, 0.1, 0.9, 120.0),
    ] {
        out.push((
            format!("checkerboard {cell} {low}/{high} {lux}"),
            noiseless(TextureSpec::Checkerboard { cell, low, high }, lux, 64, 64),
            20,
        ));
    }
    for (frequency, seed, lux) in
        [(0.25, 1, 500.0), (0.5, 2, 500.0), (1.0, 3, 300.0), (0.125, 4, 800.0), (0.33, 5, 150.0)]
    {
        out.push((
            format!("speckle {frequency} seed {seed}"),
            noiseless(TextureSpec::Speckle { frequency, low: 0.1, high: 0.9, seed }, lux, 64, 64),
            20,
        ));
    }
    // Noisy renders exercise long mixed arcs and plateaus of equal scores.
    for (k, lux) in [(0u64, 80.0), (1, 300.0), (2, 750.0)] {
        let region = Region::new("t", TextureSpec::Speckle { frequency: 0.25, low: 0.2, high: 0.8, seed: 3 }, lux);
        out.push((format!("noisy speckle {lux}"), render_region(&region, k, 96, 72).unwrap(), 20));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let random = SyntheticImage::from_fn(48, 48, |_, _| rng.random::<u8>());
    out.push(("uniform random pixels".into(), random.clone(), 20));
    out.push(("uniform random pixels, t=60".into(), random, 60));
    out.push((
        "marker grid".into(),
        noiseless(TextureSpec::MarkerGrid { cell: 6, low: 0.1, high: 0.9, seed: 9 }, 500.0, 64, 64),
        20,
    ));
    out.push((
        "stripes, t=1".into(),
        noiseless(TextureSpec::Stripes { cell: 3, low: 0.4, high: 0.6 }, 500.0, 64, 64),
        1,
    ));
    out
}

pub fn constraint(source: &str, lo: f64, hi: f64, pref: f64, prio: u8) -> ControlConstraint {
    ControlConstraint::new(source, lo, hi, pref, prio).unwrap()
}

pub fn random_constraints(rng: &mut ChaCha8Rng) -> Vec<ControlConstraint> {
    let n = rng.random_range(1..=6);
    (0..n)
        .map(|i| {
            let a = rng.random_range(0.0..1000.0);
            let b = rng.random_range(0.0..1000.0);
            let (lo, hi) = (f64::min(a, b), f64::max(a, b));
            let pref = rng.random_range(lo..=hi);
            constraint(&format!("c{i}"), lo, hi, pref, rng.random_range(0..=3))
        })
        .collect()
}

pub fn intersect(cs: &[&ControlConstraint]) -> Option<(f64, f64)> {
    let lo = cs.iter().map(|c| c.range[0]).fold(f64::NEG_INFINITY, f64::max);
    let hi = cs.iter().map(|c| c.range[1]).fold(f64::INFINITY, f64::min);
    (lo <= hi).then_some((lo, hi))
}

/// The output must lie in the intersection of the longest prefix of tiers
/// (highest priority first) that is still non-empty, and in the top tier's
/// range (its hull, when the top tier alone is already disjoint).
pub fn check_resolution(cs: &[ControlConstraint], out: f64) -> Result<(), String> {
    let mut tiers: Vec<u8> = cs.iter().map(|c| c.priority).collect();
    tiers.sort();
    tiers.dedup();
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 1..=tiers.len() {
        let members: Vec<&ControlConstraint> = cs.iter().filter(|c| tiers[..k].contains(&c.priority)).collect();
        match intersect(&members) {
            Some(r) => best = r,
            None => break,
        }
    }
    if !(best.0 <= out && out <= best.1) {
        return Err(format!("{out} outside {best:?} for {cs:?}"));
    }
    let top: Vec<&ControlConstraint> = cs.iter().filter(|c| c.priority == tiers[0]).collect();
    let (lo, hi) = intersect(&top).unwrap_or_else(|| {
        let lo = top.iter().map(|c| c.range[0]).fold(f64::INFINITY, f64::min);
        let hi = top.iter().map(|c| c.range[1]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    });
    if !(lo <= out && out <= hi) {
        return Err(format!("{out} outside top tier [{lo}, {hi}] for {cs:?}"));
    }
    Ok(())
}
