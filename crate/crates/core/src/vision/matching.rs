use serde::{Deserialize, Serialize};

use super::descriptor::Descriptor;
use crate::error::{Error, Result};

/// Largest Hamming distance accepted for a match (25% of the bits).
pub const MAX_HAMMING: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub matched: usize,
    pub reference_total: usize,
    /// `matched / reference_total * 100`.
    pub percentage: f64,
}

impl MatchReport {
    pub fn new(matched: usize, reference_total: usize) -> Self {
        let percentage = if reference_total == 0 { 0.0 } else { matched as f64 / reference_total as f64 * 100.0 };
        Self { matched, reference_total, percentage }
    }
}

/// Ordering key for candidate neighbours: Hamming distance first, then
/// anchor proximity, then anchor position. Independent of list order.
fn key(a: &Descriptor, b: &Descriptor) -> (u32, u64, usize, usize) {
    let dx = a.anchor.x.abs_diff(b.anchor.x) as u64;
    let dy = a.anchor.y.abs_diff(b.anchor.y) as u64;
    (a.hamming(b), dx * dx + dy * dy, b.anchor.y, b.anchor.x)
}

fn within(a: &Descriptor, b: &Descriptor, radius: Option<f64>) -> bool {
    match radius {
        None => true,
        Some(r) => {
            let dx = a.anchor.x as f64 - b.anchor.x as f64;
            let dy = a.anchor.y as f64 - b.anchor.y as f64;
            dx * dx + dy * dy <= r * r
        }
    }
}

fn nearest(query: &Descriptor, pool: &[Descriptor], radius: Option<f64>) -> Option<usize> {
    pool.iter().enumerate().filter(|(_, d)| within(query, d, radius)).min_by_key(|(_, d)| key(query, d)).map(|(i, _)| i)
}

fn mutual_matches(scene: &[Descriptor], reference: &[Descriptor], radius: Option<f64>) -> usize {
    let scene_nn: Vec<Option<usize>> = scene.iter().map(|d| nearest(d, reference, radius)).collect();
    reference
        .iter()
        .enumerate()
        .filter(|(ri, r)| {
            let Some(si) = nearest(r, scene, radius) else {
                return false;
            };
            scene_nn[si] == Some(*ri) && r.hamming(&scene[si]) <= MAX_HAMMING
        })
        .count()
}

/// Mutual nearest-neighbour matching under Hamming distance.
pub fn match_against_reference(scene: &[Descriptor], reference: &[Descriptor]) -> Result<MatchReport> {
    if reference.is_empty() {
        return Err(Error::InvalidArgument("reference descriptor set is empty".into()));
    }
    Ok(MatchReport::new(mutual_matches(scene, reference, None), reference.len()))
}

/// Mutual nearest-neighbour matching restricted to candidates whose anchors
/// lie within `radius` pixels of each other. Both sets must already be in
/// the same (rectified) frame.
pub fn match_guided(scene: &[Descriptor], reference: &[Descriptor], radius: f64) -> Result<MatchReport> {
    if reference.is_empty() {
        return Err(Error::InvalidArgument("reference descriptor set is empty".into()));
    }
    Ok(MatchReport::new(mutual_matches(scene, reference, Some(radius)), reference.len()))
}
