//! Vector cross correlation (VCC) between a photo edge map and a cylindrical
//! panorama edge map.
//!
//! Each edge pixel is encoded as `z = (ρ·e^{iθ})²`. The real part of
//! `z_p · conj(z_r)` equals `ρ_p²·ρ_r²·cos 2(θ_p − θ_r)`, so summing it over
//! the overlap rewards parallel edges, ignores edges at 45° and penalizes
//! perpendicular ones. Doubling the angle makes the score blind to the
//! 180° ambiguity of an edge direction.

mod robust;
mod sweep;
mod vcc;

use image::GrayImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edges::EdgeError;

pub use robust::{robust_rescore, robust_score, top_candidates, RobustConfig};
pub use sweep::{candidate_scales, scale_sweep, SweepOutcome};
pub use vcc::{compute_vcc_grid, vcc_brute_force};

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("photo is {photo} px wide but the panorama only {panorama} px")]
    PhotoWiderThanPanorama { photo: usize, panorama: usize },
    #[error("score grid is empty")]
    EmptyGrid,
    #[error("score grid has no positive candidate")]
    NoCandidates,
    #[error("invalid scale parameters: {0}")]
    InvalidScale(&'static str),
    #[error(transparent)]
    Edge(#[from] EdgeError),
}

/// Angular similarity of two edge vectors `(ρ, θ)`.
#[inline]
pub fn edge_similarity(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (r1, t1) = a;
    let (r2, t2) = b;
    r1 * r1 * r2 * r2 * (2.0 * (t1 - t2)).cos()
}

/// VCC score for every overlap position.
///
/// Row `j` holds vertical offset `dy = dy_min + j` with `dy_min = -H_p`;
/// columns are horizontal offsets `dx ∈ [0, W_r)`. Photo pixel `(x, y)`
/// lands on panorama pixel `((x + dx) mod W_r, y + dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    width: usize,
    rows: usize,
    dy_min: i64,
    scores: Vec<f64>,
}

impl ScoreGrid {
    pub(crate) fn new(width: usize, rows: usize, dy_min: i64, scores: Vec<f64>) -> Self {
        debug_assert_eq!(scores.len(), width * rows);
        Self {
            width,
            rows,
            dy_min,
            scores,
        }
    }

    /// Number of horizontal offsets (the panorama width).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dy_min(&self) -> i64 {
        self.dy_min
    }

    pub fn dy_max(&self) -> i64 {
        self.dy_min + self.rows as i64 - 1
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, dy: i64, dx: usize) -> f64 {
        let row = (dy - self.dy_min) as usize;
        self.scores[row * self.width + dx]
    }

    /// Row of scores for one vertical offset.
    pub fn row(&self, dy: i64) -> &[f64] {
        let row = (dy - self.dy_min) as usize;
        &self.scores[row * self.width..(row + 1) * self.width]
    }

    /// Linear heatmap, black at the minimum and white at the maximum.
    pub fn to_heatmap(&self) -> GrayImage {
        let (lo, hi) = self
            .scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = if hi > lo { hi - lo } else { 1.0 };
        let raw = self
            .scores
            .iter()
            .map(|v| (255.0 * (v - lo) / span).round() as u8)
            .collect();
        GrayImage::from_raw(self.width as u32, self.rows as u32, raw)
            .expect("buffer length matches dimensions")
    }
}

/// Estimated overlap of the (scaled) photo on the panorama.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub dx: i64,
    pub dy: i64,
    pub scale: f64,
    pub score: f64,
    #[serde(rename = "azimuth_deg")]
    pub azimuth: f64,
}

impl Alignment {
    /// Builds an alignment, deriving the azimuth from `dx`.
    pub fn from_offsets(dx: i64, dy: i64, scale: f64, score: f64, q: f64, photo_width: usize) -> Self {
        Self {
            dx,
            dy,
            scale,
            score,
            azimuth: offset_to_azimuth(dx, photo_width, q),
        }
    }
}

/// Bearing (degrees) of the photo's center column when the photo sits at
/// horizontal offset `dx`. Panorama column 0 is bearing 0.
pub fn offset_to_azimuth(dx: i64, photo_width: usize, q: f64) -> f64 {
    let center = dx as f64 + photo_width as f64 / 2.0;
    let deg = (center / q).rem_euclid(360.0);
    if deg >= 360.0 {
        0.0
    } else {
        deg
    }
}

/// Global maximum of the grid; ties go to the smallest `dy`, then `dx`.
pub fn best_alignment(
    grid: &ScoreGrid,
    scale: f64,
    pano_q: f64,
    photo_width: usize,
) -> Result<Alignment, MatchError> {
    let (idx, score) = grid
        .scores
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if v <= b => best,
            _ => Some((i, v)),
        })
        .ok_or(MatchError::EmptyGrid)?;
    let dy = grid.dy_min + (idx / grid.width) as i64;
    let dx = (idx % grid.width) as i64;
    Ok(Alignment::from_offsets(dx, dy, scale, score, pano_q, photo_width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn similarity_examples() {
        assert!((edge_similarity((0.5, 1.2), (0.5, 1.2)) - 0.0625).abs() < 1e-15);
        assert!(edge_similarity((1.0, 0.3), (1.0, 0.3 + FRAC_PI_4)).abs() < 1e-15);
        assert!((edge_similarity((1.0, 0.0), (1.0, FRAC_PI_2)) + 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn similarity_has_period_pi(r1 in 0.0f64..1.0, t1 in 0.0f64..6.3, r2 in 0.0f64..1.0, t2 in 0.0f64..6.3) {
            let base = edge_similarity((r1, t1), (r2, t2));
            prop_assert!((edge_similarity((r1, t1 + PI), (r2, t2)) - base).abs() < 1e-12);
            prop_assert!((edge_similarity((r1, t1), (r2, t2 + PI)) - base).abs() < 1e-12);
        }

        #[test]
        fn azimuth_is_in_range(dx in -100_000i64..100_000, w in 1usize..8000, q in 0.5f64..40.0) {
            let a = offset_to_azimuth(dx, w, q);
            prop_assert!((0.0..360.0).contains(&a));
        }
    }

    #[test]
    fn azimuth_examples() {
        assert_eq!(offset_to_azimuth(0, 800, 20.0), 20.0);
        assert_eq!(offset_to_azimuth(7200 - 400, 800, 20.0), 0.0);
        assert_eq!(offset_to_azimuth(3200, 800, 20.0), 180.0);
    }

    #[test]
    fn best_of_single_positive_entry() {
        let mut scores = vec![0.0; 12];
        scores[7] = 2.5;
        let grid = ScoreGrid::new(4, 3, -1, scores);
        let a = best_alignment(&grid, 1.0, 1.0, 2).unwrap();
        assert_eq!((a.dx, a.dy, a.score), (3, 0, 2.5));
    }

    #[test]
    fn ties_pick_smallest_dy_then_dx() {
        let grid = ScoreGrid::new(5, 4, -2, vec![1.0; 20]);
        let a = best_alignment(&grid, 1.0, 1.0, 2).unwrap();
        assert_eq!((a.dx, a.dy), (0, -2));
    }

    #[test]
    fn empty_grid_is_an_error() {
        let grid = ScoreGrid::new(0, 0, 0, vec![]);
        assert_eq!(best_alignment(&grid, 1.0, 1.0, 1), Err(MatchError::EmptyGrid));
    }

    #[test]
    fn alignment_json_field_names() {
        let a = Alignment::from_offsets(3200, -4, 1.0, 2.0, 20.0, 800);
        let v = serde_json::to_value(a).unwrap();
        assert_eq!(v["azimuth_deg"], 180.0);
        assert_eq!(v["dx"], 3200);
        assert_eq!(v["dy"], -4);
    }
}
