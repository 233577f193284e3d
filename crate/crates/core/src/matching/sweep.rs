use super::{best_alignment, compute_vcc_grid, Alignment, MatchError, ScoreGrid};
use crate::edges::{detect_edges, filter_edges, EdgeDetectConfig, EdgeMap, FilterConfig};
use crate::raster::RasterImage;

/// Result of matching the photo over a range of scales.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Best alignment; `score` is area-normalized relative to `base_scale`.
    pub alignment: Alignment,
    /// Filtered edge map of the photo at the chosen scale.
    pub photo_edges: EdgeMap,
    /// Score grid at the chosen scale (raw, not normalized).
    pub grid: ScoreGrid,
}

/// Scales tried by [`scale_sweep`], in ascending order.
pub fn candidate_scales(base: f64, sweep_fraction: f64, steps: usize) -> Vec<f64> {
    if sweep_fraction == 0.0 || steps <= 1 {
        return vec![base];
    }
    let lo = base * (1.0 - sweep_fraction);
    let hi = base * (1.0 + sweep_fraction);
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn scaled_size(width: usize, height: usize, scale: f64) -> (usize, usize) {
    let w = ((width as f64 * scale).round() as usize).max(1);
    let h = ((height as f64 * scale).round() as usize).max(1);
    (w, h)
}

/// Matches the photo at every candidate scale and keeps the best.
///
/// A larger photo covers more edges and collects a larger score, so maxima
/// are divided by the area ratio `(w_s·h_s)/(w_b·h_b)` against the photo at
/// `base_scale` before comparing. With `sweep_fraction == 0` this is the
/// plain single-scale pipeline.
#[allow(clippy::too_many_arguments)]
pub fn scale_sweep(
    photo: &RasterImage,
    pano_edges: &EdgeMap,
    base_scale: f64,
    sweep_fraction: f64,
    steps: usize,
    detect_cfg: &EdgeDetectConfig,
    filter_cfg: &FilterConfig,
    pano_q: f64,
) -> Result<SweepOutcome, MatchError> {
    if !(base_scale > 0.0 && base_scale.is_finite()) {
        return Err(MatchError::InvalidScale("base scale must be positive"));
    }
    if !(0.0..1.0).contains(&sweep_fraction) {
        return Err(MatchError::InvalidScale("sweep fraction must lie in [0, 1)"));
    }
    if steps == 0 {
        return Err(MatchError::InvalidScale("at least one sweep step is required"));
    }
    let (bw, bh) = scaled_size(photo.width(), photo.height(), base_scale);
    let base_area = (bw * bh) as f64;

    let mut best: Option<SweepOutcome> = None;
    for scale in candidate_scales(base_scale, sweep_fraction, steps) {
        let (w, h) = scaled_size(photo.width(), photo.height(), scale);
        let scaled = photo.resized(w, h);
        let edges = filter_edges(&detect_edges(&scaled, detect_cfg)?, filter_cfg);
        let grid = compute_vcc_grid(&edges, pano_edges)?;
        let mut alignment = best_alignment(&grid, scale, pano_q, w)?;
        alignment.score /= (w * h) as f64 / base_area;
        let better = match &best {
            None => true,
            Some(b) => alignment.score > b.alignment.score,
        };
        if better {
            best = Some(SweepOutcome {
                alignment,
                photo_edges: edges,
                grid,
            });
        }
    }
    Ok(best.expect("at least one candidate scale"))
}
