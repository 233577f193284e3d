//! The full photo-to-panorama pipeline: edges, filtering, matching and peak
//! tagging, with per-stage timings.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::config::RunConfig;
use crate::edges::{detect_edges, filter_edges, EdgeError, EdgeMap};
use crate::matching::{robust_rescore, scale_sweep, Alignment, MatchError, ScoreGrid};
use crate::panorama::Panorama;
use crate::peaks::{tag_all_peaks, PeakTag};
use crate::raster::RasterImage;

/// Milliseconds per executed stage.
pub type Timings = BTreeMap<String, f64>;

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub alignment: Alignment,
    /// Filtered photo edges at the chosen scale.
    pub photo_edges: EdgeMap,
    pub grid: ScoreGrid,
    /// Tags in the scaled photo frame.
    pub peak_tags: Vec<PeakTag>,
    pub timings: Timings,
}

/// Detected and filtered panorama edges.
pub fn panorama_edges(raster: &RasterImage, cfg: &RunConfig) -> Result<EdgeMap, EdgeError> {
    Ok(filter_edges(&detect_edges(raster, &cfg.pano_detect())?, &cfg.pano_filter()))
}

/// Runs matching (and the robust stage when enabled) without peak tagging.
pub fn align_photo(
    photo: &RasterImage,
    pano_edges: &EdgeMap,
    q: f64,
    base_scale: f64,
    cfg: &RunConfig,
    timings: &mut Timings,
) -> Result<(Alignment, EdgeMap, ScoreGrid), MatchError> {
    let t = Instant::now();
    let sweep = scale_sweep(
        photo,
        pano_edges,
        base_scale,
        cfg.sweep_fraction(),
        cfg.sweep_steps,
        &cfg.photo_detect(),
        &cfg.photo_filter(),
        q,
    )?;
    timings.insert("match".into(), elapsed_ms(t));
    let mut alignment = sweep.alignment;
    if cfg.robust {
        let t = Instant::now();
        alignment = robust_rescore(
            &sweep.photo_edges,
            pano_edges,
            &sweep.grid,
            &cfg.robust_config(),
            alignment.scale,
            q,
        )?;
        timings.insert("robust".into(), elapsed_ms(t));
    }
    Ok((alignment, sweep.photo_edges, sweep.grid))
}

/// Aligns `photo` against `panorama` and tags its peaks. Pass precomputed
/// panorama edges to skip that stage.
pub fn run_pipeline(
    photo: &RasterImage,
    panorama: &Panorama,
    pano_edges: Option<&EdgeMap>,
    base_scale: f64,
    cfg: &RunConfig,
) -> Result<PipelineOutput, MatchError> {
    let mut timings = Timings::new();
    let owned;
    let pano_edges = match pano_edges {
        Some(e) => e,
        None => {
            let t = Instant::now();
            owned = panorama_edges(&panorama.raster, cfg)?;
            timings.insert("panorama_edges".into(), elapsed_ms(t));
            &owned
        }
    };
    let (alignment, photo_edges, grid) =
        align_photo(photo, pano_edges, panorama.q, base_scale, cfg, &mut timings)?;
    let t = Instant::now();
    let peak_tags = tag_all_peaks(&photo_edges, pano_edges, &panorama.peaks, &alignment, &cfg.refine());
    timings.insert("peaks".into(), elapsed_ms(t));
    Ok(PipelineOutput {
        alignment,
        photo_edges,
        grid,
        peak_tags,
        timings,
    })
}
