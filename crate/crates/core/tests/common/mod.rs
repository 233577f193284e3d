#![allow(dead_code)]

use std::f64::consts::TAU;

use peaktag::matching::Alignment;
use peaktag::metadata::compute_scale_factor;
use peaktag::pipeline::{align_photo, panorama_edges, Timings};
use peaktag::{alignment_error, EdgeMap, GroundTruth, RunConfig, SynthCase, SynthConfig};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// Sparse random edge map: each pixel is an edge with probability `density`.
pub fn random_edge_map(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> EdgeMap {
    let mut m = EdgeMap::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            if rng.random::<f64>() < density {
                m.set(x, y, rng.random_range(0.05..=1.0), rng.random_range(0.0..TAU));
            }
        }
    }
    m
}

/// Clean case: q = 20, 40° photo, matching palettes, no clutter.
pub fn clean_config(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        ..SynthConfig::default()
    }
}

/// Same geometry as [`clean_config`], recolored with foreground clutter.
pub fn noisy_config(seed: u64) -> SynthConfig {
    SynthConfig {
        noise_density: 0.3,
        photo_palette: peaktag::panorama::Palette::Natural,
        ..clean_config(seed)
    }
}

/// Scale a photo of `case` needs, from its field of view.
pub fn case_scale(case: &SynthCase) -> f64 {
    compute_scale_factor(
        case.fov_deg.to_radians(),
        case.photo.width(),
        case.panorama.raster.width(),
    )
    .unwrap()
}

pub fn truth_of(case: &SynthCase) -> GroundTruth {
    GroundTruth {
        pairs: case.truth_pairs.clone(),
        ..GroundTruth::default()
    }
}

/// Aligns the case's photo with each config against shared panorama edges
/// and returns `(alignment, error in degrees)` per config.
pub fn align_case(case: &SynthCase, cfgs: &[&RunConfig]) -> Vec<(Alignment, f64)> {
    let pano = panorama_edges(&case.panorama.raster, cfgs[0]).unwrap();
    let scale = case_scale(case);
    let truth = truth_of(case);
    cfgs.iter()
        .map(|cfg| {
            let (a, _, _) = align_photo(&case.photo, &pano, case.panorama.q, scale, cfg, &mut Timings::new()).unwrap();
            let e = alignment_error(&truth, &a, case.panorama.q).unwrap();
            (a, e)
        })
        .collect()
}
