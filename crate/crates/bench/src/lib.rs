//! Seeded inputs shared by the benchmarks.

use std::f64::consts::TAU;

use peaktag::{EdgeMap, RasterImage};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sparse random edge map: each pixel is an edge with probability `density`.
pub fn random_edge_map(seed: u64, w: usize, h: usize, density: f64) -> EdgeMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
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

/// Random color image.
pub fn random_raster(seed: u64, w: usize, h: usize) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = (0..w * h).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    RasterImage::new(w, h, pixels).expect("dimensions match")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_are_seeded() {
        assert_eq!(random_edge_map(3, 20, 10, 0.2), random_edge_map(3, 20, 10, 0.2));
        assert_eq!(random_raster(3, 8, 8).pixels(), random_raster(3, 8, 8).pixels());
    }
}
