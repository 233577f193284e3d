//! Seeded synthetic panorama/photo pairs with known ground truth.
//!
//! Ridgelines come from periodic midpoint displacement, so every layer
//! closes up seamlessly around the cylinder. Farther layers sit higher and
//! are lighter. The photo is a crop of the panorama, optionally repainted
//! with a different palette and cluttered with foreground blobs in its
//! lower third.

use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{expected_width, Panorama, PanoramaError};
use crate::evaluation::{Categories, GroundTruth, PointPair};
use crate::matching::Alignment;
use crate::peaks::Peak;
use crate::raster::RasterImage;

const CONTROL_POINTS: usize = 1024;
const ROUGHNESS: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Palette {
    /// Gray tones, as a terrain renderer would draw them.
    Render,
    /// Sky blue, snow, rock and forest colors.
    Natural,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Panorama resolution, pixels per degree.
    pub q: f64,
    /// Number of depth layers (ridgelines).
    pub layers: usize,
    /// Horizontal field of view of the photo, degrees.
    pub photo_fov: f64,
    /// Fraction of the photo's lower third covered by foreground blobs.
    pub noise_density: f64,
    pub peak_count: usize,
    pub pano_height: usize,
    pub photo_height: usize,
    /// Palette used to paint the photo; the panorama always uses
    /// [`Palette::Render`].
    pub photo_palette: Palette,
    /// Minimum horizontal distance between two peaks, degrees.
    pub min_peak_separation: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            q: 20.0,
            layers: 3,
            photo_fov: 40.0,
            noise_density: 0.0,
            peak_count: 6,
            pano_height: 300,
            photo_height: 200,
            photo_palette: Palette::Render,
            min_peak_separation: 5.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), PanoramaError> {
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(PanoramaError::InvalidResolution(self.q));
        }
        let bad = |m: &str| Err(PanoramaError::MalformedPeaks(format!("synthetic config: {m}")));
        if self.layers == 0 {
            return bad("at least one layer is required");
        }
        if !(self.photo_fov > 0.0 && self.photo_fov <= 360.0) {
            return bad("photo_fov must lie in (0, 360]");
        }
        if !(0.0..=1.0).contains(&self.noise_density) {
            return bad("noise_density must lie in [0, 1]");
        }
        if self.pano_height < 16 || self.photo_height == 0 || self.photo_height > self.pano_height {
            return bad("photo_height must be in 1..=pano_height and pano_height >= 16");
        }
        Ok(())
    }
}

/// A generated panorama/photo pair and the overlap that produced it.
#[derive(Debug, Clone)]
pub struct SynthCase {
    pub panorama: Panorama,
    pub photo: RasterImage,
    pub truth_alignment: Alignment,
    pub truth_pairs: Vec<PointPair>,
    pub fov_deg: f64,
    /// Ridge row (fractional) per panorama column, farthest layer first.
    pub ridgelines: Vec<Vec<f64>>,
    /// The photo spans the whole circle, so its offset is only defined
    /// modulo 360°.
    pub degenerate: bool,
}

/// Contents of `truth.json` in a case directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseTruth {
    #[serde(flatten)]
    pub ground_truth: GroundTruth,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub fov_deg: Option<f64>,
    #[serde(default)]
    pub alignment: Option<Alignment>,
    #[serde(default)]
    pub degenerate: bool,
}

/// Periodic midpoint displacement on `CONTROL_POINTS` samples, scaled to
/// `[-1, 1]`.
fn midpoint_ridge(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = CONTROL_POINTS;
    let mut h = vec![0.0; n];
    let mut step = n;
    let mut amp = 1.0;
    while step > 1 {
        let half = step / 2;
        for i in (0..n).step_by(step) {
            let a = h[i];
            let b = h[(i + step) % n];
            h[i + half] = 0.5 * (a + b) + rng.random_range(-amp..=amp);
        }
        amp *= ROUGHNESS;
        step = half;
    }
    let mean = h.iter().sum::<f64>() / n as f64;
    let peak = h.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max).max(1e-9);
    h.iter().map(|v| (v - mean) / peak).collect()
}

/// Linear interpolation of periodic control points onto `width` columns.
fn resample_periodic(ctrl: &[f64], width: usize) -> Vec<f64> {
    let n = ctrl.len();
    (0..width)
        .map(|x| {
            let t = x as f64 * n as f64 / width as f64;
            let i = t.floor() as usize % n;
            let f = t - t.floor();
            ctrl[i] * (1.0 - f) + ctrl[(i + 1) % n] * f
        })
        .collect()
}

fn render_color(label: u8, layers: usize) -> [u8; 3] {
    if label == 0 {
        return [255, 255, 255];
    }
    let k = (label - 1) as f64;
    let g = (255.0 * (1.0 - (k + 1.0) / layers as f64)).round() as u8;
    [g, g, g]
}

fn natural_color(label: u8, layers: usize) -> [u8; 3] {
    const SKY: [u8; 3] = [60, 120, 220];
    const RAMP: [[f64; 3]; 3] = [[240.0, 240.0, 250.0], [150.0, 120.0, 70.0], [20.0, 25.0, 10.0]];
    if label == 0 {
        return SKY;
    }
    let t = if layers > 1 {
        (label - 1) as f64 / (layers - 1) as f64
    } else {
        0.0
    };
    let pos = t * 2.0;
    let i = (pos.floor() as usize).min(1);
    let f = pos - i as f64;
    let mut c = [0u8; 3];
    for ch in 0..3 {
        c[ch] = (RAMP[i][ch] * (1.0 - f) + RAMP[i + 1][ch] * f).round() as u8;
    }
    c
}

fn paint(label: u8, layers: usize, palette: Palette) -> [u8; 3] {
    match palette {
        Palette::Render => render_color(label, layers),
        Palette::Natural => natural_color(label, layers),
    }
}

/// Visible local summits of every layer, highest first.
fn find_peaks(
    labels: &[u8],
    ridges: &[Vec<f64>],
    width: usize,
    height: usize,
    window: usize,
) -> Vec<(usize, usize)> {
    let mut found = Vec::new();
    for (k, ridge) in ridges.iter().enumerate() {
        let rows: Vec<usize> = ridge
            .iter()
            .map(|&r| (r.round().max(0.0) as usize).min(height - 1))
            .collect();
        for x in 0..width {
            let y = rows[x];
            if labels[y * width + x] != (k + 1) as u8 {
                continue;
            }
            let is_max = (1..=window).all(|d| {
                let l = rows[(x + width - d) % width];
                let r = rows[(x + d) % width];
                y < l && y <= r
            });
            if is_max {
                found.push((x, y));
            }
        }
    }
    found.sort_by_key(|&(x, y)| (y, x));
    found
}

/// Deterministically generates one synthetic case from `cfg.seed`.
pub fn gen_synthetic_case(cfg: &SynthConfig) -> Result<SynthCase, PanoramaError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = expected_width(cfg.q);
    let height = cfg.pano_height;
    let hf = height as f64;

    let ridgelines: Vec<Vec<f64>> = (0..cfg.layers)
        .map(|k| {
            let depth = if cfg.layers > 1 {
                k as f64 / (cfg.layers - 1) as f64
            } else {
                0.5
            };
            let base = hf * (0.28 + 0.32 * depth);
            let amp = hf * rng.random_range(0.10..0.17);
            let ctrl = midpoint_ridge(&mut rng);
            resample_periodic(&ctrl, width)
                .into_iter()
                .map(|v| (base + amp * v).clamp(4.0, hf - 4.0))
                .collect()
        })
        .collect();

    // label 0 is sky, k + 1 is layer k; nearer layers paint over farther ones
    let mut labels = vec![0u8; width * height];
    for (k, ridge) in ridgelines.iter().enumerate() {
        for x in 0..width {
            let top = ridge[x].round() as usize;
            for y in top..height {
                labels[y * width + x] = (k + 1) as u8;
            }
        }
    }
    let pano_pixels = labels
        .iter()
        .map(|&l| paint(l, cfg.layers, Palette::Render))
        .collect();
    let raster = RasterImage::new(width, height, pano_pixels).expect("sized buffer");

    let window = (1.5 * cfg.q).round().max(1.0) as usize;
    let min_sep = (cfg.min_peak_separation * cfg.q).round() as i64;
    let mut peaks: Vec<Peak> = Vec::new();
    for (x, y) in find_peaks(&labels, &ridgelines, width, height, window) {
        if peaks.len() == cfg.peak_count {
            break;
        }
        let far_enough = peaks.iter().all(|p| {
            let d = (p.pano_x - x as i64).rem_euclid(width as i64);
            d.min(width as i64 - d) >= min_sep
        });
        if far_enough {
            peaks.push(Peak {
                name: format!("Peak {}", peaks.len() + 1),
                pano_x: x as i64,
                pano_y: y as i64,
            });
        }
    }

    let photo_width = ((cfg.photo_fov * cfg.q).round() as usize).clamp(1, width);
    let photo_height = cfg.photo_height;
    let dx = rng.random_range(0..width);
    let dy = photo_top(&ridgelines, dx, photo_width, photo_height, height, &mut rng);

    let mut photo = RasterImage::filled(photo_width, photo_height, [0; 3]);
    for y in 0..photo_height {
        for x in 0..photo_width {
            let label = labels[(y + dy) * width + (x + dx) % width];
            photo.set(x, y, paint(label, cfg.layers, cfg.photo_palette));
        }
    }
    add_clutter(&mut photo, cfg.noise_density, &mut rng);

    let truth_alignment =
        Alignment::from_offsets(dx as i64, dy as i64, 1.0, 0.0, cfg.q, photo_width);
    let mut truth_pairs: Vec<PointPair> = peaks
        .iter()
        .filter_map(|p| {
            let px = (p.pano_x - dx as i64).rem_euclid(width as i64);
            let py = p.pano_y - dy as i64;
            (px < photo_width as i64 && (0..photo_height as i64).contains(&py)).then_some(PointPair {
                photo: [px as f64, py as f64],
                pano: [p.pano_x as f64, p.pano_y as f64],
            })
        })
        .collect();
    if truth_pairs.is_empty() {
        let (cx, cy) = (photo_width / 2, photo_height / 2);
        truth_pairs.push(PointPair {
            photo: [cx as f64, cy as f64],
            pano: [((cx + dx) % width) as f64, (cy + dy) as f64],
        });
    }

    Ok(SynthCase {
        panorama: Panorama::new(raster, cfg.q, peaks)?,
        photo,
        truth_alignment,
        truth_pairs,
        fov_deg: photo_width as f64 / cfg.q,
        ridgelines,
        degenerate: photo_width == width,
    })
}

/// Vertical crop offset that keeps the skyline over the photo columns in
/// the upper part of the frame, as in a photo taken of the mountains.
fn photo_top(
    ridges: &[Vec<f64>],
    dx: usize,
    photo_width: usize,
    photo_height: usize,
    height: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let width = ridges[0].len();
    let (mut top, mut bottom) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in 0..photo_width {
        let sky = ridges
            .iter()
            .map(|r| r[(dx + x) % width])
            .fold(f64::INFINITY, f64::min);
        top = top.min(sky);
        bottom = bottom.max(sky);
    }
    let h = photo_height as f64;
    let lo = (bottom - 0.6 * h).ceil().max(0.0) as usize;
    let hi = ((top - 0.1 * h).floor().max(0.0) as usize).min(height - photo_height);
    if lo <= hi {
        rng.random_range(lo..=hi)
    } else {
        hi.min(lo)
    }
}

/// Paints saturated, mostly horizontal foreground objects (fences, roofs,
/// signs) into the lower third until `density` of that band is covered.
fn add_clutter(photo: &mut RasterImage, density: f64, rng: &mut ChaCha8Rng) {
    if density <= 0.0 {
        return;
    }
    let (w, h) = (photo.width(), photo.height());
    let top = h - h / 3;
    let band = w * (h - top);
    if band == 0 {
        return;
    }
    let target = (density * band as f64).ceil() as usize;
    let mut covered = vec![false; band];
    let mut count = 0usize;
    // bounded so a pathological density cannot spin forever
    for _ in 0..band * 4 {
        if count >= target {
            break;
        }
        let bw = rng.random_range(20..=160usize);
        let bh = rng.random_range(2..=8usize);
        let x0 = rng.random_range(0..w) as i64 - bw as i64 / 2;
        let y0 = rng.random_range(top..h) as i64 - bh as i64 / 2;
        let color = [0u8; 3].map(|_| if rng.random::<bool>() { 255 } else { 0 });
        for y in y0..y0 + bh as i64 {
            for x in x0..x0 + bw as i64 {
                if x < 0 || x >= w as i64 || y < top as i64 || y >= h as i64 {
                    continue;
                }
                photo.set(x as usize, y as usize, color);
                let i = (y as usize - top) * w + x as usize;
                if !covered[i] {
                    covered[i] = true;
                    count += 1;
                }
            }
        }
    }
}

/// Writes `panorama.png`, `photo.png`, `peaks.json` and `truth.json`.
pub fn write_case_dir(case: &SynthCase, dir: impl AsRef<Path>) -> Result<(), PanoramaError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    case.panorama.raster.save(dir.join("panorama.png"))?;
    case.photo.save(dir.join("photo.png"))?;
    let peaks = serde_json::to_string_pretty(&case.panorama.peaks)
        .map_err(|e| PanoramaError::MalformedPeaks(e.to_string()))?;
    std::fs::write(dir.join("peaks.json"), peaks)?;
    let truth = CaseTruth {
        ground_truth: GroundTruth {
            pairs: case.truth_pairs.clone(),
            categories: Categories {
                source: Some("Synthetic".into()),
                ..Categories::default()
            },
        },
        q: Some(case.panorama.q),
        fov_deg: Some(case.fov_deg),
        alignment: Some(case.truth_alignment),
        degenerate: case.degenerate,
    };
    let text = serde_json::to_string_pretty(&truth)
        .map_err(|e| PanoramaError::MalformedPeaks(e.to_string()))?;
    std::fs::write(dir.join("truth.json"), text)?;
    Ok(())
}
