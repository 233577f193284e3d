//! Edge strength/direction maps and the column-wise decay filter.
//!
//! Detection runs a Gaussian-derivative operator on every color channel and
//! merges the channels through the color structure tensor, so a boundary
//! between two regions of equal luminance but different hue still produces
//! an edge. Directions are stored as the edge *tangent* angle, which is what
//! the correlation stage compares.

use std::f64::consts::{PI, TAU};

use image::GrayImage;
use rayon::prelude::*;
use thiserror::Error;

use crate::raster::RasterImage;

#[derive(Debug, Error, PartialEq)]
pub enum EdgeError {
    #[error("cannot detect edges on an empty image")]
    EmptyImage,
    #[error("invalid edge detector configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("strength/direction buffers do not match {width}x{height}")]
    SizeMismatch { width: usize, height: usize },
}

/// Per-pixel edge strength in `[0, 1]` and tangent direction in `[0, 2π)`.
///
/// Direction is only meaningful where strength is positive and is stored as
/// zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    strength: Vec<f64>,
    direction: Vec<f64>,
}

impl EdgeMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            strength: vec![0.0; width * height],
            direction: vec![0.0; width * height],
        }
    }

    /// Builds a map from raw buffers, clamping strength into `[0, 1]`,
    /// wrapping direction into `[0, 2π)` and zeroing directions of
    /// zero-strength pixels.
    pub fn new(
        width: usize,
        height: usize,
        mut strength: Vec<f64>,
        mut direction: Vec<f64>,
    ) -> Result<Self, EdgeError> {
        if strength.len() != width * height || direction.len() != width * height {
            return Err(EdgeError::SizeMismatch { width, height });
        }
        for (rho, theta) in strength.iter_mut().zip(direction.iter_mut()) {
            *rho = if rho.is_finite() { rho.clamp(0.0, 1.0) } else { 0.0 };
            *theta = if *rho > 0.0 { wrap_angle(*theta) } else { 0.0 };
        }
        Ok(Self {
            width,
            height,
            strength,
            direction,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn strength(&self) -> &[f64] {
        &self.strength
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.strength[i], self.direction[i])
    }

    /// Sets one pixel; the same normalization as [`EdgeMap::new`] applies.
    pub fn set(&mut self, x: usize, y: usize, rho: f64, theta: f64) {
        let i = y * self.width + x;
        let rho = rho.clamp(0.0, 1.0);
        self.strength[i] = rho;
        self.direction[i] = if rho > 0.0 { wrap_angle(theta) } else { 0.0 };
    }

    pub fn count_nonzero(&self) -> usize {
        self.strength.iter().filter(|&&r| r > 0.0).count()
    }

    pub fn is_all_zero(&self) -> bool {
        self.strength.iter().all(|&r| r == 0.0)
    }

    /// Multiplies every strength by `factor`, clamping to `[0, 1]`.
    pub fn scaled(&self, factor: f64) -> Self {
        let strength = self.strength.iter().map(|r| r * factor).collect();
        Self::new(self.width, self.height, strength, self.direction.clone())
            .expect("dimensions unchanged")
    }

    /// Copies the columns `[x0, x0 + width)`.
    pub fn crop_columns(&self, x0: usize, width: usize) -> Self {
        let mut out = Self::zeros(width, self.height);
        for y in 0..self.height {
            for x in 0..width {
                let (r, t) = self.get(x0 + x, y);
                let i = y * width + x;
                out.strength[i] = r;
                out.direction[i] = t;
            }
        }
        out
    }

    /// Strength as an 8-bit grayscale image, for inspection.
    pub fn to_gray_image(&self) -> GrayImage {
        let raw = self
            .strength
            .iter()
            .map(|r| (r * 255.0).round() as u8)
            .collect();
        GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDetectConfig {
    /// Standard deviation of the Gaussian derivative kernel, in pixels.
    pub gaussian_sigma: f64,
    /// Pixels with normalized strength below this are discarded.
    pub strength_threshold: f64,
    /// Treat the left and right borders as adjacent (cylindrical panoramas).
    pub wrap_columns: bool,
}

impl EdgeDetectConfig {
    pub const PHOTO_THRESHOLD: f64 = 0.3;
    pub const PANORAMA_THRESHOLD: f64 = 0.2;

    pub fn photo() -> Self {
        Self {
            gaussian_sigma: 1.0,
            strength_threshold: Self::PHOTO_THRESHOLD,
            wrap_columns: false,
        }
    }

    pub fn panorama() -> Self {
        Self {
            gaussian_sigma: 1.0,
            strength_threshold: Self::PANORAMA_THRESHOLD,
            wrap_columns: true,
        }
    }

    fn validate(&self) -> Result<(), EdgeError> {
        if !(self.gaussian_sigma > 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(EdgeError::InvalidConfig("gaussian_sigma must be positive"));
        }
        if !(0.0..=1.0).contains(&self.strength_threshold) {
            return Err(EdgeError::InvalidConfig(
                "strength_threshold must lie in [0, 1]",
            ));
        }
        Ok(())
    }
}

impl Default for EdgeDetectConfig {
    fn default() -> Self {
        Self::photo()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Decay base applied per subsegment; 1.0 disables filtering.
    pub base: f64,
    /// Longest run of consecutive edge pixels that shares one decay factor.
    pub max_segment_length: usize,
    /// Count subsegments down the whole column (true) or restart the count
    /// at every zero-separated run (false).
    pub cumulative: bool,
}

impl FilterConfig {
    pub fn photo() -> Self {
        Self {
            base: 0.7,
            max_segment_length: 2,
            cumulative: true,
        }
    }

    pub fn panorama() -> Self {
        Self {
            base: 1.0,
            max_segment_length: 2,
            cumulative: true,
        }
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::photo()
    }
}

/// Sampled Gaussian (sums to 1) and its derivative (unit response to a ramp),
/// both indexed from `-radius` to `radius`.
fn kernels(sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    let gauss: Vec<f64> = taps.iter().map(|v| v / sum).collect();
    let moment: f64 = (-radius..=radius)
        .zip(&taps)
        .map(|(i, v)| (i * i) as f64 * v)
        .sum();
    let deriv = (-radius..=radius)
        .zip(&taps)
        .map(|(i, v)| i as f64 * v / moment)
        .collect();
    (gauss, deriv)
}

/// Largest gradient magnitude an 8-bit RGB image can produce with these
/// kernels: every channel saturated on the positive lobe of the directional
/// derivative, maximized over directions.
fn max_gradient_magnitude(gauss: &[f64], deriv: &[f64]) -> f64 {
    const ANGLES: usize = 720;
    let mut best = 0.0f64;
    for a in 0..ANGLES {
        let phi = PI * a as f64 / ANGLES as f64;
        let (ux, uy) = (phi.cos(), phi.sin());
        let mut mass = 0.0;
        for (j, gy) in gauss.iter().enumerate() {
            for (i, gx) in gauss.iter().enumerate() {
                let k = ux * deriv[i] * gy + uy * gx * deriv[j];
                if k > 0.0 {
                    mass += k;
                }
            }
        }
        best = best.max(mass);
    }
    3f64.sqrt() * 255.0 * best
}

#[inline]
fn clamp_index(i: i64, len: usize, wrap: bool) -> usize {
    if wrap {
        i.rem_euclid(len as i64) as usize
    } else {
        i.clamp(0, len as i64 - 1) as usize
    }
}

/// Correlation with a kernel that is symmetric (`odd == false`) or
/// antisymmetric (`odd == true`) about its center. Taps are paired so a
/// constant signal gives an exact zero derivative.
#[inline]
fn paired_taps(kernel: &[f64], odd: bool, fetch: impl Fn(i64) -> f64) -> f64 {
    let r = (kernel.len() / 2) as i64;
    let mut acc = if odd { 0.0 } else { kernel[r as usize] * fetch(0) };
    for k in 1..=r {
        let kv = kernel[(r + k) as usize];
        acc += if odd {
            kv * (fetch(k) - fetch(-k))
        } else {
            kv * (fetch(k) + fetch(-k))
        };
    }
    acc
}

fn correlate_rows(src: &[f64], w: usize, kernel: &[f64], odd: bool, wrap: bool) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(w)
        .zip(src.par_chunks(w))
        .for_each(|(dst, row)| {
            for (x, d) in dst.iter_mut().enumerate() {
                *d = paired_taps(kernel, odd, |k| row[clamp_index(x as i64 + k, w, wrap)]);
            }
        });
    out
}

fn correlate_cols(src: &[f64], w: usize, h: usize, kernel: &[f64], odd: bool) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        for (x, d) in dst.iter_mut().enumerate() {
            *d = paired_taps(kernel, odd, |k| src[clamp_index(y as i64 + k, h, false) * w + x]);
        }
    });
    out
}

/// Computes the edge map of a color image.
///
/// Strength is the square root of the largest eigenvalue of the color
/// structure tensor, divided by the largest value any 8-bit image could
/// produce, so thresholds mean the same thing across images.
pub fn detect_edges(image: &RasterImage, config: &EdgeDetectConfig) -> Result<EdgeMap, EdgeError> {
    if image.is_empty() {
        return Err(EdgeError::EmptyImage);
    }
    config.validate()?;
    let (w, h) = (image.width(), image.height());
    let (gauss, deriv) = kernels(config.gaussian_sigma);
    let norm = max_gradient_magnitude(&gauss, &deriv);

    let mut jxx = vec![0.0; w * h];
    let mut jyy = vec![0.0; w * h];
    let mut jxy = vec![0.0; w * h];
    for c in 0..3 {
        let channel: Vec<f64> = image.pixels().iter().map(|p| p[c] as f64).collect();
        let gx = correlate_cols(
            &correlate_rows(&channel, w, &deriv, true, config.wrap_columns),
            w,
            h,
            &gauss,
            false,
        );
        let gy = correlate_cols(
            &correlate_rows(&channel, w, &gauss, false, config.wrap_columns),
            w,
            h,
            &deriv,
            true,
        );
        for i in 0..w * h {
            jxx[i] += gx[i] * gx[i];
            jyy[i] += gy[i] * gy[i];
            jxy[i] += gx[i] * gy[i];
        }
    }

    let mut strength = vec![0.0; w * h];
    let mut direction = vec![0.0; w * h];
    for i in 0..w * h {
        let (a, b, c) = (jxx[i], jyy[i], jxy[i]);
        let lambda = 0.5 * (a + b + ((a - b) * (a - b) + 4.0 * c * c).sqrt());
        let rho = (lambda.max(0.0).sqrt() / norm).min(1.0);
        if rho > 0.0 && rho >= config.strength_threshold {
            let gradient = 0.5 * (2.0 * c).atan2(a - b);
            strength[i] = rho;
            direction[i] = wrap_angle(gradient + PI / 2.0);
        }
    }
    EdgeMap::new(w, h, strength, direction)
}

/// Attenuates edges column by column so that higher edges dominate.
///
/// Each column's nonzero runs are cut into subsegments of at most
/// `max_segment_length` pixels; the i-th subsegment from the top is scaled
/// by `base^(i-1)`.
pub fn filter_edges(edges: &EdgeMap, config: &FilterConfig) -> EdgeMap {
    let mut out = edges.clone();
    if config.base == 1.0 {
        return out;
    }
    let n = config.max_segment_length.max(1);
    let (w, h) = (edges.width, edges.height);
    for x in 0..w {
        // index of the current subsegment (0-based) and its fill so far
        let mut segment: i32 = -1;
        let mut fill = 0usize;
        let mut in_run = false;
        for y in 0..h {
            let i = y * w + x;
            if edges.strength[i] == 0.0 {
                in_run = false;
                continue;
            }
            if !in_run {
                in_run = true;
                segment = if config.cumulative { segment + 1 } else { 0 };
                fill = 0;
            } else if fill == n {
                segment += 1;
                fill = 0;
            }
            fill += 1;
            out.strength[i] = edges.strength[i] * config.base.powi(segment);
        }
    }
    out
}
