//! Per-peak position refinement.
//!
//! After the global alignment, each named peak is projected onto the photo
//! and both edge maps are windowed around it with a triweight kernel. A
//! local VCC between the two windows then corrects the residual offset that
//! a single global shift cannot explain.

use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftDirection};
use serde::{Deserialize, Serialize};

use crate::edges::EdgeMap;
use crate::fft::{fast_len, fft2d};
use crate::matching::Alignment;

/// A named summit at panorama pixel coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Peak {
    pub name: String,
    #[serde(rename = "x")]
    pub pano_x: i64,
    #[serde(rename = "y")]
    pub pano_y: i64,
}

/// Location of a peak on the photo edge map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTag {
    pub name: String,
    #[serde(rename = "x")]
    pub photo_x: i64,
    #[serde(rename = "y")]
    pub photo_y: i64,
    #[serde(rename = "dx")]
    pub refinement_dx: i64,
    #[serde(rename = "dy")]
    pub refinement_dy: i64,
    pub visible: bool,
    pub confidence: f64,
}

impl PeakTag {
    fn hidden(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            photo_x: 0,
            photo_y: 0,
            refinement_dx: 0,
            refinement_dy: 0,
            visible: false,
            confidence: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    /// Triweight support radius, in pixels.
    pub kernel_radius: usize,
    /// Largest refinement shift accepted, in pixels (Euclidean).
    pub max_shift: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            kernel_radius: 200,
            max_shift: 50,
        }
    }
}

/// Triweight kernel `(1 - (d/r)²)³` on `[0, r]`, zero beyond.
pub fn triweight(d: f64, r: f64) -> f64 {
    if d > r {
        return 0.0;
    }
    let u = d / r;
    let v = 1.0 - u * u;
    v * v * v
}

fn extract(edges: &EdgeMap, center: (i64, i64), r: usize, wrap_columns: bool) -> EdgeMap {
    let size = 2 * r + 1;
    let (w, h) = (edges.width() as i64, edges.height() as i64);
    let mut out = EdgeMap::zeros(size, size);
    for py in 0..size {
        let sy = center.1 + py as i64 - r as i64;
        if sy < 0 || sy >= h {
            continue;
        }
        for px in 0..size {
            let mut sx = center.0 + px as i64 - r as i64;
            if wrap_columns {
                sx = sx.rem_euclid(w);
            } else if sx < 0 || sx >= w {
                continue;
            }
            let (rho, theta) = edges.get(sx as usize, sy as usize);
            if rho == 0.0 {
                continue;
            }
            let ox = px as f64 - r as f64;
            let oy = py as f64 - r as f64;
            let weight = triweight((ox * ox + oy * oy).sqrt(), r as f64);
            out.set(px, py, rho * weight, theta);
        }
    }
    out
}

/// Triweight-weighted `(2r+1)²` window around `center`; pixels outside the
/// map read as zero strength.
pub fn extract_peak_pattern(edges: &EdgeMap, center: (i64, i64), cfg: &RefineConfig) -> EdgeMap {
    extract(edges, center, cfg.kernel_radius, false)
}

/// Like [`extract_peak_pattern`] but columns wrap around, for panoramas.
pub fn extract_peak_pattern_cylindrical(edges: &EdgeMap, center: (i64, i64), cfg: &RefineConfig) -> EdgeMap {
    extract(edges, center, cfg.kernel_radius, true)
}

/// VCC between two equally sized windows for every shift in
/// `[-max_shift, max_shift]²`: `score(s) = Re Σ_u z_a(u)·conj(z_b(u - s))`.
///
/// Returned row-major with side `2·max_shift + 1`.
pub(crate) fn local_vcc(a: &EdgeMap, b: &EdgeMap, max_shift: usize) -> Vec<f64> {
    assert_eq!((a.width(), a.height()), (b.width(), b.height()));
    let (w, h) = (a.width(), a.height());
    let pw = fast_len(w + max_shift);
    let ph = fast_len(h + max_shift);
    let field = |m: &EdgeMap| {
        let mut buf = vec![Complex64::default(); pw * ph];
        for y in 0..h {
            for x in 0..w {
                let (r, t) = m.get(x, y);
                if r > 0.0 {
                    buf[y * pw + x] = Complex64::from_polar(r * r, 2.0 * t);
                }
            }
        }
        buf
    };
    let mut fa = field(a);
    let mut fb = field(b);
    fft2d(&mut fa, ph, pw, FftDirection::Forward);
    fft2d(&mut fb, ph, pw, FftDirection::Forward);
    // Σ_v conj(b(v))·a(v + s)
    fa.par_iter_mut().zip(fb.par_iter()).for_each(|(x, y)| *x *= y.conj());
    fft2d(&mut fa, ph, pw, FftDirection::Inverse);

    let norm = 1.0 / (pw * ph) as f64;
    let m = max_shift as i64;
    let side = 2 * max_shift + 1;
    let mut out = Vec::with_capacity(side * side);
    for sy in -m..=m {
        for sx in -m..=m {
            let iy = sy.rem_euclid(ph as i64) as usize;
            let ix = sx.rem_euclid(pw as i64) as usize;
            out.push(fa[iy * pw + ix].re * norm);
        }
    }
    out
}

/// Projects `peak` through `alignment` and refines its position.
///
/// The photo window is centered at the projected point, the panorama window
/// at the peak itself. The shift maximizing the local VCC, restricted to
/// `|s| ≤ max_shift` and to positions inside the photo, is the refinement.
/// Confidence is that maximum divided by the photo window's self-score.
pub fn refine_peak(
    photo_edges: &EdgeMap,
    pano_edges: &EdgeMap,
    peak: &Peak,
    alignment: &Alignment,
    cfg: &RefineConfig,
) -> PeakTag {
    let wr = pano_edges.width() as i64;
    let (wp, hp) = (photo_edges.width() as i64, photo_edges.height() as i64);
    if wr == 0 {
        return PeakTag::hidden(&peak.name);
    }
    let px = (peak.pano_x - alignment.dx).rem_euclid(wr);
    let py = peak.pano_y - alignment.dy;
    if px >= wp || py < 0 || py >= hp {
        return PeakTag::hidden(&peak.name);
    }

    let photo_pat = extract_peak_pattern(photo_edges, (px, py), cfg);
    let pano_pat = extract_peak_pattern_cylindrical(pano_edges, (peak.pano_x, peak.pano_y), cfg);
    let self_score: f64 = photo_pat.strength().iter().map(|r| r.powi(4)).sum();

    let mut best = (0i64, 0i64);
    let mut confidence = 0.0;
    if !(photo_pat.is_all_zero() || pano_pat.is_all_zero()) {
        let m = cfg.max_shift.min(cfg.kernel_radius) as i64;
        let scores = local_vcc(&photo_pat, &pano_pat, m as usize);
        let side = 2 * m + 1;
        let mut best_score = f64::NEG_INFINITY;
        let mut best_norm = i64::MAX;
        for sy in -m..=m {
            for sx in -m..=m {
                let norm = sx * sx + sy * sy;
                if norm > m * m {
                    continue;
                }
                let (tx, ty) = (px + sx, py + sy);
                if tx < 0 || tx >= wp || ty < 0 || ty >= hp {
                    continue;
                }
                let s = scores[((sy + m) * side + sx + m) as usize];
                // ties prefer the smaller correction
                if s > best_score || (s == best_score && norm < best_norm) {
                    best_score = s;
                    best_norm = norm;
                    best = (sx, sy);
                }
            }
        }
        if self_score > 0.0 {
            confidence = best_score / self_score;
        }
    }

    PeakTag {
        name: peak.name.clone(),
        photo_x: px + best.0,
        photo_y: py + best.1,
        refinement_dx: best.0,
        refinement_dy: best.1,
        visible: true,
        confidence,
    }
}

/// Refines every peak independently; output order matches input order.
pub fn tag_all_peaks(
    photo_edges: &EdgeMap,
    pano_edges: &EdgeMap,
    peaks: &[Peak],
    alignment: &Alignment,
    cfg: &RefineConfig,
) -> Vec<PeakTag> {
    peaks
        .par_iter()
        .map(|p| refine_peak(photo_edges, pano_edges, p, alignment, cfg))
        .collect()
}
