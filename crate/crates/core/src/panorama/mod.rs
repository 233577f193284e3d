//! Cylindrical panorama renders and their peak lists.

mod synth;

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::peaks::Peak;
use crate::raster::{RasterError, RasterImage};

pub use synth::{gen_synthetic_case, write_case_dir, CaseTruth, Palette, SynthCase, SynthConfig};

#[derive(Debug, Error)]
pub enum PanoramaError {
    #[error("panorama is {width} px wide; {q} px/deg needs {expected}")]
    WidthMismatch { width: usize, q: f64, expected: usize },
    #[error("angular resolution must be positive, got {0}")]
    InvalidResolution(f64),
    #[error("malformed peak list: {0}")]
    MalformedPeaks(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// 360° cylindrical render at `q` pixels per degree, with named peaks.
#[derive(Debug, Clone)]
pub struct Panorama {
    pub raster: RasterImage,
    pub q: f64,
    pub peaks: Vec<Peak>,
}

/// Width a full-circle panorama must have at `q` pixels per degree.
pub fn expected_width(q: f64) -> usize {
    (360.0 * q).round() as usize
}

impl Panorama {
    pub fn new(raster: RasterImage, q: f64, peaks: Vec<Peak>) -> Result<Self, PanoramaError> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(PanoramaError::InvalidResolution(q));
        }
        let expected = expected_width(q);
        if raster.width() != expected {
            return Err(PanoramaError::WidthMismatch {
                width: raster.width(),
                q,
                expected,
            });
        }
        for p in &peaks {
            if p.pano_x < 0
                || p.pano_y < 0
                || p.pano_x >= raster.width() as i64
                || p.pano_y >= raster.height() as i64
            {
                return Err(PanoramaError::MalformedPeaks(format!(
                    "peak {:?} at ({}, {}) lies outside the {}x{} panorama",
                    p.name,
                    p.pano_x,
                    p.pano_y,
                    raster.width(),
                    raster.height()
                )));
            }
        }
        Ok(Self { raster, q, peaks })
    }
}

#[derive(Deserialize)]
struct RawPeak {
    name: String,
    x: f64,
    y: f64,
}

/// Parses a JSON array of `{name, x, y}`. An empty (or whitespace-only)
/// document is an empty list.
pub fn parse_peaks(text: &str) -> Result<Vec<Peak>, PanoramaError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let raw: Vec<RawPeak> =
        serde_json::from_str(text).map_err(|e| PanoramaError::MalformedPeaks(e.to_string()))?;
    raw.into_iter()
        .map(|p| {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(PanoramaError::MalformedPeaks(format!(
                    "peak {:?} has non-finite coordinates",
                    p.name
                )));
            }
            Ok(Peak {
                name: p.name,
                pano_x: p.x.round() as i64,
                pano_y: p.y.round() as i64,
            })
        })
        .collect()
}

/// Loads a panorama image and its peak list.
pub fn load_panorama(
    image_path: impl AsRef<Path>,
    peaks_path: impl AsRef<Path>,
    q: f64,
) -> Result<Panorama, PanoramaError> {
    let raster = RasterImage::load(image_path)?;
    let peaks = parse_peaks(&std::fs::read_to_string(peaks_path)?)?;
    Panorama::new(raster, q, peaks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_case(dir: &Path, width: u32, peaks: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        let img = image::RgbImage::new(width, 10);
        let img_path = dir.join("pano.png");
        img.save(&img_path).unwrap();
        let peaks_path = dir.join("peaks.json");
        std::fs::write(&peaks_path, peaks).unwrap();
        (img_path, peaks_path)
    }

    #[test]
    fn accepts_consistent_width() {
        let dir = tempfile::tempdir().unwrap();
        let (img, peaks) = write_case(dir.path(), 7200, r#"[{"name":"Matterhorn","x":120,"y":4}]"#);
        let p = load_panorama(img, peaks, 20.0).unwrap();
        assert_eq!(p.raster.width(), 7200);
        assert_eq!(p.peaks[0].name, "Matterhorn");
    }

    #[test]
    fn rejects_inconsistent_width() {
        let dir = tempfile::tempdir().unwrap();
        let (img, peaks) = write_case(dir.path(), 7200, "[]");
        assert!(matches!(
            load_panorama(img, peaks, 10.0),
            Err(PanoramaError::WidthMismatch { expected: 3600, .. })
        ));
    }

    #[test]
    fn empty_peaks_file_means_no_peaks() {
        let dir = tempfile::tempdir().unwrap();
        let (img, peaks) = write_case(dir.path(), 360, "");
        assert!(load_panorama(img, peaks, 1.0).unwrap().peaks.is_empty());
    }

    #[test]
    fn malformed_or_out_of_bounds_peaks() {
        assert!(matches!(parse_peaks("{"), Err(PanoramaError::MalformedPeaks(_))));
        assert!(matches!(
            parse_peaks(r#"[{"name":"x"}]"#),
            Err(PanoramaError::MalformedPeaks(_))
        ));
        let peaks = parse_peaks(r#"[{"name":"a","x":400,"y":1}]"#).unwrap();
        assert!(matches!(
            Panorama::new(RasterImage::filled(360, 5, [0; 3]), 1.0, peaks),
            Err(PanoramaError::MalformedPeaks(_))
        ));
    }
}
