use std::path::{Path, PathBuf};

use peaktag::metadata::{compute_scale_factor, estimate_fov, load_sensor_db, match_camera, read_photo_meta};
use peaktag::panorama::{load_panorama, write_case_dir, CaseTruth, Palette};
use peaktag::pipeline::{panorama_edges, run_pipeline, Timings};
use peaktag::{
    detect_edges, evaluate_cases, filter_edges, gen_synthetic_case, tag_all_peaks, Alignment, CameraMatch,
    CaseResult, EvalCase, EvalSummary, Panorama, PeakTag, RasterImage, RunConfig, SynthConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{AlignArgs, EvaluateArgs, FovArgs, PhotoSource, SynthArgs, TagArgs};
use crate::error::CliError;
use crate::overlay;

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FovSource {
    Flag,
    Exif,
    Truth,
}

#[derive(Debug, Clone, Serialize)]
pub struct FovEstimate {
    /// Radians.
    pub fov: f64,
    pub fov_deg: f64,
    pub source: FovSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera_match: Option<CameraMatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub focal_length_mm: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct AlignmentReport {
    pub alignment: Alignment,
    /// Peak positions in original photo pixels.
    pub peak_tags: Vec<PeakTag>,
    /// Radians.
    pub fov: f64,
    pub fov_deg: f64,
    pub fov_source: FovSource,
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera_match: Option<CameraMatch>,
    pub timings_ms: Timings,
}

fn fov_from_degrees(deg: f64, source: FovSource) -> Result<FovEstimate, CliError> {
    if !(deg > 0.0 && deg <= 360.0) {
        return Err(CliError::Usage(format!("field of view must lie in (0, 360] degrees, got {deg}")));
    }
    Ok(FovEstimate {
        fov: deg.to_radians(),
        fov_deg: deg,
        source,
        camera_match: None,
        focal_length_mm: None,
    })
}

/// Field of view from the flag, or from EXIF plus the sensor database.
pub fn resolve_fov(src: &PhotoSource) -> Result<FovEstimate, CliError> {
    if let Some(deg) = src.fov {
        return fov_from_degrees(deg, FovSource::Flag);
    }
    let meta = read_photo_meta(&src.photo)?;
    let sensors = src.sensors.as_ref().ok_or_else(|| {
        CliError::Usage("no --fov given and no --sensors database to derive it from EXIF".into())
    })?;
    let db = load_sensor_db(sensors)?;
    let m = match_camera(&meta, &db)?;
    let fov = estimate_fov(meta.focal_length, m.spec.sensor_width)?;
    Ok(FovEstimate {
        fov,
        fov_deg: fov.to_degrees(),
        source: FovSource::Exif,
        camera_match: Some(m),
        focal_length_mm: Some(meta.focal_length),
    })
}

fn load_photo(path: &Path) -> Result<RasterImage, CliError> {
    Ok(RasterImage::load(path)?)
}

/// Converts tags from the scaled photo frame to original photo pixels.
fn to_photo_frame(tags: Vec<PeakTag>, scale: f64) -> Vec<PeakTag> {
    let back = |v: i64| (v as f64 / scale).round() as i64;
    tags.into_iter()
        .map(|t| PeakTag {
            photo_x: back(t.photo_x),
            photo_y: back(t.photo_y),
            refinement_dx: back(t.refinement_dx),
            refinement_dy: back(t.refinement_dy),
            ..t
        })
        .collect()
}

fn align_loaded(
    photo: &RasterImage,
    panorama: &Panorama,
    fov: FovEstimate,
    cfg: &RunConfig,
    overlay_path: Option<&Path>,
) -> Result<AlignmentReport, CliError> {
    let scale = compute_scale_factor(fov.fov, photo.width(), panorama.raster.width())?;
    let pano_edges = panorama_edges(&panorama.raster, cfg).map_err(peaktag::MatchError::from)?;
    let out = run_pipeline(photo, panorama, Some(&pano_edges), scale, cfg)?;
    if let Some(path) = overlay_path {
        overlay::render(photo, &out.photo_edges, &pano_edges, &out.alignment).save(path)?;
    }
    Ok(AlignmentReport {
        alignment: out.alignment,
        peak_tags: to_photo_frame(out.peak_tags, out.alignment.scale),
        fov: fov.fov,
        fov_deg: fov.fov_deg,
        fov_source: fov.source,
        scale: out.alignment.scale,
        camera_match: fov.camera_match,
        timings_ms: out.timings,
    })
}

pub fn align(args: &AlignArgs, cfg: &RunConfig) -> Result<AlignmentReport, CliError> {
    let fov = resolve_fov(&args.photo)?;
    let photo = load_photo(&args.photo.photo)?;
    let pano = load_panorama(&args.panorama.panorama, &args.panorama.peaks, args.panorama.q)?;
    align_loaded(&photo, &pano, fov, cfg, args.overlay.as_deref())
}

pub fn tag_peaks(args: &TagArgs, cfg: &RunConfig) -> Result<Vec<PeakTag>, CliError> {
    let fov = resolve_fov(&args.photo)?;
    let photo = load_photo(&args.photo.photo)?;
    let pano = load_panorama(&args.panorama.panorama, &args.panorama.peaks, args.panorama.q)?;
    let scale = compute_scale_factor(fov.fov, photo.width(), pano.raster.width())?;
    let w = ((photo.width() as f64 * scale).round() as usize).max(1);
    let h = ((photo.height() as f64 * scale).round() as usize).max(1);
    let photo_edges = filter_edges(
        &detect_edges(&photo.resized(w, h), &cfg.photo_detect()).map_err(peaktag::MatchError::from)?,
        &cfg.photo_filter(),
    );
    let pano_edges = panorama_edges(&pano.raster, cfg).map_err(peaktag::MatchError::from)?;
    let alignment = Alignment::from_offsets(args.dx.rem_euclid(pano.raster.width() as i64), args.dy, scale, 0.0, pano.q, w);
    let tags = tag_all_peaks(&photo_edges, &pano_edges, &pano.peaks, &alignment, &cfg.refine());
    Ok(to_photo_frame(tags, scale))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn find_photo(dir: &Path) -> Option<PathBuf> {
    ["photo.jpg", "photo.jpeg", "photo.png"]
        .iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
}

/// Case subdirectories of `dataset`, sorted by name.
pub fn case_dirs(dataset: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dataset).map_err(|e| CliError::io(dataset, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dataset, e))?.path();
        if path.is_dir() && path.join("truth.json").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn evaluate_one(dir: &Path, args: &EvaluateArgs, cfg: &RunConfig) -> Result<(CaseTruth, f64, Alignment), CliError> {
    let truth: CaseTruth = read_json(&dir.join("truth.json"))?;
    let q = truth.q.unwrap_or(args.q);
    let photo_path = find_photo(dir).ok_or_else(|| CliError::Usage(format!("{}: no photo.jpg/photo.png", dir.display())))?;
    let src = PhotoSource {
        photo: photo_path.clone(),
        sensors: args.sensors.clone(),
        fov: args.fov,
    };
    let fov = match resolve_fov(&src) {
        Ok(f) => f,
        Err(e) => match truth.fov_deg {
            Some(deg) => fov_from_degrees(deg, FovSource::Truth)?,
            None => return Err(e),
        },
    };
    let photo = load_photo(&photo_path)?;
    let pano = load_panorama(dir.join("panorama.png"), dir.join("peaks.json"), q)?;
    let report = align_loaded(&photo, &pano, fov, cfg, None)?;
    Ok((truth, q, report.alignment))
}

pub fn evaluate(args: &EvaluateArgs, cfg: &RunConfig) -> Result<EvalSummary, CliError> {
    let dirs = case_dirs(&args.dataset)?;
    let cases: Vec<EvalCase> = dirs
        .par_iter()
        .map(|dir| {
            let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            match evaluate_one(dir, args, cfg) {
                Ok((truth, q, alignment)) => EvalCase {
                    name,
                    truth: truth.ground_truth,
                    q,
                    result: CaseResult::Aligned(alignment),
                },
                Err(e) => {
                    // keep the truth when it is readable so categories still count
                    let truth = read_json::<CaseTruth>(&dir.join("truth.json"))
                        .map(|t| t.ground_truth)
                        .unwrap_or_default();
                    EvalCase {
                        name,
                        truth,
                        q: args.q,
                        result: CaseResult::Failed(e.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(evaluate_cases(&cases, cfg.threshold)?)
}

pub fn synth(args: &SynthArgs) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    (args.seed..args.seed + args.count)
        .map(|seed| {
            let cfg = SynthConfig {
                seed,
                q: args.q,
                layers: args.layers,
                photo_fov: args.photo_fov,
                noise_density: args.noise,
                peak_count: args.peak_count,
                photo_palette: if args.recolor { Palette::Natural } else { Palette::Render },
                ..SynthConfig::default()
            };
            let case = gen_synthetic_case(&cfg)?;
            let dir = args.out.join(format!("case-{seed:04}"));
            write_case_dir(&case, &dir)?;
            Ok(dir)
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct FovReport {
    #[serde(flatten)]
    pub fov: FovEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_factor: Option<f64>,
}

pub fn fov(args: &FovArgs) -> Result<FovReport, CliError> {
    let fov = resolve_fov(&args.photo)?;
    let scale_factor = match args.panorama_width {
        Some(wr) => {
            let meta_width = peaktag::metadata::read_photo_meta(&args.photo.photo)
                .map(|m| m.width_px as usize)
                .or_else(|_| load_photo(&args.photo.photo).map(|p| p.width()))?;
            Some(compute_scale_factor(fov.fov, meta_width, wr)?)
        }
        None => None,
    };
    Ok(FovReport { fov, scale_factor })
}
