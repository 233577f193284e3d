//! Direction estimation and peak tagging for mountain photographs.
//!
//! A photo is matched against a 360° cylindrical render of the terrain
//! around the shot location. Both images are reduced to edge maps, the
//! photo is scaled so its pixels span the same angle as the panorama's, and
//! the horizontal offset maximizing the vector cross-correlation of the two
//! edge maps gives the camera azimuth. Named peaks from the render are then
//! projected into the photo and refined locally.

pub mod config;
pub mod edges;
pub mod evaluation;
mod fft;
pub mod matching;
pub mod metadata;
pub mod panorama;
pub mod peaks;
pub mod pipeline;
pub mod raster;

pub use config::{ConfigError, RunConfig};
pub use edges::{detect_edges, filter_edges, EdgeDetectConfig, EdgeError, EdgeMap, FilterConfig};
pub use evaluation::{
    alignment_error, evaluate_cases, evaluate_dataset, CaseResult, Categories, EvalCase, EvalError,
    EvalSummary, GroundTruth, PointPair,
};
pub use matching::{
    best_alignment, compute_vcc_grid, edge_similarity, vcc_brute_force, Alignment, MatchError,
    RobustConfig, ScoreGrid,
};
pub use metadata::{
    compute_scale_factor, estimate_fov, match_camera, normalize_camera_name, parse_photo_meta,
    text_similarity, CameraMatch, CameraSpec, FovScale, MetadataError, PhotoMeta,
};
pub use panorama::{gen_synthetic_case, load_panorama, Panorama, PanoramaError, SynthCase, SynthConfig};
pub use peaks::{tag_all_peaks, triweight, Peak, PeakTag, RefineConfig};
pub use raster::{RasterError, RasterImage};
