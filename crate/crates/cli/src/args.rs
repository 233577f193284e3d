use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use peaktag::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "peaktag", version, about = "Estimate the direction of a mountain photo and tag its peaks")]
pub struct Cli {
    /// key=value file of operating parameters (flags take precedence)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON on stdout
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub params: ParamFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align a photo with a panorama and tag its peaks
    Align(AlignArgs),
    /// Tag peaks for a known alignment
    TagPeaks(TagArgs),
    /// Align every case of a dataset directory and summarize the errors
    Evaluate(EvaluateArgs),
    /// Write seeded synthetic cases
    Synth(SynthArgs),
    /// Field of view and scale factor from EXIF and the sensor database
    Fov(FovArgs),
}

#[derive(Debug, Args)]
pub struct PhotoSource {
    #[arg(long, value_name = "IMAGE")]
    pub photo: PathBuf,
    /// Sensor database CSV (make,model,sensor_width_mm)
    #[arg(long, value_name = "CSV")]
    pub sensors: Option<PathBuf>,
    /// Horizontal field of view in degrees; skips EXIF
    #[arg(long, value_name = "DEG")]
    pub fov: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PanoramaSource {
    #[arg(long, value_name = "PNG")]
    pub panorama: PathBuf,
    /// Peak list JSON ([{name, x, y}])
    #[arg(long, value_name = "JSON")]
    pub peaks: PathBuf,
    /// Panorama resolution in pixels per degree
    #[arg(long, default_value_t = 20.0)]
    pub q: f64,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub photo: PhotoSource,
    #[command(flatten)]
    pub panorama: PanoramaSource,
    /// Write an overlay PNG: photo edges blue, panorama edges red
    #[arg(long, value_name = "PNG")]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[command(flatten)]
    pub photo: PhotoSource,
    #[command(flatten)]
    pub panorama: PanoramaSource,
    /// Horizontal offset of the scaled photo on the panorama, pixels
    #[arg(long, allow_hyphen_values = true)]
    pub dx: i64,
    /// Vertical offset of the scaled photo on the panorama, pixels
    #[arg(long, allow_hyphen_values = true)]
    pub dy: i64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of case subdirectories
    pub dataset: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub sensors: Option<PathBuf>,
    /// Field of view for every photo, degrees
    #[arg(long, value_name = "DEG")]
    pub fov: Option<f64>,
    /// Panorama resolution when truth.json does not give one
    #[arg(long, default_value_t = 20.0)]
    pub q: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value_t = 20.0)]
    pub q: f64,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    /// Photo field of view, degrees
    #[arg(long = "photo-fov", default_value_t = 40.0)]
    pub photo_fov: f64,
    /// Fraction of the photo's lower third covered by clutter
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long = "peak-count", default_value_t = 6)]
    pub peak_count: usize,
    /// Paint the photo with natural colors instead of the render palette
    #[arg(long)]
    pub recolor: bool,
}

#[derive(Debug, Args)]
pub struct FovArgs {
    #[command(flatten)]
    pub photo: PhotoSource,
    /// Panorama width in pixels, to also report the scale factor
    #[arg(long, value_name = "PX")]
    pub panorama_width: Option<usize>,
}

/// Per-run overrides of every operating parameter.
#[derive(Debug, Default, Args)]
pub struct ParamFlags {
    /// Photo edge strength threshold
    #[arg(long, global = true)]
    pub rho_p: Option<f64>,
    /// Panorama edge strength threshold
    #[arg(long, global = true)]
    pub rho_r: Option<f64>,
    /// Photo filter base
    #[arg(long, global = true)]
    pub b_p: Option<f64>,
    /// Panorama filter base
    #[arg(long, global = true)]
    pub b_r: Option<f64>,
    /// Photo filter segment length
    #[arg(long, global = true)]
    pub l_p: Option<usize>,
    /// Panorama filter segment length
    #[arg(long, global = true)]
    pub l_r: Option<usize>,
    /// Restart the filter decay at every edge run
    #[arg(long, global = true)]
    pub filter_per_run: bool,
    /// Scale sweep half-width, percent of the estimated scale
    #[arg(long, global = true, value_name = "PCT")]
    pub scale_sweep: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    pub sweep_steps: Option<usize>,
    /// Gaussian derivative sigma, pixels
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Triweight radius for peak refinement, pixels
    #[arg(long, global = true)]
    pub kernel_radius: Option<usize>,
    /// Largest peak refinement shift, pixels
    #[arg(long, global = true)]
    pub max_shift: Option<usize>,
    /// Re-score the best candidates with the robust silhouette metric
    #[arg(long, global = true)]
    pub robust: bool,
    #[arg(long, global = true)]
    pub robust_exponent: Option<f64>,
    #[arg(long, global = true)]
    pub robust_penalty: Option<f64>,
    #[arg(long, global = true)]
    pub robust_fit_length: Option<f64>,
    #[arg(long, global = true)]
    pub robust_neighborhood: Option<usize>,
    #[arg(long, global = true)]
    pub robust_cluster_distance: Option<f64>,
    #[arg(long, global = true)]
    pub robust_top_n: Option<usize>,
    /// Correct-match threshold, degrees
    #[arg(long, global = true, value_name = "DEG")]
    pub threshold: Option<f64>,
}

impl ParamFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(
            rho_p => rho_p,
            rho_r => rho_r,
            b_p => b_p,
            b_r => b_r,
            l_p => l_p,
            l_r => l_r,
            scale_sweep => sweep_pct,
            sweep_steps => sweep_steps,
            sigma => sigma,
            kernel_radius => kernel_radius,
            max_shift => max_shift,
            robust_exponent => robust_exponent,
            robust_penalty => robust_penalty,
            robust_fit_length => robust_fit_length,
            robust_neighborhood => robust_neighborhood,
            robust_cluster_distance => robust_cluster_distance,
            robust_top_n => robust_top_n,
            threshold => threshold,
        );
        if self.filter_per_run {
            cfg.filter_per_run = true;
        }
        if self.robust {
            cfg.robust = true;
        }
    }
}
