use peaktag::metadata::MetadataError;
use peaktag::{ConfigError, EvalError, MatchError, PanoramaError, RasterError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error(transparent)]
    Panorama(#[from] PanoramaError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

/// Machine-readable error printed on stdout with `--json`.
#[derive(Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Stable name and exit code of the error kind.
    pub fn kind(&self) -> (&'static str, i32) {
        match self {
            Self::Usage(_) => ("Usage", 2),
            Self::Io { .. } => ("Io", 3),
            Self::Json { .. } => ("MalformedJson", 4),
            Self::Config(_) => ("Config", 5),
            Self::Raster(_) => ("InvalidImage", 6),
            Self::Metadata(e) => match e {
                // both mean the FOV must be supplied with --fov, so they share a code
                MetadataError::MissingExif => ("MissingExif", 11),
                MetadataError::MissingFocalLength => ("MissingFocalLength", 11),
                MetadataError::LowConfidence { .. } => ("LowConfidence", 12),
                MetadataError::InvalidImage(_) => ("InvalidImage", 6),
                MetadataError::EmptyDatabase | MetadataError::SensorDb(_) => ("SensorDatabase", 13),
                MetadataError::NonPositiveInput(_) => ("NonPositiveInput", 14),
                MetadataError::Io(_) => ("Io", 3),
            },
            Self::Panorama(e) => match e {
                PanoramaError::WidthMismatch { .. } => ("WidthMismatch", 20),
                PanoramaError::MalformedPeaks(_) => ("MalformedPeaks", 21),
                PanoramaError::InvalidResolution(_) => ("InvalidResolution", 22),
                PanoramaError::Raster(_) => ("InvalidImage", 6),
                PanoramaError::Io(_) => ("Io", 3),
            },
            Self::Match(e) => match e {
                MatchError::PhotoWiderThanPanorama { .. } => ("PhotoWiderThanPanorama", 30),
                MatchError::EmptyGrid => ("EmptyGrid", 31),
                MatchError::NoCandidates => ("NoCandidates", 32),
                MatchError::InvalidScale(_) => ("InvalidScale", 33),
                MatchError::Edge(_) => ("EdgeDetection", 34),
            },
            Self::Eval(e) => match e {
                EvalError::EmptyDataset => ("EmptyDataset", 40),
                EvalError::NoPairs => ("NoPairs", 41),
                EvalError::InvalidResolution(_) | EvalError::InvalidThreshold(_) => ("InvalidEvaluation", 42),
            },
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, exit_code) = self.kind();
        ErrorReport {
            kind,
            message: self.to_string(),
            exit_code,
        }
    }
}
