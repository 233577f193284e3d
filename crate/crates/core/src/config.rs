//! Operating parameters of the full pipeline.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edges::{EdgeDetectConfig, FilterConfig};
use crate::evaluation::DEFAULT_THRESHOLD_DEG;
use crate::matching::RobustConfig;
use crate::peaks::RefineConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for {key}")]
    InvalidValue { line: usize, key: String, value: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Photo edge threshold ρ_p.
    pub rho_p: f64,
    /// Panorama edge threshold ρ_r.
    pub rho_r: f64,
    /// Photo filter base b_p.
    pub b_p: f64,
    /// Panorama filter base b_r.
    pub b_r: f64,
    /// Photo filter segment length l_p.
    pub l_p: usize,
    /// Panorama filter segment length l_r.
    pub l_r: usize,
    /// Restart the filter decay at every run of edge pixels instead of
    /// counting down the whole column.
    pub filter_per_run: bool,
    /// Scale sweep half-width k, percent of the base scale.
    pub sweep_pct: f64,
    pub sweep_steps: usize,
    /// Gaussian derivative σ, pixels.
    pub sigma: f64,
    /// Triweight radius r, pixels.
    pub kernel_radius: usize,
    pub max_shift: usize,
    pub robust: bool,
    pub robust_exponent: f64,
    pub robust_penalty: f64,
    pub robust_fit_length: f64,
    pub robust_neighborhood: usize,
    pub robust_cluster_distance: f64,
    pub robust_top_n: usize,
    /// Correct-match threshold, degrees.
    pub threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let robust = RobustConfig::default();
        let refine = RefineConfig::default();
        Self {
            rho_p: EdgeDetectConfig::PHOTO_THRESHOLD,
            rho_r: EdgeDetectConfig::PANORAMA_THRESHOLD,
            b_p: FilterConfig::photo().base,
            b_r: FilterConfig::panorama().base,
            l_p: FilterConfig::photo().max_segment_length,
            l_r: FilterConfig::panorama().max_segment_length,
            filter_per_run: false,
            sweep_pct: 0.0,
            sweep_steps: 5,
            sigma: 1.0,
            kernel_radius: refine.kernel_radius,
            max_shift: refine.max_shift,
            robust: false,
            robust_exponent: robust.exponent,
            robust_penalty: robust.penalty,
            robust_fit_length: robust.fit_length,
            robust_neighborhood: robust.neighborhood_radius,
            robust_cluster_distance: robust.cluster_distance,
            robust_top_n: robust.top_n,
            threshold: DEFAULT_THRESHOLD_DEG,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    pub fn photo_detect(&self) -> EdgeDetectConfig {
        EdgeDetectConfig {
            gaussian_sigma: self.sigma,
            strength_threshold: self.rho_p,
            wrap_columns: false,
        }
    }

    pub fn pano_detect(&self) -> EdgeDetectConfig {
        EdgeDetectConfig {
            gaussian_sigma: self.sigma,
            strength_threshold: self.rho_r,
            wrap_columns: true,
        }
    }

    pub fn photo_filter(&self) -> FilterConfig {
        FilterConfig {
            base: self.b_p,
            max_segment_length: self.l_p,
            cumulative: !self.filter_per_run,
        }
    }

    pub fn pano_filter(&self) -> FilterConfig {
        FilterConfig {
            base: self.b_r,
            max_segment_length: self.l_r,
            cumulative: !self.filter_per_run,
        }
    }

    pub fn refine(&self) -> RefineConfig {
        RefineConfig {
            kernel_radius: self.kernel_radius,
            max_shift: self.max_shift,
        }
    }

    pub fn robust_config(&self) -> RobustConfig {
        RobustConfig {
            exponent: self.robust_exponent,
            penalty: self.robust_penalty,
            fit_length: self.robust_fit_length,
            neighborhood_radius: self.robust_neighborhood,
            cluster_distance: self.robust_cluster_distance,
            top_n: self.robust_top_n,
        }
    }

    /// Sweep half-width as a fraction of the base scale.
    pub fn sweep_fraction(&self) -> f64 {
        self.sweep_pct / 100.0
    }

    /// Sets one field by its key name. Returns `false` for an unknown key
    /// and `Err(())` for an unparsable value.
    #[allow(clippy::result_unit_err)]
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ()> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, ()> {
            v.parse().map_err(|_| ())
        }
        match key {
            "rho_p" => self.rho_p = num(value)?,
            "rho_r" => self.rho_r = num(value)?,
            "b_p" => self.b_p = num(value)?,
            "b_r" => self.b_r = num(value)?,
            "l_p" => self.l_p = num(value)?,
            "l_r" => self.l_r = num(value)?,
            "filter_per_run" => self.filter_per_run = parse_bool(value).ok_or(())?,
            "sweep_pct" | "scale_sweep" => self.sweep_pct = num(value)?,
            "sweep_steps" => self.sweep_steps = num(value)?,
            "sigma" => self.sigma = num(value)?,
            "kernel_radius" => self.kernel_radius = num(value)?,
            "max_shift" => self.max_shift = num(value)?,
            "robust" => self.robust = parse_bool(value).ok_or(())?,
            "robust_exponent" => self.robust_exponent = num(value)?,
            "robust_penalty" => self.robust_penalty = num(value)?,
            "robust_fit_length" => self.robust_fit_length = num(value)?,
            "robust_neighborhood" => self.robust_neighborhood = num(value)?,
            "robust_cluster_distance" => self.robust_cluster_distance = num(value)?,
            "robust_top_n" => self.robust_top_n = num(value)?,
            "threshold" => self.threshold = num(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            match self.set(key, value) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
                Err(()) => {
                    return Err(ConfigError::InvalidValue {
                        line,
                        key: key.to_string(),
                        value: value.to_string(),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_operating_point() {
        let c = RunConfig::default();
        assert_eq!(c.rho_p, 0.3);
        assert_eq!(c.rho_r, 0.2);
        assert_eq!(c.b_p, 0.7);
        assert_eq!(c.b_r, 1.0);
        assert_eq!(c.l_p, 2);
        assert_eq!(c.sweep_pct, 0.0);
        assert_eq!(c.sigma, 1.0);
        assert_eq!(c.kernel_radius, 200);
        assert_eq!(c.threshold, 4.0);
        assert!(!c.robust);
        assert_eq!(c.photo_filter(), FilterConfig::photo());
        assert_eq!(c.pano_filter(), FilterConfig::panorama());
        assert_eq!(c.photo_detect(), EdgeDetectConfig::photo());
        assert_eq!(c.pano_detect(), EdgeDetectConfig::panorama());
        assert_eq!(c.robust_config(), RobustConfig::default());
        assert_eq!(c.refine(), RefineConfig::default());
    }

    #[test]
    fn key_value_text() {
        let mut c = RunConfig::default();
        c.apply_text("# tuned run\nb_p = 0.5\n\nrobust=yes  # second stage\nsweep_pct=5\n")
            .unwrap();
        assert_eq!(c.b_p, 0.5);
        assert!(c.robust);
        assert!((c.sweep_fraction() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn bad_lines_are_reported() {
        let mut c = RunConfig::default();
        assert!(matches!(c.apply_text("b_p"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(
            c.apply_text("\nnope=1"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            c.apply_text("l_p=-2"),
            Err(ConfigError::InvalidValue { line: 1, .. })
        ));
    }
}
