//! Alignment error against tagged point pairs and dataset-level summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::Alignment;

/// Matches with an error strictly below this many degrees count as correct.
pub const DEFAULT_THRESHOLD_DEG: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("ground truth has no point pairs")]
    NoPairs,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("angular resolution must be positive, got {0}")]
    InvalidResolution(f64),
    #[error("threshold must be a non-negative number, got {0}")]
    InvalidThreshold(f64),
}

/// A landmark tagged in both the original photo and the panorama.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub photo: [f64; 2],
    pub pano: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Categories {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_presence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skyline_composition: Option<String>,
}

impl Categories {
    fn entries(&self) -> [(&'static str, Option<&str>); 3] {
        [
            ("source", self.source.as_deref()),
            ("cloud_presence", self.cloud_presence.as_deref()),
            ("skyline_composition", self.skyline_composition.as_deref()),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub pairs: Vec<PointPair>,
    #[serde(default)]
    pub categories: Categories,
}

/// Signed horizontal difference folded to the shortest way around a
/// cylinder of `width` pixels.
fn wrap_signed(d: f64, width: f64) -> f64 {
    let r = d.rem_euclid(width);
    if r > width / 2.0 {
        r - width
    } else {
        r
    }
}

/// `√((Σdx)² + (Σdy)²)/(N·q)` in degrees.
///
/// Each photo point is projected into the panorama as
/// `(x·scale + dx, y·scale + dy)`; offsets keep their sign, so opposite
/// errors cancel.
pub fn alignment_error(truth: &GroundTruth, alignment: &Alignment, q: f64) -> Result<f64, EvalError> {
    if truth.pairs.is_empty() {
        return Err(EvalError::NoPairs);
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(EvalError::InvalidResolution(q));
    }
    let width = (360.0 * q).round();
    let (mut sx, mut sy) = (0.0, 0.0);
    for p in &truth.pairs {
        let px = p.photo[0] * alignment.scale + alignment.dx as f64;
        let py = p.photo[1] * alignment.scale + alignment.dy as f64;
        sx += wrap_signed(px - p.pano[0], width);
        sy += py - p.pano[1];
    }
    Ok(sx.hypot(sy) / (truth.pairs.len() as f64 * q))
}

/// What the pipeline produced for one case.
#[derive(Debug, Clone)]
pub enum CaseResult {
    Aligned(Alignment),
    /// The pipeline failed; the case counts as incorrect.
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct EvalCase {
    pub name: String,
    pub truth: GroundTruth,
    pub q: f64,
    pub result: CaseResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_deg: Option<f64>,
    pub correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryRate {
    pub photos: usize,
    pub correct: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub threshold: f64,
    pub correct_rate: f64,
    /// Errors of the cases that produced an alignment, in input order.
    pub per_photo_errors: Vec<f64>,
    pub cases: Vec<CaseReport>,
    /// `histogram[i]` counts errors in `[i°, i+1°)`.
    pub histogram: Vec<usize>,
    /// Cases without an alignment; together with `histogram` this sums to
    /// the number of cases.
    pub unaligned: usize,
    /// category name → option → rate.
    pub per_category_rates: BTreeMap<String, BTreeMap<String, CategoryRate>>,
}

impl EvalSummary {
    /// Plain-text table of per-category rates, then the overall rate.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<22} {:<32} {:>6} {:>8} {:>7}", "category", "option", "photos", "correct", "rate");
        for (cat, options) in &self.per_category_rates {
            for (opt, r) in options {
                let _ = writeln!(
                    s,
                    "{:<22} {:<32} {:>6} {:>8} {:>6.1}%",
                    cat,
                    opt,
                    r.photos,
                    r.correct,
                    100.0 * r.rate
                );
            }
        }
        let correct = self.cases.iter().filter(|c| c.correct).count();
        let _ = writeln!(
            s,
            "{:<22} {:<32} {:>6} {:>8} {:>6.1}%",
            "overall",
            format!("error < {}°", self.threshold),
            self.cases.len(),
            correct,
            100.0 * self.correct_rate
        );
        s
    }
}

fn check_threshold(threshold: f64) -> Result<(), EvalError> {
    if threshold >= 0.0 && threshold.is_finite() {
        Ok(())
    } else {
        Err(EvalError::InvalidThreshold(threshold))
    }
}

/// Aggregates `(truth, alignment, q)` triples.
pub fn evaluate_dataset(
    cases: &[(GroundTruth, Alignment, f64)],
    threshold: f64,
) -> Result<EvalSummary, EvalError> {
    let cases: Vec<EvalCase> = cases
        .iter()
        .enumerate()
        .map(|(i, (truth, alignment, q))| EvalCase {
            name: format!("case {i}"),
            truth: truth.clone(),
            q: *q,
            result: CaseResult::Aligned(*alignment),
        })
        .collect();
    evaluate_cases(&cases, threshold)
}

/// Aggregates cases, counting pipeline failures as incorrect matches.
pub fn evaluate_cases(cases: &[EvalCase], threshold: f64) -> Result<EvalSummary, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    check_threshold(threshold)?;
    let mut reports = Vec::with_capacity(cases.len());
    let mut errors = Vec::new();
    let mut histogram: Vec<usize> = Vec::new();
    let mut unaligned = 0;
    let mut cats: BTreeMap<String, BTreeMap<String, CategoryRate>> = BTreeMap::new();

    for case in cases {
        let report = match &case.result {
            CaseResult::Aligned(a) => {
                let e = alignment_error(&case.truth, a, case.q)?;
                errors.push(e);
                let bin = e.floor() as usize;
                if histogram.len() <= bin {
                    histogram.resize(bin + 1, 0);
                }
                histogram[bin] += 1;
                CaseReport {
                    name: case.name.clone(),
                    error_deg: Some(e),
                    correct: e < threshold,
                    failure: None,
                }
            }
            CaseResult::Failed(msg) => {
                unaligned += 1;
                CaseReport {
                    name: case.name.clone(),
                    error_deg: None,
                    correct: false,
                    failure: Some(msg.clone()),
                }
            }
        };
        for (cat, opt) in case.truth.categories.entries() {
            if let Some(opt) = opt {
                let r = cats
                    .entry(cat.to_string())
                    .or_default()
                    .entry(opt.to_string())
                    .or_insert(CategoryRate { photos: 0, correct: 0, rate: 0.0 });
                r.photos += 1;
                r.correct += usize::from(report.correct);
            }
        }
        reports.push(report);
    }
    for options in cats.values_mut() {
        for r in options.values_mut() {
            r.rate = r.correct as f64 / r.photos as f64;
        }
    }
    let correct = reports.iter().filter(|r| r.correct).count();
    Ok(EvalSummary {
        threshold,
        correct_rate: correct as f64 / reports.len() as f64,
        per_photo_errors: errors,
        cases: reports,
        histogram,
        unaligned,
        per_category_rates: cats,
    })
}
