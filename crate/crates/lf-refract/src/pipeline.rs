//! End-to-end classification: detect keypoints in the central view, extract
//! both feature curves per keypoint, fit, and label. Per-keypoint work is
//! embarrassingly parallel and runs through the `parallel` shims.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::curves::{extract_feature_curves, FeatureCurve};
use crate::error::{Error, Result};
use crate::fit::{label, measure, FeatureLabel, Measurement, Verdict};
use crate::keypoint::{detect_keypoints, Keypoint};
use crate::lf::LightField;
use crate::parallel;

/// Full per-feature output: raw curves, threshold-free measurement, and the
/// thresholded label.
#[derive(Debug, Clone)]
pub struct FeatureResult {
    pub keypoint: Keypoint,
    pub curve_h: FeatureCurve,
    pub curve_v: FeatureCurve,
    pub measurement: Measurement,
    pub label: FeatureLabel,
}

/// Runs the whole pipeline on one light field, detecting keypoints in the
/// central view.
pub fn classify_lightfield(lf: &LightField, cfg: &PipelineConfig) -> Result<Vec<FeatureResult>> {
    cfg.validate()?;
    let kps = detect_keypoints(lf.central_view(), &cfg.detector())?;
    classify_keypoints(lf, &kps, cfg)
}

/// Classifies an externally supplied keypoint list (e.g. from another
/// detector via the text format) instead of running the built-in detector.
pub fn classify_keypoints(
    lf: &LightField,
    kps: &[Keypoint],
    cfg: &PipelineConfig,
) -> Result<Vec<FeatureResult>> {
    cfg.validate()?;
    if kps.is_empty() {
        return Err(Error::InsufficientFeatures(
            "no keypoints to classify".to_string(),
        ));
    }
    let curve_cfg = cfg.curve();
    let th = cfg.thresholds();
    Ok(parallel::map_slice(kps, |kp| {
        let (curve_h, curve_v) = extract_feature_curves(lf, kp, &curve_cfg);
        let measurement = measure(&curve_h, &curve_v, kp);
        let label = label(&measurement, &th);
        FeatureResult {
            keypoint: *kp,
            curve_h,
            curve_v,
            measurement,
            label,
        }
    }))
}

/// Serializable per-feature record for the classification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifiedFeature {
    pub u0: f64,
    pub v0: f64,
    pub scale: f64,
    pub score: f64,
    pub verdict: Verdict,
    pub reasons: Vec<crate::fit::Reason>,
    pub curves_valid: bool,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e_min_xu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w_su: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w_tv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl ClassifiedFeature {
    pub fn from_result(r: &FeatureResult) -> ClassifiedFeature {
        let fit = r.label.fit.as_ref();
        let slopes = r.label.slopes.as_ref();
        ClassifiedFeature {
            u0: r.keypoint.u0,
            v0: r.keypoint.v0,
            scale: r.keypoint.scale,
            score: r.keypoint.score,
            verdict: r.label.verdict,
            reasons: r.label.reasons.iter().copied().collect(),
            curves_valid: r.measurement.curves_valid,
            n_samples: r.measurement.n_samples,
            e1: fit.map(|f| f.e1()),
            e2: fit.map(|f| f.e2()),
            e_min_xu: r.label.baseline_fit.as_ref().map(|b| b.e_min),
            w_su: slopes.and_then(|s| finite(s.w_su)),
            w_tv: slopes.and_then(|s| finite(s.w_tv)),
            c: slopes.and_then(|s| finite(s.c)),
        }
    }

    pub fn keypoint(&self) -> Keypoint {
        Keypoint {
            u0: self.u0,
            v0: self.v0,
            scale: self.scale,
            score: self.score,
        }
    }
}

/// Classification report: summary counts plus one record per feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub n_features: usize,
    pub n_lambertian: usize,
    pub n_refracted: usize,
    pub n_indeterminate: usize,
    pub features: Vec<ClassifiedFeature>,
}

impl ClassificationReport {
    pub fn from_results(results: &[FeatureResult]) -> ClassificationReport {
        let features: Vec<ClassifiedFeature> =
            results.iter().map(ClassifiedFeature::from_result).collect();
        Self::from_features(features)
    }

    pub fn from_features(features: Vec<ClassifiedFeature>) -> ClassificationReport {
        let count = |v: Verdict| features.iter().filter(|f| f.verdict == v).count();
        ClassificationReport {
            n_features: features.len(),
            n_lambertian: count(Verdict::Lambertian),
            n_refracted: count(Verdict::Refracted),
            n_indeterminate: count(Verdict::Indeterminate),
            features,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(Error::from)?;
        std::fs::write(path, text).map_err(|e| Error::io_at(path, e))
    }

    pub fn load(path: &Path) -> Result<ClassificationReport> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        let report: ClassificationReport = serde_json::from_str(&text)
            .map_err(|e| Error::format(format!("{}: {}", path.display(), e)))?;
        let recount = ClassificationReport::from_features(report.features.clone());
        if recount.n_features != report.n_features
            || recount.n_lambertian != report.n_lambertian
            || recount.n_refracted != report.n_refracted
            || recount.n_indeterminate != report.n_indeterminate
        {
            return Err(Error::format(format!(
                "{}: summary counts disagree with the feature list",
                path.display()
            )));
        }
        Ok(report)
    }
}

/// Keypoints whose verdict is Lambertian — the filtered set safe to hand to
/// downstream geometry (SfM-style) consumers.
pub fn lambertian_keypoints(features: &[ClassifiedFeature]) -> Vec<Keypoint> {
    features
        .iter()
        .filter(|f| f.verdict == Verdict::Lambertian)
        .map(|f| f.keypoint())
        .collect()
}

/// Per-feature curve dump for debugging/plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveDump {
    pub u0: f64,
    pub v0: f64,
    pub horizontal: FeatureCurve,
    pub vertical: FeatureCurve,
}

pub fn save_curves(results: &[FeatureResult], path: &Path) -> Result<()> {
    let dump: Vec<CurveDump> = results
        .iter()
        .map(|r| CurveDump {
            u0: r.keypoint.u0,
            v0: r.keypoint.v0,
            horizontal: r.curve_h.clone(),
            vertical: r.curve_v.clone(),
        })
        .collect();
    let text = serde_json::to_string_pretty(&dump).map_err(Error::from)?;
    std::fs::write(path, text).map_err(|e| Error::io_at(path, e))
}
