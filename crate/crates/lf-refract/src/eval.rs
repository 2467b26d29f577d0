//! Evaluation against ground truth: TPR/FPR of the two-plane classifier and
//! the single-hyperplane baseline, threshold sweeps over cached per-feature
//! measurements, and CSV/JSON/annotated-PNG report emission.
//!
//! Everything operates on `ClassifiedFeature` records: they carry the raw
//! residuals (e1, e2, c, e_min_xu), so sweeps relabel without refitting.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{Thresholds, Verdict};
use crate::image::Image;
use crate::pipeline::ClassifiedFeature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Two-plane fit with slope-consistency test.
    Proposed,
    /// Single 4D hyperplane fit thresholded on its residual.
    XuBaseline,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::XuBaseline => "xu_baseline",
        })
    }
}

/// Circular region whose features are excluded from scoring (e.g. the
/// central straight-through zone of a sphere where refraction is invisible
/// by symmetry).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Exclusion {
    pub cu: f64,
    pub cv: f64,
    pub radius: f64,
}

impl Exclusion {
    fn contains(&self, u: f64, v: f64) -> bool {
        let (du, dv) = (u - self.cu, v - self.cv);
        du * du + dv * dv <= self.radius * self.radius
    }
}

/// Centroid and equivalent-area radius of a binary mask, or None when the
/// mask is empty.
pub fn mask_disc(mask: &Image) -> Option<Exclusion> {
    let (mut su, mut sv, mut n) = (0.0f64, 0.0f64, 0usize);
    for v in 0..mask.height() {
        for u in 0..mask.width() {
            if mask.get(u, v) >= 0.5 {
                su += u as f64;
                sv += v as f64;
                n += 1;
            }
        }
    }
    (n > 0).then(|| Exclusion {
        cu: su / n as f64,
        cv: sv / n as f64,
        radius: (n as f64 / std::f64::consts::PI).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalResult {
    pub method: Method,
    pub planar_thresh: f64,
    pub slope_thresh: f64,
    pub xu_thresh: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub indeterminate: usize,
    pub excluded: usize,
    /// tp / (tp + fn); None when no ground-truth positives were evaluated.
    pub tpr: Option<f64>,
    /// fp / (fp + tn); None when no ground-truth negatives were evaluated.
    pub fpr: Option<f64>,
}

impl EvalResult {
    pub fn n_features(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_ + self.indeterminate + self.excluded
    }
}

/// Re-derives a verdict from a feature's stored residuals under arbitrary
/// thresholds. For `Proposed` this reproduces the pipeline's labeling rule
/// exactly: indeterminate unless the curves were valid, enough samples were
/// gathered, and a fit exists; refracted when either plane residual exceeds
/// planar_thresh (max residual e2 covers both) or the slope inconsistency
/// exceeds slope_thresh. For `Xu`, refracted when the single-hyperplane
/// residual exceeds xu_thresh.
pub fn relabel(f: &ClassifiedFeature, method: Method, th: &Thresholds) -> Verdict {
    if !f.curves_valid || f.n_samples < th.min_samples {
        return Verdict::Indeterminate;
    }
    match method {
        Method::Proposed => match f.e2 {
            None => Verdict::Indeterminate,
            Some(e2) => {
                let slope_bad = f.c.is_some_and(|c| c > th.slope_thresh);
                if e2 > th.planar_thresh || slope_bad {
                    Verdict::Refracted
                } else {
                    Verdict::Lambertian
                }
            }
        },
        Method::XuBaseline => match f.e_min_xu {
            None => Verdict::Indeterminate,
            Some(e_min) => {
                if e_min > th.xu_thresh {
                    Verdict::Refracted
                } else {
                    Verdict::Lambertian
                }
            }
        },
    }
}

fn mask_at(mask: &Image, u0: f64, v0: f64) -> Result<bool> {
    let (u, v) = (u0.round(), v0.round());
    if u < 0.0 || v < 0.0 || u >= mask.width() as f64 || v >= mask.height() as f64 {
        return Err(Error::format(format!(
            "keypoint ({}, {}) lies outside the {}x{} ground-truth mask",
            u0,
            v0,
            mask.width(),
            mask.height()
        )));
    }
    Ok(mask.get(u as usize, v as usize) >= 0.5)
}

/// Scores one method at one threshold setting against a ground-truth mask.
/// Ground truth is looked up at the rounded keypoint position; positives are
/// refracted pixels. Indeterminate features never enter the rates but are
/// counted, as are features inside the exclusion disc.
pub fn evaluate(
    features: &[ClassifiedFeature],
    mask: &Image,
    method: Method,
    th: &Thresholds,
    exclusion: Option<&Exclusion>,
) -> Result<EvalResult> {
    if features.is_empty() {
        return Err(Error::InsufficientFeatures(
            "no features to evaluate".to_string(),
        ));
    }
    let mut r = EvalResult {
        method,
        planar_thresh: th.planar_thresh,
        slope_thresh: th.slope_thresh,
        xu_thresh: th.xu_thresh,
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
        indeterminate: 0,
        excluded: 0,
        tpr: None,
        fpr: None,
    };
    for f in features {
        if exclusion.is_some_and(|e| e.contains(f.u0, f.v0)) {
            r.excluded += 1;
            continue;
        }
        let truth = mask_at(mask, f.u0, f.v0)?;
        match relabel(f, method, th) {
            Verdict::Indeterminate => r.indeterminate += 1,
            Verdict::Refracted if truth => r.tp += 1,
            Verdict::Refracted => r.fp += 1,
            Verdict::Lambertian if truth => r.fn_ += 1,
            Verdict::Lambertian => r.tn += 1,
        }
    }
    if r.tp + r.fn_ > 0 {
        r.tpr = Some(r.tp as f64 / (r.tp + r.fn_) as f64);
    }
    if r.fp + r.tn > 0 {
        r.fpr = Some(r.fp as f64 / (r.fp + r.tn) as f64);
    }
    Ok(r)
}

/// Scene-level "refractive content" indicator: the fraction of determinate
/// features labeled refracted under the recorded verdicts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RefractionRatio {
    pub r: f64,
    /// Features labeled refracted.
    pub i_r: usize,
    /// All determinate features.
    pub i_t: usize,
}

pub fn refraction_ratio(features: &[ClassifiedFeature]) -> Result<RefractionRatio> {
    let i_r = features
        .iter()
        .filter(|f| f.verdict == Verdict::Refracted)
        .count();
    let i_t = features
        .iter()
        .filter(|f| f.verdict != Verdict::Indeterminate)
        .count();
    if i_t == 0 {
        return Err(Error::InsufficientFeatures(
            "no determinate features for the refraction ratio".to_string(),
        ));
    }
    Ok(RefractionRatio {
        r: i_r as f64 / i_t as f64,
        i_r,
        i_t,
    })
}

/// Sweeps the proposed classifier over a planar×slope threshold grid, or the
/// baseline over an xu grid, reusing cached residuals.
#[allow(clippy::too_many_arguments)] // mirrors the CLI surface one-to-one
pub fn sweep(
    features: &[ClassifiedFeature],
    mask: &Image,
    method: Method,
    base: &Thresholds,
    planar_grid: &[f64],
    slope_grid: &[f64],
    xu_grid: &[f64],
    exclusion: Option<&Exclusion>,
) -> Result<Vec<EvalResult>> {
    let mut out = Vec::new();
    match method {
        Method::Proposed => {
            for &p in planar_grid {
                for &s in slope_grid {
                    let th = Thresholds {
                        planar_thresh: p,
                        slope_thresh: s,
                        ..*base
                    };
                    out.push(evaluate(features, mask, method, &th, exclusion)?);
                }
            }
        }
        Method::XuBaseline => {
            for &x in xu_grid {
                let th = Thresholds {
                    xu_thresh: x,
                    ..*base
                };
                out.push(evaluate(features, mask, method, &th, exclusion)?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::config("empty threshold grid".to_string()));
    }
    Ok(out)
}

/// Best operating point (highest TPR) among results whose FPR is defined and
/// at most `max_fpr`. This is how the two methods are compared at a matched
/// false-positive budget.
pub fn best_at_fpr(results: &[EvalResult], max_fpr: f64) -> Option<&EvalResult> {
    results
        .iter()
        .filter(|r| r.fpr.is_some_and(|f| f <= max_fpr) && r.tpr.is_some())
        .max_by(|a, b| {
            a.tpr
                .unwrap()
                .total_cmp(&b.tpr.unwrap())
                // Tie-break toward lower FPR for a stable, sensible choice.
                .then(b.fpr.unwrap().total_cmp(&a.fpr.unwrap()))
        })
}

/// Like-for-like operating points for two methods: the pair (one from each
/// sweep) whose FPRs are closest, ties broken toward higher combined TPR.
/// Used to compare TPRs at a matched false-positive rate.
pub fn nearest_fpr_pair<'a>(
    a: &'a [EvalResult],
    b: &'a [EvalResult],
) -> Option<(&'a EvalResult, &'a EvalResult)> {
    let defined = |r: &&EvalResult| r.fpr.is_some() && r.tpr.is_some();
    let mut best: Option<(&EvalResult, &EvalResult)> = None;
    let mut best_key = (f64::INFINITY, f64::NEG_INFINITY);
    for ra in a.iter().filter(defined) {
        for rb in b.iter().filter(defined) {
            let gap = (ra.fpr.unwrap() - rb.fpr.unwrap()).abs();
            let tpr_sum = ra.tpr.unwrap() + rb.tpr.unwrap();
            if gap < best_key.0 - 1e-12 || (gap <= best_key.0 + 1e-12 && tpr_sum > best_key.1) {
                best_key = (gap, tpr_sum);
                best = Some((ra, rb));
            }
        }
    }
    best
}

fn fmt_rate(r: Option<f64>) -> String {
    match r {
        Some(x) => format!("{:.6}", x),
        None => String::new(),
    }
}

/// Writes sweep results as CSV with a fixed column set.
pub fn write_csv(results: &[EvalResult], path: &Path) -> Result<()> {
    let mut text =
        String::from("method,planar_thresh,slope_thresh,xu_thresh,tp,fp,tn,fn,indeterminate,tpr,fpr\n");
    for r in results {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.method,
            r.planar_thresh,
            r.slope_thresh,
            r.xu_thresh,
            r.tp,
            r.fp,
            r.tn,
            r.fn_,
            r.indeterminate,
            fmt_rate(r.tpr),
            fmt_rate(r.fpr),
        ));
    }
    std::fs::write(path, text).map_err(|e| Error::io_at(path, e))
}

pub fn write_json(results: &[EvalResult], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(results).map_err(Error::from)?;
    std::fs::write(path, text).map_err(|e| Error::io_at(path, e))
}

/// Renders the central view with verdict markers: blue = lambertian, red =
/// refracted, gray = indeterminate.
pub fn annotate(view: &Image, features: &[ClassifiedFeature], path: &Path) -> Result<()> {
    let (w, h) = (view.width(), view.height());
    let mut img: image::RgbImage = image::ImageBuffer::new(w as u32, h as u32);
    for (u, v, px) in img.enumerate_pixels_mut() {
        let g = (view.get(u as usize, v as usize) * 255.0).round().clamp(0.0, 255.0) as u8;
        px.0 = [g, g, g];
    }
    for f in features {
        let color = match f.verdict {
            Verdict::Lambertian => [40u8, 90, 255],
            Verdict::Refracted => [255u8, 50, 40],
            Verdict::Indeterminate => [150u8, 150, 150],
        };
        let (cu, cv) = (f.u0.round() as i64, f.v0.round() as i64);
        for o in -3i64..=3 {
            for (du, dv) in [(o, 0), (0, o)] {
                let (u, v) = (cu + du, cv + dv);
                if u >= 0 && v >= 0 && (u as usize) < w && (v as usize) < h {
                    img.put_pixel(u as u32, v as u32, image::Rgb(color));
                }
            }
        }
    }
    img.save(path)
        .map_err(|e| Error::format(format!("writing {}: {}", path.display(), e)))
}
