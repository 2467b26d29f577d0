//! 4D plane fitting and feature classification.
//!
//! A Lambertian point constrains its feature curves to a 2D plane in
//! (s, t, Δu, Δv) — the intersection of two hyperplanes with normals n_h and
//! n_v — with equal slopes in the (s,Δu) and (t,Δv) planes. Refracted
//! features violate planarity, slope equality, or both. The single-hyperplane
//! baseline fit (smallest singular value only) is kept for comparison; it is
//! blind to refracted features whose curves stay linear in each EPI
//! separately, e.g. through a vertical cylinder.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, Matrix2, Vector4};
use serde::{Deserialize, Serialize};

use crate::curves::FeatureCurve;
use crate::error::{Error, Result};
use crate::keypoint::Keypoint;

#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    /// Maximum singular value (px) of either plane normal for a Lambertian
    /// verdict.
    pub planar_thresh: f64,
    /// Maximum slope inconsistency c = (w_su − w_tv)² in (px/view)².
    pub slope_thresh: f64,
    /// Operating threshold on e_min for the single-hyperplane baseline.
    pub xu_thresh: f64,
    /// Minimum total curve samples for a determinate verdict.
    pub min_samples: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            planar_thresh: 1.5,
            slope_thresh: 0.05,
            xu_thresh: 1.0,
            min_samples: 8,
        }
    }
}

/// Result of fitting both hyperplane normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    /// Normal with the larger (s,Δu) affinity, unit length.
    pub n_h: Vector4<f64>,
    /// Normal with the larger (t,Δv) affinity, unit length, ⊥ n_h.
    pub n_v: Vector4<f64>,
    /// Singular value paired with n_h.
    pub e_h: f64,
    /// Singular value paired with n_v.
    pub e_v: f64,
    pub n_rows: usize,
    /// True when a view-axis block had fewer than 2 distinct offsets, leaving
    /// one normal unconstrained.
    pub degenerate: bool,
}

impl PlaneFit {
    /// Smaller of the two fit residuals.
    pub fn e1(&self) -> f64 {
        self.e_h.min(self.e_v)
    }
    /// Larger of the two fit residuals.
    pub fn e2(&self) -> f64 {
        self.e_h.max(self.e_v)
    }
}

/// Single 4D hyperplane fit (the comparison baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneFit {
    pub n: Vector4<f64>,
    pub e_min: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeReport {
    /// Apparent-motion slope in the (s, Δu) plane, px/view.
    pub w_su: f64,
    /// Apparent-motion slope in the (t, Δv) plane, px/view.
    pub w_tv: f64,
    /// Slope inconsistency (w_su − w_tv)².
    pub c: f64,
    /// True when a slope could not be computed even via the line fallback.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Lambertian,
    Refracted,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    PlanarH,
    PlanarV,
    Slope,
    InvalidCurves,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLabel {
    pub verdict: Verdict,
    /// Every test that triggered (empty for clean Lambertian features).
    pub reasons: BTreeSet<Reason>,
    /// None when the curves were too poor to fit.
    pub fit: Option<PlaneFit>,
    pub slopes: Option<SlopeReport>,
    pub baseline_fit: Option<HyperplaneFit>,
}

/// Stacks both curves into the fit matrix: one row per sample, horizontal
/// block first. Horizontal samples contribute (s, 0, Δu, 0) and vertical
/// samples (0, t, 0, Δv), with Δu/Δv measured from the keypoint; the EPIs
/// pass through the keypoint, so the cross terms are exactly zero and the
/// constant right-hand sides cancel.
pub fn assemble_design_matrix(
    f_h: &FeatureCurve,
    f_v: &FeatureCurve,
    kp: &Keypoint,
    min_samples: usize,
) -> Result<DMatrix<f64>> {
    if !f_h.valid {
        return Err(Error::InsufficientFeatures(
            "horizontal curve failed consistency filters".to_string(),
        ));
    }
    if !f_v.valid {
        return Err(Error::InsufficientFeatures(
            "vertical curve failed consistency filters".to_string(),
        ));
    }
    let n = f_h.samples.len() + f_v.samples.len();
    if n < min_samples {
        return Err(Error::InsufficientFeatures(format!(
            "{} curve samples, need at least {}",
            n, min_samples
        )));
    }
    let mut a = DMatrix::zeros(n, 4);
    for (i, s) in f_h.samples.iter().enumerate() {
        a[(i, 0)] = s.view_offset as f64;
        a[(i, 2)] = s.pixel_pos - kp.u0;
    }
    let base = f_h.samples.len();
    for (i, s) in f_v.samples.iter().enumerate() {
        a[(base + i, 1)] = s.view_offset as f64;
        a[(base + i, 3)] = s.pixel_pos - kp.v0;
    }
    Ok(a)
}

fn row4(m: &nalgebra::DMatrix<f64>, i: usize) -> Vector4<f64> {
    Vector4::new(m[(i, 0)], m[(i, 1)], m[(i, 2)], m[(i, 3)])
}

/// Flips a singular vector so its largest-magnitude component is positive,
/// making results reproducible across runs and backends.
fn normalize_sign(mut v: Vector4<f64>) -> Vector4<f64> {
    let mut idx = 0;
    for i in 1..4 {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v = -v;
    }
    v
}

/// Distinct-offset counts of the (s,·) and (t,·) row blocks; rows are
/// identified by the exact zero pattern the assembler produces.
fn block_offset_counts(a: &DMatrix<f64>) -> (usize, usize) {
    let mut s_offsets = BTreeSet::new();
    let mut t_offsets = BTreeSet::new();
    for i in 0..a.nrows() {
        let row = a.row(i);
        if row[1] == 0.0 && row[3] == 0.0 {
            s_offsets.insert(row[0].to_bits());
        }
        if row[0] == 0.0 && row[2] == 0.0 {
            t_offsets.insert(row[1].to_bits());
        }
    }
    (s_offsets.len(), t_offsets.len())
}

/// Fits both hyperplane normals: the right singular vectors of the two
/// smallest singular values of the sample matrix. ‖A·n‖ equals the paired
/// singular value.
pub fn fit_plane(a: &DMatrix<f64>) -> Result<PlaneFit> {
    if a.nrows() < 4 {
        return Err(Error::InsufficientFeatures(format!(
            "plane fit needs at least 4 rows, got {}",
            a.nrows()
        )));
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    // nalgebra sorts singular values in descending order.
    let e_a = svd.singular_values[3];
    let e_b = svd.singular_values[2];
    let va = normalize_sign(row4(v_t, 3));
    let vb = normalize_sign(row4(v_t, 2));
    // Label by axis affinity: n_h lives mostly in the (s, Δu) components.
    let affinity = |v: &Vector4<f64>| v[0] * v[0] + v[2] * v[2];
    let ((n_h, e_h), (n_v, e_v)) = if affinity(&va) >= affinity(&vb) {
        ((va, e_a), (vb, e_b))
    } else {
        ((vb, e_b), (va, e_a))
    };
    let (s_count, t_count) = block_offset_counts(a);
    Ok(PlaneFit {
        n_h,
        n_v,
        e_h,
        e_v,
        n_rows: a.nrows(),
        degenerate: s_count < 2 || t_count < 2,
    })
}

/// Baseline: fit a single 4D hyperplane, keeping only the smallest singular
/// value as the error measure.
pub fn fit_hyperplane_xu(a: &DMatrix<f64>) -> Result<HyperplaneFit> {
    if a.nrows() < 4 {
        return Err(Error::InsufficientFeatures(format!(
            "hyperplane fit needs at least 4 rows, got {}",
            a.nrows()
        )));
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let (s_count, t_count) = block_offset_counts(a);
    Ok(HyperplaneFit {
        n: normalize_sign(row4(v_t, 3)),
        e_min: svd.singular_values[3],
        degenerate: s_count < 2 || t_count < 2,
    })
}

/// Slope of the in-plane direction shared by both normals' (view, pixel)
/// components: stack the two (view, pixel) pairs, take the least right
/// singular vector q = (q_view, q_pixel); the slope is q_pixel/q_view
/// (pixels per view). None when the direction is pixel-axis aligned.
fn plane_slope(h: (f64, f64), v: (f64, f64)) -> Option<f64> {
    let m = Matrix2::new(h.0, h.1, v.0, v.1);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let q = v_t.row(1);
    if q[0].abs() < 1e-6 {
        None
    } else {
        Some(q[1] / q[0])
    }
}

/// Total-least-squares line slope through (view_offset, pixel_pos).
fn tls_slope(curve: &FeatureCurve) -> Option<f64> {
    let n = curve.samples.len();
    if n < 2 {
        return None;
    }
    let mean_x = curve.samples.iter().map(|s| s.view_offset as f64).sum::<f64>() / n as f64;
    let mean_y = curve.samples.iter().map(|s| s.pixel_pos).sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for s in &curve.samples {
        let dx = s.view_offset as f64 - mean_x;
        let dy = s.pixel_pos - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Principal eigenvector of [[sxx, sxy], [sxy, syy]].
    let diff = (sxx - syy) / 2.0;
    let lambda = (sxx + syy) / 2.0 + (diff * diff + sxy * sxy).sqrt();
    let (dx, dy) = if (lambda - sxx).abs() > sxy.abs() {
        (sxy, lambda - sxx)
    } else {
        (lambda - syy, sxy)
    };
    // Direction for a near-horizontal line has dominant view component.
    let (dx, dy) = if dx == 0.0 && dy == 0.0 { (1.0, 0.0) } else { (dx, dy) };
    if dx.abs() < 1e-9 {
        None
    } else {
        Some(dy / dx)
    }
}

/// Computes both slopes and their inconsistency c = (w_su − w_tv)². The
/// primary path reads the slopes out of the fitted normals; when that is
/// degenerate for an axis, the slope falls back to a total-least-squares
/// line through that curve's samples.
pub fn compute_slopes(fit: &PlaneFit, f_h: &FeatureCurve, f_v: &FeatureCurve) -> SlopeReport {
    let (w_su, w_tv) = if fit.degenerate {
        (tls_slope(f_h), tls_slope(f_v))
    } else {
        (
            plane_slope((fit.n_h[0], fit.n_h[2]), (fit.n_v[0], fit.n_v[2]))
                .or_else(|| tls_slope(f_h)),
            plane_slope((fit.n_h[1], fit.n_h[3]), (fit.n_v[1], fit.n_v[3]))
                .or_else(|| tls_slope(f_v)),
        )
    };
    match (w_su, w_tv) {
        (Some(w_su), Some(w_tv)) => SlopeReport {
            w_su,
            w_tv,
            c: (w_su - w_tv) * (w_su - w_tv),
            degenerate: false,
        },
        (w_su, w_tv) => SlopeReport {
            w_su: w_su.unwrap_or(f64::NAN),
            w_tv: w_tv.unwrap_or(f64::NAN),
            c: f64::NAN,
            degenerate: true,
        },
    }
}

/// Everything measured about one feature, independent of thresholds. Kept
/// separate from labeling so threshold sweeps can relabel without refitting.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub curves_valid: bool,
    pub n_samples: usize,
    pub fit: Option<PlaneFit>,
    pub slopes: Option<SlopeReport>,
    pub baseline: Option<HyperplaneFit>,
}

/// Fits everything fittable for one feature. Fits are None when either curve
/// is invalid or there are fewer than 4 samples.
pub fn measure(f_h: &FeatureCurve, f_v: &FeatureCurve, kp: &Keypoint) -> Measurement {
    let curves_valid = f_h.valid && f_v.valid;
    let n_samples = f_h.samples.len() + f_v.samples.len();
    let mut m = Measurement {
        curves_valid,
        n_samples,
        fit: None,
        slopes: None,
        baseline: None,
    };
    if !curves_valid {
        return m;
    }
    if let Ok(a) = assemble_design_matrix(f_h, f_v, kp, 4) {
        if let Ok(fit) = fit_plane(&a) {
            m.slopes = Some(compute_slopes(&fit, f_h, f_v));
            m.fit = Some(fit);
        }
        m.baseline = fit_hyperplane_xu(&a).ok();
    }
    m
}

/// Applies thresholds to a measurement. Indeterminate exactly when a curve
/// is invalid or the total sample count is below min_samples; otherwise
/// refracted when either plane residual exceeds planar_thresh or the slope
/// inconsistency exceeds slope_thresh.
pub fn label(m: &Measurement, th: &Thresholds) -> FeatureLabel {
    let mut reasons = BTreeSet::new();
    if !m.curves_valid || m.n_samples < th.min_samples || m.fit.is_none() {
        reasons.insert(Reason::InvalidCurves);
        return FeatureLabel {
            verdict: Verdict::Indeterminate,
            reasons,
            fit: m.fit.clone(),
            slopes: m.slopes,
            baseline_fit: m.baseline.clone(),
        };
    }
    let fit = m.fit.as_ref().unwrap();
    if fit.e_h > th.planar_thresh {
        reasons.insert(Reason::PlanarH);
    }
    if fit.e_v > th.planar_thresh {
        reasons.insert(Reason::PlanarV);
    }
    if let Some(slopes) = &m.slopes {
        if slopes.c > th.slope_thresh {
            reasons.insert(Reason::Slope);
        }
    }
    let verdict = if reasons.is_empty() {
        Verdict::Lambertian
    } else {
        Verdict::Refracted
    };
    FeatureLabel {
        verdict,
        reasons,
        fit: m.fit.clone(),
        slopes: m.slopes,
        baseline_fit: m.baseline.clone(),
    }
}

/// Measure + label in one step.
pub fn classify(
    f_h: &FeatureCurve,
    f_v: &FeatureCurve,
    kp: &Keypoint,
    th: &Thresholds,
) -> FeatureLabel {
    label(&measure(f_h, f_v, kp), th)
}
