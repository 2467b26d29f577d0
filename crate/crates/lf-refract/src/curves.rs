//! Feature-curve extraction: track each keypoint across the central row and
//! column of views with Gaussian-weighted normalized cross-correlation (WNCC),
//! stack the per-view score rows into a correlation EPI, and trace the ridge
//! through the connected component around the self-match.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::keypoint::Keypoint;
use crate::lf::{LightField, Orientation};

#[derive(Debug, Clone)]
pub struct CurveConfig {
    /// Template side = round_to_odd(2 · k_template · scale + 1).
    pub k_template: f64,
    /// Correlation-EPI binarization threshold.
    pub corr_mask_thresh: f32,
    /// Minimum fraction of the requested views a curve must cover.
    pub min_span_frac: f64,
    /// Maximum per-view pixel step between adjacent curve samples.
    pub max_step_px: f64,
    /// Views to correlate along each axis; None = full central row/column.
    pub view_span: Option<usize>,
    /// Search radius in pixels around the keypoint; None = 2 · template side.
    pub search_radius: Option<usize>,
    /// Optional cap on expected slope, used to bound the search radius.
    pub max_slope_px_per_view: Option<f64>,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            k_template: 5.0,
            corr_mask_thresh: 0.5,
            min_span_frac: 0.75,
            max_step_px: 3.0,
            view_span: None,
            search_radius: None,
            max_slope_px_per_view: None,
        }
    }
}

/// Nearest odd integer ≥ 1 (rounding the half-width).
pub fn round_to_odd(x: f64) -> usize {
    let half = ((x - 1.0) / 2.0).round().max(0.0) as usize;
    2 * half + 1
}

/// A square patch around a keypoint plus its Gaussian correlation weights.
#[derive(Debug, Clone)]
pub struct Template {
    pub patch: Image,
    pub weight: Image,
    /// Source keypoint coordinates (subpixel).
    pub center: (f64, f64),
    /// Rounded source coordinates the patch is actually centered on.
    pub cu: usize,
    pub cv: usize,
    // Cached statistics for the WNCC inner loop (all f64 accumulated):
    // weight · demeaned-patch products, weighted patch variance, weight sum.
    wpd: Vec<f64>,
    var_p: f64,
    w_sum: f64,
}

impl Template {
    pub fn side(&self) -> usize {
        self.patch.width()
    }
}

/// Cuts a template of side round_to_odd(2·k·scale+1) around the rounded
/// keypoint position, with Gaussian weights of σ_w = side/4 peaking at the
/// center. Errors if the template does not fit inside the image.
pub fn build_template(img: &Image, kp: &Keypoint, k_template: f64) -> Result<Template> {
    let side = round_to_odd(2.0 * k_template * kp.scale + 1.0);
    let half = (side / 2) as i64;
    let cu = kp.u0.round() as i64;
    let cv = kp.v0.round() as i64;
    if cu - half < 0
        || cv - half < 0
        || cu + half >= img.width() as i64
        || cv + half >= img.height() as i64
    {
        return Err(Error::format(format!(
            "template of side {} at ({}, {}) exceeds {}x{} image bounds",
            side,
            kp.u0,
            kp.v0,
            img.width(),
            img.height()
        )));
    }
    let patch = Image::from_fn(side, side, |i, j| {
        img.get((cu - half + i as i64) as usize, (cv - half + j as i64) as usize)
    });
    let sigma_w = side as f64 / 4.0;
    let weight = Image::from_fn(side, side, |i, j| {
        let du = i as f64 - half as f64;
        let dv = j as f64 - half as f64;
        (-(du * du + dv * dv) / (2.0 * sigma_w * sigma_w)).exp() as f32
    });

    let w_sum: f64 = weight.as_slice().iter().map(|&w| w as f64).sum();
    let mean_p: f64 = patch
        .as_slice()
        .iter()
        .zip(weight.as_slice())
        .map(|(&p, &w)| p as f64 * w as f64)
        .sum::<f64>()
        / w_sum;
    let mut wpd = Vec::with_capacity(side * side);
    let mut var_p = 0.0;
    for (&p, &w) in patch.as_slice().iter().zip(weight.as_slice()) {
        let d = p as f64 - mean_p;
        wpd.push(w as f64 * d);
        var_p += w as f64 * d * d;
    }
    Ok(Template {
        patch,
        weight,
        center: (kp.u0, kp.v0),
        cu: cu as usize,
        cv: cv as usize,
        wpd,
        var_p,
        w_sum,
    })
}

const VAR_EPS: f64 = 1e-12;

/// WNCC score of the template against the window centered at (x, y).
/// Assumes the window is in bounds. Zero-variance windows score 0.
fn score_at(tmpl: &Template, img: &Image, x: usize, y: usize) -> f32 {
    let side = tmpl.side();
    let half = side / 2;
    let (x0, y0) = (x - half, y - half);
    let mut cov = 0.0f64;
    let mut sum_wq = 0.0f64;
    let mut sum_wqq = 0.0f64;
    let mut idx = 0;
    for j in 0..side {
        let row = img.row(y0 + j);
        for q in &row[x0..x0 + side] {
            let q = *q as f64;
            let w = tmpl.weight.as_slice()[idx] as f64;
            cov += tmpl.wpd[idx] * q;
            sum_wq += w * q;
            sum_wqq += w * q * q;
            idx += 1;
        }
    }
    let var_q = (sum_wqq - sum_wq * sum_wq / tmpl.w_sum).max(0.0);
    if tmpl.var_p <= VAR_EPS || var_q <= VAR_EPS {
        return 0.0;
    }
    ((cov / (tmpl.var_p * var_q).sqrt()) as f32).clamp(-1.0, 1.0)
}

/// WNCC scores along one pixel axis: candidate centers run from
/// `search_center − radius` to `search_center + radius` along `axis`, with
/// the other coordinate held fixed. Errors if any window leaves the image.
pub fn wncc(
    tmpl: &Template,
    img: &Image,
    search_center: (usize, usize),
    search_radius: usize,
    axis: Orientation,
) -> Result<Vec<f32>> {
    let half = (tmpl.side() / 2) as i64;
    let (cx, cy) = (search_center.0 as i64, search_center.1 as i64);
    let r = search_radius as i64;
    let (lo, hi, fixed, moving_max) = match axis {
        Orientation::Horizontal => (cx - r, cx + r, cy, img.width() as i64 - 1),
        Orientation::Vertical => (cy - r, cy + r, cx, img.height() as i64 - 1),
    };
    let fixed_max = match axis {
        Orientation::Horizontal => img.height() as i64 - 1,
        Orientation::Vertical => img.width() as i64 - 1,
    };
    if lo - half < 0 || hi + half > moving_max || fixed - half < 0 || fixed + half > fixed_max {
        return Err(Error::format(format!(
            "WNCC search window [{}, {}] (template half-size {}) out of bounds",
            lo, hi, half
        )));
    }
    Ok((lo..=hi)
        .map(|p| match axis {
            Orientation::Horizontal => score_at(tmpl, img, p as usize, fixed as usize),
            Orientation::Vertical => score_at(tmpl, img, fixed as usize, p as usize),
        })
        .collect())
}

/// Per-view WNCC score rows around one keypoint: row r holds the scores for
/// view offset `view_base + r`, column c the score at absolute pixel
/// coordinate `pixel_base + c` along the moving axis.
#[derive(Debug, Clone)]
pub struct CorrelationEpi {
    pub orientation: Orientation,
    pub data: Image,
    /// View offset (signed, central view = 0) of row 0.
    pub view_base: i64,
    /// Absolute pixel coordinate of column 0.
    pub pixel_base: i64,
    /// Row index of the central view.
    pub center_row: usize,
    /// Column of the keypoint's rounded coordinate.
    pub center_col: usize,
}

/// Correlates the template against every view of the central row (horizontal)
/// or central column (vertical), each along the EPI's moving pixel axis. The
/// search range is `search_radius` around the keypoint, clipped to keep every
/// window inside the image (curves that run into the clipped edge are later
/// rejected by the boundary-touch filter).
pub fn build_correlation_epi(
    lf: &LightField,
    kp: &Keypoint,
    tmpl: &Template,
    orientation: Orientation,
    view_span: usize,
    search_radius: usize,
) -> Result<CorrelationEpi> {
    let n_views = match orientation {
        Orientation::Horizontal => lf.n_s(),
        Orientation::Vertical => lf.n_t(),
    };
    if view_span > n_views || view_span.is_multiple_of(2) {
        return Err(Error::config(format!(
            "view_span {} must be odd and at most {}",
            view_span, n_views
        )));
    }
    let half = (tmpl.side() / 2) as i64;
    let (moving_center, fixed, moving_len, fixed_len) = match orientation {
        Orientation::Horizontal => (tmpl.cu as i64, tmpl.cv as i64, lf.n_u() as i64, lf.n_v() as i64),
        Orientation::Vertical => (tmpl.cv as i64, tmpl.cu as i64, lf.n_v() as i64, lf.n_u() as i64),
    };
    if fixed - half < 0 || fixed + half >= fixed_len {
        return Err(Error::format(format!(
            "template around ({}, {}) exceeds view bounds",
            kp.u0, kp.v0
        )));
    }
    let lo = (moving_center - search_radius as i64).max(half);
    let hi = (moving_center + search_radius as i64).min(moving_len - 1 - half);
    if lo > hi || moving_center < lo || moving_center > hi {
        return Err(Error::format(format!(
            "no in-bounds search window around ({}, {})",
            kp.u0, kp.v0
        )));
    }
    let width = (hi - lo + 1) as usize;
    let half_span = (view_span / 2) as i64;
    let view_base = -half_span;
    let data = Image::from_fn(width, view_span, |c, r| {
        let offset = view_base + r as i64;
        let (view, x, y) = match orientation {
            Orientation::Horizontal => (
                lf.view((lf.s_center() as i64 + offset) as usize, lf.t_center()),
                (lo + c as i64) as usize,
                fixed as usize,
            ),
            Orientation::Vertical => (
                lf.view(lf.s_center(), (lf.t_center() as i64 + offset) as usize),
                fixed as usize,
                (lo + c as i64) as usize,
            ),
        };
        score_at(tmpl, view, x, y)
    });
    Ok(CorrelationEpi {
        orientation,
        data,
        view_base,
        pixel_base: lo,
        center_row: half_span as usize,
        center_col: (moving_center - lo) as usize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// Signed view offset from the central view.
    pub view_offset: i64,
    /// Absolute subpixel position along the moving pixel axis.
    pub pixel_pos: f64,
    pub corr_score: f32,
}

/// The traced apparent-motion curve of one keypoint along one view axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCurve {
    pub orientation: Orientation,
    /// Samples in strictly increasing view_offset order, one per covered view.
    pub samples: Vec<CurveSample>,
    /// False when any consistency filter rejected the curve.
    pub valid: bool,
}

impl FeatureCurve {
    /// Sample at view offset 0 (always present).
    pub fn central(&self) -> &CurveSample {
        self.samples
            .iter()
            .find(|s| s.view_offset == 0)
            .expect("curve always carries its central sample")
    }
}

fn parabolic_offset(y_m: f32, y_0: f32, y_p: f32) -> f64 {
    let denom = (y_m - 2.0 * y_0 + y_p) as f64;
    if denom.abs() < 1e-12 {
        0.0
    } else {
        (0.5 * (y_m - y_p) as f64 / denom).clamp(-0.5, 0.5)
    }
}

/// Traces the curve through a correlation EPI: binarize at
/// `corr_mask_thresh`, take the 8-connected component containing the
/// central-view self-match peak, pick each view row's within-component
/// maximum (ties resolved toward the previous view's position, propagating
/// outward from the center), refine to subpixel by 3-point parabolic
/// interpolation, then apply the consistency filters. Curves failing a filter
/// are returned with valid=false, never dropped.
#[allow(clippy::needless_range_loop)] // rows are picked relative to ±1 neighbors
pub fn extract_curve(cepi: &CorrelationEpi, kp: &Keypoint, cfg: &CurveConfig) -> FeatureCurve {
    let (w, h) = (cepi.data.width(), cepi.data.height());
    let row = cepi.center_row;

    // Self-match peak: argmax of the central row, ties toward the keypoint.
    let center_scores = cepi.data.row(row);
    let mut peak_col = 0usize;
    for c in 1..w {
        let better = center_scores[c] > center_scores[peak_col]
            || (center_scores[c] == center_scores[peak_col]
                && (c as i64 - cepi.center_col as i64).abs()
                    < (peak_col as i64 - cepi.center_col as i64).abs());
        if better {
            peak_col = c;
        }
    }

    let mask: Vec<bool> = cepi
        .data
        .as_slice()
        .iter()
        .map(|&s| s >= cfg.corr_mask_thresh)
        .collect();

    // 8-connected component around the self-match.
    let mut component = vec![false; w * h];
    let mut touched_boundary = false;
    if mask[row * w + peak_col] {
        let mut stack = vec![(peak_col, row)];
        component[row * w + peak_col] = true;
        while let Some((c, r)) = stack.pop() {
            if c == 0 || c == w - 1 {
                touched_boundary = true;
            }
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                    if nc < 0 || nr < 0 || nc >= w as i64 || nr >= h as i64 {
                        continue;
                    }
                    let i = nr as usize * w + nc as usize;
                    if mask[i] && !component[i] {
                        component[i] = true;
                        stack.push((nc as usize, nr as usize));
                    }
                }
            }
        }
    }

    // Per-row within-component maxima, center outward.
    let mut picked: Vec<Option<(usize, f32)>> = vec![None; h];
    let pick_row = |r: usize, prev: f64| -> Option<(usize, f32)> {
        let scores = cepi.data.row(r);
        let mut best: Option<usize> = None;
        for c in 0..w {
            if !component[r * w + c] {
                continue;
            }
            best = Some(match best {
                None => c,
                Some(b) => {
                    if scores[c] > scores[b]
                        || (scores[c] == scores[b]
                            && (c as f64 - prev).abs() < (b as f64 - prev).abs())
                    {
                        c
                    } else {
                        b
                    }
                }
            });
        }
        best.map(|c| (c, scores[c]))
    };
    picked[row] = pick_row(row, cepi.center_col as f64);
    if picked[row].is_some() {
        let mut prev = picked[row].unwrap().0 as f64;
        for r in row + 1..h {
            picked[r] = pick_row(r, prev);
            match picked[r] {
                Some((c, _)) => prev = c as f64,
                None => break,
            }
        }
        prev = picked[row].unwrap().0 as f64;
        for r in (0..row).rev() {
            picked[r] = pick_row(r, prev);
            match picked[r] {
                Some((c, _)) => prev = c as f64,
                None => break,
            }
        }
    }

    let mut samples = Vec::new();
    for (r, p) in picked.iter().enumerate() {
        if let Some((c, score)) = *p {
            let scores = cepi.data.row(r);
            let delta = if c == 0 || c == w - 1 {
                0.0
            } else {
                parabolic_offset(scores[c - 1], scores[c], scores[c + 1])
            };
            samples.push(CurveSample {
                view_offset: cepi.view_base + r as i64,
                pixel_pos: (cepi.pixel_base + c as i64) as f64 + delta,
                corr_score: score,
            });
        }
    }

    // The self-match sample is always reported, even when below threshold.
    if !samples.iter().any(|s| s.view_offset == 0) {
        samples.push(CurveSample {
            view_offset: 0,
            pixel_pos: (cepi.pixel_base + peak_col as i64) as f64,
            corr_score: center_scores[peak_col],
        });
        samples.sort_by_key(|s| s.view_offset);
    }

    let kp_axis = match cepi.orientation {
        Orientation::Horizontal => kp.u0,
        Orientation::Vertical => kp.v0,
    };
    let central_pos = samples
        .iter()
        .find(|s| s.view_offset == 0)
        .map(|s| s.pixel_pos)
        .unwrap();
    let span_ok = samples.len() as f64 / h as f64 >= cfg.min_span_frac;
    let steps_ok = samples
        .windows(2)
        .all(|p| (p[1].pixel_pos - p[0].pixel_pos).abs() <= cfg.max_step_px);
    let self_match_ok = (central_pos - kp_axis).abs() <= 1.0;
    let valid = span_ok && steps_ok && self_match_ok && !touched_boundary;

    debug_assert!(
        samples
            .windows(2)
            .all(|p| p[1].view_offset == p[0].view_offset + 1),
        "connected component must cover a contiguous view range"
    );

    FeatureCurve {
        orientation: cepi.orientation,
        samples,
        valid,
    }
}

fn placeholder_curve(kp: &Keypoint, orientation: Orientation) -> FeatureCurve {
    let pos = match orientation {
        Orientation::Horizontal => kp.u0,
        Orientation::Vertical => kp.v0,
    };
    FeatureCurve {
        orientation,
        samples: vec![CurveSample {
            view_offset: 0,
            pixel_pos: pos,
            corr_score: 0.0,
        }],
        valid: false,
    }
}

/// Extracts the horizontal and vertical feature curves of one keypoint.
/// Bounds failures (template or search window off the image, keypoint too
/// close to an edge) yield invalid placeholder curves instead of errors.
pub fn extract_feature_curves(
    lf: &LightField,
    kp: &Keypoint,
    cfg: &CurveConfig,
) -> (FeatureCurve, FeatureCurve) {
    let tmpl = match build_template(lf.central_view(), kp, cfg.k_template) {
        Ok(t) => t,
        Err(_) => {
            return (
                placeholder_curve(kp, Orientation::Horizontal),
                placeholder_curve(kp, Orientation::Vertical),
            )
        }
    };
    let run = |orientation: Orientation| -> FeatureCurve {
        let n_views = match orientation {
            Orientation::Horizontal => lf.n_s(),
            Orientation::Vertical => lf.n_t(),
        };
        let span = cfg.view_span.unwrap_or(n_views).min(n_views);
        let mut radius = cfg.search_radius.unwrap_or(2 * tmpl.side());
        if let Some(max_slope) = cfg.max_slope_px_per_view {
            let bound = (max_slope * (span / 2) as f64).ceil() as usize + 2;
            radius = radius.min(bound);
        }
        match build_correlation_epi(lf, kp, &tmpl, orientation, span, radius) {
            Ok(cepi) => extract_curve(&cepi, kp, cfg),
            Err(_) => placeholder_curve(kp, orientation),
        }
    };
    (run(Orientation::Horizontal), run(Orientation::Vertical))
}
