//! Flat pipeline configuration: one JSON object holding every tunable
//! threshold, with defaults matching the per-stage configs. Keeping it flat
//! makes CLI flag overrides and sweep grids trivial.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curves::CurveConfig;
use crate::error::{Error, Result};
use crate::fit::Thresholds;
use crate::keypoint::DetectorConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    // Keypoint detection.
    pub octaves: usize,
    pub intervals: usize,
    pub contrast_thresh: f64,
    pub edge_thresh: f64,
    pub border_margin_k: f64,
    // Feature-curve extraction.
    pub k_template: f64,
    pub corr_mask_thresh: f32,
    pub min_span_frac: f64,
    pub max_step_px: f64,
    pub view_span: Option<usize>,
    pub search_radius: Option<usize>,
    pub max_slope_px_per_view: Option<f64>,
    // Classification thresholds.
    pub planar_thresh: f64,
    pub slope_thresh: f64,
    pub xu_thresh: f64,
    pub min_samples: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let det = DetectorConfig::default();
        let cur = CurveConfig::default();
        let th = Thresholds::default();
        PipelineConfig {
            octaves: det.octaves,
            intervals: det.intervals,
            contrast_thresh: det.contrast_thresh,
            edge_thresh: det.edge_thresh,
            border_margin_k: det.border_margin_k,
            k_template: cur.k_template,
            corr_mask_thresh: cur.corr_mask_thresh,
            min_span_frac: cur.min_span_frac,
            max_step_px: cur.max_step_px,
            view_span: cur.view_span,
            search_radius: cur.search_radius,
            max_slope_px_per_view: cur.max_slope_px_per_view,
            planar_thresh: th.planar_thresh,
            slope_thresh: th.slope_thresh,
            xu_thresh: th.xu_thresh,
            min_samples: th.min_samples,
        }
    }
}

impl PipelineConfig {
    /// Reads a config file; absent keys keep their defaults, unknown keys are
    /// rejected.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::format(format!("{}: {}", path.display(), e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(msg: String) -> Result<()> {
            Err(Error::config(msg))
        }
        if self.octaves < 1 || self.intervals < 1 {
            return bad(format!(
                "octaves ({}) and intervals ({}) must be at least 1",
                self.octaves, self.intervals
            ));
        }
        if !(self.contrast_thresh > 0.0) {
            return bad(format!("contrast_thresh must be positive, got {}", self.contrast_thresh));
        }
        if !(self.edge_thresh >= 1.0) {
            return bad(format!("edge_thresh must be at least 1, got {}", self.edge_thresh));
        }
        if !(self.border_margin_k >= 0.0) {
            return bad(format!("border_margin_k must be non-negative, got {}", self.border_margin_k));
        }
        if !(self.k_template > 0.0) {
            return bad(format!("k_template must be positive, got {}", self.k_template));
        }
        if !(self.corr_mask_thresh > 0.0 && self.corr_mask_thresh < 1.0) {
            return bad(format!(
                "corr_mask_thresh must lie in (0, 1), got {}",
                self.corr_mask_thresh
            ));
        }
        if !(self.min_span_frac > 0.0 && self.min_span_frac <= 1.0) {
            return bad(format!(
                "min_span_frac must lie in (0, 1], got {}",
                self.min_span_frac
            ));
        }
        if !(self.max_step_px > 0.0) {
            return bad(format!("max_step_px must be positive, got {}", self.max_step_px));
        }
        if let Some(span) = self.view_span {
            if span < 3 || span % 2 == 0 {
                return bad(format!("view_span must be odd and at least 3, got {}", span));
            }
        }
        if let Some(r) = self.search_radius {
            if r == 0 {
                return bad("search_radius must be positive".to_string());
            }
        }
        if let Some(m) = self.max_slope_px_per_view {
            if !(m > 0.0) {
                return bad(format!("max_slope_px_per_view must be positive, got {}", m));
            }
        }
        if !(self.planar_thresh > 0.0) {
            return bad(format!("planar_thresh must be positive, got {}", self.planar_thresh));
        }
        if !(self.slope_thresh > 0.0) {
            return bad(format!("slope_thresh must be positive, got {}", self.slope_thresh));
        }
        if !(self.xu_thresh > 0.0) {
            return bad(format!("xu_thresh must be positive, got {}", self.xu_thresh));
        }
        if self.min_samples < 4 {
            return bad(format!(
                "min_samples must be at least 4 (a 4D plane pair needs 4 rows), got {}",
                self.min_samples
            ));
        }
        Ok(())
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            octaves: self.octaves,
            intervals: self.intervals,
            contrast_thresh: self.contrast_thresh,
            edge_thresh: self.edge_thresh,
            border_margin_k: self.border_margin_k,
        }
    }

    pub fn curve(&self) -> CurveConfig {
        CurveConfig {
            k_template: self.k_template,
            corr_mask_thresh: self.corr_mask_thresh,
            min_span_frac: self.min_span_frac,
            max_step_px: self.max_step_px,
            view_span: self.view_span,
            search_radius: self.search_radius,
            max_slope_px_per_view: self.max_slope_px_per_view,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            planar_thresh: self.planar_thresh,
            slope_thresh: self.slope_thresh,
            xu_thresh: self.xu_thresh,
            min_samples: self.min_samples,
        }
    }
}
