//! Distinguishing refracted from Lambertian image features in a single 4D light field.
//!
//! A Lambertian scene point traces straight, equal-slope lines through the light
//! field's epipolar plane images; texture seen through a refractive object does
//! not. This crate detects keypoints in the central view, tracks each one across
//! the central row and column of views with Gaussian-weighted normalized
//! cross-correlation, and tests the resulting feature curves against the 4D
//! point-plane model:
//!
//! 1. [`lf`] — in-memory 4D light field, on-disk directory format, EPI slicing.
//! 2. [`keypoint`] — difference-of-Gaussians blob detector (pluggable via a
//!    plain-text keypoint format).
//! 3. [`curves`] — templates, WNCC, correlation EPIs, feature-curve extraction.
//! 4. [`fit`] — 4D plane fit (two normals via SVD), single-hyperplane baseline,
//!    slope consistency, and the Lambertian/refracted/indeterminate verdict.
//! 5. [`synth`] — ray-traced synthetic light fields of textured scenes with
//!    refractive sphere/cylinder primitives and analytic ground-truth masks.
//! 6. [`eval`] — TPR/FPR evaluation against ground truth, threshold sweeps,
//!    baseline comparison, report emission.
//!
//! The per-keypoint and per-scanline hot loops run on rayon when the `parallel`
//! feature (default) is enabled; without it everything falls back to sequential
//! iteration with identical results.

// Validations use `!(x > 0.0)` instead of `x <= 0.0` on purpose: the negated
// form also rejects NaN, which the suggested rewrite would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod curves;
pub mod error;
pub mod eval;
pub mod fit;
pub mod image;
pub mod keypoint;
pub mod lf;
pub mod parallel;
pub mod pipeline;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use image::Image;
pub use lf::{LightField, LfMetadata, Epi, Orientation};
pub use keypoint::Keypoint;
pub use curves::{FeatureCurve, CorrelationEpi, Template};
pub use fit::{FeatureLabel, PlaneFit, HyperplaneFit, SlopeReport, Verdict};
pub use synth::{SceneSpec, GroundTruth};
pub use eval::{EvalResult, Method};
pub use pipeline::{classify_lightfield, ClassificationReport, ClassifiedFeature, FeatureResult};
