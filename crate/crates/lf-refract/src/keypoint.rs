//! Scale-aware keypoint detection in the central view.
//!
//! The built-in detector is a difference-of-Gaussians blob detector (SIFT-style
//! localization, no descriptors — the downstream distinguisher only needs
//! locations and scales). External detectors can be used instead via the
//! plain-text keypoint format: one `u v scale score` line per keypoint.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::image::Image;

/// Base blur of the finest scale-space level, in pixels.
const SIGMA_MIN: f64 = 1.6;
/// Blur assumed already present in the input image.
const ASSUMED_BLUR: f64 = 0.5;
/// Ratio of blob radius to the DoG sigma at which a blob responds strongest.
const RADIUS_PER_SIGMA: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    /// Subpixel column in the central view.
    pub u0: f64,
    /// Subpixel row in the central view.
    pub v0: f64,
    /// Blob radius in pixels.
    pub scale: f64,
    /// Detector response strength (higher is stronger).
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    pub octaves: usize,
    pub intervals: usize,
    /// Minimum absolute interpolated DoG response, scaled by 1/intervals.
    pub contrast_thresh: f64,
    /// Maximum principal-curvature ratio r; rejects responses with
    /// trace²/det ≥ (r+1)²/r (edge-like rather than blob-like).
    pub edge_thresh: f64,
    /// Keypoints closer than `border_margin_k · scale + 1` to any image edge
    /// are discarded so a full correlation template fits around them.
    pub border_margin_k: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            octaves: 3,
            intervals: 3,
            contrast_thresh: 0.03,
            edge_thresh: 10.0,
            border_margin_k: 5.0,
        }
    }
}

struct Octave {
    dogs: Vec<Image>,
}

fn subtract(a: &Image, b: &Image) -> Image {
    Image::from_fn(a.width(), a.height(), |u, v| a.get(u, v) - b.get(u, v))
}

fn build_octaves(img: &Image, cfg: &DetectorConfig) -> Vec<Octave> {
    let m = cfg.intervals;
    let k = 2f64.powf(1.0 / m as f64);
    let mut current = img.gaussian_blur((SIGMA_MIN * SIGMA_MIN - ASSUMED_BLUR * ASSUMED_BLUR).sqrt());
    let mut octaves = Vec::new();
    for _o in 0..cfg.octaves {
        if current.width() < 8 || current.height() < 8 {
            break;
        }
        let mut gaussians = vec![current.clone()];
        let mut sigma = SIGMA_MIN;
        for _ in 0..m + 2 {
            let next_sigma = sigma * k;
            let extra = (next_sigma * next_sigma - sigma * sigma).sqrt();
            gaussians.push(gaussians.last().unwrap().gaussian_blur(extra));
            sigma = next_sigma;
        }
        let dogs = (0..m + 2)
            .map(|i| subtract(&gaussians[i + 1], &gaussians[i]))
            .collect();
        // Level m carries blur 2·SIGMA_MIN; decimating by 2 restores SIGMA_MIN
        // in the next octave's pixel units.
        current = gaussians[m].decimate2();
        octaves.push(Octave { dogs });
    }
    octaves
}

fn is_extremum(dogs: &[Image], x: usize, y: usize, l: usize) -> bool {
    let val = dogs[l].get(x, y);
    let mut any_greater = false;
    let mut any_less = false;
    for dl in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dl == 0 && dy == 0 && dx == 0 {
                    continue;
                }
                let n = dogs[(l as i64 + dl) as usize]
                    .get((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                if n >= val {
                    any_greater = true;
                }
                if n <= val {
                    any_less = true;
                }
                if any_greater && any_less {
                    return false;
                }
            }
        }
    }
    true
}

fn dog_derivatives(dogs: &[Image], x: usize, y: usize, l: usize) -> (Vector3<f64>, Matrix3<f64>) {
    let d = |dx: i64, dy: i64, dl: i64| -> f64 {
        dogs[(l as i64 + dl) as usize].get((x as i64 + dx) as usize, (y as i64 + dy) as usize)
            as f64
    };
    let g = Vector3::new(
        (d(1, 0, 0) - d(-1, 0, 0)) / 2.0,
        (d(0, 1, 0) - d(0, -1, 0)) / 2.0,
        (d(0, 0, 1) - d(0, 0, -1)) / 2.0,
    );
    let c = d(0, 0, 0);
    let dxx = d(1, 0, 0) - 2.0 * c + d(-1, 0, 0);
    let dyy = d(0, 1, 0) - 2.0 * c + d(0, -1, 0);
    let dss = d(0, 0, 1) - 2.0 * c + d(0, 0, -1);
    let dxy = (d(1, 1, 0) - d(1, -1, 0) - d(-1, 1, 0) + d(-1, -1, 0)) / 4.0;
    let dxs = (d(1, 0, 1) - d(-1, 0, 1) - d(1, 0, -1) + d(-1, 0, -1)) / 4.0;
    let dys = (d(0, 1, 1) - d(0, -1, 1) - d(0, 1, -1) + d(0, -1, -1)) / 4.0;
    let h = Matrix3::new(dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss);
    (g, h)
}

struct Candidate {
    u0: f64,
    v0: f64,
    scale: f64,
    score: f64,
    octave: usize,
}

fn localize(
    dogs: &[Image],
    cfg: &DetectorConfig,
    octave: usize,
    x0: usize,
    y0: usize,
    l0: usize,
) -> Option<Candidate> {
    let m = cfg.intervals;
    let (w, h) = (dogs[0].width(), dogs[0].height());
    let (mut x, mut y, mut l) = (x0, y0, l0);
    let mut best: Option<(Vector3<f64>, Vector3<f64>)> = None;
    for _ in 0..5 {
        let (g, hess) = dog_derivatives(dogs, x, y, l);
        let off = hess.lu().solve(&(-g))?;
        if off.amax() <= 0.5 {
            best = Some((g, off));
            break;
        }
        let nx = (x as i64 + off[0].round() as i64).clamp(1, w as i64 - 2) as usize;
        let ny = (y as i64 + off[1].round() as i64).clamp(1, h as i64 - 2) as usize;
        let nl = (l as i64 + off[2].round() as i64).clamp(1, m as i64) as usize;
        if (nx, ny, nl) == (x, y, l) {
            // Clamping pinned us to the border of the search volume; treat the
            // clipped offset as final rather than looping forever.
            best = Some((g, off.map(|o| o.clamp(-0.5, 0.5))));
            break;
        }
        x = nx;
        y = ny;
        l = nl;
    }
    let (g, off) = best?;
    let val = dogs[l].get(x, y) as f64;
    let contrast = val + 0.5 * g.dot(&off);
    if contrast.abs() < cfg.contrast_thresh / m as f64 {
        return None;
    }
    // Blob-vs-edge test on the spatial Hessian.
    let (_, hess) = dog_derivatives(dogs, x, y, l);
    let (dxx, dyy, dxy) = (hess[(0, 0)], hess[(1, 1)], hess[(0, 1)]);
    let det = dxx * dyy - dxy * dxy;
    let tr = dxx + dyy;
    let r = cfg.edge_thresh;
    if det <= 0.0 || tr * tr / det >= (r + 1.0) * (r + 1.0) / r {
        return None;
    }
    let step = (1usize << octave) as f64;
    let sigma = SIGMA_MIN * 2f64.powf(octave as f64 + (l as f64 + off[2]) / m as f64);
    Some(Candidate {
        u0: (x as f64 + off[0]) * step,
        v0: (y as f64 + off[1]) * step,
        scale: sigma * RADIUS_PER_SIGMA,
        score: contrast.abs(),
        octave,
    })
}

/// Detects DoG blob keypoints in a grayscale image. Returns keypoints sorted
/// by descending score, deduplicated within 1 pixel, each far enough from the
/// border that a `border_margin_k · scale` template fits around it.
pub fn detect_keypoints(img: &Image, cfg: &DetectorConfig) -> Result<Vec<Keypoint>> {
    if img.width() < 32 || img.height() < 32 {
        return Err(Error::format(format!(
            "image too small for keypoint detection: {}x{} (minimum 32x32)",
            img.width(),
            img.height()
        )));
    }
    if cfg.octaves == 0 || cfg.intervals == 0 {
        return Err(Error::config("octaves and intervals must be at least 1".to_string()));
    }
    let m = cfg.intervals;
    let prefilter = 0.5 * cfg.contrast_thresh / m as f64;
    let mut candidates = Vec::new();
    for (o, oct) in build_octaves(img, cfg).iter().enumerate() {
        let (w, h) = (oct.dogs[0].width(), oct.dogs[0].height());
        for l in 1..=m {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    if (oct.dogs[l].get(x, y) as f64).abs() < prefilter {
                        continue;
                    }
                    if !is_extremum(&oct.dogs, x, y, l) {
                        continue;
                    }
                    if let Some(c) = localize(&oct.dogs, cfg, o, x, y, l) {
                        candidates.push(c);
                    }
                }
            }
        }
    }

    // Border margin in the full-resolution frame.
    let (w, h) = (img.width() as f64, img.height() as f64);
    candidates.retain(|c| {
        let margin = cfg.border_margin_k * c.scale + 1.0;
        c.u0 >= margin && c.u0 <= w - 1.0 - margin && c.v0 >= margin && c.v0 <= h - 1.0 - margin
    });

    // Strongest first; suppress anything within 1 px of an already kept
    // keypoint (covers same-octave duplicates and the same blob re-detected
    // at a neighboring octave).
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.u0.total_cmp(&b.u0))
            .then(a.v0.total_cmp(&b.v0))
            .then(a.octave.cmp(&b.octave))
    });
    let mut kept: Vec<Candidate> = Vec::new();
    for c in candidates {
        let dup = kept
            .iter()
            .any(|k| (k.u0 - c.u0).powi(2) + (k.v0 - c.v0).powi(2) <= 1.0);
        if !dup {
            kept.push(c);
        }
    }
    Ok(kept
        .into_iter()
        .map(|c| Keypoint {
            u0: c.u0,
            v0: c.v0,
            scale: c.scale,
            score: c.score,
        })
        .collect())
}

fn validate(kp: &Keypoint, n_u: usize, n_v: usize) -> Result<()> {
    if !(kp.u0 >= 0.0 && kp.u0 < n_u as f64 && kp.v0 >= 0.0 && kp.v0 < n_v as f64) {
        return Err(Error::format(format!(
            "keypoint ({}, {}) outside {}x{} image",
            kp.u0, kp.v0, n_u, n_v
        )));
    }
    if !(kp.scale >= 1.0) || !kp.score.is_finite() {
        return Err(Error::format(format!(
            "keypoint has invalid scale {} or score {}",
            kp.scale, kp.score
        )));
    }
    Ok(())
}

/// Parses a keypoint list: one `u v scale score` line per keypoint, blank
/// lines and `#` comments ignored. Coordinates are checked against the given
/// image bounds.
pub fn load_keypoints(path: &Path, n_u: usize, n_v: usize) -> Result<Vec<Keypoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::format(format!("line {}: bad number {:?}", lineno + 1, s)))
        };
        if fields.len() != 4 {
            return Err(Error::format(format!(
                "line {}: expected `u v scale score`, got {} fields",
                lineno + 1,
                fields.len()
            )));
        }
        let kp = Keypoint {
            u0: parse(fields[0])?,
            v0: parse(fields[1])?,
            scale: parse(fields[2])?,
            score: parse(fields[3])?,
        };
        validate(&kp, n_u, n_v)?;
        out.push(kp);
    }
    Ok(out)
}

/// Writes keypoints in the text format read by [`load_keypoints`]: exactly
/// one `u v scale score` line per keypoint. Floats use the shortest
/// round-trip representation, so load(save(k)) == k exactly.
pub fn save_keypoints(kps: &[Keypoint], path: &Path) -> Result<()> {
    let mut text = String::new();
    for kp in kps {
        text.push_str(&format!("{} {} {} {}\n", kp.u0, kp.v0, kp.scale, kp.score));
    }
    std::fs::write(path, text).map_err(|e| Error::io_at(path, e))
}
