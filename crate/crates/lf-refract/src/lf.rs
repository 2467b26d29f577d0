//! 4D light field storage and epipolar-plane-image (EPI) slicing.
//!
//! A light field is an n_s×n_t grid of grayscale views, each n_u×n_v pixels.
//! View coordinates (s,t) are integer "view" units centered on the central
//! view; pixel coordinates (u,v) have integer centers. On disk a light field
//! is a directory holding `manifest.json` plus one 16-bit grayscale PNG per
//! view named `view_{t}_{s}.png` (zero-based grid indices).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfMetadata {
    /// Camera spacing in meters per view step along s; None when unknown
    /// (all geometry then works in units of views).
    pub baseline_s: Option<f64>,
    pub baseline_t: Option<f64>,
    /// Separation D between the camera plane and the reference plane; only
    /// the ratio D/depth matters for slopes, so 1.0 is a fine default.
    pub plane_sep_d: f64,
    pub source: String,
}

impl Default for LfMetadata {
    fn default() -> Self {
        LfMetadata {
            baseline_s: None,
            baseline_t: None,
            plane_sep_d: 1.0,
            source: String::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LightField {
    n_s: usize,
    n_t: usize,
    n_u: usize,
    n_v: usize,
    /// Views in row-major grid order, index = t * n_s + s.
    views: Vec<Image>,
    pub meta: LfMetadata,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    n_s: usize,
    n_t: usize,
    n_u: usize,
    n_v: usize,
    #[serde(default)]
    baseline_s: Option<f64>,
    #[serde(default)]
    baseline_t: Option<f64>,
    #[serde(default = "default_plane_sep", rename = "plane_sep_D")]
    plane_sep_d: f64,
    #[serde(default)]
    source: String,
}

fn default_plane_sep() -> f64 {
    1.0
}

fn check_grid(n_s: usize, n_t: usize) -> Result<()> {
    if n_s < 3 || n_t < 3 || n_s.is_multiple_of(2) || n_t.is_multiple_of(2) {
        return Err(Error::format(format!(
            "grid dimensions must be odd and at least 3, got {}x{}",
            n_s, n_t
        )));
    }
    Ok(())
}

fn check_meta(meta: &LfMetadata) -> Result<()> {
    for (name, b) in [("baseline_s", meta.baseline_s), ("baseline_t", meta.baseline_t)] {
        if let Some(b) = b {
            if !(b > 0.0) {
                return Err(Error::format(format!("{} must be positive, got {}", name, b)));
            }
        }
    }
    if !(meta.plane_sep_d > 0.0) {
        return Err(Error::format(format!(
            "plane_sep_D must be positive, got {}",
            meta.plane_sep_d
        )));
    }
    Ok(())
}

impl LightField {
    /// Builds a light field from views in grid order (index = t * n_s + s),
    /// validating grid shape, view consistency, and sample range.
    pub fn new(n_s: usize, n_t: usize, views: Vec<Image>, meta: LfMetadata) -> Result<Self> {
        check_grid(n_s, n_t)?;
        check_meta(&meta)?;
        if views.len() != n_s * n_t {
            return Err(Error::format(format!(
                "expected {} views for a {}x{} grid, got {}",
                n_s * n_t,
                n_s,
                n_t,
                views.len()
            )));
        }
        let (n_u, n_v) = (views[0].width(), views[0].height());
        if n_u == 0 || n_v == 0 {
            return Err(Error::format("views must be non-empty".to_string()));
        }
        for (i, view) in views.iter().enumerate() {
            if view.width() != n_u || view.height() != n_v {
                return Err(Error::format(format!(
                    "view {} is {}x{}, expected {}x{}",
                    i,
                    view.width(),
                    view.height(),
                    n_u,
                    n_v
                )));
            }
            if !view.all_finite_unit() {
                return Err(Error::format(format!(
                    "view {} contains samples outside [0,1]",
                    i
                )));
            }
        }
        Ok(LightField {
            n_s,
            n_t,
            n_u,
            n_v,
            views,
            meta,
        })
    }

    pub fn from_fn(
        n_s: usize,
        n_t: usize,
        meta: LfMetadata,
        f: impl Fn(usize, usize) -> Image,
    ) -> Result<Self> {
        let mut views = Vec::with_capacity(n_s * n_t);
        for t in 0..n_t {
            for s in 0..n_s {
                views.push(f(s, t));
            }
        }
        LightField::new(n_s, n_t, views, meta)
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn n_u(&self) -> usize {
        self.n_u
    }
    pub fn n_v(&self) -> usize {
        self.n_v
    }

    /// Central view grid index along s.
    pub fn s_center(&self) -> usize {
        (self.n_s - 1) / 2
    }
    pub fn t_center(&self) -> usize {
        (self.n_t - 1) / 2
    }

    pub fn view(&self, s: usize, t: usize) -> &Image {
        assert!(s < self.n_s && t < self.n_t, "view index out of range");
        &self.views[t * self.n_s + s]
    }

    #[inline]
    pub fn sample(&self, s: usize, t: usize, u: usize, v: usize) -> f32 {
        self.view(s, t).get(u, v)
    }

    pub fn central_view(&self) -> &Image {
        self.view(self.s_center(), self.t_center())
    }

    /// EPI L(s, t*, u, v*): row r holds view (r, t*) sampled along u at v*.
    pub fn horizontal_epi(&self, t_star: usize, v_star: usize) -> Epi {
        assert!(t_star < self.n_t && v_star < self.n_v, "EPI index out of range");
        let data = Image::from_fn(self.n_u, self.n_s, |u, s| self.sample(s, t_star, u, v_star));
        Epi {
            orientation: Orientation::Horizontal,
            fixed_view: t_star,
            fixed_pixel: v_star,
            data,
        }
    }

    /// EPI L(s*, t, u*, v): row r holds view (s*, r) sampled along v at u*.
    pub fn vertical_epi(&self, s_star: usize, u_star: usize) -> Epi {
        assert!(s_star < self.n_s && u_star < self.n_u, "EPI index out of range");
        let data = Image::from_fn(self.n_v, self.n_t, |v, t| self.sample(s_star, t, u_star, v));
        Epi {
            orientation: Orientation::Vertical,
            fixed_view: s_star,
            fixed_pixel: u_star,
            data,
        }
    }

    /// Writes `manifest.json` plus one 16-bit grayscale PNG per view.
    /// Round trip through load_lightfield changes no sample by more than
    /// one quantization step (1/65535).
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::create_dir_all(path).map_err(|e| Error::io_at(path, e))?;
        let manifest = Manifest {
            n_s: self.n_s,
            n_t: self.n_t,
            n_u: self.n_u,
            n_v: self.n_v,
            baseline_s: self.meta.baseline_s,
            baseline_t: self.meta.baseline_t,
            plane_sep_d: self.meta.plane_sep_d,
            source: self.meta.source.clone(),
        };
        let manifest_path = path.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&manifest_path, text).map_err(|e| Error::io_at(&manifest_path, e))?;
        for t in 0..self.n_t {
            for s in 0..self.n_s {
                let view = self.view(s, t);
                let mut buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
                    image::ImageBuffer::new(self.n_u as u32, self.n_v as u32);
                for (u, v, px) in buf.enumerate_pixels_mut() {
                    let x = view.get(u as usize, v as usize).clamp(0.0, 1.0);
                    px.0 = [(x * 65535.0).round() as u16];
                }
                let view_path = path.join(format!("view_{}_{}.png", t, s));
                buf.save(&view_path)
                    .map_err(|e| Error::format(format!("writing {}: {}", view_path.display(), e)))?;
            }
        }
        Ok(())
    }

    /// Loads a light-field directory written by [`LightField::save`] (or any
    /// directory with a compatible manifest plus `view_{t}_{s}.png` or
    /// `.pgm` images, 8- or 16-bit; color inputs are luma-converted).
    pub fn load(path: &Path) -> Result<Self> {
        let manifest_path = path.join("manifest.json");
        if !manifest_path.is_file() {
            return Err(Error::format(format!(
                "missing manifest: {}",
                manifest_path.display()
            )));
        }
        let text =
            std::fs::read_to_string(&manifest_path).map_err(|e| Error::io_at(&manifest_path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        check_grid(manifest.n_s, manifest.n_t)?;
        let meta = LfMetadata {
            baseline_s: manifest.baseline_s,
            baseline_t: manifest.baseline_t,
            plane_sep_d: manifest.plane_sep_d,
            source: manifest.source,
        };
        check_meta(&meta)?;
        let mut views = Vec::with_capacity(manifest.n_s * manifest.n_t);
        for t in 0..manifest.n_t {
            for s in 0..manifest.n_s {
                let img = load_view(path, s, t)?;
                if img.width() != manifest.n_u || img.height() != manifest.n_v {
                    return Err(Error::format(format!(
                        "view_{}_{} is {}x{}, manifest declares {}x{}",
                        t,
                        s,
                        img.width(),
                        img.height(),
                        manifest.n_u,
                        manifest.n_v
                    )));
                }
                views.push(img);
            }
        }
        LightField::new(manifest.n_s, manifest.n_t, views, meta)
    }
}

fn load_view(dir: &Path, s: usize, t: usize) -> Result<Image> {
    let base = format!("view_{}_{}", t, s);
    let path = ["png", "pgm"]
        .iter()
        .map(|ext| dir.join(format!("{}.{}", base, ext)))
        .find(|p| p.is_file())
        .ok_or_else(|| Error::format(format!("missing view image {} in {}", base, dir.display())))?;
    let dynimg = image::open(&path).map_err(Error::from)?;
    Ok(to_gray_unit(&dynimg))
}

/// Converts any decoded image to grayscale in [0,1]. Grayscale inputs map
/// exactly (value / max); color inputs use luma weights 0.299/0.587/0.114.
fn to_gray_unit(img: &image::DynamicImage) -> Image {
    use image::DynamicImage::*;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        ImageLuma8(buf) => Image::from_fn(w, h, |u, v| {
            buf.get_pixel(u as u32, v as u32).0[0] as f32 / 255.0
        }),
        ImageLuma16(buf) => Image::from_fn(w, h, |u, v| {
            buf.get_pixel(u as u32, v as u32).0[0] as f32 / 65535.0
        }),
        other => {
            let rgb = other.to_rgb32f();
            Image::from_fn(w, h, |u, v| {
                let p = rgb.get_pixel(u as u32, v as u32).0;
                (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).clamp(0.0, 1.0)
            })
        }
    }
}

/// A 2D slice of the light field: one row per view along one view axis,
/// sampled along the matching pixel axis.
#[derive(Debug, Clone)]
pub struct Epi {
    pub orientation: Orientation,
    /// The held view index (t* for horizontal, s* for vertical).
    pub fixed_view: usize,
    /// The held pixel coordinate (v* for horizontal, u* for vertical).
    pub fixed_pixel: usize,
    /// Row r = view r along the sliced view axis; width = pixel axis.
    pub data: Image,
}

impl Epi {
    pub fn n_views(&self) -> usize {
        self.data.height()
    }
    pub fn n_pixels(&self) -> usize {
        self.data.width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_lf(n_s: usize, n_t: usize, n_u: usize, n_v: usize) -> LightField {
        LightField::from_fn(n_s, n_t, LfMetadata::default(), |s, t| {
            Image::from_fn(n_u, n_v, |u, v| {
                ((s * 31 + t * 17 + u * 7 + v * 3) % 101) as f32 / 100.0
            })
        })
        .unwrap()
    }

    #[test]
    fn central_view_indices() {
        let lf = test_lf(3, 3, 4, 4);
        assert_eq!((lf.s_center(), lf.t_center()), (1, 1));
        let lf = LightField::from_fn(17, 17, LfMetadata::default(), |s, t| {
            Image::from_fn(2, 2, |_, _| (s * 17 + t) as f32 / 289.0)
        })
        .unwrap();
        assert_eq!((lf.s_center(), lf.t_center()), (8, 8));
        assert_eq!(lf.central_view().get(0, 0), (8 * 17 + 8) as f32 / 289.0);
    }

    #[test]
    fn epi_slicing_matches_samples() {
        let lf = test_lf(3, 5, 6, 4);
        for t in 0..3 {
            for v in 0..4 {
                let epi = lf.horizontal_epi(t, v);
                assert_eq!(epi.n_views(), 3);
                assert_eq!(epi.n_pixels(), 6);
                for s in 0..3 {
                    for u in 0..6 {
                        assert_eq!(epi.data.get(u, s), lf.sample(s, t, u, v));
                    }
                }
            }
        }
        for s in 0..3 {
            for u in 0..6 {
                let epi = lf.vertical_epi(s, u);
                assert_eq!(epi.n_views(), 5);
                assert_eq!(epi.n_pixels(), 4);
                for t in 0..5 {
                    for v in 0..4 {
                        assert_eq!(epi.data.get(v, t), lf.sample(s, t, u, v));
                    }
                }
            }
        }
    }

    #[test]
    fn central_row_of_horizontal_epi_is_central_view_row() {
        let lf = test_lf(5, 5, 8, 8);
        for v in 0..8 {
            let epi = lf.horizontal_epi(lf.t_center(), v);
            for u in 0..8 {
                assert_eq!(epi.data.get(u, lf.s_center()), lf.central_view().get(u, v));
            }
        }
    }

    #[test]
    fn even_grid_rejected() {
        let err = LightField::from_fn(4, 3, LfMetadata::default(), |_, _| Image::new(2, 2))
            .unwrap_err();
        assert!(err.to_string().contains("grid dimensions must be odd"));
    }

    #[test]
    fn inconsistent_view_sizes_rejected() {
        let views = vec![
            Image::new(2, 2),
            Image::new(2, 2),
            Image::new(2, 2),
            Image::new(2, 2),
            Image::new(3, 2),
            Image::new(2, 2),
            Image::new(2, 2),
            Image::new(2, 2),
            Image::new(2, 2),
        ];
        let err = LightField::new(3, 3, views, LfMetadata::default()).unwrap_err();
        assert!(err.to_string().contains("expected 2x2"));
    }

    #[test]
    fn out_of_range_samples_rejected() {
        let err = LightField::from_fn(3, 3, LfMetadata::default(), |_, _| {
            Image::from_fn(2, 2, |_, _| 1.5)
        })
        .unwrap_err();
        assert!(err.to_string().contains("outside [0,1]"));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lf = test_lf(3, 3, 8, 8);
        lf.save(dir.path()).unwrap();
        let lf1 = LightField::load(dir.path()).unwrap();
        for t in 0..3 {
            for s in 0..3 {
                for v in 0..8 {
                    for u in 0..8 {
                        let d = (lf.sample(s, t, u, v) - lf1.sample(s, t, u, v)).abs();
                        assert!(d <= 1.0 / 65535.0 + 1e-9, "delta {} too large", d);
                    }
                }
            }
        }
        // A second round trip must be bit-exact: quantization is idempotent.
        let dir2 = tempfile::tempdir().unwrap();
        lf1.save(dir2.path()).unwrap();
        let lf2 = LightField::load(dir2.path()).unwrap();
        for t in 0..3 {
            for s in 0..3 {
                assert_eq!(lf1.view(s, t).as_slice(), lf2.view(s, t).as_slice());
            }
        }
        assert_eq!(lf1.meta, lf.meta);
    }

    #[test]
    fn load_8bit_white_views() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = r#"{"n_s":3,"n_t":3,"n_u":8,"n_v":8}"#;
        std::fs::write(dir.path().join("manifest.json"), manifest).unwrap();
        for t in 0..3 {
            for s in 0..3 {
                let buf: image::ImageBuffer<image::Luma<u8>, Vec<u8>> =
                    image::ImageBuffer::from_pixel(8, 8, image::Luma([255u8]));
                buf.save(dir.path().join(format!("view_{}_{}.png", t, s)))
                    .unwrap();
            }
        }
        let lf = LightField::load(dir.path()).unwrap();
        assert_eq!((lf.n_s(), lf.n_t()), (3, 3));
        assert!(lf
            .central_view()
            .as_slice()
            .iter()
            .all(|&x| x == 1.0));
        assert_eq!(lf.meta.plane_sep_d, 1.0);
        assert_eq!(lf.meta.baseline_s, None);
    }

    #[test]
    fn missing_manifest_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = LightField::load(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn manifest_with_even_grid_rejected_before_views() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = r#"{"n_s":4,"n_t":3,"n_u":8,"n_v":8}"#;
        std::fs::write(dir.path().join("manifest.json"), manifest).unwrap();
        let err = LightField::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("grid dimensions must be odd"));
    }
}
