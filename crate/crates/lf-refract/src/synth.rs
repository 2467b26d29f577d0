//! Ray-traced synthetic light fields: a pinhole camera array looking at a
//! textured frontal background plane, optionally through a refractive sphere
//! or cylinder, with an analytic ground-truth refraction mask.
//!
//! World frame: x right, y down, z forward. Camera (s,t) sits at
//! (s·baseline_s, t·baseline_t, 0) with s,t centered view indices, all optical
//! axes along +z. A pixel (iu,iv) fires the chief ray
//! ((iu−cu)/f, (iv−cv)/f, 1). With u in pixels and s in views, a background
//! point at depth z moves du/ds = −f·baseline/z pixels per view, so the
//! metadata plane separation is D = f·baseline and the Lambertian slope is
//! −D/z.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::lf::{LfMetadata, LightField};
use crate::parallel;

pub const PRESETS: [&str; 4] = [
    "lambertian",
    "sphere_large_baseline",
    "sphere_small_baseline",
    "cylinder_small_baseline",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    pub background: Background,
    pub refractor: Refractor,
    pub camera: CameraSpec,
    /// 2×2 supersampling per pixel (off by default: one chief ray).
    #[serde(default)]
    pub supersample: bool,
    /// Optional additive highlight on the refractor surface; exists only to
    /// exercise the known specular failure mode.
    #[serde(default)]
    pub specular: Option<Specular>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Background {
    /// Depth of the frontal background plane.
    pub z: f64,
    pub texture: TextureSpec,
    /// World size of one texture cell/texel.
    pub texel_size: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TextureSpec {
    Checkerboard,
    Noise,
    Image { path: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Refractor {
    None,
    Sphere {
        center: [f64; 3],
        radius: f64,
        ior: f64,
    },
    Cylinder {
        axis: CylinderAxis,
        center: [f64; 3],
        radius: f64,
        ior: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CylinderAxis {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraSpec {
    pub n_s: usize,
    pub n_t: usize,
    /// Camera spacing per view step, world units.
    pub baseline_s: f64,
    pub baseline_t: f64,
    /// Focal length in pixels.
    pub focal_px: f64,
    pub principal: [f64; 2],
    pub n_u: usize,
    pub n_v: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Specular {
    /// Direction toward the light source.
    pub light_dir: [f64; 3],
    pub strength: f64,
    pub sharpness: f64,
}

/// Analytic ground truth for one rendered scene.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Central-view mask, 1.0 where the chief ray intersects the refractor.
    pub refr_mask: Image,
    /// Background depth per pixel; 0 inside the mask.
    pub depth_map: Image,
}

/// Fixed-point scale used when writing depth maps to 16-bit PGM.
pub const DEPTH_PGM_SCALE: f64 = 10000.0;

impl GroundTruth {
    pub fn is_refracted(&self, u: usize, v: usize) -> bool {
        self.refr_mask.get(u, v) >= 0.5
    }

    /// Writes `ground_truth.png` (8-bit, 0/255) and `depth.pgm` (16-bit,
    /// depth · 10000) into the directory.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io_at(dir, e))?;
        let (w, h) = (self.refr_mask.width(), self.refr_mask.height());
        let mut mask: image::ImageBuffer<image::Luma<u8>, Vec<u8>> =
            image::ImageBuffer::new(w as u32, h as u32);
        for (u, v, px) in mask.enumerate_pixels_mut() {
            px.0 = [if self.is_refracted(u as usize, v as usize) { 255 } else { 0 }];
        }
        let mask_path = dir.join("ground_truth.png");
        mask.save(&mask_path)
            .map_err(|e| Error::format(format!("writing {}: {}", mask_path.display(), e)))?;

        let mut depth: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
            image::ImageBuffer::new(w as u32, h as u32);
        for (u, v, px) in depth.enumerate_pixels_mut() {
            let d = self.depth_map.get(u as usize, v as usize) as f64 * DEPTH_PGM_SCALE;
            px.0 = [d.round().clamp(0.0, 65535.0) as u16];
        }
        let depth_path = dir.join("depth.pgm");
        depth
            .save(&depth_path)
            .map_err(|e| Error::format(format!("writing {}: {}", depth_path.display(), e)))?;
        Ok(())
    }

    /// Loads a refraction mask image (anything ≥ half intensity is masked).
    pub fn load_mask(path: &Path) -> Result<Image> {
        let img = image::open(path).map_err(Error::from)?;
        let gray = img.to_luma32f();
        let (w, h) = (gray.width() as usize, gray.height() as usize);
        Ok(Image::from_fn(w, h, |u, v| {
            if gray.get_pixel(u as u32, v as u32).0[0] >= 0.5 {
                1.0
            } else {
                0.0
            }
        }))
    }
}

// ---------------------------------------------------------------------------
// Vector helpers (tiny, fixed-size — no need for a linear algebra type here).

type Vec3 = [f64; 3];

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}
fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / dot(a, a).sqrt())
}

/// Snell refraction of unit direction `d` at a surface with unit normal `n`
/// opposing `d` (n·d < 0); `eta` = n_incident/n_transmitted. None on total
/// internal reflection.
fn refract(d: Vec3, n: Vec3, eta: f64) -> Option<Vec3> {
    let cos_i = -dot(d, n);
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i);
    if sin2_t > 1.0 {
        return None;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    Some(normalize(add(scale(d, eta), scale(n, eta * cos_i - cos_t))))
}

/// Smallest `t > t_min` with |o + t·d − c|² = r² in the subspace picked by
/// `mask` (all axes for a sphere; the cylinder drops its axis coordinate).
fn quadratic_hit(o: Vec3, d: Vec3, c: Vec3, r: f64, mask: Vec3, t_min: f64) -> Option<f64> {
    let oc = [
        (o[0] - c[0]) * mask[0],
        (o[1] - c[1]) * mask[1],
        (o[2] - c[2]) * mask[2],
    ];
    let dm = [d[0] * mask[0], d[1] * mask[1], d[2] * mask[2]];
    let a = dot(dm, dm);
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * dot(oc, dm);
    let cc = dot(oc, oc) - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    let t1 = (-b - sqrt_disc) / (2.0 * a);
    let t2 = (-b + sqrt_disc) / (2.0 * a);
    if t1 > t_min {
        Some(t1)
    } else if t2 > t_min {
        Some(t2)
    } else {
        None
    }
}

struct Primitive {
    center: Vec3,
    radius: f64,
    ior: f64,
    /// 1 on the axes participating in the quadratic (cylinder axis dropped).
    mask: Vec3,
}

impl Primitive {
    fn from_spec(r: &Refractor) -> Option<Primitive> {
        match *r {
            Refractor::None => None,
            Refractor::Sphere { center, radius, ior } => Some(Primitive {
                center,
                radius,
                ior,
                mask: [1.0, 1.0, 1.0],
            }),
            Refractor::Cylinder {
                axis,
                center,
                radius,
                ior,
            } => Some(Primitive {
                center,
                radius,
                ior,
                mask: match axis {
                    // A vertical cylinder extends along y: the quadratic acts
                    // in the xz-plane, and vice versa.
                    CylinderAxis::Vertical => [1.0, 0.0, 1.0],
                    CylinderAxis::Horizontal => [0.0, 1.0, 1.0],
                },
            }),
        }
    }

    fn hit(&self, o: Vec3, d: Vec3, t_min: f64) -> Option<f64> {
        quadratic_hit(o, d, self.center, self.radius, self.mask, t_min)
    }

    /// Outward unit normal at a surface point.
    fn normal(&self, p: Vec3) -> Vec3 {
        let d = sub(p, self.center);
        normalize([d[0] * self.mask[0], d[1] * self.mask[1], d[2] * self.mask[2]])
    }
}

/// Traces one ray through the optional refractor. Returns the (x, y) world
/// hit point on the background plane plus the accumulated additive highlight,
/// or None when the ray is lost (total internal reflection or deflected away
/// from the plane).
fn trace_to_background(
    prim: Option<&Primitive>,
    specular: Option<&Specular>,
    z_bg: f64,
    mut o: Vec3,
    mut d: Vec3,
) -> Option<(f64, f64, f64)> {
    let mut highlight = 0.0;
    if let Some(p) = prim {
        if let Some(t_in) = p.hit(o, d, 1e-9) {
            let entry = add(o, scale(d, t_in));
            let n = p.normal(entry);
            if let Some(spec) = specular {
                let l = normalize(spec.light_dir);
                let r = sub(scale(n, 2.0 * dot(n, l)), l);
                highlight = spec.strength * dot(r, scale(d, -1.0)).max(0.0).powf(spec.sharpness);
            }
            let inside = refract(d, n, 1.0 / p.ior)?;
            let t_out = p.hit(entry, inside, 1e-9)?;
            let exit = add(entry, scale(inside, t_out));
            // Outward normal flipped to oppose the interior direction.
            let n_out = scale(p.normal(exit), -1.0);
            let out = refract(inside, n_out, p.ior)?;
            o = exit;
            d = out;
        }
    }
    if d[2] <= 1e-12 {
        return None;
    }
    let t = (z_bg - o[2]) / d[2];
    if t <= 0.0 {
        return None;
    }
    Some((o[0] + t * d[0], o[1] + t * d[1], highlight))
}

// ---------------------------------------------------------------------------
// Textures

enum TextureSampler {
    Checkerboard { texel: f64 },
    Noise { texel: f64, seed: u64 },
    Image { img: Image, texel: f64 },
}

fn hash2(ix: i64, iy: i64, seed: u64) -> f32 {
    let mut h = seed
        ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> 40) as f32 / (1u64 << 24) as f32
}

fn smootherstep(t: f64) -> f64 {
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// One octave of value noise: smoothly interpolated lattice hashes.
fn value_noise(x: f64, y: f64, seed: u64) -> f32 {
    let (ix, iy) = (x.floor() as i64, y.floor() as i64);
    let (fx, fy) = (smootherstep(x - x.floor()), smootherstep(y - y.floor()));
    let v00 = hash2(ix, iy, seed) as f64;
    let v10 = hash2(ix + 1, iy, seed) as f64;
    let v01 = hash2(ix, iy + 1, seed) as f64;
    let v11 = hash2(ix + 1, iy + 1, seed) as f64;
    let top = v00 + (v10 - v00) * fx;
    let bot = v01 + (v11 - v01) * fx;
    (top + (bot - top) * fy) as f32
}

impl TextureSampler {
    fn build(bg: &Background, seed: u64) -> Result<TextureSampler> {
        if !(bg.texel_size > 0.0) {
            return Err(Error::config(format!(
                "texel_size must be positive, got {}",
                bg.texel_size
            )));
        }
        Ok(match &bg.texture {
            TextureSpec::Checkerboard => TextureSampler::Checkerboard { texel: bg.texel_size },
            TextureSpec::Noise => TextureSampler::Noise {
                texel: bg.texel_size,
                seed,
            },
            TextureSpec::Image { path } => {
                let img = image::open(Path::new(path)).map_err(Error::from)?;
                let gray = img.to_luma32f();
                let (w, h) = (gray.width() as usize, gray.height() as usize);
                TextureSampler::Image {
                    img: Image::from_fn(w, h, |u, v| {
                        gray.get_pixel(u as u32, v as u32).0[0].clamp(0.0, 1.0)
                    }),
                    texel: bg.texel_size,
                }
            }
        })
    }

    fn sample(&self, x: f64, y: f64) -> f32 {
        match self {
            TextureSampler::Checkerboard { texel } => {
                let cell = (x / texel).floor() as i64 + (y / texel).floor() as i64;
                if cell.rem_euclid(2) == 0 {
                    0.85
                } else {
                    0.15
                }
            }
            TextureSampler::Noise { texel, seed } => {
                // Two octaves of band-limited value noise, rescaled into
                // [0.1, 0.9] so quantization never clips.
                let (nx, ny) = (x / texel, y / texel);
                let n = 0.65 * value_noise(nx, ny, *seed)
                    + 0.35 * value_noise(2.0 * nx + 17.0, 2.0 * ny - 9.0, seed.wrapping_add(1));
                0.1 + 0.8 * n
            }
            TextureSampler::Image { img, texel } => {
                // Bilinear with wraparound.
                let (px, py) = (x / texel, y / texel);
                let (x0, y0) = (px.floor(), py.floor());
                let (fx, fy) = ((px - x0) as f32, (py - y0) as f32);
                let (w, h) = (img.width() as i64, img.height() as i64);
                let at = |ix: i64, iy: i64| img.get(
                    ix.rem_euclid(w) as usize,
                    iy.rem_euclid(h) as usize,
                );
                let (x0, y0) = (x0 as i64, y0 as i64);
                let top = at(x0, y0) + (at(x0 + 1, y0) - at(x0, y0)) * fx;
                let bot = at(x0, y0 + 1) + (at(x0 + 1, y0 + 1) - at(x0, y0 + 1)) * fx;
                top + (bot - top) * fy
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering

fn validate_spec(spec: &SceneSpec) -> Result<()> {
    let cam = &spec.camera;
    if cam.n_s < 3 || cam.n_t < 3 || cam.n_s.is_multiple_of(2) || cam.n_t.is_multiple_of(2) {
        return Err(Error::config(format!(
            "camera grid must be odd and at least 3x3, got {}x{}",
            cam.n_s, cam.n_t
        )));
    }
    if !(cam.baseline_s > 0.0 && cam.baseline_t > 0.0 && cam.focal_px > 0.0) {
        return Err(Error::config(
            "baselines and focal length must be positive".to_string(),
        ));
    }
    if cam.n_u < 32 || cam.n_v < 32 {
        return Err(Error::config(format!(
            "view resolution {}x{} too small (minimum 32x32)",
            cam.n_u, cam.n_v
        )));
    }
    if !(spec.background.z > 0.0) {
        return Err(Error::config("background must lie at positive depth".to_string()));
    }
    match spec.refractor {
        Refractor::None => {}
        Refractor::Sphere { center, radius, ior }
        | Refractor::Cylinder {
            center, radius, ior, ..
        } => {
            if !(ior > 1.0) {
                return Err(Error::config(format!("ior must exceed 1, got {}", ior)));
            }
            if !(radius > 0.0) {
                return Err(Error::config(format!("radius must be positive, got {}", radius)));
            }
            if spec.background.z <= center[2] + radius {
                return Err(Error::config(format!(
                    "background z {} must lie behind the refractor (z {} + r {})",
                    spec.background.z, center[2], radius
                )));
            }
        }
    }
    Ok(())
}

fn render_pixel(
    prim: Option<&Primitive>,
    spec: &SceneSpec,
    sampler: &TextureSampler,
    origin: Vec3,
    iu: f64,
    iv: f64,
) -> f32 {
    let cam = &spec.camera;
    let shade = |du: f64, dv: f64| -> f32 {
        let d = normalize([
            (iu + du - cam.principal[0]) / cam.focal_px,
            (iv + dv - cam.principal[1]) / cam.focal_px,
            1.0,
        ]);
        match trace_to_background(prim, spec.specular.as_ref(), spec.background.z, origin, d) {
            Some((x, y, highlight)) => (sampler.sample(x, y) + highlight as f32).clamp(0.0, 1.0),
            None => 0.0, // lost ray (e.g. total internal reflection)
        }
    };
    if spec.supersample {
        let mut acc = 0.0;
        for dv in [-0.25, 0.25] {
            for du in [-0.25, 0.25] {
                acc += shade(du, dv);
            }
        }
        acc / 4.0
    } else {
        shade(0.0, 0.0)
    }
}

/// Renders the full light field plus ground truth. Deterministic for a given
/// (spec, seed): the seed drives only the noise texture. Rows render in
/// parallel; every pixel is an independent pure function.
pub fn render_lightfield(spec: &SceneSpec, seed: u64) -> Result<(LightField, GroundTruth)> {
    validate_spec(spec)?;
    let sampler = TextureSampler::build(&spec.background, seed)?;
    let prim = Primitive::from_spec(&spec.refractor);
    let cam = &spec.camera;
    let (s_c, t_c) = ((cam.n_s / 2) as f64, (cam.n_t / 2) as f64);

    let mut views = Vec::with_capacity(cam.n_s * cam.n_t);
    for t in 0..cam.n_t {
        for s in 0..cam.n_s {
            let origin = [
                (s as f64 - s_c) * cam.baseline_s,
                (t as f64 - t_c) * cam.baseline_t,
                0.0,
            ];
            let mut data = vec![0.0f32; cam.n_u * cam.n_v];
            parallel::for_each_row(&mut data, cam.n_u, |v, row| {
                for (u, px) in row.iter_mut().enumerate() {
                    *px = render_pixel(prim.as_ref(), spec, &sampler, origin, u as f64, v as f64);
                }
            });
            views.push(Image::from_vec(cam.n_u, cam.n_v, data)?);
        }
    }
    let meta = LfMetadata {
        baseline_s: Some(cam.baseline_s),
        baseline_t: Some(cam.baseline_t),
        plane_sep_d: cam.focal_px * cam.baseline_s,
        source: "synthetic render".to_string(),
    };
    let lf = LightField::new(cam.n_s, cam.n_t, views, meta)?;

    // Ground truth from the central camera's chief rays.
    let refr_mask = Image::from_fn(cam.n_u, cam.n_v, |u, v| {
        let d = normalize([
            (u as f64 - cam.principal[0]) / cam.focal_px,
            (v as f64 - cam.principal[1]) / cam.focal_px,
            1.0,
        ]);
        match &prim {
            Some(p) if p.hit([0.0, 0.0, 0.0], d, 1e-9).is_some() => 1.0,
            _ => 0.0,
        }
    });
    let depth_map = Image::from_fn(cam.n_u, cam.n_v, |u, v| {
        if refr_mask.get(u, v) >= 0.5 {
            0.0
        } else {
            spec.background.z as f32
        }
    });
    Ok((
        lf,
        GroundTruth {
            refr_mask,
            depth_map,
        },
    ))
}

/// Built-in scenes mirroring the evaluation configurations: a 9×9 grid of
/// 256×256 views at two baseline scales (ratio small/large = 3.7/16.1), a
/// refractor-free reference, and a vertical refractive cylinder.
pub fn preset_scene(name: &str) -> Result<SceneSpec> {
    const LARGE_BASELINE: f64 = 0.0075;
    const SMALL_BASELINE: f64 = LARGE_BASELINE * 3.7 / 16.1;
    let camera = |baseline: f64| CameraSpec {
        n_s: 9,
        n_t: 9,
        baseline_s: baseline,
        baseline_t: baseline,
        focal_px: 320.0,
        principal: [127.5, 127.5],
        n_u: 256,
        n_v: 256,
    };
    let background = Background {
        z: 2.0,
        texture: TextureSpec::Noise,
        texel_size: 0.05,
    };
    let sphere = Refractor::Sphere {
        center: [0.0, 0.0, 1.3],
        radius: 0.28,
        ior: 1.5,
    };
    let spec = match name {
        "lambertian" => SceneSpec {
            background,
            refractor: Refractor::None,
            camera: camera(LARGE_BASELINE),
            supersample: false,
            specular: None,
        },
        "sphere_large_baseline" => SceneSpec {
            background,
            refractor: sphere,
            camera: camera(LARGE_BASELINE),
            supersample: false,
            specular: None,
        },
        "sphere_small_baseline" => SceneSpec {
            background,
            refractor: sphere,
            camera: camera(SMALL_BASELINE),
            supersample: false,
            specular: None,
        },
        "cylinder_small_baseline" => SceneSpec {
            background,
            refractor: Refractor::Cylinder {
                axis: CylinderAxis::Vertical,
                center: [0.0, 0.0, 1.3],
                radius: 0.18,
                ior: 1.5,
            },
            camera: camera(SMALL_BASELINE),
            supersample: false,
            specular: None,
        },
        other => {
            return Err(Error::config(format!(
                "unknown preset {:?} (available: {})",
                other,
                PRESETS.join(", ")
            )))
        }
    };
    Ok(spec)
}
