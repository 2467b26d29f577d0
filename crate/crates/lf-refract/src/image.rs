//! Grayscale float image in [0,1], row-major, pixel centers on integer
//! coordinates. `u` is the horizontal (column) axis, `v` the vertical (row)
//! axis, matching the light-field (u,v) pixel axes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let mut img = Image::new(width, height);
        for v in 0..height {
            for u in 0..width {
                img.data[v * width + u] = f(u, v);
            }
        }
        img
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::format(format!(
                "image buffer length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, val: f32) {
        self.data[v * self.width + u] = val;
    }

    /// Clamp-to-edge access for signed coordinates.
    #[inline]
    pub fn get_clamped(&self, u: i64, v: i64) -> f32 {
        let u = u.clamp(0, self.width as i64 - 1) as usize;
        let v = v.clamp(0, self.height as i64 - 1) as usize;
        self.get(u, v)
    }

    pub fn row(&self, v: usize) -> &[f32] {
        &self.data[v * self.width..(v + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn all_finite_unit(&self) -> bool {
        self.data.iter().all(|x| x.is_finite() && (0.0..=1.0).contains(x))
    }

    /// Separable Gaussian blur with clamp-to-edge borders. Kernel radius 3σ.
    pub fn gaussian_blur(&self, sigma: f64) -> Image {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as i64;
        let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
        let denom = 2.0 * sigma * sigma;
        for k in -radius..=radius {
            kernel.push((-(k * k) as f64 / denom).exp());
        }
        let sum: f64 = kernel.iter().sum();
        let kernel: Vec<f32> = kernel.iter().map(|w| (w / sum) as f32).collect();

        let mut tmp = Image::new(self.width, self.height);
        for v in 0..self.height {
            for u in 0..self.width {
                let mut acc = 0.0;
                for (ki, w) in kernel.iter().enumerate() {
                    let uu = u as i64 + ki as i64 - radius;
                    acc += w * self.get_clamped(uu, v as i64);
                }
                tmp.set(u, v, acc);
            }
        }
        let mut out = Image::new(self.width, self.height);
        for v in 0..self.height {
            for u in 0..self.width {
                let mut acc = 0.0;
                for (ki, w) in kernel.iter().enumerate() {
                    let vv = v as i64 + ki as i64 - radius;
                    acc += w * tmp.get_clamped(u as i64, vv);
                }
                out.set(u, v, acc);
            }
        }
        out
    }

    /// Downsample by an integer factor, averaging each factor×factor block.
    pub fn downsample_box(&self, factor: usize) -> Result<Image> {
        if factor == 0 || !self.width.is_multiple_of(factor) || !self.height.is_multiple_of(factor) {
            return Err(Error::format(format!(
                "box downsample factor {} does not divide {}x{}",
                factor, self.width, self.height
            )));
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let norm = 1.0 / (factor * factor) as f32;
        Ok(Image::from_fn(w, h, |u, v| {
            let mut acc = 0.0;
            for dv in 0..factor {
                for du in 0..factor {
                    acc += self.get(u * factor + du, v * factor + dv);
                }
            }
            acc * norm
        }))
    }

    /// Half-resolution image by 2x2 nearest subsampling (pyramid decimation).
    pub fn decimate2(&self) -> Image {
        let (w, h) = (self.width / 2, self.height / 2);
        Image::from_fn(w.max(1), h.max(1), |u, v| self.get(u * 2, v * 2))
    }
}
