//! Linear float image buffers and 8-bit display images.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major RGB image, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[T; 3]>,
}

impl<T: Real> RgbImage<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![[T::zero(); 3]; width * height] }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<[T; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!("{}×{} image needs {} pixels, got {}", width, height, width * height, data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, v: [T; 3]) -> Self {
        Self { width, height, data: vec![v; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [T; 3] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn same_size<U>(&self, other: &RgbImage<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_size<U>(&self, other: &RgbImage<U>, what: &str) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what}: {}×{} vs {}×{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|&p| f(p)).collect() }
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|p| p.map(|c| c * s))
    }

    pub fn clamped(&self) -> Self {
        self.map(|p| p.map(|c| c.max(T::zero()).min(T::one())))
    }

    /// Converts the element type; used at f32 storage boundaries.
    pub fn cast<U: Real>(&self) -> RgbImage<U> {
        RgbImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|p| p.map(|c| U::lit(c.to_f64_lossy()))).collect(),
        }
    }

    pub fn mean(&self) -> [T; 3] {
        let mut acc = [0.0f64; 3];
        for p in &self.data {
            for k in 0..3 {
                acc[k] += p[k].to_f64_lossy();
            }
        }
        let n = self.data.len().max(1) as f64;
        acc.map(|a| T::lit(a / n))
    }
}

/// Single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> GrayImage<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![T::zero(); width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }
}

/// 8-bit RGBA image for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgba8Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Rgba8Image {
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 4] {
        let i = 4 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2], self.data[i + 3]]
    }
}

/// Maps `[0, 1]` to `0..=255` with rounding; values outside are clamped.
#[inline]
pub fn quantize<T: Real>(v: T) -> u8 {
    let v = v.to_f64_lossy();
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Display encoding: `× 2^exposure`, clamp to `[0, 1]`, gamma `1/γ`, quantize; alpha from `mask`.
pub fn to_display<T: Real>(img: &RgbImage<T>, mask: Option<&[T]>, exposure: T, gamma: T) -> Rgba8Image {
    let gain = T::lit(2.0).powf(exposure);
    let inv_gamma = T::one() / gamma;
    let mut data = Vec::with_capacity(img.pixel_count() * 4);
    for (i, p) in img.data.iter().enumerate() {
        for &c in p {
            let v = (c * gain).max(T::zero()).min(T::one());
            let v = if inv_gamma == T::one() { v } else { v.powf(inv_gamma) };
            data.push(quantize(v));
        }
        data.push(mask.map_or(255, |m| quantize(m[i])));
    }
    Rgba8Image { width: img.width, height: img.height, data }
}

/// sRGB transfer function inverse (8-bit textures to linear).
pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_pipeline() {
        let img = RgbImage::from_data(2, 1, vec![[0.25f64, 0.5, 2.0], [-1.0, 0.0, 1.0]]).unwrap();
        let d = to_display(&img, Some(&[1.0, 0.0]), 0.0, 1.0);
        assert_eq!(d.pixel(0, 0), [64, 128, 255, 255]);
        assert_eq!(d.pixel(1, 0), [0, 0, 255, 0]);
        // exposure +1 doubles before the clamp
        let d = to_display(&img, None, 1.0, 1.0);
        assert_eq!(d.pixel(0, 0), [128, 255, 255, 255]);
        let d = to_display(&img, None, 0.0, 2.0);
        assert_eq!(d.pixel(0, 0)[0], quantize(0.5f64));
    }

    #[test]
    fn size_checks() {
        assert!(RgbImage::<f32>::from_data(2, 2, vec![[0.0; 3]; 3]).is_err());
        let a = RgbImage::<f32>::new(2, 2);
        assert!(a.check_size(&RgbImage::<f64>::new(2, 3), "x").is_err());
    }
}
