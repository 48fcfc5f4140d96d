//! Per-pixel SH transport vectors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::brdf::material_eval;
use crate::error::{Error, Result};
use crate::geometry::{Camera, SurfacePoint, TriScene};
use crate::parallel::{map_indexed, pixel_rng};
use crate::scalar::Real;
use crate::sh::{ShBasis, ShDegree, ShVector, ShVectorRgb};
use crate::vector::Direction;

/// What the transport integrand includes besides `max(ω·n, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransportMode {
    /// Cosine only: `f̃ = 1`, `V = 1`.
    #[serde(rename = "cos")]
    CosineOnly,
    /// Cosine and visibility: `f̃ = 1`.
    #[serde(rename = "cosvis")]
    CosineVisibility,
    /// Cosine, visibility and the white-albedo material BRDF.
    #[serde(rename = "full")]
    FullReflectance,
}

impl TransportMode {
    pub fn name(self) -> &'static str {
        match self {
            TransportMode::CosineOnly => "cos",
            TransportMode::CosineVisibility => "cosvis",
            TransportMode::FullReflectance => "full",
        }
    }
}

impl std::str::FromStr for TransportMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cos" => Ok(TransportMode::CosineOnly),
            "cosvis" => Ok(TransportMode::CosineVisibility),
            "full" => Ok(TransportMode::FullReflectance),
            _ => Err(Error::argument(format!("unknown transport mode `{s}` (cos, cosvis, full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub mode: TransportMode,
    pub degree: u32,
    pub samples: usize,
    pub seed: u64,
    /// Jitter sample directions on a `⌊√M⌋²` grid over the unit square
    /// (each sample stays uniformly distributed, so the estimate is unbiased).
    pub stratified: bool,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self { mode: TransportMode::FullReflectance, degree: 4, samples: 1024, seed: 0, stratified: false }
    }
}

/// Scalar transport vectors for every pixel, pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap<T> {
    pub width: usize,
    pub height: usize,
    pub degree: ShDegree,
    /// `width·height·(N+1)²` coefficients.
    pub coeffs: Vec<T>,
    /// True where the camera ray hit geometry.
    pub valid: Vec<bool>,
}

impl<T: Real> TransportMap<T> {
    pub fn zeros(width: usize, height: usize, degree: ShDegree) -> Self {
        Self {
            width,
            height,
            degree,
            coeffs: vec![T::zero(); width * height * degree.coeff_count()],
            valid: vec![false; width * height],
        }
    }

    #[inline]
    pub fn pixel(&self, index: usize) -> &[T] {
        let n = self.degree.coeff_count();
        &self.coeffs[index * n..(index + 1) * n]
    }

    #[inline]
    pub fn pixel_mut(&mut self, index: usize) -> &mut [T] {
        let n = self.degree.coeff_count();
        &mut self.coeffs[index * n..(index + 1) * n]
    }

    pub fn vector(&self, x: usize, y: usize) -> ShVector<T> {
        ShVector::from_coeffs(self.degree, self.pixel(y * self.width + x).to_vec()).expect("stored length matches degree")
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Uniform points on the unit square: jittered `⌊√M⌋²` grid plus iid
/// leftovers when stratified, all iid otherwise.
pub(crate) fn square_samples<R: Rng>(rng: &mut R, count: usize, stratified: bool) -> impl Iterator<Item = (f64, f64)> + '_ {
    let side = if stratified { (count as f64).sqrt().floor() as usize } else { 0 };
    let grid = side * side;
    (0..count).map(move |k| {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        if k < grid {
            (((k % side) as f64 + a) / side as f64, ((k / side) as f64 + b) / side as f64)
        } else {
            (a, b)
        }
    })
}

/// Monte Carlo transport at one surface point:
/// `T_i = (4π/M) Σ_k f̃(ω_k) V(p, ω_k) max(ω_k·n, 0) Y_i(ω_k)` with uniform sphere samples.
/// `basis` must be built for the degree wanted; `cfg.degree` is not consulted.
pub fn compute_transport_point<T: Real, R: Rng>(
    scene: &TriScene<T>,
    p: &SurfacePoint<T>,
    wo: Direction<T>,
    cfg: &TransportConfig,
    basis: &ShBasis<T>,
    rng: &mut R,
) -> ShVector<T> {
    let (mode, samples) = (cfg.mode, cfg.samples.max(1));
    let degree = basis.degree();
    let n_coeffs = degree.coeff_count();
    let n = p.shading_frame(wo);
    let offset_normal = p.geometric_normal.vec();
    let mut acc = vec![T::zero(); n_coeffs];
    let mut ys = vec![T::zero(); n_coeffs];
    for (u1, u2) in square_samples(rng, samples, cfg.stratified) {
        let wi = Direction::uniform_sphere(T::lit(u1), T::lit(u2));
        let cos = wi.dot(n);
        if cos <= T::zero() {
            continue;
        }
        let f = match mode {
            TransportMode::CosineOnly | TransportMode::CosineVisibility => T::one(),
            TransportMode::FullReflectance => material_eval(&p.material, wi, wo, n),
        };
        if f <= T::zero() {
            continue;
        }
        if mode != TransportMode::CosineOnly && scene.visibility(p.position, offset_normal, wi) == T::zero() {
            continue;
        }
        let w = f * cos;
        basis.eval_into(wi, &mut ys);
        for (a, y) in acc.iter_mut().zip(&ys) {
            *a += w * *y;
        }
    }
    let scale = T::lit(4.0 * std::f64::consts::PI) / T::from_count(samples);
    ShVector::from_coeffs(degree, acc.into_iter().map(|a| a * scale).collect()).expect("length matches degree")
}

/// Transport for every pixel of `cam`. Pixel `i` uses its own generator derived
/// from `(cfg.seed, i)`, so the map is bitwise identical for any worker count.
pub fn compute_transport_map<T: Real>(
    scene: &TriScene<T>,
    cam: &Camera<T>,
    cfg: &TransportConfig,
    workers: Option<usize>,
) -> Result<TransportMap<T>> {
    if cfg.samples == 0 {
        return Err(Error::argument("transport needs at least one sample"));
    }
    let degree = ShDegree::new(cfg.degree)?;
    let basis = ShBasis::<T>::new(degree);
    let count = cam.width * cam.height;
    let pixels = map_indexed(count, workers, |i| {
        let ray = cam.ray(i % cam.width, i / cam.width);
        let hit = scene.intersect(&ray, T::infinity())?;
        let p = scene.surface_point(&ray, &hit);
        let mut rng = pixel_rng(cfg.seed, i);
        Some(compute_transport_point(scene, &p, Direction::new_unchecked(-ray.dir), cfg, &basis, &mut rng))
    })?;
    let mut map = TransportMap::zeros(cam.width, cam.height, degree);
    for (i, t) in pixels.into_iter().enumerate() {
        if let Some(t) = t {
            map.valid[i] = true;
            map.pixel_mut(i).copy_from_slice(t.coeffs());
        }
    }
    Ok(map)
}

/// Per-pixel RGB residual coefficients `E`, pixel-major then channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBuffer<T> {
    pub width: usize,
    pub height: usize,
    pub degree: ShDegree,
    /// `width·height·3·(N+1)²` coefficients.
    pub coeffs: Vec<T>,
}

impl<T: Real> ResidualBuffer<T> {
    pub fn zeros(width: usize, height: usize, degree: ShDegree) -> Self {
        Self { width, height, degree, coeffs: vec![T::zero(); width * height * 3 * degree.coeff_count()] }
    }

    /// Coefficients of pixel `index`, channel `c`.
    #[inline]
    pub fn get(&self, index: usize, c: usize) -> &[T] {
        let n = self.degree.coeff_count();
        let at = (index * 3 + c) * n;
        &self.coeffs[at..at + n]
    }

    #[inline]
    pub fn get_mut(&mut self, index: usize, c: usize) -> &mut [T] {
        let n = self.degree.coeff_count();
        let at = (index * 3 + c) * n;
        &mut self.coeffs[at..at + n]
    }

    pub fn vector(&self, x: usize, y: usize) -> ShVectorRgb<T> {
        let i = y * self.width + x;
        let ch = |c| ShVector::from_coeffs(self.degree, self.get(i, c).to_vec()).expect("stored length matches degree");
        ShVectorRgb::new(ch(0), ch(1), ch(2)).expect("channels share a degree")
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == T::zero())
    }

    /// Replicates the scalar transport into all three channels.
    pub fn from_transport(t: &TransportMap<T>) -> Self {
        let mut e = Self::zeros(t.width, t.height, t.degree);
        for i in 0..t.pixel_count() {
            for c in 0..3 {
                e.get_mut(i, c).copy_from_slice(t.pixel(i));
            }
        }
        e
    }
}
