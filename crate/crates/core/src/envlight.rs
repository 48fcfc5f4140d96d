//! Environment maps and their SH illumination coefficients.
//!
//! Maps are lat-long: pixel `(x, y)` covers `φ ∈ [x, x+1)·2π/W` and
//! `θ ∈ [y, y+1)·π/H`, with `θ` measured from +z.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hdr::decode_hdr;
use crate::image::RgbImage;
use crate::pfm::read_pfm;
use crate::scalar::Real;
use crate::sh::{parse_sh_blocks, write_sh_text, ShBasis, ShDegree, ShRotation, ShVector, ShVectorRgb};
use crate::vector::{Direction, Rotation3, Vec3};

/// Per-channel SH illumination.
pub type LightCoeffs<T> = ShVectorRgb<T>;

/// Number of directions averaged by [`reference_radiance`].
pub const REFERENCE_DIRECTIONS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap<T> {
    width: usize,
    height: usize,
    pixels: Vec<[T; 3]>,
}

impl<T: Real> EnvironmentMap<T> {
    /// Validates radiance (finite, non-negative). Warns on a non-2:1 aspect.
    pub fn new(image: RgbImage<T>) -> Result<Self> {
        if image.width == 0 || image.height == 0 {
            return Err(Error::Dimension("environment map is empty".into()));
        }
        for (i, p) in image.data.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite() || *c < T::zero()) {
                return Err(Error::argument(format!(
                    "environment pixel ({}, {}) has invalid radiance {:?}",
                    i % image.width,
                    i / image.width,
                    p
                )));
            }
        }
        if image.width != 2 * image.height {
            log::warn!("environment map is {}×{}; lat-long maps are normally 2:1", image.width, image.height);
        }
        Ok(Self { width: image.width, height: image.height, pixels: image.data })
    }

    /// Paints a map by evaluating `f` at every pixel centre.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(Direction<T>) -> [T; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(pixel_direction(x, y, width, height)));
            }
        }
        Self::new(RgbImage::from_data(width, height, data)?)
    }

    pub fn constant(width: usize, height: usize, v: [T; 3]) -> Result<Self> {
        Self::new(RgbImage::filled(width, height, v))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[T; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn to_image(&self) -> RgbImage<T> {
        RgbImage { width: self.width, height: self.height, data: self.pixels.clone() }
    }

    pub fn scaled(&self, s: T) -> Result<Self> {
        Self::new(self.to_image().scaled(s))
    }

    /// Centre direction of pixel `(x, y)`.
    pub fn direction(&self, x: usize, y: usize) -> Direction<T> {
        pixel_direction(x, y, self.width, self.height)
    }

    /// Pixel containing `d`.
    pub fn pixel_of(&self, d: Direction<T>) -> (usize, usize) {
        let (theta, phi) = d.to_spherical();
        let u = phi.to_f64_lossy() / std::f64::consts::TAU;
        let v = theta.to_f64_lossy() / std::f64::consts::PI;
        let x = ((u - u.floor()) * self.width as f64) as usize;
        let y = (v * self.height as f64) as usize;
        (x.min(self.width - 1), y.min(self.height - 1))
    }

    /// Nearest-pixel radiance in direction `d`.
    pub fn lookup(&self, d: Direction<T>) -> [T; 3] {
        let (x, y) = self.pixel_of(d);
        self.pixel(x, y)
    }

    /// Bilinear radiance with wrap-around in `φ` and clamping at the poles.
    pub fn sample_bilinear(&self, d: Direction<T>) -> [T; 3] {
        let (theta, phi) = d.to_spherical();
        let fx = phi.to_f64_lossy() / std::f64::consts::TAU * self.width as f64 - 0.5;
        let fy = (theta.to_f64_lossy() / std::f64::consts::PI * self.height as f64 - 0.5)
            .clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - x0, fy - y0);
        let w = self.width as i64;
        let xi = |x: f64| ((x as i64).rem_euclid(w)) as usize;
        let y0u = y0 as usize;
        let y1u = (y0u + 1).min(self.height - 1);
        let mut out = [T::zero(); 3];
        for (x, y, wgt) in [
            (xi(x0), y0u, (1.0 - tx) * (1.0 - ty)),
            (xi(x0 + 1.0), y0u, tx * (1.0 - ty)),
            (xi(x0), y1u, (1.0 - tx) * ty),
            (xi(x0 + 1.0), y1u, tx * ty),
        ] {
            let p = self.pixel(x, y);
            for k in 0..3 {
                out[k] += p[k] * T::lit(wgt);
            }
        }
        out
    }
}

fn pixel_direction<T: Real>(x: usize, y: usize, width: usize, height: usize) -> Direction<T> {
    let theta = (y as f64 + 0.5) * std::f64::consts::PI / height as f64;
    let phi = (x as f64 + 0.5) * std::f64::consts::TAU / width as f64;
    Direction::from_spherical(T::lit(theta), T::lit(phi))
}

/// Decodes a Radiance `.hdr` map.
pub fn load_hdr<T: Real>(bytes: &[u8]) -> Result<EnvironmentMap<T>> {
    EnvironmentMap::new(decode_hdr(bytes)?.cast())
}

/// Decodes a PFM map.
pub fn load_pfm<T: Real>(bytes: &[u8]) -> Result<EnvironmentMap<T>> {
    EnvironmentMap::new(read_pfm(bytes)?.cast())
}

/// Picks the decoder from the file signature.
pub fn load_env_bytes<T: Real>(bytes: &[u8]) -> Result<EnvironmentMap<T>> {
    if bytes.starts_with(b"#?") {
        load_hdr(bytes)
    } else if bytes.starts_with(b"PF") || bytes.starts_with(b"Pf") {
        load_pfm(bytes)
    } else {
        Err(Error::parse(0, "unrecognized environment map format (expected .hdr or .pfm)"))
    }
}

/// Three-point Gauss-Legendre rule on `[-1, 1]`.
const GAUSS3: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

/// Projection of the map, read as piecewise constant per pixel, onto the SH
/// basis. Each pixel is integrated with a 3×3 Gauss rule in `(cosθ, φ)`, so
/// the weights of a pixel sum to its exact solid angle.
pub fn project_env<T: Real>(env: &EnvironmentMap<T>, degree: ShDegree) -> LightCoeffs<T> {
    let n = degree.coeff_count();
    let basis = ShBasis::<T>::new(degree);
    let dt = std::f64::consts::PI / env.height as f64;
    let dp = std::f64::consts::TAU / env.width as f64;
    let rows: Vec<Vec<f64>> = (0..env.height)
        .into_par_iter()
        .map(|y| {
            let mut acc = vec![0.0f64; 3 * n];
            let mut ys = vec![T::zero(); n];
            let mut pixel_ys = vec![0.0f64; n];
            let (u0, u1) = ((y as f64 * dt).cos(), ((y + 1) as f64 * dt).cos());
            let (um, uh) = (0.5 * (u0 + u1), 0.5 * (u0 - u1));
            for x in 0..env.width {
                let p = env.pixel(x, y);
                if p.iter().all(|c| *c == T::zero()) {
                    continue;
                }
                pixel_ys.iter_mut().for_each(|v| *v = 0.0);
                for (gu, wu) in GAUSS3 {
                    let u = um + uh * gu;
                    let st = (1.0 - u * u).max(0.0).sqrt();
                    for (gp, wp) in GAUSS3 {
                        let phi = (x as f64 + 0.5 + 0.5 * gp) * dp;
                        let d = Direction::new_unchecked(Vec3::from_f64([st * phi.cos(), st * phi.sin(), u]));
                        basis.eval_into(d, &mut ys);
                        let w = wu * wp * uh * 0.5 * dp;
                        for (a, yv) in pixel_ys.iter_mut().zip(&ys) {
                            *a += w * yv.to_f64_lossy();
                        }
                    }
                }
                for c in 0..3 {
                    let pc = p[c].to_f64_lossy();
                    for (a, yv) in acc[c * n..(c + 1) * n].iter_mut().zip(&pixel_ys) {
                        *a += pc * yv;
                    }
                }
            }
            acc
        })
        .collect();
    // fixed-order reduction keeps the result independent of thread count
    let mut total = vec![0.0f64; 3 * n];
    for row in rows {
        for (t, r) in total.iter_mut().zip(row) {
            *t += r;
        }
    }
    let ch = |c: usize| ShVector::from_coeffs(degree, total[c * n..(c + 1) * n].iter().map(|&v| T::lit(v)).collect());
    ShVectorRgb::new(ch(0).unwrap(), ch(1).unwrap(), ch(2).unwrap()).unwrap()
}

/// `∫_0^1 x·P_l(x) dx`.
fn half_moment(l: u32) -> f64 {
    match l {
        0 => 0.5,
        1 => 1.0 / 3.0,
        l if l % 2 == 1 => 0.0,
        l => {
            let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
            let h = l / 2;
            let sign = if (h - 1) % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact(l - 2) / (2f64.powi(l as i32) * fact(h - 1) * fact(h + 1))
        }
    }
}

/// Zonal SH coefficient `c_l` of `max(cosθ, 0)` about +z.
pub fn clamped_cosine_zonal(l: u32) -> f64 {
    let k = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt();
    std::f64::consts::TAU * k * half_moment(l)
}

/// SH projection of `max(ω·n, 0)/π`, the Lambertian white transport at normal `n`.
pub fn lambert_transport<T: Real>(n: Direction<T>, degree: ShDegree) -> ShVector<T> {
    let ys = ShBasis::<T>::new(degree).eval(n);
    let mut coeffs = Vec::with_capacity(degree.coeff_count());
    for l in 0..=degree.n() {
        let band = (4.0 * std::f64::consts::PI / (2 * l + 1) as f64).sqrt() * clamped_cosine_zonal(l)
            / std::f64::consts::PI;
        for m in -(l as i32)..=l as i32 {
            coeffs.push(T::lit(band) * ys[crate::sh::sh_index(l, m)]);
        }
    }
    ShVector::from_coeffs(degree, coeffs).expect("length matches degree")
}

/// Spherical Fibonacci point set of size `count`.
pub fn fibonacci_directions<T: Real>(count: usize) -> Vec<Direction<T>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|j| {
            let z = 1.0 - (2.0 * j as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * j as f64;
            Direction::new_unchecked(crate::vector::Vec3::new(T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z)))
        })
        .collect()
}

/// Mean Lambertian shading of a white sphere: the average over 512 Fibonacci
/// normals of the RGB-mean of `T_cos(n)ᵀ L`.
pub fn reference_radiance<T: Real>(l: &LightCoeffs<T>) -> T {
    let degree = l.degree();
    let mut acc = 0.0f64;
    for n in fibonacci_directions::<T>(REFERENCE_DIRECTIONS) {
        let t = lambert_transport(n, degree);
        for c in 0..3 {
            acc += crate::sh::sh_dot(&t, l.channel(c)).unwrap().to_f64_lossy();
        }
    }
    T::lit(acc / (3.0 * REFERENCE_DIRECTIONS as f64))
}

/// Factor that brings `l` to reference radiance `target`.
pub fn normalization_scale<T: Real>(l: &LightCoeffs<T>, target: T) -> Result<T> {
    let r = reference_radiance(l);
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::Normalization(format!("reference radiance is {r}; cannot normalize a black light")));
    }
    Ok(target / r)
}

pub fn normalize_env<T: Real>(l: &LightCoeffs<T>, target: T) -> Result<LightCoeffs<T>> {
    Ok(l.scaled(normalization_scale(l, target)?))
}

pub fn rotate_env<T: Real>(l: &LightCoeffs<T>, r: &Rotation3<T>) -> LightCoeffs<T> {
    l.rotated(&ShRotation::new(r, l.degree())).expect("rotation built for the light's degree")
}

/// Resamples the map so that `out(d) = env(r⁻¹ d)`.
pub fn rotate_map_pixels<T: Real>(env: &EnvironmentMap<T>, r: &Rotation3<T>) -> EnvironmentMap<T> {
    let inv = r.inverse();
    let mut data = Vec::with_capacity(env.width * env.height);
    for y in 0..env.height {
        for x in 0..env.width {
            data.push(env.sample_bilinear(inv.apply_dir(env.direction(x, y))));
        }
    }
    EnvironmentMap { width: env.width, height: env.height, pixels: data }
}

/// Writes three `SH N` blocks (R, G, B).
pub fn write_light_text<T: Real>(l: &LightCoeffs<T>) -> String {
    let mut s = String::new();
    for c in l.channels() {
        write_sh_text(c, &mut s);
    }
    s
}

pub fn parse_light_text<T: Real>(text: &str) -> Result<LightCoeffs<T>> {
    let mut blocks = parse_sh_blocks::<T>(text)?;
    if blocks.len() != 3 {
        return Err(Error::parse(0, format!("light file needs 3 SH blocks (R, G, B), found {}", blocks.len())));
    }
    let b = blocks.pop().unwrap();
    let g = blocks.pop().unwrap();
    let r = blocks.pop().unwrap();
    ShVectorRgb::new(r, g, b).map_err(|e| Error::parse(0, e.to_string()))
}

/// Evaluates `Σ L_i Y_i(ω)` per channel.
pub fn eval_light<T: Real>(l: &LightCoeffs<T>, basis: &ShBasis<T>, d: Direction<T>) -> [T; 3] {
    l.eval(basis, d)
}

/// Luminance-proportional pixel sampler for importance sampling the map.
#[derive(Debug, Clone)]
pub struct EnvSampler {
    width: usize,
    height: usize,
    /// Marginal CDF over rows, `height + 1` entries.
    row_cdf: Vec<f64>,
    /// Conditional CDF per row, `height × (width + 1)` entries.
    col_cdf: Vec<f64>,
    /// Pixel probabilities.
    pmf: Vec<f64>,
}

pub fn luminance(p: [f64; 3]) -> f64 {
    0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]
}

impl EnvSampler {
    /// Pixel weights are `luminance · sinθ` plus a small floor so every
    /// direction with radiance stays reachable.
    pub fn new<T: Real>(env: &EnvironmentMap<T>) -> Result<Self> {
        let (w, h) = (env.width, env.height);
        let mut weights = vec![0.0f64; w * h];
        let mut max = 0.0f64;
        for y in 0..h {
            let s = ((y as f64 + 0.5) * std::f64::consts::PI / h as f64).sin();
            for x in 0..w {
                let p = env.pixel(x, y).map(|c| c.to_f64_lossy());
                let lum = luminance(p).max(p[0].max(p[1]).max(p[2]) * 1e-3);
                weights[y * w + x] = lum * s;
                max = max.max(lum * s);
            }
        }
        if max <= 0.0 {
            return Err(Error::argument("cannot importance-sample a black environment map"));
        }
        let floor = max * 1e-4;
        for (i, wt) in weights.iter_mut().enumerate() {
            let p = env.pixels[i];
            if p.iter().any(|c| *c > T::zero()) {
                *wt = wt.max(floor);
            }
        }
        let total: f64 = weights.iter().sum();
        let pmf: Vec<f64> = weights.iter().map(|v| v / total).collect();
        let mut row_cdf = vec![0.0; h + 1];
        let mut col_cdf = vec![0.0; h * (w + 1)];
        for y in 0..h {
            let row = &pmf[y * w..(y + 1) * w];
            let row_sum: f64 = row.iter().sum();
            row_cdf[y + 1] = row_cdf[y] + row_sum;
            let cdf = &mut col_cdf[y * (w + 1)..(y + 1) * (w + 1)];
            for x in 0..w {
                cdf[x + 1] = cdf[x] + if row_sum > 0.0 { row[x] / row_sum } else { 1.0 / w as f64 };
            }
            cdf[w] = 1.0;
        }
        row_cdf[h] = 1.0;
        Ok(Self { width: w, height: h, row_cdf, col_cdf, pmf })
    }

    fn search(cdf: &[f64], u: f64) -> usize {
        let i = cdf.partition_point(|&c| c <= u);
        i.saturating_sub(1).min(cdf.len() - 2)
    }

    /// Maps two uniforms to a direction and its solid-angle pdf. The remainder
    /// of each CDF inversion positions the sample inside the chosen pixel.
    pub fn sample<T: Real>(&self, u: [f64; 2]) -> (Direction<T>, f64) {
        let mut y = Self::search(&self.row_cdf, u[0]);
        while self.row_cdf[y + 1] - self.row_cdf[y] <= 0.0 && y + 1 < self.height {
            y += 1;
        }
        let (r0, r1) = (self.row_cdf[y], self.row_cdf[y + 1]);
        let fy = ((u[0] - r0) / (r1 - r0)).clamp(0.0, 1.0 - f64::EPSILON);
        let cdf = &self.col_cdf[y * (self.width + 1)..(y + 1) * (self.width + 1)];
        let x = Self::search(cdf, u[1]);
        let (c0, c1) = (cdf[x], cdf[x + 1]);
        let fx = if c1 > c0 { ((u[1] - c0) / (c1 - c0)).clamp(0.0, 1.0 - f64::EPSILON) } else { 0.5 };
        let dt = std::f64::consts::PI / self.height as f64;
        let dp = std::f64::consts::TAU / self.width as f64;
        // uniform in (θ, φ) within the pixel; the pdf carries the 1/sinθ Jacobian
        let theta = (y as f64 + fy) * dt;
        let phi = (x as f64 + fx) * dp;
        let d = Direction::from_spherical(T::lit(theta), T::lit(phi));
        let pdf = self.pmf[y * self.width + x] / (dt * dp * theta.sin().max(1e-12));
        (d, pdf)
    }

    /// Solid-angle pdf of sampling direction `d`.
    pub fn pdf<T: Real>(&self, d: Direction<T>) -> f64 {
        let (theta, phi) = d.to_spherical();
        let (theta, phi) = (theta.to_f64_lossy(), phi.to_f64_lossy());
        let dt = std::f64::consts::PI / self.height as f64;
        let dp = std::f64::consts::TAU / self.width as f64;
        let x = (((phi / dp).floor() as i64).rem_euclid(self.width as i64)) as usize;
        let y = ((theta / dt) as usize).min(self.height - 1);
        self.pmf[y * self.width + x] / (dt * dp * theta.sin().max(1e-12))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zonal_clamped_cosine_values() {
        assert_abs_diff_eq!(clamped_cosine_zonal(0), 0.886_226_925_452_758, epsilon = 1e-12);
        assert_abs_diff_eq!(clamped_cosine_zonal(1), 1.023_326_707_946_488_5, epsilon = 1e-12);
        assert_abs_diff_eq!(clamped_cosine_zonal(2), 0.495_415_912_200_751_6, epsilon = 1e-12);
        assert_eq!(clamped_cosine_zonal(3), 0.0);
        assert!(clamped_cosine_zonal(4) < 0.0);
    }

    #[test]
    fn white_furnace_reference() {
        let l = LightCoeffs::gray(ShVector::basis(ShDegree::DEFAULT, 0).scaled(2.0 * std::f64::consts::PI.sqrt()));
        assert_abs_diff_eq!(reference_radiance(&l), 1.0, epsilon = 1e-9);
        assert_eq!(reference_radiance(&LightCoeffs::<f64>::zeros(ShDegree::DEFAULT)), 0.0);
        assert!(normalize_env(&LightCoeffs::<f64>::zeros(ShDegree::DEFAULT), 0.8).is_err());
    }

    #[test]
    fn light_text_round_trip() {
        let mut l = LightCoeffs::<f64>::zeros(ShDegree::new(1).unwrap());
        l.channel_mut(0).coeffs_mut()[1] = 0.1 + 0.2;
        l.channel_mut(2).coeffs_mut()[3] = -1e-300;
        let text = write_light_text(&l);
        assert_eq!(parse_light_text::<f64>(&text).unwrap(), l);
        assert!(parse_light_text::<f64>("SH 0\n1\n").is_err());
    }

    #[test]
    fn pixel_lookup_is_consistent_with_centres() {
        let env = EnvironmentMap::<f64>::constant(8, 4, [1.0; 3]).unwrap();
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(env.pixel_of(env.direction(x, y)), (x, y));
            }
        }
    }

    #[test]
    fn sampler_pdf_matches_sample() {
        let env = EnvironmentMap::<f64>::from_fn(16, 8, |d| [d.z().max(0.0) * 4.0 + 0.1, 0.2, 0.1]).unwrap();
        let s = EnvSampler::new(&env).unwrap();
        for u in [[0.1, 0.2], [0.9, 0.5], [0.5, 0.99], [0.0, 0.0]] {
            let (d, pdf) = s.sample::<f64>(u);
            assert_abs_diff_eq!(pdf, s.pdf(d), epsilon = 1e-9 * pdf);
        }
    }
}
