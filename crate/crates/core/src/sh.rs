//! Real spherical harmonics: basis evaluation, projection, rotation and the
//! coefficient dot product that turns the lighting integral into a sum.
//!
//! Convention: orthonormal real SH without the Condon-Shortley phase,
//! `θ` measured from +z and `φ` from +x toward +y. Coefficient `(l, m)` lives at
//! index `l(l+1)+m`. In band 1 this gives `Y₁₋₁ ∝ y`, `Y₁₀ ∝ z`, `Y₁₁ ∝ x`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::{Direction, Rotation3};

/// Highest supported band index.
pub const MAX_DEGREE: u32 = 10;

/// Band limit `N`; a degree-`N` expansion has `(N+1)²` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShDegree(u32);

impl ShDegree {
    /// Degree used throughout the pipeline (25 coefficients).
    pub const DEFAULT: ShDegree = ShDegree(4);

    pub fn new(n: u32) -> Result<Self> {
        if n > MAX_DEGREE {
            return Err(Error::argument(format!("SH degree {n} exceeds {MAX_DEGREE}")));
        }
        Ok(Self(n))
    }

    /// Inverse of [`coeff_count`](Self::coeff_count); `None` unless `count` is a square.
    pub fn from_coeff_count(count: usize) -> Option<Self> {
        let n = (count as f64).sqrt().round() as usize;
        if n >= 1 && n * n == count {
            ShDegree::new(n as u32 - 1).ok()
        } else {
            None
        }
    }

    #[inline]
    pub fn n(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn coeff_count(self) -> usize {
        let k = self.0 as usize + 1;
        k * k
    }
}

impl Default for ShDegree {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Flat index of `(l, m)`.
#[inline]
pub fn sh_index(l: u32, m: i32) -> usize {
    (l as i64 * (l as i64 + 1) + m as i64) as usize
}

/// Normalization constant `K_l^m = sqrt((2l+1)/(4π) · (l-|m|)!/(l+|m|)!)`.
fn normalization(l: u32, m: u32) -> f64 {
    let mut ratio = 1.0f64;
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt()
}

/// Precomputed constants for evaluating every basis function up to a degree.
#[derive(Debug, Clone)]
pub struct ShBasis<T> {
    degree: ShDegree,
    /// `K_l^{|m|}`, times `√2` for `m ≠ 0`, indexed like the coefficients (m ≥ 0 slots used).
    scale: Vec<T>,
}

impl<T: Real> ShBasis<T> {
    pub fn new(degree: ShDegree) -> Self {
        let mut scale = vec![T::zero(); degree.coeff_count()];
        for l in 0..=degree.n() {
            for m in 0..=l {
                let k = normalization(l, m);
                let k = if m == 0 { k } else { k * std::f64::consts::SQRT_2 };
                scale[sh_index(l, m as i32)] = T::lit(k);
            }
        }
        Self { degree, scale }
    }

    #[inline]
    pub fn degree(&self) -> ShDegree {
        self.degree
    }

    /// Writes `Y_i(d)` for every coefficient index into `out`.
    ///
    /// Uses `P_l^m(z) = (1-z²)^{m/2} Q_l^m(z)` and `sin^mθ·(cos mφ, sin mφ) = (x+iy)^m`,
    /// so no trigonometric calls are needed.
    pub fn eval_into(&self, d: Direction<T>, out: &mut [T]) {
        let n = self.degree.n() as usize;
        assert_eq!(out.len(), self.degree.coeff_count());
        let (x, y, z) = (d.x(), d.y(), d.z());
        let mut c_m = T::one(); // Re (x+iy)^m
        let mut s_m = T::zero(); // Im (x+iy)^m
        let mut q_mm = T::one(); // (2m-1)!!
        for m in 0..=n {
            if m > 0 {
                let c = c_m * x - s_m * y;
                s_m = c_m * y + s_m * x;
                c_m = c;
                q_mm *= T::from_count(2 * m - 1);
            }
            // Q_l^m for l = m, m+1, ...
            let mut q_prev2 = T::zero();
            let mut q_prev = q_mm;
            for l in m..=n {
                let q = if l == m {
                    q_mm
                } else if l == m + 1 {
                    z * T::from_count(2 * m + 1) * q_mm
                } else {
                    (z * T::from_count(2 * l - 1) * q_prev - T::from_count(l + m - 1) * q_prev2)
                        / T::from_count(l - m)
                };
                if l > m {
                    q_prev2 = q_prev;
                    q_prev = q;
                }
                let k = self.scale[sh_index(l as u32, m as i32)];
                if m == 0 {
                    out[sh_index(l as u32, 0)] = k * q;
                } else {
                    out[sh_index(l as u32, m as i32)] = k * q * c_m;
                    out[sh_index(l as u32, -(m as i32))] = k * q * s_m;
                }
            }
        }
    }

    pub fn eval(&self, d: Direction<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.degree.coeff_count()];
        self.eval_into(d, &mut out);
        out
    }
}

/// Single basis function `Y_{l,m}(d)`.
pub fn sh_eval<T: Real>(l: u32, m: i32, d: Direction<T>) -> Result<T> {
    if l > MAX_DEGREE || m.unsigned_abs() > l {
        return Err(Error::argument(format!("invalid SH band/order (l={l}, m={m})")));
    }
    let basis = ShBasis::new(ShDegree(l));
    Ok(basis.eval(d)[sh_index(l, m)])
}

/// Band-limited spherical function as an ordered coefficient list.
#[derive(Debug, Clone, PartialEq)]
pub struct ShVector<T> {
    degree: ShDegree,
    coeffs: Vec<T>,
}

impl<T: Real> ShVector<T> {
    pub fn zeros(degree: ShDegree) -> Self {
        Self { degree, coeffs: vec![T::zero(); degree.coeff_count()] }
    }

    /// Unit vector `e_index`.
    pub fn basis(degree: ShDegree, index: usize) -> Self {
        let mut v = Self::zeros(degree);
        v.coeffs[index] = T::one();
        v
    }

    pub fn from_coeffs(degree: ShDegree, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != degree.coeff_count() {
            return Err(Error::Dimension(format!(
                "degree {} needs {} coefficients, got {}",
                degree.n(),
                degree.coeff_count(),
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::argument(format!("coefficient {i} is not finite")));
        }
        Ok(Self { degree, coeffs })
    }

    #[inline]
    pub fn degree(&self) -> ShDegree {
        self.degree
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn get(&self, l: u32, m: i32) -> T {
        self.coeffs[sh_index(l, m)]
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// `self + other`; degrees must match.
    pub fn add(&self, other: &Self) -> Result<Self> {
        check_degrees(self.degree, other.degree)?;
        Ok(Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn norm(&self) -> T {
        self.coeffs.iter().map(|&c| c * c).sum::<T>().sqrt()
    }

    /// Keeps the first `degree` bands (or zero-pads when `degree` is larger).
    pub fn resized(&self, degree: ShDegree) -> Self {
        let mut coeffs = vec![T::zero(); degree.coeff_count()];
        let k = coeffs.len().min(self.coeffs.len());
        coeffs[..k].copy_from_slice(&self.coeffs[..k]);
        Self { degree, coeffs }
    }

    pub fn cast<U: Real>(&self) -> ShVector<U> {
        ShVector { degree: self.degree, coeffs: self.coeffs.iter().map(|c| U::lit(c.to_f64_lossy())).collect() }
    }

    /// Reconstructs `Σ c_i Y_i(d)`.
    pub fn eval(&self, basis: &ShBasis<T>, d: Direction<T>) -> T {
        debug_assert_eq!(basis.degree(), self.degree);
        let ys = basis.eval(d);
        dot_slices(&ys, &self.coeffs)
    }
}

#[inline]
pub fn dot_slices<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn check_degrees(a: ShDegree, b: ShDegree) -> Result<()> {
    if a != b {
        return Err(Error::argument(format!("SH degree mismatch: {} vs {}", a.n(), b.n())));
    }
    Ok(())
}

/// `Σ t_i l_i`.
pub fn sh_dot<T: Real>(t: &ShVector<T>, l: &ShVector<T>) -> Result<T> {
    check_degrees(t.degree, l.degree)?;
    Ok(dot_slices(&t.coeffs, &l.coeffs))
}

/// Three channels (R, G, B) sharing one degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ShVectorRgb<T> {
    channels: [ShVector<T>; 3],
}

impl<T: Real> ShVectorRgb<T> {
    pub fn new(r: ShVector<T>, g: ShVector<T>, b: ShVector<T>) -> Result<Self> {
        check_degrees(r.degree, g.degree)?;
        check_degrees(r.degree, b.degree)?;
        Ok(Self { channels: [r, g, b] })
    }

    pub fn zeros(degree: ShDegree) -> Self {
        let z = ShVector::zeros(degree);
        Self { channels: [z.clone(), z.clone(), z] }
    }

    /// Same coefficients in all three channels.
    pub fn gray(v: ShVector<T>) -> Self {
        Self { channels: [v.clone(), v.clone(), v] }
    }

    #[inline]
    pub fn degree(&self) -> ShDegree {
        self.channels[0].degree
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &ShVector<T> {
        &self.channels[c]
    }

    #[inline]
    pub fn channels(&self) -> &[ShVector<T>; 3] {
        &self.channels
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut ShVector<T> {
        &mut self.channels[c]
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { channels: self.channels.clone().map(|c| c.scaled(s)) }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        Ok(Self {
            channels: [
                self.channels[0].add(&o.channels[0])?,
                self.channels[1].add(&o.channels[1])?,
                self.channels[2].add(&o.channels[2])?,
            ],
        })
    }

    pub fn resized(&self, degree: ShDegree) -> Self {
        Self { channels: self.channels.clone().map(|c| c.resized(degree)) }
    }

    pub fn cast<U: Real>(&self) -> ShVectorRgb<U> {
        ShVectorRgb { channels: [0, 1, 2].map(|c| self.channels[c].cast()) }
    }

    pub fn rotated(&self, r: &ShRotation<T>) -> Result<Self> {
        Ok(Self {
            channels: [
                r.apply(&self.channels[0])?,
                r.apply(&self.channels[1])?,
                r.apply(&self.channels[2])?,
            ],
        })
    }

    /// Radiance arriving from `d` per channel.
    pub fn eval(&self, basis: &ShBasis<T>, d: Direction<T>) -> [T; 3] {
        let ys = basis.eval(d);
        self.eval_with(&ys)
    }

    /// Channel values given precomputed basis values.
    #[inline]
    pub fn eval_with(&self, ys: &[T]) -> [T; 3] {
        [
            dot_slices(ys, &self.channels[0].coeffs),
            dot_slices(ys, &self.channels[1].coeffs),
            dot_slices(ys, &self.channels[2].coeffs),
        ]
    }
}

/// How [`sh_project`] integrates over the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereSampler {
    /// Uniform sphere Monte Carlo with pdf `1/4π`.
    MonteCarlo { samples: usize, seed: u64 },
    /// Midpoint lat-long quadrature with solid-angle weights `sinθ·Δθ·Δφ`.
    LatLong { theta_steps: usize, phi_steps: usize },
}

impl SphereSampler {
    /// Deterministic quadrature fine enough for 1e-5-level golden values.
    pub const FINE: SphereSampler = SphereSampler::LatLong { theta_steps: 512, phi_steps: 1024 };
}

/// `∫ f(ω) Y_i(ω) dω` for every coefficient.
pub fn sh_project<T: Real, F>(mut f: F, degree: ShDegree, sampler: SphereSampler) -> Result<ShVector<T>>
where
    F: FnMut(Direction<T>) -> T,
{
    let basis = ShBasis::<T>::new(degree);
    let mut ys = vec![T::zero(); degree.coeff_count()];
    let mut acc = vec![0.0f64; degree.coeff_count()];
    let mut sample = |d: Direction<T>, weight: f64, acc: &mut [f64]| -> Result<()> {
        let v = f(d);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                value: v.to_f64_lossy(),
                x: d.x().to_f64_lossy(),
                y: d.y().to_f64_lossy(),
                z: d.z().to_f64_lossy(),
            });
        }
        basis.eval_into(d, &mut ys);
        let w = v.to_f64_lossy() * weight;
        for (a, y) in acc.iter_mut().zip(&ys) {
            *a += w * y.to_f64_lossy();
        }
        Ok(())
    };
    match sampler {
        SphereSampler::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::argument("sampler must yield at least one sample"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = 4.0 * std::f64::consts::PI / samples as f64;
            for _ in 0..samples {
                let d = Direction::uniform_sphere(T::lit(rng.random()), T::lit(rng.random()));
                sample(d, w, &mut acc)?;
            }
        }
        SphereSampler::LatLong { theta_steps, phi_steps } => {
            if theta_steps == 0 || phi_steps == 0 {
                return Err(Error::argument("sampler must yield at least one sample"));
            }
            let dt = std::f64::consts::PI / theta_steps as f64;
            let dp = 2.0 * std::f64::consts::PI / phi_steps as f64;
            for i in 0..theta_steps {
                let theta = (i as f64 + 0.5) * dt;
                let w = theta.sin() * dt * dp;
                for j in 0..phi_steps {
                    let phi = (j as f64 + 0.5) * dp;
                    sample(Direction::from_spherical(T::lit(theta), T::lit(phi)), w, &mut acc)?;
                }
            }
        }
    }
    ShVector::from_coeffs(degree, acc.into_iter().map(T::lit).collect())
}

/// Per-band rotation matrices for a rotation `R`, acting so that the rotated
/// function satisfies `g(d) = f(R⁻¹ d)`.
///
/// Built with the Ivanic–Ruedenberg recurrence (band `l` from band `l-1` and band 1).
#[derive(Debug, Clone)]
pub struct ShRotation<T> {
    degree: ShDegree,
    /// Band `l` stored row-major as `(2l+1)²` entries indexed `[(m+l)(2l+1) + (n+l)]`.
    bands: Vec<Vec<T>>,
}

impl<T: Real> ShRotation<T> {
    pub fn new(rotation: &Rotation3<T>, degree: ShDegree) -> Self {
        let r = rotation.matrix().m;
        // band-1 basis order (m = -1, 0, 1) is (y, z, x)
        let axis = |m: i32| match m {
            -1 => 1,
            0 => 2,
            _ => 0,
        };
        let mut r1 = [[T::zero(); 3]; 3];
        for m in -1..=1i32 {
            for n in -1..=1i32 {
                r1[(m + 1) as usize][(n + 1) as usize] = r[axis(m)][axis(n)];
            }
        }
        let mut bands = vec![vec![T::one()]];
        if degree.n() >= 1 {
            bands.push(r1.iter().flatten().copied().collect());
        }
        for l in 2..=degree.n() as i32 {
            let next = band_from_previous(l, &bands[(l - 1) as usize], &r1);
            bands.push(next);
        }
        Self { degree, bands }
    }

    pub fn degree(&self) -> ShDegree {
        self.degree
    }

    /// Rotation matrix entry for band `l`, output order `m`, input order `n`.
    pub fn entry(&self, l: u32, m: i32, n: i32) -> T {
        let w = 2 * l as i32 + 1;
        self.bands[l as usize][((m + l as i32) * w + n + l as i32) as usize]
    }

    pub fn apply(&self, v: &ShVector<T>) -> Result<ShVector<T>> {
        if v.degree() > self.degree {
            return Err(Error::argument(format!(
                "rotation built for degree {}, vector has degree {}",
                self.degree.n(),
                v.degree().n()
            )));
        }
        let mut out = vec![T::zero(); v.coeffs.len()];
        for l in 0..=v.degree().n() {
            let w = 2 * l as usize + 1;
            let base = sh_index(l, -(l as i32));
            let band = &self.bands[l as usize];
            for row in 0..w {
                out[base + row] = (0..w).map(|col| band[row * w + col] * v.coeffs[base + col]).sum();
            }
        }
        Ok(ShVector { degree: v.degree(), coeffs: out })
    }
}

fn band_from_previous<T: Real>(l: i32, prev: &[T], r1: &[[T; 3]; 3]) -> Vec<T> {
    let pw = 2 * l - 1;
    let prev_at = |a: i32, b: i32| prev[((a + l - 1) * pw + b + l - 1) as usize];
    let r1_at = |i: i32, j: i32| r1[(i + 1) as usize][(j + 1) as usize];
    let p = |i: i32, a: i32, b: i32| -> T {
        if b == l {
            r1_at(i, 1) * prev_at(a, l - 1) - r1_at(i, -1) * prev_at(a, -l + 1)
        } else if b == -l {
            r1_at(i, 1) * prev_at(a, -l + 1) + r1_at(i, -1) * prev_at(a, l - 1)
        } else {
            r1_at(i, 0) * prev_at(a, b)
        }
    };
    let sqrt2 = T::SQRT_2();
    let w = 2 * l + 1;
    let mut out = vec![T::zero(); (w * w) as usize];
    for m in -l..=l {
        for n in -l..=l {
            let denom = if n.abs() == l { (2 * l) * (2 * l - 1) } else { (l + n) * (l - n) } as f64;
            let am = m.abs();
            let d0 = if m == 0 { 1.0 } else { 0.0 };
            let u = (((l + m) * (l - m)) as f64 / denom).sqrt();
            let v = 0.5 * ((1.0 + d0) * ((l + am - 1) * (l + am)) as f64 / denom).sqrt() * (1.0 - 2.0 * d0);
            let wc = -0.5 * (((l - am - 1) * (l - am)) as f64 / denom).max(0.0).sqrt() * (1.0 - d0);
            let mut val = T::zero();
            if u != 0.0 {
                val += T::lit(u) * p(0, m, n);
            }
            if v != 0.0 {
                let vv = if m == 0 {
                    p(1, 1, n) + p(-1, -1, n)
                } else if m > 0 {
                    if m == 1 {
                        p(1, 0, n) * sqrt2
                    } else {
                        p(1, m - 1, n) - p(-1, -m + 1, n)
                    }
                } else if m == -1 {
                    p(-1, 0, n) * sqrt2
                } else {
                    p(1, m + 1, n) + p(-1, -m - 1, n)
                };
                val += T::lit(v) * vv;
            }
            if wc != 0.0 {
                let ww = if m > 0 {
                    p(1, m + 1, n) + p(-1, -m - 1, n)
                } else {
                    p(1, m - 1, n) - p(-1, -m + 1, n)
                };
                val += T::lit(wc) * ww;
            }
            out[((m + l) * w + n + l) as usize] = val;
        }
    }
    out
}

/// Rotates `v` so that `eval(rotated, d) = eval(v, r⁻¹ d)`.
pub fn sh_rotate<T: Real>(v: &ShVector<T>, r: &Rotation3<T>) -> Result<ShVector<T>> {
    ShRotation::new(r, v.degree()).apply(v)
}

/// Writes `SH <N>` followed by `(N+1)²` coefficients, one per line.
pub fn write_sh_text<T: Real>(v: &ShVector<T>, out: &mut String) {
    let _ = writeln!(out, "SH {}", v.degree().n());
    for c in &v.coeffs {
        let _ = writeln!(out, "{c}");
    }
}

/// Reads consecutive `SH <N>` blocks from a whitespace-separated text stream.
pub fn parse_sh_blocks<T: Real>(text: &str) -> Result<Vec<ShVector<T>>> {
    let mut tokens = Tokens::new(text);
    let mut blocks = Vec::new();
    while let Some((off, tok)) = tokens.next() {
        if tok != "SH" {
            return Err(Error::parse(off, format!("expected `SH`, found `{tok}`")));
        }
        let (off, tok) = tokens.next().ok_or_else(|| Error::parse(text.len(), "missing SH degree"))?;
        let n: u32 = tok.parse().map_err(|_| Error::parse(off, format!("invalid SH degree `{tok}`")))?;
        let degree = ShDegree::new(n).map_err(|e| Error::parse(off, e.to_string()))?;
        let mut coeffs = Vec::with_capacity(degree.coeff_count());
        for _ in 0..degree.coeff_count() {
            let (off, tok) = tokens
                .next()
                .ok_or_else(|| Error::parse(text.len(), "truncated SH coefficient list"))?;
            let v: f64 = tok.parse().map_err(|_| Error::parse(off, format!("invalid number `{tok}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(off, "non-finite coefficient"));
            }
            coeffs.push(T::from_f64(v).ok_or_else(|| Error::parse(off, "unrepresentable coefficient"))?);
        }
        blocks.push(ShVector { degree, coeffs });
    }
    Ok(blocks)
}

pub fn parse_sh_text<T: Real>(text: &str) -> Result<ShVector<T>> {
    let mut blocks = parse_sh_blocks(text)?;
    match blocks.len() {
        1 => Ok(blocks.pop().unwrap()),
        n => Err(Error::parse(0, format!("expected one SH block, found {n}"))),
    }
}

struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some((start, &self.text[start..self.pos]))
    }
}
