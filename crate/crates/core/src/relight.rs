//! Image reconstruction from decomposed buffers: `R = ρ ⊙ (TᵀL) + EᵀL`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envlight::{rotate_env, LightCoeffs};
use crate::error::{Error, Result};
use crate::image::{to_display, RgbImage, Rgba8Image};
use crate::scalar::Real;
use crate::sh::dot_slices;
use crate::transport::{ResidualBuffer, TransportMap};
use crate::vector::Rotation3;

/// Per-pixel buffer stack of a relightable image.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedScene<T> {
    pub width: usize,
    pub height: usize,
    pub albedo: RgbImage<T>,
    /// Coverage × (1 − transparency).
    pub mask: Vec<T>,
    /// Normals encoded as `(n + 1) / 2`.
    pub normals: RgbImage<T>,
    /// R roughness, G transparency, B metallic.
    pub material: RgbImage<T>,
    pub transport: TransportMap<T>,
    pub residual: ResidualBuffer<T>,
    /// Set when the residual planes were absent on load and `E` was zero-filled.
    pub residual_missing: bool,
}

impl<T: Real> DecomposedScene<T> {
    /// Checks shared dimensions, shared degree and value ranges.
    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.width, self.height);
        let dims = [
            ("albedo", self.albedo.width, self.albedo.height),
            ("normals", self.normals.width, self.normals.height),
            ("material", self.material.width, self.material.height),
            ("transport", self.transport.width, self.transport.height),
            ("residual", self.residual.width, self.residual.height),
        ];
        for (name, bw, bh) in dims {
            if (bw, bh) != (w, h) {
                return Err(Error::Dimension(format!("{name} buffer is {bw}×{bh}, scene is {w}×{h}")));
            }
        }
        if self.mask.len() != w * h {
            return Err(Error::Dimension(format!("mask has {} pixels, scene has {}", self.mask.len(), w * h)));
        }
        if self.transport.degree != self.residual.degree {
            return Err(Error::Dimension(format!(
                "transport degree {} differs from residual degree {}",
                self.transport.degree.n(),
                self.residual.degree.n()
            )));
        }
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !self.mask.iter().all(|&m| unit(m)) {
            return Err(Error::argument("mask values must lie in [0, 1]"));
        }
        if !self.albedo.data.iter().all(|p| p.iter().all(|&c| unit(c))) {
            return Err(Error::argument("albedo values must lie in [0, 1]"));
        }
        if !self.residual.coeffs.iter().all(|c| c.is_finite()) || !self.transport.coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::argument("transport and residual coefficients must be finite"));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

fn check_degree<T: Real>(what: &str, buffer: crate::sh::ShDegree, l: &LightCoeffs<T>) -> Result<()> {
    if buffer != l.degree() {
        return Err(Error::argument(format!(
            "{what} has degree {} but the light has degree {}",
            buffer.n(),
            l.degree().n()
        )));
    }
    Ok(())
}

fn per_pixel<T: Real>(width: usize, height: usize, f: impl Fn(usize) -> [T; 3] + Sync + Send) -> RgbImage<T> {
    let data = (0..width * height).into_par_iter().map(f).collect();
    RgbImage { width, height, data }
}

/// `S_c = T · L_c` per pixel; pixels without geometry are 0.
pub fn shade<T: Real>(t: &TransportMap<T>, l: &LightCoeffs<T>) -> Result<RgbImage<T>> {
    check_degree("transport", t.degree, l)?;
    Ok(per_pixel(t.width, t.height, |i| {
        if !t.valid[i] {
            return [T::zero(); 3];
        }
        let v = t.pixel(i);
        [0, 1, 2].map(|c| dot_slices(v, l.channel(c).coeffs()))
    }))
}

/// `E_c · L_c` per pixel; signed.
pub fn residual_image<T: Real>(e: &ResidualBuffer<T>, l: &LightCoeffs<T>) -> Result<RgbImage<T>> {
    check_degree("residual", e.degree, l)?;
    Ok(per_pixel(e.width, e.height, |i| [0, 1, 2].map(|c| dot_slices(e.get(i, c), l.channel(c).coeffs()))))
}

/// `(ρ ⊙ S + E) · mask`, linear and unclamped.
pub fn reconstruct<T: Real>(scene: &DecomposedScene<T>, l: &LightCoeffs<T>) -> Result<RgbImage<T>> {
    compose(scene, l, Terms::ALL, T::one())
}

/// Reconstruction without the residual term, `ρ ⊙ S · mask`.
pub fn reconstruct_without_residual<T: Real>(scene: &DecomposedScene<T>, l: &LightCoeffs<T>) -> Result<RgbImage<T>> {
    compose(scene, l, Terms { albedo: true, shading: true, residual: false }, T::one())
}

/// Which factors of the reconstruction to display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terms {
    pub albedo: bool,
    pub shading: bool,
    pub residual: bool,
}

impl Terms {
    pub const ALL: Terms = Terms { albedo: true, shading: true, residual: true };
}

impl Default for Terms {
    fn default() -> Self {
        Self::ALL
    }
}

/// Builds the image selected by `terms`, masked:
///
/// | terms            | image            |
/// |------------------|------------------|
/// | ρ, S, E          | `ρ·S + E`        |
/// | ρ, S             | `ρ·S`            |
/// | S (± E)          | `S` (`+ E`)      |
/// | ρ (± E)          | `ρ` (`+ E`)      |
/// | E only           | `|E| · scale`    |
pub fn compose<T: Real>(scene: &DecomposedScene<T>, l: &LightCoeffs<T>, terms: Terms, residual_scale: T) -> Result<RgbImage<T>> {
    if !(terms.albedo || terms.shading || terms.residual) {
        return Err(Error::argument("at least one of albedo, shading, residual must be selected"));
    }
    check_degree("transport", scene.transport.degree, l)?;
    check_degree("residual", scene.residual.degree, l)?;
    let t = &scene.transport;
    let e = &scene.residual;
    let use_e = terms.residual && !scene.residual_missing;
    Ok(per_pixel(scene.width, scene.height, |i| {
        let m = scene.mask[i];
        if m == T::zero() {
            return [T::zero(); 3];
        }
        let rho = scene.albedo.data[i];
        let tv = t.pixel(i);
        let mut out = [T::zero(); 3];
        for c in 0..3 {
            let lc = l.channel(c).coeffs();
            let s = if terms.shading && t.valid[i] { dot_slices(tv, lc) } else { T::zero() };
            let base = match (terms.albedo, terms.shading) {
                (true, true) => rho[c] * s,
                (false, true) => s,
                (true, false) => rho[c],
                (false, false) => T::zero(),
            };
            let r = if use_e { dot_slices(e.get(i, c), lc) } else { T::zero() };
            out[c] = if terms.albedo || terms.shading { base + r } else { r.abs() * residual_scale };
            out[c] *= m;
        }
        out
    }))
}

/// Display settings for [`relight`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayParams<T> {
    pub exposure: T,
    pub gamma: T,
}

impl<T: Real> Default for DisplayParams<T> {
    fn default() -> Self {
        Self { exposure: T::zero(), gamma: T::lit(2.2) }
    }
}

/// Rotates the target light, reconstructs and encodes for display with the mask as alpha.
pub fn relight<T: Real>(
    scene: &DecomposedScene<T>,
    l_target: &LightCoeffs<T>,
    rot: &Rotation3<T>,
    display: DisplayParams<T>,
) -> Result<Rgba8Image> {
    relight_terms(scene, l_target, rot, display, Terms::ALL, T::lit(10.0))
}

pub fn relight_terms<T: Real>(
    scene: &DecomposedScene<T>,
    l_target: &LightCoeffs<T>,
    rot: &Rotation3<T>,
    display: DisplayParams<T>,
    terms: Terms,
    residual_scale: T,
) -> Result<Rgba8Image> {
    if !display.exposure.is_finite() {
        return Err(Error::argument("exposure must be finite"));
    }
    if !(display.gamma > T::zero()) || !display.gamma.is_finite() {
        return Err(Error::argument("gamma must be positive"));
    }
    let l = rotate_env(l_target, rot);
    let img = compose(scene, &l, terms, residual_scale)?;
    Ok(to_display(&img, Some(&scene.mask), display.exposure, display.gamma))
}
