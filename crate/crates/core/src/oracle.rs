//! Monte Carlo ground truth: direct (plus optional one-bounce) lighting under a
//! distant environment, and the G-buffers of a camera view.
//!
//! Pixel radiance is `ρ ⊙ ∫ L(ω) f(ω) V(ω) max(ω·n, 0) dω`, where `f` is the
//! white-albedo material BRDF, matching how the reconstruction applies albedo.
//! Results are premultiplied by the pixel mask.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::brdf::material_eval;
use crate::envlight::{project_env, EnvSampler, EnvironmentMap, LightCoeffs};
use crate::error::{Error, Result};
use crate::geometry::{Camera, Ray, SurfacePoint, TriScene};
use crate::image::RgbImage;
use crate::parallel::{map_indexed, pixel_rng};
use crate::scalar::Real;
use crate::sh::{ShBasis, ShDegree};
use crate::transport::square_samples;
use crate::vector::{Direction, Frame, Vec3};

/// How incident directions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PtSampling {
    /// Uniform sphere, pdf `1/4π`.
    #[default]
    UniformSphere,
    /// Cosine-weighted hemisphere about the shading normal.
    CosineHemisphere,
    /// Pixel luminance CDF of the environment map. Falls back to cosine
    /// sampling when the light is an SH expansion.
    EnvImportance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtConfig {
    pub spp: usize,
    pub seed: u64,
    /// 0 direct only, 1 adds one indirect bounce.
    pub max_bounces: u32,
    /// Replace the map by its SH expansion of this degree.
    pub band_limit_light: Option<u32>,
    pub sampling: PtSampling,
    /// Jittered-grid sample placement (still unbiased).
    pub stratified: bool,
}

impl Default for PtConfig {
    fn default() -> Self {
        Self { spp: 256, seed: 0, max_bounces: 0, band_limit_light: None, sampling: PtSampling::default(), stratified: false }
    }
}

/// Incident radiance for the oracle.
#[derive(Debug, Clone, Copy)]
pub enum Light<'a, T> {
    Env(&'a EnvironmentMap<T>),
    Sh(&'a LightCoeffs<T>),
}

enum Radiance<'a, T> {
    Env(&'a EnvironmentMap<T>, Option<EnvSampler>),
    Sh(LightCoeffs<T>, ShBasis<T>),
}

impl<T: Real> Radiance<'_, T> {
    #[inline]
    fn eval(&self, d: Direction<T>) -> [f64; 3] {
        match self {
            Radiance::Env(env, _) => env.lookup(d).map(|c| c.to_f64_lossy()),
            Radiance::Sh(l, basis) => l.eval(basis, d).map(|c| c.to_f64_lossy()),
        }
    }
}

struct Integrator<'a, T> {
    scene: &'a TriScene<T>,
    light: Radiance<'a, T>,
    cfg: PtConfig,
}

impl<T: Real> Integrator<'_, T> {
    /// `∫ L f V cos` with white albedo at `p` seen from `wo`, `spp` samples.
    fn direct<R: Rng>(&self, p: &SurfacePoint<T>, wo: Direction<T>, spp: usize, rng: &mut R) -> [f64; 3] {
        let n = p.shading_frame(wo);
        let frame = Frame::from_normal(n.vec());
        let offset = p.geometric_normal.vec();
        let mut acc = [0.0f64; 3];
        let samples: Vec<(f64, f64)> = square_samples(rng, spp, self.cfg.stratified).collect();
        for (u1, u2) in samples {
            let (wi, pdf) = match (&self.light, self.cfg.sampling) {
                (_, PtSampling::UniformSphere) => {
                    (Direction::uniform_sphere(T::lit(u1), T::lit(u2)), 1.0 / (4.0 * std::f64::consts::PI))
                }
                (Radiance::Env(_, Some(s)), PtSampling::EnvImportance) => s.sample([u1, u2]),
                _ => {
                    let r = u1.sqrt();
                    let phi = std::f64::consts::TAU * u2;
                    let z = (1.0 - u1).max(0.0).sqrt();
                    let local = Vec3::new(T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z));
                    let d = Direction::new_unchecked(frame.to_world(local));
                    (d, z / std::f64::consts::PI)
                }
            };
            let cos = wi.dot(n);
            if cos <= T::zero() || pdf <= 0.0 {
                continue;
            }
            let f = material_eval(&p.material, wi, wo, n);
            if f <= T::zero() {
                continue;
            }
            if self.scene.visibility(p.position, offset, wi) == T::zero() {
                continue;
            }
            let li = self.light.eval(wi);
            let w = (f * cos).to_f64_lossy() / pdf;
            for c in 0..3 {
                acc[c] += li[c] * w;
            }
        }
        acc.map(|a| a / spp as f64)
    }

    /// One cosine-sampled bounce off other scene surfaces, each lit directly.
    fn indirect<R: Rng>(&self, p: &SurfacePoint<T>, wo: Direction<T>, spp: usize, rng: &mut R) -> [f64; 3] {
        let n = p.shading_frame(wo);
        let frame = Frame::from_normal(n.vec());
        let mut acc = [0.0f64; 3];
        for _ in 0..spp {
            let (u1, u2): (f64, f64) = (rng.random(), rng.random());
            let r = u1.sqrt();
            let phi = std::f64::consts::TAU * u2;
            let z = (1.0 - u1).max(0.0).sqrt();
            if z <= 0.0 {
                continue;
            }
            let wi = Direction::new_unchecked(frame.to_world(Vec3::new(T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z))));
            let origin = p.position + p.geometric_normal.vec() * self.scene.shadow_epsilon();
            let ray = Ray::new(origin, wi);
            let Some(hit) = self.scene.intersect(&ray, T::infinity()) else { continue };
            let q = self.scene.surface_point(&ray, &hit);
            let lq = self.direct(&q, -wi, 1, rng);
            let rho = q.material.albedo;
            let f = material_eval(&p.material, wi, wo, n).to_f64_lossy();
            // cosine pdf cancels the cos factor: weight f·π
            let w = f * std::f64::consts::PI;
            for c in 0..3 {
                acc[c] += rho[c].to_f64_lossy() * lq[c] * w;
            }
        }
        acc.map(|a| a / spp as f64)
    }
}

/// Renders the reference image. Pixel `i` draws from a generator seeded with
/// `(cfg.seed, i)`, so the output does not depend on the worker count.
pub fn render_pt<T: Real>(
    scene: &TriScene<T>,
    light: Light<'_, T>,
    cam: &Camera<T>,
    cfg: &PtConfig,
    workers: Option<usize>,
) -> Result<RgbImage<T>> {
    if cfg.spp == 0 {
        return Err(Error::argument("spp must be at least 1"));
    }
    if cfg.max_bounces > 1 {
        return Err(Error::argument("max_bounces must be 0 or 1"));
    }
    let radiance = match (light, cfg.band_limit_light) {
        (Light::Env(env), Some(n)) => {
            let d = ShDegree::new(n)?;
            Radiance::Sh(project_env(env, d), ShBasis::new(d))
        }
        (Light::Env(env), None) => {
            let sampler = match cfg.sampling {
                PtSampling::EnvImportance => EnvSampler::new(env).ok(),
                _ => None,
            };
            Radiance::Env(env, sampler)
        }
        (Light::Sh(l), Some(n)) => {
            let d = ShDegree::new(n)?;
            Radiance::Sh(l.resized(d), ShBasis::new(d))
        }
        (Light::Sh(l), None) => Radiance::Sh(l.clone(), ShBasis::new(l.degree())),
    };
    let integ = Integrator { scene, light: radiance, cfg: *cfg };
    let data = map_indexed(cam.width * cam.height, workers, |i| {
        let ray = cam.ray(i % cam.width, i / cam.width);
        let Some(hit) = scene.intersect(&ray, T::infinity()) else { return [T::zero(); 3] };
        let p = scene.surface_point(&ray, &hit);
        let wo = Direction::new_unchecked(-ray.dir);
        let mut rng = pixel_rng(cfg.seed, i);
        let mut l = integ.direct(&p, wo, cfg.spp, &mut rng);
        if cfg.max_bounces == 1 {
            let ind = integ.indirect(&p, wo, cfg.spp, &mut rng);
            for c in 0..3 {
                l[c] += ind[c];
            }
        }
        let m = p.material;
        let coverage = (T::one() - m.transparency).to_f64_lossy();
        [0, 1, 2].map(|c| T::lit(m.albedo[c].to_f64_lossy() * l[c] * coverage))
    })?;
    RgbImage::from_data(cam.width, cam.height, data)
}

/// Ground-truth per-pixel scene properties.
#[derive(Debug, Clone, PartialEq)]
pub struct GBuffers<T> {
    pub albedo: RgbImage<T>,
    /// `(n + 1) / 2` of the shading normal facing the camera.
    pub normals: RgbImage<T>,
    /// Coverage × (1 − transparency).
    pub mask: Vec<T>,
    /// R roughness, G transparency, B metallic.
    pub material: RgbImage<T>,
}

pub fn render_buffers<T: Real>(scene: &TriScene<T>, cam: &Camera<T>) -> GBuffers<T> {
    let (w, h) = (cam.width, cam.height);
    let mut g = GBuffers {
        albedo: RgbImage::new(w, h),
        normals: RgbImage::new(w, h),
        mask: vec![T::zero(); w * h],
        material: RgbImage::new(w, h),
    };
    let half = T::lit(0.5);
    for (i, hit) in scene.primary_hits(cam).into_iter().enumerate() {
        let Some(p) = hit else { continue };
        let wo = Direction::new_unchecked(-cam.ray(i % w, i / w).dir);
        let n = p.shading_frame(wo).vec();
        let m = p.material;
        g.albedo.data[i] = m.albedo;
        g.normals.data[i] = [(n.x + T::one()) * half, (n.y + T::one()) * half, (n.z + T::one()) * half];
        g.mask[i] = T::one() - m.transparency;
        g.material.data[i] = [m.roughness, m.transparency, m.metallic];
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brdf::Material;
    use crate::geometry::{MaterialSlot, TriMesh};
    use crate::procedural::quad_plane;

    fn plane_scene(m: Material<f64>) -> (TriScene<f64>, Camera<f64>) {
        let mesh: TriMesh<f64> = quad_plane(Vec3::zero(), 1.0);
        let scene = TriScene::build(mesh, vec![MaterialSlot::constant(m)], None).unwrap();
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, 3.0), Vec3::zero(), Vec3::new(0.0, 1.0, 0.0), 20.0, 4, 4).unwrap();
        (scene, cam)
    }

    #[test]
    fn black_environment_renders_black() {
        let (scene, cam) = plane_scene(Material::lambertian([1.0; 3]));
        let env = EnvironmentMap::constant(16, 8, [0.0; 3]).unwrap();
        let img = render_pt(&scene, Light::Env(&env), &cam, &PtConfig { spp: 8, ..Default::default() }, Some(1)).unwrap();
        assert!(img.data.iter().all(|p| *p == [0.0; 3]));
    }

    #[test]
    fn buffers_of_a_plane() {
        let (scene, cam) = plane_scene(Material::new([0.2, 0.4, 0.6], 0.3, 0.1, 0.25));
        let g = render_buffers(&scene, &cam);
        assert_eq!(g.albedo.data[5], [0.2, 0.4, 0.6]);
        assert_eq!(g.material.data[5], [0.3, 0.25, 0.1]);
        assert_eq!(g.mask[5], 0.75);
        assert_eq!(g.normals.data[5], [0.5, 0.5, 1.0]);
    }
}
