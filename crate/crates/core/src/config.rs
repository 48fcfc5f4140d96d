//! TOML scene and dataset descriptions.
//!
//! Relative paths are resolved against the directory of the file that
//! mentions them. See `docs/config.md` for the full schema.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::brdf::Material;
use crate::envlight::{load_env_bytes, EnvironmentMap};
use crate::error::{Error, Result};
use crate::geometry::{Camera, MaterialSlot, OccluderPlane, TriMesh, TriScene};
use crate::obj::parse_obj;
use crate::oracle::{PtConfig, PtSampling};
use crate::png_io::load_texture;
use crate::procedural;
use crate::scalar::Real;
use crate::transport::{TransportConfig, TransportMode};
use crate::vector::{Direction, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default = "default_rings")]
        rings: usize,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    /// Square facing +z.
    Plane { center: [f64; 3], half_size: f64 },
    Box { center: [f64; 3], half: [f64; 3] },
    Capsule { a: [f64; 3], b: [f64; 3], radius: f64 },
    /// Stylized human figure; uses materials `material` (skin) and `material + 1` (clothing).
    CapsulePerson { base: [f64; 3], height: f64 },
    Obj { path: PathBuf },
}

fn default_rings() -> usize {
    48
}

fn default_segments() -> usize {
    96
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectConfig {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default)]
    pub material: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub albedo: [f64; 3],
    #[serde(default = "one")]
    pub roughness: f64,
    #[serde(default)]
    pub metallic: f64,
    #[serde(default)]
    pub transparency: f64,
    /// sRGB PNG multiplied into the albedo.
    #[serde(default)]
    pub albedo_texture: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub position: [f64; 3],
    pub target: [f64; 3],
    #[serde(default = "z_up")]
    pub up: [f64; 3],
    #[serde(default = "default_fov")]
    pub fov: f64,
    #[serde(default = "default_size")]
    pub width: usize,
    #[serde(default = "default_size")]
    pub height: usize,
}

fn z_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_fov() -> f64 {
    40.0
}

fn default_size() -> usize {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub degree: u32,
    pub mode: TransportMode,
    pub transport_samples: usize,
    pub pt_spp: usize,
    pub seed: u64,
    pub stratified: bool,
    pub pt_sampling: PtSampling,
    pub max_bounces: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            degree: 4,
            mode: TransportMode::FullReflectance,
            transport_samples: 1024,
            pt_spp: 256,
            seed: 0,
            stratified: false,
            pt_sampling: PtSampling::EnvImportance,
            max_bounces: 0,
        }
    }
}

impl RenderConfig {
    pub fn transport(&self) -> TransportConfig {
        TransportConfig {
            mode: self.mode,
            degree: self.degree,
            samples: self.transport_samples,
            seed: self.seed,
            stratified: self.stratified,
        }
    }

    pub fn pt(&self) -> PtConfig {
        PtConfig {
            spp: self.pt_spp,
            seed: self.seed ^ 0x5054,
            max_bounces: self.max_bounces,
            band_limit_light: None,
            sampling: self.pt_sampling,
            stratified: self.stratified,
        }
    }
}

/// Environment source: a file or one of the built-in analytic skies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvSpec {
    File {
        path: PathBuf,
    },
    Constant {
        radiance: [f64; 3],
        #[serde(default = "env_width")]
        width: usize,
    },
    /// Gradient sky, dark ground and a disc sun.
    SunSky {
        #[serde(default = "sun_elevation")]
        sun_elevation: f64,
        #[serde(default)]
        sun_azimuth: f64,
        #[serde(default = "sun_radiance")]
        sun_radiance: [f64; 3],
        #[serde(default = "sun_size")]
        sun_size: f64,
        #[serde(default = "zenith")]
        zenith: [f64; 3],
        #[serde(default = "horizon")]
        horizon: [f64; 3],
        #[serde(default = "ground")]
        ground: [f64; 3],
        #[serde(default = "env_width")]
        width: usize,
    },
}

fn env_width() -> usize {
    256
}
fn sun_elevation() -> f64 {
    35.0
}
fn sun_radiance() -> [f64; 3] {
    [40.0, 36.0, 30.0]
}
fn sun_size() -> f64 {
    6.0
}
fn zenith() -> [f64; 3] {
    [0.25, 0.4, 0.8]
}
fn horizon() -> [f64; 3] {
    [0.8, 0.8, 0.85]
}
fn ground() -> [f64; 3] {
    [0.15, 0.12, 0.1]
}

impl EnvSpec {
    pub fn load<T: Real>(&self, base: &Path) -> Result<EnvironmentMap<T>> {
        match self {
            EnvSpec::File { path } => {
                let p = resolve(base, path);
                let bytes = std::fs::read(&p).map_err(|e| Error::file(&p, e))?;
                load_env_bytes(&bytes)
            }
            EnvSpec::Constant { radiance, width } => {
                EnvironmentMap::constant(*width, (*width / 2).max(1), radiance.map(T::lit))
            }
            EnvSpec::SunSky { sun_elevation, sun_azimuth, sun_radiance, sun_size, zenith, horizon, ground, width } => {
                let sky = SunSky {
                    sun_elevation: *sun_elevation,
                    sun_azimuth: *sun_azimuth,
                    sun_radiance: *sun_radiance,
                    sun_size: *sun_size,
                    zenith: *zenith,
                    horizon: *horizon,
                    ground: *ground,
                };
                sky.render(*width, (*width / 2).max(1))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            EnvSpec::File { path } => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            EnvSpec::Constant { .. } => "constant".into(),
            EnvSpec::SunSky { sun_elevation, sun_azimuth, .. } => format!("sunsky_e{sun_elevation}_a{sun_azimuth}"),
        }
    }
}

/// Analytic sky used for fixtures and demos. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunSky {
    pub sun_elevation: f64,
    pub sun_azimuth: f64,
    pub sun_radiance: [f64; 3],
    /// Angular radius of the sun disc.
    pub sun_size: f64,
    pub zenith: [f64; 3],
    pub horizon: [f64; 3],
    pub ground: [f64; 3],
}

impl SunSky {
    pub fn sun_direction(&self) -> [f64; 3] {
        let (e, a) = (self.sun_elevation.to_radians(), self.sun_azimuth.to_radians());
        [e.cos() * a.cos(), e.cos() * a.sin(), e.sin()]
    }

    pub fn radiance(&self, d: [f64; 3]) -> [f64; 3] {
        let s = self.sun_direction();
        let cos_sun = d[0] * s[0] + d[1] * s[1] + d[2] * s[2];
        let mut out = if d[2] >= 0.0 {
            let t = d[2].sqrt();
            [0, 1, 2].map(|k| self.horizon[k] + (self.zenith[k] - self.horizon[k]) * t)
        } else {
            self.ground
        };
        if cos_sun >= self.sun_size.to_radians().cos() {
            for k in 0..3 {
                out[k] += self.sun_radiance[k];
            }
        }
        out
    }

    pub fn render<T: Real>(&self, width: usize, height: usize) -> Result<EnvironmentMap<T>> {
        EnvironmentMap::from_fn(width, height, |d: Direction<T>| {
            let v = [d.x(), d.y(), d.z()].map(|c| c.to_f64_lossy());
            self.radiance(v).map(T::lit)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub objects: Vec<ObjectConfig>,
    pub materials: Vec<MaterialConfig>,
    pub camera: CameraConfig,
    /// Invisible plane `z = height` that only blocks shadow rays.
    #[serde(default)]
    pub occluder_height: Option<f64>,
    #[serde(default)]
    pub env: Option<EnvSpec>,
    #[serde(default)]
    pub render: RenderConfig,
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn v3<T: Real>(a: [f64; 3]) -> Vec3<T> {
    Vec3::from_f64(a)
}

impl SceneConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SceneConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads and validates a scene file; returns it with its directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let cfg = Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate(&base)?;
        Ok((cfg, base))
    }

    pub fn validate(&self, base: &Path) -> Result<()> {
        let r = &self.render;
        if r.degree != 2 && r.degree != 4 {
            return Err(Error::Config(format!("render.degree must be 2 or 4, got {}", r.degree)));
        }
        if r.transport_samples == 0 || r.pt_spp == 0 {
            return Err(Error::Config("sample counts must be at least 1".into()));
        }
        if r.max_bounces > 1 {
            return Err(Error::Config("render.max_bounces must be 0 or 1".into()));
        }
        if self.objects.is_empty() {
            return Err(Error::Config("scene has no objects".into()));
        }
        if self.camera.width == 0 || self.camera.height == 0 {
            return Err(Error::Config("camera width and height must be positive".into()));
        }
        for (i, o) in self.objects.iter().enumerate() {
            let needed = o.material as usize + if matches!(o.shape, Shape::CapsulePerson { .. }) { 2 } else { 1 };
            if needed > self.materials.len() {
                return Err(Error::Config(format!("object {i} uses material {} but only {} are defined", needed - 1, self.materials.len())));
            }
            if let Shape::Obj { path } = &o.shape {
                check_exists(base, path)?;
            }
        }
        for m in &self.materials {
            if let Some(t) = &m.albedo_texture {
                check_exists(base, t)?;
            }
        }
        if let Some(EnvSpec::File { path }) = &self.env {
            check_exists(base, path)?;
        }
        Ok(())
    }

    pub fn camera<T: Real>(&self) -> Result<Camera<T>> {
        let c = &self.camera;
        Camera::look_at(v3(c.position), v3(c.target), v3(c.up), T::lit(c.fov), c.width, c.height)
    }

    pub fn build<T: Real>(&self, base: &Path) -> Result<TriScene<T>> {
        let mut mesh = TriMesh::<T>::default();
        for o in &self.objects {
            let mut part = match &o.shape {
                Shape::Sphere { center, radius, rings, segments } => {
                    procedural::uv_sphere(v3(*center), T::lit(*radius), *rings, *segments)
                }
                Shape::Plane { center, half_size } => procedural::quad_plane(v3(*center), T::lit(*half_size)),
                Shape::Box { center, half } => procedural::closed_box(v3(*center), v3(*half)),
                Shape::Capsule { a, b, radius } => procedural::capsule(v3(*a), v3(*b), T::lit(*radius), 16, 32),
                Shape::CapsulePerson { base: feet, height } => procedural::capsule_person(v3(*feet), T::lit(*height)),
                Shape::Obj { path } => {
                    let p = resolve(base, path);
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::file(&p, e))?;
                    parse_obj(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
            };
            part.ensure_normals();
            mesh.ensure_normals();
            mesh.append(&part, o.material);
        }
        let mut slots = Vec::with_capacity(self.materials.len());
        for m in &self.materials {
            let material = Material::new(m.albedo.map(T::lit), T::lit(m.roughness), T::lit(m.metallic), T::lit(m.transparency));
            let albedo_texture = match &m.albedo_texture {
                Some(t) => {
                    let p = resolve(base, t);
                    let bytes = std::fs::read(&p).map_err(|e| Error::file(&p, e))?;
                    Some(Arc::new(load_texture(&bytes)?))
                }
                None => None,
            };
            slots.push(MaterialSlot { material, albedo_texture });
        }
        TriScene::build(mesh, slots, self.occluder_height.map(|h| OccluderPlane { height: T::lit(h) }))
    }
}

fn check_exists(base: &Path, p: &Path) -> Result<()> {
    let full = resolve(base, p);
    if full.is_file() {
        Ok(())
    } else {
        Err(Error::file(&full, std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file does not exist")))
    }
}

/// Scene × illumination grid for dataset generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub seed: u64,
    /// Reference-radiance targets are drawn uniformly from this range.
    #[serde(default = "target_range")]
    pub target_range: [f64; 2],
    /// Scene files.
    pub scenes: Vec<PathBuf>,
    pub envs: Vec<EnvSpec>,
    /// Random yaw rotations per environment (1 keeps the original orientation).
    #[serde(default = "one_usize")]
    pub rotations: usize,
}

fn target_range() -> [f64; 2] {
    [0.7, 0.9]
}

fn one_usize() -> usize {
    1
}

impl DatasetConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let cfg: DatasetConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let [lo, hi] = cfg.target_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("target_range [{lo}, {hi}] must satisfy 0 < lo ≤ hi")));
        }
        if cfg.scenes.is_empty() || cfg.envs.is_empty() || cfg.rotations == 0 {
            return Err(Error::Config("dataset needs at least one scene, one env and one rotation".into()));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for s in &cfg.scenes {
            check_exists(&base, s)?;
        }
        for e in &cfg.envs {
            if let EnvSpec::File { path } = e {
                check_exists(&base, path)?;
            }
        }
        Ok((cfg, base))
    }
}
