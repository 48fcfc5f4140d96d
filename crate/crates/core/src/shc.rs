//! `SHC1` multi-plane float container and decomposed-scene persistence.
//!
//! Layout (all integers u32 little-endian):
//!
//! ```text
//! "SHC1" | width | height | channel_count
//! channel_count × (name_len | name bytes, UTF-8)
//! channel_count × width·height × f32 LE      (plane after plane, rows top to bottom)
//! ```

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::relight::DecomposedScene;
use crate::scalar::Real;
use crate::sh::ShDegree;
use crate::transport::{ResidualBuffer, TransportMap};

pub const MAGIC: &[u8; 4] = b"SHC1";

#[derive(Debug, Clone, PartialEq)]
pub struct ShcContainer {
    pub width: u32,
    pub height: u32,
    pub names: Vec<String>,
    /// One plane of `width·height` values per name.
    pub planes: Vec<Vec<f32>>,
}

impl ShcContainer {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, names: Vec::new(), planes: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, plane: Vec<f32>) {
        self.names.push(name.into());
        self.planes.push(plane);
    }

    pub fn plane(&self, name: &str) -> Option<&[f32]> {
        self.names.iter().position(|n| n == name).map(|i| self.planes[i].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f32]> {
        self.plane(name).ok_or_else(|| Error::MissingPlane(name.to_string()))
    }

    fn validate(&self) -> Result<()> {
        if self.names.is_empty() {
            return Err(Error::argument("SHC container needs at least one channel"));
        }
        if self.names.len() != self.planes.len() {
            return Err(Error::argument("SHC container has mismatched names and planes"));
        }
        let mut seen = HashSet::new();
        let len = self.width as usize * self.height as usize;
        for (name, plane) in self.names.iter().zip(&self.planes) {
            if !seen.insert(name.as_str()) {
                return Err(Error::argument(format!("duplicate SHC channel `{name}`")));
            }
            if plane.len() != len {
                return Err(Error::Dimension(format!("SHC channel `{name}` has {} values, expected {len}", plane.len())));
            }
        }
        Ok(())
    }
}

pub fn write_shc(c: &ShcContainer) -> Result<Vec<u8>> {
    c.validate()?;
    let payload = c.planes.len() * c.width as usize * c.height as usize * 4;
    let mut out = Vec::with_capacity(16 + payload + c.names.iter().map(|n| n.len() + 4).sum::<usize>());
    out.extend_from_slice(MAGIC);
    for v in [c.width, c.height, c.names.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for name in &c.names {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for plane in &c.planes {
        for v in plane {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::parse(self.pos, format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_shc(bytes: &[u8]) -> Result<ShcContainer> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::parse(0, "bad magic (expected SHC1)"));
    }
    let width = r.u32("header")?;
    let height = r.u32("header")?;
    let count_at = r.pos;
    let count = r.u32("header")? as usize;
    if count == 0 {
        return Err(Error::parse(count_at, "SHC container has no channels"));
    }
    let mut names = Vec::with_capacity(count.min(4096));
    let mut seen = HashSet::new();
    for _ in 0..count {
        let at = r.pos;
        let len = r.u32("channel name length")? as usize;
        let raw = r.take(len, "channel name")?;
        let name = std::str::from_utf8(raw).map_err(|_| Error::parse(at + 4, "channel name is not UTF-8"))?.to_string();
        if !seen.insert(name.clone()) {
            return Err(Error::parse(at, format!("duplicate channel name `{name}`")));
        }
        names.push(name);
    }
    let plane_len = width as usize * height as usize;
    let need = plane_len
        .checked_mul(count)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::parse(count_at, "payload size overflows"))?;
    let payload = r.take(need, "payload")?;
    if r.pos != bytes.len() {
        return Err(Error::parse(r.pos, format!("{} trailing bytes after payload", bytes.len() - r.pos)));
    }
    let planes = payload
        .chunks_exact(plane_len.max(1) * 4)
        .take(count)
        .map(|chunk| chunk.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect())
        .collect::<Vec<Vec<f32>>>();
    let planes = if plane_len == 0 { vec![Vec::new(); count] } else { planes };
    Ok(ShcContainer { width, height, names, planes })
}

const RGB: [&str; 3] = ["r", "g", "b"];

pub fn transport_plane_name(i: usize) -> String {
    format!("transport.{i:02}")
}

pub fn residual_plane_name(c: usize, i: usize) -> String {
    format!("residual.{}.{i:02}", RGB[c])
}

fn rgb_planes<T: Real>(c: &mut ShcContainer, prefix: &str, suffixes: [&str; 3], img: &RgbImage<T>) {
    for (k, s) in suffixes.iter().enumerate() {
        c.push(format!("{prefix}.{s}"), img.data.iter().map(|p| p[k].to_f32_lossy()).collect());
    }
}

/// Packs all buffers into planes: albedo, mask, normals, material, transport, residual.
pub fn decomposed_to_container<T: Real>(scene: &DecomposedScene<T>) -> ShcContainer {
    let mut c = ShcContainer::new(scene.width as u32, scene.height as u32);
    rgb_planes(&mut c, "albedo", RGB, &scene.albedo);
    c.push("mask", scene.mask.iter().map(|v| v.to_f32_lossy()).collect());
    rgb_planes(&mut c, "normal", ["x", "y", "z"], &scene.normals);
    rgb_planes(&mut c, "material", ["rough", "transp", "metal"], &scene.material);
    let n = scene.transport.degree.coeff_count();
    let px = scene.pixel_count();
    for i in 0..n {
        c.push(transport_plane_name(i), (0..px).map(|p| scene.transport.pixel(p)[i].to_f32_lossy()).collect());
    }
    for ch in 0..3 {
        for i in 0..n {
            c.push(residual_plane_name(ch, i), (0..px).map(|p| scene.residual.get(p, ch)[i].to_f32_lossy()).collect());
        }
    }
    c
}

fn read_rgb<T: Real>(c: &ShcContainer, prefix: &str, suffixes: [&str; 3]) -> Result<RgbImage<T>> {
    let planes: Vec<&[f32]> = suffixes.iter().map(|s| c.require(&format!("{prefix}.{s}"))).collect::<Result<_>>()?;
    let data = (0..c.width as usize * c.height as usize)
        .map(|i| [0, 1, 2].map(|k| T::from_f32_exact(planes[k][i])))
        .collect();
    RgbImage::from_data(c.width as usize, c.height as usize, data)
}

/// Rebuilds a scene from planes. The degree is inferred from the number of
/// `transport.*` planes, which must be 9 or 25. Missing residual planes load
/// as `E = 0` with `residual_missing` set.
pub fn decomposed_from_container<T: Real>(c: &ShcContainer) -> Result<DecomposedScene<T>> {
    let (w, h) = (c.width as usize, c.height as usize);
    let px = w * h;
    let albedo = read_rgb(c, "albedo", RGB)?;
    let mask: Vec<T> = c.require("mask")?.iter().map(|&v| T::from_f32_exact(v)).collect();
    let normals = read_rgb(c, "normal", ["x", "y", "z"])?;
    let material = read_rgb(c, "material", ["rough", "transp", "metal"])?;
    let count = c.names.iter().filter(|n| n.starts_with("transport.")).count();
    let degree = match count {
        9 => ShDegree::new(2)?,
        25 => ShDegree::new(4)?,
        0 => return Err(Error::MissingPlane(transport_plane_name(0))),
        n => return Err(Error::Dimension(format!("{n} transport planes; only 9 (degree 2) or 25 (degree 4) are accepted"))),
    };
    let n = degree.coeff_count();
    let mut transport = TransportMap::zeros(w, h, degree);
    for i in 0..n {
        let plane = c.require(&transport_plane_name(i))?;
        for p in 0..px {
            transport.pixel_mut(p)[i] = T::from_f32_exact(plane[p]);
        }
    }
    for p in 0..px {
        transport.valid[p] = mask[p] > T::zero() || transport.pixel(p).iter().any(|v| *v != T::zero());
    }
    let mut residual = ResidualBuffer::zeros(w, h, degree);
    let has_residual = c.names.iter().any(|n| n.starts_with("residual."));
    let mut residual_missing = false;
    if has_residual {
        for ch in 0..3 {
            for i in 0..n {
                let plane = c.require(&residual_plane_name(ch, i))?;
                for p in 0..px {
                    residual.get_mut(p, ch)[i] = T::from_f32_exact(plane[p]);
                }
            }
        }
    } else {
        log::warn!("container has no residual planes; loading with E = 0");
        residual_missing = true;
    }
    let scene = DecomposedScene { width: w, height: h, albedo, mask, normals, material, transport, residual, residual_missing };
    scene.validate()?;
    Ok(scene)
}

pub fn save_decomposed<T: Real>(scene: &DecomposedScene<T>, path: &Path) -> Result<()> {
    let bytes = write_shc(&decomposed_to_container(scene))?;
    std::fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

pub fn load_decomposed<T: Real>(path: &Path) -> Result<DecomposedScene<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    decomposed_from_container(&read_shc(&bytes)?)
}
