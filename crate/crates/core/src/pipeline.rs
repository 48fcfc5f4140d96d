//! Scene to buffer stack: G-buffers plus transport, with `E = 0`.

use crate::error::Result;
use crate::geometry::{Camera, TriScene};
use crate::oracle::render_buffers;
use crate::relight::DecomposedScene;
use crate::scalar::Real;
use crate::transport::{compute_transport_map, ResidualBuffer, TransportConfig};

pub fn decompose<T: Real>(
    scene: &TriScene<T>,
    cam: &Camera<T>,
    cfg: &TransportConfig,
    workers: Option<usize>,
) -> Result<DecomposedScene<T>> {
    let transport = compute_transport_map(scene, cam, cfg, workers)?;
    let g = render_buffers(scene, cam);
    let residual = ResidualBuffer::zeros(cam.width, cam.height, transport.degree);
    let out = DecomposedScene {
        width: cam.width,
        height: cam.height,
        albedo: g.albedo,
        mask: g.mask,
        normals: g.normals,
        material: g.material,
        transport,
        residual,
        residual_missing: false,
    };
    out.validate()?;
    Ok(out)
}
