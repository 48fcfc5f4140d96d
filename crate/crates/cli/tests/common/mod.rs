#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use prt_core::image::RgbImage;
use prt_core::pfm::read_pfm;

pub fn prt(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_prt"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("PRT_THREADS", n.to_string());
    }
    cmd.output().expect("prt runs")
}

/// Runs `prt` and panics with its stderr unless it exits 0.
pub fn prt_ok(args: &[&str]) -> Output {
    let out = prt(args, None);
    assert!(out.status.success(), "prt {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn read_image(p: &Path) -> RgbImage<f32> {
    read_pfm(&std::fs::read(p).unwrap()).unwrap()
}

/// Flat-scanline Radiance file with every pixel set to `rgbe`.
pub fn hdr_bytes(w: usize, h: usize, rgbe: [u8; 4]) -> Vec<u8> {
    let mut out = format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {h} +X {w}\n").into_bytes();
    for _ in 0..w * h {
        out.extend_from_slice(&rgbe);
    }
    out
}

pub fn white_hdr(dir: &Path) -> PathBuf {
    let p = dir.join("white.hdr");
    std::fs::write(&p, hdr_bytes(32, 16, [128, 128, 128, 129])).unwrap();
    p
}

/// Unit sphere seen from `-y`, with the given roughness, size and env table.
pub fn sphere_scene(dir: &Path, name: &str, roughness: f64, size: usize, samples: usize, env: &str) -> PathBuf {
    let p = dir.join(format!("{name}.toml"));
    let text = format!(
        r#"name = "{name}"

[[objects]]
shape = "sphere"
center = [0.0, 0.0, 0.0]
radius = 1.0
rings = 24
segments = 48

[[materials]]
albedo = [0.6, 0.6, 0.6]
roughness = {roughness}

[camera]
position = [0.0, -4.0, 0.0]
target = [0.0, 0.0, 0.0]
fov = 35
width = {size}
height = {size}

[env]
{env}

[render]
degree = 4
mode = "full"
transport_samples = {samples}
pt_spp = 32
stratified = true
seed = 11
"#
    );
    std::fs::write(&p, text).unwrap();
    p
}

pub const SUN_EAST: &str = "kind = \"sun-sky\"\nsun_elevation = 10\nsun_azimuth = 0\nwidth = 64";

/// Mean x offset from the image center of linear luminance inside the mask.
pub fn centroid_x(img: &RgbImage<f32>) -> f64 {
    let (mut sum, mut wsum) = (0.0, 0.0);
    for y in 0..img.height {
        for x in 0..img.width {
            let p = img.get(x, y);
            let w = (p[0] + p[1] + p[2]) as f64;
            sum += w * (x as f64 + 0.5 - img.width as f64 / 2.0);
            wsum += w;
        }
    }
    sum / wsum
}
