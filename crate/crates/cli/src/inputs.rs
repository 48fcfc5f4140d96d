//! Argument parsing and input loading shared by commands.

use std::path::Path;

use prt_core::config::{EnvSpec, SceneConfig};
use prt_core::envlight::{load_env_bytes, EnvironmentMap};
use prt_core::image::RgbImage;
use prt_core::pfm::write_pfm;
use prt_core::relight::Terms;
use prt_core::vector::Rotation3;
use prt_core::Error;

use crate::error::{CliError, CliResult};
use crate::manifest::Run;

/// Parses `yaw,pitch,roll` or `yaw=…,pitch=…,roll=…` (missing parts are 0).
pub fn parse_rotation(s: &str) -> CliResult<[f64; 3]> {
    let mut out = [0.0; 3];
    let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
    if parts.is_empty() || parts.len() > 3 {
        return Err(CliError::usage(format!("rotation `{s}`: expected yaw,pitch,roll in degrees")));
    }
    for (i, part) in parts.iter().enumerate() {
        let (slot, value) = match part.split_once('=') {
            Some((key, v)) => {
                let slot = match key.trim() {
                    "yaw" => 0,
                    "pitch" => 1,
                    "roll" => 2,
                    k => return Err(CliError::usage(format!("rotation `{s}`: unknown angle `{k}`"))),
                };
                (slot, v.trim())
            }
            None => (i, *part),
        };
        let v: f64 = value.parse().map_err(|_| CliError::usage(format!("rotation `{s}`: `{value}` is not a number")))?;
        if !v.is_finite() {
            return Err(CliError::usage(format!("rotation `{s}`: angles must be finite")));
        }
        out[slot] = v;
    }
    Ok(out)
}

pub fn rotation(s: Option<&str>) -> CliResult<Rotation3<f64>> {
    let [y, p, r] = match s {
        Some(s) => parse_rotation(s)?,
        None => [0.0; 3],
    };
    Ok(Rotation3::from_yaw_pitch_roll_degrees(y, p, r))
}

pub fn parse_terms(s: &str) -> CliResult<Terms> {
    let mut t = Terms { albedo: false, shading: false, residual: false };
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "albedo" => t.albedo = true,
            "shading" => t.shading = true,
            "residual" => t.residual = true,
            other => return Err(CliError::usage(format!("unknown term `{other}` (albedo, shading, residual)"))),
        }
    }
    if !(t.albedo || t.shading || t.residual) {
        return Err(CliError::usage("select at least one of albedo, shading, residual"));
    }
    Ok(t)
}

/// Loads an environment from `.hdr`, `.pfm` or a `.toml` description.
pub fn load_env(run: &mut Run, path: &Path) -> CliResult<EnvironmentMap<f64>> {
    let bytes = run.read(path)?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        let text = String::from_utf8(bytes).map_err(|_| CliError::usage(format!("{}: not UTF-8", path.display())))?;
        let spec: EnvSpec =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        return Ok(spec.load(base)?);
    }
    load_env_bytes(&bytes).map_err(|e| with_path(path, e))
}

/// Loads a scene description and records it and its environment file as inputs.
pub fn load_scene(run: &mut Run, path: &Path) -> CliResult<(SceneConfig, std::path::PathBuf)> {
    if !path.is_file() {
        return Err(CliError::file(path, std::io::Error::new(std::io::ErrorKind::NotFound, "scene file not found")));
    }
    let (cfg, base) = SceneConfig::load(path)?;
    run.input(path)?;
    Ok((cfg, base))
}

/// Prefixes parse errors with the file they came from.
pub fn with_path(path: &Path, e: Error) -> CliError {
    match e {
        Error::Parse { offset, message } => {
            Error::Parse { offset, message: format!("{}: {message}", path.display()) }.into()
        }
        other => other.into(),
    }
}

pub fn pfm_bytes(img: &RgbImage<f64>) -> Vec<u8> {
    write_pfm(&img.cast::<f32>())
}

pub fn mask_image(mask: &[f64], width: usize, height: usize) -> RgbImage<f64> {
    RgbImage::from_data(width, height, mask.iter().map(|&m| [m; 3]).collect()).expect("mask matches image size")
}
