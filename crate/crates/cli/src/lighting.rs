//! Rotated, normalized training and dataset illumination.

use prt_core::envlight::{normalization_scale, project_env, rotate_map_pixels, EnvironmentMap, LightCoeffs};
use prt_core::sh::ShDegree;
use prt_core::vector::Rotation3;

use crate::error::CliResult;

/// Reference radiance lights are normalized to unless a command says otherwise.
pub const DEFAULT_TARGET: f64 = 0.8;

pub struct PreparedLight {
    /// The rotated map scaled to the target, for the path tracer.
    pub map: EnvironmentMap<f64>,
    /// Its SH projection, for the PRT reconstruction.
    pub coeffs: LightCoeffs<f64>,
    pub scale: f64,
}

/// Rotates `env` by `yaw` degrees about `z`, projects it and scales both the
/// map and the coefficients to reference radiance `target`.
pub fn prepare(env: &EnvironmentMap<f64>, yaw: f64, degree: ShDegree, target: f64) -> CliResult<PreparedLight> {
    let rotated = if yaw == 0.0 { env.clone() } else { rotate_map_pixels(env, &Rotation3::from_yaw_pitch_roll_degrees(yaw, 0.0, 0.0)) };
    let l = project_env(&rotated, degree);
    let scale = normalization_scale(&l, target)?;
    Ok(PreparedLight { map: rotated.scaled(scale)?, coeffs: l.scaled(scale), scale })
}
