use prt_core::envlight::{normalize_env, parse_light_text, project_env, rotate_env};
use prt_core::image::to_display;
use prt_core::png_io::encode_png;
use prt_core::relight::compose;
use prt_core::shc::{decomposed_from_container, read_shc};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::inputs::{load_env, parse_terms, pfm_bytes, rotation, with_path};
use crate::lighting::DEFAULT_TARGET;
use crate::manifest::{beside, Run};
use crate::RelightArgs;

pub fn run(a: &RelightArgs, args: &[String]) -> CliResult<()> {
    let mut run = Run::new("relight", args);
    if !a.exposure.is_finite() {
        return Err(CliError::usage("--exposure must be finite"));
    }
    if !(a.gamma > 0.0 && a.gamma.is_finite()) {
        return Err(CliError::usage("--gamma must be positive"));
    }
    if !(a.residual_scale >= 0.0 && a.residual_scale.is_finite()) {
        return Err(CliError::usage("--residual-scale must be finite and non-negative"));
    }
    let terms = parse_terms(&a.terms)?;
    let rot = rotation(a.rotation.as_deref())?;
    let bytes = run.read(&a.scene)?;
    let scene = decomposed_from_container::<f64>(&read_shc(&bytes).map_err(|e| with_path(&a.scene, e))?)?;
    let degree = scene.transport.degree;

    let (light, default_target) = match (&a.env, &a.light) {
        (Some(env), _) => (project_env(&load_env(&mut run, env)?, degree), Some(DEFAULT_TARGET)),
        (None, Some(path)) => {
            let text = String::from_utf8(run.read(path)?)
                .map_err(|_| CliError::usage(format!("{}: not UTF-8", path.display())))?;
            (parse_light_text::<f64>(&text).map_err(|e| with_path(path, e))?.resized(degree), None)
        }
        (None, None) => return Err(CliError::usage("one of --env or --light is required")),
    };
    let target = if a.no_normalize { None } else { a.normalize.or(default_target) };
    let light = match target {
        Some(t) => normalize_env(&light, t)?,
        None => light,
    };
    let rotated = rotate_env(&light, &rot);
    let img = compose(&scene, &rotated, terms, a.residual_scale)?;
    if let Some(p) = &a.linear {
        run.write(p, &pfm_bytes(&img))?;
    }
    let display = to_display(&img, Some(&scene.mask), a.exposure, a.gamma);
    run.write(&a.out, &encode_png(&display)?)?;
    run.details(json!({ "normalize": target, "terms": terms, "exposure": a.exposure, "gamma": a.gamma }));
    run.finish(&beside(&a.out))?;
    Ok(())
}
