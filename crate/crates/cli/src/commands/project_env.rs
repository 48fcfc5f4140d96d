use prt_core::envlight::{normalize_env, project_env, reference_radiance, rotate_env, write_light_text};
use prt_core::sh::ShDegree;
use serde_json::json;

use crate::error::CliResult;
use crate::inputs::{load_env, rotation};
use crate::manifest::{beside, Run};
use crate::ProjectEnvArgs;

pub fn run(a: &ProjectEnvArgs, args: &[String]) -> CliResult<()> {
    let mut run = Run::new("project-env", args);
    let degree = ShDegree::new(a.degree)?;
    let env = load_env(&mut run, &a.env)?;
    let mut l = project_env(&env, degree);
    if let Some(target) = a.normalize {
        l = normalize_env(&l, target)?;
    }
    let l = rotate_env(&l, &rotation(a.rotation.as_deref())?);
    run.write(&a.out, write_light_text(&l).as_bytes())?;
    run.details(json!({ "degree": a.degree, "reference_radiance": reference_radiance(&l) }));
    run.finish(&beside(&a.out))?;
    Ok(())
}
