use prt_core::pipeline::decompose;
use prt_core::shc::{decomposed_to_container, write_shc};
use serde_json::json;

use crate::error::CliResult;
use crate::inputs::load_scene;
use crate::manifest::{beside, Run};
use crate::TransportArgs;

pub fn run(a: &TransportArgs, args: &[String]) -> CliResult<()> {
    let mut run = Run::new("transport", args);
    let (cfg, base) = load_scene(&mut run, &a.scene)?;
    let mut tc = cfg.render.transport();
    tc.degree = a.degree.unwrap_or(tc.degree);
    tc.mode = a.mode.unwrap_or(tc.mode);
    tc.samples = a.samples.unwrap_or(tc.samples);
    tc.seed = a.seed.unwrap_or(tc.seed);
    tc.stratified |= a.stratified;
    run.seed(tc.seed);
    let scene = cfg.build::<f64>(&base)?;
    let dec = decompose(&scene, &cfg.camera::<f64>()?, &tc, None)?;
    run.write(&a.out, &write_shc(&decomposed_to_container(&dec))?)?;
    run.details(json!({ "transport": tc }));
    run.finish(&beside(&a.out))?;
    Ok(())
}
