use prt_core::envlight::write_light_text;
use prt_core::oracle::{render_pt, Light, PtConfig};
use prt_core::parallel::{derive_seed, pixel_rng};
use prt_core::pipeline::decompose;
use prt_core::residual::{fit_residual, ResidualFitConfig};
use prt_core::shc::{decomposed_from_container, decomposed_to_container, read_shc, write_shc};
use rand::Rng;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::inputs::{load_env, load_scene, mask_image, pfm_bytes};
use crate::lighting::{prepare, DEFAULT_TARGET};
use crate::manifest::{beside, Run};
use crate::FitArgs;

const YAW_STREAM: u64 = 0x5941_5700;

pub fn run(a: &FitArgs, args: &[String]) -> CliResult<()> {
    let mut run = Run::new("fit-residual", args);
    if a.train_lights == 0 {
        return Err(CliError::usage("--train-lights must be at least 1"));
    }
    let (cfg, base) = load_scene(&mut run, &a.scene)?;
    let scene = cfg.build::<f64>(&base)?;
    let cam = cfg.camera::<f64>()?;
    let seed = a.seed.unwrap_or(cfg.render.seed);
    run.seed(seed);

    let container = match &a.input {
        Some(p) => read_shc(&run.read(p)?)?,
        None => decomposed_to_container(&decompose(&scene, &cam, &cfg.render.transport(), None)?),
    };
    let mut dec = decomposed_from_container::<f64>(&container)?;
    if (dec.width, dec.height) != (cam.width, cam.height) {
        return Err(CliError::usage(format!(
            "decomposed scene is {}×{} but the camera renders {}×{}",
            dec.width, dec.height, cam.width, cam.height
        )));
    }

    let mut envs = Vec::new();
    for p in &a.env {
        envs.push(load_env(&mut run, p)?);
    }
    if envs.is_empty() {
        let spec = cfg.env.as_ref().ok_or_else(|| CliError::usage("no --env given and the scene has no [env]"))?;
        envs.push(spec.load::<f64>(&base)?);
    }

    let mut pt_cfg: PtConfig = cfg.render.pt();
    pt_cfg.spp = a.spp.unwrap_or(pt_cfg.spp);
    let degree = dec.transport.degree;
    let mut lights = Vec::new();
    let mut images = Vec::new();
    let mut yaws = Vec::new();
    for k in 0..a.train_lights {
        let yaw = pixel_rng(seed ^ YAW_STREAM, k).random_range(0.0..360.0);
        let prepared = prepare(&envs[k % envs.len()], yaw, degree, DEFAULT_TARGET)?;
        let cell_cfg = PtConfig { seed: derive_seed(pt_cfg.seed, k as u64), ..pt_cfg };
        log::info!("training light {k}: yaw {yaw:.2}");
        images.push(render_pt(&scene, Light::Env(&prepared.map), &cam, &cell_cfg, None)?);
        lights.push(prepared.coeffs);
        yaws.push(yaw);
    }
    let (e, report) = fit_residual(&dec, &images, &lights, &ResidualFitConfig { lambda: a.lambda, ..Default::default() })?;
    dec.residual = e;
    dec.residual_missing = false;

    if let Some(dir) = &a.save_training {
        run.write(&dir.join("mask.pfm"), &pfm_bytes(&mask_image(&dec.mask, dec.width, dec.height)))?;
        for (k, (img, l)) in images.iter().zip(&lights).enumerate() {
            let cell = dir.join(format!("train_{k:03}"));
            run.write(&cell.join("pt.pfm"), &pfm_bytes(img))?;
            run.write(&cell.join("light.txt"), write_light_text(l).as_bytes())?;
        }
    }
    run.write(&a.out, &write_shc(&decomposed_to_container(&dec))?)?;
    let report_json = json!({ "report": report, "yaws": yaws });
    let mut report_path = a.out.as_os_str().to_owned();
    report_path.push(".fit.json");
    run.write(std::path::Path::new(&report_path), serde_json::to_string_pretty(&report_json).unwrap().as_bytes())?;
    println!(
        "mean L2×100 over {} training lights: {:.5} without residual, {:.5} with",
        report.lights, report.mean_l2_x100_without_residual, report.mean_l2_x100_with_residual
    );
    run.details(json!({ "lambda": a.lambda, "spp": pt_cfg.spp, "yaws": yaws }));
    run.finish(&beside(&a.out))?;
    Ok(())
}
