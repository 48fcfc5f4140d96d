use std::path::{Path, PathBuf};

use prt_core::config::{resolve, DatasetConfig, SceneConfig};
use prt_core::envlight::{parse_light_text, write_light_text, EnvironmentMap};
use prt_core::geometry::{Camera, TriScene};
use prt_core::image::{to_display, RgbImage};
use prt_core::oracle::{render_pt, Light, PtConfig};
use prt_core::parallel::{derive_seed, pixel_rng};
use prt_core::pipeline::decompose;
use prt_core::png_io::encode_png;
use prt_core::relight::{reconstruct, shade, DecomposedScene};
use prt_core::shc::{decomposed_from_container, decomposed_to_container, write_shc};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::inputs::{mask_image, pfm_bytes};
use crate::lighting::prepare;
use crate::manifest::Run;
use crate::DatasetArgs;

#[derive(Debug, Clone, Serialize)]
struct CellRecord {
    scene: String,
    env: String,
    rotation: usize,
    dir: PathBuf,
    yaw: f64,
    target: f64,
    scale: f64,
    status: String,
}

struct PreparedScene {
    scene: TriScene<f64>,
    cam: Camera<f64>,
    pt: PtConfig,
    dec: DecomposedScene<f64>,
}

fn prepare_scene(run: &mut Run, a: &DatasetArgs, path: &Path, dir: &Path) -> CliResult<PreparedScene> {
    let (cfg, base) = SceneConfig::load(path)?;
    run.input(path)?;
    let scene = cfg.build::<f64>(&base)?;
    let cam = cfg.camera::<f64>()?;
    let mut tc = cfg.render.transport();
    tc.samples = a.samples.unwrap_or(tc.samples);
    let mut pt = cfg.render.pt();
    pt.spp = a.spp.unwrap_or(pt.spp);
    let container = decomposed_to_container(&decompose(&scene, &cam, &tc, None)?);
    run.write(&dir.join("decomposed.shc"), &write_shc(&container)?)?;
    let dec = decomposed_from_container::<f64>(&container)?;
    run.write(&dir.join("albedo.pfm"), &pfm_bytes(&dec.albedo))?;
    run.write(&dir.join("mask.pfm"), &pfm_bytes(&mask_image(&dec.mask, dec.width, dec.height)))?;
    run.write(&dir.join("normal.pfm"), &pfm_bytes(&dec.normals))?;
    run.write(&dir.join("albedo.png"), &encode_png(&to_display(&dec.albedo, Some(&dec.mask), 0.0, 2.2))?)?;
    Ok(PreparedScene { scene, cam, pt, dec })
}

fn preview(img: &RgbImage<f64>, mask: &[f64]) -> CliResult<Vec<u8>> {
    Ok(encode_png(&to_display(img, Some(mask), 0.0, 2.2))?)
}

#[allow(clippy::too_many_arguments)]
fn render_cell(
    run: &mut Run,
    s: &PreparedScene,
    env: &EnvironmentMap<f64>,
    cell: u64,
    seed: u64,
    range: [f64; 2],
    dir: &Path,
    record: &mut CellRecord,
) -> CliResult<()> {
    let mut rng = pixel_rng(seed, cell as usize);
    let [lo, hi] = range;
    record.target = lo + (hi - lo) * rng.random::<f64>();
    record.yaw = if record.rotation == 0 { 0.0 } else { rng.random_range(0.0..360.0) };
    let prepared = prepare(env, record.yaw, s.dec.transport.degree, record.target)?;
    record.scale = prepared.scale;
    let text = write_light_text(&prepared.coeffs);
    run.write(&dir.join("light.txt"), text.as_bytes())?;
    let light = parse_light_text::<f64>(&text)?;
    let prt = reconstruct(&s.dec, &light)?;
    run.write(&dir.join("prt.pfm"), &pfm_bytes(&prt))?;
    run.write(&dir.join("shading.pfm"), &pfm_bytes(&shade(&s.dec.transport, &light)?))?;
    let pt_cfg = PtConfig { seed: derive_seed(s.pt.seed, cell), ..s.pt };
    let pt = render_pt(&s.scene, Light::Env(&prepared.map), &s.cam, &pt_cfg, None)?;
    run.write(&dir.join("pt.pfm"), &pfm_bytes(&pt))?;
    run.write(&dir.join("prt.png"), &preview(&prt, &s.dec.mask)?)?;
    run.write(&dir.join("pt.png"), &preview(&pt, &s.dec.mask)?)?;
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scene".into())
}

pub fn run(a: &DatasetArgs, args: &[String]) -> CliResult<()> {
    let mut run = Run::new("dataset-gen", args);
    if !a.config.is_file() {
        return Err(CliError::file(&a.config, std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found")));
    }
    let (cfg, base) = DatasetConfig::load(&a.config)?;
    run.input(&a.config)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    run.seed(seed);

    let mut envs = Vec::new();
    for spec in &cfg.envs {
        if let prt_core::config::EnvSpec::File { path } = spec {
            run.input(&resolve(&base, path))?;
        }
        envs.push((spec.label(), spec.load::<f64>(&base)));
    }

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let (ne, nr) = (cfg.envs.len(), cfg.rotations);
    for (si, scene_path) in cfg.scenes.iter().enumerate() {
        let name = format!("{si:02}-{}", stem(scene_path));
        let scene_dir = a.out.join(&name);
        let prepared = prepare_scene(&mut run, a, &resolve(&base, scene_path), &scene_dir);
        for (ei, (label, env)) in envs.iter().enumerate() {
            for r in 0..nr {
                let cell = ((si * ne + ei) * nr + r) as u64;
                let rel = PathBuf::from(&name).join(format!("{ei:02}-{label}-r{r}"));
                let mut record = CellRecord {
                    scene: name.clone(),
                    env: label.clone(),
                    rotation: r,
                    dir: rel.clone(),
                    yaw: 0.0,
                    target: 0.0,
                    scale: 0.0,
                    status: "ok".into(),
                };
                let result = match (&prepared, env) {
                    (Err(e), _) => Err(format!("scene: {e}")),
                    (_, Err(e)) => Err(format!("environment: {e}")),
                    (Ok(s), Ok(env)) => render_cell(&mut run, s, env, cell, seed, cfg.target_range, &a.out.join(&rel), &mut record)
                        .map_err(|e| e.to_string()),
                };
                if let Err(msg) = result {
                    eprintln!("cell {}: {msg}", rel.display());
                    record.status = format!("failed: {msg}");
                    failures.push(rel);
                }
                cells.push(record);
            }
        }
    }
    let total = cells.len();
    run.details(json!({ "cells": cells, "target_range": cfg.target_range }));
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::file(&a.out, e))?;
    run.finish(&a.out.join("manifest.json"))?;
    if !failures.is_empty() {
        return Err(CliError::Failed(format!("{} of {total} cells failed", failures.len())));
    }
    println!("{total} cells written to {}", a.out.display());
    Ok(())
}
