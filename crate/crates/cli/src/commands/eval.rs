use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use prt_core::image::RgbImage;
use prt_core::metrics::{display_metrics, MetricReport};
use prt_core::pfm::read_pfm;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::inputs::with_path;
use crate::manifest::{beside, Run};
use crate::EvalArgs;

const MASK_FILE: &str = "mask.pfm";

#[derive(Debug, Clone, Serialize)]
struct PairReport {
    path: PathBuf,
    class: String,
    metrics: MetricReport,
}

#[derive(Debug, Clone, Default, Serialize)]
struct MeanReport {
    count: usize,
    l1_x100: f64,
    l2_x100: f64,
    psnr: f64,
}

impl MeanReport {
    fn of<'a>(items: impl Iterator<Item = &'a MetricReport>) -> Self {
        let mut m = MeanReport::default();
        for r in items {
            m.count += 1;
            m.l1_x100 += r.l1_x100;
            m.l2_x100 += r.l2_x100;
            m.psnr += r.psnr;
        }
        if m.count > 0 {
            let n = m.count as f64;
            m.l1_x100 /= n;
            m.l2_x100 /= n;
            m.psnr /= n;
        }
        m
    }
}

/// Buffer class from the file stem: albedo, shading, normal, otherwise image.
pub fn class_of(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
    match stem.as_str() {
        "albedo" | "shading" | "normal" => stem,
        _ => "image".into(),
    }
}

/// Relative paths of all `.pfm` files under `root` except masks, sorted.
fn pfm_files(root: &Path) -> CliResult<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(CliError::file(root, std::io::Error::new(std::io::ErrorKind::NotFound, "directory not found")));
    }
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::usage(e.to_string()))?;
        let p = entry.path();
        let is_pfm = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm"));
        if entry.file_type().is_file() && is_pfm && entry.file_name() != MASK_FILE {
            out.push(p.strip_prefix(root).expect("walk stays under root").to_path_buf());
        }
    }
    Ok(out)
}

fn read_image(run: &mut Run, path: &Path) -> CliResult<RgbImage<f64>> {
    Ok(read_pfm(&run.read(path)?).map_err(|e| with_path(path, e))?.cast())
}

/// Nearest `mask.pfm` at or above `rel`'s directory inside `root`.
fn find_mask(root: &Path, rel: &Path) -> Option<PathBuf> {
    let mut dir = rel.parent();
    while let Some(d) = dir {
        let candidate = root.join(d).join(MASK_FILE);
        if candidate.is_file() {
            return Some(candidate);
        }
        dir = d.parent();
    }
    None
}

pub fn run(a: &EvalArgs, args: &[String]) -> CliResult<()> {
    let mut run = Run::new("eval", args);
    let use_mask = !a.no_mask;
    let pred = pfm_files(&a.pred)?;
    let gt = pfm_files(&a.gt)?;
    let pred_only: Vec<&PathBuf> = pred.iter().filter(|p| !gt.contains(p)).collect();
    let gt_only: Vec<&PathBuf> = gt.iter().filter(|p| !pred.contains(p)).collect();

    let mut masks: BTreeMap<PathBuf, Vec<f64>> = BTreeMap::new();
    let mut pairs = Vec::new();
    for rel in pred.iter().filter(|p| gt.contains(p)) {
        let p = read_image(&mut run, &a.pred.join(rel))?;
        let g = read_image(&mut run, &a.gt.join(rel))?;
        let mask = match use_mask.then(|| find_mask(&a.gt, rel)).flatten() {
            Some(mp) => {
                if !masks.contains_key(&mp) {
                    let m = read_image(&mut run, &mp)?;
                    masks.insert(mp.clone(), m.data.iter().map(|px| px[0]).collect());
                }
                Some(&masks[&mp])
            }
            None => None,
        };
        let metrics = display_metrics(&p, &g, mask.map(Vec::as_slice)).map_err(|e| with_path(rel, e))?;
        pairs.push(PairReport { path: rel.clone(), class: class_of(rel), metrics });
    }

    let mut classes = BTreeMap::new();
    for class in pairs.iter().map(|p| p.class.clone()).collect::<std::collections::BTreeSet<_>>() {
        classes.insert(class.clone(), MeanReport::of(pairs.iter().filter(|p| p.class == class).map(|p| &p.metrics)));
    }
    let report = json!({
        "pairs": pairs,
        "classes": classes,
        "aggregate": MeanReport::of(pairs.iter().map(|p| &p.metrics)),
        "unpaired": { "pred_only": pred_only, "gt_only": gt_only },
    });
    run.write(&a.out, serde_json::to_string_pretty(&report).expect("report serializes").as_bytes())?;
    run.finish(&beside(&a.out))?;
    for p in &pred_only {
        eprintln!("unpaired prediction: {}", p.display());
    }
    for p in &gt_only {
        eprintln!("unpaired ground truth: {}", p.display());
    }
    if !pred_only.is_empty() || !gt_only.is_empty() {
        return Err(CliError::usage(format!("{} unpaired files", pred_only.len() + gt_only.len())));
    }
    println!("{} pairs compared", pairs.len());
    Ok(())
}
