//! `prt`: precompute transport, fit residuals, relight, generate datasets,
//! evaluate and serve.

mod commands;
mod error;
mod inputs;
mod lighting;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use prt_core::transport::TransportMode;

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "prt", version, about = "Precomputed radiance transfer relighting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Projects an environment onto SH light coefficients.
    ProjectEnv(ProjectEnvArgs),
    /// Computes buffers and transport for a scene.
    Transport(TransportArgs),
    /// Fits the residual term against path-traced training images.
    FitResidual(FitArgs),
    /// Relights a decomposed scene to PNG.
    Relight(RelightArgs),
    /// Generates a scene × illumination dataset.
    DatasetGen(DatasetArgs),
    /// Compares predicted and ground-truth buffers.
    Eval(EvalArgs),
    /// Runs the HTTP relighting service.
    Serve(ServeArgs),
    /// Re-runs a command from its manifest and checks the outputs.
    Rerun(RerunArgs),
}

#[derive(Args)]
pub struct ProjectEnvArgs {
    /// Environment: .hdr, .pfm, or a .toml environment description.
    #[arg(long)]
    pub env: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub degree: u32,
    /// yaw,pitch,roll in degrees (or `yaw=…,pitch=…,roll=…`).
    #[arg(long, allow_hyphen_values = true)]
    pub rotation: Option<String>,
    /// Scale to this reference radiance.
    #[arg(long)]
    pub normalize: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TransportArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub degree: Option<u32>,
    /// cos, cosvis or full.
    #[arg(long)]
    pub mode: Option<TransportMode>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Jittered-grid sample placement.
    #[arg(long)]
    pub stratified: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Decomposed scene to fit; computed from `--scene` when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Training environments (repeatable); defaults to the scene's environment.
    #[arg(long)]
    pub env: Vec<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub train_lights: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Path-tracer samples per pixel; defaults to the scene's setting.
    #[arg(long)]
    pub spp: Option<usize>,
    /// Also write each training light and its path-traced image here.
    #[arg(long)]
    pub save_training: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RelightArgs {
    /// Decomposed scene (.shc).
    #[arg(long)]
    pub scene: PathBuf,
    /// Environment map or .toml description, projected at the scene's degree.
    #[arg(long, conflicts_with = "light", required_unless_present = "light")]
    pub env: Option<PathBuf>,
    /// Light coefficients text file.
    #[arg(long)]
    pub light: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub rotation: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub exposure: f64,
    #[arg(long, default_value_t = 2.2)]
    pub gamma: f64,
    /// Reference radiance to normalize to; defaults to 0.8 for `--env` and none for `--light`.
    #[arg(long)]
    pub normalize: Option<f64>,
    /// Keep the light's own scale.
    #[arg(long, conflicts_with = "normalize")]
    pub no_normalize: bool,
    /// Comma-separated subset of albedo, shading, residual.
    #[arg(long, default_value = "albedo,shading,residual")]
    pub terms: String,
    #[arg(long, default_value_t = 10.0)]
    pub residual_scale: f64,
    /// Also write the linear image as PFM.
    #[arg(long)]
    pub linear: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DatasetArgs {
    /// Dataset description (.toml).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the dataset seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides every scene's transport sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Overrides every scene's path-tracer samples per pixel.
    #[arg(long)]
    pub spp: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Restrict metrics to `mask.pfm` from the ground-truth tree (default).
    #[arg(long, overrides_with = "no_mask")]
    pub mask: bool,
    #[arg(long)]
    pub no_mask: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Asset root with `scenes/` and `envs/`.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[arg(long, default_value_t = prt_service::DEFAULT_MAX_UPLOAD)]
    pub max_upload: usize,
}

#[derive(Args)]
struct RerunArgs {
    manifest: PathBuf,
    /// Run without comparing output hashes.
    #[arg(long)]
    no_check: bool,
}

fn execute(command: Command, args: &[String]) -> CliResult<()> {
    match command {
        Command::ProjectEnv(a) => commands::project_env::run(&a, args),
        Command::Transport(a) => commands::transport::run(&a, args),
        Command::FitResidual(a) => commands::fit::run(&a, args),
        Command::Relight(a) => commands::relight::run(&a, args),
        Command::DatasetGen(a) => commands::dataset::run(&a, args),
        Command::Eval(a) => commands::eval::run(&a, args),
        Command::Serve(a) => prt_service::run(a.port, a.assets.as_deref(), a.max_upload)
            .map_err(|e| CliError::Failed(e.to_string())),
        Command::Rerun(a) => rerun(&a),
    }
}

fn rerun(a: &RerunArgs) -> CliResult<()> {
    let recorded = manifest::load(&a.manifest)?;
    let argv = std::iter::once("prt".to_string()).chain(recorded.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::usage(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(CliError::usage("a rerun manifest cannot be re-run"));
    }
    std::env::set_current_dir(&recorded.cwd).map_err(|e| CliError::file(&recorded.cwd, e))?;
    execute(cli.command, &recorded.args)?;
    if a.no_check {
        return Ok(());
    }
    let bad = manifest::mismatches(&recorded);
    for p in &bad {
        eprintln!("mismatch: {}", p.display());
    }
    if !bad.is_empty() {
        return Err(CliError::Failed(format!("{} of {} outputs differ", bad.len(), recorded.outputs.len())));
    }
    println!("{} outputs reproduced", recorded.outputs.len());
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let workers = prt_core::parallel::worker_count(None);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
        log::warn!("worker pool: {e}");
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) = execute(cli.command, &args) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
