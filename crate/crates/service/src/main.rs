use std::path::PathBuf;

use clap::Parser;
use prt_core::parallel::worker_count;

/// Serves relighting requests over HTTP.
#[derive(Parser)]
#[command(name = "prt-service", version)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Asset root with `scenes/` and `envs/`.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Upload size limit in bytes.
    #[arg(long, default_value_t = prt_service::DEFAULT_MAX_UPLOAD)]
    max_upload: usize,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(worker_count(None)).build_global() {
        log::warn!("worker pool: {e}");
    }
    if let Err(e) = prt_service::run(args.port, args.assets.as_deref(), args.max_upload) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
