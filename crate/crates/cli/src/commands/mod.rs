pub mod dataset;
pub mod eval;
pub mod fit;
pub mod project_env;
pub mod relight;
pub mod transport;
