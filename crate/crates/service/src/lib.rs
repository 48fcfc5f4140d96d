//! HTTP relighting service: scene and environment catalogs, PNG relighting and
//! rotated light coefficients.
//!
//! Asset layout under `--assets`:
//!
//! ```text
//! scenes/<id>.shc            saved decomposed scene
//! scenes/<id>/decomposed.shc
//! scenes/<id>.toml           scene description, decomposed at startup
//! envs/<id>.hdr | .pfm       environment map, projected at degree 4
//! envs/<id>.txt              light coefficients
//! envs/<id>.toml             environment description (`kind = "sun-sky"`, ...)
//! ```
//!
//! Every environment is normalized to reference radiance [`ENV_TARGET`].

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use prt_core::config::{EnvSpec, SceneConfig};
use prt_core::envlight::{load_env_bytes, normalize_env, parse_light_text, project_env, reference_radiance, rotate_env};
use prt_core::pipeline::decompose;
use prt_core::png_io::encode_png;
use prt_core::relight::{relight_terms, DecomposedScene, DisplayParams, Terms};
use prt_core::sh::ShDegree;
use prt_core::shc::{decomposed_from_container, decomposed_to_container, load_decomposed};
use prt_core::vector::Rotation3;
use prt_core::{Error, LightCoeffsF32, LightCoeffsF64};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

/// Reference radiance every served environment is normalized to.
pub const ENV_TARGET: f64 = 0.8;
/// Degree environments are projected at.
pub const ENV_DEGREE: u32 = 4;
pub const DEFAULT_MAX_UPLOAD: usize = 64 << 20;
/// Largest accepted rotation angle magnitude in degrees.
pub const MAX_ANGLE: f64 = 1e4;
/// Largest accepted exposure magnitude in stops.
pub const MAX_EXPOSURE: f64 = 30.0;

pub struct SceneEntry {
    pub id: String,
    pub name: String,
    pub scene: DecomposedScene<f32>,
}

pub struct EnvEntry {
    pub id: String,
    pub name: String,
    pub light: LightCoeffsF32,
    pub reference_radiance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneInfo {
    pub id: String,
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub degree: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvInfo {
    pub id: String,
    pub name: String,
    pub reference_radiance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffsResponse {
    pub env_id: String,
    pub degree: u32,
    /// R, G, B rows of `(degree + 1)²` coefficients.
    pub coeffs: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RotationParams {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl RotationParams {
    fn validate(&self) -> Result<Rotation3<f32>, ApiError> {
        for (name, v) in [("yaw", self.yaw), ("pitch", self.pitch), ("roll", self.roll)] {
            if !v.is_finite() || v.abs() > MAX_ANGLE {
                return Err(ApiError::invalid(format!("{name} must be finite with magnitude ≤ {MAX_ANGLE}, got {v}")));
            }
        }
        Ok(Rotation3::from_yaw_pitch_roll_degrees(self.yaw as f32, self.pitch as f32, self.roll as f32))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelightRequest {
    pub scene_id: String,
    pub env_id: String,
    #[serde(default)]
    pub rotation: RotationParams,
    #[serde(default)]
    pub exposure: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub terms: Terms,
    #[serde(default = "default_residual_scale")]
    pub residual_scale: f64,
}

fn default_gamma() -> f64 {
    2.2
}

fn default_residual_scale() -> f64 {
    10.0
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct CoeffsQuery {
    pub env_id: String,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub roll: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct UploadQuery {
    name: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} `{id}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

/// Catalogs shared by all requests. Scenes are fixed after startup; uploaded
/// environments are appended under generated ids.
pub struct AppState {
    scenes: BTreeMap<String, Arc<SceneEntry>>,
    envs: RwLock<BTreeMap<String, Arc<EnvEntry>>>,
    uploads: AtomicU64,
    pub max_upload: usize,
}

impl Default for AppState {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_UPLOAD)
    }
}

impl AppState {
    pub fn new(max_upload: usize) -> Self {
        Self { scenes: BTreeMap::new(), envs: RwLock::new(BTreeMap::new()), uploads: AtomicU64::new(0), max_upload }
    }

    /// Loads `scenes/` and `envs/` under `root`. Missing directories give empty catalogs.
    pub fn load(root: &Path, max_upload: usize) -> prt_core::Result<Self> {
        let mut state = Self::new(max_upload);
        for path in sorted_entries(&root.join("scenes"))? {
            let Some(id) = stem(&path) else { continue };
            let loaded = if path.is_dir() {
                let shc = path.join("decomposed.shc");
                if !shc.is_file() {
                    continue;
                }
                Some((id.clone(), load_decomposed::<f32>(&shc)?))
            } else {
                match extension(&path).as_str() {
                    "shc" => Some((id.clone(), load_decomposed::<f32>(&path)?)),
                    "toml" => Some(decompose_scene_file(&path)?),
                    _ => None,
                }
            };
            if let Some((name, scene)) = loaded {
                log::info!("scene `{id}`: {}×{} degree {}", scene.width, scene.height, scene.transport.degree.n());
                state.insert_scene(&id, &name, scene);
            }
        }
        for path in sorted_entries(&root.join("envs"))? {
            let Some(id) = stem(&path) else { continue };
            let light = match extension(&path).as_str() {
                "hdr" | "pfm" => {
                    let bytes = std::fs::read(&path).map_err(|e| Error::file(&path, e))?;
                    project_env(&load_env_bytes::<f64>(&bytes)?, degree())
                }
                "txt" => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
                    parse_light_text::<f64>(&text)?
                }
                "toml" => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
                    let spec: EnvSpec =
                        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                    project_env(&spec.load::<f64>(&base)?, degree())
                }
                _ => continue,
            };
            state.insert_env(&id, &id, &light)?;
        }
        Ok(state)
    }

    pub fn insert_scene(&mut self, id: &str, name: &str, scene: DecomposedScene<f32>) {
        self.scenes.insert(id.to_string(), Arc::new(SceneEntry { id: id.to_string(), name: name.to_string(), scene }));
    }

    /// Normalizes `light` to [`ENV_TARGET`] and stores it under `id`.
    pub fn insert_env(&self, id: &str, name: &str, light: &LightCoeffsF64) -> prt_core::Result<EnvInfo> {
        let light = normalize_env(light, ENV_TARGET)?;
        let entry = EnvEntry {
            id: id.to_string(),
            name: name.to_string(),
            reference_radiance: reference_radiance(&light),
            light: light.cast(),
        };
        let info = EnvInfo { id: entry.id.clone(), name: entry.name.clone(), reference_radiance: entry.reference_radiance };
        self.envs.write().expect("env catalog lock").insert(id.to_string(), Arc::new(entry));
        Ok(info)
    }

    pub fn scene(&self, id: &str) -> Option<Arc<SceneEntry>> {
        self.scenes.get(id).cloned()
    }

    pub fn env(&self, id: &str) -> Option<Arc<EnvEntry>> {
        self.envs.read().expect("env catalog lock").get(id).cloned()
    }

    pub fn scene_infos(&self) -> Vec<SceneInfo> {
        self.scenes
            .values()
            .map(|e| SceneInfo {
                id: e.id.clone(),
                name: e.name.clone(),
                width: e.scene.width,
                height: e.scene.height,
                degree: e.scene.transport.degree.n(),
            })
            .collect()
    }

    pub fn env_infos(&self) -> Vec<EnvInfo> {
        self.envs
            .read()
            .expect("env catalog lock")
            .values()
            .map(|e| EnvInfo { id: e.id.clone(), name: e.name.clone(), reference_radiance: e.reference_radiance })
            .collect()
    }

    /// Rotated light coefficients for `env_id`, truncated or padded to `degree`.
    pub fn rotated_light(&self, env_id: &str, rotation: &RotationParams) -> Result<LightCoeffsF32, ApiError> {
        let env = self.env(env_id).ok_or_else(|| ApiError::not_found("env", env_id))?;
        Ok(rotate_env(&env.light, &rotation.validate()?))
    }

    /// Renders a relight request to PNG bytes.
    pub fn render(&self, req: &RelightRequest) -> Result<Vec<u8>, ApiError> {
        let scene = self.scene(&req.scene_id).ok_or_else(|| ApiError::not_found("scene", &req.scene_id))?;
        let env = self.env(&req.env_id).ok_or_else(|| ApiError::not_found("env", &req.env_id))?;
        let rot = req.rotation.validate()?;
        if !req.exposure.is_finite() || req.exposure.abs() > MAX_EXPOSURE {
            return Err(ApiError::invalid(format!("exposure must be finite with magnitude ≤ {MAX_EXPOSURE}")));
        }
        if !(req.gamma > 0.0 && req.gamma.is_finite()) {
            return Err(ApiError::invalid("gamma must be positive"));
        }
        if !(req.residual_scale >= 0.0 && req.residual_scale.is_finite()) {
            return Err(ApiError::invalid("residual_scale must be finite and non-negative"));
        }
        let light = env.light.resized(scene.scene.transport.degree);
        let display = DisplayParams { exposure: req.exposure as f32, gamma: req.gamma as f32 };
        let img = relight_terms(&scene.scene, &light, &rot, display, req.terms, req.residual_scale as f32)
            .map_err(|e| match e {
                Error::Argument(m) => ApiError::invalid(m),
                other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
            })?;
        encode_png(&img).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
    }

    /// Decodes, projects, normalizes and stores an uploaded environment map.
    pub fn upload_env(&self, name: &str, bytes: &[u8]) -> Result<EnvInfo, ApiError> {
        if bytes.len() > self.max_upload {
            return Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "upload exceeds the size limit"));
        }
        let env = load_env_bytes::<f64>(bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        let light = project_env(&env, degree());
        let n = self.uploads.fetch_add(1, Ordering::SeqCst) + 1;
        self.insert_env(&format!("upload-{n}"), name, &light)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))
    }
}

fn degree() -> ShDegree {
    ShDegree::new(ENV_DEGREE).expect("supported degree")
}

fn stem(path: &Path) -> Option<String> {
    path.file_stem().map(|s| s.to_string_lossy().into_owned())
}

fn extension(path: &Path) -> String {
    path.extension().map(|s| s.to_string_lossy().to_ascii_lowercase()).unwrap_or_default()
}

fn sorted_entries(dir: &Path) -> prt_core::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::file(dir, e))? {
        out.push(entry.map_err(|e| Error::file(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Decomposes a scene description and quantizes it exactly as a saved container would be.
fn decompose_scene_file(path: &Path) -> prt_core::Result<(String, DecomposedScene<f32>)> {
    let (cfg, base) = SceneConfig::load(path)?;
    log::info!("decomposing {}", path.display());
    let scene = cfg.build::<f64>(&base)?;
    let dec = decompose(&scene, &cfg.camera::<f64>()?, &cfg.render.transport(), None)?;
    let name = cfg.name.clone().or_else(|| stem(path)).unwrap_or_default();
    Ok((name, decomposed_from_container(&decomposed_to_container(&dec))?))
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.max_upload;
    Router::new()
        .route("/api/scenes", get(list_scenes))
        .route("/api/envs", get(list_envs).post(upload_env))
        .route("/api/relight", post(relight))
        .route("/api/coeffs", get(coeffs))
        .layer(DefaultBodyLimit::max(limit))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn list_scenes(State(state): State<Arc<AppState>>) -> Json<Vec<SceneInfo>> {
    Json(state.scene_infos())
}

async fn list_envs(State(state): State<Arc<AppState>>) -> Json<Vec<EnvInfo>> {
    Json(state.env_infos())
}

async fn relight(State(state): State<Arc<AppState>>, Json(req): Json<RelightRequest>) -> Result<Response, ApiError> {
    let png = tokio::task::spawn_blocking(move || state.render(&req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn coeffs(State(state): State<Arc<AppState>>, Query(q): Query<CoeffsQuery>) -> Result<Json<CoeffsResponse>, ApiError> {
    let rotation = RotationParams { yaw: q.yaw, pitch: q.pitch, roll: q.roll };
    let l = state.rotated_light(&q.env_id, &rotation)?;
    Ok(Json(CoeffsResponse {
        env_id: q.env_id,
        degree: l.degree().n(),
        coeffs: l.channels().iter().map(|c| c.coeffs().to_vec()).collect(),
    }))
}

async fn upload_env(
    State(state): State<Arc<AppState>>,
    Query(q): Query<UploadQuery>,
    req: Request,
) -> Result<Json<EnvInfo>, ApiError> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let (name, bytes) = if is_multipart {
        let mut mp = Multipart::from_request(req, &()).await.map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        let field = mp
            .next_field()
            .await
            .map_err(|e| ApiError::new(e.status(), e.body_text()))?
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "multipart body has no file field"))?;
        let name = field.file_name().and_then(|f| stem(Path::new(f))).or(q.name).unwrap_or_else(|| "upload".into());
        let bytes = field.bytes().await.map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        (name, bytes)
    } else {
        let bytes = Bytes::from_request(req, &()).await.map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        (q.name.unwrap_or_else(|| "upload".into()), bytes)
    };
    let info = tokio::task::spawn_blocking(move || state.upload_env(&name, &bytes))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(info))
}

/// Serves `state` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Blocking entry point: loads assets and serves on `0.0.0.0:port` until interrupted.
pub fn run(port: u16, assets: Option<&Path>, max_upload: usize) -> Result<(), Box<dyn std::error::Error>> {
    let state = match assets {
        Some(root) => AppState::load(root, max_upload)?,
        None => AppState::new(max_upload),
    };
    log::info!("{} scenes, {} envs", state.scenes.len(), state.env_infos().len());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], port))).await?;
        log::info!("listening on {}", listener.local_addr()?);
        serve(listener, Arc::new(state), async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    })?;
    Ok(())
}

/// Server on its own runtime thread, stopped on drop.
pub struct BackgroundServer {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl BackgroundServer {
    /// Binds `127.0.0.1` on an ephemeral port and serves `state`.
    pub fn start(state: Arc<AppState>) -> std::io::Result<Self> {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let listener = rt.block_on(tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            rt.block_on(serve(listener, state, async {
                let _ = rx.await;
            }))
        });
        Ok(Self { addr, stop: Some(tx), thread: Some(thread) })
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
