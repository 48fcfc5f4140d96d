use std::sync::Arc;
use std::time::Instant;

use prt_core::envlight::{lambert_transport, project_env, reference_radiance, rotate_env, write_light_text, EnvironmentMap};
use prt_core::image::RgbImage;
use prt_core::png_io::decode_png;
use prt_core::relight::DecomposedScene;
use prt_core::sh::ShDegree;
use prt_core::shc::save_decomposed;
use prt_core::transport::{ResidualBuffer, TransportMap};
use prt_core::vector::{Direction, Rotation3, Vec3};
use prt_service::{AppState, BackgroundServer, CoeffsResponse, EnvInfo, SceneInfo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqwest::blocking::{multipart, Client};
use reqwest::StatusCode;
use serde_json::json;

fn d4() -> ShDegree {
    ShDegree::new(4).unwrap()
}

/// Flat-scanline Radiance file with every pixel set to `rgbe`.
fn hdr_bytes(w: usize, h: usize, rgbe: [u8; 4]) -> Vec<u8> {
    let mut out = format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {h} +X {w}\n").into_bytes();
    for _ in 0..w * h {
        out.extend_from_slice(&rgbe);
    }
    out
}

fn white_hdr() -> Vec<u8> {
    hdr_bytes(32, 16, [128, 128, 128, 129])
}

/// Orthographic view of a unit sphere facing `-y`, with Lambertian transport.
fn sphere_scene(size: usize, albedo: [f64; 3]) -> DecomposedScene<f32> {
    let mut t = TransportMap::zeros(size, size, d4());
    let mut rho = RgbImage::new(size, size);
    let mut mask = vec![0.0f32; size * size];
    let mut normals = RgbImage::new(size, size);
    for j in 0..size {
        for i in 0..size {
            let u = (i as f64 + 0.5) / size as f64 * 2.0 - 1.0;
            let v = 1.0 - (j as f64 + 0.5) / size as f64 * 2.0;
            let r2 = u * u + v * v;
            if r2 >= 1.0 {
                continue;
            }
            let p = j * size + i;
            let n = Direction::new(Vec3::new(u, -(1.0 - r2).sqrt(), v)).unwrap();
            let tc = lambert_transport(n, d4());
            for (dst, src) in t.pixel_mut(p).iter_mut().zip(tc.coeffs()) {
                *dst = *src as f32;
            }
            t.valid[p] = true;
            mask[p] = 1.0;
            rho.data[p] = albedo.map(|a| a as f32);
            normals.data[p] = [n.x(), n.y(), n.z()].map(|c| ((c + 1.0) * 0.5) as f32);
        }
    }
    DecomposedScene {
        width: size,
        height: size,
        albedo: rho,
        mask,
        normals,
        material: RgbImage::new(size, size),
        transport: t,
        residual: ResidualBuffer::zeros(size, size, d4()),
        residual_missing: false,
    }
}

fn random_scene(size: usize, seed: u64) -> DecomposedScene<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = sphere_scene(size, [0.5, 0.5, 0.5]);
    for v in &mut s.residual.coeffs {
        *v = rng.random_range(-0.05..0.05);
    }
    for p in &mut s.albedo.data {
        *p = [rng.random(), rng.random(), rng.random()];
    }
    s
}

/// Dim ambient plus a bright lobe toward `+x`.
fn lobe_light() -> prt_core::LightCoeffsF64 {
    let env = EnvironmentMap::<f64>::from_fn(128, 64, |d| {
        let v = 0.1 + 10.0 * d.x().max(0.0).powi(8);
        [v, v, v]
    })
    .unwrap();
    project_env(&env, d4())
}

fn server(state: AppState) -> (BackgroundServer, Client) {
    (BackgroundServer::start(Arc::new(state)).unwrap(), Client::new())
}

fn fixture_state() -> AppState {
    let mut state = AppState::default();
    state.insert_scene("sphere", "Lambertian sphere", sphere_scene(32, [0.6, 0.6, 0.6]));
    state.insert_scene("random", "random", random_scene(24, 1));
    state.insert_env("lobe", "lobe", &lobe_light()).unwrap();
    state
}

fn relight_png(client: &Client, srv: &BackgroundServer, body: serde_json::Value) -> (StatusCode, Vec<u8>) {
    let resp = client.post(srv.url("/api/relight")).json(&body).send().unwrap();
    (resp.status(), resp.bytes().unwrap().to_vec())
}

#[test]
fn empty_catalogs() {
    let dir = tempfile::tempdir().unwrap();
    let (srv, client) = server(AppState::load(dir.path(), 1 << 20).unwrap());
    let scenes: Vec<SceneInfo> = client.get(srv.url("/api/scenes")).send().unwrap().json().unwrap();
    let envs: Vec<EnvInfo> = client.get(srv.url("/api/envs")).send().unwrap().json().unwrap();
    assert!(scenes.is_empty() && envs.is_empty());
}

#[test]
fn catalogs_from_asset_root() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    let envs = dir.path().join("envs");
    std::fs::create_dir_all(scenes.join("b-dir")).unwrap();
    std::fs::create_dir_all(&envs).unwrap();
    save_decomposed(&sphere_scene(8, [1.0; 3]), &scenes.join("c-file.shc")).unwrap();
    save_decomposed(&sphere_scene(6, [1.0; 3]), &scenes.join("b-dir/decomposed.shc")).unwrap();
    std::fs::write(scenes.join("notes.md"), "ignored").unwrap();
    std::fs::write(envs.join("white.hdr"), white_hdr()).unwrap();
    std::fs::write(envs.join("lobe.txt"), write_light_text(&lobe_light())).unwrap();
    std::fs::write(envs.join("sky.toml"), "kind = \"sun-sky\"\nwidth = 64\n").unwrap();

    let (srv, client) = server(AppState::load(dir.path(), 1 << 20).unwrap());
    let scenes: Vec<SceneInfo> = client.get(srv.url("/api/scenes")).send().unwrap().json().unwrap();
    assert_eq!(scenes.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["b-dir", "c-file"]);
    assert_eq!((scenes[0].width, scenes[0].height, scenes[0].degree), (6, 6, 4));
    let envs: Vec<EnvInfo> = client.get(srv.url("/api/envs")).send().unwrap().json().unwrap();
    assert_eq!(envs.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["lobe", "sky", "white"]);
    for e in &envs {
        assert!((0.7..=0.9).contains(&e.reference_radiance), "{e:?}");
        assert!((e.reference_radiance - 0.8).abs() < 1e-9);
    }
}

#[test]
fn bad_asset_fails_startup() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("envs")).unwrap();
    std::fs::write(dir.path().join("envs/bad.hdr"), b"#?RADIANCE\nnot really").unwrap();
    assert!(AppState::load(dir.path(), 1 << 20).is_err());
}

#[test]
fn upload_lists_and_projects() {
    let (srv, client) = server(AppState::new(64 << 10));
    let form = multipart::Form::new().part("file", multipart::Part::bytes(white_hdr()).file_name("white.hdr"));
    let resp = client.post(srv.url("/api/envs")).multipart(form).send().unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let info: EnvInfo = resp.json().unwrap();
    assert_eq!(info.name, "white");
    let envs: Vec<EnvInfo> = client.get(srv.url("/api/envs")).send().unwrap().json().unwrap();
    assert_eq!(envs, vec![info.clone()]);

    let c: CoeffsResponse =
        client.get(srv.url(&format!("/api/coeffs?env_id={}", info.id))).send().unwrap().json().unwrap();
    assert_eq!((c.coeffs.len(), c.coeffs[0].len(), c.degree), (3, 25, 4));
    for row in &c.coeffs {
        assert!(row[0] > 0.0);
        assert!(row[1..].iter().all(|v| v.abs() < 1e-3), "{row:?}");
    }

    let raw = client.post(srv.url("/api/envs?name=raw")).body(white_hdr()).send().unwrap();
    assert_eq!(raw.status(), StatusCode::OK);
    let raw: EnvInfo = raw.json().unwrap();
    assert_eq!(raw.name, "raw");
    assert_ne!(raw.id, info.id);
}

#[test]
fn upload_errors() {
    let (srv, client) = server(AppState::new(64 << 10));
    let mut truncated = white_hdr();
    truncated.truncate(truncated.len() - 100);
    let form = multipart::Form::new().part("file", multipart::Part::bytes(truncated).file_name("t.hdr"));
    let resp = client.post(srv.url("/api/envs")).multipart(form).send().unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    let msg: serde_json::Value = resp.json().unwrap();
    assert!(msg["error"].as_str().unwrap().contains("parse error"), "{msg}");

    let black = client.post(srv.url("/api/envs")).body(hdr_bytes(8, 4, [0, 0, 0, 0])).send().unwrap();
    assert_eq!(black.status(), StatusCode::BAD_REQUEST);

    let big = hdr_bytes(136, 128, [128, 128, 128, 129]);
    assert!(big.len() > 64 << 10 && big.len() < 72 << 10);
    let form = multipart::Form::new().part("file", multipart::Part::bytes(big.clone()).file_name("big.hdr"));
    assert_eq!(client.post(srv.url("/api/envs")).multipart(form).send().unwrap().status(), StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(client.post(srv.url("/api/envs")).body(big).send().unwrap().status(), StatusCode::PAYLOAD_TOO_LARGE);
    let envs: Vec<EnvInfo> = client.get(srv.url("/api/envs")).send().unwrap().json().unwrap();
    assert!(envs.is_empty());
}

#[test]
fn relight_errors() {
    let (srv, client) = server(fixture_state());
    let ok = json!({"scene_id": "sphere", "env_id": "lobe"});
    assert_eq!(relight_png(&client, &srv, ok).0, StatusCode::OK);
    for (body, want) in [
        (json!({"scene_id": "nope", "env_id": "lobe"}), StatusCode::NOT_FOUND),
        (json!({"scene_id": "sphere", "env_id": "nope"}), StatusCode::NOT_FOUND),
        (json!({"scene_id": "sphere", "env_id": "lobe", "exposure": 1e6}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"scene_id": "sphere", "env_id": "lobe", "rotation": {"yaw": 1e9}}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"scene_id": "sphere", "env_id": "lobe", "rotation": {"yaw": "left"}}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"scene_id": "sphere", "env_id": "lobe", "gamma": 0.0}), StatusCode::UNPROCESSABLE_ENTITY),
        (
            json!({"scene_id": "sphere", "env_id": "lobe", "terms": {"albedo": false, "shading": false, "residual": false}}),
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
    ] {
        assert_eq!(relight_png(&client, &srv, body.clone()).0, want, "{body}");
    }
    let c = client.get(srv.url("/api/coeffs?env_id=nope")).send().unwrap();
    assert_eq!(c.status(), StatusCode::NOT_FOUND);
}

#[test]
fn relight_is_deterministic() {
    let (srv, client) = server(fixture_state());
    let body = json!({"scene_id": "random", "env_id": "lobe", "rotation": {"yaw": 30, "pitch": -10, "roll": 5}, "exposure": 0.5});
    let (status, a) = relight_png(&client, &srv, body.clone());
    assert_eq!(status, StatusCode::OK);
    let img = decode_png(&a).unwrap();
    assert_eq!((img.width, img.height), (24, 24));
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let (url, body) = (srv.url("/api/relight"), body.clone());
            std::thread::spawn(move || Client::new().post(url).json(&body).send().unwrap().bytes().unwrap().to_vec())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), a);
    }
}

#[test]
fn residual_view_of_zero_residual_is_black() {
    let (srv, client) = server(fixture_state());
    let body = json!({"scene_id": "sphere", "env_id": "lobe", "terms": {"albedo": false, "shading": false, "residual": true}});
    let (status, png) = relight_png(&client, &srv, body);
    assert_eq!(status, StatusCode::OK);
    let img = decode_png(&png).unwrap();
    assert!(img.data.chunks_exact(4).all(|p| p[..3] == [0, 0, 0]));
    assert!(img.data.chunks_exact(4).any(|p| p[3] == 255));
}

#[test]
fn term_views_differ() {
    let (srv, client) = server(fixture_state());
    let mut seen = Vec::new();
    for (a, s, r) in [(true, true, true), (true, true, false), (false, true, false), (true, false, false), (false, false, true)] {
        let body = json!({"scene_id": "random", "env_id": "lobe", "terms": {"albedo": a, "shading": s, "residual": r}, "residual_scale": 10});
        let (status, png) = relight_png(&client, &srv, body);
        assert_eq!(status, StatusCode::OK);
        assert!(!seen.contains(&png));
        seen.push(png);
    }
}

#[test]
fn constant_white_upload_gives_flat_sphere() {
    let (srv, client) = server(fixture_state());
    let info: EnvInfo = client.post(srv.url("/api/envs?name=white")).body(white_hdr()).send().unwrap().json().unwrap();
    let (status, png) = relight_png(&client, &srv, json!({"scene_id": "sphere", "env_id": info.id}));
    assert_eq!(status, StatusCode::OK);
    let img = decode_png(&png).unwrap();
    let inside: Vec<u8> = img.data.chunks_exact(4).filter(|p| p[3] == 255).flat_map(|p| p[..3].to_vec()).collect();
    assert!(inside.len() > 300);
    let (lo, hi) = (inside.iter().min().unwrap(), inside.iter().max().unwrap());
    assert!(hi - lo < 5, "spread {lo}..{hi}");
    // ρ · 0.8 = 0.48 displayed with gamma 2.2
    let want = (0.48f64.powf(1.0 / 2.2) * 255.0).round() as i32;
    assert!((*lo as i32 - want).abs() <= 1, "{lo} vs {want}");
}

fn bright_centroid_x(png: &[u8]) -> f64 {
    let img = decode_png(png).unwrap();
    let (mut sum, mut wsum) = (0.0, 0.0);
    for y in 0..img.height {
        for x in 0..img.width {
            let p = img.pixel(x, y);
            let w = p[0] as f64;
            sum += w * (x as f64 + 0.5 - img.width as f64 / 2.0);
            wsum += w;
        }
    }
    sum / wsum
}

#[test]
fn yaw_sweep_moves_centroid_periodically() {
    let (srv, client) = server(fixture_state());
    let at = |yaw: f64| {
        let (_, png) = relight_png(&client, &srv, json!({"scene_id": "sphere", "env_id": "lobe", "rotation": {"yaw": yaw}}));
        bright_centroid_x(&png)
    };
    let xs: Vec<f64> = (0..8).map(|k| at(22.5 + 45.0 * k as f64)).collect();
    let signs: Vec<bool> = xs.iter().map(|&x| x > 0.0).collect();
    assert_eq!(signs, [true, true, false, false, false, false, true, true], "{xs:?}");
    let changes = (0..8).filter(|&k| signs[k] != signs[(k + 1) % 8]).count();
    assert_eq!(changes, 2);
    assert!((at(22.5 + 360.0) - xs[0]).abs() < 1e-3);
    assert!((at(22.5 - 360.0) - xs[0]).abs() < 1e-3);
}

#[test]
fn coeffs_match_rotation() {
    let state = fixture_state();
    let stored = state.env("lobe").unwrap().light.clone();
    let (srv, client) = server(state);
    let get = |q: &str| -> CoeffsResponse { client.get(srv.url(&format!("/api/coeffs?env_id=lobe{q}"))).send().unwrap().json().unwrap() };
    let id = get("");
    for c in 0..3 {
        assert_eq!(id.coeffs[c], stored.channel(c).coeffs());
    }
    let rot = get("&yaw=40&pitch=-25&roll=70");
    let want = rotate_env(&stored, &Rotation3::from_yaw_pitch_roll_degrees(40.0f32, -25.0, 70.0));
    for c in 0..3 {
        assert_eq!(rot.coeffs[c], want.channel(c).coeffs());
    }
    assert_eq!(client.get(srv.url("/api/coeffs?env_id=lobe&yaw=1e9")).send().unwrap().status(), StatusCode::UNPROCESSABLE_ENTITY);
}

#[test]
fn dc_only_env_is_rotation_invariant() {
    let state = AppState::default();
    let constant = project_env(&EnvironmentMap::<f64>::constant(32, 16, [1.0, 0.5, 0.25]).unwrap(), d4());
    state.insert_env("dc", "dc", &constant).unwrap();
    assert!((reference_radiance(&state.env("dc").unwrap().light) - 0.8).abs() < 1e-6);
    let (srv, client) = server(state);
    let get = |q: &str| -> CoeffsResponse { client.get(srv.url(&format!("/api/coeffs?env_id=dc{q}"))).send().unwrap().json().unwrap() };
    let (a, b) = (get(""), get("&yaw=90"));
    for c in 0..3 {
        for (x, y) in a.coeffs[c].iter().zip(&b.coeffs[c]) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn relight_latency_256_degree_4() {
    let mut state = AppState::default();
    state.insert_scene("big", "big", random_scene(256, 2));
    state.insert_env("lobe", "lobe", &lobe_light()).unwrap();
    let (srv, client) = server(state);
    let body = json!({"scene_id": "big", "env_id": "lobe", "rotation": {"yaw": 15, "pitch": 5, "roll": 0}});
    for _ in 0..5 {
        assert_eq!(relight_png(&client, &srv, body.clone()).0, StatusCode::OK);
    }
    let mut ms: Vec<f64> = (0..50)
        .map(|_| {
            let t = Instant::now();
            let (status, _) = relight_png(&client, &srv, body.clone());
            assert_eq!(status, StatusCode::OK);
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    ms.sort_by(f64::total_cmp);
    let median = ms[25];
    eprintln!("relight 256×256 N=4 median {median:.2} ms");
    assert!(median <= 100.0, "{median} ms");
}
