use prt_core::brdf::Material;
use prt_core::envlight::{project_env, EnvironmentMap, LightCoeffs};
use prt_core::geometry::{Camera, MaterialSlot, TriScene};
use prt_core::image::RgbImage;
use prt_core::oracle::*;
use prt_core::pipeline::decompose;
use prt_core::procedural::{quad_plane, uv_sphere};
use prt_core::relight::reconstruct;
use prt_core::sh::ShDegree;
use prt_core::transport::{TransportConfig, TransportMode};
use prt_core::vector::{Direction, Vec3};

fn slots(m: Material<f64>) -> Vec<MaterialSlot<f64>> {
    vec![MaterialSlot::constant(m)]
}

fn plane(m: Material<f64>, res: usize) -> (TriScene<f64>, Camera<f64>) {
    let scene = TriScene::build(quad_plane(Vec3::zero(), 1.0), slots(m), None).unwrap();
    let cam = Camera::look_at(Vec3::new(0.0, -0.5, 3.0), Vec3::zero(), Vec3::new(0.0, 1.0, 0.0), 25.0, res, res).unwrap();
    (scene, cam)
}

fn sphere(m: Material<f64>, res: usize) -> (TriScene<f64>, Camera<f64>) {
    let scene = TriScene::build(uv_sphere(Vec3::zero(), 1.0, 24, 48), slots(m), None).unwrap();
    let cam = Camera::look_at(Vec3::new(0.0, -4.0, 0.0), Vec3::zero(), Vec3::new(0.0, 0.0, 1.0), 32.0, res, res).unwrap();
    (scene, cam)
}

fn sphere_on_plane(m: Material<f64>, res: usize) -> (TriScene<f64>, Camera<f64>) {
    let mut mesh = uv_sphere(Vec3::new(0.0, 0.0, 1.0), 1.0, 24, 48);
    mesh.append(&quad_plane(Vec3::zero(), 4.0), 0);
    let scene = TriScene::build(mesh, slots(m), None).unwrap();
    let cam = Camera::look_at(Vec3::new(0.0, -5.0, 2.5), Vec3::new(0.0, 0.0, 0.7), Vec3::new(0.0, 0.0, 1.0), 45.0, res, res).unwrap();
    (scene, cam)
}

fn smooth_env() -> EnvironmentMap<f64> {
    EnvironmentMap::from_fn(64, 32, |d: Direction<f64>| {
        let lobe = (d.x() * 0.6 + d.z() * 0.8).max(0.0).powi(4);
        [0.3 + 2.0 * lobe, 0.25 + 1.6 * lobe, 0.2 + 1.2 * lobe]
    })
    .unwrap()
}

fn cfg(spp: usize, seed: u64, sampling: PtSampling) -> PtConfig {
    PtConfig { spp, seed, sampling, ..PtConfig::default() }
}

fn covered(img: &RgbImage<f64>, mask: &[f64]) -> Vec<[f64; 3]> {
    img.data.iter().zip(mask).filter(|(_, &m)| m > 0.5).map(|(p, _)| *p).collect()
}

#[test]
fn furnace_plane_is_one() {
    let (scene, cam) = plane(Material::lambertian([1.0; 3]), 12);
    let env = EnvironmentMap::constant(32, 16, [1.0; 3]).unwrap();
    // uniform sphere: X = 4·cos·[cos > 0] has mean 1 and variance 16/3·1/2 − 1 = 5/3
    let spp = 512;
    let img = render_pt(&scene, Light::Env(&env), &cam, &cfg(spp, 1, PtSampling::UniformSphere), None).unwrap();
    let sigma = (5.0 / 3.0 / spp as f64).sqrt();
    let pixels: Vec<f64> = img.data.iter().map(|p| p[0]).collect();
    assert_eq!(pixels.len(), 144);
    for v in &pixels {
        assert!((v - 1.0).abs() < 4.5 * sigma, "{v}");
    }
    let mean = pixels.iter().sum::<f64>() / pixels.len() as f64;
    assert!((mean - 1.0).abs() < 3.0 * sigma / 12.0, "{mean}");
    // cosine sampling of a Lambertian integrand has zero variance
    for sampling in [PtSampling::CosineHemisphere, PtSampling::EnvImportance] {
        let img = render_pt(&scene, Light::Env(&env), &cam, &cfg(64, 2, sampling), None).unwrap();
        for p in &img.data {
            let tol = if sampling == PtSampling::CosineHemisphere { 1e-12 } else { 4.5 * sigma * 2.0 };
            assert!(p.iter().all(|v| (v - 1.0).abs() < tol), "{sampling:?}: {p:?}");
        }
    }
    // the same furnace through a DC-only SH light
    let l = project_env(&env, ShDegree::new(4).unwrap());
    let img = render_pt(&scene, Light::Sh(&l), &cam, &cfg(16, 3, PtSampling::CosineHemisphere), None).unwrap();
    let worst = img.data.iter().flatten().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn black_light_renders_black() {
    let (scene, cam) = sphere_on_plane(Material::new([0.7; 3], 0.4, 0.2, 0.0), 8);
    let env = EnvironmentMap::constant(16, 8, [0.0; 3]).unwrap();
    let l = LightCoeffs::zeros(ShDegree::new(4).unwrap());
    for light in [Light::Env(&env), Light::Sh(&l)] {
        let img = render_pt(&scene, light, &cam, &PtConfig { spp: 8, max_bounces: 1, ..PtConfig::default() }, None).unwrap();
        assert!(img.data.iter().all(|p| *p == [0.0; 3]));
    }
}

#[test]
fn variance_halves_when_spp_doubles() {
    let (scene, cam) = sphere(Material::new([1.0; 3], 0.8, 0.0, 0.0), 16);
    let env = smooth_env();
    let variance = |spp: usize| {
        let runs: Vec<RgbImage<f64>> = (0..32)
            .map(|r| render_pt(&scene, Light::Env(&env), &cam, &cfg(spp, 1000 + r, PtSampling::UniformSphere), None).unwrap())
            .collect();
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..cam.width * cam.height {
            let xs: Vec<f64> = runs.iter().map(|img| img.data[i][0]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            if mean > 0.0 {
                total += var;
                count += 1;
            }
        }
        total / count as f64
    };
    let ratio = variance(16) / variance(32);
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
}

#[test]
fn light_is_linear() {
    let (scene, cam) = sphere_on_plane(Material::new([0.6, 0.5, 0.4], 0.5, 0.3, 0.0), 10);
    let env = smooth_env();
    let doubled = env.scaled(2.0).unwrap();
    let c = cfg(16, 4, PtSampling::UniformSphere);
    let a = render_pt(&scene, Light::Env(&env), &cam, &c, None).unwrap();
    let b = render_pt(&scene, Light::Env(&doubled), &cam, &c, None).unwrap();
    assert_eq!(b, a.scaled(2.0));
    let c = cfg(16, 4, PtSampling::EnvImportance);
    let a = render_pt(&scene, Light::Env(&env), &cam, &c, None).unwrap();
    let b = render_pt(&scene, Light::Env(&doubled), &cam, &c, None).unwrap();
    for (p, q) in a.data.iter().zip(&b.data) {
        for ch in 0..3 {
            assert!((2.0 * p[ch] - q[ch]).abs() <= 1e-12 * (1.0 + q[ch]));
        }
    }
}

/// Mean over pixels and its standard error across independent seeds.
fn mean_and_stderr(runs: &[RgbImage<f64>]) -> (f64, f64) {
    let means: Vec<f64> = runs.iter().map(|img| img.data.iter().map(|p| p[0] + p[1] + p[2]).sum::<f64>() / img.data.len() as f64).collect();
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn importance_and_uniform_sampling_agree() {
    let (scene, cam) = sphere_on_plane(Material::new([0.8; 3], 0.6, 0.0, 0.0), 12);
    let env = smooth_env();
    let estimate = |sampling| {
        let runs: Vec<_> =
            (0..12).map(|r| render_pt(&scene, Light::Env(&env), &cam, &cfg(64, 50 + r, sampling), None).unwrap()).collect();
        mean_and_stderr(&runs)
    };
    let (a, sa) = estimate(PtSampling::UniformSphere);
    let (b, sb) = estimate(PtSampling::EnvImportance);
    let (c, sc) = estimate(PtSampling::CosineHemisphere);
    assert!((a - b).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "uniform {a}±{sa}, importance {b}±{sb}");
    assert!((a - c).abs() < 4.0 * (sa * sa + sc * sc).sqrt(), "uniform {a}±{sa}, cosine {c}±{sc}");
    assert!(sb < sa, "importance sampling should reduce variance: {sb} vs {sa}");
}

#[test]
fn band_limited_light_matches_prt() {
    let (scene, cam) = sphere_on_plane(Material::lambertian([1.0; 3]), 16);
    let l = project_env(&smooth_env(), ShDegree::new(4).unwrap());
    let tcfg = TransportConfig { mode: TransportMode::CosineVisibility, degree: 4, samples: 1024, seed: 8, stratified: true };
    let mut dec = decompose(&scene, &cam, &tcfg, None).unwrap();
    for v in &mut dec.transport.coeffs {
        *v /= std::f64::consts::PI;
    }
    let prt = reconstruct(&dec, &l).unwrap();
    let pt_cfg = PtConfig { stratified: true, ..cfg(256, 9, PtSampling::CosineHemisphere) };
    let pt = render_pt(&scene, Light::Sh(&l), &cam, &pt_cfg, None).unwrap();
    let (a, b) = (covered(&prt, &dec.mask), covered(&pt, &dec.mask));
    let mae = a.iter().zip(&b).map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).abs()).sum::<f64>()).sum::<f64>() / (3 * a.len()) as f64;
    assert!(mae < 0.01, "{mae}");

    // glossy material, full transport
    let (scene, cam) = sphere_on_plane(Material::new([1.0; 3], 0.5, 0.0, 0.0), 16);
    let tcfg = TransportConfig { mode: TransportMode::FullReflectance, samples: 4096, ..tcfg };
    let dec = decompose(&scene, &cam, &tcfg, None).unwrap();
    let prt = reconstruct(&dec, &l).unwrap();
    let pt = render_pt(&scene, Light::Sh(&l), &cam, &pt_cfg, None).unwrap();
    let (a, b) = (covered(&prt, &dec.mask), covered(&pt, &dec.mask));
    let mae = a.iter().zip(&b).map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).abs()).sum::<f64>()).sum::<f64>() / (3 * a.len()) as f64;
    assert!(mae < 0.02, "{mae}");
}

#[test]
fn transparency_scales_coverage() {
    let env = smooth_env();
    let c = cfg(8, 5, PtSampling::UniformSphere);
    let (opaque, cam) = plane(Material::new([0.5; 3], 0.3, 0.0, 0.0), 6);
    let (half, _) = plane(Material::new([0.5; 3], 0.3, 0.0, 0.5), 6);
    let a = render_pt(&opaque, Light::Env(&env), &cam, &c, None).unwrap();
    let b = render_pt(&half, Light::Env(&env), &cam, &c, None).unwrap();
    assert_eq!(b, a.scaled(0.5));
}

#[test]
fn indirect_bounce() {
    let env = smooth_env();
    let c = cfg(32, 6, PtSampling::UniformSphere);
    let bounce = PtConfig { max_bounces: 1, ..c };
    // a lone convex object never sees itself
    let (scene, cam) = sphere(Material::lambertian([0.9; 3]), 8);
    let a = render_pt(&scene, Light::Env(&env), &cam, &c, None).unwrap();
    let b = render_pt(&scene, Light::Env(&env), &cam, &bounce, None).unwrap();
    assert_eq!(a, b);
    let (scene, cam) = sphere_on_plane(Material::lambertian([0.9; 3]), 8);
    let a = render_pt(&scene, Light::Env(&env), &cam, &c, None).unwrap();
    let b = render_pt(&scene, Light::Env(&env), &cam, &bounce, None).unwrap();
    assert!(a.data.iter().zip(&b.data).all(|(p, q)| (0..3).all(|c| q[c] >= p[c])));
    assert!(b.mean()[0] > a.mean()[0]);
}

#[test]
fn deterministic_across_workers() {
    let (scene, cam) = sphere_on_plane(Material::new([0.6; 3], 0.4, 0.1, 0.0), 12);
    let env = smooth_env();
    let c = PtConfig { max_bounces: 1, ..cfg(16, 7, PtSampling::EnvImportance) };
    let a = render_pt(&scene, Light::Env(&env), &cam, &c, Some(1)).unwrap();
    let b = render_pt(&scene, Light::Env(&env), &cam, &c, Some(8)).unwrap();
    assert_eq!(a, b);
    let other = render_pt(&scene, Light::Env(&env), &cam, &PtConfig { seed: 8, ..c }, Some(8)).unwrap();
    assert_ne!(a, other);
}

#[test]
fn invalid_configs() {
    let (scene, cam) = plane(Material::lambertian([1.0; 3]), 4);
    let env = smooth_env();
    assert!(render_pt(&scene, Light::Env(&env), &cam, &PtConfig { spp: 0, ..PtConfig::default() }, None).is_err());
    assert!(render_pt(&scene, Light::Env(&env), &cam, &PtConfig { max_bounces: 2, ..PtConfig::default() }, None).is_err());
    let bad_band = PtConfig { band_limit_light: Some(11), ..PtConfig::default() };
    assert!(render_pt(&scene, Light::Env(&env), &cam, &bad_band, None).is_err());
}

#[test]
fn buffers() {
    let m = Material::new([0.3, 0.5, 0.7], 0.35, 0.2, 0.1);
    let (scene, cam) = sphere(m, 33);
    let g = render_buffers(&scene, &cam);
    // center pixel sees the point nearest the camera, normal (0, −1, 0)
    let c = 16 * 33 + 16;
    let n = g.normals.data[c];
    for (got, want) in n.iter().zip([0.5, 0.0, 0.5]) {
        assert!((got - want).abs() < 1e-2, "{n:?}");
    }
    let mut hits = 0;
    for i in 0..33 * 33 {
        if g.mask[i] == 0.0 {
            assert_eq!(g.albedo.data[i], [0.0; 3]);
            assert_eq!(g.normals.data[i], [0.0; 3]);
            assert_eq!(g.material.data[i], [0.0; 3]);
            continue;
        }
        hits += 1;
        assert!((g.mask[i] - 0.9).abs() < 1e-12);
        assert_eq!(g.albedo.data[i], [0.3, 0.5, 0.7]);
        assert_eq!(g.material.data[i], [0.35, 0.1, 0.2]);
        let e = g.normals.data[i].map(|v| 2.0 * v - 1.0);
        assert!(((e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt() - 1.0).abs() < 1e-9);
    }
    // the sphere's angular radius is asin(1/4); visible disk area fraction of the frame
    let half = (32.0f64 / 2.0).to_radians().tan();
    let disk = (0.25f64.asin()).tan();
    let expected = std::f64::consts::PI * (disk / half / 2.0).powi(2) * (33 * 33) as f64;
    assert!((hits as f64 - expected).abs() / expected < 0.1, "{hits} vs {expected}");
}
