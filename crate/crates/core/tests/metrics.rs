use prt_core::envlight::LightCoeffs;
use prt_core::image::RgbImage;
use prt_core::metrics::*;
use prt_core::relight::shade;
use prt_core::sh::{ShDegree, ShVector};
use prt_core::transport::{ResidualBuffer, TransportMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(w: usize, h: usize, seed: u64) -> RgbImage<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_data(w, h, (0..w * h).map(|_| [rng.random(), rng.random(), rng.random()]).collect()).unwrap()
}

#[test]
fn uniform_offset_closed_form() {
    let a = random_image(9, 7, 1).map(|p| p.map(|v| v * 0.9));
    let b = a.map(|p| p.map(|v| v + 0.01));
    let m = image_metrics(&a, &b, None).unwrap();
    assert!((m.l1_x100 - 1.0).abs() < 1e-9, "{}", m.l1_x100);
    assert!((m.l2_x100 - 0.01).abs() < 1e-9, "{}", m.l2_x100);
    assert!((m.psnr - 40.0).abs() < 1e-9, "{}", m.psnr);
    assert_eq!(m.pixel_count, 63);
    assert!(!m.masked);
    let same = image_metrics(&a, &a, None).unwrap();
    assert_eq!((same.l1_x100, same.l2_x100, same.psnr), (0.0, 0.0, 99.0));
}

#[test]
fn fixture_pair_matches_scripted_values() {
    // values from a direct hand computation over 2×2 pixels × 3 channels
    let a = RgbImage::from_data(2, 2, vec![[0.0, 0.5, 1.0], [0.2, 0.2, 0.2], [0.9, 0.1, 0.4], [0.3, 0.6, 0.0]]).unwrap();
    let b = RgbImage::from_data(2, 2, vec![[0.1, 0.5, 0.8], [0.2, 0.5, 0.1], [0.9, 0.1, 0.4], [0.0, 0.6, 0.4]]).unwrap();
    // |d| = 0.1 0 0.2 | 0 0.3 0.1 | 0 0 0 | 0.3 0 0.4 → Σ = 1.4, Σd² = 0.4
    let m = image_metrics(&a, &b, None).unwrap();
    assert!((m.l1_x100 - 100.0 * 1.4 / 12.0).abs() < 1e-12);
    assert!((m.l2_x100 - 100.0 * 0.4 / 12.0).abs() < 1e-12);
    assert!((m.psnr - 10.0 * (12.0f64 / 0.4).log10()).abs() < 1e-9);
    let masked = image_metrics(&a, &b, Some(&[1.0, 0.0, 0.6, 0.5])).unwrap();
    assert_eq!(masked.pixel_count, 2);
    assert!(masked.masked);
    assert!((masked.l1_x100 - 100.0 * 0.3 / 6.0).abs() < 1e-12);
    assert!((masked.l2_x100 - 100.0 * 0.05 / 6.0).abs() < 1e-12);
}

#[test]
fn display_metrics_clamp_first() {
    let a = RgbImage::from_data(1, 1, vec![[1.5, -0.5, 0.5]]).unwrap();
    let b = RgbImage::from_data(1, 1, vec![[1.0, 0.0, 0.5]]).unwrap();
    let m = display_metrics(&a, &b, None).unwrap();
    assert_eq!((m.l1_x100, m.l2_x100), (0.0, 0.0));
    assert!(image_metrics(&a, &b, None).unwrap().l1_x100 > 0.0);
}

#[test]
fn symmetry_and_monotonicity() {
    let a = random_image(8, 8, 2);
    let noise = random_image(8, 8, 3).map(|p| p.map(|v| v - 0.5));
    let mut last: Option<MetricReport> = None;
    for amp in [0.01, 0.05, 0.1, 0.2] {
        let b = RgbImage::from_data(8, 8, a.data.iter().zip(&noise.data).map(|(p, n)| [0, 1, 2].map(|c| p[c] + amp * n[c])).collect()).unwrap();
        let ab = image_metrics(&a, &b, None).unwrap();
        let ba = image_metrics(&b, &a, None).unwrap();
        assert_eq!(ab, ba);
        if let Some(prev) = last {
            assert!(ab.l1_x100 > prev.l1_x100 && ab.l2_x100 > prev.l2_x100 && ab.psnr < prev.psnr);
        }
        last = Some(ab);
    }
    let x: Vec<f64> = a.data.iter().flatten().copied().collect();
    let y: Vec<f64> = noise.data.iter().flatten().copied().collect();
    assert_eq!(log_loss(&x, &y).unwrap(), log_loss(&y, &x).unwrap());
}

#[test]
fn log_loss_matches_scripted_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..200).map(|_| rng.random_range(-5.0..5.0)).collect();
    let y: Vec<f64> = (0..200).map(|_| rng.random_range(-5.0..5.0)).collect();
    let oracle = x.iter().zip(&y).map(|(a, b)| ((a.abs() + 1.0).ln() - (b.abs() + 1.0).ln()).powi(2)).sum::<f64>() / 200.0;
    assert!((log_loss(&x, &y).unwrap() - oracle).abs() < 1e-12);
    assert_eq!(log_loss(&x, &x).unwrap(), 0.0);
    let e1 = std::f64::consts::E - 1.0;
    assert!((log_loss(&vec![0.0; 10], &vec![e1; 10]).unwrap() - 1.0).abs() < 1e-12);
    assert!(log_loss(&x, &y[..10]).is_err());
}

#[test]
fn errors() {
    let a = random_image(3, 3, 5);
    let b = random_image(3, 2, 6);
    assert!(image_metrics(&a, &b, None).is_err());
    assert!(image_metrics(&a, &a, Some(&[1.0; 4])).is_err());
}

struct Fixture {
    albedo: RgbImage<f64>,
    transport: TransportMap<f64>,
    light: LightCoeffs<f64>,
}

fn fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = ShDegree::new(2).unwrap();
    let mut transport = TransportMap::zeros(3, 2, d);
    transport.valid = vec![true; 6];
    for v in &mut transport.coeffs {
        *v = rng.random_range(0.0..1.0);
    }
    let mut ch = || ShVector::from_coeffs(d, (0..9).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
    let light = LightCoeffs::new(ch(), ch(), ch()).unwrap();
    Fixture { albedo: random_image(3, 2, seed + 100).map(|p| p.map(|v| v * 0.8)), transport, light }
}

fn inputs(f: &Fixture) -> RenderInputs<'_, f64> {
    RenderInputs { albedo: &f.albedo, transport: &f.transport, light: &f.light }
}

#[test]
fn render_loss_identical_inputs_are_zero() {
    let f = fixture(7);
    let losses = render_loss_suite(inputs(&f), inputs(&f), None, None).unwrap();
    assert_eq!(losses.len(), 12);
    assert!(losses.iter().all(|l| l.l1 == 0.0));
    let mut labels: Vec<_> = losses.iter().map(|l| l.label.clone()).collect();
    labels.dedup();
    assert_eq!(labels.len(), 12);
}

#[test]
fn render_loss_albedo_offset() {
    let gt = fixture(8);
    let pred = Fixture { albedo: gt.albedo.map(|p| p.map(|v| v + 0.1)), transport: gt.transport.clone(), light: gt.light.clone() };
    let losses = render_loss_suite(inputs(&pred), inputs(&gt), None, None).unwrap();
    let s = shade(&gt.transport, &gt.light).unwrap();
    let mean_s = s.data.iter().flatten().map(|v| v.abs()).sum::<f64>() / 18.0;
    for l in &losses {
        if l.label.contains("rho=pred") {
            assert!((l.l1 - 0.1 * mean_s).abs() < 1e-12, "{}: {} vs {}", l.label, l.l1, 0.1 * mean_s);
        } else {
            assert_eq!(l.l1, 0.0, "{}", l.label);
        }
    }
}

#[test]
fn render_loss_matches_scripted_enumeration() {
    let gt = fixture(9);
    let pred = fixture(10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut e = ResidualBuffer::zeros(3, 2, ShDegree::new(2).unwrap());
    for v in &mut e.coeffs {
        *v = rng.random_range(-0.1..0.1);
    }
    let mask = [1.0, 1.0, 0.0, 1.0, 0.2, 1.0];
    let losses = render_loss_suite(inputs(&pred), inputs(&gt), Some(&e), Some(&mask)).unwrap();

    let dot = |t: &TransportMap<f64>, p: usize, l: &[f64]| (0..9).map(|i| t.coeffs[p * 9 + i] * l[i]).sum::<f64>();
    let shading = |t: &TransportMap<f64>, l: &LightCoeffs<f64>, p: usize, c: usize| dot(t, p, l.channel(c).coeffs());
    let keep: Vec<usize> = (0..6).filter(|&p| mask[p] > 0.5).collect();
    let n = (3 * keep.len()) as f64;
    for l in &losses {
        let t = if l.label.contains("T=pred") { &pred.transport } else { &gt.transport };
        let light = if l.label.contains("L=pred") { &pred.light } else { &gt.light };
        let mut sum = 0.0;
        for &p in &keep {
            for c in 0..3 {
                let s_gt = shading(&gt.transport, &gt.light, p, c);
                let s = shading(t, light, p, c);
                sum += if l.label.starts_with("shading") {
                    (s - s_gt).abs()
                } else {
                    let rho = if l.label.contains("rho=pred") { pred.albedo.data[p][c] } else { gt.albedo.data[p][c] };
                    let r: f64 = (0..9).map(|i| e.coeffs[p * 27 + c * 9 + i] * light.channel(c).coeffs()[i]).sum();
                    (rho * s + r - gt.albedo.data[p][c] * s_gt).abs()
                };
            }
        }
        assert!((l.l1 - sum / n).abs() < 1e-12, "{}: {} vs {}", l.label, l.l1, sum / n);
    }
}
