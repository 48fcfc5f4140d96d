//! Least-squares fit of the residual coefficients `E`.
//!
//! For every pixel and channel `c`, `e` minimizes
//! `Σ_k (e·L_{k,c} − r_{k,c})² + λ‖e‖²` with `r_{k,c} = PT_{k,c}/m − ρ_c·(T·L_{k,c})`,
//! where `m` is the pixel mask (1 for opaque pixels). The normal matrix
//! `G_c = Σ_k L_{k,c} L_{k,c}ᵀ + λI` does not depend on the pixel, so it is
//! factored once per channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envlight::LightCoeffs;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::metrics::image_metrics;
use crate::relight::{reconstruct, reconstruct_without_residual, DecomposedScene};
use crate::scalar::Real;
use crate::sh::dot_slices;
use crate::transport::ResidualBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualFitConfig {
    /// Ridge weight `λ ≥ 0`.
    pub lambda: f64,
    /// Bound on the relative normal-equation residual
    /// `‖(G+λI)e − b‖ / (‖G+λI‖·‖e‖ + ‖b‖)` per pixel and channel.
    pub tolerance: f64,
}

impl Default for ResidualFitConfig {
    fn default() -> Self {
        Self { lambda: 1e-4, tolerance: 1e-9 }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors the row-major `n×n` matrix `a`. Fails when a pivot is not
    /// safely positive relative to the diagonal scale.
    pub fn new(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        let mut l = vec![0.0f64; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > scale * 1e-13) {
                return Err(Error::Solver(format!(
                    "normal matrix is singular or ill-conditioned (pivot {j} = {d:.3e}); use λ > 0 or more training lights"
                )));
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// Before/after errors of one training light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitImageReport {
    pub index: usize,
    pub l2_x100_without_residual: f64,
    pub l2_x100_with_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub lambda: f64,
    pub lights: usize,
    pub degree: u32,
    /// Largest relative normal-equation residual over all pixels and channels.
    pub max_normal_residual: f64,
    pub images: Vec<FitImageReport>,
    pub mean_l2_x100_without_residual: f64,
    pub mean_l2_x100_with_residual: f64,
}

/// Fits `E` for `scene` (its current residual is ignored) against ground-truth
/// images rendered under `lights`.
pub fn fit_residual<T: Real>(
    scene: &DecomposedScene<T>,
    pt_images: &[RgbImage<T>],
    lights: &[LightCoeffs<T>],
    cfg: &ResidualFitConfig,
) -> Result<(ResidualBuffer<T>, FitReport)> {
    let k = lights.len();
    if k == 0 || k != pt_images.len() {
        return Err(Error::argument(format!("need matching, non-empty lights ({k}) and images ({})", pt_images.len())));
    }
    if !(cfg.lambda >= 0.0) || !cfg.lambda.is_finite() {
        return Err(Error::argument("λ must be finite and ≥ 0"));
    }
    let degree = scene.transport.degree;
    let n = degree.coeff_count();
    if cfg.lambda == 0.0 && k < n {
        return Err(Error::Solver(format!("{k} training lights cannot determine {n} coefficients with λ = 0; use λ > 0")));
    }
    for (i, (img, l)) in pt_images.iter().zip(lights).enumerate() {
        if (img.width, img.height) != (scene.width, scene.height) {
            return Err(Error::Dimension(format!("training image {i} is {}×{}, scene is {}×{}", img.width, img.height, scene.width, scene.height)));
        }
        if l.degree() != degree {
            return Err(Error::argument(format!("training light {i} has degree {}, transport has {}", l.degree().n(), degree.n())));
        }
    }

    let mut base = scene.clone();
    base.residual = ResidualBuffer::zeros(scene.width, scene.height, degree);
    base.residual_missing = false;

    // per-channel light matrices (k×n) and factored normal matrices
    let mut lmat = vec![vec![0.0f64; k * n]; 3];
    let mut factors = Vec::with_capacity(3);
    let mut grams = Vec::with_capacity(3);
    for c in 0..3 {
        for (j, l) in lights.iter().enumerate() {
            for (i, v) in l.channel(c).coeffs().iter().enumerate() {
                lmat[c][j * n + i] = v.to_f64_lossy();
            }
        }
        let mut g = vec![0.0f64; n * n];
        for j in 0..k {
            let row = &lmat[c][j * n..(j + 1) * n];
            for a in 0..n {
                for b in 0..n {
                    g[a * n + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..n {
            g[a * n + a] += cfg.lambda;
        }
        factors.push(Cholesky::new(&g, n)?);
        grams.push(g);
    }

    let gnorm: Vec<f64> = grams.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let shadings: Vec<RgbImage<T>> =
        lights.iter().map(|l| crate::relight::shade(&scene.transport, l)).collect::<Result<_>>()?;

    let solved: Vec<(Vec<T>, f64)> = (0..scene.pixel_count())
        .into_par_iter()
        .map(|p| {
            let mut out = vec![T::zero(); 3 * n];
            let m = scene.mask[p].to_f64_lossy();
            if m <= 0.0 {
                return (out, 0.0);
            }
            let rho = scene.albedo.data[p];
            let mut worst = 0.0f64;
            for c in 0..3 {
                let mut b = vec![0.0f64; n];
                for j in 0..k {
                    let r = pt_images[j].data[p][c].to_f64_lossy() / m
                        - rho[c].to_f64_lossy() * shadings[j].data[p][c].to_f64_lossy();
                    for (bi, li) in b.iter_mut().zip(&lmat[c][j * n..(j + 1) * n]) {
                        *bi += li * r;
                    }
                }
                let rhs = b.clone();
                factors[c].solve(&mut b);
                let g = &grams[c];
                let mut res = 0.0f64;
                for a in 0..n {
                    let ge: f64 = (0..n).map(|j| g[a * n + j] * b[j]).sum();
                    res += (ge - rhs[a]).powi(2);
                }
                let enorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                let norm = (gnorm[c] * enorm + bnorm).max(f64::MIN_POSITIVE);
                worst = worst.max(res.sqrt() / norm);
                for (o, v) in out[c * n..(c + 1) * n].iter_mut().zip(&b) {
                    *o = T::lit(*v);
                }
            }
            (out, worst)
        })
        .collect();

    let mut e = ResidualBuffer::zeros(scene.width, scene.height, degree);
    let mut max_res = 0.0f64;
    for (p, (coeffs, res)) in solved.into_iter().enumerate() {
        e.coeffs[p * 3 * n..(p + 1) * 3 * n].copy_from_slice(&coeffs);
        max_res = max_res.max(res);
    }
    if max_res > cfg.tolerance {
        return Err(Error::Solver(format!(
            "normal-equation residual {max_res:.3e} exceeds tolerance {:.3e}; the system is too ill-conditioned, increase λ",
            cfg.tolerance
        )));
    }

    let mut fitted = base.clone();
    fitted.residual = e.clone();
    let mut images = Vec::with_capacity(k);
    for (i, (img, l)) in pt_images.iter().zip(lights).enumerate() {
        let before = image_metrics(&reconstruct_without_residual(&base, l)?, img, None)?;
        let after = image_metrics(&reconstruct(&fitted, l)?, img, None)?;
        images.push(FitImageReport { index: i, l2_x100_without_residual: before.l2_x100, l2_x100_with_residual: after.l2_x100 });
    }
    let mean = |f: fn(&FitImageReport) -> f64| images.iter().map(f).sum::<f64>() / k as f64;
    let report = FitReport {
        lambda: cfg.lambda,
        lights: k,
        degree: degree.n(),
        max_normal_residual: max_res,
        mean_l2_x100_without_residual: mean(|r| r.l2_x100_without_residual),
        mean_l2_x100_with_residual: mean(|r| r.l2_x100_with_residual),
        images,
    };
    Ok((e, report))
}

/// Dot products `E_c · L_c` for one pixel; convenience for reports and tests.
pub fn residual_at<T: Real>(e: &ResidualBuffer<T>, index: usize, l: &LightCoeffs<T>) -> [T; 3] {
    [0, 1, 2].map(|c| dot_slices(e.get(index, c), l.channel(c).coeffs()))
}
