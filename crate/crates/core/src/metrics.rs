//! Image error metrics and loss forms.

use serde::{Deserialize, Serialize};

use crate::envlight::LightCoeffs;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::relight::{residual_image, shade};
use crate::scalar::Real;
use crate::transport::{ResidualBuffer, TransportMap};

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Mean absolute difference × 100.
    pub l1_x100: f64,
    /// Mean squared difference × 100.
    pub l2_x100: f64,
    /// `10·log10(1 / MSE)`, capped at 99.
    pub psnr: f64,
    pub pixel_count: usize,
    pub masked: bool,
}

/// Per-element means over pixels (mask > 0.5 when given) and channels.
pub fn image_metrics<T: Real>(a: &RgbImage<T>, b: &RgbImage<T>, mask: Option<&[T]>) -> Result<MetricReport> {
    a.check_size(b, "image_metrics")?;
    if let Some(m) = mask {
        if m.len() != a.pixel_count() {
            return Err(Error::Dimension(format!("mask has {} pixels, images have {}", m.len(), a.pixel_count())));
        }
    }
    let half = T::lit(0.5);
    let (mut l1, mut l2, mut count) = (0.0f64, 0.0f64, 0usize);
    for (i, (pa, pb)) in a.data.iter().zip(&b.data).enumerate() {
        if mask.is_some_and(|m| m[i] <= half) {
            continue;
        }
        count += 1;
        for c in 0..3 {
            let d = (pa[c] - pb[c]).to_f64_lossy();
            l1 += d.abs();
            l2 += d * d;
        }
    }
    let n = (3 * count).max(1) as f64;
    let mse = l2 / n;
    let psnr = if mse == 0.0 { PSNR_CAP } else { (10.0 * (1.0 / mse).log10()).min(PSNR_CAP) };
    Ok(MetricReport { l1_x100: 100.0 * l1 / n, l2_x100: 100.0 * mse, psnr, pixel_count: count, masked: mask.is_some() })
}

/// Metrics on display-range images: both inputs are clamped to `[0, 1]` first.
pub fn display_metrics<T: Real>(a: &RgbImage<T>, b: &RgbImage<T>, mask: Option<&[T]>) -> Result<MetricReport> {
    image_metrics(&a.clamped(), &b.clamped(), mask)
}

/// `mean((ln(|x|+1) − ln(|x̂|+1))²)`.
pub fn log_loss<T: Real>(x: &[T], x_hat: &[T]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Dimension(format!("log_loss: {} vs {} elements", x.len(), x_hat.len())));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = x
        .iter()
        .zip(x_hat)
        .map(|(a, b)| {
            let d = a.to_f64_lossy().abs().ln_1p() - b.to_f64_lossy().abs().ln_1p();
            d * d
        })
        .sum();
    Ok(sum / x.len() as f64)
}

/// Decomposition inputs of the render loss.
#[derive(Debug, Clone, Copy)]
pub struct RenderInputs<'a, T> {
    pub albedo: &'a RgbImage<T>,
    pub transport: &'a TransportMap<T>,
    pub light: &'a LightCoeffs<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledLoss {
    pub label: String,
    /// Mean absolute error (not scaled).
    pub l1: f64,
}

fn pick<'a, T>(pred: bool, p: &'a T, g: &'a T) -> &'a T {
    if pred {
        p
    } else {
        g
    }
}

fn tag(pred: bool) -> &'static str {
    if pred {
        "pred"
    } else {
        "gt"
    }
}

/// Masked L1 of every way of forming the shading (`T × L` from prediction or
/// ground truth, against `S_gt`) and the relit image (`ρ × T × L`, plus the
/// predicted residual under the chosen light, against `ρ_gt·S_gt`).
pub fn render_loss_suite<T: Real>(
    pred: RenderInputs<'_, T>,
    gt: RenderInputs<'_, T>,
    e_pred: Option<&ResidualBuffer<T>>,
    mask: Option<&[T]>,
) -> Result<Vec<LabeledLoss>> {
    let s_gt = shade(gt.transport, gt.light)?;
    let psi_gt = multiply(gt.albedo, &s_gt)?;
    let mut out = Vec::with_capacity(12);
    let mut shadings = Vec::with_capacity(4);
    for t_pred in [false, true] {
        for l_pred in [false, true] {
            let s = shade(pick(t_pred, &pred.transport, &gt.transport), pick(l_pred, &pred.light, &gt.light))?;
            let l1 = image_metrics(&s, &s_gt, mask)?.l1_x100 / 100.0;
            out.push(LabeledLoss { label: format!("shading[T={},L={}]", tag(t_pred), tag(l_pred)), l1 });
            shadings.push((t_pred, l_pred, s));
        }
    }
    for rho_pred in [false, true] {
        for (t_pred, l_pred, s) in &shadings {
            let mut img = multiply(pick(rho_pred, &pred.albedo, &gt.albedo), s)?;
            if let Some(e) = e_pred {
                let r = residual_image(e, pick(*l_pred, &pred.light, &gt.light))?;
                for (p, q) in img.data.iter_mut().zip(&r.data) {
                    for c in 0..3 {
                        p[c] += q[c];
                    }
                }
            }
            let l1 = image_metrics(&img, &psi_gt, mask)?.l1_x100 / 100.0;
            out.push(LabeledLoss {
                label: format!("image[rho={},T={},L={}]", tag(rho_pred), tag(*t_pred), tag(*l_pred)),
                l1,
            });
        }
    }
    Ok(out)
}

fn multiply<T: Real>(a: &RgbImage<T>, b: &RgbImage<T>) -> Result<RgbImage<T>> {
    a.check_size(b, "multiply")?;
    let data = a.data.iter().zip(&b.data).map(|(p, q)| [p[0] * q[0], p[1] * q[1], p[2] * q[2]]).collect();
    RgbImage::from_data(a.width, a.height, data)
}
