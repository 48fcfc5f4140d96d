#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Legendre polynomial by the three-term recurrence.
pub fn legendre(l: u32, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if l == 0 {
        return p0;
    }
    for k in 1..l {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let p = legendre(n as u32, x);
                let dp = n as f64 * (x * p - legendre(n as u32 - 1, x)) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let dp = n as f64 * (x * legendre(n as u32, x) - legendre(n as u32 - 1, x)) / (x * x - 1.0);
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫ max(cosθ,0)·Y_{l,0} dω` by Simpson in `x = cosθ`.
pub fn clamped_cosine_band(l: u32) -> f64 {
    let k = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
    2.0 * PI * k * simpson(|x| x * legendre(l, x), 0.0, 1.0, 20_000)
}

/// Closed-form real SH through band 2, `[x, y, z]` unit.
pub fn sh_closed_form(i: usize, d: [f64; 3]) -> f64 {
    let [x, y, z] = d;
    match i {
        0 => 0.5 / PI.sqrt(),
        1 => (3.0 / (4.0 * PI)).sqrt() * y,
        2 => (3.0 / (4.0 * PI)).sqrt() * z,
        3 => (3.0 / (4.0 * PI)).sqrt() * x,
        4 => 0.5 * (15.0 / PI).sqrt() * x * y,
        5 => 0.5 * (15.0 / PI).sqrt() * y * z,
        6 => 0.25 * (5.0 / PI).sqrt() * (3.0 * z * z - 1.0),
        7 => 0.5 * (15.0 / PI).sqrt() * x * z,
        8 => 0.25 * (15.0 / PI).sqrt() * (x * x - y * y),
        _ => panic!("closed form only through band 2"),
    }
}

/// Minimal Radiance writer: new-style RLE scanlines for widths in [8, 32767], flat otherwise.
pub fn write_rgbe(width: usize, height: usize, px: &[[u8; 4]]) -> Vec<u8> {
    let mut out = format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {height} +X {width}\n").into_bytes();
    for row in px.chunks(width) {
        if !(8..=0x7fff).contains(&width) {
            for p in row {
                out.extend_from_slice(p);
            }
            continue;
        }
        out.extend_from_slice(&[2, 2, (width >> 8) as u8, (width & 0xff) as u8]);
        for c in 0..4 {
            let chan: Vec<u8> = row.iter().map(|p| p[c]).collect();
            let mut i = 0;
            while i < chan.len() {
                let mut run = 1;
                while i + run < chan.len() && run < 127 && chan[i + run] == chan[i] {
                    run += 1;
                }
                if run > 2 {
                    out.push(128 + run as u8);
                    out.push(chan[i]);
                    i += run;
                } else {
                    let start = i;
                    while i < chan.len() && i - start < 128 {
                        if i + 2 < chan.len() && chan[i] == chan[i + 1] && chan[i] == chan[i + 2] {
                            break;
                        }
                        i += 1;
                    }
                    out.push((i - start) as u8);
                    out.extend_from_slice(&chan[start..i]);
                }
            }
        }
    }
    out
}

/// `m/256 · 2^(e-128)` per channel; a zero exponent is black.
pub fn rgbe_reference(p: [u8; 4]) -> [f32; 3] {
    if p[3] == 0 {
        return [0.0; 3];
    }
    let f = 2f64.powi(p[3] as i32 - 128) / 256.0;
    [0, 1, 2].map(|c| (p[c] as f64 * f) as f32)
}
