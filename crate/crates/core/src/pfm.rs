//! Portable float map (`PF` colour, `Pf` grayscale).
//!
//! A negative scale marks little-endian data; rows are stored bottom to top.

use crate::error::{Error, Result};
use crate::image::RgbImage;

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<(usize, String)> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse(start, "truncated PFM header"));
    }
    let tok = std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::parse(start, "PFM header is not text"))?;
    Ok((start, tok.to_string()))
}

/// Decodes a PFM stream. Grayscale maps are replicated into all three channels.
pub fn read_pfm(bytes: &[u8]) -> Result<RgbImage<f32>> {
    let mut pos = 0;
    let (_, magic) = next_token(bytes, &mut pos)?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        _ => return Err(Error::parse(0, format!("not a PFM file (magic `{magic}`)"))),
    };
    let dim = |pos: &mut usize| -> Result<usize> {
        let (off, tok) = next_token(bytes, pos)?;
        tok.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::parse(off, format!("invalid dimension `{tok}`")))
    };
    let width = dim(&mut pos)?;
    let height = dim(&mut pos)?;
    let (off, tok) = next_token(bytes, &mut pos)?;
    let scale: f64 = tok
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| Error::parse(off, format!("invalid scale `{tok}`")))?;
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let little = scale < 0.0;
    let need = width * height * channels * 4;
    if bytes.len() < pos + need {
        return Err(Error::parse(bytes.len(), format!("PFM raster truncated: need {need} bytes after offset {pos}")));
    }
    let raster = &bytes[pos..pos + need];
    let mut data = vec![[0.0f32; 3]; width * height];
    for (i, chunk) in raster.chunks_exact(4 * channels).enumerate() {
        let file_row = i / width;
        let x = i % width;
        let y = height - 1 - file_row;
        let mut px = [0.0f32; 3];
        for c in 0..channels {
            let b: [u8; 4] = chunk[4 * c..4 * c + 4].try_into().unwrap();
            px[c] = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        }
        if channels == 1 {
            px = [px[0]; 3];
        }
        data[y * width + x] = px;
    }
    RgbImage::from_data(width, height, data)
}

/// Encodes a colour PFM, little-endian, scale `-1`.
pub fn write_pfm(img: &RgbImage<f32>) -> Vec<u8> {
    let mut out = format!("PF\n{} {}\n-1\n", img.width, img.height).into_bytes();
    out.reserve(img.pixel_count() * 12);
    for y in (0..img.height).rev() {
        for x in 0..img.width {
            for c in img.get(x, y) {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    out
}
