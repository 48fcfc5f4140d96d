//! Radiance RGBE (`.hdr`) decoder.
//!
//! Accepts `#?RADIANCE` / `#?RGBE` headers with `FORMAT=32-bit_rle_rgbe`, the
//! standard `-Y H +X W` orientation, and both new-style run-length encoded and
//! flat scanlines. Each channel decodes as `mantissa · 2^(exponent − 136)`,
//! i.e. `(mantissa / 256) · 2^(exponent − 128)`, exactly in `f32`.

use crate::error::{Error, Result};
use crate::image::RgbImage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HdrHeader {
    pub width: usize,
    pub height: usize,
    /// Byte offset of the first scanline.
    pub data_offset: usize,
}

/// Decodes one RGBE quadruple.
#[inline]
pub fn rgbe_to_rgb(px: [u8; 4]) -> [f32; 3] {
    if px[3] == 0 {
        return [0.0; 3];
    }
    let scale = exp2i(px[3] as i32 - 136);
    [px[0] as f32 * scale, px[1] as f32 * scale, px[2] as f32 * scale]
}

/// Exact `2^e` for `e ∈ [-149, 127]`.
fn exp2i(e: i32) -> f32 {
    if e >= -126 {
        f32::from_bits(((e + 127) as u32) << 23)
    } else {
        f32::from_bits(1u32 << (e + 149))
    }
}

fn read_line(bytes: &[u8], pos: &mut usize) -> Result<(usize, String)> {
    let start = *pos;
    let rel = bytes[start..]
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(start, "unterminated header line"))?;
    *pos = start + rel + 1;
    let line = std::str::from_utf8(&bytes[start..start + rel])
        .map_err(|_| Error::parse(start, "header line is not valid text"))?;
    Ok((start, line.trim_end_matches('\r').to_string()))
}

pub fn parse_header(bytes: &[u8]) -> Result<HdrHeader> {
    let mut pos = 0;
    let (_, magic) = read_line(bytes, &mut pos)?;
    if !(magic.starts_with("#?RADIANCE") || magic.starts_with("#?RGBE")) {
        return Err(Error::parse(0, "missing #?RADIANCE / #?RGBE signature"));
    }
    loop {
        let (off, line) = read_line(bytes, &mut pos)?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt.trim() != "32-bit_rle_rgbe" {
                return Err(Error::parse(off, format!("unsupported pixel format `{}`", fmt.trim())));
            }
        }
    }
    let (off, res) = read_line(bytes, &mut pos)?;
    let parts: Vec<&str> = res.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::parse(off, format!("malformed resolution line `{res}`")));
    }
    if parts[0] != "-Y" || parts[2] != "+X" {
        return Err(Error::parse(off, format!("unsupported orientation `{res}` (only -Y H +X W)")));
    }
    let parse_dim = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::parse(off, format!("invalid dimension `{s}`")))
    };
    Ok(HdrHeader { height: parse_dim(parts[1])?, width: parse_dim(parts[3])?, data_offset: pos })
}

/// Decodes a complete `.hdr` byte stream to linear RGB.
pub fn decode_hdr(bytes: &[u8]) -> Result<RgbImage<f32>> {
    let header = parse_header(bytes)?;
    let (w, h) = (header.width, header.height);
    let mut pos = header.data_offset;
    let mut data = Vec::with_capacity(w * h);
    let mut line = vec![[0u8; 4]; w];
    for row in 0..h {
        read_scanline(bytes, &mut pos, &mut line)
            .map_err(|e| match e {
                Error::Parse { offset, message } => Error::parse(offset, format!("scanline {row}: {message}")),
                e => e,
            })?;
        data.extend(line.iter().map(|&px| rgbe_to_rgb(px)));
    }
    RgbImage::from_data(w, h, data)
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    if *pos + n > bytes.len() {
        return Err(Error::parse(*pos, "truncated scanline"));
    }
    let s = &bytes[*pos..*pos + n];
    *pos += n;
    Ok(s)
}

fn read_scanline(bytes: &[u8], pos: &mut usize, line: &mut [[u8; 4]]) -> Result<()> {
    let w = line.len();
    let start = *pos;
    let is_rle = (8..0x8000).contains(&w)
        && bytes.len() >= start + 4
        && bytes[start] == 2
        && bytes[start + 1] == 2
        && bytes[start + 2] & 0x80 == 0;
    if !is_rle {
        let raw = take(bytes, pos, 4 * w)?;
        for (px, chunk) in line.iter_mut().zip(raw.chunks_exact(4)) {
            px.copy_from_slice(chunk);
        }
        return Ok(());
    }
    let declared = ((bytes[start + 2] as usize) << 8) | bytes[start + 3] as usize;
    if declared != w {
        return Err(Error::parse(start, format!("RLE scanline width {declared} does not match image width {w}")));
    }
    *pos += 4;
    for ch in 0..4 {
        let mut x = 0;
        while x < w {
            let run_at = *pos;
            let count = take(bytes, pos, 1)?[0] as usize;
            if count > 128 {
                let n = count - 128;
                if x + n > w {
                    return Err(Error::parse(run_at, "RLE run overflows scanline"));
                }
                let v = take(bytes, pos, 1)?[0];
                for px in &mut line[x..x + n] {
                    px[ch] = v;
                }
                x += n;
            } else {
                if count == 0 || x + count > w {
                    return Err(Error::parse(run_at, "invalid RLE literal count"));
                }
                let vals = take(bytes, pos, count)?;
                for (px, &v) in line[x..x + count].iter_mut().zip(vals) {
                    px[ch] = v;
                }
                x += count;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(w: usize, h: usize) -> Vec<u8> {
        format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {h} +X {w}\n").into_bytes()
    }

    #[test]
    fn rgbe_definition() {
        assert_eq!(rgbe_to_rgb([128, 128, 128, 129]), [1.0, 1.0, 1.0]);
        assert_eq!(rgbe_to_rgb([0, 0, 0, 0]), [0.0, 0.0, 0.0]);
        assert_eq!(rgbe_to_rgb([255, 1, 64, 0]), [0.0, 0.0, 0.0]);
        assert_eq!(rgbe_to_rgb([1, 0, 0, 0 + 1])[0], 2f32.powi(-135));
        assert_eq!(rgbe_to_rgb([255, 0, 0, 255])[0], 255.0 * 2f32.powi(119));
    }

    #[test]
    fn one_by_one_flat() {
        let mut b = header(1, 1);
        b.extend_from_slice(&[128, 128, 128, 129]);
        let img = decode_hdr(&b).unwrap();
        assert_eq!((img.width, img.height), (1, 1));
        assert_eq!(img.data[0], [1.0, 1.0, 1.0]);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(decode_hdr(b"P6\n1 1\n"), Err(Error::Parse { offset: 0, .. })));
        let b = b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 1\n\0\0\0\0".to_vec();
        assert!(matches!(decode_hdr(&b), Err(Error::Parse { offset: 11, .. })));
        let b = b"#?RADIANCE\n\n+Y 1 +X 1\n\0\0\0\0".to_vec();
        assert!(matches!(decode_hdr(&b), Err(Error::Parse { offset: 12, .. })));
    }

    #[test]
    fn truncated_scanline_names_offset() {
        let mut b = header(2, 1);
        let data_at = b.len();
        b.extend_from_slice(&[1, 2, 3, 4, 5]);
        match decode_hdr(&b).unwrap_err() {
            Error::Parse { offset, .. } => assert_eq!(offset, data_at),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn rle_overflow_is_rejected() {
        let mut b = header(8, 1);
        b.extend_from_slice(&[2, 2, 0, 8, 128 + 9, 7]);
        assert!(decode_hdr(&b).is_err());
        let mut b = header(8, 1);
        b.extend_from_slice(&[2, 2, 0, 9]);
        assert!(decode_hdr(&b).is_err());
    }
}
