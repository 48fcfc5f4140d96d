//! PNG encoding of display images and decoding of 8-bit albedo textures.

use crate::error::{Error, Result};
use crate::geometry::Texture;
use crate::image::{srgb_to_linear, Rgba8Image};
use crate::scalar::Real;

pub fn encode_png(img: &Rgba8Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer.write_image_data(&img.data).map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<Rgba8Image> {
    let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
    dec.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = dec.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let size = reader.output_buffer_size().ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::Png(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let src = &buf[..info.buffer_size()];
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(Error::Png("indexed PNG was not expanded".into())),
    };
    let mut data = Vec::with_capacity(w * h * 4);
    for px in src.chunks_exact(channels) {
        let rgba = match channels {
            1 => [px[0], px[0], px[0], 255],
            2 => [px[0], px[0], px[0], px[1]],
            3 => [px[0], px[1], px[2], 255],
            _ => [px[0], px[1], px[2], px[3]],
        };
        data.extend_from_slice(&rgba);
    }
    Ok(Rgba8Image { width: w, height: h, data })
}

/// Decodes an sRGB-encoded PNG into a linear albedo texture.
pub fn load_texture<T: Real>(bytes: &[u8]) -> Result<Texture<T>> {
    let img = decode_png(bytes)?;
    let texels = img
        .data
        .chunks_exact(4)
        .map(|p| [0, 1, 2].map(|k| T::lit(srgb_to_linear(p[k] as f64 / 255.0))))
        .collect();
    Ok(Texture { width: img.width, height: img.height, texels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let img = Rgba8Image { width: 2, height: 1, data: vec![1, 2, 3, 4, 250, 0, 128, 255] };
        let back = decode_png(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back, img);
        let tex: Texture<f64> = load_texture(&encode_png(&img).unwrap()).unwrap();
        assert!((tex.texels[1][0] - srgb_to_linear(250.0 / 255.0)).abs() < 1e-12);
        assert!(decode_png(b"not a png").is_err());
    }
}
