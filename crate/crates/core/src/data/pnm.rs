//! Binary Netpbm codecs: PGM (P5, grayscale) and PPM (P6, RGB).
//!
//! Samples are normalized to `[0, 1]` by the file's maxval on read. Writing
//! always uses maxval 255 and a minimal header (`P5\n<w> <h>\n255\n`), so an
//! 8-bit file written by this module reads back and re-encodes to the same
//! bytes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::parsing::LabelMap;
use crate::tensor::Tensor;

/// Integer samples of a P5/P6 file, interleaved as stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPnm {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

/// Decodes a P5 or P6 image into a 1- or 3-channel tensor.
pub fn decode_pnm(bytes: &[u8]) -> Result<Tensor> {
    let raw = decode_pnm_raw(bytes)?;
    // Interleaved samples -> planar channels.
    let (channels, plane) = (raw.channels, raw.width * raw.height);
    let scale = raw.maxval as f64;
    let mut data = vec![0.0; raw.samples.len()];
    for (i, &v) in raw.samples.iter().enumerate() {
        let (p, c) = (i / channels, i % channels);
        data[c * plane + p] = v as f64 / scale;
    }
    Tensor::new(channels, raw.height, raw.width, data)
}

pub fn decode_pnm_raw(bytes: &[u8]) -> Result<RawPnm> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::format("netpbm image", format!("unsupported magic {other:?}"))),
    };
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format("netpbm image", format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format("netpbm image", format!("maxval {maxval} out of range")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::format("netpbm image", "missing whitespace after maxval")),
    }
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let samples = width * height * channels;
    let raster = bytes
        .get(pos..pos + samples * bytes_per_sample)
        .ok_or_else(|| Error::format("netpbm image", format!("raster truncated: need {} bytes", samples * bytes_per_sample)))?;
    let samples: Vec<u16> = if bytes_per_sample == 1 {
        raster.iter().map(|&b| b as u16).collect()
    } else {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    if let Some(v) = samples.iter().find(|&&v| v as usize > maxval) {
        return Err(Error::format("netpbm image", format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(RawPnm {
        channels,
        height,
        width,
        maxval: maxval as u16,
        samples,
    })
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        if bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else if bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format("netpbm image", "header ended early"));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(bytes: &[u8], pos: &mut usize, field: &str) -> Result<usize> {
    let tok = header_token(bytes, pos)?;
    tok.parse()
        .map_err(|_| Error::format("netpbm image", format!("bad {field} {tok:?}")))
}

/// Maps `[0, 1]` to a byte, clamping out-of-range values.
pub fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode(t: &Tensor, magic: &str) -> Vec<u8> {
    let mut out = format!("{magic}\n{} {}\n255\n", t.width(), t.height()).into_bytes();
    let plane = t.height() * t.width();
    out.reserve(plane * t.channels());
    for p in 0..plane {
        for c in 0..t.channels() {
            out.push(to_byte(t.data()[c * plane + p]));
        }
    }
    out
}

pub fn encode_pgm(t: &Tensor) -> Result<Vec<u8>> {
    if t.channels() != 1 {
        return Err(Error::invalid("encode_pgm", format!("PGM needs 1 channel, got {}", t.shape())));
    }
    Ok(encode(t, "P5"))
}

pub fn encode_ppm(t: &Tensor) -> Result<Vec<u8>> {
    if t.channels() != 3 {
        return Err(Error::invalid("encode_ppm", format!("PPM needs 3 channels, got {}", t.shape())));
    }
    Ok(encode(t, "P6"))
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    decode_pnm(&bytes).map_err(|e| Error::format("netpbm image", format!("{}: {e}", path.display())))
}

/// Reads a label map stored as a PGM whose sample values are the region
/// codes 1 (face), 2 (hair) and 3 (background).
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let raw = decode_pnm_raw(&std::fs::read(path)?)
        .map_err(|e| Error::format("label map", format!("{}: {e}", path.display())))?;
    if raw.channels != 1 {
        return Err(Error::format("label map", format!("{}: expected a PGM", path.display())));
    }
    let codes: Vec<u8> = raw.samples.iter().map(|&v| v.min(255) as u8).collect();
    LabelMap::from_codes(raw.height, raw.width, &codes)
        .map_err(|e| Error::format("label map", format!("{}: {e}", path.display())))
}

pub fn encode_labels(labels: &LabelMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", labels.width(), labels.height()).into_bytes();
    out.extend(labels.codes());
    out
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    std::fs::write(path, encode_labels(labels))?;
    Ok(())
}

pub fn write_pgm(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    std::fs::write(path, encode_pgm(t)?)?;
    Ok(())
}

pub fn write_ppm(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    std::fs::write(path, encode_ppm(t)?)?;
    Ok(())
}
