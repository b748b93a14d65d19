use std::path::Path;

use anyhow::{Context, Result};
use sketch_core::data::{luminance, read_image, to_byte, to_channels, write_pgm, write_ppm};
use sketch_core::layers::bilinear_resize;
use sketch_core::Tensor;

pub fn load_photo(path: &Path, channels: usize) -> Result<Tensor> {
    let img = read_image(path)?;
    to_channels(&img, channels).with_context(|| format!("converting {}", path.display()))
}

pub fn load_gray(path: &Path) -> Result<Tensor> {
    Ok(luminance(&read_image(path)?)?)
}

/// Like [`load_gray`] but also accepts PNG files.
pub fn load_gray_any(path: &Path) -> Result<Tensor> {
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if !is_png {
        return load_gray(path);
    }
    let img = image::open(path).with_context(|| format!("reading {}", path.display()))?.into_luma8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|b| f64::from(b) / 255.0).collect();
    Ok(Tensor::new(1, h as usize, w as usize, data)?)
}

/// Bilinear resize unless the size already matches.
pub fn fit(img: &Tensor, (h, w): (usize, usize)) -> Result<Tensor> {
    Ok(bilinear_resize(img, h, w)?)
}

/// Writes `<dir>/<name>.pgm` or `.ppm` (by channel count), plus a PNG copy
/// when asked. Values are clamped to `[0, 1]`.
pub fn export(dir: &Path, name: &str, img: &Tensor, png: bool) -> Result<()> {
    let clamped = img.map(|v| v.clamp(0.0, 1.0));
    match clamped.channels() {
        1 => write_pgm(dir.join(format!("{name}.pgm")), &clamped)?,
        3 => write_ppm(dir.join(format!("{name}.ppm")), &clamped)?,
        c => anyhow::bail!("cannot export a {c}-channel image"),
    }
    if png {
        write_png(&dir.join(format!("{name}.png")), &clamped)?;
    }
    Ok(())
}

fn write_png(path: &Path, img: &Tensor) -> Result<()> {
    let (h, w) = (img.height(), img.width());
    let plane = h * w;
    let d = img.data();
    let result = if img.channels() == 1 {
        let bytes = d.iter().map(|&v| to_byte(v)).collect();
        image::GrayImage::from_raw(w as u32, h as u32, bytes)
            .expect("buffer matches size")
            .save(path)
    } else {
        let bytes = (0..plane).flat_map(|p| (0..3).map(move |c| to_byte(d[c * plane + p]))).collect();
        image::RgbImage::from_raw(w as u32, h as u32, bytes)
            .expect("buffer matches size")
            .save(path)
    };
    result.with_context(|| format!("writing {}", path.display()))
}
