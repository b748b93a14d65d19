use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Rec. 601 luma for RGB input; single-channel input is returned as is.
pub fn luminance(img: &Tensor) -> Result<Tensor> {
    match img.channels() {
        1 => Ok(img.clone()),
        3 => {
            let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
            let data = (0..r.len()).map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]).collect();
            Tensor::new(1, img.height(), img.width(), data)
        }
        _ => Err(Error::invalid("luminance", format!("expected 1 or 3 channels, got {}", img.shape()))),
    }
}

/// Brings an image to the requested channel count (1 = luma, 3 = RGB).
pub fn to_channels(img: &Tensor, channels: usize) -> Result<Tensor> {
    match (img.channels(), channels) {
        (a, b) if a == b => Ok(img.clone()),
        (3, 1) => luminance(img),
        (1, 3) => Tensor::concat_channels(&[img, img, img]),
        _ => Err(Error::invalid(
            "to_channels",
            format!("cannot convert {} to {channels} channels", img.shape()),
        )),
    }
}
