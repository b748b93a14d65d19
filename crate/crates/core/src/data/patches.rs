//! Patch-pair extraction, region labelling and the structural alignment
//! filter.

use super::color::luminance;
use super::sobel::sobel_edges;
use super::ssim::ssim;
use crate::error::{Error, Result};
use crate::parsing::{ParsingMap, Region};
use crate::tensor::Tensor;

pub const DEFAULT_PATCH_SIZE: usize = 32;
pub const DEFAULT_STRIDE: usize = 16;
pub const DEFAULT_SSIM_THRESHOLD: f64 = 0.6;

/// An aligned photo/sketch patch pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair {
    /// Photo channels only; the prior is attached at training time.
    pub photo: Tensor,
    /// Single-channel ground-truth sketch at full patch size.
    pub sketch: Tensor,
    /// Face pairs train the structural branch, hair pairs the textural one.
    pub region: Region,
    /// SSIM between the Sobel edge maps of photo and sketch.
    pub alignment_score: f64,
    /// Top-left corner in the source frame, used to crop the matching prior.
    pub origin: (usize, usize),
}

impl PatchPair {
    /// Builds a pair and measures its alignment score.
    pub fn new(photo: Tensor, sketch: Tensor, region: Region, origin: (usize, usize)) -> Result<Self> {
        let alignment_score = alignment_score(&photo, &sketch)?;
        Ok(PatchPair {
            photo,
            sketch,
            region,
            alignment_score,
            origin,
        })
    }

    pub fn size(&self) -> usize {
        self.sketch.height()
    }

    /// The supervision window: the centered `out x out` part of the sketch,
    /// matching the network's valid-convolution output.
    pub fn target(&self, out: usize) -> Result<Tensor> {
        self.sketch.center_crop(out, out)
    }
}

/// SSIM of the Sobel edge maps of the photo's luminance and the sketch.
pub fn alignment_score(photo: &Tensor, sketch: &Tensor) -> Result<f64> {
    let luma = luminance(photo)?;
    if luma.height() != sketch.height() || luma.width() != sketch.width() || sketch.channels() != 1 {
        return Err(Error::ShapeMismatch {
            op: "alignment_score",
            left: photo.shape(),
            right: sketch.shape(),
        });
    }
    ssim(&sobel_edges(&luma)?, &sobel_edges(sketch)?)
}

/// Keeps a pair iff its score is strictly above `threshold`. The score is
/// recomputed and stored on the pair.
pub fn alignment_filter(pair: &mut PatchPair, threshold: f64) -> Result<bool> {
    pair.alignment_score = alignment_score(&pair.photo, &pair.sketch)?;
    Ok(pair.alignment_score > threshold)
}

/// Majority vote of per-pixel argmax labels inside a window. Count ties go
/// to face, then hair.
fn majority_region(labels: &crate::parsing::LabelMap, y0: usize, x0: usize, size: usize) -> Region {
    let mut counts = [0usize; 3];
    for y in y0..y0 + size {
        for x in x0..x0 + size {
            counts[labels.get(y, x).channel()] += 1;
        }
    }
    let best = (0..3).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
    Region::ALL[best]
}

/// Cuts a regular grid of `size x size` patch pairs.
///
/// Each window is labelled by the majority argmax class of `parsing` inside
/// it. Background windows are dropped. Face pairs must pass the alignment
/// filter; hair pairs are kept regardless of their score.
pub fn extract_patches(
    photo: &Tensor,
    sketch: &Tensor,
    parsing: &ParsingMap,
    size: usize,
    stride: usize,
    threshold: f64,
) -> Result<Vec<PatchPair>> {
    let (h, w) = (photo.height(), photo.width());
    if sketch.channels() != 1 || sketch.height() != h || sketch.width() != w {
        return Err(Error::ShapeMismatch {
            op: "extract_patches",
            left: photo.shape(),
            right: sketch.shape(),
        });
    }
    if parsing.height() != h || parsing.width() != w {
        return Err(Error::ShapeMismatch {
            op: "extract_patches",
            left: photo.shape(),
            right: parsing.as_tensor().shape(),
        });
    }
    if size == 0 || stride == 0 {
        return Err(Error::invalid("extract_patches", "patch size and stride must be positive"));
    }
    if size > h || size > w {
        return Err(Error::invalid(
            "extract_patches",
            format!("patch size {size} exceeds image {h}x{w}"),
        ));
    }
    let labels = parsing.argmax();
    let mut pairs = Vec::new();
    for y in (0..=h - size).step_by(stride) {
        for x in (0..=w - size).step_by(stride) {
            let region = majority_region(&labels, y, x, size);
            if region == Region::Background {
                continue;
            }
            let pair = PatchPair::new(photo.crop(y, x, size, size)?, sketch.crop(y, x, size, size)?, region, (y, x))?;
            if region == Region::Face && pair.alignment_score <= threshold {
                continue;
            }
            pairs.push(pair);
        }
    }
    Ok(pairs)
}

/// Number of grid positions along one axis.
pub fn grid_positions(len: usize, size: usize, stride: usize) -> usize {
    if size > len {
        0
    } else {
        (len - size) / stride + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsing::LabelMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(seed: u64, h: usize, w: usize) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(1, h, w, |_, _, _| rng.random_range(0.0..1.0))
    }

    #[test]
    fn grid_count() {
        let img = textured(1, 64, 64);
        let parsing = LabelMap::filled(64, 64, Region::Face).to_parsing();
        let pairs = extract_patches(&img, &img, &parsing, 32, 16, 0.6).unwrap();
        assert_eq!(grid_positions(64, 32, 16), 3);
        assert_eq!(pairs.len(), 9);
        assert!(pairs.iter().all(|p| (p.alignment_score - 1.0).abs() < 1e-12));
    }

    #[test]
    fn all_hair_is_never_filtered() {
        let photo = textured(2, 64, 64);
        let sketch = textured(3, 64, 64);
        let parsing = LabelMap::filled(64, 64, Region::Hair).to_parsing();
        let pairs = extract_patches(&photo, &sketch, &parsing, 32, 16, 0.6).unwrap();
        assert_eq!(pairs.len(), 9);
        assert!(pairs.iter().all(|p| p.region == Region::Hair));
        // Same inputs as faces lose every pair to the filter.
        let parsing = LabelMap::filled(64, 64, Region::Face).to_parsing();
        assert!(extract_patches(&photo, &sketch, &parsing, 32, 16, 0.6).unwrap().is_empty());
    }

    #[test]
    fn background_dropped_and_majority_labels() {
        let img = textured(4, 32, 64);
        let codes: Vec<u8> = (0..32 * 64).map(|i| if i % 64 < 40 { 3 } else { 2 }).collect();
        let parsing = LabelMap::from_codes(32, 64, &codes).unwrap().to_parsing();
        let pairs = extract_patches(&img, &img, &parsing, 32, 16, 0.6).unwrap();
        // Windows start at x = 0, 16, 32; only x = 32 is hair-majority (24 of 32 columns).
        assert_eq!(pairs.iter().map(|p| p.origin).collect::<Vec<_>>(), vec![(0, 32)]);
    }

    #[test]
    fn oversized_patch_rejected() {
        let img = textured(5, 20, 40);
        let parsing = LabelMap::filled(20, 40, Region::Face).to_parsing();
        assert!(extract_patches(&img, &img, &parsing, 32, 16, 0.6).is_err());
    }

    #[test]
    fn target_is_center() {
        let sketch = Tensor::from_fn(1, 32, 32, |_, y, x| (y * 32 + x) as f64);
        let pair = PatchPair::new(Tensor::zeros(1, 32, 32), sketch.clone(), Region::Face, (0, 0)).unwrap();
        let t = pair.target(20).unwrap();
        assert_eq!(t.get(0, 0, 0), sketch.get(0, 6, 6));
        assert_eq!(t.get(0, 19, 19), sketch.get(0, 25, 25));
    }

    #[test]
    fn filter_rejects_blended_noise_below_threshold() {
        // Blend the sketch towards noise until the measured score drops just
        // under 0.6.
        let photo = Tensor::from_fn(1, 32, 32, |_, y, x| if (x / 8 + y / 8) % 2 == 0 { 0.2 } else { 0.8 });
        let noise = textured(6, 32, 32);
        let mut t = 0.0;
        let mut pair = loop {
            t += 0.005;
            assert!(t < 1.0, "never dropped below 0.6");
            let sketch = photo.zip_map(&noise, |a, b| (1.0 - t) * a + t * b).unwrap();
            let pair = PatchPair::new(photo.clone(), sketch, Region::Face, (0, 0)).unwrap();
            if pair.alignment_score < 0.6 {
                break pair;
            }
        };
        assert!(pair.alignment_score > 0.55, "overshot to {}", pair.alignment_score);
        assert!(!alignment_filter(&mut pair, 0.6).unwrap());
        assert!(alignment_filter(&mut pair, 0.5).unwrap());
    }
}
