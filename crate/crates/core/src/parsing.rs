//! Semantic regions, label maps and per-pixel probability maps.

use std::fmt;

use crate::error::{Error, Result};
use crate::layers::bilinear_resize;
use crate::tensor::Tensor;

/// Face-parsing classes. Channel order in every three-channel map is
/// face, hair, background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Face,
    Hair,
    Background,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Face, Region::Hair, Region::Background];

    /// Class code 1, 2 or 3.
    pub fn code(self) -> u8 {
        match self {
            Region::Face => 1,
            Region::Hair => 2,
            Region::Background => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Region> {
        match code {
            1 => Some(Region::Face),
            2 => Some(Region::Hair),
            3 => Some(Region::Background),
            _ => None,
        }
    }

    pub fn channel(self) -> usize {
        self.code() as usize - 1
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Face => "face",
            Region::Hair => "hair",
            Region::Background => "background",
        })
    }
}

/// Hard per-pixel ground-truth labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<Region>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<Region>) -> Result<Self> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(Error::invalid(
                "label map",
                format!("{} labels for a {height}x{width} map", labels.len()),
            ));
        }
        Ok(LabelMap {
            height,
            width,
            labels,
        })
    }

    pub fn filled(height: usize, width: usize, region: Region) -> Self {
        LabelMap::new(height, width, vec![region; height * width]).expect("empty label map")
    }

    /// Builds a map from class codes; anything outside `{1, 2, 3}` is rejected.
    pub fn from_codes(height: usize, width: usize, codes: &[u8]) -> Result<Self> {
        let labels = codes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                Region::from_code(c).ok_or_else(|| {
                    Error::invalid(
                        "label map",
                        format!("label {c} at pixel {i} is not one of 1 (face), 2 (hair), 3 (background)"),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LabelMap::new(height, width, labels)
    }

    pub fn codes(&self) -> Vec<u8> {
        self.labels.iter().map(|r| r.code()).collect()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn get(&self, y: usize, x: usize) -> Region {
        self.labels[y * self.width + x]
    }

    /// Nearest-neighbour downsampling by keeping every `factor`-th pixel.
    pub fn subsample(&self, factor: usize) -> LabelMap {
        let (h, w) = (self.height / factor, self.width / factor);
        let labels = (0..h)
            .flat_map(|y| (0..w).map(move |x| (y, x)))
            .map(|(y, x)| self.get(y * factor, x * factor))
            .collect();
        LabelMap::new(h, w, labels).expect("subsample produced empty map")
    }

    /// Nearest-neighbour resize mapping pixel centres: output pixel `y` reads
    /// source row `floor((y + 0.5) * H / h)`.
    pub fn resized_nearest(&self, height: usize, width: usize) -> Result<LabelMap> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("label map", format!("cannot resize to {height}x{width}")));
        }
        let src = |dst: usize, from: usize, to: usize| (((2 * dst + 1) * from) / (2 * to)).min(from - 1);
        let labels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (y, x)))
            .map(|(y, x)| self.get(src(y, self.height, height), src(x, self.width, width)))
            .collect();
        LabelMap::new(height, width, labels)
    }

    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<LabelMap> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(Error::invalid(
                "label map",
                format!("crop {h}x{w} at ({y0}, {x0}) exceeds {}x{}", self.height, self.width),
            ));
        }
        let labels = (y0..y0 + h)
            .flat_map(|y| (x0..x0 + w).map(move |x| (y, x)))
            .map(|(y, x)| self.get(y, x))
            .collect();
        LabelMap::new(h, w, labels)
    }

    /// One-hot probabilities.
    pub fn to_parsing(&self) -> ParsingMap {
        let t = Tensor::from_fn(3, self.height, self.width, |c, y, x| {
            if self.get(y, x).channel() == c {
                1.0
            } else {
                0.0
            }
        });
        ParsingMap { probs: t }
    }
}

/// Per-pixel probability triple (face, hair, background) summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsingMap {
    probs: Tensor,
}

pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

impl ParsingMap {
    /// Wraps a three-channel tensor after checking the simplex invariant.
    pub fn new(probs: Tensor) -> Result<Self> {
        if probs.channels() != 3 {
            return Err(Error::invalid(
                "parsing map",
                format!("expected 3 channels, got {}", probs.shape()),
            ));
        }
        let plane = probs.height() * probs.width();
        for p in 0..plane {
            let vals = [probs.data()[p], probs.data()[plane + p], probs.data()[2 * plane + p]];
            if vals.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid("parsing map", format!("probability outside [0, 1] at pixel {p}")));
            }
            let sum: f64 = vals.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::invalid("parsing map", format!("pixel {p} sums to {sum}")));
            }
        }
        Ok(ParsingMap { probs })
    }

    /// Channel softmax of three-channel logits.
    pub fn from_logits(logits: &Tensor) -> Result<Self> {
        if logits.channels() != 3 {
            return Err(Error::invalid(
                "parsing map",
                format!("expected 3 logit channels, got {}", logits.shape()),
            ));
        }
        let plane = logits.height() * logits.width();
        let mut probs = logits.clone();
        let d = probs.data_mut();
        for p in 0..plane {
            let z = [d[p], d[plane + p], d[2 * plane + p]];
            let e = softmax3(z);
            d[p] = e[0];
            d[plane + p] = e[1];
            d[2 * plane + p] = e[2];
        }
        Ok(ParsingMap { probs })
    }

    /// Clamps to non-negative values and divides each pixel by its sum. Pixels
    /// with zero mass become uniform.
    pub fn normalized(raw: &Tensor) -> Result<Self> {
        if raw.channels() != 3 {
            return Err(Error::invalid(
                "parsing map",
                format!("expected 3 channels, got {}", raw.shape()),
            ));
        }
        let plane = raw.height() * raw.width();
        let mut probs = raw.clone();
        let d = probs.data_mut();
        for p in 0..plane {
            let v = [d[p].max(0.0), d[plane + p].max(0.0), d[2 * plane + p].max(0.0)];
            let s: f64 = v.iter().sum();
            let v = if s > 0.0 {
                [v[0] / s, v[1] / s, v[2] / s]
            } else {
                [1.0 / 3.0; 3]
            };
            d[p] = v[0];
            d[plane + p] = v[1];
            d[2 * plane + p] = v[2];
        }
        Ok(ParsingMap { probs })
    }

    pub fn uniform(height: usize, width: usize) -> Self {
        ParsingMap {
            probs: Tensor::filled(3, height, width, 1.0 / 3.0),
        }
    }

    pub fn height(&self) -> usize {
        self.probs.height()
    }

    pub fn width(&self) -> usize {
        self.probs.width()
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.probs
    }

    pub fn into_tensor(self) -> Tensor {
        self.probs
    }

    pub fn probability(&self, region: Region) -> Tensor {
        self.probs.channel(region.channel())
    }

    pub fn at(&self, y: usize, x: usize) -> [f64; 3] {
        [self.probs.get(0, y, x), self.probs.get(1, y, x), self.probs.get(2, y, x)]
    }

    /// Most probable region per pixel. Ties resolve toward hair, then face.
    pub fn argmax(&self) -> LabelMap {
        let labels = (0..self.height())
            .flat_map(|y| (0..self.width()).map(move |x| (y, x)))
            .map(|(y, x)| {
                let [f, h, b] = self.at(y, x);
                if h >= f && h >= b {
                    Region::Hair
                } else if f >= b {
                    Region::Face
                } else {
                    Region::Background
                }
            })
            .collect();
        LabelMap::new(self.height(), self.width(), labels).expect("parsing map is non-empty")
    }

    /// Bilinear resize followed by renormalization onto the simplex.
    pub fn resized(&self, height: usize, width: usize) -> Result<ParsingMap> {
        let r = bilinear_resize(&self.probs, height, width)?;
        ParsingMap::normalized(&r)
    }

    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<ParsingMap> {
        Ok(ParsingMap {
            probs: self.probs.crop(y0, x0, h, w)?,
        })
    }

    /// Largest deviation of any per-pixel sum from one.
    pub fn max_simplex_error(&self) -> f64 {
        let plane = self.height() * self.width();
        let d = self.probs.data();
        (0..plane)
            .map(|p| (d[p] + d[plane + p] + d[2 * plane + p] - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn softmax3(z: [f64; 3]) -> [f64; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp(), (z[2] - m).exp()];
    let s = e[0] + e[1] + e[2];
    [e[0] / s, e[1] / s, e[2] / s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip_and_reject_out_of_range() {
        let m = LabelMap::from_codes(1, 3, &[1, 2, 3]).unwrap();
        assert_eq!(m.labels(), &[Region::Face, Region::Hair, Region::Background]);
        assert_eq!(m.codes(), vec![1, 2, 3]);
        assert!(LabelMap::from_codes(1, 2, &[1, 4]).is_err());
        assert!(LabelMap::from_codes(1, 2, &[0, 1]).is_err());
    }

    #[test]
    fn nearest_resize() {
        let m = LabelMap::from_codes(2, 4, &[1, 1, 2, 2, 3, 3, 1, 2]).unwrap();
        assert_eq!(m.resized_nearest(2, 4).unwrap(), m);
        assert_eq!(m.resized_nearest(1, 2).unwrap().codes(), vec![3, 2]);
        assert_eq!(m.resized_nearest(4, 8).unwrap().get(3, 7), Region::Hair);
        assert_eq!(m.resized_nearest(4, 8).unwrap().subsample(2), m);
    }

    #[test]
    fn softmax_of_zero_logits_is_uniform() {
        let p = ParsingMap::from_logits(&Tensor::zeros(3, 2, 2)).unwrap();
        assert!(p.as_tensor().data().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn softmax_survives_large_logits() {
        let logits = Tensor::new(3, 1, 1, vec![1000.0, -1000.0, 0.0]).unwrap();
        let p = ParsingMap::from_logits(&logits).unwrap();
        assert_eq!(p.at(0, 0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_simplex() {
        assert!(ParsingMap::new(Tensor::filled(3, 1, 1, 0.5)).is_err());
        assert!(ParsingMap::new(Tensor::filled(2, 1, 1, 0.5)).is_err());
    }

    #[test]
    fn resize_keeps_simplex() {
        let labels = LabelMap::from_codes(2, 2, &[1, 2, 3, 2]).unwrap();
        let p = labels.to_parsing().resized(7, 5).unwrap();
        assert!(p.max_simplex_error() < 1e-12);
    }

    #[test]
    fn argmax_ties_prefer_hair() {
        assert_eq!(ParsingMap::uniform(1, 1).argmax().get(0, 0), Region::Hair);
    }

    #[test]
    fn subsample_takes_even_pixels() {
        let m = LabelMap::from_codes(2, 4, &[1, 2, 3, 1, 3, 3, 3, 3]).unwrap();
        assert_eq!(m.subsample(2).codes(), vec![1, 3]);
    }
}
