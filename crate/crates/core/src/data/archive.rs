//! Binary containers written by `prepare` and read by training and inference.
//!
//! All three formats start with a 4-byte magic and a `u32` version and store
//! little-endian values. Image data is kept as `f64` so a round trip is exact.
//!
//! * `SKPA` pair archive: every candidate patch pair of a dataset, including
//!   face pairs that fail the alignment filter. The filter is applied on load
//!   so it can be switched off without re-preparing.
//! * `SKTN` a single tensor (the priors).
//! * `SKPS` parsing set: photos with their label maps.

use std::path::Path;

use super::patches::PatchPair;
use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::parsing::{LabelMap, Region};
use crate::tensor::Tensor;

const PAIRS_MAGIC: &[u8; 4] = b"SKPA";
const TENSOR_MAGIC: &[u8; 4] = b"SKTN";
const PARSING_MAGIC: &[u8; 4] = b"SKPS";
const VERSION: u32 = 1;

/// Patch pairs cut from a common training frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PairArchive {
    pub patch_size: usize,
    pub photo_channels: usize,
    /// Alignment threshold chosen at preparation time.
    pub threshold: f64,
    /// Where the training frame sits inside the full-size images.
    pub frame_offset: (usize, usize),
    pub frame_size: (usize, usize),
    pub pairs: Vec<PatchPair>,
}

impl PairArchive {
    /// Pairs that survive the alignment filter at `threshold`, or all pairs
    /// if `threshold` is `None`. Hair pairs are never filtered.
    pub fn selected(&self, threshold: Option<f64>) -> Vec<PatchPair> {
        self.pairs
            .iter()
            .filter(|p| match threshold {
                Some(t) => p.region != Region::Face || p.alignment_score > t,
                None => true,
            })
            .cloned()
            .collect()
    }

    pub fn count(&self, region: Region) -> usize {
        self.pairs.iter().filter(|p| p.region == region).count()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(PAIRS_MAGIC);
        w.u32(VERSION);
        w.usize_u32(self.patch_size);
        w.usize_u32(self.photo_channels);
        w.f64(self.threshold);
        w.usize_u32(self.frame_offset.0);
        w.usize_u32(self.frame_offset.1);
        w.usize_u32(self.frame_size.0);
        w.usize_u32(self.frame_size.1);
        w.usize_u32(self.pairs.len());
        for p in &self.pairs {
            w.u8(p.region.code());
            w.usize_u32(p.origin.0);
            w.usize_u32(p.origin.1);
            w.f64(p.alignment_score);
            for &v in p.photo.data().iter().chain(p.sketch.data()) {
                w.f64(v);
            }
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let what = "pair archive";
        let mut r = ByteReader::new(bytes, what);
        r.expect_magic(PAIRS_MAGIC)?;
        check_version(&mut r, what)?;
        let patch_size = r.u32()? as usize;
        let photo_channels = r.u32()? as usize;
        if patch_size == 0 || !(photo_channels == 1 || photo_channels == 3) {
            return Err(Error::format(what, format!("bad patch size {patch_size} or channel count {photo_channels}")));
        }
        let threshold = r.f64()?;
        let frame_offset = (r.u32()? as usize, r.u32()? as usize);
        let frame_size = (r.u32()? as usize, r.u32()? as usize);
        let count = r.u32()? as usize;
        let plane = patch_size * patch_size;
        let mut pairs = Vec::with_capacity(count.min(1 << 16));
        for i in 0..count {
            let code = r.u8()?;
            let region = Region::from_code(code)
                .ok_or_else(|| Error::format(what, format!("pair {i}: bad region code {code}")))?;
            let origin = (r.u32()? as usize, r.u32()? as usize);
            let alignment_score = r.f64()?;
            let photo = Tensor::new(photo_channels, patch_size, patch_size, r.f64_vec(photo_channels * plane)?)?;
            let sketch = Tensor::new(1, patch_size, patch_size, r.f64_vec(plane)?)?;
            pairs.push(PatchPair {
                photo,
                sketch,
                region,
                alignment_score,
                origin,
            });
        }
        r.expect_end()?;
        Ok(PairArchive {
            patch_size,
            photo_channels,
            threshold,
            frame_offset,
            frame_size,
            pairs,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

fn check_version(r: &mut ByteReader<'_>, what: &'static str) -> Result<()> {
    match r.u32()? {
        VERSION => Ok(()),
        v => Err(Error::format(what, format!("unsupported version {v}"))),
    }
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(TENSOR_MAGIC);
    w.u32(VERSION);
    w.usize_u32(t.channels());
    w.usize_u32(t.height());
    w.usize_u32(t.width());
    for &v in t.data() {
        w.f64(v);
    }
    w.finish()
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let what = "tensor file";
    let mut r = ByteReader::new(bytes, what);
    r.expect_magic(TENSOR_MAGIC)?;
    check_version(&mut r, what)?;
    let (c, h, w) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let n = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::format(what, "dimensions overflow"))?;
    let t = Tensor::new(c, h, w, r.f64_vec(n)?)?;
    r.expect_end()?;
    Ok(t)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    std::fs::write(path, encode_tensor(t))?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode_tensor(&std::fs::read(path)?)
}

/// Photos at parsing-network input size with label maps at its output size.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsingSet {
    pub samples: Vec<(Tensor, LabelMap)>,
}

impl ParsingSet {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::new();
        w.bytes(PARSING_MAGIC);
        w.u32(VERSION);
        let (photo_shape, label_size) = match self.samples.first() {
            Some((p, l)) => (p.shape(), (l.height(), l.width())),
            None => (crate::error::Shape::new(0, 0, 0), (0, 0)),
        };
        w.usize_u32(self.samples.len());
        w.usize_u32(photo_shape.channels);
        w.usize_u32(photo_shape.height);
        w.usize_u32(photo_shape.width);
        w.usize_u32(label_size.0);
        w.usize_u32(label_size.1);
        for (i, (photo, labels)) in self.samples.iter().enumerate() {
            if photo.shape() != photo_shape || (labels.height(), labels.width()) != label_size {
                return Err(Error::invalid("parsing set", format!("sample {i} differs in size from sample 0")));
            }
            for &v in photo.data() {
                w.f64(v);
            }
            w.bytes(&labels.codes());
        }
        Ok(w.finish())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let what = "parsing set";
        let mut r = ByteReader::new(bytes, what);
        r.expect_magic(PARSING_MAGIC)?;
        check_version(&mut r, what)?;
        let count = r.u32()? as usize;
        let (c, h, w) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        let (lh, lw) = (r.u32()? as usize, r.u32()? as usize);
        let mut samples = Vec::with_capacity(count.min(1 << 12));
        for _ in 0..count {
            let photo = Tensor::new(c, h, w, r.f64_vec(c * h * w)?)?;
            let labels = LabelMap::from_codes(lh, lw, r.take(lh * lw)?)?;
            samples.push((photo, labels));
        }
        r.expect_end()?;
        Ok(ParsingSet { samples })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(region: Region, score_seed: usize) -> PatchPair {
        let photo = Tensor::from_fn(1, 4, 4, |_, y, x| ((y * 4 + x + score_seed) % 7) as f64 / 7.0);
        let sketch = Tensor::from_fn(1, 4, 4, |_, y, x| ((y + x * 3) % 5) as f64 / 5.0);
        PatchPair::new(photo, sketch, region, (score_seed, 2)).unwrap()
    }

    fn archive() -> PairArchive {
        PairArchive {
            patch_size: 4,
            photo_channels: 1,
            threshold: 0.6,
            frame_offset: (25, 22),
            frame_size: (200, 156),
            pairs: vec![pair(Region::Face, 0), pair(Region::Hair, 1), pair(Region::Face, 3)],
        }
    }

    #[test]
    fn pair_archive_round_trip() {
        let a = archive();
        assert_eq!(PairArchive::decode(&a.encode()).unwrap(), a);
    }

    #[test]
    fn selection_only_filters_faces() {
        let mut a = archive();
        a.pairs[0].alignment_score = 0.9;
        a.pairs[1].alignment_score = 0.1;
        a.pairs[2].alignment_score = 0.6;
        let kept = a.selected(Some(0.6));
        assert_eq!(kept.iter().map(|p| p.origin.0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(a.selected(None).len(), 3);
        assert_eq!(a.count(Region::Face), 2);
    }

    #[test]
    fn truncated_archive_rejected() {
        let bytes = archive().encode();
        for cut in [3, 10, bytes.len() - 1] {
            assert!(PairArchive::decode(&bytes[..cut]).is_err());
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(PairArchive::decode(&extra).is_err());
    }

    #[test]
    fn tensor_round_trip_and_magic() {
        let t = Tensor::from_fn(3, 2, 5, |c, y, x| (c * 10 + y * 5 + x) as f64 / 3.0);
        let bytes = encode_tensor(&t);
        assert_eq!(decode_tensor(&bytes).unwrap(), t);
        assert!(decode_tensor(&archive().encode()).is_err());
    }

    #[test]
    fn parsing_set_round_trip() {
        let set = ParsingSet {
            samples: vec![
                (Tensor::filled(3, 4, 2, 0.25), LabelMap::filled(2, 1, Region::Hair)),
                (Tensor::filled(3, 4, 2, 0.5), LabelMap::from_codes(2, 1, &[1, 3]).unwrap()),
            ],
        };
        assert_eq!(ParsingSet::decode(&set.encode().unwrap()).unwrap(), set);
        let mut bad = set.clone();
        bad.samples[1].1 = LabelMap::filled(1, 1, Region::Face);
        assert!(bad.encode().is_err());
    }
}
