//! Binary weight file.
//!
//! ```text
//! "SKWT"                      4 bytes magic
//! version        u32          currently 1
//! spec hash      u64          NetworkSpec::hash of the owning spec
//! layer count    u32
//! per layer:
//!   out, in, kh, kw          4 x u32
//!   kernel                    out*in*kh*kw x f32, row-major (out, in, ky, kx)
//!   bias                      out x f32
//! seed           u64          init seed
//! epoch          u32          completed training epochs
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::spec::NetworkSpec;
use super::weights::NetworkWeights;
use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::layers::ConvLayerParams;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"SKWT";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn encode_weights(weights: &NetworkWeights) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(WEIGHTS_MAGIC);
    w.u32(WEIGHTS_VERSION);
    w.u64(weights.spec_hash);
    w.usize_u32(weights.layers.len());
    for layer in &weights.layers {
        for d in layer.dims() {
            w.usize_u32(d);
        }
        for &k in &layer.kernel {
            w.f32(k);
        }
        for &b in &layer.bias {
            w.f32(b);
        }
    }
    w.u64(weights.seed);
    w.u32(weights.epoch);
    w.finish()
}

/// Parses a weight file without checking it against any spec.
pub fn decode_weights(bytes: &[u8]) -> Result<NetworkWeights> {
    let mut r = ByteReader::new(bytes, "weight file");
    r.expect_magic(WEIGHTS_MAGIC)?;
    let version = r.u32()?;
    if version != WEIGHTS_VERSION {
        return Err(Error::format("weight file", format!("unsupported version {version}")));
    }
    let spec_hash = r.u64()?;
    let count = r.u32()? as usize;
    let mut layers = Vec::with_capacity(count.min(64));
    for i in 0..count {
        let dims = [r.u32()?, r.u32()?, r.u32()?, r.u32()?].map(|d| d as usize);
        let [o, ic, kh, kw] = dims;
        let n = o
            .checked_mul(ic)
            .and_then(|v| v.checked_mul(kh))
            .and_then(|v| v.checked_mul(kw))
            .ok_or_else(|| Error::format("weight file", format!("layer {i} dims {dims:?} overflow")))?;
        let kernel = r.f32_vec(n)?;
        let bias = r.f32_vec(o)?;
        let layer = ConvLayerParams::new(o, ic, kh, kw, kernel, bias)
            .map_err(|e| Error::format("weight file", format!("layer {i}: {e}")))?;
        layers.push(layer);
    }
    let seed = r.u64()?;
    let epoch = r.u32()?;
    r.expect_end()?;
    Ok(NetworkWeights {
        layers,
        spec_hash,
        seed,
        epoch,
    })
}

pub fn save_weights(weights: &NetworkWeights, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_weights(weights))?;
    Ok(())
}

/// Loads weights and verifies they belong to `spec`.
pub fn load_weights(path: impl AsRef<Path>, spec: &NetworkSpec) -> Result<NetworkWeights> {
    let bytes = std::fs::read(path)?;
    let weights = decode_weights(&bytes)?;
    weights.check_matches(spec)?;
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::weights::init_weights;

    #[test]
    fn round_trip_is_bitwise() {
        let spec = NetworkSpec::default_bfcn();
        let mut w = init_weights(&spec, 42);
        w.epoch = 17;
        let back = decode_weights(&encode_weights(&w)).unwrap();
        assert_eq!(back, w);
        for (a, b) in back.flatten().iter().zip(w.flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn file_round_trip_and_spec_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.skwt");
        let spec = NetworkSpec::default_pnet();
        let w = init_weights(&spec, 1);
        save_weights(&w, &path).unwrap();
        assert_eq!(load_weights(&path, &spec).unwrap(), w);
        let err = load_weights(&path, &NetworkSpec::default_bfcn()).unwrap_err();
        assert!(matches!(err, Error::Incompatible(_)), "{err}");
    }

    #[test]
    fn truncation_is_an_error() {
        let bytes = encode_weights(&init_weights(&NetworkSpec::default_bfcn(), 0));
        for cut in [0, 3, 10, 25, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode_weights(&bytes[..cut]), Err(Error::Format { .. })), "cut {cut}");
        }
    }

    #[test]
    fn corrupt_header_rejected() {
        let mut bytes = encode_weights(&init_weights(&NetworkSpec::default_bfcn(), 0));
        bytes[0] = b'X';
        assert!(decode_weights(&bytes).unwrap_err().to_string().contains("magic"));
        let mut bytes = encode_weights(&init_weights(&NetworkSpec::default_bfcn(), 0));
        bytes[4] = 9;
        assert!(decode_weights(&bytes).unwrap_err().to_string().contains("version"));
    }
}
