use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::spec::NetworkSpec;
use crate::error::{Error, Result};
use crate::layers::ConvLayerParams;

/// Standard deviation of the zero-mean Gaussian used for kernel init.
pub const INIT_STD: f64 = 0.01;

/// Learned parameters of one network, in [`NetworkSpec::conv_layers`] order.
///
/// Stored values are kept representable in single precision so the weight
/// file round-trips bit for bit; arithmetic is done in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub layers: Vec<ConvLayerParams>,
    pub spec_hash: u64,
    pub seed: u64,
    pub epoch: u32,
}

impl NetworkWeights {
    /// All-zero parameters shaped for `spec`; also the accumulator shape
    /// for gradients.
    pub fn zeros(spec: &NetworkSpec) -> Self {
        NetworkWeights {
            layers: spec
                .conv_layers()
                .iter()
                .map(|c| ConvLayerParams::zeros(c.out_channels, c.in_channels, c.kernel, c.kernel))
                .collect(),
            spec_hash: spec.hash(),
            seed: 0,
            epoch: 0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        NetworkWeights {
            layers: self
                .layers
                .iter()
                .map(|l| {
                    let [o, i, kh, kw] = l.dims();
                    ConvLayerParams::zeros(o, i, kh, kw)
                })
                .collect(),
            spec_hash: self.spec_hash,
            seed: self.seed,
            epoch: self.epoch,
        }
    }

    /// Checks layer count and every kernel shape against `spec`.
    pub fn check_matches(&self, spec: &NetworkSpec) -> Result<()> {
        if self.spec_hash != spec.hash() {
            return Err(Error::Incompatible(format!(
                "weights were built for spec {:016x}, expected {:016x}",
                self.spec_hash,
                spec.hash()
            )));
        }
        let convs = spec.conv_layers();
        if convs.len() != self.layers.len() {
            return Err(Error::Incompatible(format!(
                "{} weight layers for a spec with {} convolutions",
                self.layers.len(),
                convs.len()
            )));
        }
        for (i, (c, l)) in convs.iter().zip(&self.layers).enumerate() {
            let want = [c.out_channels, c.in_channels, c.kernel, c.kernel];
            if l.dims() != want {
                return Err(Error::Incompatible(format!(
                    "layer {i} has dims {:?}, spec wants {want:?}",
                    l.dims()
                )));
            }
        }
        Ok(())
    }

    pub fn same_layout(&self, other: &NetworkWeights) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.same_dims(b))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// Every parameter, layer by layer, kernel before bias.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.values().copied()).collect()
    }

    /// Inverse of [`NetworkWeights::flatten`].
    pub fn assign(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::invalid(
                "assign",
                format!("{} values for {} parameters", values.len(), self.param_count()),
            ));
        }
        for (dst, &v) in self.layers.iter_mut().flat_map(|l| l.values_mut()).zip(values) {
            *dst = v;
        }
        Ok(())
    }

    /// `self += scale * other`, layer by layer.
    pub fn add_scaled(&mut self, other: &NetworkWeights, scale: f64) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::invalid("add_scaled", "weight layouts differ"));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.values_mut().zip(b.values()) {
                *x += scale * y;
            }
        }
        Ok(())
    }

    /// Rounds every parameter to the nearest single-precision value.
    pub fn quantize(&mut self) {
        for v in self.layers.iter_mut().flat_map(|l| l.values_mut()) {
            *v = *v as f32 as f64;
        }
    }
}

/// Gaussian `N(0, 0.01^2)` kernels and zero biases from a seeded generator.
pub fn init_weights(spec: &NetworkSpec, seed: u64) -> NetworkWeights {
    init_weights_with_std(spec, seed, INIT_STD)
}

pub fn init_weights_with_std(spec: &NetworkSpec, seed: u64, std: f64) -> NetworkWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).expect("init std must be finite and non-negative");
    let mut w = NetworkWeights::zeros(spec);
    for layer in &mut w.layers {
        for k in layer.kernel.iter_mut() {
            *k = normal.sample(&mut rng) as f32 as f64;
        }
    }
    w.seed = seed;
    w
}
