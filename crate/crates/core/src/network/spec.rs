use crate::error::{Error, Result};
use crate::layers::LrnParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Bfcn,
    PNet,
}

/// One convolution in a layer list. `pad` zero rows/columns are added on
/// every side before the (valid) convolution; BFCN always uses 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub pad: usize,
    pub relu: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Conv(ConvSpec),
    /// 2x2 window, stride 2: halves both spatial dims.
    MaxPool,
    /// 2x2 window, stride 1, clipped at the far borders: keeps the size.
    MaxPoolStride1,
    Lrn(LrnParams),
}

/// Channel widths for the branched network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BfcnWidths {
    pub trunk: [usize; 3],
    /// Output channels of the three branch layers; the last must be 1.
    pub branch: [usize; 3],
}

impl Default for BfcnWidths {
    fn default() -> Self {
        BfcnWidths {
            trunk: [32, 32, 32],
            branch: [16, 16, 1],
        }
    }
}

impl BfcnWidths {
    pub fn uniform(width: usize) -> Self {
        BfcnWidths {
            trunk: [width; 3],
            branch: [width, width, 1],
        }
    }
}

pub const BFCN_TRUNK_KERNELS: [usize; 3] = [5, 5, 1];
pub const BFCN_BRANCH_KERNELS: [usize; 3] = [1, 3, 3];

/// Channel widths and kernel sizes of the eight parsing-network convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PNetLayout {
    pub widths: [usize; 8],
    pub kernels: [usize; 8],
}

impl Default for PNetLayout {
    fn default() -> Self {
        PNetLayout {
            widths: [16, 16, 32, 32, 32, 64, 64, 3],
            kernels: [5, 5, 5, 3, 3, 3, 3, 1],
        }
    }
}

impl PNetLayout {
    pub fn uniform(width: usize) -> Self {
        PNetLayout {
            widths: [width, width, width, width, width, width, width, 3],
            ..PNetLayout::default()
        }
    }
}

/// Declarative layer list for one of the two fixed architectures.
///
/// BFCN: a three-convolution trunk shared by two branches (structural first,
/// textural second). P-Net: a single stack, no branches.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    architecture: Architecture,
    photo_channels: usize,
    prior_channels: usize,
    use_prior: bool,
    trunk: Vec<LayerSpec>,
    branches: Vec<Vec<LayerSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Structural,
    Textural,
}

impl Branch {
    pub fn index(self) -> usize {
        match self {
            Branch::Structural => 0,
            Branch::Textural => 1,
        }
    }
}

fn conv(in_channels: usize, out_channels: usize, kernel: usize, pad: usize, relu: bool) -> LayerSpec {
    LayerSpec::Conv(ConvSpec {
        in_channels,
        out_channels,
        kernel,
        pad,
        relu,
    })
}

impl NetworkSpec {
    /// Branched network: photo channels plus one sketch-prior channel in,
    /// two single-channel maps out.
    pub fn bfcn(widths: BfcnWidths, photo_channels: usize) -> Result<Self> {
        if photo_channels != 1 && photo_channels != 3 {
            return Err(Error::invalid("bfcn spec", format!("photo channels must be 1 or 3, got {photo_channels}")));
        }
        if widths.trunk.contains(&0) || widths.branch.contains(&0) {
            return Err(Error::invalid("bfcn spec", "channel widths must be positive"));
        }
        if widths.branch[2] != 1 {
            return Err(Error::invalid(
                "bfcn spec",
                format!("branch output must have 1 channel, got {}", widths.branch[2]),
            ));
        }
        let mut trunk = Vec::new();
        let mut c = photo_channels + 1;
        for (k, w) in BFCN_TRUNK_KERNELS.iter().zip(widths.trunk) {
            trunk.push(conv(c, w, *k, 0, true));
            c = w;
        }
        let branch = |start: usize| {
            let mut layers = Vec::new();
            let mut c = start;
            for (k, w) in BFCN_BRANCH_KERNELS.iter().zip(widths.branch) {
                layers.push(conv(c, w, *k, 0, true));
                c = w;
            }
            layers
        };
        Ok(NetworkSpec {
            architecture: Architecture::Bfcn,
            photo_channels,
            prior_channels: 1,
            use_prior: true,
            trunk,
            branches: vec![branch(c), branch(c)],
        })
    }

    /// Parsing network: photo plus three prior channels in, three logit
    /// channels out at half resolution. The first three convolutions are each
    /// followed by max pooling and LRN; only the first pool downsamples.
    pub fn pnet(layout: PNetLayout, photo_channels: usize, lrn: LrnParams) -> Result<Self> {
        if photo_channels != 1 && photo_channels != 3 {
            return Err(Error::invalid("pnet spec", format!("photo channels must be 1 or 3, got {photo_channels}")));
        }
        if layout.widths.contains(&0) {
            return Err(Error::invalid("pnet spec", "channel widths must be positive"));
        }
        if layout.widths[7] != 3 {
            return Err(Error::invalid(
                "pnet spec",
                format!("final layer must produce 3 logits, got {}", layout.widths[7]),
            ));
        }
        if let Some(k) = layout.kernels.iter().find(|k| *k % 2 == 0) {
            return Err(Error::invalid("pnet spec", format!("kernel sizes must be odd, got {k}")));
        }
        lrn.validate()?;
        let mut layers = Vec::new();
        let mut c = photo_channels + 3;
        for (i, (&w, &k)) in layout.widths.iter().zip(&layout.kernels).enumerate() {
            layers.push(conv(c, w, k, k / 2, i < 7));
            c = w;
            if i < 3 {
                layers.push(if i == 0 { LayerSpec::MaxPool } else { LayerSpec::MaxPoolStride1 });
                layers.push(LayerSpec::Lrn(lrn));
            }
        }
        Ok(NetworkSpec {
            architecture: Architecture::PNet,
            photo_channels,
            prior_channels: 3,
            use_prior: true,
            trunk: layers,
            branches: Vec::new(),
        })
    }

    pub fn default_bfcn() -> Self {
        Self::bfcn(BfcnWidths::default(), 1).expect("default BFCN spec is valid")
    }

    pub fn default_pnet() -> Self {
        Self::pnet(PNetLayout::default(), 1, LrnParams::default()).expect("default P-Net spec is valid")
    }

    /// Marks the prior channels as disabled (fed with zeros). Part of the
    /// spec hash so weights trained without the prior cannot be mixed up.
    pub fn with_prior(mut self, use_prior: bool) -> Self {
        self.use_prior = use_prior;
        self
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn photo_channels(&self) -> usize {
        self.photo_channels
    }

    pub fn prior_channels(&self) -> usize {
        self.prior_channels
    }

    pub fn input_channels(&self) -> usize {
        self.photo_channels + self.prior_channels
    }

    pub fn use_prior(&self) -> bool {
        self.use_prior
    }

    pub fn trunk(&self) -> &[LayerSpec] {
        &self.trunk
    }

    pub fn branches(&self) -> &[Vec<LayerSpec>] {
        &self.branches
    }

    pub fn branch(&self, b: Branch) -> &[LayerSpec] {
        &self.branches[b.index()]
    }

    /// All convolutions in weight order: trunk first, then each branch.
    pub fn conv_layers(&self) -> Vec<ConvSpec> {
        std::iter::once(&self.trunk)
            .chain(self.branches.iter())
            .flat_map(|stack| stack.iter())
            .filter_map(|l| match l {
                LayerSpec::Conv(c) => Some(*c),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn conv_count(layers: &[LayerSpec]) -> usize {
        layers.iter().filter(|l| matches!(l, LayerSpec::Conv(_))).count()
    }

    /// Range of weight indices belonging to the trunk.
    pub fn trunk_params(&self) -> std::ops::Range<usize> {
        0..Self::conv_count(&self.trunk)
    }

    /// Range of weight indices belonging to branch `b`.
    pub fn branch_params(&self, b: Branch) -> std::ops::Range<usize> {
        let mut start = Self::conv_count(&self.trunk);
        for stack in &self.branches[..b.index()] {
            start += Self::conv_count(stack);
        }
        start..start + Self::conv_count(&self.branches[b.index()])
    }

    /// Total spatial shrinkage of a valid-convolution path (trunk plus one
    /// branch); 12 for BFCN.
    pub fn shrinkage(&self) -> usize {
        let stack_shrink = |layers: &[LayerSpec]| -> usize {
            layers
                .iter()
                .map(|l| match l {
                    LayerSpec::Conv(c) => (c.kernel - 1) - 2 * c.pad,
                    _ => 0,
                })
                .sum()
        };
        stack_shrink(&self.trunk) + self.branches.first().map_or(0, |b| stack_shrink(b))
    }

    /// Stable 64-bit FNV-1a digest of the layer list and input layout.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(match self.architecture {
            Architecture::Bfcn => b"bfcn",
            Architecture::PNet => b"pnet",
        });
        h.write_u64(self.photo_channels as u64);
        h.write_u64(self.prior_channels as u64);
        h.write_u64(self.use_prior as u64);
        for stack in std::iter::once(&self.trunk).chain(self.branches.iter()) {
            h.write(b"|");
            for layer in stack {
                match layer {
                    LayerSpec::Conv(c) => {
                        h.write(b"c");
                        for v in [c.in_channels, c.out_channels, c.kernel, c.pad, c.relu as usize] {
                            h.write_u64(v as u64);
                        }
                    }
                    LayerSpec::MaxPool => h.write(b"p"),
                    LayerSpec::MaxPoolStride1 => h.write(b"q"),
                    LayerSpec::Lrn(p) => {
                        h.write(b"l");
                        h.write_u64(p.k.to_bits());
                        h.write_u64(p.n as u64);
                        h.write_u64(p.a.to_bits());
                        h.write_u64(p.b.to_bits());
                    }
                }
            }
        }
        h.finish()
    }
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfcn_kernels_and_shrinkage() {
        let spec = NetworkSpec::default_bfcn();
        let convs = spec.conv_layers();
        let kernels: Vec<usize> = convs.iter().map(|c| c.kernel).collect();
        assert_eq!(kernels, vec![5, 5, 1, 1, 3, 3, 1, 3, 3]);
        assert_eq!(spec.shrinkage(), 12);
        assert_eq!(spec.input_channels(), 2);
        assert_eq!(convs[5].out_channels, 1);
        assert_eq!(spec.branch_params(Branch::Textural), 6..9);
    }

    #[test]
    fn pnet_layout() {
        let spec = NetworkSpec::default_pnet();
        let convs = spec.conv_layers();
        assert_eq!(convs.len(), 8);
        assert_eq!(convs[7].out_channels, 3);
        assert!(!convs[7].relu);
        assert_eq!(spec.input_channels(), 4);
        let pools = spec.trunk().iter().filter(|l| matches!(l, LayerSpec::MaxPool | LayerSpec::MaxPoolStride1)).count();
        let lrns = spec.trunk().iter().filter(|l| matches!(l, LayerSpec::Lrn(_))).count();
        assert_eq!((pools, lrns), (3, 3));
    }

    #[test]
    fn hash_distinguishes_specs() {
        let a = NetworkSpec::default_bfcn();
        let b = NetworkSpec::bfcn(BfcnWidths::uniform(8), 1).unwrap();
        assert_eq!(a.hash(), NetworkSpec::default_bfcn().hash());
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.hash(), a.clone().with_prior(false).hash());
        assert_ne!(a.hash(), NetworkSpec::default_pnet().hash());
    }

    #[test]
    fn rejects_bad_widths() {
        let mut w = BfcnWidths::default();
        w.branch[2] = 2;
        assert!(NetworkSpec::bfcn(w, 1).is_err());
        assert!(NetworkSpec::bfcn(BfcnWidths::default(), 2).is_err());
        let mut l = PNetLayout::default();
        l.widths[7] = 4;
        assert!(NetworkSpec::pnet(l, 1, LrnParams::default()).is_err());
    }
}
