//! Optional TOML configuration. Every key is optional; anything not given
//! keeps the library default, and command-line flags override the file.
//!
//! ```toml
//! [train]
//! alpha = 1.0
//! beta = 10.0
//! lr_bfcn = 6.5025e-6
//! lr_pnet = 1e-3
//! epochs_bfcn = 150
//! epochs_pnet = 100
//! batch_size = 16
//! momentum = 0.0
//! init_std = 0.01
//! seed = 0
//!
//! [data]
//! patch_size = 32
//! stride = 16
//! ssim_threshold = 0.6
//! augment_range = [0.625, 1.125]
//! color = false
//!
//! [network]
//! bfcn_trunk = [32, 32, 32]
//! bfcn_branch = [16, 16, 1]
//! pnet_widths = [16, 16, 32, 32, 32, 64, 64, 3]
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sketch_core::layers::LrnParams;
use sketch_core::network::{BfcnWidths, NetworkSpec, PNetLayout};
use sketch_core::trainer::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub train: TrainSection,
    pub data: DataSection,
    pub network: NetworkSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lr_bfcn: Option<f64>,
    pub lr_pnet: Option<f64>,
    pub epochs_bfcn: Option<usize>,
    pub epochs_pnet: Option<usize>,
    pub batch_size: Option<usize>,
    pub momentum: Option<f64>,
    pub init_std: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub patch_size: Option<usize>,
    pub stride: Option<usize>,
    pub ssim_threshold: Option<f64>,
    pub augment_range: Option<[f64; 2]>,
    /// Keep RGB photos instead of converting to luminance.
    pub color: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub bfcn_trunk: Option<[usize; 3]>,
    pub bfcn_branch: Option<[usize; 3]>,
    pub pnet_widths: Option<[usize; 8]>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut c = TrainConfig::default();
        let t = &self.train;
        let d = &self.data;
        macro_rules! take {
            ($src:expr => $($field:ident),*) => {
                $(if let Some(v) = $src.$field { c.$field = v; })*
            };
        }
        take!(t => alpha, beta, lr_bfcn, lr_pnet, epochs_bfcn, epochs_pnet, batch_size, momentum, init_std, seed);
        take!(d => patch_size, stride, ssim_threshold);
        if let Some([lo, hi]) = d.augment_range {
            c.augment_range = (lo, hi);
        }
        c
    }

    pub fn photo_channels(&self) -> usize {
        if self.data.color.unwrap_or(false) {
            3
        } else {
            1
        }
    }

    pub fn bfcn_spec(&self, photo_channels: usize, use_prior: bool) -> Result<NetworkSpec> {
        let mut widths = BfcnWidths::default();
        if let Some(t) = self.network.bfcn_trunk {
            widths.trunk = t;
        }
        if let Some(b) = self.network.bfcn_branch {
            widths.branch = b;
        }
        Ok(NetworkSpec::bfcn(widths, photo_channels)?.with_prior(use_prior))
    }

    pub fn pnet_spec(&self, photo_channels: usize) -> Result<NetworkSpec> {
        let mut layout = PNetLayout::default();
        if let Some(w) = self.network.pnet_widths {
            layout.widths = w;
        }
        Ok(NetworkSpec::pnet(layout, photo_channels, LrnParams::default())?)
    }
}

/// Facts about a prepared dataset that later commands need, written next to
/// the archives as `dataset.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInfo {
    pub photo_channels: usize,
    /// Size of the source images, rows then columns.
    pub image_size: [usize; 2],
    /// Training frame inside the source images.
    pub frame_offset: [usize; 2],
    pub frame_size: [usize; 2],
    pub entries: usize,
    pub labelled_entries: usize,
}

impl DatasetInfo {
    pub const FILE: &'static str = "dataset.toml";

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(Self::FILE);
        std::fs::write(&path, toml::to_string(self)?).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: FileConfig = toml::from_str("").unwrap();
        assert_eq!(c.train_config(), TrainConfig::default());
        assert_eq!(c.photo_channels(), 1);
    }

    #[test]
    fn sections_override_defaults() {
        let c: FileConfig = toml::from_str(
            "[train]\nalpha = 0.5\nseed = 9\n[data]\nstride = 8\naugment_range = [0.7, 1.0]\ncolor = true\n[network]\nbfcn_trunk = [4, 4, 4]\n",
        )
        .unwrap();
        let t = c.train_config();
        assert_eq!((t.alpha, t.seed, t.stride, t.augment_range), (0.5, 9, 8, (0.7, 1.0)));
        assert_eq!(c.photo_channels(), 3);
        assert_eq!(c.bfcn_spec(3, true).unwrap().conv_layers()[0].out_channels, 4);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("[train]\nalpah = 1.0\n").is_err());
        assert!(toml::from_str::<FileConfig>("[extra]\n").is_err());
    }
}
