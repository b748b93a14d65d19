use crate::data::{DEFAULT_AUGMENT_RANGE, DEFAULT_PATCH_SIZE, DEFAULT_SSIM_THRESHOLD, DEFAULT_STRIDE};
use crate::error::{Error, Result};
use crate::network::INIT_STD;

/// The sketch network's rate as quoted for raw `0..=255` intensities.
///
/// Pixels here live in `[0, 1]`, which scales squared-error gradients by
/// `1 / 255^2`; the default rate multiplies that back in so the effective
/// step matches: `1e-10 * 255^2 = 6.5025e-6`.
pub const LR_BFCN_RAW_SCALE: f64 = 1e-10;

/// Hyperparameters shared by both training loops.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Weight of the textural term in `L_s + alpha * L_t`.
    pub alpha: f64,
    /// Weight of the sorted-matching term inside the textural loss.
    pub beta: f64,
    pub lr_bfcn: f64,
    pub lr_pnet: f64,
    pub epochs_bfcn: usize,
    pub epochs_pnet: usize,
    /// Patches per step for the sketch network, split evenly between face
    /// and hair; images per step for the parsing network.
    pub batch_size: usize,
    pub patch_size: usize,
    pub stride: usize,
    pub ssim_threshold: f64,
    pub augment_range: (f64, f64),
    pub seed: u64,
    /// Heavy-ball momentum; zero gives plain SGD.
    pub momentum: f64,
    pub init_std: f64,
    /// Multiplier on the structural term. Zero silences the face stream
    /// entirely, leaving structural-branch weights untouched.
    pub structural_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1.0,
            beta: 10.0,
            lr_bfcn: LR_BFCN_RAW_SCALE * 255.0 * 255.0,
            lr_pnet: 1e-3,
            epochs_bfcn: 150,
            epochs_pnet: 100,
            batch_size: 16,
            patch_size: DEFAULT_PATCH_SIZE,
            stride: DEFAULT_STRIDE,
            ssim_threshold: DEFAULT_SSIM_THRESHOLD,
            augment_range: DEFAULT_AUGMENT_RANGE,
            seed: 0,
            momentum: 0.0,
            init_std: INIT_STD,
            structural_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid("train config", msg));
        for (name, v) in [("lr_bfcn", self.lr_bfcn), ("lr_pnet", self.lr_pnet), ("init_std", self.init_std)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("structural_weight", self.structural_weight)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        for (name, v) in [
            ("epochs_bfcn", self.epochs_bfcn),
            ("epochs_pnet", self.epochs_pnet),
            ("batch_size", self.batch_size),
            ("patch_size", self.patch_size),
            ("stride", self.stride),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2 to hold a face and a hair patch".into());
        }
        let (lo, hi) = self.augment_range;
        if !(lo > 0.0 && lo <= hi && hi < 2.0) {
            return bad(format!("augment range ({lo}, {hi}) must lie inside (0, 2)"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(-1.0..=1.0).contains(&self.ssim_threshold) {
            return bad(format!("ssim_threshold must be in [-1, 1], got {}", self.ssim_threshold));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_rescaled() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert!((c.lr_bfcn - 6.5025e-6).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_values() {
        type Mutation = Box<dyn Fn(&mut TrainConfig)>;
        let cases: Vec<Mutation> = vec![
            Box::new(|c| c.lr_bfcn = 0.0),
            Box::new(|c| c.epochs_pnet = 0),
            Box::new(|c| c.augment_range = (0.5, 2.5)),
            Box::new(|c| c.augment_range = (1.0, 0.9)),
            Box::new(|c| c.alpha = -1.0),
            Box::new(|c| c.batch_size = 1),
            Box::new(|c| c.momentum = 1.0),
        ];
        for f in cases {
            let mut c = TrainConfig::default();
            f(&mut c);
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
