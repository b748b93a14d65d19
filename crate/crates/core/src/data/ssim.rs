use crate::error::Result;
use crate::tensor::Tensor;

/// Stabilizers for unit dynamic range: `(0.01)^2` and `(0.03)^2`.
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Structural similarity from whole-image statistics (no sliding window).
pub fn ssim(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.check_same_shape(b, "ssim")?;
    let n = a.len() as f64;
    let mu_a = a.mean();
    let mu_b = b.mean();
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (dx, dy) = (x - mu_a, y - mu_b);
        var_a += dx * dx;
        var_b += dy * dy;
        cov += dx * dy;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    let num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2);
    let den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2);
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_similarity_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Tensor::from_fn(1, 8, 8, |_, _, _| rng.random_range(0.0..1.0));
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Tensor::from_fn(1, 8, 8, |_, _, _| rng.random_range(0.0..1.0));
        let b = Tensor::from_fn(1, 8, 8, |_, _, _| rng.random_range(0.0..1.0));
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
    }

    #[test]
    fn independent_noise_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = Tensor::from_fn(1, 32, 32, |_, _, _| rng.random_range(0.0..1.0));
            let b = Tensor::from_fn(1, 32, 32, |_, _, _| rng.random_range(0.0..1.0));
            let v = ssim(&a, &b).unwrap();
            assert!(v.abs() < 0.2, "ssim {v}");
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(ssim(&Tensor::zeros(1, 2, 2), &Tensor::zeros(1, 2, 3)).is_err());
    }
}
