//! Lighting augmentation by scaling the HSV value channel.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Range the value-channel factor is drawn from.
pub const DEFAULT_AUGMENT_RANGE: (f64, f64) = (0.625, 1.125);

/// Hexcone RGB -> HSV. Hue is in `[0, 6)` sextants, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let hue = if chroma == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        (b - r) / chroma + 2.0
    } else {
        (r - g) / chroma + 4.0
    };
    let sat = if max == 0.0 { 0.0 } else { chroma / max };
    (hue, sat, max)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let x = c * (1.0 - ((h.rem_euclid(2.0)) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    (r + m, g + m, b + m)
}

/// Multiplies V by `factor` (clamped to `[0, 1]`) and converts back.
/// Single-channel input is treated as gray, where V is the intensity itself.
pub fn hsv_value_augment(photo: &Tensor, factor: f64) -> Result<Tensor> {
    if !(factor >= 0.0) {
        return Err(Error::invalid("hsv_value_augment", format!("factor must be non-negative, got {factor}")));
    }
    match photo.channels() {
        1 => Ok(photo.map(|v| (v * factor).clamp(0.0, 1.0))),
        3 => {
            let plane = photo.height() * photo.width();
            let mut out = photo.clone();
            let d = out.data_mut();
            for p in 0..plane {
                let (h, s, v) = rgb_to_hsv(d[p], d[plane + p], d[2 * plane + p]);
                let (r, g, b) = hsv_to_rgb(h, s, (v * factor).clamp(0.0, 1.0));
                d[p] = r;
                d[plane + p] = g;
                d[2 * plane + p] = b;
            }
            Ok(out)
        }
        _ => Err(Error::invalid("hsv_value_augment", format!("expected 1 or 3 channels, got {}", photo.shape()))),
    }
}

/// Draws a factor uniformly from `range` and applies it. Returns the factor used.
pub fn hsv_value_augment_random(photo: &Tensor, range: (f64, f64), rng: &mut impl Rng) -> Result<(Tensor, f64)> {
    if !(range.0 > 0.0 && range.0 <= range.1) {
        return Err(Error::invalid("hsv_value_augment", format!("bad factor range {range:?}")));
    }
    let factor = if range.0 == range.1 { range.0 } else { rng.random_range(range.0..range.1) };
    Ok((hsv_value_augment(photo, factor)?, factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_rgb(seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(3, 6, 5, |_, _, _| rng.random_range(0.0..1.0))
    }

    #[test]
    fn unit_factor_round_trips() {
        let img = random_rgb(1);
        let out = hsv_value_augment(&img, 1.0).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn white_becomes_gray() {
        let out = hsv_value_augment(&Tensor::filled(3, 2, 2, 1.0), 0.625).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.625).abs() < 1e-12));
    }

    #[test]
    fn hue_is_preserved() {
        let img = random_rgb(2);
        let out = hsv_value_augment(&img, 0.8).unwrap();
        let plane = 30;
        for p in 0..plane {
            let (h0, _, _) = rgb_to_hsv(img.data()[p], img.data()[plane + p], img.data()[2 * plane + p]);
            let (h1, _, _) = rgb_to_hsv(out.data()[p], out.data()[plane + p], out.data()[2 * plane + p]);
            assert!((h0 - h1).abs() < 1e-6, "pixel {p}: {h0} vs {h1}");
        }
    }

    #[test]
    fn random_factor_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (_, f) = hsv_value_augment_random(&random_rgb(4), DEFAULT_AUGMENT_RANGE, &mut rng).unwrap();
            assert!((0.625..1.125).contains(&f));
        }
    }

    #[test]
    fn hsv_round_trip() {
        for &(r, g, b) in &[(0.2, 0.5, 0.9), (0.9, 0.1, 0.4), (0.3, 0.3, 0.3), (1.0, 1.0, 0.0)] {
            let (h, s, v) = rgb_to_hsv(r, g, b);
            let (r2, g2, b2) = hsv_to_rgb(h, s, v);
            assert!((r - r2).abs() < 1e-12 && (g - g2).abs() < 1e-12 && (b - b2).abs() < 1e-12);
        }
    }
}
