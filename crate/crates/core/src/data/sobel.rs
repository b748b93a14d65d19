use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Sobel gradient magnitude `sqrt(gx^2 + gy^2)` with replicated borders.
/// The output has the input's size.
pub fn sobel_edges(img: &Tensor) -> Result<Tensor> {
    if img.channels() != 1 {
        return Err(Error::invalid("sobel_edges", format!("expected one channel, got {}", img.shape())));
    }
    let (h, w) = (img.height(), img.width());
    if h < 3 || w < 3 {
        return Err(Error::invalid("sobel_edges", format!("image {} is smaller than 3x3", img.shape())));
    }
    let at = |y: isize, x: isize| {
        let yy = y.clamp(0, h as isize - 1) as usize;
        let xx = x.clamp(0, w as isize - 1) as usize;
        img.get(0, yy, xx)
    };
    Ok(Tensor::from_fn(1, h, w, |_, y, x| {
        let (y, x) = (y as isize, x as isize);
        // Paired differences keep flat regions at exactly zero.
        let gx = (at(y - 1, x + 1) - at(y - 1, x - 1))
            + 2.0 * (at(y, x + 1) - at(y, x - 1))
            + (at(y + 1, x + 1) - at(y + 1, x - 1));
        let gy = (at(y + 1, x - 1) - at(y - 1, x - 1))
            + 2.0 * (at(y + 1, x) - at(y - 1, x))
            + (at(y + 1, x + 1) - at(y - 1, x + 1));
        (gx * gx + gy * gy).sqrt()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_has_no_edges() {
        let e = sobel_edges(&Tensor::filled(1, 5, 6, 0.4)).unwrap();
        assert!(e.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_step_responds_four_h() {
        let h = 0.7;
        let img = Tensor::from_fn(1, 6, 8, |_, _, x| if x >= 4 { h } else { 0.0 });
        let e = sobel_edges(&img).unwrap();
        for y in 0..6 {
            assert!((e.get(0, y, 3) - 4.0 * h).abs() < 1e-12);
            assert!((e.get(0, y, 4) - 4.0 * h).abs() < 1e-12);
            assert_eq!(e.get(0, y, 1), 0.0);
            assert_eq!(e.get(0, y, 6), 0.0);
        }
    }

    #[test]
    fn rotation_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let img = Tensor::from_fn(1, 7, 5, |_, _, _| rng.random_range(0.0..1.0));
        let a = sobel_edges(&img.rot90()).unwrap();
        let b = sobel_edges(&img).unwrap().rot90();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_tiny_or_multichannel() {
        assert!(sobel_edges(&Tensor::zeros(1, 2, 5)).is_err());
        assert!(sobel_edges(&Tensor::zeros(3, 5, 5)).is_err());
    }
}
