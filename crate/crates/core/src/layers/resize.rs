use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Bilinear resampling with corner-aligned sample positions: output corners
/// map exactly onto input corners.
pub fn bilinear_resize(input: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid(
            "bilinear_resize",
            format!("target size must be positive, got {out_h}x{out_w}"),
        ));
    }
    let (h, w) = (input.height(), input.width());
    if (out_h, out_w) == (h, w) {
        return Ok(input.clone());
    }
    let ys: Vec<(usize, usize, f64)> = (0..out_h).map(|y| sample_coord(y, out_h, h)).collect();
    let xs: Vec<(usize, usize, f64)> = (0..out_w).map(|x| sample_coord(x, out_w, w)).collect();
    Ok(Tensor::from_fn(input.channels(), out_h, out_w, |c, y, x| {
        let (y0, y1, fy) = ys[y];
        let (x0, x1, fx) = xs[x];
        let top = input.get(c, y0, x0) * (1.0 - fx) + input.get(c, y0, x1) * fx;
        let bottom = input.get(c, y1, x0) * (1.0 - fx) + input.get(c, y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    }))
}

fn sample_coord(i: usize, out_len: usize, in_len: usize) -> (usize, usize, f64) {
    if out_len == 1 || in_len == 1 {
        return (0, 0, 0.0);
    }
    let pos = i as f64 * (in_len - 1) as f64 / (out_len - 1) as f64;
    let lo = (pos.floor() as usize).min(in_len - 1);
    let hi = (lo + 1).min(in_len - 1);
    (lo, hi, pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_shape_is_identity() {
        let t = Tensor::from_fn(2, 3, 4, |c, y, x| (c * 12 + y * 4 + x) as f64 * 0.1);
        assert_eq!(bilinear_resize(&t, 3, 4).unwrap(), t);
    }

    #[test]
    fn constant_stays_constant() {
        let t = Tensor::filled(1, 5, 7, 0.3);
        let r = bilinear_resize(&t, 11, 2).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn ramp_midpoints_are_means() {
        let t = Tensor::new(1, 2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let r = bilinear_resize(&t, 3, 3).unwrap();
        let expect = [0.0, 0.5, 1.0, 1.0, 1.5, 2.0, 2.0, 2.5, 3.0];
        for (a, b) in r.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_target_rejected() {
        assert!(bilinear_resize(&Tensor::zeros(1, 2, 2), 0, 3).is_err());
    }
}
