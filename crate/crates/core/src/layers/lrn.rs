use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Cross-channel local response normalization constants.
///
/// `y_c = x_c / (k + a * sum_{j in window(c)} x_j^2)^b`, with the window of
/// `n` adjacent channels clamped at the channel borders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrnParams {
    pub k: f64,
    pub n: usize,
    pub a: f64,
    pub b: f64,
}

impl Default for LrnParams {
    fn default() -> Self {
        LrnParams {
            k: 2.0,
            n: 5,
            a: 1e-4,
            b: 0.75,
        }
    }
}

impl LrnParams {
    pub fn validate(&self) -> Result<()> {
        if self.n.is_multiple_of(2) {
            return Err(Error::invalid("lrn", format!("window size must be odd, got {}", self.n)));
        }
        if self.k <= 0.0 {
            return Err(Error::invalid("lrn", format!("k must be positive, got {}", self.k)));
        }
        Ok(())
    }

    fn window(&self, c: usize, channels: usize) -> std::ops::Range<usize> {
        let half = self.n / 2;
        c.saturating_sub(half)..(c + half + 1).min(channels)
    }
}

/// Forward result; `scale` holds the per-element denominator base
/// `k + a * sum x^2`, needed by the backward pass.
#[derive(Debug, Clone)]
pub struct LrnOutput {
    pub output: Tensor,
    pub scale: Tensor,
}

pub fn lrn(input: &Tensor, params: &LrnParams) -> Result<LrnOutput> {
    params.validate()?;
    let channels = input.channels();
    let plane = input.height() * input.width();
    let mut scale = Tensor::filled(channels, input.height(), input.width(), params.k);
    for c in 0..channels {
        let dst = scale.plane_mut(c);
        for j in params.window(c, channels) {
            let src = input.plane(j);
            for (s, &x) in dst.iter_mut().zip(src) {
                *s += params.a * x * x;
            }
        }
    }
    let mut output = input.clone();
    for i in 0..channels * plane {
        output.data_mut()[i] *= scale.data()[i].powf(-params.b);
    }
    Ok(LrnOutput { output, scale })
}

pub fn lrn_backward(input: &Tensor, fwd: &LrnOutput, params: &LrnParams, grad_out: &Tensor) -> Result<Tensor> {
    input.check_same_shape(grad_out, "lrn_backward")?;
    let channels = input.channels();
    // t_c = g_c * x_c * s_c^(-b-1)
    let t: Vec<f64> = grad_out
        .data()
        .iter()
        .zip(input.data())
        .zip(fwd.scale.data())
        .map(|((&g, &x), &s)| g * x * s.powf(-params.b - 1.0))
        .collect();
    let plane = input.height() * input.width();
    let mut grad_in = Tensor::zeros(channels, input.height(), input.width());
    for j in 0..channels {
        let x = input.plane(j);
        let s = fwd.scale.plane(j);
        let g = grad_out.plane(j);
        let dst = grad_in.plane_mut(j);
        for p in 0..plane {
            dst[p] = g[p] * s[p].powf(-params.b);
        }
        // The window is symmetric: j lies in window(c) iff c lies in window(j).
        for c in params.window(j, channels) {
            let tc = &t[c * plane..(c + 1) * plane];
            for p in 0..plane {
                dst[p] -= 2.0 * params.a * params.b * x[p] * tc[p];
            }
        }
    }
    Ok(grad_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_alpha_divides_by_k_pow_b() {
        let t = Tensor::from_fn(3, 2, 2, |c, y, x| (c + y + x) as f64 - 1.5);
        let p = LrnParams { a: 0.0, ..LrnParams::default() };
        let out = lrn(&t, &p).unwrap().output;
        for (o, i) in out.data().iter().zip(t.data()) {
            assert!((o - i / 2f64.powf(0.75)).abs() < 1e-15);
        }
    }

    #[test]
    fn single_channel_closed_form() {
        let t = Tensor::new(1, 1, 4, vec![-2.0, -0.5, 0.0, 3.0]).unwrap();
        let p = LrnParams { k: 1.0, n: 1, a: 1.0, b: 0.5 };
        let out = lrn(&t, &p).unwrap().output;
        for (o, &x) in out.data().iter().zip(t.data()) {
            assert!((o - x / (1.0 + x * x).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_per_pixel_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = Tensor::from_fn(3, 3, 4, |_, _, _| rng.random_range(-2.0..2.0));
        let p = LrnParams { k: 1.5, n: 3, a: 0.3, b: 0.6 };
        let out = lrn(&t, &p).unwrap().output;
        for c in 0..3usize {
            for y in 0..3 {
                for x in 0..4 {
                    let lo = c.saturating_sub(1);
                    let hi = (c + 1).min(2);
                    let mut sum = 0.0;
                    for j in lo..=hi {
                        sum += t.get(j, y, x).powi(2);
                    }
                    let expect = t.get(c, y, x) / (p.k + p.a * sum).powf(p.b);
                    assert!((out.get(c, y, x) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_even_window_and_nonpositive_k() {
        let t = Tensor::zeros(2, 2, 2);
        assert!(lrn(&t, &LrnParams { n: 4, ..LrnParams::default() }).is_err());
        assert!(lrn(&t, &LrnParams { k: 0.0, ..LrnParams::default() }).is_err());
    }
}
