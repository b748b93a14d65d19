use crate::error::{Error, Result, Shape};
use crate::tensor::Tensor;

/// Kernel and bias of one convolution layer.
///
/// The kernel is stored `out x in x kh x kw`, row-major. Convolutions are
/// always "valid": no implicit padding.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerParams {
    out_channels: usize,
    in_channels: usize,
    kh: usize,
    kw: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayerParams {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kh: usize,
        kw: usize,
        kernel: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 {
            return Err(Error::invalid("conv params", "channel counts must be positive"));
        }
        if kh.is_multiple_of(2) || kw.is_multiple_of(2) {
            return Err(Error::invalid(
                "conv params",
                format!("kernel size must be odd, got {kh}x{kw}"),
            ));
        }
        let expected = out_channels * in_channels * kh * kw;
        if kernel.len() != expected {
            return Err(Error::invalid(
                "conv params",
                format!(
                    "kernel holds {} values, {out_channels}x{in_channels}x{kh}x{kw} needs {expected}",
                    kernel.len()
                ),
            ));
        }
        if bias.len() != out_channels {
            return Err(Error::invalid(
                "conv params",
                format!("bias holds {} values for {out_channels} outputs", bias.len()),
            ));
        }
        Ok(ConvLayerParams {
            out_channels,
            in_channels,
            kh,
            kw,
            kernel,
            bias,
        })
    }

    pub fn zeros(out_channels: usize, in_channels: usize, kh: usize, kw: usize) -> Self {
        Self::new(
            out_channels,
            in_channels,
            kh,
            kw,
            vec![0.0; out_channels * in_channels * kh * kw],
            vec![0.0; out_channels],
        )
        .expect("invalid conv dimensions")
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kh, self.kw)
    }

    /// `(out, in, kh, kw)`
    pub fn dims(&self) -> [usize; 4] {
        [self.out_channels, self.in_channels, self.kh, self.kw]
    }

    pub fn same_dims(&self, other: &ConvLayerParams) -> bool {
        self.dims() == other.dims()
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.kernel[((o * self.in_channels + i) * self.kh + ky) * self.kw + kx]
    }

    pub fn param_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    /// Iterates kernel then bias.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.kernel.iter().chain(self.bias.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.kernel.iter_mut().chain(self.bias.iter_mut())
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.channels != self.in_channels {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                left: input,
                right: Shape::new(self.in_channels, self.kh, self.kw),
            });
        }
        if input.height < self.kh || input.width < self.kw {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                left: input,
                right: Shape::new(self.in_channels, self.kh, self.kw),
            });
        }
        Ok(Shape::new(
            self.out_channels,
            input.height - self.kh + 1,
            input.width - self.kw + 1,
        ))
    }
}

/// Valid 2-D cross-correlation: `out[o] = bias[o] + sum_i kernel[o,i] * input[i]`.
///
/// Output spatial size is `input - kernel + 1` along each axis.
pub fn conv2d(input: &Tensor, params: &ConvLayerParams) -> Result<Tensor> {
    let out_shape = params.output_shape(input.shape())?;
    let (oh, ow) = (out_shape.height, out_shape.width);
    let iw = input.width();
    let mut out = Tensor::zeros(out_shape.channels, oh, ow);
    for o in 0..params.out_channels {
        let plane = out.plane_mut(o);
        plane.fill(params.bias[o]);
        for i in 0..params.in_channels {
            let src = input.plane(i);
            for ky in 0..params.kh {
                for kx in 0..params.kw {
                    let w = params.weight(o, i, ky, kx);
                    if w == 0.0 {
                        continue;
                    }
                    for y in 0..oh {
                        let row = &src[(y + ky) * iw + kx..(y + ky) * iw + kx + ow];
                        let dst = &mut plane[y * ow..(y + 1) * ow];
                        for (d, &s) in dst.iter_mut().zip(row) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Backward pass of [`conv2d`]. Returns the gradient with respect to the
/// input and a parameter-shaped gradient for kernel and bias.
pub fn conv2d_backward(
    input: &Tensor,
    params: &ConvLayerParams,
    grad_out: &Tensor,
) -> Result<(Tensor, ConvLayerParams)> {
    let out_shape = params.output_shape(input.shape())?;
    if grad_out.shape() != out_shape {
        return Err(Error::ShapeMismatch {
            op: "conv2d_backward",
            left: grad_out.shape(),
            right: out_shape,
        });
    }
    let (oh, ow) = (out_shape.height, out_shape.width);
    let iw = input.width();
    let mut grad_in = Tensor::zeros(input.channels(), input.height(), iw);
    let mut grads = ConvLayerParams::zeros(params.out_channels, params.in_channels, params.kh, params.kw);

    for o in 0..params.out_channels {
        let g = grad_out.plane(o);
        grads.bias[o] = g.iter().sum();
        for i in 0..params.in_channels {
            let src = input.plane(i);
            for ky in 0..params.kh {
                for kx in 0..params.kw {
                    let mut acc = 0.0;
                    for y in 0..oh {
                        let row = &src[(y + ky) * iw + kx..(y + ky) * iw + kx + ow];
                        let grow = &g[y * ow..(y + 1) * ow];
                        acc += row.iter().zip(grow).map(|(a, b)| a * b).sum::<f64>();
                    }
                    grads.kernel[((o * params.in_channels + i) * params.kh + ky) * params.kw + kx] = acc;
                }
            }
        }
    }

    for i in 0..params.in_channels {
        let dst = grad_in.plane_mut(i);
        for o in 0..params.out_channels {
            let g = grad_out.plane(o);
            for ky in 0..params.kh {
                for kx in 0..params.kw {
                    let w = params.weight(o, i, ky, kx);
                    if w == 0.0 {
                        continue;
                    }
                    for y in 0..oh {
                        let row = &mut dst[(y + ky) * iw + kx..(y + ky) * iw + kx + ow];
                        let grow = &g[y * ow..(y + 1) * ow];
                        for (d, &s) in row.iter_mut().zip(grow) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
    }
    Ok((grad_in, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng, o: usize, i: usize, k: usize) -> ConvLayerParams {
        let kernel = (0..o * i * k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias = (0..o).map(|_| rng.random_range(-1.0..1.0)).collect();
        ConvLayerParams::new(o, i, k, k, kernel, bias).unwrap()
    }

    // Straight quadruple loop over the definition.
    fn naive_conv(input: &Tensor, p: &ConvLayerParams) -> Tensor {
        let (kh, kw) = p.kernel_size();
        let oh = input.height() - kh + 1;
        let ow = input.width() - kw + 1;
        Tensor::from_fn(p.out_channels(), oh, ow, |o, y, x| {
            let mut s = p.bias[o];
            for i in 0..p.in_channels() {
                for ky in 0..kh {
                    for kx in 0..kw {
                        s += p.weight(o, i, ky, kx) * input.get(i, y + ky, x + kx);
                    }
                }
            }
            s
        })
    }

    #[test]
    fn identity_kernel() {
        let input = Tensor::filled(1, 1, 1, 3.0);
        let p = ConvLayerParams::new(1, 1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        assert_eq!(conv2d(&input, &p).unwrap().data(), &[3.0]);
    }

    #[test]
    fn sum_of_ones() {
        let input = Tensor::filled(1, 3, 3, 1.0);
        let p = ConvLayerParams::new(1, 1, 3, 3, vec![1.0; 9], vec![0.0]).unwrap();
        let out = conv2d(&input, &p).unwrap();
        assert_eq!(out.shape(), Shape::new(1, 1, 1));
        assert_eq!(out.data(), &[9.0]);
    }

    #[test]
    fn matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let input = Tensor::from_fn(2, 5, 5, |_, _, _| rng.random_range(-1.0..1.0));
        let p = random_params(&mut rng, 3, 2, 3);
        let fast = conv2d(&input, &p).unwrap();
        let slow = naive_conv(&input, &p);
        assert_eq!(fast.shape(), Shape::new(3, 3, 3));
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_channel_mismatch() {
        let input = Tensor::zeros(3, 5, 5);
        let p = ConvLayerParams::zeros(1, 2, 3, 3);
        let err = conv2d(&input, &p).unwrap_err().to_string();
        assert!(err.contains("3x5x5"), "{err}");
        assert!(err.contains("2x3x3"), "{err}");
    }

    #[test]
    fn rejects_input_smaller_than_kernel() {
        let input = Tensor::zeros(1, 2, 5);
        let p = ConvLayerParams::zeros(1, 1, 3, 3);
        assert!(conv2d(&input, &p).is_err());
    }

    #[test]
    fn rejects_even_kernel() {
        assert!(ConvLayerParams::new(1, 1, 2, 2, vec![0.0; 4], vec![0.0]).is_err());
    }

    #[test]
    fn backward_matches_naive_adjoint() {
        // <conv(x), g> is linear in x and in the kernel, so the adjoint can be
        // read off by probing with unit vectors.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let input = Tensor::from_fn(2, 4, 5, |_, _, _| rng.random_range(-1.0..1.0));
        let p = random_params(&mut rng, 2, 2, 3);
        let g = Tensor::from_fn(2, 2, 3, |_, _, _| rng.random_range(-1.0..1.0));
        let (gi, gp) = conv2d_backward(&input, &p, &g).unwrap();
        let dot = |a: &Tensor, b: &Tensor| a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum::<f64>();
        let mut zero_bias = p.clone();
        zero_bias.bias.iter_mut().for_each(|b| *b = 0.0);
        for k in 0..input.len() {
            let mut e = Tensor::zeros(2, 4, 5);
            e.data_mut()[k] = 1.0;
            let expect = dot(&naive_conv(&e, &zero_bias), &g);
            assert!((gi.data()[k] - expect).abs() < 1e-12);
        }
        for k in 0..p.kernel.len() {
            let mut q = ConvLayerParams::zeros(2, 2, 3, 3);
            q.kernel[k] = 1.0;
            let expect = dot(&naive_conv(&input, &q), &g);
            assert!((gp.kernel[k] - expect).abs() < 1e-12);
        }
        for o in 0..2 {
            assert!((gp.bias[o] - g.plane(o).iter().sum::<f64>()).abs() < 1e-12);
        }
    }
}
