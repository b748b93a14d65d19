use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Max-pooling output plus the flat input index each output value came from.
#[derive(Debug, Clone)]
pub struct PoolOutput {
    pub output: Tensor,
    pub argmax: Vec<usize>,
}

/// Finds the maximum over a window given in row-major order; the earliest
/// position wins ties.
#[inline]
fn window_max(input: &Tensor, positions: impl Iterator<Item = usize>) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for idx in positions {
        let v = input.data()[idx];
        if best.1 == usize::MAX || v > best.0 {
            best = (v, idx);
        }
    }
    best
}

/// Non-overlapping 2x2 max pooling with stride 2.
pub fn maxpool2x2(input: &Tensor) -> Result<PoolOutput> {
    let (h, w) = (input.height(), input.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::invalid(
            "maxpool2x2",
            format!("spatial dims must be even, got {}", input.shape()),
        ));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut output = Tensor::zeros(input.channels(), oh, ow);
    let mut argmax = Vec::with_capacity(output.len());
    for c in 0..input.channels() {
        for y in 0..oh {
            for x in 0..ow {
                let base = input.index(c, 2 * y, 2 * x);
                let (v, idx) = window_max(input, [base, base + 1, base + w, base + w + 1].into_iter());
                output.set(c, y, x, v);
                argmax.push(idx);
            }
        }
    }
    Ok(PoolOutput { output, argmax })
}

/// 2x2 max pooling with stride 1. Windows are clipped at the bottom and right
/// borders, so the output keeps the input size.
pub fn maxpool2x2_stride1(input: &Tensor) -> PoolOutput {
    let (h, w) = (input.height(), input.width());
    let mut output = Tensor::zeros(input.channels(), h, w);
    let mut argmax = Vec::with_capacity(output.len());
    for c in 0..input.channels() {
        for y in 0..h {
            for x in 0..w {
                let base = input.index(c, y, x);
                let right = x + 1 < w;
                let down = y + 1 < h;
                let positions = [
                    Some(base),
                    right.then_some(base + 1),
                    down.then_some(base + w),
                    (right && down).then_some(base + w + 1),
                ];
                let (v, idx) = window_max(input, positions.into_iter().flatten());
                output.set(c, y, x, v);
                argmax.push(idx);
            }
        }
    }
    PoolOutput { output, argmax }
}

/// Routes each output gradient to the input position that produced the max.
pub fn maxpool_backward(input_shape: &Tensor, argmax: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    if argmax.len() != grad_out.len() {
        return Err(Error::invalid(
            "maxpool_backward",
            format!("{} routes for gradient of {}", argmax.len(), grad_out.shape()),
        ));
    }
    let mut grad_in = Tensor::zeros(input_shape.channels(), input_shape.height(), input_shape.width());
    let dst = grad_in.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        dst[idx] += g;
    }
    Ok(grad_in)
}
