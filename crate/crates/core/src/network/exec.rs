//! Runs a layer list forward, optionally recording what the backward pass
//! needs, and replays it in reverse.

use super::spec::LayerSpec;
use crate::error::{Error, Result};
use crate::layers::{
    conv2d, conv2d_backward, lrn, lrn_backward, maxpool2x2, maxpool2x2_stride1, maxpool_backward, relu,
    relu_backward, ConvLayerParams, LrnOutput, LrnParams,
};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
enum Step {
    /// Input to the convolution after padding.
    Conv { padded: Tensor, pad: usize },
    Relu { input: Tensor },
    Pool { input: Tensor, argmax: Vec<usize> },
    Lrn { input: Tensor, fwd: LrnOutput, params: LrnParams },
}

/// Recorded activations of one forward pass through a layer list.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    steps: Vec<Step>,
}

/// Forward through `layers`, consuming `params` in order for each conv.
pub fn forward(layers: &[LayerSpec], params: &[ConvLayerParams], input: Tensor) -> Result<Tensor> {
    run(layers, params, input, None)
}

pub fn forward_traced(layers: &[LayerSpec], params: &[ConvLayerParams], input: Tensor) -> Result<(Tensor, Trace)> {
    let mut trace = Trace::default();
    let out = run(layers, params, input, Some(&mut trace))?;
    Ok((out, trace))
}

fn run(layers: &[LayerSpec], params: &[ConvLayerParams], mut x: Tensor, mut trace: Option<&mut Trace>) -> Result<Tensor> {
    let mut next_param = 0;
    for layer in layers {
        match layer {
            LayerSpec::Conv(spec) => {
                let p = params
                    .get(next_param)
                    .ok_or_else(|| Error::invalid("forward", "fewer weight layers than convolutions"))?;
                next_param += 1;
                let padded = x.pad_zero(spec.pad);
                let y = conv2d(&padded, p)?;
                if let Some(t) = trace.as_deref_mut() {
                    t.steps.push(Step::Conv { padded, pad: spec.pad });
                }
                x = y;
                if spec.relu {
                    let y = relu(&x);
                    if let Some(t) = trace.as_deref_mut() {
                        t.steps.push(Step::Relu { input: x });
                    }
                    x = y;
                }
            }
            LayerSpec::MaxPool | LayerSpec::MaxPoolStride1 => {
                let out = if matches!(layer, LayerSpec::MaxPool) {
                    maxpool2x2(&x)?
                } else {
                    maxpool2x2_stride1(&x)
                };
                if let Some(t) = trace.as_deref_mut() {
                    t.steps.push(Step::Pool { input: x, argmax: out.argmax });
                }
                x = out.output;
            }
            LayerSpec::Lrn(p) => {
                let fwd = lrn(&x, p)?;
                let y = fwd.output.clone();
                if let Some(t) = trace.as_deref_mut() {
                    t.steps.push(Step::Lrn { input: x, fwd, params: *p });
                }
                x = y;
            }
        }
    }
    if next_param != params.len() {
        return Err(Error::invalid(
            "forward",
            format!("{} weight layers for {} convolutions", params.len(), next_param),
        ));
    }
    Ok(x)
}

/// Replays `trace` backwards. Returns the input gradient and one gradient
/// per convolution, in forward order.
pub fn backward(trace: &Trace, params: &[ConvLayerParams], grad_out: Tensor) -> Result<(Tensor, Vec<ConvLayerParams>)> {
    let mut g = grad_out;
    let mut next_param = params.len();
    let mut grads = Vec::with_capacity(params.len());
    for step in trace.steps.iter().rev() {
        g = match step {
            Step::Conv { padded, pad } => {
                next_param = next_param
                    .checked_sub(1)
                    .ok_or_else(|| Error::invalid("backward", "trace has more convolutions than weights"))?;
                let (gi, gp) = conv2d_backward(padded, &params[next_param], &g)?;
                grads.push(gp);
                gi.unpad(*pad)
            }
            Step::Relu { input } => relu_backward(input, &g)?,
            Step::Pool { input, argmax } => maxpool_backward(input, argmax, &g)?,
            Step::Lrn { input, fwd, params } => lrn_backward(input, fwd, params, &g)?,
        };
    }
    if next_param != 0 {
        return Err(Error::invalid("backward", "trace has fewer convolutions than weights"));
    }
    grads.reverse();
    Ok((g, grads))
}
