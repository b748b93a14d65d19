//! Central-difference verification of analytic gradients.
//!
//! Each [`GradTarget`] builds a small random problem, flattens everything
//! differentiable into one vector and compares the hand-written gradient
//! against `(f(x + eps) - f(x - eps)) / (2 eps)` one coordinate at a time.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bfcn::{bfcn_batch_gradient, BfcnSample};
use super::config::TrainConfig;
use super::pnet::pnet_batch_gradient;
use crate::error::{Error, Result};
use crate::layers::{
    conv2d, conv2d_backward, lrn, lrn_backward, maxpool2x2, maxpool2x2_stride1, maxpool_backward, relu,
    relu_backward, ConvLayerParams, LrnParams,
};
use crate::losses::{mse, sm_mse, softmax_parsing_loss};
use crate::network::{init_weights_with_std, Bfcn, BfcnWidths, NetworkSpec, PNet, PNetLayout};
use crate::parsing::{LabelMap, Region};
use crate::tensor::Tensor;

/// Denominator floor for the relative error, so coordinates whose true
/// gradient is zero are judged by absolute error instead.
pub const RELATIVE_FLOOR: f64 = 1e-6;
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Worst coordinate found by [`gradient_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "max rel error {:.3e} at coordinate {} of {} (analytic {:.6e}, numeric {:.6e})",
            self.max_relative_error, self.worst_index, self.checked, self.analytic, self.numeric
        )
    }
}

/// Compares the gradient returned by `f` at `x` against central differences.
pub fn gradient_check<F>(mut f: F, x: &[f64], eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::invalid("gradient_check", format!("epsilon {eps} outside [1e-7, 1e-3]")));
    }
    let (_, grad) = f(x)?;
    if grad.len() != x.len() {
        return Err(Error::invalid(
            "gradient_check",
            format!("gradient has {} entries for {} inputs", grad.len(), x.len()),
        ));
    }
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        analytic: grad.first().copied().unwrap_or(0.0),
        numeric: 0.0,
        checked: x.len(),
    };
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let (plus, _) = f(&probe)?;
        probe[i] = x[i] - eps;
        let (minus, _) = f(&probe)?;
        probe[i] = x[i];
        let numeric = (plus - minus) / (2.0 * eps);
        let a = grad[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
        if rel > report.max_relative_error || i == 0 {
            report = GradCheckReport {
                max_relative_error: rel.max(report.max_relative_error),
                worst_index: i,
                analytic: a,
                numeric,
                checked: x.len(),
            };
        }
    }
    Ok(report)
}

/// The differentiable pieces covered by the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradTarget {
    Conv,
    Relu,
    Maxpool,
    Lrn,
    Mse,
    SmMse,
    Softmax,
    Bfcn,
    Pnet,
}

impl GradTarget {
    pub const ALL: [GradTarget; 9] = [
        GradTarget::Conv,
        GradTarget::Relu,
        GradTarget::Maxpool,
        GradTarget::Lrn,
        GradTarget::Mse,
        GradTarget::SmMse,
        GradTarget::Softmax,
        GradTarget::Bfcn,
        GradTarget::Pnet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GradTarget::Conv => "conv",
            GradTarget::Relu => "relu",
            GradTarget::Maxpool => "maxpool",
            GradTarget::Lrn => "lrn",
            GradTarget::Mse => "mse",
            GradTarget::SmMse => "smmse",
            GradTarget::Softmax => "softmax",
            GradTarget::Bfcn => "bfcn-tiny",
            GradTarget::Pnet => "pnet-tiny",
        }
    }

    pub fn from_name(name: &str) -> Option<GradTarget> {
        GradTarget::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Builds the target's problem from `seed` and checks it.
    pub fn run(self, seed: u64, eps: f64) -> Result<GradCheckReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            GradTarget::Conv => check_conv(&mut rng, eps),
            GradTarget::Relu => check_relu(&mut rng, eps),
            GradTarget::Maxpool => check_maxpool(&mut rng, eps),
            GradTarget::Lrn => check_lrn(&mut rng, eps),
            GradTarget::Mse => check_mse(&mut rng, eps),
            GradTarget::SmMse => check_sm_mse(&mut rng, eps),
            GradTarget::Softmax => check_softmax(&mut rng, eps),
            GradTarget::Bfcn => check_bfcn(&mut rng, eps),
            GradTarget::Pnet => check_pnet(&mut rng, eps),
        }
    }
}

impl fmt::Display for GradTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Gaussian kernels plus small positive biases, so that no unit sits
/// exactly on a ReLU kink the way zero-initialized biases would.
fn random_weights(spec: &NetworkSpec, rng: &mut ChaCha8Rng) -> crate::network::NetworkWeights {
    let mut w = init_weights_with_std(spec, rng.random(), 0.5);
    for layer in &mut w.layers {
        for b in &mut layer.bias {
            *b = rng.random_range(0.05..0.3);
        }
    }
    w
}

fn random(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(c, h, w, |_, _, _| rng.random_range(lo..hi))
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn with_data(like: &Tensor, data: &[f64]) -> Tensor {
    Tensor::new(like.channels(), like.height(), like.width(), data.to_vec()).expect("length matches")
}

/// Conv layer against `sum(conv(x) * r)`, over input and parameters.
fn check_conv(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    let input = random(rng, 2, 6, 5, -1.0, 1.0);
    let kernel: Vec<f64> = (0..3 * 2 * 3 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let bias: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let params = ConvLayerParams::new(3, 2, 3, 3, kernel, bias)?;
    let r = random(rng, 3, 4, 3, -1.0, 1.0);
    let n_in = input.len();
    let mut x = input.data().to_vec();
    x.extend(params.values().copied());
    gradient_check(
        |v| {
            let inp = with_data(&input, &v[..n_in]);
            let mut p = params.clone();
            for (dst, &s) in p.values_mut().zip(&v[n_in..]) {
                *dst = s;
            }
            let out = conv2d(&inp, &p)?;
            let (gi, gp) = conv2d_backward(&inp, &p, &r)?;
            let mut g = gi.into_data();
            g.extend(gp.values().copied());
            Ok((dot(&out, &r), g))
        },
        &x,
        eps,
    )
}

/// Inputs are kept at least 0.1 away from the kink.
fn check_relu(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    let input = Tensor::from_fn(2, 4, 4, |_, _, _| {
        let m = rng.random_range(0.1..1.0);
        if rng.random_bool(0.5) {
            m
        } else {
            -m
        }
    });
    let r = random(rng, 2, 4, 4, -1.0, 1.0);
    gradient_check(
        |v| {
            let x = with_data(&input, v);
            Ok((dot(&relu(&x), &r), relu_backward(&x, &r)?.into_data()))
        },
        input.data(),
        eps,
    )
}

/// Both pooling variants on a shuffled grid of distinct values, so no
/// window is ever close to a tie.
fn check_maxpool(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    use rand::seq::SliceRandom;
    let mut values: Vec<f64> = (0..2 * 6 * 6).map(|i| i as f64 / 72.0).collect();
    values.shuffle(rng);
    let input = Tensor::new(2, 6, 6, values)?;
    let r2 = random(rng, 2, 3, 3, -1.0, 1.0);
    let r1 = random(rng, 2, 6, 6, -1.0, 1.0);
    gradient_check(
        |v| {
            let x = with_data(&input, v);
            let a = maxpool2x2(&x)?;
            let b = maxpool2x2_stride1(&x);
            let mut g = maxpool_backward(&x, &a.argmax, &r2)?;
            g.add_scaled(&maxpool_backward(&x, &b.argmax, &r1)?, 1.0)?;
            Ok((dot(&a.output, &r2) + dot(&b.output, &r1), g.into_data()))
        },
        input.data(),
        eps,
    )
}

/// A large `a` so the cross-channel term actually contributes.
fn check_lrn(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    let params = LrnParams {
        k: 1.5,
        n: 3,
        a: 0.4,
        b: 0.75,
    };
    let input = random(rng, 5, 3, 3, -1.5, 1.5);
    let r = random(rng, 5, 3, 3, -1.0, 1.0);
    gradient_check(
        |v| {
            let x = with_data(&input, v);
            let fwd = lrn(&x, &params)?;
            let g = lrn_backward(&x, &fwd, &params, &r)?;
            Ok((dot(&fwd.output, &r), g.into_data()))
        },
        input.data(),
        eps,
    )
}

fn check_mse(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    let pred = random(rng, 1, 4, 4, 0.0, 1.0);
    let target = random(rng, 1, 4, 4, 0.0, 1.0);
    gradient_check(
        |v| {
            let l = mse(&with_data(&pred, v), &target)?;
            Ok((l.value, l.grad.into_data()))
        },
        pred.data(),
        eps,
    )
}

/// Prediction values are spread at least 1/32 apart so no perturbation
/// reorders them.
fn check_sm_mse(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    use rand::seq::SliceRandom;
    let mut values: Vec<f64> = (0..16).map(|i| (i as f64 + rng.random_range(0.25..0.75)) / 16.0).collect();
    values.shuffle(rng);
    let pred = Tensor::new(1, 4, 4, values)?;
    let target = random(rng, 1, 4, 4, 0.0, 1.0);
    gradient_check(
        |v| {
            let l = sm_mse(&with_data(&pred, v), &target)?;
            Ok((l.value, l.grad.into_data()))
        },
        pred.data(),
        eps,
    )
}

fn random_labels(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Result<LabelMap> {
    let labels = (0..h * w).map(|_| Region::ALL[rng.random_range(0..3)]).collect();
    LabelMap::new(h, w, labels)
}

fn check_softmax(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    let logits = random(rng, 3, 4, 4, -2.0, 2.0);
    let labels = random_labels(rng, 4, 4)?;
    gradient_check(
        |v| {
            let l = softmax_parsing_loss(&with_data(&logits, v), &labels)?;
            Ok((l.value, l.grad.into_data()))
        },
        logits.data(),
        eps,
    )
}

/// Width-2 sketch network on 16x16 inputs: one face and one hair sample
/// through the combined objective, checked over every parameter.
fn check_bfcn(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    let spec = NetworkSpec::bfcn(BfcnWidths::uniform(2), 1)?;
    let weights = random_weights(&spec, rng);
    let sample = |rng: &mut ChaCha8Rng| BfcnSample {
        input: random(rng, 2, 16, 16, 0.0, 1.0),
        target: random(rng, 1, 4, 4, 0.0, 1.0),
    };
    let face = sample(rng);
    let hair = sample(rng);
    let config = TrainConfig::default();
    let template = weights.clone();
    gradient_check(
        |v| {
            let mut w = template.clone();
            w.assign(v)?;
            let net = Bfcn::new(spec.clone(), w)?;
            let (loss, grads) = bfcn_batch_gradient(&net, &[&face], &[&hair], &config)?;
            Ok((loss.combined, grads.flatten()))
        },
        &weights.flatten(),
        eps,
    )
}

/// Width-2 parsing network on an 8x8 input, over every parameter.
fn check_pnet(rng: &mut ChaCha8Rng, eps: f64) -> Result<GradCheckReport> {
    let spec = NetworkSpec::pnet(PNetLayout::uniform(2), 1, LrnParams::default())?;
    let weights = random_weights(&spec, rng);
    let input = random(rng, 4, 8, 8, 0.0, 1.0);
    let labels = random_labels(rng, 4, 4)?;
    let template = weights.clone();
    gradient_check(
        |v| {
            let mut w = template.clone();
            w.assign(v)?;
            let net = PNet::new(spec.clone(), w)?;
            let (loss, grads) = pnet_batch_gradient(&net, &[(&input, &labels)])?;
            Ok((loss, grads.flatten()))
        },
        &weights.flatten(),
        eps,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let r = gradient_check(|v| Ok((v[0] * v[0] + 3.0 * v[1], vec![2.0 * v[0], 3.0])), &[1.5, -2.0], 1e-5).unwrap();
        assert!(r.max_relative_error < 1e-8, "{r}");
    }

    #[test]
    fn wrong_gradient_is_reported() {
        let r = gradient_check(|v| Ok((v[0] * v[0], vec![v[0]])), &[2.0], 1e-5).unwrap();
        assert!((r.max_relative_error - 0.5).abs() < 1e-6);
        assert_eq!(r.worst_index, 0);
    }

    #[test]
    fn epsilon_range_enforced() {
        assert!(gradient_check(|_| Ok((0.0, vec![0.0])), &[0.0], 1e-2).is_err());
    }

    #[test]
    fn names_round_trip() {
        for t in GradTarget::ALL {
            assert_eq!(GradTarget::from_name(t.name()), Some(t));
        }
        assert_eq!(GradTarget::from_name("nope"), None);
    }
}
