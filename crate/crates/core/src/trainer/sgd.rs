use crate::error::{Error, Result};
use crate::network::NetworkWeights;

/// `w <- w - lr * g` for every parameter.
pub fn sgd_step(weights: &mut NetworkWeights, grads: &NetworkWeights, lr: f64) -> Result<()> {
    if !weights.same_layout(grads) {
        return Err(Error::invalid("sgd_step", "gradient layout does not match the weights"));
    }
    weights.add_scaled(grads, -lr)
}

/// SGD with optional heavy-ball momentum: `v <- mu * v + g; w <- w - lr * v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    lr: f64,
    momentum: f64,
    velocity: Option<NetworkWeights>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Self {
        Sgd {
            lr,
            momentum,
            velocity: None,
        }
    }

    pub fn step(&mut self, weights: &mut NetworkWeights, grads: &NetworkWeights) -> Result<()> {
        if self.momentum == 0.0 {
            return sgd_step(weights, grads, self.lr);
        }
        let v = self.velocity.get_or_insert_with(|| grads.zeros_like());
        if !v.same_layout(grads) {
            return Err(Error::invalid("sgd_step", "gradient layout changed between steps"));
        }
        for (vl, gl) in v.layers.iter_mut().zip(&grads.layers) {
            for (vv, &g) in vl.values_mut().zip(gl.values()) {
                *vv = self.momentum * *vv + g;
            }
        }
        sgd_step(weights, v, self.lr)
    }
}
