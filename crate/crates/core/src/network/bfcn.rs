use super::exec::{self, Trace};
use super::spec::{Architecture, Branch, NetworkSpec};
use super::weights::NetworkWeights;
use crate::error::{Error, Result};
use crate::layers::ConvLayerParams;
use crate::tensor::Tensor;

/// Structural and textural sketch maps, each single-channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BfcnOutput {
    pub structural: Tensor,
    pub textural: Tensor,
}

/// The branched fully convolutional network: spec plus matching weights.
#[derive(Debug, Clone)]
pub struct Bfcn {
    spec: NetworkSpec,
    weights: NetworkWeights,
}

/// Activations of one trunk+branch pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct BranchTrace {
    branch: Branch,
    trunk: Trace,
    head: Trace,
}

impl BranchTrace {
    pub fn branch(&self) -> Branch {
        self.branch
    }
}

impl Bfcn {
    pub fn new(spec: NetworkSpec, weights: NetworkWeights) -> Result<Self> {
        if spec.architecture() != Architecture::Bfcn {
            return Err(Error::invalid("bfcn", "spec does not describe a branched network"));
        }
        weights.check_matches(&spec)?;
        Ok(Bfcn { spec, weights })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn weights(&self) -> &NetworkWeights {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut NetworkWeights {
        &mut self.weights
    }

    pub fn into_weights(self) -> NetworkWeights {
        self.weights
    }

    fn trunk_params(&self) -> &[ConvLayerParams] {
        &self.weights.layers[self.spec.trunk_params()]
    }

    fn branch_params(&self, b: Branch) -> &[ConvLayerParams] {
        &self.weights.layers[self.spec.branch_params(b)]
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.channels() != self.spec.input_channels() {
            return Err(Error::invalid(
                "bfcn_forward",
                format!(
                    "expected {} input channels (photo + prior), got {}",
                    self.spec.input_channels(),
                    input.shape()
                ),
            ));
        }
        let min = self.spec.shrinkage() + 1;
        if input.height() < min || input.width() < min {
            return Err(Error::invalid(
                "bfcn_forward",
                format!("input {} is smaller than the {min}x{min} receptive field", input.shape()),
            ));
        }
        Ok(())
    }

    /// Shared trunk once, then both branches on the same features.
    pub fn forward(&self, input: &Tensor) -> Result<BfcnOutput> {
        self.check_input(input)?;
        let features = exec::forward(self.spec.trunk(), self.trunk_params(), input.clone())?;
        let structural = exec::forward(
            self.spec.branch(Branch::Structural),
            self.branch_params(Branch::Structural),
            features.clone(),
        )?;
        let textural = exec::forward(self.spec.branch(Branch::Textural), self.branch_params(Branch::Textural), features)?;
        Ok(BfcnOutput { structural, textural })
    }

    /// Trunk and one branch only.
    pub fn forward_branch(&self, input: &Tensor, branch: Branch) -> Result<Tensor> {
        self.check_input(input)?;
        let features = exec::forward(self.spec.trunk(), self.trunk_params(), input.clone())?;
        exec::forward(self.spec.branch(branch), self.branch_params(branch), features)
    }

    pub fn forward_branch_traced(&self, input: &Tensor, branch: Branch) -> Result<(Tensor, BranchTrace)> {
        self.check_input(input)?;
        let (features, trunk) = exec::forward_traced(self.spec.trunk(), self.trunk_params(), input.clone())?;
        let (out, head) = exec::forward_traced(self.spec.branch(branch), self.branch_params(branch), features)?;
        Ok((out, BranchTrace { branch, trunk, head }))
    }

    /// Gradient of a scalar loss with respect to the input and to every
    /// parameter. Parameters of the branch that was not run get zeros.
    pub fn backward(&self, trace: &BranchTrace, grad_out: Tensor) -> Result<(Tensor, NetworkWeights)> {
        let (g_features, head_grads) = exec::backward(&trace.head, self.branch_params(trace.branch), grad_out)?;
        let (g_input, trunk_grads) = exec::backward(&trace.trunk, self.trunk_params(), g_features)?;
        let mut grads = self.weights.zeros_like();
        for (dst, g) in grads.layers[self.spec.trunk_params()].iter_mut().zip(trunk_grads) {
            *dst = g;
        }
        for (dst, g) in grads.layers[self.spec.branch_params(trace.branch)].iter_mut().zip(head_grads) {
            *dst = g;
        }
        Ok((g_input, grads))
    }

    /// Two isolated networks, each with its own copy of the trunk weights.
    pub fn unshared(&self) -> UnsharedBfcn {
        let copy = |b: Branch| {
            let mut params = self.trunk_params().to_vec();
            params.extend_from_slice(self.branch_params(b));
            let mut layers = self.spec.trunk().to_vec();
            layers.extend_from_slice(self.spec.branch(b));
            (layers, params)
        };
        UnsharedBfcn {
            model: self.clone(),
            structural: copy(Branch::Structural),
            textural: copy(Branch::Textural),
        }
    }
}

/// The same architecture without trunk sharing: every forward pass computes
/// the trunk once per branch.
#[derive(Debug, Clone)]
pub struct UnsharedBfcn {
    model: Bfcn,
    structural: (Vec<super::spec::LayerSpec>, Vec<ConvLayerParams>),
    textural: (Vec<super::spec::LayerSpec>, Vec<ConvLayerParams>),
}

impl UnsharedBfcn {
    pub fn forward(&self, input: &Tensor) -> Result<BfcnOutput> {
        self.model.check_input(input)?;
        let structural = exec::forward(&self.structural.0, &self.structural.1, input.clone())?;
        let textural = exec::forward(&self.textural.0, &self.textural.1, input.clone())?;
        Ok(BfcnOutput { structural, textural })
    }
}

/// Convenience wrapper around [`Bfcn::forward`].
pub fn bfcn_forward(input: &Tensor, spec: &NetworkSpec, weights: &NetworkWeights) -> Result<BfcnOutput> {
    Bfcn::new(spec.clone(), weights.clone())?.forward(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::spec::BfcnWidths;
    use crate::network::weights::{init_weights, init_weights_with_std};

    #[test]
    fn inference_shape() {
        let spec = NetworkSpec::bfcn(BfcnWidths::uniform(2), 1).unwrap();
        let net = Bfcn::new(spec.clone(), init_weights(&spec, 0)).unwrap();
        let out = net.forward(&Tensor::zeros(2, 250, 200)).unwrap();
        assert_eq!((out.structural.height(), out.structural.width()), (238, 188));
        assert_eq!(out.textural.shape(), out.structural.shape());
    }

    #[test]
    fn training_patch_shape() {
        let spec = NetworkSpec::default_bfcn();
        let net = Bfcn::new(spec.clone(), init_weights(&spec, 0)).unwrap();
        let out = net.forward(&Tensor::filled(2, 32, 32, 0.5)).unwrap();
        assert_eq!(out.structural.shape(), crate::error::Shape::new(1, 20, 20));
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let spec = NetworkSpec::default_bfcn();
        let net = Bfcn::new(spec.clone(), NetworkWeights::zeros(&spec)).unwrap();
        let out = net.forward(&Tensor::filled(2, 16, 16, 0.7)).unwrap();
        assert!(out.structural.data().iter().chain(out.textural.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn too_small_or_wrong_channels_rejected() {
        let spec = NetworkSpec::default_bfcn();
        let net = Bfcn::new(spec.clone(), init_weights(&spec, 0)).unwrap();
        assert!(net.forward(&Tensor::zeros(2, 12, 40)).is_err());
        assert!(net.forward(&Tensor::zeros(3, 20, 20)).is_err());
        assert!(net.forward(&Tensor::zeros(2, 13, 13)).is_ok());
    }

    #[test]
    fn shared_equals_unshared_bitwise() {
        let spec = NetworkSpec::bfcn(BfcnWidths::uniform(4), 1).unwrap();
        let net = Bfcn::new(spec.clone(), init_weights_with_std(&spec, 9, 0.3)).unwrap();
        let input = Tensor::from_fn(2, 24, 20, |c, y, x| ((c + 3 * y + 7 * x) % 11) as f64 / 11.0);
        assert_eq!(net.forward(&input).unwrap(), net.unshared().forward(&input).unwrap());
    }

    #[test]
    fn branch_forward_matches_full_forward() {
        let spec = NetworkSpec::bfcn(BfcnWidths::uniform(3), 1).unwrap();
        let net = Bfcn::new(spec.clone(), init_weights_with_std(&spec, 2, 0.3)).unwrap();
        let input = Tensor::from_fn(2, 16, 16, |c, y, x| ((c * 5 + y * x) % 7) as f64 / 7.0);
        let full = net.forward(&input).unwrap();
        let (t, trace) = net.forward_branch_traced(&input, Branch::Textural).unwrap();
        assert_eq!(t, full.textural);
        assert_eq!(trace.branch(), Branch::Textural);
        assert_eq!(net.forward_branch(&input, Branch::Structural).unwrap(), full.structural);
    }

    #[test]
    fn backward_leaves_other_branch_zero() {
        let spec = NetworkSpec::bfcn(BfcnWidths::uniform(2), 1).unwrap();
        let net = Bfcn::new(spec.clone(), init_weights_with_std(&spec, 4, 0.5)).unwrap();
        let input = Tensor::from_fn(2, 14, 14, |_, y, x| (y + x) as f64 / 28.0);
        let (out, trace) = net.forward_branch_traced(&input, Branch::Structural).unwrap();
        let (_, grads) = net.backward(&trace, Tensor::filled(1, out.height(), out.width(), 1.0)).unwrap();
        for l in &grads.layers[spec.branch_params(Branch::Textural)] {
            assert!(l.values().all(|&v| v == 0.0));
        }
    }
}
