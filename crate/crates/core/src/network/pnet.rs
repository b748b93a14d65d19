use super::exec::{self, Trace};
use super::spec::{Architecture, NetworkSpec};
use super::weights::NetworkWeights;
use crate::error::{Error, Result};
use crate::parsing::ParsingMap;
use crate::tensor::Tensor;

/// Canonical parsing input: 200 rows by 156 columns.
pub const PNET_INPUT_SIZE: (usize, usize) = (200, 156);

/// The parsing network: photo plus label-map prior in, face/hair/background
/// probabilities out at half resolution.
#[derive(Debug, Clone)]
pub struct PNet {
    spec: NetworkSpec,
    weights: NetworkWeights,
}

impl PNet {
    pub fn new(spec: NetworkSpec, weights: NetworkWeights) -> Result<Self> {
        if spec.architecture() != Architecture::PNet {
            return Err(Error::invalid("pnet", "spec does not describe a parsing network"));
        }
        weights.check_matches(&spec)?;
        Ok(PNet { spec, weights })
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

    /// Output resolution for an input of `height x width`.
    pub fn output_size(height: usize, width: usize) -> (usize, usize) {
        (height / 2, width / 2)
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.channels() != self.spec.input_channels() {
            return Err(Error::invalid(
                "pnet_forward",
                format!(
                    "expected {} input channels (photo + 3 prior), got {}",
                    self.spec.input_channels(),
                    input.shape()
                ),
            ));
        }
        if !input.height().is_multiple_of(2) || !input.width().is_multiple_of(2) {
            return Err(Error::invalid(
                "pnet_forward",
                format!("input {} must have even height and width", input.shape()),
            ));
        }
        Ok(())
    }

    pub fn forward_logits(&self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        exec::forward(self.spec.trunk(), &self.weights.layers, input.clone())
    }

    pub fn forward(&self, input: &Tensor) -> Result<ParsingMap> {
        ParsingMap::from_logits(&self.forward_logits(input)?)
    }

    pub fn forward_traced(&self, input: &Tensor) -> Result<(Tensor, Trace)> {
        self.check_input(input)?;
        exec::forward_traced(self.spec.trunk(), &self.weights.layers, input.clone())
    }

    /// Gradient of a scalar loss given its gradient on the logits.
    pub fn backward(&self, trace: &Trace, grad_logits: Tensor) -> Result<(Tensor, NetworkWeights)> {
        let (g_input, layer_grads) = exec::backward(trace, &self.weights.layers, grad_logits)?;
        let mut grads = self.weights.zeros_like();
        grads.layers = layer_grads;
        Ok((g_input, grads))
    }
}

/// Convenience wrapper around [`PNet::forward`].
pub fn pnet_forward(input: &Tensor, spec: &NetworkSpec, weights: &NetworkWeights) -> Result<ParsingMap> {
    PNet::new(spec.clone(), weights.clone())?.forward(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::LrnParams;
    use crate::network::spec::PNetLayout;
    use crate::network::weights::init_weights;

    #[test]
    fn canonical_input_gives_half_resolution() {
        let spec = NetworkSpec::pnet(PNetLayout::uniform(2), 1, LrnParams::default()).unwrap();
        let net = PNet::new(spec.clone(), init_weights(&spec, 1)).unwrap();
        let input = Tensor::from_fn(4, 200, 156, |c, y, x| ((c + y + x) % 5) as f64 / 5.0);
        let p = net.forward(&input).unwrap();
        assert_eq!((p.height(), p.width()), (100, 78));
        assert!(p.max_simplex_error() <= 1e-6);
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let spec = NetworkSpec::default_pnet();
        let net = PNet::new(spec.clone(), NetworkWeights::zeros(&spec)).unwrap();
        let p = net.forward(&Tensor::filled(4, 8, 6, 0.4)).unwrap();
        assert!(p.as_tensor().data().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn odd_input_rejected() {
        let spec = NetworkSpec::default_pnet();
        let net = PNet::new(spec.clone(), NetworkWeights::zeros(&spec)).unwrap();
        assert!(net.forward(&Tensor::zeros(4, 9, 6)).is_err());
        assert!(net.forward(&Tensor::zeros(3, 8, 6)).is_err());
    }
}
