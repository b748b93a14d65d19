//! Network construction, execution and weight persistence for the branched
//! sketch network and the parsing network.

mod bfcn;
mod exec;
mod io;
mod pnet;
mod spec;
mod weights;

pub use bfcn::{bfcn_forward, Bfcn, BfcnOutput, BranchTrace, UnsharedBfcn};
pub use exec::Trace;
pub use io::{decode_weights, encode_weights, load_weights, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use pnet::{pnet_forward, PNet, PNET_INPUT_SIZE};
pub use spec::{
    Architecture, BfcnWidths, Branch, ConvSpec, LayerSpec, NetworkSpec, PNetLayout, BFCN_BRANCH_KERNELS,
    BFCN_TRUNK_KERNELS,
};
pub use weights::{init_weights, init_weights_with_std, NetworkWeights, INIT_STD};

use crate::error::Result;
use crate::tensor::Tensor;

/// Appends the prior channels after the photo channels. When the spec has
/// the prior disabled, zeros are appended instead.
pub fn attach_prior(photo: &Tensor, prior: &Tensor, spec: &NetworkSpec) -> Result<Tensor> {
    if prior.channels() != spec.prior_channels() {
        return Err(crate::error::Error::invalid(
            "attach_prior",
            format!("expected a {}-channel prior, got {}", spec.prior_channels(), prior.shape()),
        ));
    }
    if spec.use_prior() {
        Tensor::concat_channels(&[photo, prior])
    } else {
        let zeros = Tensor::zeros(prior.channels(), prior.height(), prior.width());
        Tensor::concat_channels(&[photo, &zeros])
    }
}
