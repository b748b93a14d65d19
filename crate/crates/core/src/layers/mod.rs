//! Differentiable primitive layers with hand-written backward passes.
//!
//! Every forward function is pure; backward functions take whatever the
//! forward pass needs to be replayed (input, argmax routes, LRN scale).

mod conv;
mod lrn;
mod pool;
mod relu;
mod resize;

pub use conv::{conv2d, conv2d_backward, ConvLayerParams};
pub use lrn::{lrn, lrn_backward, LrnOutput, LrnParams};
pub use pool::{maxpool2x2, maxpool2x2_stride1, maxpool_backward, PoolOutput};
pub use relu::{relu, relu_backward};
pub use resize::bilinear_resize;
