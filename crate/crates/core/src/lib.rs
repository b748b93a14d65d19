//! Decompositional sketch-portrait generation.
//!
//! A branched fully convolutional network maps an aligned face photo to two
//! sketches: a structural one trained with pixelwise MSE on face patches and
//! a textural one trained with sorted-matching MSE on hair patches. A face
//! parsing network supplies per-pixel face/hair/background probabilities
//! that blend the two into the final portrait.
//!
//! Everything is implemented on a small dense [`Tensor`] type with
//! hand-written backward passes; there is no external ML framework.

// Range checks are written `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod binio;
pub mod data;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod layers;
pub mod losses;
pub mod network;
pub mod parsing;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result, Shape};
pub use parsing::{LabelMap, ParsingMap, Region};
pub use tensor::Tensor;
