//! Blending the structural and textural sketches under a parsing map.
//!
//! Hard fusion picks the textural sketch wherever hair is the most probable
//! class; soft fusion weighs the two sketches by the hair probability alone.
//! Face and background probabilities do not enter either blend.

use crate::error::{Error, Result};
use crate::parsing::{ParsingMap, Region};
use crate::tensor::Tensor;

/// Two congruent single-channel sketches and a parsing map of the same size.
#[derive(Debug, Clone)]
pub struct FusionInput {
    structural: Tensor,
    textural: Tensor,
    parsing: ParsingMap,
}

impl FusionInput {
    pub fn new(structural: Tensor, textural: Tensor, parsing: ParsingMap) -> Result<Self> {
        if structural.channels() != 1 {
            return Err(Error::invalid(
                "fusion",
                format!("structural sketch must have one channel, got {}", structural.shape()),
            ));
        }
        structural.check_same_shape(&textural, "fusion")?;
        if parsing.height() != structural.height() || parsing.width() != structural.width() {
            return Err(Error::ShapeMismatch {
                op: "fusion",
                left: structural.shape(),
                right: parsing.as_tensor().shape(),
            });
        }
        Ok(FusionInput {
            structural,
            textural,
            parsing,
        })
    }

    pub fn structural(&self) -> &Tensor {
        &self.structural
    }

    pub fn textural(&self) -> &Tensor {
        &self.textural
    }

    pub fn parsing(&self) -> &ParsingMap {
        &self.parsing
    }
}

/// 1 where hair is at least as probable as face and background, else 0.
pub fn binary_hair_map(parsing: &ParsingMap) -> Tensor {
    let labels = parsing.argmax();
    Tensor::from_fn(1, parsing.height(), parsing.width(), |_, y, x| {
        if labels.get(y, x) == Region::Hair {
            1.0
        } else {
            0.0
        }
    })
}

/// `(1 - w) * s + w * t`, kept inside `[min(s, t), max(s, t)]` so rounding
/// never leaves the convex hull. Weights of exactly 0 or 1 return `s` or `t`
/// unchanged.
fn blend(s: &Tensor, t: &Tensor, weight: &Tensor) -> Tensor {
    let data = s
        .data()
        .iter()
        .zip(t.data())
        .zip(weight.data())
        .map(|((&a, &b), &w)| ((1.0 - w) * a + w * b).clamp(a.min(b), a.max(b)))
        .collect();
    Tensor::new(1, s.height(), s.width(), data).expect("blend keeps the input shape")
}

pub fn hard_fuse(input: &FusionInput) -> Tensor {
    blend(&input.structural, &input.textural, &binary_hair_map(&input.parsing))
}

pub fn soft_fuse(input: &FusionInput) -> Tensor {
    blend(&input.structural, &input.textural, &input.parsing.probability(Region::Hair))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    #[default]
    Soft,
    Hard,
}

/// Fuses and clamps to `[0, 1]` for export.
pub fn fuse(input: &FusionInput, mode: FusionMode) -> Tensor {
    let out = match mode {
        FusionMode::Soft => soft_fuse(input),
        FusionMode::Hard => hard_fuse(input),
    };
    out.map(|v| v.clamp(0.0, 1.0))
}

/// Lifts a parsing map computed on a downscaled frame to sketch resolution:
/// resize to the full `frame` size, take the centered `out` window the
/// sketch network produces, and renormalize.
pub fn align_parsing(parsing: &ParsingMap, frame: (usize, usize), out: (usize, usize)) -> Result<ParsingMap> {
    if out.0 > frame.0 || out.1 > frame.1 {
        return Err(Error::invalid(
            "align_parsing",
            format!("output {}x{} larger than frame {}x{}", out.0, out.1, frame.0, frame.1),
        ));
    }
    let full = parsing.resized(frame.0, frame.1)?;
    let cropped = full.as_tensor().center_crop(out.0, out.1)?;
    ParsingMap::normalized(&cropped)
}
