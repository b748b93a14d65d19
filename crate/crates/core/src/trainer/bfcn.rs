use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::report::{EpochRecord, TrainReport};
use super::sgd::Sgd;
use crate::data::PatchPair;
use crate::error::{Error, Result};
use crate::losses::{mse, textural_loss};
use crate::network::{attach_prior, init_weights_with_std, Architecture, Bfcn, Branch, NetworkSpec, NetworkWeights};
use crate::parsing::Region;
use crate::tensor::Tensor;

/// Network input (photo plus prior) and the centered supervision window.
#[derive(Debug, Clone, PartialEq)]
pub struct BfcnSample {
    pub input: Tensor,
    pub target: Tensor,
}

/// Batch-mean losses. `combined` is `structural_weight * structural +
/// alpha * textural`; the two parts are reported unweighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfcnBatchLoss {
    pub structural: f64,
    pub textural: f64,
    pub combined: f64,
}

/// Loss and parameter gradient of one mixed batch. Face samples go through
/// the structural branch with MSE, hair samples through the textural branch
/// with the textural loss. Per-sample gradients are summed in slice order,
/// so the result does not depend on anything but the inputs.
pub fn bfcn_batch_gradient(
    net: &Bfcn,
    face: &[&BfcnSample],
    hair: &[&BfcnSample],
    config: &TrainConfig,
) -> Result<(BfcnBatchLoss, NetworkWeights)> {
    let mut grads = net.weights().zeros_like();
    let mut run = |samples: &[&BfcnSample], branch: Branch, weight: f64| -> Result<f64> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let scale = weight / samples.len() as f64;
        let mut total = 0.0;
        for s in samples {
            let (out, trace) = net.forward_branch_traced(&s.input, branch)?;
            let mut loss = match branch {
                Branch::Structural => mse(&out, &s.target)?,
                Branch::Textural => textural_loss(&out, &s.target, config.beta)?,
            };
            total += loss.value;
            if scale != 0.0 {
                loss.grad.scale(scale);
                let (_, g) = net.backward(&trace, loss.grad)?;
                grads.add_scaled(&g, 1.0)?;
            }
        }
        Ok(total / samples.len() as f64)
    };
    let structural = run(face, Branch::Structural, config.structural_weight)?;
    let textural = run(hair, Branch::Textural, config.alpha)?;
    let loss = BfcnBatchLoss {
        structural,
        textural,
        combined: config.structural_weight * structural + config.alpha * textural,
    };
    Ok((loss, grads))
}

fn build_samples(pairs: &[PatchPair], prior: &Tensor, spec: &NetworkSpec) -> Result<Vec<BfcnSample>> {
    let size = pairs[0].size();
    let out = size
        .checked_sub(spec.shrinkage())
        .filter(|&o| o > 0)
        .ok_or_else(|| Error::invalid("train_bfcn", format!("patch size {size} is too small for the network")))?;
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.size() != size || p.photo.height() != size || p.photo.width() != size {
                return Err(Error::invalid("train_bfcn", format!("pair {i} is not {size}x{size}")));
            }
            if p.photo.channels() != spec.photo_channels() {
                return Err(Error::invalid(
                    "train_bfcn",
                    format!("pair {i} photo is {}, network expects {} channels", p.photo.shape(), spec.photo_channels()),
                ));
            }
            let (y, x) = p.origin;
            let prior_patch = prior.crop(y, x, size, size).map_err(|_| {
                Error::invalid(
                    "train_bfcn",
                    format!("pair {i} at {:?} lies outside the {} prior", p.origin, prior.shape()),
                )
            })?;
            Ok(BfcnSample {
                input: attach_prior(&p.photo, &prior_patch, spec)?,
                target: p.target(out)?,
            })
        })
        .collect()
}

/// Trains the sketch network from scratch.
///
/// `prior` is the mean sketch over the same frame the pairs were cut from;
/// each pair sees the prior window at its own origin. Every step takes half
/// its batch from face pairs and half from hair pairs. An epoch is one pass
/// over the larger stream; the smaller one wraps around.
pub fn train_bfcn(
    pairs: &[PatchPair],
    prior: &Tensor,
    spec: &NetworkSpec,
    config: &TrainConfig,
) -> Result<(NetworkWeights, TrainReport)> {
    train_bfcn_with(pairs, prior, spec, config, |_| {})
}

/// [`train_bfcn`] with a callback after every epoch.
pub fn train_bfcn_with(
    pairs: &[PatchPair],
    prior: &Tensor,
    spec: &NetworkSpec,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(NetworkWeights, TrainReport)> {
    config.validate()?;
    if spec.architecture() != Architecture::Bfcn {
        return Err(Error::invalid("train_bfcn", "spec does not describe a branched network"));
    }
    let face: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].region == Region::Face).collect();
    let hair: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].region == Region::Hair).collect();
    if face.is_empty() {
        return Err(Error::MissingRegion(Region::Face));
    }
    if hair.is_empty() {
        return Err(Error::MissingRegion(Region::Hair));
    }
    let samples = build_samples(pairs, prior, spec)?;

    let mut weights = init_weights_with_std(spec, config.seed, config.init_std);
    weights.seed = config.seed;
    let mut net = Bfcn::new(spec.clone(), weights)?;
    let mut opt = Sgd::new(config.lr_bfcn, config.momentum);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let face_per_step = config.batch_size / 2;
    let hair_per_step = config.batch_size - face_per_step;
    let steps = (face.len().div_ceil(face_per_step)).max(hair.len().div_ceil(hair_per_step));

    let mut report = TrainReport::default();
    let (mut face_order, mut hair_order) = (face.clone(), hair.clone());
    for epoch in 1..=config.epochs_bfcn {
        let start = Instant::now();
        face_order.shuffle(&mut rng);
        hair_order.shuffle(&mut rng);
        let mut sums = [0.0; 3];
        for step in 0..steps {
            let pick = |order: &[usize], per: usize| -> Vec<&BfcnSample> {
                (0..per).map(|j| &samples[order[(step * per + j) % order.len()]]).collect()
            };
            let f = pick(&face_order, face_per_step);
            let h = pick(&hair_order, hair_per_step);
            let (loss, grads) = bfcn_batch_gradient(&net, &f, &h, config)?;
            if !loss.combined.is_finite() {
                return Err(Error::invalid(
                    "train_bfcn",
                    format!("loss diverged at epoch {epoch}, step {step}; lower the learning rate"),
                ));
            }
            opt.step(net.weights_mut(), &grads)?;
            sums[0] += loss.structural;
            sums[1] += loss.textural;
            sums[2] += loss.combined;
            report.step_losses.push(loss.combined);
        }
        let n = steps as f64;
        let record = EpochRecord {
            epoch,
            loss_s: Some(sums[0] / n),
            loss_t: Some(sums[1] / n),
            loss_g: Some(sums[2] / n),
            loss_p: None,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        report.epochs.push(record);
    }
    let mut weights = net.into_weights();
    weights.epoch = config.epochs_bfcn as u32;
    Ok((weights, report))
}
