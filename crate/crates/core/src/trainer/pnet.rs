use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::report::{EpochRecord, TrainReport};
use super::sgd::Sgd;
use crate::error::{Error, Result};
use crate::losses::softmax_parsing_loss;
use crate::network::{attach_prior, init_weights_with_std, Architecture, NetworkSpec, NetworkWeights, PNet};
use crate::parsing::LabelMap;
use crate::tensor::Tensor;

/// Mean parsing loss over `samples` and its parameter gradient, summed in
/// slice order.
pub fn pnet_batch_gradient(net: &PNet, samples: &[(&Tensor, &LabelMap)]) -> Result<(f64, NetworkWeights)> {
    let mut grads = net.weights().zeros_like();
    let mut total = 0.0;
    let scale = 1.0 / samples.len() as f64;
    for (input, labels) in samples {
        let (logits, trace) = net.forward_traced(input)?;
        let mut loss = softmax_parsing_loss(&logits, labels)?;
        total += loss.value;
        loss.grad.scale(scale);
        let (_, g) = net.backward(&trace, loss.grad)?;
        grads.add_scaled(&g, 1.0)?;
    }
    Ok((total * scale, grads))
}

/// Fraction of pixels whose most probable class matches the label.
pub fn parsing_accuracy(net: &PNet, samples: &[(Tensor, LabelMap)]) -> Result<f64> {
    let (mut hits, mut total) = (0usize, 0usize);
    for (input, labels) in samples {
        let predicted = net.forward(input)?.argmax();
        hits += predicted.labels().iter().zip(labels.labels()).filter(|(a, b)| a == b).count();
        total += labels.labels().len();
    }
    Ok(hits as f64 / total.max(1) as f64)
}

fn build_inputs(images: &[(Tensor, LabelMap)], prior: &Tensor, spec: &NetworkSpec) -> Result<Vec<(Tensor, LabelMap)>> {
    images
        .iter()
        .enumerate()
        .map(|(i, (photo, labels))| {
            let out = PNet::output_size(photo.height(), photo.width());
            if (labels.height(), labels.width()) != out {
                return Err(Error::invalid(
                    "train_pnet",
                    format!(
                        "image {i}: labels are {}x{} but the network outputs {}x{}",
                        labels.height(),
                        labels.width(),
                        out.0,
                        out.1
                    ),
                ));
            }
            if prior.height() != photo.height() || prior.width() != photo.width() {
                return Err(Error::ShapeMismatch {
                    op: "train_pnet",
                    left: photo.shape(),
                    right: prior.shape(),
                });
            }
            Ok((attach_prior(photo, prior, spec)?, labels.clone()))
        })
        .collect()
}

/// Trains the parsing network from scratch on photos with label maps at
/// half resolution. `prior` is the three-channel mean label map at photo
/// resolution.
pub fn train_pnet(
    images: &[(Tensor, LabelMap)],
    prior: &Tensor,
    spec: &NetworkSpec,
    config: &TrainConfig,
) -> Result<(NetworkWeights, TrainReport)> {
    train_pnet_with(images, prior, spec, config, |_| {})
}

pub fn train_pnet_with(
    images: &[(Tensor, LabelMap)],
    prior: &Tensor,
    spec: &NetworkSpec,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(NetworkWeights, TrainReport)> {
    config.validate()?;
    if spec.architecture() != Architecture::PNet {
        return Err(Error::invalid("train_pnet", "spec does not describe a parsing network"));
    }
    if images.is_empty() {
        return Err(Error::invalid("train_pnet", "no training images"));
    }
    let samples = build_inputs(images, prior, spec)?;
    let mut weights = init_weights_with_std(spec, config.seed, config.init_std);
    weights.seed = config.seed;
    let mut net = PNet::new(spec.clone(), weights)?;
    let mut opt = Sgd::new(config.lr_pnet, config.momentum);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch = config.batch_size.min(samples.len());

    let mut report = TrainReport::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 1..=config.epochs_pnet {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut steps = 0;
        for chunk in order.chunks(batch) {
            let refs: Vec<(&Tensor, &LabelMap)> = chunk.iter().map(|&i| (&samples[i].0, &samples[i].1)).collect();
            let (loss, grads) = pnet_batch_gradient(&net, &refs)?;
            if !loss.is_finite() {
                return Err(Error::invalid(
                    "train_pnet",
                    format!("loss diverged at epoch {epoch}; lower the learning rate"),
                ));
            }
            opt.step(net.weights_mut(), &grads)?;
            sum += loss;
            steps += 1;
            report.step_losses.push(loss);
        }
        let record = EpochRecord {
            epoch,
            loss_s: None,
            loss_t: None,
            loss_g: None,
            loss_p: Some(sum / steps as f64),
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        report.epochs.push(record);
    }
    let mut weights = net.into_weights();
    weights.epoch = config.epochs_pnet as u32;
    Ok((weights, report))
}
