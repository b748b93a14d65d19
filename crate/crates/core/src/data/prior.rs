use crate::error::{Error, Result};
use crate::parsing::{LabelMap, ParsingMap};
use crate::tensor::Tensor;

/// Pixel-wise mean of equally sized images: the nonparametric sketch prior.
pub fn build_prior(images: &[Tensor]) -> Result<Tensor> {
    let first = images
        .first()
        .ok_or_else(|| Error::invalid("build_prior", "no images to average"))?;
    let mut acc = Tensor::zeros(first.channels(), first.height(), first.width());
    for img in images {
        acc.add_scaled(img, 1.0)?;
    }
    acc.scale(1.0 / images.len() as f64);
    Ok(acc)
}

/// Mean one-hot label map: the parsing prior.
pub fn build_parsing_prior(labels: &[LabelMap]) -> Result<ParsingMap> {
    let onehots: Vec<Tensor> = labels.iter().map(|l| l.to_parsing().into_tensor()).collect();
    ParsingMap::normalized(&build_prior(&onehots)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsing::Region;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_image_is_itself() {
        let t = Tensor::from_fn(1, 3, 4, |_, y, x| (y * 4 + x) as f64 / 12.0);
        assert_eq!(build_prior(std::slice::from_ref(&t)).unwrap(), t);
    }

    #[test]
    fn zero_and_one_average_to_half() {
        let p = build_prior(&[Tensor::zeros(1, 2, 2), Tensor::filled(1, 2, 2, 1.0)]).unwrap();
        assert_eq!(p, Tensor::filled(1, 2, 2, 0.5));
    }

    #[test]
    fn matches_loop_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let imgs: Vec<Tensor> = (0..7).map(|_| Tensor::from_fn(1, 5, 3, |_, _, _| rng.random_range(0.0..1.0))).collect();
        let p = build_prior(&imgs).unwrap();
        for i in 0..15 {
            let mean = imgs.iter().map(|t| t.data()[i]).sum::<f64>() / 7.0;
            assert!((p.data()[i] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_mismatched_rejected() {
        assert!(build_prior(&[]).is_err());
        assert!(build_prior(&[Tensor::zeros(1, 2, 2), Tensor::zeros(1, 3, 2)]).is_err());
    }

    #[test]
    fn parsing_prior_counts_labels() {
        let a = LabelMap::filled(2, 2, Region::Face);
        let b = LabelMap::filled(2, 2, Region::Hair);
        let p = build_parsing_prior(&[a, b]).unwrap();
        assert_eq!(p.at(1, 1), [0.5, 0.5, 0.0]);
    }
}
