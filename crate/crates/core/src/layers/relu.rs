use crate::error::Result;
use crate::tensor::Tensor;

/// Elementwise `max(0, x)`.
pub fn relu(input: &Tensor) -> Tensor {
    input.map(|v| v.max(0.0))
}

/// Passes `grad_out` where the forward input was strictly positive.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    input.zip_map(grad_out, |x, g| if x > 0.0 { g } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_negatives() {
        let t = Tensor::new(1, 1, 3, vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&t).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn positives_unchanged() {
        let t = Tensor::from_fn(2, 3, 3, |c, y, x| 0.5 + (c + y + x) as f64);
        assert_eq!(relu(&t), t);
    }

    #[test]
    fn backward_masks_nonpositive() {
        let t = Tensor::new(1, 1, 3, vec![-1.0, 0.0, 2.0]).unwrap();
        let g = Tensor::filled(1, 1, 3, 5.0);
        assert_eq!(relu_backward(&t, &g).unwrap().data(), &[0.0, 0.0, 5.0]);
    }
}
