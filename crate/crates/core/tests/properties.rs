use proptest::prelude::*;
use sketch_core::fusion::{hard_fuse, soft_fuse, FusionInput};
use sketch_core::losses::{mse, sm_mse};
use sketch_core::{ParsingMap, Tensor};

fn patch(values: Vec<f64>) -> Tensor {
    let n = values.len();
    Tensor::new(1, 1, n, values).unwrap()
}

fn parsing_from(raw: &[f64], n: usize) -> ParsingMap {
    ParsingMap::normalized(&Tensor::new(3, 1, n, raw.to_vec()).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn sorted_matching_never_exceeds_pixelwise(pairs in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..64)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (a, b) = (patch(a), patch(b));
        prop_assert!(sm_mse(&a, &b).unwrap().value <= mse(&a, &b).unwrap().value + 1e-15);
    }

    #[test]
    fn sorted_matching_ignores_rearrangement(
        values in prop::collection::vec(0.0..1.0f64, 1..64),
        seed in any::<u64>(),
    ) {
        let mut shuffled = values.clone();
        let mut state = seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(sm_mse(&patch(shuffled), &patch(values)).unwrap().value, 0.0);
    }

    #[test]
    fn soft_fusion_stays_between_the_sketches(
        px in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64), 1..32),
    ) {
        let n = px.len();
        let s = patch(px.iter().map(|p| p.0).collect());
        let t = patch(px.iter().map(|p| p.1).collect());
        let mut raw = vec![0.0; 3 * n];
        for (i, p) in px.iter().enumerate() {
            raw[i] = p.2;
            raw[n + i] = p.3;
            raw[2 * n + i] = p.4;
        }
        let input = FusionInput::new(s.clone(), t.clone(), parsing_from(&raw, n)).unwrap();
        for (i, v) in soft_fuse(&input).data().iter().enumerate() {
            let (a, b) = (s.data()[i], t.data()[i]);
            prop_assert!(a.min(b) <= *v && *v <= a.max(b));
        }
    }

    #[test]
    fn fusions_coincide_on_one_hot_maps(
        px in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0usize..3), 1..32),
    ) {
        let n = px.len();
        let s = patch(px.iter().map(|p| p.0).collect());
        let t = patch(px.iter().map(|p| p.1).collect());
        let mut raw = vec![0.0; 3 * n];
        for (i, p) in px.iter().enumerate() {
            raw[p.2 * n + i] = 1.0;
        }
        let input = FusionInput::new(s, t, parsing_from(&raw, n)).unwrap();
        let (soft, hard) = (soft_fuse(&input), hard_fuse(&input));
        for (a, b) in soft.data().iter().zip(hard.data()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
