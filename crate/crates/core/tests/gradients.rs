use std::time::Instant;

use sketch_core::trainer::gradcheck::{GradTarget, DEFAULT_EPSILON};

#[test]
fn every_backward_pass_matches_finite_differences() {
    for target in GradTarget::ALL {
        for seed in [1, 2] {
            let start = Instant::now();
            let report = target.run(seed, DEFAULT_EPSILON).unwrap();
            println!("{target:8} seed {seed}: {report} in {:.2?}", start.elapsed());
            assert!(report.max_relative_error < 1e-4, "{target} seed {seed}: {report}");
        }
    }
}
