use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketch_core::eval::{cms, pca_cms, pca_fit};

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

#[test]
fn pca_agrees_with_dense_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows = random_rows(&mut rng, 10, 6);
    let model = pca_fit(&rows, 3).unwrap();

    let n = rows.len();
    let mean: Vec<f64> = (0..6).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, 6, |i, j| rows[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    for (i, &j) in order.iter().take(3).enumerate() {
        assert_abs_diff_eq!(model.variances()[i], eig.eigenvalues[j], epsilon = 1e-8);
        let oracle = eig.eigenvectors.column(j);
        // Eigenvectors are defined up to sign.
        let dot: f64 = model.components()[i].iter().zip(oracle.iter()).map(|(a, b)| a * b).sum();
        let sign = dot.signum();
        for (a, b) in model.components()[i].iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(*a, sign * b, epsilon = 1e-8);
        }
    }
    for (a, b) in model.mean().iter().zip(&mean) {
        assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
    }
}

#[test]
fn gallery_against_itself_is_perfect_and_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gallery = random_rows(&mut rng, 15, 40);
    let curve = pca_cms(&gallery, &gallery, 10, 15).unwrap();
    assert_eq!(curve.at(1), Some(1.0));
    assert!(curve.scores().windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn unrelated_queries_score_at_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = 20;
    let trials = 1000;
    let mut hits = 0.0;
    for _ in 0..trials {
        let gallery = random_rows(&mut rng, g, 8);
        let query = random_rows(&mut rng, 1, 8);
        let id = rng.random_range(0..g);
        hits += cms(&query, &gallery, &[id], 1).unwrap().at(1).unwrap();
    }
    let rate = hits / trials as f64;
    assert!((rate - 1.0 / g as f64).abs() < 0.05, "rank-1 rate {rate}");
}
