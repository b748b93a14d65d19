//! Recognition-style evaluation: PCA features, cosine ranking and the
//! cumulative match score curve. [`ssim`] doubles as a whole-image quality
//! score.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub use crate::data::ssim;

/// Principal subspace of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`, by descending variance.
    components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalues matching `components`.
    variances: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::invalid(
                "pca_project",
                format!("vector of length {} for a {}-dimensional model", x.len(), self.dim()),
            ));
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect())
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.k() {
            return Err(Error::invalid(
                "pca_reconstruct",
                format!("{} coefficients for {} components", coeffs.len(), self.k()),
            ));
        }
        let mut out = self.mean.clone();
        for (c, &a) in self.components.iter().zip(coeffs) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += a * v;
            }
        }
        Ok(out)
    }
}

/// Eigen-decomposition of a dense symmetric `n x n` matrix (row-major) by
/// cyclic Jacobi rotations. Returns eigenvalues in descending order (ties by
/// original position) and the matching unit eigenvectors.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if matrix.len() != n * n {
        return Err(Error::invalid("symmetric_eigen", format!("{} entries for a {n}x{n} matrix", matrix.len())));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    Ok((values, vectors))
}

fn normalize_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|&&x| x != 0.0) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Top-`k` principal components of `samples` (each a flattened image).
///
/// When there are fewer samples than dimensions the eigenproblem is solved
/// on the `n x n` Gram matrix of centered samples and mapped back, which
/// gives the same subspace at a fraction of the cost. Each component's first
/// nonzero coefficient is made positive.
pub fn pca_fit(samples: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid("pca_fit", format!("need at least 2 samples, got {n}")));
    }
    let d = samples[0].len();
    if let Some(i) = samples.iter().position(|s| s.len() != d) {
        return Err(Error::invalid("pca_fit", format!("sample {i} has length {}, expected {d}", samples[i].len())));
    }
    if k == 0 || k > (n - 1).min(d) {
        return Err(Error::invalid(
            "pca_fit",
            format!("k = {k} outside 1..={} for {n} samples of dimension {d}", (n - 1).min(d)),
        ));
    }
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let denom = (n - 1) as f64;

    let (variances, mut components): (Vec<f64>, Vec<Vec<f64>>) = if n <= d {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let g = dot(&centered[i], &centered[j]);
                gram[i * n + j] = g;
                gram[j * n + i] = g;
            }
        }
        let (values, vectors) = symmetric_eigen(&gram, n)?;
        let tol = values[0].abs().max(f64::MIN_POSITIVE) * 1e-12;
        let mut comps = Vec::with_capacity(k);
        for (idx, u) in vectors.iter().take(k).enumerate() {
            if values[idx] <= tol {
                return Err(Error::invalid("pca_fit", format!("data spans only {idx} dimensions, asked for {k}")));
            }
            let mut c = vec![0.0; d];
            for (ui, row) in u.iter().zip(&centered) {
                for (cj, x) in c.iter_mut().zip(row) {
                    *cj += ui * x;
                }
            }
            let norm = dot(&c, &c).sqrt();
            c.iter_mut().for_each(|x| *x /= norm);
            comps.push(c);
        }
        (values[..k].iter().map(|v| v / denom).collect(), comps)
    } else {
        let mut cov = vec![0.0; d * d];
        for row in &centered {
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] += row[i] * row[j];
                }
            }
        }
        let (values, vectors) = symmetric_eigen(&cov, d)?;
        (values[..k].iter().map(|v| v / denom).collect(), vectors.into_iter().take(k).collect())
    };
    components.iter_mut().for_each(|c| normalize_sign(c));
    Ok(PcaModel {
        mean,
        components,
        variances,
    })
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("cosine_similarity", format!("lengths {} and {} differ", a.len(), b.len())));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine_similarity", "zero vector has no direction"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

/// Gallery indices by descending cosine similarity to `query`; equal
/// similarities keep ascending index order.
pub fn cosine_match(query: &[f64], gallery: &[Vec<f64>]) -> Result<Vec<usize>> {
    let sims = gallery
        .iter()
        .map(|g| cosine_similarity(query, g))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..gallery.len()).collect();
    order.sort_by(|&i, &j| sims[j].total_cmp(&sims[i]));
    Ok(order)
}

/// Cumulative match score: entry `n - 1` is the fraction of queries whose
/// true gallery entry is among the top `n` matches.
#[derive(Debug, Clone, PartialEq)]
pub struct CmsCurve {
    scores: Vec<f64>,
}

impl CmsCurve {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn max_rank(&self) -> usize {
        self.scores.len()
    }

    /// Score at 1-based `rank`.
    pub fn at(&self, rank: usize) -> Option<f64> {
        rank.checked_sub(1).and_then(|i| self.scores.get(i)).copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,score\n");
        for (i, s) in self.scores.iter().enumerate() {
            let _ = writeln!(out, "{},{s:.6}", i + 1);
        }
        out
    }
}

/// Ranks the gallery for every query; `true_ids[q]` is the index of query
/// `q`'s true match.
pub fn cms(queries: &[Vec<f64>], gallery: &[Vec<f64>], true_ids: &[usize], max_rank: usize) -> Result<CmsCurve> {
    if queries.is_empty() {
        return Err(Error::invalid("cms", "no queries"));
    }
    if true_ids.len() != queries.len() {
        return Err(Error::invalid(
            "cms",
            format!("{} identities for {} queries", true_ids.len(), queries.len()),
        ));
    }
    if let Some(q) = true_ids.iter().position(|&id| id >= gallery.len()) {
        return Err(Error::invalid(
            "cms",
            format!("query {q} names gallery entry {} of {}", true_ids[q], gallery.len()),
        ));
    }
    if max_rank == 0 || max_rank > gallery.len() {
        return Err(Error::invalid("cms", format!("max rank {max_rank} outside 1..={}", gallery.len())));
    }
    let mut hits = vec![0usize; max_rank];
    for (q, &id) in queries.iter().zip(true_ids) {
        let ranking = cosine_match(q, gallery)?;
        let pos = ranking.iter().position(|&g| g == id).expect("every index is ranked");
        if pos < max_rank {
            hits[pos] += 1;
        }
    }
    let n = queries.len() as f64;
    let mut acc = 0;
    let scores = hits
        .iter()
        .map(|h| {
            acc += h;
            acc as f64 / n
        })
        .collect();
    Ok(CmsCurve { scores })
}

/// Fits PCA on the gallery, projects queries and gallery, and scores the
/// ranking where query `i` belongs to gallery entry `i`.
pub fn pca_cms(queries: &[Vec<f64>], gallery: &[Vec<f64>], k: usize, max_rank: usize) -> Result<CmsCurve> {
    if queries.len() != gallery.len() {
        return Err(Error::invalid(
            "pca_cms",
            format!("{} queries for {} gallery entries", queries.len(), gallery.len()),
        ));
    }
    let model = pca_fit(gallery, k)?;
    let project = |set: &[Vec<f64>]| set.iter().map(|x| model.project(x)).collect::<Result<Vec<_>>>();
    let ids: Vec<usize> = (0..queries.len()).collect();
    cms(&project(queries)?, &project(gallery)?, &ids, max_rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn two_samples_give_their_difference() {
        let m = pca_fit(&[vec![1.0, 2.0, 0.0], vec![3.0, 2.0, 4.0]], 1).unwrap();
        let c = &m.components()[0];
        let diff = [2.0, 0.0, 4.0];
        let norm = 20f64.sqrt();
        for (a, b) in c.iter().zip(diff) {
            assert!((a - b / norm).abs() < 1e-12);
        }
        assert_eq!(m.mean(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn k_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = random_rows(&mut rng, 5, 3);
        assert!(pca_fit(&rows, 3).is_ok());
        assert!(pca_fit(&rows, 4).is_err());
        assert!(pca_fit(&rows, 0).is_err());
        assert!(pca_fit(&rows[..1], 1).is_err());
        let rows = random_rows(&mut rng, 4, 10);
        assert!(pca_fit(&rows, 3).is_ok());
        assert!(pca_fit(&rows, 4).is_err());
    }

    #[test]
    fn components_orthonormal_and_sign_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, d) in [(6, 15), (20, 4)] {
            let m = pca_fit(&random_rows(&mut rng, n, d), 3).unwrap();
            for (i, a) in m.components().iter().enumerate() {
                assert!(a.iter().find(|&&x| x != 0.0).unwrap() > &0.0);
                for (j, b) in m.components().iter().enumerate() {
                    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-8);
                }
            }
            assert!(m.variances().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn reconstruction_error_shrinks_with_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows = random_rows(&mut rng, 8, 12);
        let err = |k| {
            let m = pca_fit(&rows, k).unwrap();
            rows.iter()
                .map(|r| {
                    let back = m.reconstruct(&m.project(r).unwrap()).unwrap();
                    r.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                })
                .sum::<f64>()
        };
        let errs: Vec<f64> = (1..=7).map(err).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{errs:?}");
        assert!(errs[6] < 1e-20);
    }

    #[test]
    fn cosine_rules() {
        let gallery = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 0.0]];
        assert_eq!(cosine_match(&[5.0, 0.0], &gallery).unwrap(), vec![0, 3, 2, 1]);
        assert_eq!(cosine_match(&[0.0, 1.0], &gallery[..2]).unwrap(), vec![1, 0]);
        assert!(cosine_match(&[0.0, 0.0], &gallery).is_err());
        assert!(cosine_match(&[1.0, 0.0], &[vec![0.0, 0.0]]).is_err());
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn cms_identity_and_adversarial() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_rows(&mut rng, 6, 5);
        let ids: Vec<usize> = (0..6).collect();
        let c = cms(&g, &g, &ids, 6).unwrap();
        assert_eq!(c.scores(), &[1.0; 6]);

        // Gallery on a half circle; the true match is always the farthest.
        let angles = [0.0f64, 0.5, 1.0, 1.5];
        let gallery: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
        let c = cms(&[vec![1.0, 0.0]], &gallery, &[3], 4).unwrap();
        assert_eq!(c.scores(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(c.to_csv(), "rank,score\n1,0.000000\n2,0.000000\n3,0.000000\n4,1.000000\n");
    }

    #[test]
    fn cms_rejects_bad_identities() {
        let g = vec![vec![1.0], vec![2.0]];
        assert!(cms(&g, &g, &[0], 2).is_err());
        assert!(cms(&g, &g, &[0, 2], 2).is_err());
        assert!(cms(&g, &g, &[0, 1], 3).is_err());
    }
}
