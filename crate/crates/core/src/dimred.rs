//! Principal component analysis of signal rows, including the mixed fit
//! that pools in-domain and out-of-domain rows to widen the basis.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, Matrix};
use crate::scalar::Scalar;

pub const DEFAULT_COMPONENTS: usize = 10;

/// Default number of in-domain rows kept by the mixed fit.
pub const DEFAULT_IN_DOMAIN_TARGET: usize = 2000;

/// Row counts that went into a mixed fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixInfo {
    pub in_domain_rows: usize,
    pub out_domain_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel<T> {
    pub mean: Vec<T>,
    /// `k` orthonormal rows.
    pub components: Matrix<T>,
    /// Sample variance (divisor `n - 1`) along each component, non-increasing.
    pub explained_variance: Vec<T>,
    /// Sum of the per-feature sample variances.
    pub total_variance: T,
    pub n_samples: usize,
    pub mix: Option<MixInfo>,
}

impl<T: Scalar> PcaModel<T> {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Scores: `components * (row - mean)`.
    pub fn transform(&self, row: &[T]) -> Result<Vec<T>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: row.len() });
        }
        let centered: Vec<T> = row.iter().zip(&self.mean).map(|(&x, &m)| x - m).collect();
        Ok(self.components.iter_rows().map(|c| dot(c, &centered)).collect())
    }

    /// `mean + components^T * scores`.
    pub fn reconstruct(&self, scores: &[T]) -> Result<Vec<T>> {
        if scores.len() != self.n_components() {
            return Err(Error::DimensionMismatch { expected: self.n_components(), got: scores.len() });
        }
        let mut out = self.mean.clone();
        for (c, &s) in self.components.iter_rows().zip(scores) {
            for (o, &x) in out.iter_mut().zip(c) {
                *o = *o + s * x;
            }
        }
        Ok(out)
    }

    pub fn transform_rows(&self, rows: &Matrix<T>) -> Result<Matrix<T>> {
        if rows.cols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rows.cols() });
        }
        let mut out = Matrix::zeros(rows.rows(), self.n_components());
        for (i, r) in rows.iter_rows().enumerate() {
            out.row_mut(i).copy_from_slice(&self.transform(r)?);
        }
        Ok(out)
    }

    /// Mean over rows of the squared reconstruction residual divided by the
    /// row length, i.e. the per-element mean squared error.
    pub fn recon_error(&self, rows: &Matrix<T>) -> Result<T> {
        if rows.rows() == 0 {
            return Ok(T::zero());
        }
        let mut total = T::zero();
        for r in rows.iter_rows() {
            let rec = self.reconstruct(&self.transform(r)?)?;
            total = total + r.iter().zip(&rec).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>();
        }
        Ok(total / T::from_usize_lossy(rows.rows() * self.dim()))
    }
}

fn column_mean<T: Scalar>(rows: &Matrix<T>) -> Vec<T> {
    let mut mean = vec![T::zero(); rows.cols()];
    for r in rows.iter_rows() {
        for (m, &x) in mean.iter_mut().zip(r) {
            *m = *m + x;
        }
    }
    let n = T::from_usize_lossy(rows.rows());
    mean.iter_mut().for_each(|m| *m = *m / n);
    mean
}

/// Sample covariance of the rows.
fn covariance<T: Scalar>(rows: &Matrix<T>, mean: &[T]) -> Matrix<T> {
    let p = rows.cols();
    let mut cov = Matrix::zeros(p, p);
    let mut centered = vec![T::zero(); p];
    for r in rows.iter_rows() {
        for ((c, &x), &m) in centered.iter_mut().zip(r).zip(mean) {
            *c = x - m;
        }
        for i in 0..p {
            let ci = centered[i];
            if ci == T::zero() {
                continue;
            }
            let row = &mut cov.row_mut(i)[i..];
            for (o, &cj) in row.iter_mut().zip(&centered[i..]) {
                *o = *o + ci * cj;
            }
        }
    }
    let denom = T::from_usize_lossy(rows.rows().saturating_sub(1).max(1));
    for i in 0..p {
        for j in i..p {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Eigenvalues of the sample covariance, descending; all `dim` of them.
pub fn variance_spectrum<T: Scalar>(rows: &Matrix<T>) -> Vec<T> {
    let mean = column_mean(rows);
    symmetric_eigen(&covariance(rows, &mean)).0
}

/// Top-`k` principal axes of the rows.
///
/// Components come from the eigendecomposition of the sample covariance.
/// Each component's sign is chosen so that its largest-magnitude entry is
/// positive. Directions whose variance is below `dim * eps` relative to the
/// leading one count as absent; asking for more components than remain is a
/// `RankDeficient` error that reports the usable count.
pub fn pca_fit<T: Scalar>(rows: &Matrix<T>, k: usize) -> Result<PcaModel<T>> {
    let (n, p) = (rows.rows(), rows.cols());
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("cannot keep {k} of {p} components")));
    }
    if n < k {
        return Err(Error::RankDeficient { requested: k, usable: n.saturating_sub(1) });
    }
    if rows.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input".into()));
    }
    let mean = column_mean(rows);
    let cov = covariance(rows, &mean);
    let total_variance = (0..p).map(|i| cov[(i, i)]).sum();
    let (values, vectors) = symmetric_eigen(&cov);
    let floor = values[0].max(T::zero()) * T::from_usize_lossy(p) * T::epsilon();
    let usable = values.iter().take_while(|&&v| v > floor).count();
    if usable < k {
        return Err(Error::RankDeficient { requested: k, usable });
    }
    let mut components = Matrix::zeros(k, p);
    for r in 0..k {
        let v = vectors.row(r);
        let lead = v.iter().copied().fold(T::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if lead < T::zero() { -T::one() } else { T::one() };
        for (o, &x) in components.row_mut(r).iter_mut().zip(v) {
            *o = sign * x;
        }
    }
    Ok(PcaModel { mean, components, explained_variance: values[..k].to_vec(), total_variance, n_samples: n, mix: None })
}

/// Fits on the union of `in_domain` (randomly thinned to `in_domain_target`
/// rows when larger) and all of `out_domain`.
pub fn pca_fit_mixed<T: Scalar>(
    in_domain: &Matrix<T>,
    out_domain: &Matrix<T>,
    k: usize,
    in_domain_target: Option<usize>,
    seed: u64,
) -> Result<PcaModel<T>> {
    if in_domain.rows() == 0 || out_domain.rows() == 0 {
        return Err(Error::InvalidArgument("mixed fit needs rows from both domains".into()));
    }
    let kept = match in_domain_target {
        Some(t) if t < in_domain.rows() => {
            let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(seed), in_domain.rows(), t).into_vec();
            idx.sort_unstable();
            in_domain.select_rows(&idx)
        }
        _ => in_domain.clone(),
    };
    let mut model = pca_fit(&kept.vstack(out_domain), k)?;
    model.mix = Some(MixInfo { in_domain_rows: kept.rows(), out_domain_rows: out_domain.rows() });
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_matrix(n: usize, p: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(n, p, (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn assert_orthonormal(c: &Matrix<f64>, tol: f64) {
        let g = c.matmul(&c.transpose());
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < tol, "({i},{j}) = {}", g[(i, j)]);
            }
        }
    }

    #[test]
    fn line_in_high_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dir: Vec<f64> = {
            let v: Vec<f64> = (0..451).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = dot(&v, &v).sqrt();
            v.iter().map(|x| x / n).collect()
        };
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                let t: f64 = rng.random_range(-5.0..5.0);
                dir.iter().map(|d| 0.3 + t * d).collect()
            })
            .collect();
        let m = Matrix::from_rows(&rows);
        let model = pca_fit(&m, 1).unwrap();
        let c = model.components.row(0);
        assert!((dot(c, &dir).abs() - 1.0).abs() < 1e-8);
        let spectrum = variance_spectrum(&m);
        assert!(spectrum[1..].iter().all(|v| v.abs() < 1e-10 * spectrum[0]));
        assert!(matches!(pca_fit(&m, 3), Err(Error::RankDeficient { requested: 3, usable: 1 })));
    }

    #[test]
    fn sign_rule_and_permutation_invariance() {
        let m = random_matrix(60, 12, 4);
        let a = pca_fit(&m, 5).unwrap();
        let mut idx: Vec<usize> = (0..60).rev().collect();
        idx.swap(3, 40);
        let b = pca_fit(&m.select_rows(&idx), 5).unwrap();
        for (x, y) in a.components.as_slice().iter().zip(b.components.as_slice()) {
            assert!((x - y).abs() < 1e-10);
        }
        for r in a.components.iter_rows() {
            let lead = r.iter().copied().fold(0.0_f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn full_rank_round_trip() {
        let m = random_matrix(500, 451, 5);
        let model = pca_fit(&m, 451).unwrap();
        assert_orthonormal(&model.components, 1e-8);
        assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        let total: f64 = model.explained_variance.iter().sum();
        assert!((total - model.total_variance).abs() < 1e-9 * model.total_variance);
        for r in m.iter_rows().take(20) {
            let back = model.reconstruct(&model.transform(r).unwrap()).unwrap();
            assert!(r.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-8));
        }
    }

    #[test]
    fn transform_edges() {
        let m = random_matrix(80, 20, 6);
        let model = pca_fit(&m, 4).unwrap();
        let s = model.transform(&model.mean).unwrap();
        assert!(s.iter().all(|&x| x == 0.0));
        let in_span = model.reconstruct(&[1.0, -2.0, 0.5, 0.25]).unwrap();
        let back = model.reconstruct(&model.transform(&in_span).unwrap()).unwrap();
        assert!(in_span.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-10));
        // Residual of an arbitrary row is orthogonal to every component.
        let row = m.row(7);
        let rec = model.reconstruct(&model.transform(row).unwrap()).unwrap();
        let resid: Vec<f64> = row.iter().zip(&rec).map(|(a, b)| a - b).collect();
        for c in model.components.iter_rows() {
            assert!(dot(c, &resid).abs() < 1e-8);
        }
        assert!(matches!(model.transform(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(model.reconstruct(&[0.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn recon_error_zero_cases() {
        let m = random_matrix(50, 10, 7);
        let model = pca_fit(&m, 3).unwrap();
        let means = Matrix::from_rows(&vec![model.mean.clone(); 4]);
        assert_eq!(model.recon_error(&means).unwrap(), 0.0);
        let spans = Matrix::from_rows(&[model.reconstruct(&[0.2, 0.1, -0.3]).unwrap()]);
        assert!(model.recon_error(&spans).unwrap() < 1e-20);
    }

    #[test]
    fn mixed_fit_bookkeeping() {
        let a = random_matrix(3000, 30, 8);
        let b = random_matrix(992, 30, 9);
        let model = pca_fit_mixed(&a, &b, 10, Some(DEFAULT_IN_DOMAIN_TARGET), 1).unwrap();
        assert_eq!(model.mix, Some(MixInfo { in_domain_rows: 2000, out_domain_rows: 992 }));
        assert_eq!(model.n_samples, 2992);
        assert!(pca_fit_mixed(&a, &Matrix::zeros(0, 30), 10, None, 1).is_err());
    }

    #[test]
    fn mixed_fit_matches_plain_fit_for_same_distribution() {
        // Correlated data with a clear 3-D principal subspace.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let basis = random_matrix(3, 40, 11);
        let draw = |n: usize, rng: &mut ChaCha8Rng| {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let w = [rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0), rng.random_range(-1.5..1.5)];
                    (0..40)
                        .map(|j| (0..3).map(|i| w[i] * basis[(i, j)]).sum::<f64>() + 0.01 * rng.random_range(-1.0..1.0))
                        .collect()
                })
                .collect();
            Matrix::from_rows(&rows)
        };
        let a = draw(1500, &mut rng);
        let b = draw(500, &mut rng);
        let plain = pca_fit(&a, 3).unwrap();
        let mixed = pca_fit_mixed(&a, &b, 3, Some(1000), 2).unwrap();
        // Largest principal angle between the subspaces via the smallest
        // singular value of P Q^T (3x3), from its Gram matrix spectrum.
        let m = plain.components.matmul(&mixed.components.transpose());
        let gram = m.matmul(&m.transpose());
        let (vals, _) = symmetric_eigen(&gram);
        let cos_min = vals[2].max(0.0).sqrt().min(1.0);
        let angle = cos_min.acos().to_degrees();
        assert!(angle < 5.0, "{angle}");
    }

    #[test]
    fn single_precision_fit() {
        let m = random_matrix(100, 8, 12);
        let m32 = Matrix::from_vec(100, 8, m.as_slice().iter().map(|&x| x as f32).collect());
        let model = pca_fit(&m32, 8).unwrap();
        let g = model.components.matmul(&model.components.transpose());
        for i in 0..8 {
            assert!((g[(i, i)] - 1.0).abs() < 1e-4);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn projection_idempotent(seed in 0u64..10_000, k in 1usize..8) {
            let m = random_matrix(40, 10, seed);
            let model = pca_fit(&m, k).unwrap();
            let scores: Vec<f64> = (0..k).map(|i| (i as f64 * 0.37 + seed as f64 * 1e-3).sin()).collect();
            let back = model.transform(&model.reconstruct(&scores).unwrap()).unwrap();
            for (a, b) in scores.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            assert_orthonormal(&model.components, 1e-8);
        }
    }
}
