//! Spectrum of the uncentered sample covariance `Σ̂ = (1/n)·X·Xᵀ`.
//!
//! When `d > n` the `n × n` dual matrix `(1/n)·XᵀX` is decomposed instead; it
//! shares the non-zero eigenvalues of `Σ̂`, and each primal eigenvector is
//! recovered as `Û_i = X·V_i / sqrt(n·λ̂_i)`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GeneratedDataset;

/// Relative cut-off below which eigenvalues are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    Primal,
    Dual,
}

/// Which covariance estimate to decompose.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CovarianceKind {
    /// `(1/n)·XXᵀ`; the form every consistency check uses.
    #[default]
    Uncentered,
    /// Row-centered with divisor `n − 1`. Exploratory only.
    Centered,
}

/// Sorted eigenpairs of the sample covariance.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Length `min(d, n)`, descending, sub-tolerance values set to zero.
    pub eigenvalues: Vec<f64>,
    /// `d × r`, one column per retained eigenvalue.
    pub eigenvectors: DMatrix<f64>,
    pub method: SpectralMethod,
    pub d: usize,
    pub n: usize,
}

impl SpectralDecomposition {
    /// Number of eigenvectors available.
    pub fn retained(&self) -> usize {
        self.eigenvectors.ncols()
    }

    /// `Û_i` (0-based).
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }
}

/// Symmetric eigendecomposition, eigenvalues descending.
///
/// Eigenvectors follow the sign convention of [`fix_sign`]. Exactly equal
/// eigenvalues are ordered by their sign-fixed eigenvectors,
/// lexicographically descending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let k = m.nrows();
    if k != m.ncols() {
        return Err(Error::Data("matrix must be square".into()));
    }
    if k == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let fm = faer::Mat::<f64>::from_fn(k, k, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let evd = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..k)
        .map(|c| {
            let mut v = DVector::from_fn(k, |r, _| u[(r, c)]);
            fix_sign(&mut v);
            (s[c], v)
        })
        .collect();
    sort_pairs(&mut pairs);
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = DMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    Ok((values, vectors))
}

/// Makes the entry of largest magnitude positive (first one on ties).
pub fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if best_abs > 0.0 && v[best] < 0.0 {
        v.neg_mut();
    }
}

fn sort_pairs(pairs: &mut [(f64, DVector<f64>)]) {
    pairs.sort_by(|a, b| match b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal) {
        Ordering::Equal => {
            for (x, y) in a.1.iter().zip(b.1.iter()) {
                match y.partial_cmp(x).unwrap_or(Ordering::Equal) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        }
        o => o,
    });
}

fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Data("data matrix must be non-empty".into()));
    }
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % x.nrows(), pos / x.nrows());
        return Err(Error::Data(format!("non-finite entry at ({}, {})", r + 1, c + 1)));
    }
    Ok(())
}

/// Spectrum of `(1/n)·XXᵀ` for a `d × n` data matrix.
pub fn sample_covariance_spectrum(x: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    covariance_spectrum(x, CovarianceKind::Uncentered)
}

/// Spectrum of the chosen covariance estimate.
pub fn covariance_spectrum(x: &DMatrix<f64>, kind: CovarianceKind) -> Result<SpectralDecomposition> {
    check_finite(x)?;
    let (d, n) = x.shape();
    let (data, divisor) = match kind {
        CovarianceKind::Uncentered => (None, n as f64),
        CovarianceKind::Centered => {
            if n < 2 {
                return Err(Error::Data("centered covariance needs n >= 2".into()));
            }
            let mut c = x.clone();
            for mut row in c.row_iter_mut() {
                let mean = row.mean();
                row.add_scalar_mut(-mean);
            }
            (Some(c), (n - 1) as f64)
        }
    };
    let x = data.as_ref().unwrap_or(x);
    if d <= n {
        primal(x, divisor)
    } else {
        dual(x, divisor)
    }
}

/// Eigen-decomposition through the `d × d` covariance, forced.
pub fn primal_spectrum(x: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    check_finite(x)?;
    let n = x.ncols() as f64;
    primal(x, n)
}

/// Eigen-decomposition through the `n × n` dual matrix, forced.
pub fn dual_spectrum(x: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    check_finite(x)?;
    let n = x.ncols() as f64;
    dual(x, n)
}

fn primal(x: &DMatrix<f64>, divisor: f64) -> Result<SpectralDecomposition> {
    let (d, n) = x.shape();
    let cov = (x * x.transpose()) / divisor;
    let (mut values, vectors) = symmetric_eigen(&cov)?;
    let keep = d.min(n);
    values.truncate(keep);
    zero_small(&mut values);
    Ok(SpectralDecomposition {
        eigenvalues: values,
        eigenvectors: vectors.columns(0, keep).into_owned(),
        method: SpectralMethod::Primal,
        d,
        n,
    })
}

fn dual(x: &DMatrix<f64>, divisor: f64) -> Result<SpectralDecomposition> {
    let (d, n) = x.shape();
    let gram = x.tr_mul(x) / divisor;
    let (mut values, v) = symmetric_eigen(&gram)?;
    let keep = d.min(n);
    values.truncate(keep);
    zero_small(&mut values);
    let rank = values.iter().take_while(|&&l| l > 0.0).count();
    let mut cols = Vec::with_capacity(rank);
    let xv = x * v.columns(0, rank);
    for (i, &lambda) in values.iter().enumerate().take(rank) {
        let mut u: DVector<f64> = xv.column(i) / (divisor * lambda).sqrt();
        fix_sign(&mut u);
        cols.push(u);
    }
    let eigenvectors = if cols.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    Ok(SpectralDecomposition {
        eigenvalues: values,
        eigenvectors,
        method: SpectralMethod::Dual,
        d,
        n,
    })
}

fn zero_small(values: &mut [f64]) {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    for v in values.iter_mut() {
        if *v <= RANK_TOL * top || *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Eigenvalues (descending) of the spike and noise parts of the dual matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AbSplit {
    /// `(1/n)·Σ_{i≤K} Ỹ_i Ỹ_iᵀ`, `Ỹ_i` the `n`-vector of coefficients on `U_i`.
    pub a: Vec<f64>,
    /// `(1/n)·Σ_{i>K} Ỹ_i Ỹ_iᵀ`.
    pub b: Vec<f64>,
}

impl AbSplit {
    /// Checks `λ_i(A) + λ_n(B) ≤ λ̂_i ≤ λ_i(A) + λ_1(B)` for every `i`.
    ///
    /// `dual_eigenvalues` are the `n` eigenvalues of `(1/n)·XᵀX`. The only
    /// allowance is floating-point round-off, a few ulps of `‖A‖ + ‖B‖`.
    pub fn weyl_violations(&self, dual_eigenvalues: &[f64]) -> Vec<usize> {
        let n = self.a.len();
        let b_max = self.b.first().copied().unwrap_or(0.0);
        let b_min = self.b.last().copied().unwrap_or(0.0);
        let a_max = self.a.first().copied().unwrap_or(0.0);
        let slack = 64.0 * f64::EPSILON * (n as f64) * (a_max.abs() + b_max.abs()).max(1e-300);
        (0..n.min(dual_eigenvalues.len()))
            .filter(|&i| {
                let l = dual_eigenvalues[i];
                l < self.a[i] + b_min - slack || l > self.a[i] + b_max + slack
            })
            .collect()
    }
}

/// Splits the dual matrix into its first `k` directions and the rest.
pub fn ab_split_eigenvalues(dataset: &GeneratedDataset, k: usize) -> Result<AbSplit> {
    let y = dataset.coefficients().ok_or_else(|| {
        Error::Capability("A/B split needs retained mixture coefficients".into())
    })?;
    let d = dataset.d();
    if k == 0 || k >= d {
        return Err(Error::Config(format!("need 1 <= K < d, got K = {k}, d = {d}")));
    }
    let n = dataset.n as f64;
    let head = y.rows(0, k);
    let tail = y.rows(k, d - k);
    let a = head.tr_mul(&head) / n;
    let b = tail.tr_mul(&tail) / n;
    Ok(AbSplit { a: symmetric_eigen(&a)?.0, b: symmetric_eigen(&b)?.0 })
}

/// All `n` eigenvalues of the dual matrix `(1/n)·XᵀX`, descending, unclipped.
pub fn dual_eigenvalues(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(x)?;
    let gram = x.tr_mul(x) / x.ncols() as f64;
    Ok(symmetric_eigen(&gram)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_variable_specific, generate, DirectionSpec, MixtureModelSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(d: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(d, n, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn identity_data() {
        let s = sample_covariance_spectrum(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(s.method, SpectralMethod::Primal);
        for l in &s.eigenvalues {
            assert!((l - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn single_row() {
        let x = DMatrix::from_row_slice(1, 2, &[2.0, -2.0]);
        let s = sample_covariance_spectrum(&x).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert!((s.eigenvalues[0] - 4.0).abs() < 1e-12);
        assert_eq!(s.eigenvectors[(0, 0)], 1.0);
    }

    #[test]
    fn primal_and_dual_agree_on_tall_instance() {
        let x = gaussian(5, 4, 17);
        let p = primal_spectrum(&x).unwrap();
        let q = dual_spectrum(&x).unwrap();
        assert_eq!(q.method, SpectralMethod::Dual);
        assert_eq!(p.eigenvalues.len(), 4);
        for i in 0..4 {
            assert!((p.eigenvalues[i] - q.eigenvalues[i]).abs() < 1e-10);
            let diff = (p.vector(i) - q.vector(i)).abs().max();
            assert!(diff < 1e-8, "column {i} differs by {diff}");
        }
        // d > n takes the dual path automatically
        assert_eq!(sample_covariance_spectrum(&x).unwrap().method, SpectralMethod::Dual);
    }

    #[test]
    fn rank_deficient_dual_omits_vectors() {
        // two identical samples: rank 1
        let col = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let x = DMatrix::from_columns(&[col.clone(), col]);
        let s = sample_covariance_spectrum(&x).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert_eq!(s.eigenvalues[1], 0.0);
        assert_eq!(s.retained(), 1);
        assert!((s.eigenvalues[0] - 30.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_finite() {
        let mut x = DMatrix::identity(3, 3);
        x[(1, 2)] = f64::NAN;
        assert!(matches!(sample_covariance_spectrum(&x), Err(Error::Data(_))));
    }

    #[test]
    fn residual_and_orthonormality() {
        for &(d, n) in &[(6usize, 9usize), (12, 5)] {
            let x = gaussian(d, n, (d * 31 + n) as u64);
            let s = sample_covariance_spectrum(&x).unwrap();
            let cov = (&x * x.transpose()) / n as f64;
            let top = s.eigenvalues[0].max(1.0);
            for i in 0..s.retained() {
                let u = s.vector(i);
                let r = (&cov * &u - &u * s.eigenvalues[i]).norm();
                assert!(r <= 1e-6 * top);
            }
            let g = s.eigenvectors.tr_mul(&s.eigenvectors);
            let dev = (g - DMatrix::identity(s.retained(), s.retained())).abs().max();
            assert!(dev <= 1e-8);
        }
    }

    #[test]
    fn sign_convention() {
        let x = gaussian(4, 10, 2);
        let s = sample_covariance_spectrum(&x).unwrap();
        for i in 0..s.retained() {
            let v = s.vector(i);
            let imax = v.iamax();
            assert!(v[imax] > 0.0);
        }
    }

    #[test]
    fn centered_option_removes_row_means() {
        let mut x = gaussian(3, 8, 5);
        x.row_mut(0).add_scalar_mut(100.0);
        let c = covariance_spectrum(&x, CovarianceKind::Centered).unwrap();
        let u = sample_covariance_spectrum(&x).unwrap();
        assert!(u.eigenvalues[0] > 1000.0);
        assert!(c.eigenvalues[0] < 100.0);
    }

    #[test]
    fn rank_one_a_part() {
        let spec = MixtureModelSpec::standard(vec![DirectionSpec::constant(1.0); 6]);
        let ds = generate(&spec, 8, 4).unwrap();
        let ab = ab_split_eigenvalues(&ds, 1).unwrap();
        let direct: f64 = ds.x.row(0).iter().map(|v| v * v).sum::<f64>() / 8.0;
        assert!((ab.a[0] - direct).abs() < 1e-12);
        let nonzero = ab.a.iter().filter(|&&l| l > 1e-12 * ab.a[0]).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn ab_split_needs_coefficients_and_valid_k() {
        let spec = build_variable_specific(5, &[1], 10.0, 0.2).unwrap();
        let ds = crate::model::generate_with(
            &spec,
            4,
            1,
            crate::model::GenerateOptions { retain_coefficients: Some(false) },
        )
        .unwrap();
        assert!(matches!(ab_split_eigenvalues(&ds, 1), Err(Error::Capability(_))));
        let ds = generate(&spec, 4, 1).unwrap();
        assert!(ab_split_eigenvalues(&ds, 5).is_err());
        assert!(ab_split_eigenvalues(&ds, 0).is_err());
    }

    #[test]
    fn weyl_sandwich_on_spiked_instance() {
        let spec = build_variable_specific(30, &[1, 2, 3], 40.0, 0.3).unwrap();
        let ds = generate(&spec, 12, 8).unwrap();
        let ab = ab_split_eigenvalues(&ds, 3).unwrap();
        let l = dual_eigenvalues(&ds.x).unwrap();
        assert!(ab.weyl_violations(&l).is_empty());
        // at most K non-zero eigenvalues in A
        assert!(ab.a.iter().skip(3).all(|v| v.abs() < 1e-9 * ab.a[0]));
    }
}
