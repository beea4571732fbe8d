//! The two-variance mixture model for outliers and its data generator.
//!
//! A sample is `X_j = Σ_i y_ij U_i` over an orthonormal basis `{U_i}`. Each
//! coefficient is `sqrt(tau1)·z_ij` with probability `1 - w` and
//! `sqrt(tau2)·z_ij` with probability `w`, where the `z_ij` are i.i.d. with
//! mean 0, variance 1 and finite fourth moment. Directions with `w > 0` are
//! outlier components; directions with `w = 0` are main or noise components.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::rng::StreamSeed;

/// Above this many entries the generator keeps only `X` and memberships.
pub const RETENTION_LIMIT: usize = 10_000_000;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// Variances and mixing weight for one direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionSpec {
    pub tau1: f64,
    pub tau2: f64,
    pub w: f64,
    /// Membership group, only consulted in coupled mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<u32>,
}

impl DirectionSpec {
    pub fn new(tau1: f64, tau2: f64, w: f64) -> Self {
        Self { tau1, tau2, w, group: None }
    }

    /// Pure noise/main direction with a single variance.
    pub fn constant(var: f64) -> Self {
        Self::new(var, var, 0.0)
    }

    pub fn is_outlier_component(&self) -> bool {
        self.w > 0.0
    }

    /// Exact coefficient variance `(1 - w)·tau1 + w·tau2`.
    pub fn population_variance(&self) -> f64 {
        (1.0 - self.w) * self.tau1 + self.w * self.tau2
    }

    fn validate(&self, i: usize) -> Result<()> {
        if !(self.tau1.is_finite() && self.tau1 >= 0.0) {
            return config_err(format!("direction {}: tau1 must be finite and >= 0", i + 1));
        }
        if !(self.tau2.is_finite() && self.tau2 >= 0.0) {
            return config_err(format!("direction {}: tau2 must be finite and >= 0", i + 1));
        }
        if !(0.0..=1.0).contains(&self.w) {
            return config_err(format!("direction {}: w must lie in [0, 1]", i + 1));
        }
        Ok(())
    }
}

/// Orthonormal basis `{U_i}` of the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basis {
    Standard,
    /// Columns of the basis, `matrix[i]` is `U_{i+1}`.
    Explicit { matrix: Vec<Vec<f64>> },
    /// Orthonormalised matrix of seeded standard normals.
    Random { seed: u64 },
}

impl Default for Basis {
    fn default() -> Self {
        Basis::Standard
    }
}

/// Distribution of the standardised draws `z_ij`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDist {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
}

impl NoiseDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseDist::Gaussian => rng.sample(StandardNormal),
            NoiseDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseDist::Uniform => {
                let h = 3f64.sqrt();
                rng.random_range(-h..h)
            }
        }
    }
}

/// How branch memberships are drawn across directions of one sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipMode {
    /// One Bernoulli draw per (direction, sample).
    #[default]
    Independent,
    /// Directions sharing a `group` id share one draw per sample.
    Coupled,
}

/// Full parameterisation of the mixture model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureModelSpec {
    pub d: usize,
    pub directions: Vec<DirectionSpec>,
    #[serde(default)]
    pub basis: Basis,
    #[serde(default)]
    pub noise_dist: NoiseDist,
    #[serde(default)]
    pub membership_mode: MembershipMode,
}

impl MixtureModelSpec {
    /// Standard basis, gaussian noise, independent memberships.
    pub fn standard(directions: Vec<DirectionSpec>) -> Self {
        Self {
            d: directions.len(),
            directions,
            basis: Basis::Standard,
            noise_dist: NoiseDist::Gaussian,
            membership_mode: MembershipMode::Independent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return config_err("d must be at least 1");
        }
        if self.directions.len() != self.d {
            return config_err(format!(
                "expected {} directions, got {}",
                self.d,
                self.directions.len()
            ));
        }
        for (i, dir) in self.directions.iter().enumerate() {
            dir.validate(i)?;
        }
        if self.membership_mode == MembershipMode::Coupled {
            let mut weights: BTreeMap<u32, f64> = BTreeMap::new();
            for (i, dir) in self.directions.iter().enumerate() {
                if let Some(g) = dir.group {
                    let w = *weights.entry(g).or_insert(dir.w);
                    if w != dir.w {
                        return config_err(format!(
                            "direction {}: coupled group {g} mixes weights {w} and {}",
                            i + 1,
                            dir.w
                        ));
                    }
                }
            }
        }
        match &self.basis {
            Basis::Standard | Basis::Random { .. } => Ok(()),
            Basis::Explicit { matrix } => {
                if matrix.len() != self.d || matrix.iter().any(|c| c.len() != self.d) {
                    return config_err("explicit basis must be d columns of length d");
                }
                let u = columns_to_matrix(matrix);
                if u.iter().any(|v| !v.is_finite()) {
                    return config_err("explicit basis has non-finite entries");
                }
                let dev = orthonormality_defect(&u);
                if dev > ORTHONORMAL_TOL {
                    return config_err(format!(
                        "explicit basis is not orthonormal (max |U'U - I| = {dev:e})"
                    ));
                }
                Ok(())
            }
        }
    }

    /// Indices (0-based) of directions with `w > 0`.
    pub fn outlier_indices(&self) -> Vec<usize> {
        (0..self.d).filter(|&i| self.directions[i].is_outlier_component()).collect()
    }

    /// Indices (0-based) of directions with `w = 0`.
    pub fn main_indices(&self) -> Vec<usize> {
        (0..self.d).filter(|&i| !self.directions[i].is_outlier_component()).collect()
    }

    /// Number of distinct coupled groups.
    pub fn group_count(&self) -> usize {
        let mut g: Vec<u32> = self.directions.iter().filter_map(|d| d.group).collect();
        g.sort_unstable();
        g.dedup();
        g.len()
    }

    /// Materialises the basis.
    pub fn resolve_basis(&self) -> Result<ResolvedBasis> {
        match &self.basis {
            Basis::Standard => Ok(ResolvedBasis::Standard(self.d)),
            Basis::Explicit { matrix } => Ok(ResolvedBasis::Matrix(columns_to_matrix(matrix))),
            Basis::Random { seed } => Ok(ResolvedBasis::Matrix(random_orthonormal(self.d, *seed))),
        }
    }
}

/// Basis held either implicitly (standard) or as a `d × d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum ResolvedBasis {
    Standard(usize),
    Matrix(DMatrix<f64>),
}

impl ResolvedBasis {
    pub fn dim(&self) -> usize {
        match self {
            ResolvedBasis::Standard(d) => *d,
            ResolvedBasis::Matrix(m) => m.nrows(),
        }
    }

    pub fn is_standard(&self) -> bool {
        matches!(self, ResolvedBasis::Standard(_))
    }

    /// Coordinates `Uᵀ v` of a vector in the basis.
    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            ResolvedBasis::Standard(_) => v.clone(),
            ResolvedBasis::Matrix(u) => u.tr_mul(v),
        }
    }

    /// `Uᵀ M` applied column-wise.
    pub fn coordinates_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            ResolvedBasis::Standard(_) => m.clone(),
            ResolvedBasis::Matrix(u) => u.tr_mul(m),
        }
    }

    /// Column `U_i` (0-based).
    pub fn direction(&self, i: usize) -> DVector<f64> {
        match self {
            ResolvedBasis::Standard(d) => {
                let mut e = DVector::zeros(*d);
                e[i] = 1.0;
                e
            }
            ResolvedBasis::Matrix(u) => u.column(i).into_owned(),
        }
    }
}

fn columns_to_matrix(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let d = cols.len();
    DMatrix::from_fn(d, d, |r, c| cols[c][r])
}

/// `max |UᵀU − I|` over all entries.
pub fn orthonormality_defect(u: &DMatrix<f64>) -> f64 {
    let g = u.tr_mul(u);
    let mut dev = 0.0f64;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((g[(r, c)] - target).abs());
        }
    }
    dev
}

/// Orthonormal `d × d` matrix from the QR factorisation of seeded normals.
///
/// The sign of each column is fixed so that `R` has a positive diagonal.
pub fn random_orthonormal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = StreamSeed::root(seed).child("basis").rng();
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..d {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Outliers that differ from the bulk only at single variables.
///
/// `outlier_vars` is 1-based. Listed variables get `(1, tau2, w)`, all others
/// `(1, 1, 0)`, standard basis.
pub fn build_variable_specific(
    d: usize,
    outlier_vars: &[usize],
    tau2: f64,
    w: f64,
) -> Result<MixtureModelSpec> {
    if d == 0 {
        return config_err("d must be at least 1");
    }
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return config_err("tau2 must be positive");
    }
    if !(0.0..=1.0).contains(&w) {
        return config_err("w must lie in [0, 1]");
    }
    let mut directions = vec![DirectionSpec::constant(1.0); d];
    for &v in outlier_vars {
        if v == 0 || v > d {
            return config_err(format!("outlier variable {v} outside 1..={d}"));
        }
        directions[v - 1] = DirectionSpec::new(1.0, tau2, w);
    }
    Ok(MixtureModelSpec::standard(directions))
}

/// Scatter outliers: every coordinate of an outlying sample is drawn at the
/// larger variance, decided by one Bernoulli(p) draw per sample.
pub fn build_scale_mixture(
    d: usize,
    sigma1_sq: f64,
    sigma2_sq: f64,
    p: f64,
) -> Result<MixtureModelSpec> {
    if d == 0 {
        return config_err("d must be at least 1");
    }
    if !(sigma1_sq > 0.0 && sigma2_sq > sigma1_sq && sigma2_sq.is_finite()) {
        return config_err("scale mixture needs sigma2_sq > sigma1_sq > 0");
    }
    if !(p > 0.0 && p < 1.0) {
        return config_err("scale mixture needs 0 < p < 1");
    }
    let dir = DirectionSpec {
        group: Some(0),
        ..DirectionSpec::new(sigma1_sq, sigma2_sq, p)
    };
    Ok(MixtureModelSpec {
        d,
        directions: vec![dir; d],
        basis: Basis::Standard,
        noise_dist: NoiseDist::Gaussian,
        membership_mode: MembershipMode::Coupled,
    })
}

/// Outliers shifted along a common direction `mu`.
///
/// `U_1 = mu/‖mu‖`; the remaining columns complete an orthonormal basis via
/// the Householder reflection that maps `e_1` to `U_1`. `base_cov_diag[i]`
/// is the base variance along the `i`-th constructed direction. Direction 1
/// carries `(σ1²‖mu‖² + v_1, σ2²‖mu‖² + v_1, p)`.
pub fn build_shifted(
    d: usize,
    mu: &[f64],
    sigma1_sq: f64,
    sigma2_sq: f64,
    p: f64,
    base_cov_diag: &[f64],
) -> Result<MixtureModelSpec> {
    if d == 0 || mu.len() != d || base_cov_diag.len() != d {
        return config_err("mu and base_cov_diag must have length d >= 1");
    }
    let norm_sq: f64 = mu.iter().map(|m| m * m).sum();
    if !(norm_sq > 0.0 && norm_sq.is_finite()) {
        return config_err("mu must be a finite non-zero vector");
    }
    if !(sigma1_sq >= 0.0 && sigma2_sq >= sigma1_sq && sigma2_sq.is_finite()) {
        return config_err("shifted outliers need sigma2_sq >= sigma1_sq >= 0");
    }
    if !(0.0..=1.0).contains(&p) {
        return config_err("p must lie in [0, 1]");
    }
    if base_cov_diag.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return config_err("base variances must be finite and >= 0");
    }
    let norm = norm_sq.sqrt();
    let u1 = DVector::from_iterator(d, mu.iter().map(|m| m / norm));
    let basis = householder_completion(&u1);

    let v1 = base_cov_diag[0];
    let mut directions: Vec<DirectionSpec> =
        base_cov_diag.iter().map(|&v| DirectionSpec::constant(v)).collect();
    directions[0] = DirectionSpec::new(sigma1_sq * norm_sq + v1, sigma2_sq * norm_sq + v1, p);

    let matrix = (0..d).map(|c| basis.column(c).iter().copied().collect()).collect();
    Ok(MixtureModelSpec {
        d,
        directions,
        basis: Basis::Explicit { matrix },
        noise_dist: NoiseDist::Gaussian,
        membership_mode: MembershipMode::Independent,
    })
}

/// Orthogonal matrix whose first column is the unit vector `u`.
fn householder_completion(u: &DVector<f64>) -> DMatrix<f64> {
    let d = u.len();
    let mut v = -u.clone();
    v[0] += 1.0;
    let vv = v.dot(&v);
    if vv < 1e-30 {
        return DMatrix::identity(d, d);
    }
    DMatrix::identity(d, d) - (&v * v.transpose()) * (2.0 / vv)
}

/// Options for [`generate_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerateOptions {
    /// `None` retains coefficients iff `d·n` is below [`RETENTION_LIMIT`].
    pub retain_coefficients: Option<bool>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self { retain_coefficients: None }
    }
}

/// A generated data matrix with its ground truth.
#[derive(Clone, Debug)]
pub struct GeneratedDataset {
    /// `d × n`, column `j` is sample `X_j`.
    pub x: DMatrix<f64>,
    /// Per direction, sorted 0-based indices of samples drawn from the
    /// `tau2` branch.
    pub memberships: Vec<Vec<usize>>,
    pub spec: MixtureModelSpec,
    pub basis: ResolvedBasis,
    pub seed: u64,
    pub n: usize,
    coefficients: Option<DMatrix<f64>>,
    retained: bool,
}

impl GeneratedDataset {
    pub fn d(&self) -> usize {
        self.spec.d
    }

    /// Mixture coefficients `Y` with `X = U·Y`, when retained.
    pub fn coefficients(&self) -> Option<&DMatrix<f64>> {
        if !self.retained {
            return None;
        }
        match self.basis {
            ResolvedBasis::Standard(_) => Some(&self.x),
            ResolvedBasis::Matrix(_) => self.coefficients.as_ref(),
        }
    }

    /// `true` for samples in at least one membership set.
    pub fn outlier_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n];
        for s in &self.memberships {
            for &j in s {
                flags[j] = true;
            }
        }
        flags
    }

    /// Memberships keyed by 1-based direction index with 1-based samples,
    /// for every outlier component.
    pub fn memberships_one_based(&self) -> BTreeMap<usize, Vec<usize>> {
        self.spec
            .outlier_indices()
            .into_iter()
            .map(|i| (i + 1, self.memberships[i].iter().map(|j| j + 1).collect()))
            .collect()
    }
}

/// Draws `n` samples from the model with default options.
pub fn generate(spec: &MixtureModelSpec, n: usize, seed: u64) -> Result<GeneratedDataset> {
    generate_with(spec, n, seed, GenerateOptions::default())
}

/// Draws `n` samples from the model.
///
/// Membership draws and `z` draws use separate streams so that changing the
/// variances under a fixed seed leaves the membership pattern untouched.
pub fn generate_with(
    spec: &MixtureModelSpec,
    n: usize,
    seed: u64,
    opts: GenerateOptions,
) -> Result<GeneratedDataset> {
    spec.validate()?;
    if n == 0 {
        return config_err("n must be at least 1");
    }
    let d = spec.d;
    let root = StreamSeed::root(seed);
    let memberships = draw_memberships(spec, n, &root);

    let mut branch = vec![false; d * n];
    for (i, s) in memberships.iter().enumerate() {
        for &j in s {
            branch[j * d + i] = true;
        }
    }
    let sd1: Vec<f64> = spec.directions.iter().map(|x| x.tau1.sqrt()).collect();
    let sd2: Vec<f64> = spec.directions.iter().map(|x| x.tau2.sqrt()).collect();

    let mut rng = root.child("z").rng();
    let mut y = DMatrix::<f64>::zeros(d, n);
    for j in 0..n {
        for i in 0..d {
            let z = spec.noise_dist.sample(&mut rng);
            let sd = if branch[j * d + i] { sd2[i] } else { sd1[i] };
            y[(i, j)] = sd * z;
        }
    }

    let basis = spec.resolve_basis()?;
    let retained = opts.retain_coefficients.unwrap_or(d.saturating_mul(n) < RETENTION_LIMIT);
    let (x, coefficients) = match &basis {
        ResolvedBasis::Standard(_) => (y, None),
        ResolvedBasis::Matrix(u) => {
            let x = u * &y;
            (x, if retained { Some(y) } else { None })
        }
    };
    Ok(GeneratedDataset {
        x,
        memberships,
        spec: spec.clone(),
        basis,
        seed,
        n,
        coefficients,
        retained,
    })
}

fn draw_memberships(spec: &MixtureModelSpec, n: usize, root: &StreamSeed) -> Vec<Vec<usize>> {
    let stream = root.child("membership");
    let bernoulli = |seed: StreamSeed, w: f64| -> Vec<usize> {
        if w <= 0.0 {
            return Vec::new();
        }
        let mut rng = seed.rng();
        (0..n).filter(|_| rng.random::<f64>() < w).collect()
    };
    let mut group_draws: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    spec.directions
        .iter()
        .enumerate()
        .map(|(i, dir)| match (spec.membership_mode, dir.group) {
            (MembershipMode::Coupled, Some(g)) => group_draws
                .entry(g)
                .or_insert_with(|| bernoulli(stream.child_index("group", u64::from(g)), dir.w))
                .clone(),
            _ => bernoulli(stream.child_index("direction", i as u64), dir.w),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn variable_specific_layout() {
        let spec = build_variable_specific(3, &[2], 100.0, 0.1).unwrap();
        assert_eq!(spec.directions[1], DirectionSpec::new(1.0, 100.0, 0.1));
        assert_eq!(spec.directions[0], DirectionSpec::new(1.0, 1.0, 0.0));
        assert_eq!(spec.directions[2], DirectionSpec::new(1.0, 1.0, 0.0));
        assert_eq!(spec.outlier_indices(), vec![1]);

        let empty = build_variable_specific(5, &[], 100.0, 0.1).unwrap();
        assert!(empty.outlier_indices().is_empty());

        assert!(matches!(
            build_variable_specific(3, &[4], 100.0, 0.1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn scale_mixture_layout() {
        let spec = build_scale_mixture(4, 1.0, 9.0, 0.05).unwrap();
        assert_eq!(spec.membership_mode, MembershipMode::Coupled);
        assert_eq!(spec.group_count(), 1);
        for dir in &spec.directions {
            assert_eq!((dir.tau1, dir.tau2, dir.w), (1.0, 9.0, 0.05));
        }
        assert!(build_scale_mixture(4, 9.0, 1.0, 0.05).is_err());
    }

    #[test]
    fn scale_mixture_outlier_branch_uses_large_variance() {
        // With zero small-branch variance, any non-zero coordinate must come
        // from the tau2 branch, and a whole sample switches at once.
        let mut spec = build_scale_mixture(4, 1.0, 9.0, 0.3).unwrap();
        for dir in &mut spec.directions {
            dir.tau1 = 0.0;
        }
        let ds = generate(&spec, 40, 11).unwrap();
        let s = &ds.memberships[0];
        assert!(!s.is_empty());
        for j in 0..40 {
            let nonzero = ds.x.column(j).iter().all(|v| *v != 0.0);
            let zero = ds.x.column(j).iter().all(|v| *v == 0.0);
            assert!(if s.contains(&j) { nonzero } else { zero });
        }
    }

    #[test]
    fn shifted_examples() {
        let spec = build_shifted(2, &[3.0, 4.0], 0.0, 0.0, 0.0, &[1.0, 1.0]).unwrap();
        let b = spec.resolve_basis().unwrap();
        let u1 = b.direction(0);
        assert!((u1[0] - 0.6).abs() < 1e-12 && (u1[1] - 0.8).abs() < 1e-12);
        assert_eq!(spec.directions[0], DirectionSpec::new(1.0, 1.0, 0.0));
        spec.validate().unwrap();

        let spec = build_shifted(2, &[1.0, 0.0], 1.0, 4.0, 0.1, &[1.0, 1.0]).unwrap();
        assert_eq!(spec.directions[0], DirectionSpec::new(2.0, 5.0, 0.1));
        assert_eq!(spec.outlier_indices(), vec![0]);

        assert!(build_shifted(2, &[0.0, 0.0], 1.0, 4.0, 0.1, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn shifted_basis_is_orthonormal_in_higher_dimension() {
        let spec = build_shifted(6, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0], 1.0, 4.0, 0.1, &[1.0; 6])
            .unwrap();
        let ResolvedBasis::Matrix(u) = spec.resolve_basis().unwrap() else {
            panic!("expected explicit basis")
        };
        assert!(orthonormality_defect(&u) < 1e-12);
    }

    #[test]
    fn rejects_non_orthonormal_explicit_basis() {
        let mut spec = MixtureModelSpec::standard(vec![DirectionSpec::constant(1.0); 2]);
        spec.basis = Basis::Explicit { matrix: vec![vec![1.0, 0.0], vec![0.5, 1.0]] };
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_direction_values() {
        let spec = MixtureModelSpec::standard(vec![DirectionSpec::new(1.0, 1.0, 1.5)]);
        assert!(spec.validate().is_err());
        let spec = MixtureModelSpec::standard(vec![DirectionSpec::new(-1.0, 1.0, 0.0)]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn coupled_group_with_mixed_weights_is_rejected() {
        let mut spec = build_scale_mixture(3, 1.0, 9.0, 0.1).unwrap();
        spec.directions[2].w = 0.2;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn no_outlier_components_no_memberships() {
        let spec = MixtureModelSpec::standard(vec![DirectionSpec::constant(1.0); 5]);
        let ds = generate(&spec, 17, 3).unwrap();
        assert!(ds.memberships.iter().all(|s| s.is_empty()));
        assert!(ds.outlier_flags().iter().all(|f| !f));
    }

    #[test]
    fn coupled_memberships_agree() {
        let spec = build_scale_mixture(5, 1.0, 9.0, 0.5).unwrap();
        let ds = generate(&spec, 6, 99).unwrap();
        for s in &ds.memberships {
            assert_eq!(s, &ds.memberships[0]);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = build_variable_specific(8, &[1, 3], 50.0, 0.2).unwrap();
        let a = generate(&spec, 25, 5).unwrap();
        let b = generate(&spec, 25, 5).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.memberships, b.memberships);
        let c = generate(&spec, 25, 6).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn memberships_do_not_depend_on_variances() {
        let a = build_variable_specific(6, &[2, 5], 50.0, 0.3).unwrap();
        let b = build_variable_specific(6, &[2, 5], 5000.0, 0.3).unwrap();
        let da = generate(&a, 50, 8).unwrap();
        let db = generate(&b, 50, 8).unwrap();
        assert_eq!(da.memberships, db.memberships);
    }

    #[test]
    fn coefficients_reconstruct_data() {
        let mut spec = build_variable_specific(7, &[3], 20.0, 0.3).unwrap();
        spec.basis = Basis::Random { seed: 4 };
        let ds = generate(&spec, 9, 1).unwrap();
        let ResolvedBasis::Matrix(u) = &ds.basis else { panic!() };
        let y = ds.coefficients().expect("retained");
        let diff = (u * y - &ds.x).abs().max();
        assert!(diff < 1e-12, "{diff}");
        for j in 0..9 {
            let rel = (ds.x.column(j).norm() - y.column(j).norm()).abs() / y.column(j).norm();
            assert!(rel < 1e-8);
        }

        let ds = generate_with(&spec, 9, 1, GenerateOptions { retain_coefficients: Some(false) })
            .unwrap();
        assert!(ds.coefficients().is_none());
    }

    #[test]
    fn one_based_membership_export() {
        let spec = build_variable_specific(3, &[2], 100.0, 0.5).unwrap();
        let ds = generate(&spec, 10, 2).unwrap();
        let m = ds.memberships_one_based();
        assert_eq!(m.len(), 1);
        let want: Vec<usize> = ds.memberships[1].iter().map(|j| j + 1).collect();
        assert_eq!(m[&2], want);
    }

    #[test]
    fn spec_json_shape() {
        let spec = build_scale_mixture(2, 1.0, 9.0, 0.1).unwrap();
        let v = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["basis"]["kind"], "standard");
        assert_eq!(v["noise_dist"], "gaussian");
        assert_eq!(v["membership_mode"], "coupled");
        assert_eq!(v["directions"][0]["group"], 0);
        let back: MixtureModelSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);

        let minimal: MixtureModelSpec = serde_json::from_str(
            r#"{"d":1,"directions":[{"tau1":1,"tau2":1,"w":0}]}"#,
        )
        .unwrap();
        assert_eq!(minimal.basis, Basis::Standard);
        assert_eq!(minimal.membership_mode, MembershipMode::Independent);
    }
}
