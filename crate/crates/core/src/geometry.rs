//! HDLSS geometry of outliers: scaled norms and pairwise distances, and the
//! limits they approach as `d` grows.
//!
//! Non-outliers concentrate on a sphere of radius `(σ²d)^{1/2}` and are
//! pairwise `(2σ²d)^{1/2}` apart. An outlier's limit depends on how many
//! outlier directions `K^(d)` it participates in and on `τ^(d)`:
//!
//! * `K/d → p_out > 0`: `‖X‖²/d → p_out·τ + (1 − p_out)·σ²`.
//! * `K → ∞`, `K/d → 0`, `K·τ/d → r`: `‖X‖²/d → r + σ²`.
//! * `K` fixed, `K·τ/d → r`: `‖X‖²/d` converges in law to `(r/K)·Σ z_i² + σ²`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::model::{generate, DirectionSpec, GeneratedDataset, MembershipMode, MixtureModelSpec};
use crate::rng::StreamSeed;
use crate::stats::median;

/// `τ^(d)` as a function of `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauSchedule {
    Constant { value: f64 },
    /// `τ^(d) = r·d/K^(d)`, with `r` taken from the regime.
    Linear,
    /// `τ^(d) = coef·d^alpha`.
    Power { coef: f64, alpha: f64 },
}

/// How many outlier directions an outlier participates in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryRegime {
    /// `K^(d) = round(p_out·d)`.
    PositiveFraction { p_out: f64 },
    /// `K^(d) = ceil(d^k_exponent)`, `0 < k_exponent < 1`.
    GrowingK {
        r: f64,
        #[serde(default = "default_k_exponent")]
        k_exponent: f64,
    },
    FixedK { k: usize, r: f64 },
}

fn default_k_exponent() -> f64 {
    0.5
}

fn default_outlier_prob() -> f64 {
    0.2
}

/// A family of models indexed by `d` with one geometric regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryScenario {
    pub sigma_sq: f64,
    pub tau: TauSchedule,
    pub regime: GeometryRegime,
    /// Probability that a sample is an outlier.
    #[serde(default = "default_outlier_prob")]
    pub outlier_prob: f64,
}

impl GeometryScenario {
    pub fn positive_fraction(p_out: f64, tau: f64, sigma_sq: f64) -> Self {
        Self {
            sigma_sq,
            tau: TauSchedule::Constant { value: tau },
            regime: GeometryRegime::PositiveFraction { p_out },
            outlier_prob: default_outlier_prob(),
        }
    }

    pub fn growing_k(r: f64, sigma_sq: f64) -> Self {
        Self {
            sigma_sq,
            tau: TauSchedule::Linear,
            regime: GeometryRegime::GrowingK { r, k_exponent: default_k_exponent() },
            outlier_prob: default_outlier_prob(),
        }
    }

    pub fn fixed_k(k: usize, r: f64, sigma_sq: f64) -> Self {
        Self {
            sigma_sq,
            tau: TauSchedule::Linear,
            regime: GeometryRegime::FixedK { k, r },
            outlier_prob: default_outlier_prob(),
        }
    }

    pub fn with_outlier_prob(mut self, p: f64) -> Self {
        self.outlier_prob = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq > 0.0 && self.sigma_sq.is_finite()) {
            return config_err("sigma_sq must be positive");
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return config_err("outlier_prob must lie in [0, 1]");
        }
        match (self.regime, self.tau) {
            (GeometryRegime::PositiveFraction { p_out }, TauSchedule::Constant { value }) => {
                if !(p_out > 0.0 && p_out <= 1.0) {
                    return config_err("positive_fraction needs p_out in (0, 1]");
                }
                if !(value >= 0.0 && value.is_finite()) {
                    return config_err("tau must be finite and >= 0");
                }
                Ok(())
            }
            (GeometryRegime::PositiveFraction { .. }, _) => {
                config_err("positive_fraction needs a constant tau with a finite limit")
            }
            (GeometryRegime::GrowingK { r, k_exponent }, tau) => {
                if !(k_exponent > 0.0 && k_exponent < 1.0) {
                    return config_err("growing_K needs 0 < k_exponent < 1");
                }
                if !(r >= 0.0 && r.is_finite()) {
                    return config_err("r must be finite and >= 0");
                }
                match tau {
                    TauSchedule::Linear => Ok(()),
                    TauSchedule::Constant { value } if r == 0.0 && value >= 0.0 => Ok(()),
                    TauSchedule::Power { coef, alpha }
                        if r == 0.0 && coef >= 0.0 && alpha < 1.0 - k_exponent =>
                    {
                        Ok(())
                    }
                    _ => config_err(
                        "growing_K needs tau = r·d/K, or r = 0 with tau = o(d/K)",
                    ),
                }
            }
            (GeometryRegime::FixedK { k, r }, TauSchedule::Linear) => {
                if k == 0 {
                    return config_err("fixed_K needs K >= 1");
                }
                if !(r >= 0.0 && r.is_finite()) {
                    return config_err("r must be finite and >= 0");
                }
                Ok(())
            }
            (GeometryRegime::FixedK { .. }, _) => config_err("fixed_K needs tau = r·d/K"),
        }
    }

    /// Number of outlier directions at dimension `d`.
    pub fn k_at(&self, d: usize) -> usize {
        let k = match self.regime {
            GeometryRegime::PositiveFraction { p_out } => (p_out * d as f64).round() as usize,
            GeometryRegime::GrowingK { k_exponent, .. } => (d as f64).powf(k_exponent).ceil() as usize,
            GeometryRegime::FixedK { k, .. } => k,
        };
        k.clamp(1, d)
    }

    /// `τ^(d)` at dimension `d`.
    pub fn tau_at(&self, d: usize) -> f64 {
        match self.tau {
            TauSchedule::Constant { value } => value,
            TauSchedule::Power { coef, alpha } => coef * (d as f64).powf(alpha),
            TauSchedule::Linear => {
                let r = match self.regime {
                    GeometryRegime::GrowingK { r, .. } | GeometryRegime::FixedK { r, .. } => r,
                    GeometryRegime::PositiveFraction { .. } => 0.0,
                };
                r * d as f64 / self.k_at(d) as f64
            }
        }
    }

    /// Model at dimension `d`: the first `K^(d)` directions are outlier
    /// directions sharing one membership draw, so every outlier participates
    /// in all of them.
    pub fn model_at(&self, d: usize) -> Result<MixtureModelSpec> {
        self.validate()?;
        if d == 0 {
            return config_err("d must be at least 1");
        }
        let k = self.k_at(d);
        let tau = self.tau_at(d);
        let mut directions = vec![DirectionSpec::constant(self.sigma_sq); d];
        for dir in directions.iter_mut().take(k) {
            *dir = DirectionSpec {
                group: Some(0),
                ..DirectionSpec::new(self.sigma_sq, tau, self.outlier_prob)
            };
        }
        let mut spec = MixtureModelSpec::standard(directions);
        spec.membership_mode = MembershipMode::Coupled;
        Ok(spec)
    }
}

/// The `(r/K)·Σ_{i≤K} z_i² + offset` law of a fixed-`K` outlier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledChiSquare {
    pub k: usize,
    pub r: f64,
    pub offset: f64,
}

impl ScaledChiSquare {
    pub fn mean(&self) -> f64 {
        self.r + self.offset
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s: f64 = (0..self.k)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * z
            })
            .sum();
        self.r / self.k as f64 * s + self.offset
    }

    pub fn sample_many(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = StreamSeed::root(seed).child("limit-law").rng();
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

/// A deterministic limit or a limiting distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Limit {
    Value { value: f64 },
    Distribution { law: ScaledChiSquare },
}

impl Limit {
    pub fn mean(&self) -> f64 {
        match self {
            Limit::Value { value } => *value,
            Limit::Distribution { law } => law.mean(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Limit::Value { value } => Some(*value),
            Limit::Distribution { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    NonNon,
    OutNon,
    OutOut,
}

impl PairClass {
    pub fn of(a_outlier: bool, b_outlier: bool) -> Self {
        match (a_outlier, b_outlier) {
            (false, false) => PairClass::NonNon,
            (true, true) => PairClass::OutOut,
            _ => PairClass::OutNon,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PairClass::NonNon => "non_non",
            PairClass::OutNon => "out_non",
            PairClass::OutOut => "out_out",
        }
    }
}

/// Limit of `‖X_j‖²/d` for a non-outlier or an outlier.
pub fn limit_norm(scenario: &GeometryScenario, is_outlier: bool) -> Result<Limit> {
    scenario.validate()?;
    let s2 = scenario.sigma_sq;
    if !is_outlier {
        return Ok(Limit::Value { value: s2 });
    }
    Ok(outlier_excess(scenario, s2))
}

/// Limit of `‖X_j − X_l‖²/d` for a pair class.
///
/// Two outliers have no predicted limit and yield [`Error::Unsupported`].
pub fn limit_distance(scenario: &GeometryScenario, class: PairClass) -> Result<Limit> {
    scenario.validate()?;
    let s2 = scenario.sigma_sq;
    match class {
        PairClass::NonNon => Ok(Limit::Value { value: 2.0 * s2 }),
        PairClass::OutNon => Ok(outlier_excess(scenario, 2.0 * s2)),
        PairClass::OutOut => Err(Error::Unsupported(
            "no limit is predicted for outlier/outlier distances".into(),
        )),
    }
}

fn outlier_excess(scenario: &GeometryScenario, base: f64) -> Limit {
    let s2 = scenario.sigma_sq;
    match (scenario.regime, scenario.tau) {
        (GeometryRegime::PositiveFraction { p_out }, TauSchedule::Constant { value: tau }) => {
            Limit::Value { value: p_out * (tau - s2) + base }
        }
        (GeometryRegime::GrowingK { r, .. }, _) => Limit::Value { value: r + base },
        (GeometryRegime::FixedK { k, r }, _) => {
            Limit::Distribution { law: ScaledChiSquare { k, r, offset: base } }
        }
        // rejected by validate()
        (GeometryRegime::PositiveFraction { .. }, _) => Limit::Value { value: f64::NAN },
    }
}

/// Exact scaled norms and distances of one dataset.
#[derive(Clone, Debug)]
pub struct GeometryReport {
    pub d: usize,
    /// `‖X_j‖²/d`.
    pub scaled_norms: Vec<f64>,
    /// `‖X_j − X_l‖²/d`, symmetric with zero diagonal.
    pub scaled_distances: DMatrix<f64>,
    /// Sample belongs to at least one membership set.
    pub outlier: Vec<bool>,
}

/// One row of the pair table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairRow {
    pub j: usize,
    pub l: usize,
    pub class: PairClass,
    pub scaled_dist: f64,
}

/// Empirical mean of one class next to its prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub count: usize,
    pub empirical_mean: f64,
    pub predicted: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub norm_non_outlier: ClassSummary,
    pub norm_outlier: ClassSummary,
    pub dist_non_non: ClassSummary,
    pub dist_out_non: ClassSummary,
    pub dist_out_out: ClassSummary,
}

/// Scaled norms and pairwise distances with ground-truth classes.
pub fn empirical_geometry(dataset: &GeneratedDataset) -> Result<GeometryReport> {
    geometry_of(&dataset.x, dataset.outlier_flags())
}

/// As [`empirical_geometry`] for a bare matrix and class flags.
pub fn geometry_of(x: &DMatrix<f64>, outlier: Vec<bool>) -> Result<GeometryReport> {
    let (d, n) = x.shape();
    if outlier.len() != n {
        return Err(Error::Data("one class flag per sample required".into()));
    }
    let df = d as f64;
    let scaled_norms: Vec<f64> = (0..n).map(|j| x.column(j).norm_squared() / df).collect();
    let mut dist = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in (j + 1)..n {
            let s: f64 = x
                .column(j)
                .iter()
                .zip(x.column(l).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / df;
            let bound = 2.0 * (scaled_norms[j] + scaled_norms[l]);
            if s > bound * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::Numerical(format!(
                    "pair ({}, {}) violates the parallelogram bound",
                    j + 1,
                    l + 1
                )));
            }
            dist[(j, l)] = s;
            dist[(l, j)] = s;
        }
    }
    Ok(GeometryReport { d, scaled_norms, scaled_distances: dist, outlier })
}

impl GeometryReport {
    pub fn n(&self) -> usize {
        self.scaled_norms.len()
    }

    pub fn pairs(&self) -> Vec<PairRow> {
        let n = self.n();
        let mut rows = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for j in 0..n {
            for l in (j + 1)..n {
                rows.push(PairRow {
                    j: j + 1,
                    l: l + 1,
                    class: PairClass::of(self.outlier[j], self.outlier[l]),
                    scaled_dist: self.scaled_distances[(j, l)],
                });
            }
        }
        rows
    }

    fn norm_mean(&self, outlier: bool) -> (usize, f64) {
        let v: Vec<f64> = self
            .scaled_norms
            .iter()
            .zip(&self.outlier)
            .filter(|(_, &o)| o == outlier)
            .map(|(x, _)| *x)
            .collect();
        (v.len(), if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 })
    }

    fn dist_mean(&self, class: PairClass) -> (usize, f64) {
        let v: Vec<f64> =
            self.pairs().into_iter().filter(|p| p.class == class).map(|p| p.scaled_dist).collect();
        (v.len(), if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 })
    }

    /// Class means next to the scenario's limits (limit means for
    /// distributional limits).
    pub fn summarize(&self, scenario: &GeometryScenario) -> Result<GeometrySummary> {
        let class = |(count, mean): (usize, f64), predicted: Option<f64>| ClassSummary {
            count,
            empirical_mean: mean,
            predicted,
            gap: predicted.filter(|_| count > 0).map(|p| (mean - p).abs()),
        };
        Ok(GeometrySummary {
            norm_non_outlier: class(self.norm_mean(false), Some(limit_norm(scenario, false)?.mean())),
            norm_outlier: class(self.norm_mean(true), Some(limit_norm(scenario, true)?.mean())),
            dist_non_non: class(
                self.dist_mean(PairClass::NonNon),
                Some(limit_distance(scenario, PairClass::NonNon)?.mean()),
            ),
            dist_out_non: class(
                self.dist_mean(PairClass::OutNon),
                Some(limit_distance(scenario, PairClass::OutNon)?.mean()),
            ),
            dist_out_out: class(self.dist_mean(PairClass::OutOut), None),
        })
    }
}

/// One dimension of a transition sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionRow {
    pub d: usize,
    pub k: usize,
    pub tau: f64,
    pub limit_outlier: f64,
    /// Median over replications of `|mean outlier norm − limit|`.
    pub median_outlier_gap: f64,
    pub median_non_outlier_gap: f64,
    /// Median over replications of `|mean outlier norm − mean non-outlier norm|`.
    pub median_class_difference: f64,
    pub median_outlier_norm: f64,
    pub median_non_outlier_norm: f64,
}

/// Table of a transition sweep with its trend verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionTable {
    pub rows: Vec<TransitionRow>,
    /// Outlier-class gap at the largest `d` does not exceed the gap at the
    /// smallest `d`.
    pub gap_shrinks: bool,
}

/// Measures class-mean scaled norms against their limits over increasing `d`.
///
/// Replication `r` at dimension `d` uses its own stream, so the table does not
/// depend on the number of worker threads.
pub fn transition_sweep(
    scenario: &GeometryScenario,
    dims: &[usize],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<TransitionTable> {
    scenario.validate()?;
    if dims.len() < 3 {
        return config_err("a transition sweep needs at least 3 dimensions");
    }
    if dims.windows(2).any(|w| w[1] <= w[0]) {
        return config_err("sweep dimensions must be strictly increasing");
    }
    if reps == 0 || n == 0 {
        return config_err("reps and n must be at least 1");
    }
    let limit_out = limit_norm(scenario, true)?.mean();
    let limit_non = scenario.sigma_sq;
    let root = StreamSeed::root(seed).child("transition");
    let mut rows = Vec::with_capacity(dims.len());
    for &d in dims {
        let spec = scenario.model_at(d)?;
        let per_rep: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|r| -> Result<(f64, f64)> {
                let s = root.child_index("d", d as u64).child_index("rep", r as u64).as_u64();
                let ds = generate(&spec, n, s)?;
                let g = empirical_geometry(&ds)?;
                Ok((g.norm_mean(true).1, g.norm_mean(false).1))
            })
            .collect::<Result<_>>()?;
        let out: Vec<f64> = per_rep.iter().map(|p| p.0).collect();
        let non: Vec<f64> = per_rep.iter().map(|p| p.1).collect();
        rows.push(TransitionRow {
            d,
            k: scenario.k_at(d),
            tau: scenario.tau_at(d),
            limit_outlier: limit_out,
            median_outlier_gap: median(&out.iter().map(|m| (m - limit_out).abs()).collect::<Vec<_>>()),
            median_non_outlier_gap: median(&non.iter().map(|m| (m - limit_non).abs()).collect::<Vec<_>>()),
            median_class_difference: median(
                &per_rep.iter().map(|(o, m)| (o - m).abs()).collect::<Vec<_>>(),
            ),
            median_outlier_norm: median(&out),
            median_non_outlier_norm: median(&non),
        });
    }
    let gap_shrinks = rows.last().map(|r| r.median_outlier_gap) <= rows.first().map(|r| r.median_outlier_gap);
    Ok(TransitionTable { rows, gap_shrinks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_scale_mixture;

    #[test]
    fn zero_column_and_identical_columns() {
        let mut x = DMatrix::from_fn(4, 3, |i, j| (i + j) as f64);
        x.column_mut(0).fill(0.0);
        let col = x.column(1).into_owned();
        x.set_column(2, &col);
        let g = geometry_of(&x, vec![false; 3]).unwrap();
        assert_eq!(g.scaled_norms[0], 0.0);
        assert_eq!(g.scaled_distances[(1, 2)], 0.0);
        for j in 0..3 {
            assert_eq!(g.scaled_distances[(j, j)], 0.0);
        }
        assert_eq!(g.scaled_distances, g.scaled_distances.transpose());
    }

    #[test]
    fn pure_noise_concentration() {
        let spec = MixtureModelSpec::standard(vec![DirectionSpec::constant(1.0); 20_000]);
        let ds = generate(&spec, 10, 21).unwrap();
        let g = empirical_geometry(&ds).unwrap();
        for v in &g.scaled_norms {
            assert!((v - 1.0).abs() <= 0.05, "{v}");
        }
        for p in g.pairs() {
            assert!((p.scaled_dist - 2.0).abs() <= 0.07, "{p:?}");
        }
    }

    #[test]
    fn norm_limits() {
        let s = GeometryScenario::positive_fraction(1.0, 9.0, 1.0);
        assert_eq!(limit_norm(&s, false).unwrap().value(), Some(1.0));
        assert_eq!(limit_norm(&s, true).unwrap().value(), Some(9.0));
        let s = GeometryScenario::growing_k(5.0, 1.0);
        assert_eq!(limit_norm(&s, true).unwrap().value(), Some(6.0));
        let s = GeometryScenario::fixed_k(2, 4.0, 1.0);
        let l = limit_norm(&s, true).unwrap();
        assert!(l.value().is_none());
        assert_eq!(l.mean(), 5.0);
    }

    #[test]
    fn distance_limits() {
        let s = GeometryScenario::positive_fraction(0.5, 9.0, 1.0);
        assert_eq!(limit_distance(&s, PairClass::NonNon).unwrap().value(), Some(2.0));
        assert_eq!(limit_distance(&s, PairClass::OutNon).unwrap().value(), Some(6.0));
        assert!(matches!(limit_distance(&s, PairClass::OutOut), Err(Error::Unsupported(_))));
        let s = GeometryScenario::growing_k(5.0, 1.0);
        assert_eq!(limit_distance(&s, PairClass::OutNon).unwrap().value(), Some(7.0));
    }

    #[test]
    fn fixed_k_limit_law_mean() {
        // 4·z² + 2 has mean 6
        let s = GeometryScenario::fixed_k(1, 4.0, 1.0);
        let Limit::Distribution { law } = limit_distance(&s, PairClass::OutNon).unwrap() else {
            panic!("expected a distribution")
        };
        let draws = law.sample_many(1_000_000, 3);
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((m - 6.0).abs() / 6.0 < 0.02, "{m}");
    }

    #[test]
    fn scenario_validation() {
        assert!(GeometryScenario::positive_fraction(0.0, 9.0, 1.0).validate().is_err());
        assert!(GeometryScenario::fixed_k(0, 1.0, 1.0).validate().is_err());
        let mut s = GeometryScenario::growing_k(5.0, 1.0);
        s.tau = TauSchedule::Constant { value: 3.0 };
        assert!(s.validate().is_err());
        let mut s = GeometryScenario::growing_k(0.0, 1.0);
        s.tau = TauSchedule::Constant { value: 3.0 };
        assert!(s.validate().is_ok());
    }

    #[test]
    fn growing_k_model_layout() {
        let s = GeometryScenario::growing_k(5.0, 1.0);
        let spec = s.model_at(400).unwrap();
        assert_eq!(s.k_at(400), 20);
        assert_eq!(spec.outlier_indices().len(), 20);
        assert!((spec.directions[0].tau2 - 100.0).abs() < 1e-12);
        assert_eq!(spec.group_count(), 1);
    }

    #[test]
    fn one_point_schedule_is_rejected() {
        let s = GeometryScenario::positive_fraction(0.2, 26.0, 1.0);
        assert!(matches!(transition_sweep(&s, &[500], 10, 2, 1), Err(Error::Config(_))));
        assert!(transition_sweep(&s, &[500, 1000], 10, 2, 1).is_err());
    }

    #[test]
    fn summary_classes_from_memberships() {
        let spec = build_scale_mixture(2000, 1.0, 9.0, 0.3).unwrap();
        let ds = generate(&spec, 20, 5).unwrap();
        let g = empirical_geometry(&ds).unwrap();
        let s = g.summarize(&GeometryScenario::positive_fraction(1.0, 9.0, 1.0)).unwrap();
        let outliers = ds.memberships[0].len();
        assert_eq!(s.norm_outlier.count, outliers);
        assert_eq!(s.norm_non_outlier.count, 20 - outliers);
        assert!(s.dist_out_out.predicted.is_none());
        assert!((s.norm_outlier.empirical_mean - 9.0).abs() < 1.0);
    }
}
