use serde::{Deserialize, Serialize};

use crate::consistency::{AspectLimit, CheckTolerances, Schedule, Tier, TierStructure};
use crate::error::{config_err, Result};
use crate::geometry::GeometryScenario;
use crate::model::{build_scale_mixture, build_variable_specific, Basis, DirectionSpec, MixtureModelSpec, NoiseDist};

use super::toy::{toy_spec, TOY_D};

/// One `(n, d)` evaluation point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub d: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Geometry,
    Eigenvalues,
    Eigenvectors,
    ToyTable,
}

/// A spike tier of the `spiked` family: `size` directions whose eigenvalue
/// scale is `delta(n)`. With `w > 0` they are outlier spikes with
/// `tau1 = c_λ` and `tau2 = delta/w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeTier {
    pub size: usize,
    pub delta: Schedule,
    #[serde(default)]
    pub w: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    #[default]
    Standard,
    /// Seeded random orthonormal basis, the same for every replication.
    Random { seed: u64 },
}

fn one() -> f64 {
    1.0
}

fn default_aspect() -> AspectLimit {
    AspectLimit::Finite { c: 1.0 }
}

/// Where the model for a sweep point comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSource {
    /// A fixed spec; sweep points must use its `d`. Optional tiers enable
    /// the consistency checks.
    Fixed {
        spec: MixtureModelSpec,
        #[serde(default)]
        tiers: Option<Vec<Tier>>,
        #[serde(default = "one")]
        c_lambda: f64,
        #[serde(default = "default_aspect")]
        c: AspectLimit,
    },
    /// The built-in toy example (`d = 3000`).
    Toy,
    /// Every direction `(variance, variance, 0)`.
    PureNoise {
        #[serde(default = "one")]
        variance: f64,
        #[serde(default)]
        noise_dist: NoiseDist,
        #[serde(default = "default_aspect")]
        c: AspectLimit,
    },
    /// Spike tiers on top of `c_λ` noise.
    Spiked {
        tiers: Vec<SpikeTier>,
        #[serde(default = "one")]
        c_lambda: f64,
        #[serde(default = "default_aspect")]
        c: AspectLimit,
        #[serde(default)]
        basis: BasisChoice,
        #[serde(default)]
        noise_dist: NoiseDist,
    },
    /// A geometry scenario evaluated at each `d`.
    Geometry { scenario: GeometryScenario },
    VariableSpecific {
        outlier_vars: Vec<usize>,
        tau2: f64,
        w: f64,
    },
    ScaleMixture {
        sigma1_sq: f64,
        sigma2_sq: f64,
        p: f64,
    },
}

/// A model instantiated at one sweep point.
#[derive(Clone, Debug)]
pub struct PointModel {
    pub spec: MixtureModelSpec,
    /// Tier structure when consistency checks apply.
    pub tiers: Option<TierStructure>,
    /// `c_λ` and `c` for bulk checks when no spikes are present.
    pub bulk: Option<(f64, AspectLimit)>,
    pub geometry: Option<GeometryScenario>,
}

impl ModelSource {
    pub fn at(&self, p: SweepPoint) -> Result<PointModel> {
        let SweepPoint { n, d } = p;
        let plain = |spec| PointModel { spec, tiers: None, bulk: None, geometry: None };
        match self {
            ModelSource::Fixed { spec, tiers, c_lambda, c } => {
                if spec.d != d {
                    return config_err(format!("sweep point d = {d} differs from the fixed spec d = {}", spec.d));
                }
                let tiers = match tiers {
                    Some(t) => Some(TierStructure::new(t.clone(), *c_lambda, *c, spec)?),
                    None => None,
                };
                Ok(PointModel { spec: spec.clone(), tiers, bulk: None, geometry: None })
            }
            ModelSource::Toy => {
                if d != TOY_D {
                    return config_err(format!("the toy example has d = {TOY_D}, sweep point has d = {d}"));
                }
                Ok(plain(toy_spec()))
            }
            ModelSource::PureNoise { variance, noise_dist, c } => {
                let mut spec = MixtureModelSpec::standard(vec![DirectionSpec::constant(*variance); d]);
                spec.noise_dist = *noise_dist;
                Ok(PointModel { spec, tiers: None, bulk: Some((*variance, *c)), geometry: None })
            }
            ModelSource::Spiked { tiers, c_lambda, c, basis, noise_dist } => {
                let mut dirs = Vec::with_capacity(d);
                for t in tiers {
                    let delta = t.delta.at(n);
                    if !(0.0..=1.0).contains(&t.w) {
                        return config_err("tier weight must lie in [0, 1]");
                    }
                    let dir = if t.w > 0.0 {
                        DirectionSpec::new(*c_lambda, delta / t.w, t.w)
                    } else {
                        DirectionSpec::constant(delta)
                    };
                    dirs.extend(std::iter::repeat(dir).take(t.size));
                }
                if dirs.len() >= d {
                    return config_err(format!("{} spikes need d > {}, got d = {d}", dirs.len(), dirs.len()));
                }
                dirs.resize(d, DirectionSpec::constant(*c_lambda));
                let mut spec = MixtureModelSpec::standard(dirs);
                spec.noise_dist = *noise_dist;
                if let BasisChoice::Random { seed } = basis {
                    spec.basis = Basis::Random { seed: *seed };
                }
                let structure = TierStructure::new(
                    tiers.iter().map(|t| Tier { size: t.size, delta: t.delta }).collect(),
                    *c_lambda,
                    *c,
                    &spec,
                )?;
                Ok(PointModel { spec, tiers: Some(structure), bulk: None, geometry: None })
            }
            ModelSource::Geometry { scenario } => Ok(PointModel {
                spec: scenario.model_at(d)?,
                tiers: None,
                bulk: None,
                geometry: Some(scenario.clone()),
            }),
            ModelSource::VariableSpecific { outlier_vars, tau2, w } => {
                Ok(plain(build_variable_specific(d, outlier_vars, *tau2, *w)?))
            }
            ModelSource::ScaleMixture { sigma1_sq, sigma2_sq, p } => {
                Ok(plain(build_scale_mixture(d, *sigma1_sq, *sigma2_sq, *p)?))
            }
        }
    }
}

/// Expected direction of a tracked statistic across a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendTarget {
    Decreasing,
    Increasing,
    /// Must not increase.
    Bounded,
}

/// A statistic tracked across the sweep: the error `|observed − predicted|`
/// of the named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendSpec {
    pub statistic: String,
    pub target: TrendTarget,
    /// Optional cap on the median error at the last point.
    #[serde(default)]
    pub final_max: Option<f64>,
}

/// Overrides for the harness on top of [`CheckTolerances`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessTolerances {
    #[serde(flatten)]
    pub checks: CheckTolerances,
    /// Fraction of replications a check has to pass.
    pub pass_fraction: f64,
    /// Relative gap allowed between geometry class means and limits.
    pub geometry_rel: f64,
    /// Relative change below which a trend counts as flat.
    pub flat_rel: f64,
}

impl Default for HarnessTolerances {
    fn default() -> Self {
        Self { checks: CheckTolerances::default(), pass_fraction: 0.9, geometry_rel: 0.05, flat_rel: 1e-9 }
    }
}

/// A complete, reproducible experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelSource,
    pub sweep: Vec<SweepPoint>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub tolerances: HarnessTolerances,
    #[serde(default)]
    pub trends: Vec<TrendSpec>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return config_err("scenario name must be a plain, non-empty file name");
        }
        if self.replications == 0 {
            return config_err("replications must be at least 1");
        }
        if self.sweep.is_empty() {
            return config_err("sweep must contain at least one point");
        }
        if self.sweep.iter().any(|p| p.n == 0 || p.d == 0) {
            return config_err("sweep points need n >= 1 and d >= 1");
        }
        let f = self.tolerances.pass_fraction;
        if !(0.0..=1.0).contains(&f) {
            return config_err("pass_fraction must lie in [0, 1]");
        }
        if !self.trends.is_empty() {
            check_sweep_for_trends(&self.sweep)?;
        }
        if self.checks.contains(&CheckKind::ToyTable) && self.model != ModelSource::Toy {
            return config_err("the toy_table check needs the toy model");
        }
        for &p in &self.sweep {
            self.model.at(p)?.spec.validate()?;
        }
        Ok(())
    }
}

pub(crate) fn check_sweep_for_trends(sweep: &[SweepPoint]) -> Result<()> {
    if sweep.len() < 3 {
        return config_err(format!("a trend needs at least 3 sweep points, got {}", sweep.len()));
    }
    if sweep.windows(2).any(|w| w[1].n <= w[0].n) {
        return config_err("trend sweeps need strictly increasing n");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_spiked_config() {
        let text = r#"{
            "name": "ratio",
            "model": {"family": "spiked", "tiers": [{"size": 1, "delta": {"kind": "power", "coef": 1.0, "exponent": 1.2}}]},
            "sweep": [{"n": 100, "d": 100}, {"n": 400, "d": 400}, {"n": 1600, "d": 1600}],
            "replications": 2,
            "seed": 5,
            "checks": ["eigenvalues"],
            "tolerances": {"k_slack": 4.0},
            "trends": [{"statistic": "eigenvalue_ratio[1]", "target": "decreasing"}]
        }"#;
        let cfg = ScenarioConfig::from_json(text).unwrap();
        assert_eq!(cfg.tolerances.checks.k_slack, 4.0);
        assert_eq!(cfg.tolerances.checks.eigen_ratio, 0.2);
        let m = cfg.model.at(SweepPoint { n: 100, d: 100 }).unwrap();
        assert!((m.spec.directions[0].tau1 - 100f64.powf(1.2)).abs() < 1e-9);
        assert_eq!(m.tiers.unwrap().k(), 1);
    }

    #[test]
    fn outlier_spike_uses_weighted_branch() {
        let src = ModelSource::Spiked {
            tiers: vec![SpikeTier { size: 1, delta: Schedule::Constant { value: 50.0 }, w: 0.05 }],
            c_lambda: 1.0,
            c: AspectLimit::Finite { c: 1.0 },
            basis: BasisChoice::Standard,
            noise_dist: NoiseDist::Gaussian,
        };
        let m = src.at(SweepPoint { n: 10, d: 10 }).unwrap();
        assert_eq!(m.spec.directions[0], DirectionSpec::new(1.0, 1000.0, 0.05));
        assert_eq!(m.tiers.unwrap().outlier, vec![0]);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = ScenarioConfig {
            name: "x".into(),
            model: ModelSource::PureNoise { variance: 1.0, noise_dist: NoiseDist::Gaussian, c: AspectLimit::Infinite },
            sweep: vec![SweepPoint { n: 10, d: 5 }],
            replications: 1,
            seed: 0,
            checks: vec![],
            tolerances: HarnessTolerances::default(),
            trends: vec![],
        };
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.replications = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.sweep.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.trends.push(TrendSpec { statistic: "s".into(), target: TrendTarget::Bounded, final_max: None });
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.checks.push(CheckKind::ToyTable);
        assert!(c.validate().is_err());
        let mut c = base;
        c.name = "../evil".into();
        assert!(c.validate().is_err());
    }
}
