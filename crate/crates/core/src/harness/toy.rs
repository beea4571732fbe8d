//! The toy example: nine main spikes, one sparse outlier direction and unit
//! noise in `d = 3000` with `n = 200` samples.

use rayon::prelude::*;
use serde::Serialize;

use crate::consistency::{angle_to_subspace, outlier_score, ScoreKind, Verdict};
use crate::error::Result;
use crate::model::{generate, DirectionSpec, GeneratedDataset, MixtureModelSpec};
use crate::rng::replication_seed;
use crate::spectra::{sample_covariance_spectrum, SpectralDecomposition};
use crate::stats::median;

use super::report::{aggregate, single, AggregateVerdict};

pub const TOY_N: usize = 200;
pub const TOY_D: usize = 3000;
/// Rows (coordinates) and columns (components) of the table.
pub const TOY_ROWS: usize = 12;
pub const TOY_COLS: usize = 11;
/// 0-based index of the outlier direction.
pub const TOY_OUTLIER: usize = 9;

/// Printed whenever the toy scenario runs.
pub const TOY_TAU_NOTE: &str = "note: the toy example text lists tau_{10,1} = 2000, tau_{10,2} = 1; \
this implementation uses tau_{10,1} = 1, tau_{10,2} = 2000, w = 0.02, which matches the reported \
eigenvalue of about 42 and the convention tau2 >> tau1";

const MAIN_TAUS: [f64; 9] = [3000.0, 1000.0, 100.0, 90.0, 80.0, 70.0, 60.0, 50.0, 40.0];

pub fn toy_spec() -> MixtureModelSpec {
    let mut dirs = vec![DirectionSpec::constant(1.0); TOY_D];
    for (i, &t) in MAIN_TAUS.iter().enumerate() {
        dirs[i] = DirectionSpec::constant(t);
    }
    dirs[TOY_OUTLIER] = DirectionSpec::new(1.0, 2000.0, 0.02);
    MixtureModelSpec::standard(dirs)
}

/// One realization of the table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToyTable {
    pub seed: u64,
    /// `squared_entries[k][i] = û_{k+1,i+1}²`.
    pub squared_entries: Vec<Vec<f64>>,
    /// `λ̂_1..λ̂_11`.
    pub eigenvalues: Vec<f64>,
    /// `angle(Û_i, e_10)` in degrees.
    pub angles_to_e10: Vec<f64>,
    /// 1-based samples in the outlier branch.
    pub outliers: Vec<usize>,
    /// `Σ_{i≤10} û_{10,i}²`.
    pub e10_energy: f64,
    pub max_e10_entry: f64,
    pub min_e10_angle: f64,
    pub angle_e1: f64,
    pub angle_e2: f64,
    /// Mean outlier score minus mean non-outlier score, energy weighted by
    /// row 10 over components 1..10; NaN without outliers.
    pub outlier_score_gap: f64,
}

/// Builds the table for a toy dataset and its spectrum.
pub fn toy_table(ds: &GeneratedDataset, s: &SpectralDecomposition) -> Result<ToyTable> {
    let cols = TOY_COLS.min(s.retained());
    let squared_entries: Vec<Vec<f64>> = (0..TOY_ROWS)
        .map(|k| (0..cols).map(|i| s.eigenvectors[(k, i)].powi(2)).collect())
        .collect();
    let mut angles_to_e10 = Vec::with_capacity(cols);
    for i in 0..cols {
        angles_to_e10.push(angle_to_subspace(&s.vector(i), &ds.basis, &[TOY_OUTLIER])?);
    }
    let first10 = 10.min(cols);
    let e10 = &squared_entries[TOY_OUTLIER][..first10];
    let pcs: Vec<usize> = (0..first10).collect();
    let scores = outlier_score(s, &ds.basis, &ds.x, &pcs, ScoreKind::EnergyWeighted { direction: TOY_OUTLIER })?;
    let flagged = &ds.memberships[TOY_OUTLIER];
    let outlier_score_gap = if flagged.is_empty() || flagged.len() == ds.n {
        f64::NAN
    } else {
        let out: f64 = flagged.iter().map(|&j| scores[j]).sum::<f64>() / flagged.len() as f64;
        let rest: f64 = (0..ds.n).filter(|j| !flagged.contains(j)).map(|j| scores[j]).sum::<f64>()
            / (ds.n - flagged.len()) as f64;
        out - rest
    };
    Ok(ToyTable {
        seed: ds.seed,
        eigenvalues: s.eigenvalues.iter().take(TOY_COLS).copied().collect(),
        outliers: flagged.iter().map(|j| j + 1).collect(),
        e10_energy: e10.iter().sum(),
        max_e10_entry: e10.iter().copied().fold(0.0, f64::max),
        min_e10_angle: angles_to_e10[..first10].iter().copied().fold(90.0, f64::min),
        angle_e1: angle_to_subspace(&s.vector(0), &ds.basis, &[0])?,
        angle_e2: angle_to_subspace(&s.vector(1), &ds.basis, &[1])?,
        outlier_score_gap,
        squared_entries,
        angles_to_e10,
    })
}

/// Entry-wise medians over realizations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToyMedianTable {
    pub squared_entries: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub angles_to_e10: Vec<f64>,
}

impl ToyMedianTable {
    pub fn of(tables: &[ToyTable]) -> Self {
        let med = |f: &dyn Fn(&ToyTable) -> Option<f64>| median(&tables.iter().filter_map(f).collect::<Vec<_>>());
        ToyMedianTable {
            squared_entries: (0..TOY_ROWS)
                .map(|k| (0..TOY_COLS).map(|i| med(&|t| t.squared_entries[k].get(i).copied())).collect())
                .collect(),
            eigenvalues: (0..TOY_COLS).map(|i| med(&|t| t.eigenvalues.get(i).copied())).collect(),
            angles_to_e10: (0..TOY_COLS).map(|i| med(&|t| t.angles_to_e10.get(i).copied())).collect(),
        }
    }
}

/// Tables of every replication with their medians and verdicts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToySummary {
    pub seed: u64,
    pub replications: usize,
    pub median: ToyMedianTable,
    pub verdicts: Vec<AggregateVerdict>,
    pub passed: bool,
    #[serde(skip)]
    pub tables: Vec<ToyTable>,
}

fn median_in(name: &str, values: Vec<f64>, lo: f64, hi: f64) -> AggregateVerdict {
    let m = median(&values);
    single(
        Verdict::judged(name, m >= lo && m <= hi, m, 0.5 * (lo + hi), 0.5 * (hi - lo))
            .with_detail(format!("median over replications in [{lo}, {hi}]")),
    )
}

fn fraction(name: &str, tables: &[ToyTable], required: f64, f: impl Fn(&ToyTable) -> Verdict) -> AggregateVerdict {
    let vs: Vec<Verdict> = tables.iter().map(f).collect();
    aggregate(name, &vs.iter().collect::<Vec<_>>(), required)
}

/// The reproduction criteria evaluated over a set of tables.
pub fn toy_verdicts(tables: &[ToyTable]) -> Vec<AggregateVerdict> {
    let eig = |i: usize| tables.iter().filter_map(|t| t.eigenvalues.get(i).copied()).collect::<Vec<_>>();
    vec![
        median_in("toy_median_eigenvalue[1]", eig(0), 2400.0, 3700.0),
        median_in("toy_median_eigenvalue[2]", eig(1), 800.0, 1200.0),
        median_in("toy_median_eigenvalue[11]", eig(10), 10.0, 25.0),
        fraction("toy_eigenvalue_ratio[1]", tables, 0.9, |t| {
            let r = t.eigenvalues[0] / 3000.0;
            Verdict::judged("toy_eigenvalue_ratio[1]", (0.8..=1.2).contains(&r), r, 1.0, 0.2)
        }),
        fraction("toy_angle_e1", tables, 0.9, |t| {
            Verdict::judged("toy_angle_e1", t.angle_e1 <= 5.0, t.angle_e1, 0.0, 5.0)
        }),
        fraction("toy_angle_e2", tables, 0.9, |t| {
            Verdict::judged("toy_angle_e2", t.angle_e2 <= 10.0, t.angle_e2, 0.0, 10.0)
        }),
        fraction("toy_e10_energy", tables, 0.8, |t| {
            Verdict::judged("toy_e10_energy", t.e10_energy >= 0.8, t.e10_energy, 1.0, 0.2)
        }),
        fraction("toy_e10_max_entry", tables, 0.8, |t| {
            Verdict::judged("toy_e10_max_entry", t.max_e10_entry <= 0.35, t.max_e10_entry, 0.0, 0.35)
        }),
        fraction("toy_e10_min_angle", tables, 0.8, |t| {
            Verdict::judged("toy_e10_min_angle", t.min_e10_angle >= 55.0, t.min_e10_angle, 90.0, 35.0)
        }),
        fraction("toy_outlier_score", tables, 0.8, |t| {
            if t.outlier_score_gap.is_nan() {
                Verdict::skipped("toy_outlier_score", "no outliers drawn")
            } else {
                Verdict::judged("toy_outlier_score", t.outlier_score_gap > 0.0, t.outlier_score_gap, 0.0, 0.0)
            }
        }),
    ]
}

/// Runs one replication of the toy example.
pub fn toy_replication(seed: u64) -> Result<ToyTable> {
    let ds = generate(&toy_spec(), TOY_N, seed)?;
    let s = sample_covariance_spectrum(&ds.x)?;
    toy_table(&ds, &s)
}

/// Runs `reps` replications with seeds derived from `seed`.
pub fn toy_example(seed: u64, reps: usize) -> Result<ToySummary> {
    let tables = (0..reps as u64)
        .into_par_iter()
        .map(|r| toy_replication(replication_seed(seed, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_toy(seed, tables))
}

pub(crate) fn summarize_toy(seed: u64, tables: Vec<ToyTable>) -> ToySummary {
    let verdicts = toy_verdicts(&tables);
    ToySummary {
        seed,
        replications: tables.len(),
        median: ToyMedianTable::of(&tables),
        passed: !verdicts.iter().any(|v| v.failed()),
        verdicts,
        tables,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_matches_the_example() {
        let s = toy_spec();
        assert_eq!(s.d, 3000);
        assert_eq!(s.directions[0], DirectionSpec::constant(3000.0));
        assert_eq!(s.directions[8], DirectionSpec::constant(40.0));
        assert_eq!(s.directions[9], DirectionSpec::new(1.0, 2000.0, 0.02));
        assert_eq!(s.directions[10], DirectionSpec::constant(1.0));
        assert_eq!(s.outlier_indices(), vec![9]);
    }

    #[test]
    fn table_invariants() {
        let t = toy_replication(3).unwrap();
        assert_eq!(t.squared_entries.len(), TOY_ROWS);
        assert!(t.squared_entries.iter().all(|r| r.len() == TOY_COLS));
        assert!(t.squared_entries.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
        for i in 0..TOY_COLS {
            let col: f64 = t.squared_entries.iter().map(|r| r[i]).sum();
            assert!(col <= 1.0 + 1e-12);
        }
        assert!(t.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(t.angles_to_e10.iter().all(|a| (0.0..=90.0).contains(a)));
        let m = ToyMedianTable::of(std::slice::from_ref(&t));
        assert_eq!(m.eigenvalues, t.eigenvalues);
    }
}
