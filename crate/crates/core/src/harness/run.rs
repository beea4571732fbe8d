use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::consistency::{
    bulk_checks, classify_regime, eigenvalue_checks, eigenvector_checks, AspectLimit, Outcome, RegimeReport, Verdict,
};
use crate::error::Result;
use crate::geometry::{empirical_geometry, ClassSummary, GeometryRegime};
use crate::model::generate;
use crate::rng::replication_seed;
use crate::spectra::sample_covariance_spectrum;
use crate::stats::median;

use super::config::{check_sweep_for_trends, CheckKind, PointModel, ScenarioConfig, SweepPoint, TrendTarget};
use super::format::{fmt_f64, to_json_bytes, Csv};
use super::report::{aggregate, AggregateVerdict};
use super::toy::{summarize_toy, toy_table, ToyMedianTable, ToyTable, TOY_COLS, TOY_ROWS};

/// Verdicts of one replication at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub n: usize,
    pub d: usize,
    pub replication: usize,
    pub seed: u64,
    pub verdicts: Vec<Verdict>,
}

/// Toy-table results at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToyPoint {
    pub median: ToyMedianTable,
    #[serde(skip)]
    pub tables: Vec<ToyTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointReport {
    pub n: usize,
    pub d: usize,
    pub regime: Option<RegimeReport>,
    pub checks: Vec<AggregateVerdict>,
    pub toy: Option<ToyPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendDirection {
    Decreasing,
    Increasing,
    Flat,
    Undetermined,
}

/// Medians of one statistic along the sweep and its trend.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendRow {
    pub statistic: String,
    pub n: Vec<usize>,
    pub medians: Vec<f64>,
    pub direction: TrendDirection,
    pub target: Option<TrendTarget>,
    pub outcome: Outcome,
    pub detail: String,
}

impl TrendRow {
    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Fail
    }
}

/// Everything a run produced. Serializes without wall-clock data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub config: ScenarioConfig,
    pub points: Vec<PointReport>,
    pub trends: Vec<TrendRow>,
    pub failed_checks: usize,
    pub passed: bool,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        to_json_bytes(self)
    }
}

struct RepOutcome {
    record: ReplicationRecord,
    toy: Option<ToyTable>,
}

fn evaluate(cfg: &ScenarioConfig, model: &PointModel, p: SweepPoint, rep: usize) -> Result<RepOutcome> {
    let seed = replication_seed(cfg.seed, rep as u64);
    let ds = generate(&model.spec, p.n, seed)?;
    let tol = &cfg.tolerances;
    let needs_spectrum = cfg
        .checks
        .iter()
        .any(|c| matches!(c, CheckKind::Eigenvalues | CheckKind::Eigenvectors | CheckKind::ToyTable));
    let spectrum = if needs_spectrum { Some(sample_covariance_spectrum(&ds.x)?) } else { None };
    let mut verdicts = Vec::new();
    let mut toy = None;
    for check in &cfg.checks {
        match check {
            CheckKind::Eigenvalues => {
                let s = spectrum.as_ref().unwrap();
                if let Some(t) = &model.tiers {
                    verdicts.extend(eigenvalue_checks(s, &ds.spec, t, &tol.checks));
                } else if let Some((c_lambda, c)) = model.bulk {
                    verdicts.extend(bulk_checks(s, 0, c_lambda, c == AspectLimit::Infinite, &tol.checks));
                } else {
                    verdicts.push(Verdict::skipped("eigenvalues", "model has no tier structure"));
                }
            }
            CheckKind::Eigenvectors => {
                let s = spectrum.as_ref().unwrap();
                match &model.tiers {
                    Some(t) => verdicts.extend(eigenvector_checks(s, &ds.basis, &ds.spec, t, &tol.checks)),
                    None => verdicts.push(Verdict::skipped("eigenvectors", "model has no tier structure")),
                }
            }
            CheckKind::Geometry => verdicts.extend(geometry_verdicts(&ds, model, tol.geometry_rel)?),
            CheckKind::ToyTable => toy = Some(toy_table(&ds, spectrum.as_ref().unwrap())?),
        }
    }
    Ok(RepOutcome {
        record: ReplicationRecord { n: p.n, d: p.d, replication: rep, seed, verdicts },
        toy,
    })
}

fn geometry_verdicts(
    ds: &crate::model::GeneratedDataset,
    model: &PointModel,
    rel: f64,
) -> Result<Vec<Verdict>> {
    let report = empirical_geometry(ds)?;
    let Some(scenario) = &model.geometry else {
        let flags = &report.outlier;
        let mean_of = |want: bool| {
            let v: Vec<f64> =
                report.scaled_norms.iter().zip(flags).filter(|(_, &o)| o == want).map(|(x, _)| *x).collect();
            crate::stats::mean(&v)
        };
        let diag = |name: &str, v: f64| Verdict {
            name: name.into(),
            outcome: Outcome::Diagnostic,
            observed: v,
            predicted: f64::NAN,
            tolerance: f64::NAN,
            detail: "no geometry scenario, no prediction".into(),
        };
        return Ok(vec![diag("geometry_norm_non_outlier", mean_of(false)), diag("geometry_norm_outlier", mean_of(true))]);
    };
    let summary = report.summarize(scenario)?;
    let random_limit = matches!(scenario.regime, GeometryRegime::FixedK { .. });
    let judge = |name: &str, c: &ClassSummary, distributional: bool| -> Verdict {
        match (c.count, c.predicted) {
            (0, _) => Verdict::skipped(name, "class is empty"),
            (_, None) => Verdict {
                name: name.into(),
                outcome: Outcome::Diagnostic,
                observed: c.empirical_mean,
                predicted: f64::NAN,
                tolerance: f64::NAN,
                detail: "no predicted limit".into(),
            },
            (_, Some(p)) if distributional => Verdict {
                name: name.into(),
                outcome: Outcome::Diagnostic,
                observed: c.empirical_mean,
                predicted: p,
                tolerance: f64::NAN,
                detail: "random limit, compared with its mean".into(),
            },
            (_, Some(p)) => {
                Verdict::judged(name, (c.empirical_mean - p).abs() <= rel * p.abs(), c.empirical_mean, p, rel)
            }
        }
    };
    Ok(vec![
        judge("geometry_norm_non_outlier", &summary.norm_non_outlier, false),
        judge("geometry_norm_outlier", &summary.norm_outlier, random_limit),
        judge("geometry_dist_non_non", &summary.dist_non_non, false),
        judge("geometry_dist_out_non", &summary.dist_out_non, random_limit),
        judge("geometry_dist_out_out", &summary.dist_out_out, false),
    ])
}

/// Runs every replication of every sweep point and aggregates the verdicts.
///
/// The result is a pure function of `cfg`; replications run in parallel on
/// the current rayon pool without affecting the outcome.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let models = cfg.sweep.iter().map(|&p| cfg.model.at(p)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.sweep.len()).flat_map(|pi| (0..cfg.replications).map(move |r| (pi, r))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(pi, r)| evaluate(cfg, &models[pi], cfg.sweep[pi], r))
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(cfg.sweep.len());
    let mut records = Vec::with_capacity(outcomes.len());
    for (pi, chunk) in outcomes.chunks(cfg.replications).enumerate() {
        let p = cfg.sweep[pi];
        let regime = models[pi].tiers.as_ref().map(|t| classify_regime(t, p.n, p.d, cfg.tolerances.checks.thresholds));
        let mut by_name: BTreeMap<&str, Vec<&Verdict>> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for o in chunk {
            for v in &o.record.verdicts {
                let e = by_name.entry(v.name.as_str()).or_default();
                if e.is_empty() {
                    order.push(v.name.as_str());
                }
                e.push(v);
            }
        }
        let mut checks: Vec<AggregateVerdict> =
            order.iter().map(|name| aggregate(name, &by_name[name], cfg.tolerances.pass_fraction)).collect();
        let tables: Vec<ToyTable> = chunk.iter().filter_map(|o| o.toy.clone()).collect();
        let toy = if tables.is_empty() {
            None
        } else {
            let s = summarize_toy(cfg.seed, tables);
            checks.extend(s.verdicts);
            Some(ToyPoint { median: s.median, tables: s.tables })
        };
        points.push(PointReport { n: p.n, d: p.d, regime, checks, toy });
        records.extend(chunk.iter().map(|o| o.record.clone()));
    }

    let trends: Vec<TrendRow> = cfg
        .trends
        .iter()
        .map(|t| {
            let mut row = trend_row(cfg, &records, &t.statistic);
            judge_trend(&mut row, t.target, t.final_max);
            row
        })
        .collect();
    let failed_checks = points.iter().flat_map(|p| &p.checks).filter(|c| c.failed()).count()
        + trends.iter().filter(|t| t.failed()).count();
    Ok(RunReport {
        scenario: cfg.name.clone(),
        config: cfg.clone(),
        points,
        trends,
        failed_checks,
        passed: failed_checks == 0,
        records,
    })
}

/// Per-point medians of `|observed − predicted|` for one check.
fn trend_row(cfg: &ScenarioConfig, records: &[ReplicationRecord], statistic: &str) -> TrendRow {
    let medians = cfg
        .sweep
        .iter()
        .map(|p| {
            let errs: Vec<f64> = records
                .iter()
                .filter(|r| r.n == p.n && r.d == p.d)
                .flat_map(|r| r.verdicts.iter())
                .filter(|v| v.name == statistic && matches!(v.outcome, Outcome::Pass | Outcome::Fail | Outcome::Diagnostic))
                .map(|v| if v.predicted.is_nan() { v.observed.abs() } else { (v.observed - v.predicted).abs() })
                .collect();
            median(&errs)
        })
        .collect::<Vec<_>>();
    let direction = trend_direction(&medians, cfg.tolerances.flat_rel);
    TrendRow {
        statistic: statistic.to_string(),
        n: cfg.sweep.iter().map(|p| p.n).collect(),
        medians,
        direction,
        target: None,
        outcome: Outcome::Diagnostic,
        detail: String::new(),
    }
}

/// Compares the first and last medians.
pub fn trend_direction(medians: &[f64], flat_rel: f64) -> TrendDirection {
    let (Some(&a), Some(&b)) = (medians.first(), medians.last()) else {
        return TrendDirection::Undetermined;
    };
    if !(a.is_finite() && b.is_finite()) {
        return TrendDirection::Undetermined;
    }
    if (b - a).abs() <= flat_rel * a.abs().max(b.abs()) {
        TrendDirection::Flat
    } else if b < a {
        TrendDirection::Decreasing
    } else {
        TrendDirection::Increasing
    }
}

fn judge_trend(row: &mut TrendRow, target: TrendTarget, final_max: Option<f64>) {
    let dir = row.direction;
    let ok = match target {
        TrendTarget::Decreasing => dir == TrendDirection::Decreasing,
        TrendTarget::Increasing => dir == TrendDirection::Increasing,
        TrendTarget::Bounded => matches!(dir, TrendDirection::Flat | TrendDirection::Decreasing),
    };
    let last = row.medians.last().copied().unwrap_or(f64::NAN);
    let capped = final_max.is_none_or(|m| last <= m);
    row.target = Some(target);
    row.outcome = if ok && capped { Outcome::Pass } else { Outcome::Fail };
    row.detail = match final_max {
        Some(m) => format!("{dir:?} against {target:?}; last median {last} against cap {m}"),
        None => format!("{dir:?} against {target:?}"),
    };
}

/// Trend report over a sweep of at least three points with increasing `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendReport {
    pub scenario: String,
    pub rows: Vec<TrendRow>,
    pub passed: bool,
    /// The underlying run, whose configured trends match the judged rows.
    #[serde(skip)]
    pub run: RunReport,
}

/// Runs the scenario and tracks every statistic across the sweep. Configured
/// trends are judged, all others are reported as diagnostics.
pub fn convergence_sweep(cfg: &ScenarioConfig) -> Result<TrendReport> {
    check_sweep_for_trends(&cfg.sweep)?;
    let run = run_scenario(cfg)?;
    let mut names: Vec<String> = Vec::new();
    for r in &run.records {
        for v in &r.verdicts {
            if !names.contains(&v.name) {
                names.push(v.name.clone());
            }
        }
    }
    let rows: Vec<TrendRow> = names
        .iter()
        .map(|name| {
            let mut row = trend_row(cfg, &run.records, name);
            if let Some(t) = cfg.trends.iter().find(|t| &t.statistic == name) {
                judge_trend(&mut row, t.target, t.final_max);
            }
            row
        })
        .chain(
            cfg.trends
                .iter()
                .filter(|t| !names.contains(&t.statistic))
                .map(|t| {
                    let mut row = trend_row(cfg, &run.records, &t.statistic);
                    judge_trend(&mut row, t.target, t.final_max);
                    row
                }),
        )
        .collect();
    Ok(TrendReport { scenario: cfg.name.clone(), passed: !rows.iter().any(|r| r.failed()) && run.passed, rows, run })
}

/// `out_root/<scenario>/<timestamp>`.
pub fn run_directory(out_root: &Path, scenario: &str, timestamp: &str) -> PathBuf {
    out_root.join(scenario).join(timestamp)
}

fn outcome_label(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "pass",
        Outcome::Fail => "fail",
        Outcome::Skipped => "skipped",
        Outcome::Diagnostic => "diagnostic",
    }
}

/// Writes `report.json` and the CSV tables into `dir`, returning the paths.
///
/// On an I/O error the report itself stays with the caller.
pub fn write_run(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    put("report.json", &report.to_json()?)?;

    let mut per_seed = Csv::new(&["n", "d", "replication", "seed", "check", "outcome", "observed", "predicted", "tolerance"]);
    for r in &report.records {
        for v in &r.verdicts {
            per_seed.row(&[
                r.n.to_string(),
                r.d.to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                v.name.clone(),
                outcome_label(v.outcome).into(),
                fmt_f64(v.observed),
                fmt_f64(v.predicted),
                fmt_f64(v.tolerance),
            ]);
        }
    }
    put("checks.csv", per_seed.into_string().as_bytes())?;

    let mut summary = Csv::new(&[
        "n", "d", "check", "outcome", "passes", "fails", "pass_fraction", "median_observed", "predicted", "tolerance",
    ]);
    for p in &report.points {
        for c in &p.checks {
            summary.row(&[
                p.n.to_string(),
                p.d.to_string(),
                c.name.clone(),
                outcome_label(c.outcome).into(),
                c.passes.to_string(),
                c.fails.to_string(),
                fmt_f64(c.pass_fraction),
                fmt_f64(c.median_observed),
                fmt_f64(c.predicted),
                fmt_f64(c.tolerance),
            ]);
        }
    }
    put("summary.csv", summary.into_string().as_bytes())?;

    if !report.trends.is_empty() {
        put("trends.csv", trends_csv(&report.trends).as_bytes())?;
    }
    for p in &report.points {
        if let Some(toy) = &p.toy {
            let suffix = if report.points.len() == 1 { String::new() } else { format!("_n{}", p.n) };
            put(&format!("toy_table{suffix}.csv"), toy_median_csv(&toy.median).as_bytes())?;
            put(&format!("toy_seeds{suffix}.csv"), toy_seeds_csv(&toy.tables).as_bytes())?;
        }
    }
    Ok(written)
}

pub fn trends_csv(rows: &[TrendRow]) -> String {
    let mut csv = Csv::new(&["statistic", "n", "median", "direction", "outcome"]);
    for row in rows {
        for (n, m) in row.n.iter().zip(&row.medians) {
            csv.row(&[
                row.statistic.clone(),
                n.to_string(),
                fmt_f64(*m),
                format!("{:?}", row.direction).to_lowercase(),
                outcome_label(row.outcome).into(),
            ]);
        }
    }
    csv.into_string()
}

/// Rows `entry_1..entry_12`, `eigenvalue`, `angle_e10`; columns `pc_1..pc_11`.
pub fn toy_median_csv(t: &ToyMedianTable) -> String {
    let mut header = vec!["row".to_string()];
    header.extend((1..=TOY_COLS).map(|i| format!("pc_{i}")));
    let mut csv = Csv::with_header(header);
    let line = |label: String, v: &[f64]| {
        let mut f = vec![label];
        f.extend(v.iter().map(|x| fmt_f64(*x)));
        f
    };
    for k in 0..TOY_ROWS {
        csv.row(&line(format!("entry_{}", k + 1), &t.squared_entries[k]));
    }
    csv.row(&line("eigenvalue".into(), &t.eigenvalues));
    csv.row(&line("angle_e10".into(), &t.angles_to_e10));
    csv.into_string()
}

/// One row per statistic per seed.
pub fn toy_seeds_csv(tables: &[ToyTable]) -> String {
    let mut csv = Csv::new(&["seed", "statistic", "value"]);
    for t in tables {
        let mut row = |name: String, v: f64| csv.row(&[t.seed.to_string(), name, fmt_f64(v)]);
        for (i, l) in t.eigenvalues.iter().enumerate() {
            row(format!("eigenvalue_{}", i + 1), *l);
        }
        for (i, a) in t.angles_to_e10.iter().enumerate() {
            row(format!("angle_e10_pc_{}", i + 1), *a);
        }
        row("e10_energy".into(), t.e10_energy);
        row("max_e10_entry".into(), t.max_e10_entry);
        row("min_e10_angle".into(), t.min_e10_angle);
        row("angle_e1".into(), t.angle_e1);
        row("angle_e2".into(), t.angle_e2);
        row("outlier_count".into(), t.outliers.len() as f64);
        row("outlier_score_gap".into(), t.outlier_score_gap);
    }
    csv.into_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::Schedule;
    use crate::harness::config::{HarnessTolerances, ModelSource, SpikeTier, TrendSpec};

    fn noise_cfg(checks: Vec<CheckKind>) -> ScenarioConfig {
        ScenarioConfig {
            name: "noise".into(),
            model: ModelSource::PureNoise {
                variance: 1.0,
                noise_dist: Default::default(),
                c: AspectLimit::Finite { c: 0.5 },
            },
            sweep: vec![SweepPoint { n: 60, d: 30 }],
            replications: 4,
            seed: 11,
            checks,
            tolerances: HarnessTolerances::default(),
            trends: vec![],
        }
    }

    #[test]
    fn empty_check_set_passes() {
        let r = run_scenario(&noise_cfg(vec![])).unwrap();
        assert!(r.passed);
        assert!(r.points[0].checks.is_empty());
    }

    #[test]
    fn identical_configs_give_identical_bytes() {
        let cfg = noise_cfg(vec![CheckKind::Eigenvalues, CheckKind::Geometry]);
        let a = run_scenario(&cfg).unwrap().to_json().unwrap();
        let b = run_scenario(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trend_classification() {
        assert_eq!(trend_direction(&[1.0, 1.0, 1.0], 1e-9), TrendDirection::Flat);
        assert_eq!(trend_direction(&[2.0, 1.5, 1.0], 1e-9), TrendDirection::Decreasing);
        assert_eq!(trend_direction(&[1.0, 3.0, 2.0], 1e-9), TrendDirection::Increasing);
        let mut row = TrendRow {
            statistic: "s".into(),
            n: vec![1, 2, 3],
            medians: vec![1.0, 1.0, 1.0],
            direction: TrendDirection::Flat,
            target: None,
            outcome: Outcome::Diagnostic,
            detail: String::new(),
        };
        judge_trend(&mut row, TrendTarget::Bounded, None);
        assert_eq!(row.outcome, Outcome::Pass);
        judge_trend(&mut row, TrendTarget::Decreasing, None);
        assert_eq!(row.outcome, Outcome::Fail);
    }

    #[test]
    fn two_point_sweep_is_rejected() {
        let mut cfg = noise_cfg(vec![CheckKind::Eigenvalues]);
        cfg.sweep.push(SweepPoint { n: 120, d: 60 });
        assert!(convergence_sweep(&cfg).is_err());
    }

    #[test]
    fn sweep_tracks_spike_ratio() {
        let cfg = ScenarioConfig {
            name: "spike".into(),
            model: ModelSource::Spiked {
                tiers: vec![SpikeTier { size: 1, delta: Schedule::power(1.2), w: 0.0 }],
                c_lambda: 1.0,
                c: AspectLimit::Finite { c: 1.0 },
                basis: Default::default(),
                noise_dist: Default::default(),
            },
            sweep: vec![SweepPoint { n: 40, d: 40 }, SweepPoint { n: 80, d: 80 }, SweepPoint { n: 160, d: 160 }],
            replications: 6,
            seed: 1,
            checks: vec![CheckKind::Eigenvalues],
            tolerances: HarnessTolerances::default(),
            trends: vec![TrendSpec { statistic: "eigenvalue_ratio[1]".into(), target: TrendTarget::Bounded, final_max: None }],
        };
        let t = convergence_sweep(&cfg).unwrap();
        let row = t.rows.iter().find(|r| r.statistic == "eigenvalue_ratio[1]").unwrap();
        assert_eq!(row.medians.len(), 3);
        assert!(row.target.is_some());
        assert!(t.rows.iter().any(|r| r.target.is_none()));
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_scenario(&noise_cfg(vec![CheckKind::Eigenvalues])).unwrap();
        let files = write_run(&r, dir.path()).unwrap();
        assert!(files.iter().any(|p| p.ends_with("report.json")));
        let csv = fs::read_to_string(dir.path().join("checks.csv")).unwrap();
        assert!(csv.starts_with("n,d,replication,seed,check"));
        assert_eq!(run_directory(Path::new("out"), "a", "t"), PathBuf::from("out/a/t"));
    }
}
