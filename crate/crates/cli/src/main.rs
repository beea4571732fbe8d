//! `hdoutlier`: generate data from the outlier mixture model and run the
//! geometry and PCA consistency checks.
//!
//! Exit codes: 0 when every check passed or a pure generation succeeded,
//! 1 when a check failed, 2 on configuration or usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdoutlier::consistency::Outcome;
use hdoutlier::geometry::{empirical_geometry, transition_sweep};
use hdoutlier::harness::{
    convergence_sweep, export, run_scenario, to_json_bytes, trends_csv, write_run, CheckKind, ModelSource, RunReport,
    ScenarioConfig, SweepPoint, TOY_D, TOY_N, TOY_TAU_NOTE,
};
use hdoutlier::model::{generate, GeneratedDataset, MixtureModelSpec};
use hdoutlier::spectra::sample_covariance_spectrum;
use hdoutlier::Error;

#[derive(Parser, Debug)]
#[command(name = "hdoutlier", version, about = "Simulate high-dimensional outliers and check PCA consistency")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one dataset and write the data matrix and memberships.
    Generate(DataArgs),
    /// Draw one dataset and write its sample covariance spectrum.
    Spectrum(SpectrumArgs),
    /// Draw one dataset and write scaled norms and pairwise distances.
    Geometry(GeometryArgs),
    /// Run the eigenvalue checks of a scenario.
    VerifyEigenvalues(Common),
    /// Run the eigenvector checks of a scenario.
    VerifyEigenvectors(Common),
    /// Reproduce the toy example table over several seeds.
    ToyExample(ToyArgs),
    /// Run a scenario over its sweep and judge the configured trends.
    Sweep(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Root directory for reports.
    #[arg(long, env = "HDOUTLIER_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Format of the tables next to report.json.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Caps the number of worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Scenario configuration or bare model spec (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Dataset seed; overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample count; required for a bare model spec, overrides the first sweep point otherwise.
    #[arg(long)]
    n: Option<usize>,
    /// Dimension for scenario families that take one; defaults to the first sweep point.
    #[arg(long)]
    d: Option<usize>,
    /// Root directory for outputs.
    #[arg(long, env = "HDOUTLIER_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Caps the number of worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Also write the leading eigenvectors (at most this many).
    #[arg(long)]
    eigenvectors: Option<usize>,
}

#[derive(Args, Debug)]
struct GeometryArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Run a transition sweep over the sweep dimensions of a geometry scenario.
    #[arg(long)]
    transition: bool,
    /// Replications for the transition sweep.
    #[arg(long, default_value_t = 20)]
    reps: usize,
}

#[derive(Args, Debug)]
struct ToyArgs {
    /// Optional scenario configuration; defaults to the built-in toy scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; replication seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of replications.
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Root directory for reports.
    #[arg(long, env = "HDOUTLIER_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Format of the tables next to report.json.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Caps the number of worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

/// Failure of a command, mapped onto the exit code.
enum Failure {
    Usage(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code.clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Generate(a) => {
            set_threads(a.threads)?;
            cmd_generate(&a)
        }
        Command::Spectrum(a) => {
            set_threads(a.data.threads)?;
            cmd_spectrum(&a)
        }
        Command::Geometry(a) => {
            set_threads(a.data.threads)?;
            cmd_geometry(&a)
        }
        Command::VerifyEigenvalues(a) => cmd_verify(&a, CheckKind::Eigenvalues),
        Command::VerifyEigenvectors(a) => cmd_verify(&a, CheckKind::Eigenvectors),
        Command::ToyExample(a) => cmd_toy(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

fn set_threads(threads: Option<usize>) -> CmdResult {
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_scenario(c: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg: ScenarioConfig = serde_json::from_str(&read_text(&c.config)?)
        .map_err(|e| Failure::Usage(format!("invalid scenario {}: {e}", c.config.display())))?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = c.reps {
        cfg.replications = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// A single dataset request: a bare spec or one point of a scenario.
struct DataRequest {
    name: String,
    spec: MixtureModelSpec,
    model: Option<ModelSource>,
    n: usize,
    seed: u64,
}

fn load_data_request(a: &DataArgs) -> Result<DataRequest, Failure> {
    let text = read_text(&a.config)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("invalid JSON in {}: {e}", a.config.display())))?;
    let is_scenario = value.get("model").is_some() && value.get("sweep").is_some();
    if is_scenario {
        let cfg: ScenarioConfig =
            serde_json::from_value(value).map_err(|e| Failure::Usage(format!("invalid scenario: {e}")))?;
        let first = cfg.sweep.first().copied().ok_or_else(|| Failure::Usage("sweep is empty".into()))?;
        let point = SweepPoint { n: a.n.unwrap_or(first.n), d: a.d.unwrap_or(first.d) };
        if point.n == 0 {
            return Err(Failure::Usage("n must be at least 1".into()));
        }
        let m = cfg.model.at(point)?;
        m.spec.validate()?;
        Ok(DataRequest {
            name: cfg.name.clone(),
            spec: m.spec,
            model: Some(cfg.model),
            n: point.n,
            seed: a.seed.unwrap_or(cfg.seed),
        })
    } else {
        let spec: MixtureModelSpec =
            serde_json::from_value(value).map_err(|e| Failure::Usage(format!("invalid model spec: {e}")))?;
        spec.validate()?;
        let n = a.n.ok_or_else(|| Failure::Usage("a bare model spec needs --n".into()))?;
        if n == 0 {
            return Err(Failure::Usage("n must be at least 1".into()));
        }
        let name = a.config.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
        Ok(DataRequest { name, spec, model: None, n, seed: a.seed.unwrap_or(0) })
    }
}

fn timestamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string()
}

/// `out/<scenario>/<timestamp>`, made unique if a run already used it.
fn fresh_dir(out: &Path, scenario: &str) -> Result<PathBuf, Failure> {
    let base = hdoutlier::harness::run_directory(out, scenario, &timestamp());
    let mut dir = base.clone();
    let mut k = 1;
    while dir.exists() {
        dir = PathBuf::from(format!("{}-{k}", base.display()));
        k += 1;
    }
    fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> CmdResult {
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))
}

fn dataset(req: &DataRequest) -> Result<GeneratedDataset, Failure> {
    Ok(generate(&req.spec, req.n, req.seed)?)
}

fn cmd_generate(a: &DataArgs) -> CmdResult {
    let req = load_data_request(a)?;
    let ds = dataset(&req)?;
    let dir = fresh_dir(&a.out, &req.name)?;
    write(&dir, "spec.json", &to_json_bytes(&ds.spec)?)?;
    write(&dir, "memberships.json", &export::memberships_json(&ds)?)?;
    match a.format {
        Format::Csv => write(&dir, "dataset.csv", export::dataset_csv(&ds).as_bytes())?,
        Format::Json => {
            let rows: Vec<Vec<f64>> = (0..ds.d()).map(|i| ds.x.row(i).iter().copied().collect()).collect();
            write(&dir, "dataset.json", &to_json_bytes(&rows)?)?
        }
    }
    let outliers = ds.outlier_flags().iter().filter(|&&f| f).count();
    println!("generated d = {}, n = {}, seed = {}: {outliers} samples in an outlier branch", ds.d(), ds.n, ds.seed);
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_spectrum(a: &SpectrumArgs) -> CmdResult {
    let req = load_data_request(&a.data)?;
    let ds = dataset(&req)?;
    let s = sample_covariance_spectrum(&ds.x)?;
    let dir = fresh_dir(&a.data.out, &req.name)?;
    match a.data.format {
        Format::Csv => {
            write(&dir, "spectrum.csv", export::spectrum_csv(&s).as_bytes())?;
            if let Some(k) = a.eigenvectors {
                write(&dir, "eigenvectors.csv", export::eigenvectors_csv(&s, k).as_bytes())?;
            }
        }
        Format::Json => {
            write(&dir, "spectrum.json", &to_json_bytes(&s.eigenvalues)?)?;
            if let Some(k) = a.eigenvectors {
                let cols: Vec<Vec<f64>> =
                    (0..k.min(s.retained())).map(|i| s.eigenvectors.column(i).iter().copied().collect()).collect();
                write(&dir, "eigenvectors.json", &to_json_bytes(&cols)?)?;
            }
        }
    }
    println!("{:?} path, {} eigenvalues, {} retained", s.method, s.eigenvalues.len(), s.retained());
    for (i, l) in s.eigenvalues.iter().take(5).enumerate() {
        println!("  λ̂_{} = {l:.6}", i + 1);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_geometry(a: &GeometryArgs) -> CmdResult {
    let req = load_data_request(&a.data)?;
    let scenario = match &req.model {
        Some(ModelSource::Geometry { scenario }) => Some(*scenario),
        _ => None,
    };
    let dir = fresh_dir(&a.data.out, &req.name)?;
    if a.transition {
        let Some(sc) = scenario else {
            return Err(Failure::Usage("--transition needs a geometry scenario".into()));
        };
        let cfg: ScenarioConfig = serde_json::from_str(&read_text(&a.data.config)?)
            .map_err(|e| Failure::Usage(format!("invalid scenario: {e}")))?;
        let dims: Vec<usize> = cfg.sweep.iter().map(|p| p.d).collect();
        let table = transition_sweep(&sc, &dims, req.n, a.reps, req.seed)?;
        write(&dir, "transition.json", &to_json_bytes(&table)?)?;
        for row in &table.rows {
            println!(
                "d = {:>7}  K = {:>5}  outlier gap {:.4}  class difference {:.4}",
                row.d, row.k, row.median_outlier_gap, row.median_class_difference
            );
        }
        println!("gap shrinks: {}", table.gap_shrinks);
        println!("wrote {}", dir.display());
        return if table.gap_shrinks { Ok(()) } else { Err(Failure::Checks) };
    }
    let ds = dataset(&req)?;
    let g = empirical_geometry(&ds)?;
    match a.data.format {
        Format::Csv => {
            write(&dir, "pairs.csv", export::geometry_pairs_csv(&g).as_bytes())?;
            write(&dir, "norms.csv", export::geometry_norms_csv(&g).as_bytes())?;
        }
        Format::Json => {
            let pairs: Vec<_> = g.pairs();
            write(&dir, "pairs.json", &to_json_bytes(&pairs)?)?;
            write(&dir, "norms.json", &to_json_bytes(&g.scaled_norms)?)?;
        }
    }
    if let Some(sc) = scenario {
        let summary = g.summarize(&sc)?;
        write(&dir, "summary.json", &export::geometry_summary_json(&summary)?)?;
        for (label, c) in [
            ("non-outlier norm", &summary.norm_non_outlier),
            ("outlier norm", &summary.norm_outlier),
            ("non/non distance", &summary.dist_non_non),
            ("out/non distance", &summary.dist_out_non),
        ] {
            println!("{label:<18} mean {:.4}  limit {:?}  ({} values)", c.empirical_mean, c.predicted, c.count);
        }
    } else {
        println!("no geometry scenario: wrote empirical tables only");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn print_run(report: &RunReport) {
    for p in &report.points {
        if let Some(r) = &p.regime {
            println!("n = {}, d = {}: regime {:?}, ratios {:?}", p.n, p.d, r.regime, r.ratios);
        } else {
            println!("n = {}, d = {}", p.n, p.d);
        }
        for c in &p.checks {
            let tag = match c.outcome {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Skipped => "SKIP",
                Outcome::Diagnostic => "INFO",
            };
            println!(
                "  {tag} {:<28} passes {}/{}  median observed {:.6}",
                c.name,
                c.passes,
                c.passes + c.fails,
                c.median_observed
            );
        }
    }
    for t in &report.trends {
        println!("trend {}: medians {:?} -> {}", t.statistic, t.medians, t.detail);
    }
    println!(
        "{}: {} failed check(s)",
        if report.passed { "PASS" } else { "FAIL" },
        report.failed_checks
    );
}

fn finish_run(report: &RunReport, out: &Path, format: Format) -> CmdResult {
    let dir = fresh_dir(out, &report.scenario)?;
    match format {
        Format::Csv => {
            write_run(report, &dir)?;
        }
        Format::Json => write(&dir, "report.json", &report.to_json()?)?,
    }
    print_run(report);
    println!("wrote {}", dir.display());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn cmd_verify(a: &Common, check: CheckKind) -> CmdResult {
    set_threads(a.threads)?;
    let mut cfg = load_scenario(a)?;
    cfg.checks = vec![check];
    cfg.trends.clear();
    let report = run_scenario(&cfg)?;
    finish_run(&report, &a.out, a.format)
}

fn cmd_toy(a: &ToyArgs) -> CmdResult {
    set_threads(a.threads)?;
    println!("{TOY_TAU_NOTE}");
    let mut cfg = match &a.config {
        Some(path) => {
            let cfg: ScenarioConfig = serde_json::from_str(&read_text(path)?)
                .map_err(|e| Failure::Usage(format!("invalid scenario {}: {e}", path.display())))?;
            if cfg.model != ModelSource::Toy {
                return Err(Failure::Usage("toy-example needs a scenario with the toy model".into()));
            }
            cfg
        }
        None => ScenarioConfig {
            name: "toy_example".into(),
            model: ModelSource::Toy,
            sweep: vec![SweepPoint { n: TOY_N, d: TOY_D }],
            replications: a.reps,
            seed: a.seed,
            checks: vec![CheckKind::ToyTable],
            tolerances: Default::default(),
            trends: vec![],
        },
    };
    cfg.seed = a.seed;
    cfg.replications = a.reps;
    if !cfg.checks.contains(&CheckKind::ToyTable) {
        cfg.checks.push(CheckKind::ToyTable);
    }
    cfg.validate()?;
    let report = run_scenario(&cfg)?;
    if let Some(toy) = report.points.first().and_then(|p| p.toy.as_ref()) {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        println!("median eigenvalues  {}", fmt(&toy.median.eigenvalues));
        println!("median angles to e10 {}", fmt(&toy.median.angles_to_e10));
        println!("median squared e10 entries {}", fmt(&toy.median.squared_entries[9]));
    }
    finish_run(&report, &a.out, a.format)
}

fn cmd_sweep(a: &Common) -> CmdResult {
    set_threads(a.threads)?;
    let cfg = load_scenario(a)?;
    let trends = convergence_sweep(&cfg)?;
    let dir = fresh_dir(&a.out, &cfg.name)?;
    match a.format {
        Format::Csv => {
            write_run(&trends.run, &dir)?;
            write(&dir, "trends_all.csv", trends_csv(&trends.rows).as_bytes())?;
        }
        Format::Json => {
            write(&dir, "report.json", &trends.run.to_json()?)?;
            write(&dir, "trends_all.json", &to_json_bytes(&trends)?)?;
        }
    }
    print_run(&trends.run);
    for row in trends.rows.iter().filter(|r| r.target.is_none()) {
        println!("tracked {}: medians {:?} ({:?})", row.statistic, row.medians, row.direction);
    }
    println!("wrote {}", dir.display());
    if trends.run.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}
