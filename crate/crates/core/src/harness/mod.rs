//! Scenario configuration, seeded replication, sweeps, the toy example and
//! report persistence.

mod config;
pub mod export;
mod format;
mod oracle;
mod report;
mod run;
mod toy;

pub use config::{
    BasisChoice, CheckKind, HarnessTolerances, ModelSource, PointModel, ScenarioConfig, SpikeTier, SweepPoint,
    TrendSpec, TrendTarget,
};
pub use format::{fmt_f64, to_json_bytes, Csv};
pub use oracle::{oracle_eigen, ORACLE_MAX_DIM};
pub use report::{aggregate, required_passes, AggregateVerdict};
pub use run::{
    convergence_sweep, run_directory, run_scenario, toy_median_csv, toy_seeds_csv, trend_direction, trends_csv,
    write_run, PointReport, ReplicationRecord, RunReport, ToyPoint, TrendDirection, TrendReport, TrendRow,
};
pub use toy::{
    toy_example, toy_replication, toy_spec, toy_table, toy_verdicts, ToyMedianTable, ToySummary, ToyTable, TOY_COLS,
    TOY_D, TOY_N, TOY_OUTLIER, TOY_ROWS, TOY_TAU_NOTE,
};
