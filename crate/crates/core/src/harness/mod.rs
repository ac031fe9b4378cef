//! Configuration-driven experiment runner: replicate grids, coverage studies
//! and the logistic regression analysis, with CSV/JSON/data-file outputs.

mod config;
mod coverage;
mod logistic;
mod output;
mod simulate;

pub use config::{
    Command, CoverageConfig, DESK_LOCSCALE_FRACTIONS, DESK_LOGISTIC_N, ExperimentConfig, LogisticConfig, MechanismConfig, OutputConfig, Preset, Sampler,
    SamplerOptions, ScheduleConfig, SchedulePreset,
};
pub use coverage::{run_coverage, CoverageCell, CoverageOutput, CoverageRun};
pub use logistic::{central_curve_band, nonprivate_posterior, run_logistic_analysis, CurveBand, LogisticOutput, LogisticRun};
pub use output::{fmt_f64, write_coverage, write_logistic, write_simulate, CsvTable, RESULTS_SCHEMA_VERSION};
pub use simulate::{result_header, run_experiment, CellSummary, ResultRow, RowStatus, SimulateOutput};

use crate::error::{Error, Result};

/// Run `f` on a rayon pool with `workers` threads (the global pool when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
