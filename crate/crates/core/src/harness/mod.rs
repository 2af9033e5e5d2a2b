//! Scenario-driven experiments: configuration, synthetic channels,
//! proportional-fair weights, result rows and their serialization.

mod channels;
mod experiment;
mod output;
mod pf;
mod scenario;
mod verify;

pub use channels::{generate_channels, interval_seed};
pub use experiment::{run_experiment, summarize, ResultRow, RunOptions, SnrSummary};
pub use output::{format_sig9, write_csv, write_json, OutputFormat, CSV_COLUMNS};
pub use pf::{update_pf_weights, PfState, THROUGHPUT_FLOOR};
pub use scenario::{
    Algorithm, Alphabet, CodebookSpec, ConstraintSpec, GroundStats, Instance, MatrixSpec,
    ProfileSpec, Scenario, UserOverride,
};
pub use verify::{verify_scenario, CheckResult, VERIFY_UNIVERSE};

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("at snr {snr_db} dB, interval {interval}: {source}")]
    Run {
        snr_db: f64,
        interval: usize,
        #[source]
        source: Error,
    },

    #[error(transparent)]
    Core(#[from] Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 invalid config, 3 capacity, 4 numeric, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            HarnessError::Config(_) => return 2,
            HarnessError::Io(_) => return 1,
            HarnessError::Run { source, .. } => source,
            HarnessError::Core(e) => e,
        };
        match core {
            Error::InvalidArgument(_) => 2,
            Error::Capacity { .. } => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;
