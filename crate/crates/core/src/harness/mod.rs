//! End-to-end pipelines, power model and Monte Carlo experiments.

mod experiment;
mod pipeline;
mod power;

pub use experiment::{
    aggregate, mean_std, monte_carlo, monte_carlo_with_threads, trial_seed, write_csv, Aggregate, Cell,
    ExperimentOutput, ExperimentSpec, Scheme, TrialResult, CSV_HEADER,
};
pub use pipeline::{dbf_baseline, pshbf_baseline, run_swhbf, run_swhbf_detailed, SwhbfStats};
pub use power::{energy_efficiency, power_total, Architecture, PowerModel, PsBits};
