//! Experiment runner: builds datasets, drives the reservoir, trains the
//! readout and aggregates metrics across replications and sweep points.

mod experiment;
mod output;
mod spec;
mod sweep;

pub use experiment::{
    build_dataset, replication_params, run_experiment, run_on_dataset, run_replication,
    PredictionTrace, ReplicationResult, ResultRecord,
};
pub use output::{emit_figure_data, read_records, write_text, Figure, ResultsWriter};
pub use spec::{
    derive_seed, ExperimentSpec, MaskSpec, RidgeSpec, TaskSpec, DEFAULT_REPLICATIONS,
    DEFAULT_TEST_LEN, DEFAULT_TRAIN_LEN, DEFAULT_WASHOUT, SCHEMA_VERSION,
};
pub use sweep::{apply_axis, expand, run_sweep, with_threads, Axis, RunOptions, SWEEPABLE_FIELDS};
