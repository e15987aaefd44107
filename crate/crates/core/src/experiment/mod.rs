//! Experiment orchestration: configuration, checkpoints, and the
//! pretrain, compress, evaluate pipeline.

mod checkpoint;
mod config;
mod pipeline;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, FORMAT_VERSION};
pub use config::{ConfigMap, DataSource, ExperimentConfig, Mode};
pub use pipeline::{
    load_data, run_experiment, run_with_data, write_outputs, Datasets, Outcome, CHECKPOINT_FILE,
    DIAG_FILE, HISTORY_FILE, REPORT_FILE,
};
