//! Config-driven experiments for random feature operator learning: dataset
//! generation, training, evaluation across resolutions, time composition,
//! feature-count sweeps and result export.

pub mod config;
pub mod run;
pub mod table;
pub mod verify;

pub use config::{ExperimentConfig, Problem};
pub use table::{export_results, ResultRow, ResultTable, RowKind};
