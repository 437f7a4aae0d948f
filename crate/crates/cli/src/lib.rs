//! Library half of the `treealign` command: dataset ingestion, kNN
//! experiments and benchmark plumbing, kept out of `main.rs` so tests can
//! drive them directly.

pub mod dataset;
pub mod experiment;
pub mod fmt;

pub use dataset::{load_dataset, Dataset};
pub use experiment::{
    bench_pairs, knn_experiment, median, synthetic_two_family, BenchRow, EvalKind,
    ExperimentConfig, KnnReport, TaskKind,
};
