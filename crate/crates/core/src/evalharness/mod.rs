//! Experiment matrix: configuration, execution, metrics and reporting.

mod analysis;
mod config;
mod fixture;
mod metrics;
mod runner;

pub use analysis::{
    length_bucket_analysis, lexicon_coverage, pos_pair_stats, BucketResult, LengthBucket, PosPairStats,
};
pub use config::{PairConfig, RunConfig, Setup, SourceConfig, SplitConfig};
pub use fixture::{target_rules, write_synthetic_fixture, FixtureOptions, SynthSpec};
pub use metrics::{aggregate_seeds, macro_f1, ConfusionMatrix};
pub use runner::{
    best_transforms, plan, run_matrix, CellResult, ExperimentCell, Outcome, PairData, PairSummary, Report,
    RunSettings, SourceData, Sources, Timing, TrainingSummary,
};
