//! Bandwidth plans, seeded replicates, Monte Carlo experiments and reports.

pub mod bandwidth;
pub mod config;
pub mod experiment;
pub mod report;
pub mod seed;
mod window;

pub use bandwidth::{check_hypotheses, t_range, BandwidthPlan, BandwidthRule, HypothesisReport};
pub use config::{ExperimentConfig, ExperimentKind};
pub use experiment::run_experiment;
pub use report::{write_report, ExperimentReport, ReportFormat, Row};
pub use seed::derive_seed;
