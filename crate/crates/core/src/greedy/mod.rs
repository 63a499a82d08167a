//! Offline greedy construction of the reduced bases and the reduced
//! angular rule.

mod offline;
mod report;
mod sets;

pub use offline::{
    estimators, greedy_offline, greedy_offline_with, initialize, l1_indicators, sample_fom,
    should_stop, update_bases, GreedyConfig, GreedyOutcome, Initialization, SampledSnapshots,
};
pub use report::{GreedyReport, IterationRecord, Termination, REPORT_HEADER};
pub use sets::{select_samples, update_sampled_sets, IndicatorTable, Picks, SampledSets};
