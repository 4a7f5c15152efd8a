//! End-to-end experiments: hypotheses of the limit theorem along a family, simulation
//! against limit laws, and the second-moment criterion.

mod experiments;
mod report;
mod template;
mod tv;

pub use experiments::{
    check_conditions, reproduce, second_moment_check, LabOptions, DEFAULT_MAX_CELLS, EXAMPLE_IDS,
};
pub use report::{ExperimentReport, ReportRow, SecondMomentSummary, SubsequenceSummary, Trend, Verdicts};
pub use template::{FamilyTemplate, PRule, TemplateKind};
pub use tv::{tv_distance, TvDistance};
