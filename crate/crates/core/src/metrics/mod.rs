//! Edit metrics and questionnaire statistics.

mod edit;
mod questionnaire;
mod stats;

pub use edit::{modification_rate, scope_bucket, word_levenshtein, ScopeBucket};
pub use questionnaire::{
    aggregate, overall_mean, read_responses_csv, render_table, Aggregate, PhysicianSummary,
    QuestionnaireResponse, SafetyFlag, BASELINE, DIMENSIONS, DIMENSION_NAMES, TIME_SAVED,
};
pub use stats::{
    cronbach_alpha, ln_gamma, mean, one_sample_t, one_sample_t_from_scores,
    regularized_incomplete_beta, sample_variance, student_t_two_sided, StatResult,
};
