//! Synthetic cohorts with planted structure, and brute-force oracles.

mod dropout;
mod factor;
pub mod oracles;

pub use dropout::{gen_dropout_cohort, solve_intercept, ActivityRates, DropoutCohort, DropoutPlan, DropoutTruth};
pub use factor::{gen_factor_cohort, Discretization, FactorPlan};
pub use oracles::{oracle_alpha, oracle_auc, oracle_auc_counts, oracle_segment_check};
