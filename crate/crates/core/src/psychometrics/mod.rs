//! Questionnaire validation: descriptives, internal consistency and
//! confirmatory factor analysis.

mod cfa;
pub mod fit_indices;
mod reliability;
mod report;
mod subscales;

pub use cfa::{
    fit_cfa, fit_cfa_traced, model_df, read_covariance_csv, response_covariance, sample_covariance, CfaConfig, CfaFit,
    CfaModel, Discrepancy, OptimizerTrace,
};
pub use fit_indices::{baseline_model, fit_indices, noncentral_chi2_cdf, rmsea, rmsea_ci, FitIndices};
pub use reliability::{
    alpha_report, cronbach_alpha, descriptives, format_mean, subscale_score, AlphaReport, SubscaleAlpha, SubscaleStats,
};
pub use report::ValidationReport;
pub use subscales::{Subscale, SubscaleMap};
