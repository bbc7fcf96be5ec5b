//! Early team-dropout prediction for a project-based online course.
//!
//! The crate covers questionnaire validation (reliability and confirmatory
//! factor analysis), team feature assembly from forum activity, SMOTE
//! oversampling, three classifiers, evaluation reports and synthetic cohorts
//! with planted ground truth.

pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod learners;
pub mod pipeline;
pub mod psychometrics;
pub mod synth;

pub use error::{Error, Result};
