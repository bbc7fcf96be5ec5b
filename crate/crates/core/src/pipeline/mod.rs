//! Team feature construction, standardization and class balancing.

mod features;
mod smote;
mod standardize;

pub use features::{
    activity_features, assemble, cumulative_activity, feature_columns, team_max, team_oslq, write_feature_csv,
    FeatureMatrix, OslqAggregate, ACTIVITY_FEATURES,
};
pub use smote::{smote, smote_with_rng, Resampled, RowOrigin, SmoteConfig};
pub use standardize::{apply_standardizer, fit_standardizer, StandardizationStats, StandardizeMode};
