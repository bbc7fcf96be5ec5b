use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which feature columns get z-scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeMode {
    /// Every column.
    #[default]
    All,
    /// Only the questionnaire aggregates; activity maxima stay raw.
    OslqOnly,
}

impl StandardizeMode {
    /// Column mask for a matrix whose first `n_activity` columns are activity features.
    pub fn mask(self, n_cols: usize, n_activity: usize) -> Vec<bool> {
        (0..n_cols)
            .map(|j| match self {
                StandardizeMode::All => true,
                StandardizeMode::OslqOnly => j >= n_activity,
            })
            .collect()
    }
}

impl std::str::FromStr for StandardizeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "all" => Ok(Self::All),
            "oslq-only" => Ok(Self::OslqOnly),
            other => Err(format!("unknown standardize mode `{other}` (expected all | oslq-only)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub means: Vec<f64>,
    /// Sample (n−1) standard deviations.
    pub sds: Vec<f64>,
    /// Columns actually rescaled by `apply_standardizer`.
    pub scaled: Vec<bool>,
    /// Zero-variance columns among those requested; passed through unchanged.
    pub constant: Vec<bool>,
}

/// Fits per-column mean and sd for the columns selected by `include`.
pub fn fit_standardizer(rows: &[Vec<f64>], include: &[bool]) -> Result<StandardizationStats> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "standardizer needs at least 2 rows, got {n}"
        )));
    }
    let p = include.len();
    if let Some(r) = rows.iter().find(|r| r.len() != p) {
        return Err(Error::Dimension {
            expected: p,
            got: r.len(),
        });
    }
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for j in 0..p {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        means[j] = mean;
        sds[j] = var.sqrt();
    }
    let constant: Vec<bool> = (0..p)
        .map(|j| include[j] && sds[j] <= 1e-12 * (1.0 + means[j].abs()))
        .collect();
    let scaled = (0..p).map(|j| include[j] && !constant[j]).collect();
    Ok(StandardizationStats {
        means,
        sds,
        scaled,
        constant,
    })
}

pub fn apply_standardizer(rows: &[Vec<f64>], stats: &StandardizationStats) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| {
                    if stats.scaled[j] {
                        (v - stats.means[j]) / stats.sds[j]
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_scores_with_sample_sd() {
        let rows = vec![vec![1.0, 7.0], vec![2.0, 7.0], vec![3.0, 7.0]];
        let stats = fit_standardizer(&rows, &[true, true]).unwrap();
        let z = apply_standardizer(&rows, &stats);
        assert_eq!(z.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
        assert!(stats.constant[1] && !stats.scaled[1]);
        assert_eq!(z.iter().map(|r| r[1]).collect::<Vec<_>>(), vec![7.0; 3]);
    }

    #[test]
    fn centered_after_apply() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![(i * i) as f64 * 0.37, (i as f64).sin()]).collect();
        let stats = fit_standardizer(&rows, &[true, true]).unwrap();
        let z = apply_standardizer(&rows, &stats);
        for j in 0..2 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 49.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oslq_only_mask() {
        assert_eq!(
            StandardizeMode::OslqOnly.mask(6, 4),
            vec![false, false, false, false, true, true]
        );
        let rows = vec![vec![10.0, 1.0], vec![20.0, 3.0]];
        let stats = fit_standardizer(&rows, &StandardizeMode::OslqOnly.mask(2, 1)).unwrap();
        let z = apply_standardizer(&rows, &stats);
        assert_eq!(z[0][0], 10.0);
        assert!((z[0][1] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn needs_two_rows() {
        assert!(matches!(
            fit_standardizer(&[vec![1.0]], &[true]),
            Err(Error::InsufficientData(_))
        ));
    }
}
