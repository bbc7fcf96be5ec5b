//! Subscale descriptives and Cronbach's alpha.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ParticipantResponse;
use crate::psychometrics::SubscaleMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleStats {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

impl SubscaleStats {
    /// `Goal Setting (μ=4.06)`.
    pub fn label(&self) -> String {
        format_mean(&self.name, self.mean)
    }
}

/// Up to four decimals, trailing zeros trimmed.
pub fn format_mean(name: &str, mean: f64) -> String {
    let s = format!("{mean:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{name} (μ={s})")
}

/// Per-respondent subscale score: the mean of that respondent's items.
pub fn subscale_score(r: &ParticipantResponse, items: &[usize]) -> f64 {
    items.iter().map(|&i| f64::from(r.items[i - 1])).sum::<f64>() / items.len() as f64
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn descriptives(responses: &[ParticipantResponse], map: &SubscaleMap) -> Result<Vec<SubscaleStats>> {
    if responses.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "descriptives need at least 2 responses, got {}",
            responses.len()
        )));
    }
    check_map(map)?;
    Ok(map
        .subscales()
        .iter()
        .map(|s| {
            let scores: Vec<f64> = responses.iter().map(|r| subscale_score(r, &s.items)).collect();
            let (mean, sd) = mean_sd(&scores);
            SubscaleStats {
                name: s.name.clone(),
                mean,
                sd,
            }
        })
        .collect())
}

fn check_map(map: &SubscaleMap) -> Result<()> {
    if map.n_items() != crate::ingest::N_ITEMS {
        return Err(Error::InvalidConfig(format!(
            "subscale map covers {} items but responses have {}",
            map.n_items(),
            crate::ingest::N_ITEMS
        )));
    }
    Ok(())
}

fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Cronbach's alpha of an `n × k` matrix (rows are respondents).
///
/// `α = k/(k−1) · (1 − Σ s²ᵢ / s²_total)` with sample (n−1) variances.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<f64> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "alpha needs n >= 2 respondents, got {n}"
        )));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(Error::InsufficientData(format!("alpha needs k >= 2 items, got {k}")));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::LengthMismatch {
            left: k,
            right: bad.len(),
        });
    }
    let item_var: f64 = (0..k).map(|j| sample_variance(rows.iter().map(move |r| r[j]))).sum();
    let total_var = sample_variance(rows.iter().map(|r| r.iter().sum::<f64>()));
    if total_var <= 0.0 {
        return Err(Error::Degenerate("variance of row totals is zero".into()));
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleAlpha {
    pub name: String,
    pub alpha: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub n: usize,
    pub subscales: Vec<SubscaleAlpha>,
}

pub fn alpha_report(responses: &[ParticipantResponse], map: &SubscaleMap) -> Result<AlphaReport> {
    check_map(map)?;
    let subscales = map
        .subscales()
        .iter()
        .map(|s| {
            let m: Vec<Vec<f64>> = responses
                .iter()
                .map(|r| s.items.iter().map(|&i| f64::from(r.items[i - 1])).collect())
                .collect();
            Ok(SubscaleAlpha {
                name: s.name.clone(),
                alpha: cronbach_alpha(&m)?,
                k: s.items.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AlphaReport {
        n: responses.len(),
        subscales,
    })
}
