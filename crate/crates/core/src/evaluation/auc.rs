use crate::error::{Error, Result};

/// AUC as an exact ratio `(numerator, denominator)` with
/// `numerator = 2·wins + ties` over positive × negative pairs and
/// `denominator = 2·P·N`.
///
/// Computed from doubled mid-ranks, so all arithmetic stays in integers.
pub fn auc_counts(y_true: &[u8], scores: &[f64]) -> Result<(u64, u64)> {
    if y_true.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: scores.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::InvalidConfig(format!("score {s} is not a number")));
    }
    let pos = y_true.iter().filter(|&&y| y == 1).count() as u64;
    let neg = y_true.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum over positives of doubled mid-ranks (1-based ranks i..=j give i + j).
    let mut rank_sum2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let doubled = (start + 1 + end + 1) as u64;
        let positives = order[start..=end].iter().filter(|&&i| y_true[i] == 1).count() as u64;
        rank_sum2 += doubled * positives;
        start = end + 1;
    }
    // 2U = 2·R_pos − P(P+1).
    Ok((rank_sum2 - pos * (pos + 1), 2 * pos * neg))
}

/// Probability a random positive outscores a random negative, ties count ½.
pub fn auc_roc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    let (num, den) = auc_counts(y_true, scores)?;
    Ok(num as f64 / den as f64)
}
