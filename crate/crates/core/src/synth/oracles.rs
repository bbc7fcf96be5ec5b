//! Slow, independent reference implementations used to cross-check the
//! primary code paths.

use crate::error::{Error, Result};

/// Cronbach's alpha by direct summation. `rows[i][j]` is respondent `i`, item `j`.
pub fn oracle_alpha(rows: &[Vec<f64>]) -> Result<f64> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} respondents")));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(Error::InsufficientData(format!("{k} items")));
    }
    for r in rows {
        if r.len() != k {
            return Err(Error::LengthMismatch {
                left: k,
                right: r.len(),
            });
        }
    }
    let nf = n as f64;
    let mut item_var_sum = 0.0;
    for j in 0..k {
        let mut s = 0.0;
        for r in rows {
            s += r[j];
        }
        let m = s / nf;
        let mut ss = 0.0;
        for r in rows {
            ss += (r[j] - m) * (r[j] - m);
        }
        item_var_sum += ss / (nf - 1.0);
    }
    let mut totals = Vec::with_capacity(n);
    for r in rows {
        let mut t = 0.0;
        for v in r {
            t += v;
        }
        totals.push(t);
    }
    let mut s = 0.0;
    for t in &totals {
        s += t;
    }
    let m = s / nf;
    let mut ss = 0.0;
    for t in &totals {
        ss += (t - m) * (t - m);
    }
    let total_var = ss / (nf - 1.0);
    if total_var == 0.0 {
        return Err(Error::Degenerate("total score has zero variance".into()));
    }
    let kf = k as f64;
    Ok(kf / (kf - 1.0) * (1.0 - item_var_sum / total_var))
}

/// `(2·wins + ties, 2·P·N)` by enumerating every positive × negative pair.
pub fn oracle_auc_counts(y: &[u8], s: &[f64]) -> Result<(u64, u64)> {
    if y.len() != s.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: s.len(),
        });
    }
    let mut num = 0u64;
    let mut pairs = 0u64;
    for i in 0..y.len() {
        if y[i] != 1 {
            continue;
        }
        for j in 0..y.len() {
            if y[j] != 0 {
                continue;
            }
            pairs += 1;
            if s[i] > s[j] {
                num += 2;
            } else if s[i] == s[j] {
                num += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::SingleClass);
    }
    Ok((num, 2 * pairs))
}

pub fn oracle_auc(y: &[u8], s: &[f64]) -> Result<f64> {
    oracle_auc_counts(y, s).map(|(num, den)| num as f64 / den as f64)
}

const SEGMENT_TOL: f64 = 1e-9;

/// True when `x` lies within 1e-9 (Euclidean) of the segment joining some
/// pair of minority rows.
pub fn oracle_segment_check(x: &[f64], minority: &[Vec<f64>]) -> bool {
    for a in 0..minority.len() {
        for b in a + 1..minority.len() {
            let (p, q) = (&minority[a], &minority[b]);
            let mut dd = 0.0;
            let mut dx = 0.0;
            for i in 0..x.len() {
                dd += (q[i] - p[i]) * (q[i] - p[i]);
                dx += (x[i] - p[i]) * (q[i] - p[i]);
            }
            let t = if dd == 0.0 { 0.0 } else { (dx / dd).clamp(0.0, 1.0) };
            let mut dist2 = 0.0;
            for i in 0..x.len() {
                let c = p[i] + t * (q[i] - p[i]);
                dist2 += (x[i] - c) * (x[i] - c);
            }
            if dist2.sqrt() <= SEGMENT_TOL {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_columns_give_one() {
        let rows: Vec<Vec<f64>> = [1.0, 2.0, 4.0, 5.0].iter().map(|&v| vec![v, v, v]).collect();
        assert!((oracle_alpha(&rows).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn auc_fixtures() {
        assert_eq!(oracle_auc(&[0, 1], &[0.2, 0.9]).unwrap(), 1.0);
        assert_eq!(oracle_auc(&[0, 1, 0, 1], &[0.4, 0.3, 0.2, 0.8]).unwrap(), 0.75);
        assert!(matches!(oracle_auc(&[0, 0], &[0.2, 0.9]), Err(Error::SingleClass)));
    }

    #[test]
    fn segment_check() {
        let m = vec![vec![0.0, 0.0], vec![2.0, 2.0], vec![4.0, 0.0]];
        assert!(oracle_segment_check(&[1.0, 1.0], &m));
        assert!(oracle_segment_check(&[2.0, 0.0], &m));
        assert!(oracle_segment_check(&[4.0, 0.0], &m));
        assert!(!oracle_segment_check(&[2.0, 1.0], &m));
        assert!(!oracle_segment_check(&[5.0, 0.0], &m));
    }
}
