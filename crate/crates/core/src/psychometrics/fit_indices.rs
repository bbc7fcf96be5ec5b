//! Baseline (independence) model, incremental fit indices, RMSEA and its
//! confidence interval from the noncentral chi-square distribution.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Poisson tail mass left out of the noncentral chi-square series.
const SERIES_TAIL: f64 = 1e-10;

/// Central chi-square CDF.
pub fn chi2_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(df / 2.0, x / 2.0)
    }
}

/// Upper tail `P(χ²_df ≥ x)`.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df / 2.0, x / 2.0)
    }
}

/// Noncentral chi-square CDF as a Poisson(λ/2) mixture of central chi-square
/// CDFs with `df + 2j` degrees of freedom.
///
/// Terms are accumulated outward from the Poisson mode, always taking the
/// heavier side next, until the unvisited Poisson mass is below `1e-10`.
pub fn noncentral_chi2_cdf(x: f64, df: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return chi2_cdf(x, df);
    }
    let half = lambda / 2.0;
    let ln_half = half.ln();
    let weight = |j: usize| (-half + j as f64 * ln_half - ln_gamma(j as f64 + 1.0)).exp();
    let term = |j: usize| chi2_cdf(x, df + 2.0 * j as f64);

    let mode = half.floor() as usize;
    let mut mass = weight(mode);
    let mut sum = mass * term(mode);
    let mut down = mode.checked_sub(1);
    let mut up = mode + 1;
    let mut w_down = down.map(weight).unwrap_or(0.0);
    let mut w_up = weight(up);
    while 1.0 - mass >= SERIES_TAIL {
        if w_up == 0.0 && w_down == 0.0 {
            break;
        }
        if w_down >= w_up {
            let j = down.expect("nonzero weight implies index");
            sum += w_down * term(j);
            mass += w_down;
            down = j.checked_sub(1);
            w_down = down.map(weight).unwrap_or(0.0);
        } else {
            sum += w_up * term(up);
            mass += w_up;
            up += 1;
            w_up = weight(up);
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Independence model: `Σ_b = diag(S)`.
///
/// Returns `(χ²_b, df_b)` with `χ²_b = (n−1)(ln|diag S| − ln|S|)` and
/// `df_b = p(p−1)/2`.
pub fn baseline_model(s: &DMatrix<f64>, n: usize) -> Result<(f64, usize)> {
    let p = s.nrows();
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("sample covariance".into()))?;
    let ln_det_s = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let ln_det_diag: f64 = s.diagonal().iter().map(|d| d.ln()).sum();
    let f_b = (ln_det_diag - ln_det_s).max(0.0);
    Ok(((n as f64 - 1.0) * f_b, p * (p - 1) / 2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitIndices {
    pub cfi: f64,
    /// Not clamped; may exceed 1 for overfitting models.
    pub tli: f64,
    pub rmsea: f64,
}

/// Point RMSEA: `sqrt(max(χ²−df, 0) / (df·(n−1)))`.
pub fn rmsea(chi2_m: f64, df_m: usize, n: usize) -> f64 {
    ((chi2_m - df_m as f64).max(0.0) / (df_m as f64 * (n as f64 - 1.0))).sqrt()
}

pub fn fit_indices(chi2_m: f64, df_m: usize, chi2_b: f64, df_b: usize, n: usize) -> Result<FitIndices> {
    if df_m == 0 || df_b <= df_m || n <= 1 {
        return Err(Error::InvalidConfig(format!(
            "fit indices need df_m > 0, df_b > df_m, n > 1 (got df_m={df_m}, df_b={df_b}, n={n})"
        )));
    }
    if chi2_b <= df_b as f64 {
        return Err(Error::DegenerateBaseline { chi2_b, df_b });
    }
    let (dm, db) = (df_m as f64, df_b as f64);
    let excess_m = (chi2_m - dm).max(0.0);
    let excess_b = (chi2_b - db).max(excess_m);
    let cfi = 1.0 - excess_m / excess_b;
    let ratio_b = chi2_b / db;
    let tli = (ratio_b - chi2_m / dm) / (ratio_b - 1.0);
    Ok(FitIndices {
        cfi,
        tli,
        rmsea: rmsea(chi2_m, df_m, n),
    })
}

/// Noncentrality at which the noncentral chi-square CDF of `x` equals
/// `target`. The CDF is decreasing in λ, so the root is bracketed by
/// doubling and refined by bisection. Returns 0 when even λ = 0 gives a CDF
/// at or below the target.
fn solve_noncentrality(x: f64, df: f64, target: f64) -> Result<f64> {
    if noncentral_chi2_cdf(x, df, 0.0) <= target {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    let mut doublings = 0;
    while noncentral_chi2_cdf(x, df, hi) > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NonConvergence {
                iterations: doublings,
                gradient_norm: f64::NAN,
                partial: None,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if noncentral_chi2_cdf(x, df, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi.max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::NonConvergence {
        iterations: 200,
        gradient_norm: hi - lo,
        partial: None,
    })
}

/// Noncentrality bounds `(λ_lo, λ_hi)` of the `level` interval.
pub fn noncentrality_ci(chi2_m: f64, df_m: usize, level: f64) -> Result<(f64, f64)> {
    if df_m == 0 || !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidConfig(format!(
            "noncentrality interval needs df > 0 and level in (0,1) (got df={df_m}, level={level})"
        )));
    }
    let tail = (1.0 - level) / 2.0;
    let lo = solve_noncentrality(chi2_m, df_m as f64, 1.0 - tail)?;
    let hi = solve_noncentrality(chi2_m, df_m as f64, tail)?;
    Ok((lo, hi))
}

/// RMSEA confidence interval by inverting the noncentral chi-square CDF.
pub fn rmsea_ci(chi2_m: f64, df_m: usize, n: usize, level: f64) -> Result<(f64, f64)> {
    if n <= 1 {
        return Err(Error::InvalidConfig(format!("rmsea_ci needs n > 1, got {n}")));
    }
    let (lo, hi) = noncentrality_ci(chi2_m, df_m, level)?;
    let scale = df_m as f64 * (n as f64 - 1.0);
    Ok(((lo / scale).max(0.0).sqrt(), (hi / scale).max(0.0).sqrt()))
}
