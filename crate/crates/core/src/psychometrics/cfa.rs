//! Maximum-likelihood confirmatory factor analysis with simple structure.
//!
//! Model: `Σ(θ) = ΛΦΛᵀ + diag(Θ)` where each item loads on exactly one
//! factor, factor variances are fixed to 1 and all factor covariances are
//! free. The free parameter vector is laid out as
//!
//! ```text
//! [ loading_1 .. loading_p | φ_12, φ_13, .., φ_(m-1)m | uniqueness_1 .. uniqueness_p ]
//! ```
//!
//! Estimation minimizes `F = ln|Σ| − ln|S| + tr(SΣ⁻¹) − p` by Fisher scoring
//! with Levenberg damping, a backtracking line search and a lower bound on
//! uniquenesses.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ParticipantResponse;
use crate::psychometrics::fit_indices::{self, chi2_sf};
use crate::psychometrics::SubscaleMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfaConfig {
    /// Convergence threshold on the projected gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
    pub uniqueness_floor: f64,
    pub start_loading: f64,
    /// Start uniquenesses at this fraction of the item variances.
    pub start_uniqueness_fraction: f64,
    pub ci_level: f64,
}

impl Default for CfaConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            uniqueness_floor: 1e-4,
            start_loading: 0.7,
            start_uniqueness_fraction: 0.5,
            ci_level: 0.90,
        }
    }
}

/// Fitted (or planted) factor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfaModel {
    pub factor_names: Vec<String>,
    /// `p × m` loading pattern; exactly one `true` per row.
    pub pattern: Vec<Vec<bool>>,
    /// `p × m`, zero where the pattern is false.
    pub loadings: Vec<Vec<f64>>,
    /// `m × m`, unit diagonal.
    pub factor_cov: Vec<Vec<f64>>,
    pub uniquenesses: Vec<f64>,
}

impl CfaModel {
    /// Model with a single loading value per item.
    pub fn from_parts(map: &SubscaleMap, loadings: &[f64], factor_cov: &DMatrix<f64>, uniquenesses: &[f64]) -> Self {
        let structure = Structure::new(map);
        let mut params = Vec::with_capacity(structure.n_params());
        params.extend_from_slice(loadings);
        for j in 0..structure.m {
            for k in j + 1..structure.m {
                params.push(factor_cov[(j, k)]);
            }
        }
        params.extend_from_slice(uniquenesses);
        structure.to_model(map, &params)
    }

    pub fn n_items(&self) -> usize {
        self.pattern.len()
    }

    /// The loading of each item on its own factor.
    pub fn item_loadings(&self) -> Vec<f64> {
        self.loadings
            .iter()
            .zip(&self.pattern)
            .map(|(row, pat)| row.iter().zip(pat).find(|(_, &p)| p).map(|(v, _)| *v).unwrap_or(0.0))
            .collect()
    }

    pub fn implied_covariance(&self) -> DMatrix<f64> {
        let p = self.n_items();
        let m = self.factor_cov.len();
        let lambda = DMatrix::from_fn(p, m, |i, j| self.loadings[i][j]);
        let phi = DMatrix::from_fn(m, m, |i, j| self.factor_cov[i][j]);
        let mut sigma = &lambda * phi * lambda.transpose();
        for i in 0..p {
            sigma[(i, i)] += self.uniquenesses[i];
        }
        sigma
    }
}

/// Goodness-of-fit summary of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfaFit {
    pub chi2: f64,
    pub df: usize,
    /// Upper-tail chi-square probability; 1 for a saturated (df = 0) model.
    pub p_value: f64,
    /// `None` when the model is saturated or the baseline is degenerate.
    pub cfi: Option<f64>,
    pub tli: Option<f64>,
    /// `None` when df = 0.
    pub rmsea: Option<f64>,
    pub rmsea_ci90: Option<(f64, f64)>,
    pub n: usize,
    pub baseline_chi2: f64,
    pub baseline_df: usize,
    /// Minimized discrepancy F(θ̂).
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// 1-based items whose uniqueness sits on the lower bound.
    pub heywood_items: Vec<usize>,
}

impl CfaFit {
    pub fn chi2_per_df(&self) -> Option<f64> {
        (self.df > 0).then(|| self.chi2 / self.df as f64)
    }

    pub fn has_heywood_case(&self) -> bool {
        !self.heywood_items.is_empty()
    }
}

/// Degrees of freedom: `p(p+1)/2 − (loadings + uniquenesses + factor covariances)`.
pub fn model_df(map: &SubscaleMap) -> usize {
    let s = Structure::new(map);
    (s.p * (s.p + 1) / 2).saturating_sub(s.n_params())
}

/// Sample covariance (n−1 denominator) of the raw item scores.
pub fn sample_covariance(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("covariance needs n >= 2, got {n}")));
    }
    let p = rows[0].len();
    let mut means = vec![0.0; p];
    for r in rows {
        if r.len() != p {
            return Err(Error::LengthMismatch {
                left: p,
                right: r.len(),
            });
        }
        for (m, v) in means.iter_mut().zip(r) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::zeros(p, p);
    for r in rows {
        for i in 0..p {
            let di = r[i] - means[i];
            for j in i..p {
                cov[(i, j)] += di * (r[j] - means[j]);
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            let v = cov[(i, j)] / (n as f64 - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

pub fn response_covariance(responses: &[ParticipantResponse]) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = responses
        .iter()
        .map(|r| r.items.iter().map(|&v| f64::from(v)).collect())
        .collect();
    sample_covariance(&rows)
}

/// Reads a headerless `p × p` numeric CSV.
pub fn read_covariance_csv(path: &std::path::Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                file: file.clone(),
                line: i as u64 + 1,
                rule: format!("covariance entries must be numbers ({e})"),
            })?;
        rows.push(row);
    }
    let p = rows.len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::Parse {
            file,
            line: 0,
            rule: "covariance CSV must be a square matrix".into(),
        });
    }
    let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
    if (0..p).any(|i| (0..i).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * (1.0 + m[(i, j)].abs()))) {
        return Err(Error::Parse {
            file,
            line: 0,
            rule: "covariance matrix must be symmetric".into(),
        });
    }
    Ok(m)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Structure {
    p: usize,
    m: usize,
    factor_of: Vec<usize>,
    /// Factor pairs `(j, k)`, `j < k`, in parameter order.
    pairs: Vec<(usize, usize)>,
}

impl Structure {
    fn new(map: &SubscaleMap) -> Self {
        let m = map.n_factors();
        let pairs = (0..m).flat_map(|j| (j + 1..m).map(move |k| (j, k))).collect();
        Self {
            p: map.n_items(),
            m,
            factor_of: map.factor_assignment().to_vec(),
            pairs,
        }
    }

    fn n_params(&self) -> usize {
        2 * self.p + self.pairs.len()
    }

    fn theta_offset(&self) -> usize {
        self.p + self.pairs.len()
    }

    fn phi(&self, params: &[f64]) -> DMatrix<f64> {
        let mut phi = DMatrix::identity(self.m, self.m);
        for (idx, &(j, k)) in self.pairs.iter().enumerate() {
            let v = params[self.p + idx];
            phi[(j, k)] = v;
            phi[(k, j)] = v;
        }
        phi
    }

    fn sigma(&self, params: &[f64], phi: &DMatrix<f64>) -> DMatrix<f64> {
        let t0 = self.theta_offset();
        DMatrix::from_fn(self.p, self.p, |i, k| {
            let v = params[i] * params[k] * phi[(self.factor_of[i], self.factor_of[k])];
            if i == k {
                v + params[t0 + i]
            } else {
                v
            }
        })
    }

    fn to_model(&self, map: &SubscaleMap, params: &[f64]) -> CfaModel {
        let phi = self.phi(params);
        CfaModel {
            factor_names: map.names().map(str::to_string).collect(),
            pattern: map.pattern(),
            loadings: (0..self.p)
                .map(|i| {
                    (0..self.m)
                        .map(|j| if j == self.factor_of[i] { params[i] } else { 0.0 })
                        .collect()
                })
                .collect(),
            factor_cov: (0..self.m)
                .map(|j| (0..self.m).map(|k| phi[(j, k)]).collect())
                .collect(),
            uniquenesses: params[self.theta_offset()..].to_vec(),
        }
    }
}

/// Everything computed at one parameter point.
struct Eval {
    value: f64,
    sigma_inv: DMatrix<f64>,
    phi: DMatrix<f64>,
}

/// ML discrepancy function for a fixed sample covariance and loading structure.
#[derive(Debug, Clone)]
pub struct Discrepancy {
    s: DMatrix<f64>,
    ln_det_s: f64,
    structure: Structure,
}

impl Discrepancy {
    pub fn new(s: &DMatrix<f64>, map: &SubscaleMap) -> Result<Self> {
        let p = map.n_items();
        if s.nrows() != p || s.ncols() != p {
            return Err(Error::Dimension {
                expected: p,
                got: s.nrows(),
            });
        }
        let chol = s
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("sample covariance".into()))?;
        Ok(Self {
            s: s.clone(),
            ln_det_s: ln_det(&chol),
            structure: Structure::new(map),
        })
    }

    pub fn n_params(&self) -> usize {
        self.structure.n_params()
    }

    /// `F(θ)`, or `None` if Φ or Σ(θ) is not positive definite.
    pub fn value(&self, params: &[f64]) -> Option<f64> {
        self.eval(params).map(|e| e.value)
    }

    fn eval(&self, params: &[f64]) -> Option<Eval> {
        let st = &self.structure;
        let phi = st.phi(params);
        if st.m > 1 {
            phi.clone().cholesky()?;
        }
        let sigma = st.sigma(params, &phi);
        let chol = sigma.cholesky()?;
        let sigma_inv = chol.inverse();
        let trace: f64 = self.s.component_mul(&sigma_inv).sum();
        let value = ln_det(&chol) - self.ln_det_s + trace - st.p as f64;
        value.is_finite().then_some(Eval { value, sigma_inv, phi })
    }

    /// Analytic gradient, or `None` at an infeasible point.
    pub fn gradient(&self, params: &[f64]) -> Option<Vec<f64>> {
        self.eval(params).map(|e| self.gradient_at(params, &e))
    }

    fn gradient_at(&self, params: &[f64], e: &Eval) -> Vec<f64> {
        let st = &self.structure;
        // dF/dΣ = Σ⁻¹ − Σ⁻¹ S Σ⁻¹
        let g = &e.sigma_inv - &e.sigma_inv * &self.s * &e.sigma_inv;
        let mut grad = vec![0.0; st.n_params()];
        for i in 0..st.p {
            let fi = st.factor_of[i];
            let gv: f64 = (0..st.p)
                .map(|k| g[(i, k)] * params[k] * e.phi[(st.factor_of[k], fi)])
                .sum();
            grad[i] = 2.0 * gv;
        }
        for (idx, &(j, l)) in st.pairs.iter().enumerate() {
            let mut acc = 0.0;
            for i in (0..st.p).filter(|&i| st.factor_of[i] == j) {
                for k in (0..st.p).filter(|&k| st.factor_of[k] == l) {
                    acc += params[i] * g[(i, k)] * params[k];
                }
            }
            grad[st.p + idx] = 2.0 * acc;
        }
        let t0 = st.theta_offset();
        for i in 0..st.p {
            grad[t0 + i] = g[(i, i)];
        }
        grad
    }

    /// Expected information `H_ab = tr(Σ⁻¹ ∂_aΣ Σ⁻¹ ∂_bΣ)` restricted to `free`.
    fn information(&self, params: &[f64], e: &Eval, free: &[usize]) -> DMatrix<f64> {
        let st = &self.structure;
        let p = st.p;
        let t0 = st.theta_offset();
        // Σ⁻¹ ∂_aΣ for each free parameter.
        let products: Vec<DMatrix<f64>> = free
            .iter()
            .map(|&a| {
                let mut d = DMatrix::zeros(p, p);
                if a < p {
                    let fi = st.factor_of[a];
                    for k in 0..p {
                        let v = params[k] * e.phi[(st.factor_of[k], fi)];
                        d[(a, k)] += v;
                        d[(k, a)] += v;
                    }
                } else if a < t0 {
                    let (j, l) = st.pairs[a - p];
                    for i in (0..p).filter(|&i| st.factor_of[i] == j) {
                        for k in (0..p).filter(|&k| st.factor_of[k] == l) {
                            let v = params[i] * params[k];
                            d[(i, k)] += v;
                            d[(k, i)] += v;
                        }
                    }
                } else {
                    d[(a - t0, a - t0)] = 1.0;
                }
                &e.sigma_inv * d
            })
            .collect();
        let q = free.len();
        let mut h = DMatrix::zeros(q, q);
        for a in 0..q {
            for b in a..q {
                let v = products[a].tr_dot(&products[b]);
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        h
    }

    fn start(&self, cfg: &CfaConfig) -> Vec<f64> {
        let st = &self.structure;
        let mut params = vec![cfg.start_loading; st.p];
        params.extend(std::iter::repeat_n(0.0, st.pairs.len()));
        params.extend((0..st.p).map(|i| (cfg.start_uniqueness_fraction * self.s[(i, i)]).max(cfg.uniqueness_floor)));
        params
    }
}

fn ln_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Trace of accepted objective values, for diagnostics and tests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub objective: Vec<f64>,
}

/// Fits the model and reports fit statistics.
pub fn fit_cfa(s: &DMatrix<f64>, n: usize, map: &SubscaleMap, cfg: &CfaConfig) -> Result<(CfaModel, CfaFit)> {
    fit_cfa_traced(s, n, map, cfg).map(|(m, f, _)| (m, f))
}

pub fn fit_cfa_traced(
    s: &DMatrix<f64>,
    n: usize,
    map: &SubscaleMap,
    cfg: &CfaConfig,
) -> Result<(CfaModel, CfaFit, OptimizerTrace)> {
    let p = map.n_items();
    if n <= p {
        return Err(Error::InsufficientData(format!("CFA needs n > {p}, got {n}")));
    }
    let disc = Discrepancy::new(s, map)?;
    let st = &disc.structure;
    let t0 = st.theta_offset();
    let floor = cfg.uniqueness_floor;
    let project = |params: &mut [f64]| {
        for v in &mut params[t0..] {
            *v = v.max(floor);
        }
    };

    let mut params = disc.start(cfg);
    project(&mut params);
    let mut current = disc
        .eval(&params)
        .ok_or_else(|| Error::NotPositiveDefinite("implied covariance at start values".into()))?;
    let mut trace = OptimizerTrace {
        objective: vec![current.value],
    };
    let mut damping = 1e-8;
    let mut iterations = 0;
    let mut grad_norm;

    loop {
        let grad = disc.gradient_at(&params, &current);
        // Bound-active uniquenesses are frozen while their gradient pushes outward.
        let active = |a: usize| a >= t0 && params[a] <= floor * (1.0 + 1e-12) && grad[a] > 0.0;
        let free: Vec<usize> = (0..grad.len()).filter(|&a| !active(a)).collect();
        grad_norm = free.iter().map(|&a| grad[a].abs()).fold(0.0, f64::max);
        if grad_norm < cfg.tol {
            break;
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                gradient_norm: grad_norm,
                partial: Some(Box::new(st.to_model(map, &params))),
            });
        }
        iterations += 1;

        let info = disc.information(&params, &current, &free);
        let g_free = DVector::from_iterator(free.len(), free.iter().map(|&a| grad[a]));
        let mut accepted = None;
        while damping <= 1e10 {
            let mut system = info.clone();
            for a in 0..free.len() {
                system[(a, a)] += damping * (1.0 + info[(a, a)]);
            }
            let Some(chol) = system.cholesky() else {
                damping = (damping * 10.0).max(1e-6);
                continue;
            };
            let step = -chol.solve(&g_free);
            let mut alpha = 1.0;
            for _ in 0..30 {
                let mut trial = params.clone();
                for (slot, &a) in free.iter().enumerate() {
                    trial[a] += alpha * step[slot];
                }
                project(&mut trial);
                let predicted: f64 = (0..trial.len()).map(|a| grad[a] * (trial[a] - params[a])).sum();
                if let Some(e) = disc.eval(&trial) {
                    let armijo = e.value <= current.value + 1e-4 * predicted;
                    let flat = alpha == 1.0 && e.value <= current.value;
                    if predicted < 0.0 && (armijo || flat) {
                        accepted = Some((trial, e));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            damping = (damping * 10.0).max(1e-6);
        }
        match accepted {
            Some((trial, e)) => {
                params = trial;
                current = e;
                trace.objective.push(current.value);
                damping = (damping * 0.1).max(1e-12);
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations,
                    gradient_norm: grad_norm,
                    partial: Some(Box::new(st.to_model(map, &params))),
                });
            }
        }
    }

    let model = st.to_model(map, &params);
    let df = model_df(map);
    let objective = current.value.max(0.0);
    let chi2 = (n as f64 - 1.0) * objective;
    let (baseline_chi2, baseline_df) = fit_indices::baseline_model(s, n)?;
    let (cfi, tli, rmsea, rmsea_ci90) = if df > 0 {
        let point = fit_indices::rmsea(chi2, df, n);
        let ci = fit_indices::rmsea_ci(chi2, df, n, cfg.ci_level)?;
        match fit_indices::fit_indices(chi2, df, baseline_chi2, baseline_df, n) {
            Ok(ix) => (Some(ix.cfi), Some(ix.tli), Some(point), Some(ci)),
            Err(_) => (None, None, Some(point), Some(ci)),
        }
    } else {
        (None, None, None, None)
    };
    let heywood_items = (0..p)
        .filter(|&i| params[t0 + i] <= floor * (1.0 + 1e-9))
        .map(|i| i + 1)
        .collect();
    let fit = CfaFit {
        chi2,
        df,
        p_value: if df > 0 { chi2_sf(chi2, df as f64) } else { 1.0 },
        cfi,
        tli,
        rmsea,
        rmsea_ci90,
        n,
        baseline_chi2,
        baseline_df,
        objective,
        gradient_norm: grad_norm,
        iterations,
        heywood_items,
    };
    Ok((model, fit, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(map: &SubscaleMap, loading: f64, corr: f64, uniq: f64) -> CfaModel {
        let m = map.n_factors();
        let phi = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { corr });
        let p = map.n_items();
        let loadings: Vec<f64> = (0..p).map(|i| loading + 0.02 * (i % 5) as f64).collect();
        CfaModel::from_parts(map, &loadings, &phi, &vec![uniq; p])
    }

    #[test]
    fn df_counts() {
        assert_eq!(model_df(&SubscaleMap::oslq()), 237);
        let one = SubscaleMap::blocks(&[3]).unwrap();
        assert_eq!(model_df(&one), 0);
        let two = SubscaleMap::blocks(&[3, 3]).unwrap();
        assert_eq!(model_df(&two), 8);
    }

    #[test]
    fn exact_planted_covariance_is_recovered() {
        let map = SubscaleMap::oslq();
        let truth = planted(&map, 0.7, 0.3, 0.51);
        let s = truth.implied_covariance();
        let (fitted, fit) = fit_cfa(&s, 1000, &map, &CfaConfig::default()).unwrap();
        for (a, b) in fitted.item_loadings().iter().zip(truth.item_loadings()) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        assert!(fit.objective < 1e-8);
        assert!(fit.chi2 < 1e-6 * 999.0);
        assert_eq!(fit.df, 237);
        assert!(fit.gradient_norm < 1e-6);
        assert!(!fit.has_heywood_case());
    }

    #[test]
    fn saturated_model_reproduces_s() {
        let map = SubscaleMap::blocks(&[3]).unwrap();
        let s = DMatrix::from_row_slice(3, 3, &[1.2, 0.5, 0.4, 0.5, 0.9, 0.3, 0.4, 0.3, 1.1]);
        let (model, fit) = fit_cfa(&s, 200, &map, &CfaConfig::default()).unwrap();
        assert!(fit.objective < 1e-10);
        assert_eq!(fit.df, 0);
        assert!(fit.rmsea.is_none());
        let implied = model.implied_covariance();
        assert!((implied - s).abs().max() < 1e-5);
    }

    #[test]
    fn identity_covariance_has_no_common_variance() {
        let map = SubscaleMap::oslq();
        let s = DMatrix::identity(24, 24);
        let (model, fit) = fit_cfa(&s, 500, &map, &CfaConfig::default()).unwrap();
        for l in model.item_loadings() {
            assert!(l.abs() < 2e-2, "loading {l}");
        }
        for u in &model.uniquenesses {
            assert!((u - 1.0).abs() < 1e-3, "uniqueness {u}");
        }
        assert!(fit.cfi.is_none(), "baseline is degenerate for S = I");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let map = SubscaleMap::blocks(&[3, 4, 3]).unwrap();
        let truth = planted(&map, 0.6, 0.2, 0.5);
        let mut s = truth.implied_covariance();
        s[(0, 4)] += 0.05;
        s[(4, 0)] += 0.05;
        let disc = Discrepancy::new(&s, &map).unwrap();
        let mut params = vec![0.5; 10];
        params.extend([0.1, -0.2, 0.3]);
        params.extend(vec![0.6; 10]);
        let g = disc.gradient(&params).unwrap();
        let h = 1e-6;
        for a in 0..params.len() {
            let mut up = params.clone();
            let mut dn = params.clone();
            up[a] += h;
            dn[a] -= h;
            let fd = (disc.value(&up).unwrap() - disc.value(&dn).unwrap()) / (2.0 * h);
            assert!(
                (fd - g[a]).abs() < 1e-6 * (1.0 + g[a].abs()),
                "param {a}: {fd} vs {}",
                g[a]
            );
        }
    }

    #[test]
    fn objective_never_increases() {
        let map = SubscaleMap::blocks(&[4, 4]).unwrap();
        let truth = planted(&map, 0.8, 0.4, 0.4);
        let mut s = truth.implied_covariance();
        s[(1, 6)] += 0.1;
        s[(6, 1)] += 0.1;
        let (_, _, trace) = fit_cfa_traced(&s, 300, &map, &CfaConfig::default()).unwrap();
        assert!(trace.objective.len() > 1);
        for w in trace.objective.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let map = SubscaleMap::blocks(&[3]).unwrap();
        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            fit_cfa(&bad, 100, &map, &CfaConfig::default()),
            Err(Error::NotPositiveDefinite(_))
        ));
        let s = DMatrix::identity(3, 3);
        assert!(matches!(
            fit_cfa(&s, 3, &map, &CfaConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_partial_state() {
        let map = SubscaleMap::oslq();
        let truth = planted(&map, 0.7, 0.3, 0.51);
        let cfg = CfaConfig {
            max_iter: 1,
            ..CfaConfig::default()
        };
        match fit_cfa(&truth.implied_covariance(), 500, &map, &cfg) {
            Err(Error::NonConvergence {
                iterations, partial, ..
            }) => {
                assert_eq!(iterations, 1);
                assert_eq!(partial.unwrap().n_items(), 24);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn covariance_of_rows() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let c = sample_covariance(&rows).unwrap();
        assert!((c[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((c[(0, 1)] - 2.0).abs() < 1e-12);
        assert!((c[(1, 1)] - 4.0).abs() < 1e-12);
    }
}
