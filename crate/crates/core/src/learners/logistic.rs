use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    /// Multiplicative decay applied to the learning rate every iteration.
    pub decay: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Ridge penalty `l2/2 · ‖w‖²`; the bias is not penalized.
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            decay: 0.999,
            tol: 1e-8,
            max_iter: 10_000,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn zeros(n_features: usize) -> Self {
        Self {
            weights: vec![0.0; n_features],
            bias: 0.0,
            iterations: 0,
            gradient_norm: f64::NAN,
            converged: false,
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

/// Row-major copy of the training rows.
struct Design<'a> {
    data: Vec<f64>,
    d: usize,
    y: &'a [u8],
}

impl<'a> Design<'a> {
    fn new(x: &[Vec<f64>], y: &'a [u8]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        Self {
            data: x.iter().flatten().copied().collect(),
            d,
            y,
        }
    }

    fn loss_and_gradient(&self, params: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
        let d = self.d;
        let n = self.y.len() as f64;
        let (w, b) = (&params[..d], params[d]);
        grad.fill(0.0);
        let mut loss = 0.0;
        for (row, &label) in self.data.chunks_exact(d.max(1)).zip(self.y) {
            let row = &row[..d];
            let z = b + w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>();
            // softplus(z) = max(z, 0) + ln(1 + e^{-|z|}); sigmoid shares the exponential.
            let e = (-z.abs()).exp();
            let t = f64::from(label);
            loss += z.max(0.0) + e.ln_1p() - t * z;
            let p = if z >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            let r = p - t;
            for (g, xi) in grad.iter_mut().zip(row) {
                *g += r * xi;
            }
            grad[d] += r;
        }
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        if l2 > 0.0 {
            loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
            for (g, wi) in grad.iter_mut().zip(w) {
                *g += l2 * wi;
            }
        }
        loss
    }
}

/// Mean negative log-likelihood (plus ridge term) and its gradient.
/// Parameters are `[w_1, .., w_d, b]`.
pub fn nll_and_gradient(params: &[f64], x: &[Vec<f64>], y: &[u8], l2: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.len()];
    let loss = Design::new(x, y).loss_and_gradient(params, l2, &mut grad);
    (loss, grad)
}

pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[u8]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let d = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: r.len(),
        });
    }
    Ok(d)
}

pub fn train_logistic(x: &[Vec<f64>], y: &[u8], cfg: &LogisticConfig) -> Result<LogisticModel> {
    train_logistic_traced(x, y, cfg).map(|(m, _)| m)
}

/// Gradient descent with a decaying step. A step that would raise the loss
/// is rejected and the step size halved, so the returned loss trace (one
/// entry per accepted iterate) never increases.
pub fn train_logistic_traced(x: &[Vec<f64>], y: &[u8], cfg: &LogisticConfig) -> Result<(LogisticModel, Vec<f64>)> {
    let d = check_training_set(x, y)?;
    if x.len() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: x.len() });
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::SingleClass);
    }
    let design = Design::new(x, y);
    let mut params = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    let mut loss = design.loss_and_gradient(&params, cfg.l2, &mut grad);
    let mut trace = vec![loss];
    let mut lr = cfg.learning_rate;
    let mut iterations = 0;
    let max_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut gnorm = max_norm(&grad);
    let mut trial = vec![0.0; d + 1];
    let mut t_grad = vec![0.0; d + 1];
    while gnorm >= cfg.tol && iterations < cfg.max_iter {
        iterations += 1;
        for ((t, p), g) in trial.iter_mut().zip(&params).zip(&grad) {
            *t = p - lr * g;
        }
        let t_loss = design.loss_and_gradient(&trial, cfg.l2, &mut t_grad);
        if t_loss <= loss {
            std::mem::swap(&mut params, &mut trial);
            std::mem::swap(&mut grad, &mut t_grad);
            loss = t_loss;
            gnorm = max_norm(&grad);
            trace.push(loss);
            lr *= cfg.decay;
        } else {
            lr *= 0.5;
        }
    }
    let model = LogisticModel {
        bias: params[d],
        weights: params[..d].to_vec(),
        iterations,
        gradient_norm: gnorm,
        converged: gnorm < cfg.tol,
    };
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_model_scores_half() {
        let m = LogisticModel::zeros(10);
        assert_eq!(m.score(&[3.0; 10]), 0.5);
    }

    #[test]
    fn separable_1d_is_fit_perfectly() {
        let x: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].iter().map(|&v| vec![v]).collect();
        let y = vec![0, 0, 0, 1, 1, 1];
        let m = train_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(u8::from(m.score(row) >= 0.5), label);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
        for l2 in [0.0, 0.3] {
            let params: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, g) = nll_and_gradient(&params, &x, &y, l2);
            let h = 1e-5;
            for a in 0..4 {
                let mut up = params.clone();
                let mut dn = params.clone();
                up[a] += h;
                dn[a] -= h;
                let fd = (nll_and_gradient(&up, &x, &y, l2).0 - nll_and_gradient(&dn, &x, &y, l2).0) / (2.0 * h);
                assert!((fd - g[a]).abs() <= 1e-6 * g[a].abs().max(1e-3), "{fd} vs {}", g[a]);
            }
        }
    }

    #[test]
    fn loss_trace_non_increasing() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<u8> = x
            .iter()
            .map(|r| u8::from(r[0] + 0.5 * r[1] + rng.random_range(-1.0..1.0) > 0.0))
            .collect();
        let cfg = LogisticConfig {
            learning_rate: 5.0,
            ..LogisticConfig::default()
        };
        let (_, trace) = train_logistic_traced(&x, &y, &cfg).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_logistic(&x, &[1, 1], &LogisticConfig::default()),
            Err(Error::SingleClass)
        ));
    }
}
