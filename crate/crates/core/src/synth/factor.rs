use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ingest::{ParticipantResponse, N_ITEMS};
use crate::psychometrics::{CfaModel, SubscaleMap};

/// Maps a latent item score to a Likert value 1..5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Discretization {
    /// Target category probabilities for values 1..5; cut points are the
    /// matching quantiles of the item's latent (Gaussian) marginal.
    Quantiles { probabilities: [f64; 5] },
    /// Fixed cut points on the latent scale: value = 1 + #{cuts < x}.
    Fixed { cuts: [f64; 4] },
}

impl Discretization {
    /// Right-skewed, centred near 4.
    pub fn skewed() -> Self {
        Discretization::Quantiles {
            probabilities: [0.03, 0.07, 0.15, 0.40, 0.35],
        }
    }

    /// Unit-spaced cuts: rounding the latent score to the nearest integer, centred on 3.
    pub fn unit_spaced() -> Self {
        Discretization::Fixed {
            cuts: [-1.5, -0.5, 0.5, 1.5],
        }
    }

    /// Cut points for an item whose latent score has standard deviation `sd`.
    fn cuts(&self, sd: f64) -> Result<[f64; 4]> {
        match self {
            Discretization::Fixed { cuts } => Ok(*cuts),
            Discretization::Quantiles { probabilities } => {
                let total: f64 = probabilities.iter().sum();
                if probabilities.iter().any(|&p| p.is_nan() || p <= 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(
                        "category probabilities must be positive and sum to 1".into(),
                    ));
                }
                let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                let mut cum = 0.0;
                let mut cuts = [0.0; 4];
                for (c, p) in cuts.iter_mut().zip(probabilities) {
                    cum += p;
                    *c = normal.inverse_cdf(cum);
                }
                Ok(cuts)
            }
        }
    }
}

fn discretize(x: f64, cuts: &[f64; 4]) -> u8 {
    1 + cuts.iter().filter(|&&c| c < x).count() as u8
}

/// Planted factor structure for a synthetic questionnaire sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPlan {
    pub map: SubscaleMap,
    /// One loading per item on its own factor.
    pub loadings: Vec<f64>,
    /// Row-major factor covariance, unit diagonal.
    pub factor_cov: Vec<Vec<f64>>,
    pub uniquenesses: Vec<f64>,
    pub n: usize,
    pub team_size: usize,
    pub seed: u64,
    pub discretization: Discretization,
}

impl FactorPlan {
    /// Equal loadings, equal factor correlations, uniquenesses `theta`.
    pub fn uniform(map: SubscaleMap, loading: f64, factor_corr: f64, theta: f64, n: usize, seed: u64) -> Self {
        let p = map.n_items();
        let m = map.n_factors();
        let factor_cov = (0..m)
            .map(|a| (0..m).map(|b| if a == b { 1.0 } else { factor_corr }).collect())
            .collect();
        FactorPlan {
            map,
            loadings: vec![loading; p],
            factor_cov,
            uniquenesses: vec![theta; p],
            n,
            team_size: 3,
            seed,
            discretization: Discretization::skewed(),
        }
    }

    /// Default questionnaire sample: loadings 0.8 on unit-variance items,
    /// factor correlations 0.3, skewed Likert marginals.
    pub fn oslq(n: usize, seed: u64) -> Self {
        Self::uniform(SubscaleMap::oslq(), 0.8, 0.3, 0.36, n, seed)
    }

    /// Loadings 0.7, uniquenesses 0.1 and unit-spaced cuts: discretization
    /// only adds rounding noise, so the planted loadings stay recoverable.
    pub fn recovery(n: usize, seed: u64) -> Self {
        FactorPlan {
            discretization: Discretization::unit_spaced(),
            ..Self::uniform(SubscaleMap::oslq(), 0.7, 0.3, 0.1, n, seed)
        }
    }

    pub fn model(&self) -> CfaModel {
        let m = self.map.n_factors();
        let phi = DMatrix::from_fn(m, m, |a, b| self.factor_cov[a][b]);
        CfaModel::from_parts(&self.map, &self.loadings, &phi, &self.uniquenesses)
    }

    /// `ΛΦΛᵀ + Θ`.
    pub fn implied_covariance(&self) -> DMatrix<f64> {
        self.model().implied_covariance()
    }

    fn validate(&self) -> Result<()> {
        let p = self.map.n_items();
        let m = self.map.n_factors();
        if p != N_ITEMS {
            return Err(Error::InvalidConfig(format!(
                "responses need {N_ITEMS} items, plan has {p}"
            )));
        }
        if self.loadings.len() != p || self.uniquenesses.len() != p {
            return Err(Error::InvalidConfig(
                "loadings and uniquenesses need one value per item".into(),
            ));
        }
        if self.factor_cov.len() != m || self.factor_cov.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidConfig(format!("factor covariance must be {m}x{m}")));
        }
        if self.uniquenesses.iter().any(|&t| t.is_nan() || t <= 0.0) {
            return Err(Error::InvalidConfig("uniquenesses must be positive".into()));
        }
        if self.team_size == 0 {
            return Err(Error::InvalidConfig("team size must be positive".into()));
        }
        Ok(())
    }
}

/// Draws latent item vectors from `N(0, ΛΦΛᵀ + Θ)` and discretizes them.
pub(crate) struct LikertSampler {
    chol: DMatrix<f64>,
    cuts: Vec<[f64; 4]>,
}

impl LikertSampler {
    pub(crate) fn new(plan: &FactorPlan) -> Result<Self> {
        plan.validate()?;
        let sigma = plan.implied_covariance();
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("implied item covariance".into()))?
            .l();
        let cuts = (0..N_ITEMS)
            .map(|i| plan.discretization.cuts(sigma[(i, i)].sqrt()))
            .collect::<Result<_>>()?;
        Ok(Self { chol, cuts })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [u8; N_ITEMS] {
        let z = DVector::from_fn(N_ITEMS, |_, _| StandardNormal.sample(rng));
        let x = &self.chol * z;
        let mut items = [0u8; N_ITEMS];
        for (i, v) in items.iter_mut().enumerate() {
            *v = discretize(x[i], &self.cuts[i]);
        }
        items
    }
}

/// Draws `plan.n` respondents from `N(0, ΛΦΛᵀ + Θ)` via a Cholesky factor and
/// discretizes each item. Respondents are grouped into teams of `team_size`.
pub fn gen_factor_cohort(plan: &FactorPlan) -> Result<Vec<ParticipantResponse>> {
    let sampler = LikertSampler::new(plan)?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let width = plan.n.max(1).to_string().len();
    let team_width = plan.n.div_ceil(plan.team_size).max(1).to_string().len();
    Ok((0..plan.n)
        .map(|r| {
            ParticipantResponse::new(
                format!("P{r:0width$}"),
                format!("T{:0team_width$}", r / plan.team_size),
                sampler.sample(&mut rng),
            )
        })
        .collect())
}
