//! Synthetic minority oversampling.
//!
//! The minority class is grown to the majority count. Each synthetic row is
//! `x + λ·(x_nn − x)` for a uniformly drawn minority row `x`, one of its `k`
//! nearest minority neighbours `x_nn` (Euclidean, ties to the lower row
//! index) and `λ ~ U[0, 1)`. Original rows come first, unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self { k: 5, seed: 0 }
    }
}

/// Where an output row came from, as indices into the input rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrigin {
    Original(usize),
    Synthetic { base: usize, neighbor: usize, lambda: f64 },
}

impl RowOrigin {
    /// Input rows this output row was built from.
    pub fn sources(&self) -> Vec<usize> {
        match *self {
            RowOrigin::Original(i) => vec![i],
            RowOrigin::Synthetic { base, neighbor, .. } => vec![base, neighbor],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resampled {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub origins: Vec<RowOrigin>,
    pub minority_class: u8,
    /// Input rows that took part in the neighbour search.
    pub neighbor_pool: Vec<usize>,
}

impl Resampled {
    pub fn n_synthetic(&self) -> usize {
        self.origins
            .iter()
            .filter(|o| matches!(o, RowOrigin::Synthetic { .. }))
            .count()
    }
}

pub fn smote(rows: &[Vec<f64>], labels: &[u8], cfg: &SmoteConfig) -> Result<Resampled> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    smote_with_rng(rows, labels, cfg.k, &mut rng)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices (into `pool`) of the `k` nearest other members of `pool` for each member.
fn nearest_neighbors(rows: &[Vec<f64>], pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    pool.iter()
        .enumerate()
        .map(|(a, &ia)| {
            let mut cand: Vec<(f64, usize)> = pool
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(b, &ib)| (sq_dist(&rows[ia], &rows[ib]), b))
                .collect();
            // Pool positions follow row order, so the secondary key is the lower row index.
            cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            cand.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

pub fn smote_with_rng<R: Rng + ?Sized>(rows: &[Vec<f64>], labels: &[u8], k: usize, rng: &mut R) -> Result<Resampled> {
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("SMOTE k must be >= 1".into()));
    }
    let ones = labels.iter().filter(|&&y| y == 1).count();
    let zeros = labels.len() - ones;
    if ones == 0 || zeros == 0 {
        return Err(Error::SingleClass);
    }
    let minority_class = u8::from(ones < zeros);
    let pool: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == minority_class).collect();
    if pool.len() < 2 {
        return Err(Error::TinyMinority { size: pool.len() });
    }
    let deficit = ones.max(zeros) - pool.len();
    let k_eff = k.min(pool.len() - 1);
    let neighbors = nearest_neighbors(rows, &pool, k_eff);

    let mut out_rows = rows.to_vec();
    let mut out_labels = labels.to_vec();
    let mut origins: Vec<RowOrigin> = (0..rows.len()).map(RowOrigin::Original).collect();
    for _ in 0..deficit {
        let a = rng.random_range(0..pool.len());
        let b = neighbors[a][rng.random_range(0..k_eff)];
        let lambda: f64 = rng.random();
        let (x, nn) = (&rows[pool[a]], &rows[pool[b]]);
        out_rows.push(x.iter().zip(nn).map(|(xi, ni)| xi + lambda * (ni - xi)).collect());
        out_labels.push(minority_class);
        origins.push(RowOrigin::Synthetic {
            base: pool[a],
            neighbor: pool[b],
            lambda,
        });
    }
    Ok(Resampled {
        rows: out_rows,
        labels: out_labels,
        origins,
        minority_class,
        neighbor_pool: pool,
    })
}
