use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::learners::logistic::check_training_set;
use crate::learners::tree::{build, FeatureSampler, TreeConfig, TreeModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features considered per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    pub tree: TreeConfig,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            seed: 0,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub tree_seeds: Vec<u64>,
    pub max_features: usize,
    pub bootstrap: bool,
    pub n_features: usize,
}

impl ForestModel {
    /// Mean of the tree scores.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.score(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// Hard majority vote over tree leaf classes, ties to 0.
    pub fn majority_vote(&self, x: &[f64]) -> u8 {
        let ones = self.trees.iter().filter(|t| t.leaf_class(x) == 1).count();
        u8::from(2 * ones > self.trees.len())
    }
}

struct RandomSubset<'a> {
    m: usize,
    rng: &'a mut ChaCha8Rng,
}

impl FeatureSampler for RandomSubset<'_> {
    fn sample(&mut self, n_features: usize) -> Option<Vec<usize>> {
        if self.m >= n_features {
            return None;
        }
        Some(sample(self.rng, n_features, self.m).into_vec())
    }
}

fn grow(x: &[Vec<f64>], y: &[u8], cfg: &ForestConfig, m: usize, d: usize, seed: u64) -> TreeModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.len();
    let idx: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut sampler = RandomSubset { m, rng: &mut rng };
    TreeModel {
        root: build(x, y, &idx, 0, &cfg.tree, d, &mut sampler),
        n_features: d,
    }
}

/// Trees are grown in parallel; tree `i` uses its own generator seeded with
/// `seed + i`, so the result does not depend on scheduling.
pub fn train_forest(x: &[Vec<f64>], y: &[u8], cfg: &ForestConfig) -> Result<ForestModel> {
    let d = check_training_set(x, y)?;
    if cfg.n_trees == 0 {
        return Err(crate::Error::InvalidConfig("forest needs at least one tree".into()));
    }
    let m = cfg
        .max_features
        .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
        .clamp(1, d.max(1));
    let tree_seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let trees = tree_seeds.par_iter().map(|&s| grow(x, y, cfg, m, d, s)).collect();
    Ok(ForestModel {
        trees,
        tree_seeds,
        max_features: m,
        bootstrap: cfg.bootstrap,
        n_features: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tree::train_tree;

    fn data() -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..120)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y = x
            .iter()
            .map(|r| u8::from(r[0] * r[1] + 0.3 * r[2] + rng.random_range(-0.2..0.2) > 0.0))
            .collect();
        (x, y)
    }

    #[test]
    fn degenerate_forest_equals_tree() {
        let (x, y) = data();
        let cfg = ForestConfig {
            n_trees: 1,
            max_features: Some(4),
            bootstrap: false,
            ..ForestConfig::default()
        };
        let f = train_forest(&x, &y, &cfg).unwrap();
        let t = train_tree(&x, &y, &TreeConfig::default()).unwrap();
        assert_eq!(f.trees[0], t);
        for r in &x {
            assert_eq!(f.score(r), t.score(r));
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = data();
        let cfg = ForestConfig {
            n_trees: 20,
            seed: 77,
            ..ForestConfig::default()
        };
        let a = train_forest(&x, &y, &cfg).unwrap();
        let b = train_forest(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trees.len(), 20);
        assert_eq!(a.max_features, 2);
        assert_eq!(a.tree_seeds[3], 80);
        let c = train_forest(&x, &y, &ForestConfig { seed: 78, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn vote_ties_go_to_zero() {
        use crate::learners::tree::TreeNode;
        let leaf = |c: u8| TreeModel {
            root: TreeNode::Leaf {
                class: c,
                counts: if c == 1 { [0, 3] } else { [3, 0] },
            },
            n_features: 1,
        };
        let f = ForestModel {
            trees: vec![leaf(0), leaf(1)],
            tree_seeds: vec![0, 1],
            max_features: 1,
            bootstrap: false,
            n_features: 1,
        };
        assert_eq!(f.majority_vote(&[0.0]), 0);
        assert_eq!(f.score(&[0.0]), 0.5);
    }
}
