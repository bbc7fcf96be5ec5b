//! CART classification tree with Gini impurity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::logistic::check_training_set;

/// `1 − Σ (nᵢ/n)²`.
pub fn gini(counts: &[usize]) -> Result<f64> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyNode);
    }
    let n = n as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

fn gini2(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    let (a, b) = (c[0] as f64 / n, c[1] as f64 / n);
    1.0 - a * a - b * b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Majority class, ties to 0.
        class: u8,
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        /// `x[feature] <= threshold` goes left.
        threshold: f64,
        counts: [usize; 2],
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn leaf(counts: [usize; 2]) -> Self {
        TreeNode::Leaf {
            class: u8::from(counts[1] > counts[0]),
            counts,
        }
    }

    pub fn counts(&self) -> [usize; 2] {
        match self {
            TreeNode::Leaf { counts, .. } | TreeNode::Split { counts, .. } => *counts,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = node
        {
            node = if x[*feature] <= *threshold { left } else { right };
        }
        node
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub n_features: usize,
}

impl TreeModel {
    /// Positive-class fraction at the reached leaf.
    pub fn score(&self, x: &[f64]) -> f64 {
        let c = self.root.leaf_for(x).counts();
        c[1] as f64 / (c[0] + c[1]) as f64
    }

    pub fn leaf_class(&self, x: &[f64]) -> u8 {
        match self.root.leaf_for(x) {
            TreeNode::Leaf { class, .. } => *class,
            TreeNode::Split { .. } => unreachable!("leaf_for stops at a leaf"),
        }
    }
}

/// Picks candidate features at a node. Returning `None` means "all features".
pub(crate) trait FeatureSampler {
    fn sample(&mut self, n_features: usize) -> Option<Vec<usize>>;
}

pub(crate) struct AllFeatures;

impl FeatureSampler for AllFeatures {
    fn sample(&mut self, _: usize) -> Option<Vec<usize>> {
        None
    }
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Best threshold on one feature, or `None` if the feature is constant on the node.
fn best_split_on(x: &[Vec<f64>], y: &[u8], idx: &[usize], feature: usize, parent: f64) -> Option<Candidate> {
    let mut pairs: Vec<(f64, u8)> = idx.iter().map(|&i| (x[i][feature], y[i])).collect();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut total = [0usize; 2];
    for &(_, label) in &pairs {
        total[label as usize] += 1;
    }
    let mut left = [0usize; 2];
    let mut best: Option<Candidate> = None;
    for pos in 0..n - 1 {
        left[pairs[pos].1 as usize] += 1;
        let (lo, hi) = (pairs[pos].0, pairs[pos + 1].0);
        if lo == hi {
            continue;
        }
        let nl = (pos + 1) as f64;
        let nr = (n - pos - 1) as f64;
        let right = [total[0] - left[0], total[1] - left[1]];
        let child = (nl * gini2(left) + nr * gini2(right)) / n as f64;
        let gain = parent - child;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            let mid = lo + (hi - lo) / 2.0;
            best = Some(Candidate {
                gain,
                feature,
                threshold: if mid < hi { mid } else { lo },
            });
        }
    }
    best
}

fn choose_split(
    x: &[Vec<f64>],
    y: &[u8],
    idx: &[usize],
    n_features: usize,
    parent: f64,
    sampler: &mut dyn FeatureSampler,
) -> Option<Candidate> {
    let best_among = |features: &[usize]| {
        features
            .iter()
            .filter_map(|&f| best_split_on(x, y, idx, f, parent))
            .fold(None::<Candidate>, |acc, c| match acc {
                Some(a) if a.gain >= c.gain => Some(a),
                _ => Some(c),
            })
    };
    match sampler.sample(n_features) {
        None => best_among(&(0..n_features).collect::<Vec<_>>()),
        Some(mut chosen) => {
            chosen.sort_unstable();
            best_among(&chosen).or_else(|| {
                // Every sampled feature is constant here: fall back to the rest.
                let rest: Vec<usize> = (0..n_features).filter(|f| !chosen.contains(f)).collect();
                best_among(&rest)
            })
        }
    }
}

pub(crate) fn build(
    x: &[Vec<f64>],
    y: &[u8],
    idx: &[usize],
    depth: usize,
    cfg: &TreeConfig,
    n_features: usize,
    sampler: &mut dyn FeatureSampler,
) -> TreeNode {
    let mut counts = [0usize; 2];
    for &i in idx {
        counts[y[i] as usize] += 1;
    }
    let pure = counts[0] == 0 || counts[1] == 0;
    let depth_capped = cfg.max_depth.is_some_and(|d| depth >= d);
    if pure || depth_capped || idx.len() < cfg.min_samples_split.max(2) {
        return TreeNode::leaf(counts);
    }
    let parent = gini2(counts);
    let Some(split) = choose_split(x, y, idx, n_features, parent, sampler) else {
        return TreeNode::leaf(counts);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][split.feature] <= split.threshold);
    let left = build(x, y, &l, depth + 1, cfg, n_features, sampler);
    let right = build(x, y, &r, depth + 1, cfg, n_features, sampler);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        counts,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Greedy CART. An impure node is always split when some feature varies on
/// it, even at zero impurity decrease.
pub fn train_tree(x: &[Vec<f64>], y: &[u8], cfg: &TreeConfig) -> Result<TreeModel> {
    let d = check_training_set(x, y)?;
    let idx: Vec<usize> = (0..x.len()).collect();
    Ok(TreeModel {
        root: build(x, y, &idx, 0, cfg, d, &mut AllFeatures),
        n_features: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[2, 2]).unwrap(), 0.5);
        assert_eq!(gini(&[4, 0]).unwrap(), 0.0);
        assert!((gini(&[3, 1]).unwrap() - 0.375).abs() < 1e-15);
        assert!(matches!(gini(&[0, 0]), Err(Error::EmptyNode)));
    }

    #[test]
    fn pure_input_is_a_leaf() {
        let x = vec![vec![1.0], vec![2.0]];
        let t = train_tree(&x, &[1, 1], &TreeConfig::default()).unwrap();
        assert!(matches!(t.root, TreeNode::Leaf { class: 1, .. }));
    }

    #[test]
    fn one_dimensional_split_at_midpoint() {
        let x: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 4.0].iter().map(|&v| vec![v]).collect();
        let t = train_tree(&x, &[0, 0, 1, 1], &TreeConfig::default()).unwrap();
        match &t.root {
            TreeNode::Split {
                threshold, left, right, ..
            } => {
                assert_eq!(*threshold, 2.5);
                assert_eq!(left.counts(), [2, 0]);
                assert_eq!(right.counts(), [0, 2]);
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 1, 1, 0];
        // Brute force: no single axis split classifies XOR.
        for f in 0..2 {
            for left_class in 0..2u8 {
                let correct = x
                    .iter()
                    .zip(&y)
                    .filter(|(r, &t)| (if r[f] <= 0.5 { left_class } else { 1 - left_class }) == t)
                    .count();
                assert!(correct < 4);
            }
        }
        let t = train_tree(&x, &y, &TreeConfig::default()).unwrap();
        assert_eq!(t.root.depth(), 2);
        for (r, &label) in x.iter().zip(&y) {
            assert_eq!(t.leaf_class(r), label);
        }
    }

    #[test]
    fn depth_cap_and_leaf_ties() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let cfg = TreeConfig {
            max_depth: Some(0),
            ..TreeConfig::default()
        };
        let t = train_tree(&x, &[0, 1, 1, 0], &cfg).unwrap();
        assert!(matches!(
            t.root,
            TreeNode::Leaf {
                class: 0,
                counts: [2, 2]
            }
        ));
        assert_eq!(t.score(&[0.0, 0.0]), 0.5);
    }

    fn check_counts_decrease(node: &TreeNode) {
        if let TreeNode::Split {
            counts, left, right, ..
        } = node
        {
            let n = counts[0] + counts[1];
            for child in [left, right] {
                let c = child.counts();
                assert!(c[0] + c[1] < n);
                check_counts_decrease(child);
            }
        }
    }

    proptest! {
        #[test]
        fn fits_consistent_training_data(
            points in prop::collection::btree_map((0i32..20, 0i32..20), 0u8..2, 2..40),
        ) {
            let x: Vec<Vec<f64>> = points.keys().map(|&(a, b)| vec![a as f64, b as f64]).collect();
            let y: Vec<u8> = points.values().copied().collect();
            let t = train_tree(&x, &y, &TreeConfig::default()).unwrap();
            check_counts_decrease(&t.root);
            for (r, &label) in x.iter().zip(&y) {
                prop_assert_eq!(t.leaf_class(r), label);
            }

            // Strictly increasing transform of feature 0: same decisions on training points.
            let tx: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0].powi(3) + 2.0 * r[0], r[1]]).collect();
            let t2 = train_tree(&tx, &y, &TreeConfig::default()).unwrap();
            for (r, tr) in x.iter().zip(&tx) {
                prop_assert_eq!(t.score(r), t2.score(tr));
            }
        }
    }
}
