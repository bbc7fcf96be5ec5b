use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where oversampling happens relative to the train/test split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoteMode {
    /// Split first; standardizer, SMOTE and learner only see the training fold.
    #[default]
    LeakageSafe,
    /// Standardize and oversample the whole dataset, then split.
    PaperReplication,
}

impl SmoteMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SmoteMode::LeakageSafe => "leakage-safe",
            SmoteMode::PaperReplication => "paper-replication",
        }
    }
}

impl std::fmt::Display for SmoteMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SmoteMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "leakage-safe" => Ok(Self::LeakageSafe),
            "paper-replication" => Ok(Self::PaperReplication),
            other => Err(format!(
                "unknown SMOTE mode `{other}` (expected leakage-safe | paper-replication)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

/// `round(0.8·n)`. `0.8·n` is never exactly half-way between integers.
pub fn train_size(n: usize) -> usize {
    (4 * n + 2) / 5
}

const MIN_ROWS: usize = 5;

/// Uniform random permutation; the first `round(0.8·n)` indices train.
pub fn split_80_20(n: usize, seed: u64) -> Result<SplitPlan> {
    if n < MIN_ROWS {
        return Err(Error::TooFewSamples { min: MIN_ROWS, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let test = order.split_off(train_size(n));
    Ok(SplitPlan {
        train: order,
        test,
        seed,
        stratified: false,
    })
}

/// Per-class 80/20 split, so both folds keep the class ratio.
pub fn split_stratified(labels: &[u8], seed: u64) -> Result<SplitPlan> {
    let n = labels.len();
    if n < MIN_ROWS {
        return Err(Error::TooFewSamples { min: MIN_ROWS, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(train_size(n));
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let t = idx.split_off(train_size(idx.len()));
        train.extend(idx);
        test.extend(t);
    }
    Ok(SplitPlan {
        train,
        test,
        seed,
        stratified: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exhaustive(plan: &SplitPlan, n: usize) {
        let mut all: Vec<usize> = plan.train.iter().chain(&plan.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn sizes() {
        let p = split_80_20(10, 1).unwrap();
        assert_eq!((p.train.len(), p.test.len()), (8, 2));
        let p = split_80_20(1290, 1).unwrap();
        assert_eq!((p.train.len(), p.test.len()), (1032, 258));
        exhaustive(&p, 1290);
        for n in 5..200 {
            assert_eq!(train_size(n), (0.8 * n as f64).round() as usize);
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(split_80_20(50, 4).unwrap(), split_80_20(50, 4).unwrap());
        assert_ne!(split_80_20(50, 4).unwrap(), split_80_20(50, 5).unwrap());
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            split_80_20(4, 0),
            Err(Error::TooFewSamples { min: 5, got: 4 })
        ));
    }

    #[test]
    fn stratified_keeps_ratio() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 10 != 0)).collect();
        let p = split_stratified(&labels, 3).unwrap();
        exhaustive(&p, 100);
        assert_eq!(p.test.iter().filter(|&&i| labels[i] == 0).count(), 2);
        assert_eq!(p.train.len(), 80);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "paper-replication".parse::<SmoteMode>().unwrap(),
            SmoteMode::PaperReplication
        );
        assert_eq!(SmoteMode::default().to_string(), "leakage-safe");
        assert!("before".parse::<SmoteMode>().is_err());
    }
}
