use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscale {
    pub name: String,
    /// 1-based item numbers.
    pub items: Vec<usize>,
}

/// Assignment of questionnaire items to subscales (latent factors).
///
/// The item lists partition `1..=n_items` and each subscale has at least two
/// items. Construct through [`SubscaleMap::new`] so the partition is checked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubscaleMap {
    n_items: usize,
    subscales: Vec<Subscale>,
    #[serde(skip)]
    factor_of: Vec<usize>,
}

#[derive(Deserialize)]
struct RawMap {
    n_items: Option<usize>,
    subscales: Vec<Subscale>,
}

impl<'de> Deserialize<'de> for SubscaleMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMap::deserialize(d)?;
        let n = raw
            .n_items
            .unwrap_or_else(|| raw.subscales.iter().map(|s| s.items.len()).sum());
        SubscaleMap::new(n, raw.subscales).map_err(serde::de::Error::custom)
    }
}

impl SubscaleMap {
    pub fn new(n_items: usize, subscales: Vec<Subscale>) -> Result<Self> {
        if subscales.is_empty() {
            return Err(Error::InvalidConfig("subscale map has no subscales".into()));
        }
        let mut factor_of = vec![usize::MAX; n_items];
        let mut names = BTreeSet::new();
        for (f, s) in subscales.iter().enumerate() {
            if !names.insert(s.name.as_str()) {
                return Err(Error::InvalidConfig(format!("subscale `{}` listed twice", s.name)));
            }
            if s.items.len() < 2 {
                return Err(Error::InvalidConfig(format!(
                    "subscale `{}` has {} item(s); at least 2 required",
                    s.name,
                    s.items.len()
                )));
            }
            for &item in &s.items {
                if item == 0 || item > n_items {
                    return Err(Error::InvalidConfig(format!(
                        "subscale `{}` references item {item} outside 1..={n_items}",
                        s.name
                    )));
                }
                if factor_of[item - 1] != usize::MAX {
                    return Err(Error::InvalidConfig(format!("item {item} assigned to two subscales")));
                }
                factor_of[item - 1] = f;
            }
        }
        if let Some(missing) = factor_of.iter().position(|&f| f == usize::MAX) {
            return Err(Error::InvalidConfig(format!(
                "item {} is not assigned to any subscale",
                missing + 1
            )));
        }
        Ok(Self {
            n_items,
            subscales,
            factor_of,
        })
    }

    /// The 24-item six-subscale questionnaire composition
    /// (5 + 4 + 4 + 3 + 4 + 4 items, in questionnaire order).
    pub fn oslq() -> Self {
        let spec: [(&str, std::ops::RangeInclusive<usize>); 6] = [
            ("Goal Setting", 1..=5),
            ("Environment Setting", 6..=9),
            ("Task Strategies", 10..=13),
            ("Time Management", 14..=16),
            ("Help Seeking", 17..=20),
            ("Self Evaluation", 21..=24),
        ];
        let subscales = spec
            .into_iter()
            .map(|(name, r)| Subscale {
                name: name.to_string(),
                items: r.collect(),
            })
            .collect();
        Self::new(24, subscales).expect("built-in map is a valid partition")
    }

    /// Consecutive blocks: `sizes[j]` items load on factor `j`.
    pub fn blocks(sizes: &[usize]) -> Result<Self> {
        let mut next = 1;
        let subscales = sizes
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let items = (next..next + k).collect();
                next += k;
                Subscale {
                    name: format!("F{}", j + 1),
                    items,
                }
            })
            .collect();
        Self::new(next - 1, subscales)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_factors(&self) -> usize {
        self.subscales.len()
    }

    pub fn subscales(&self) -> &[Subscale] {
        &self.subscales
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.subscales.iter().map(|s| s.name.as_str())
    }

    /// Factor index of a 0-based item.
    pub fn factor_of(&self, item: usize) -> usize {
        self.factor_of[item]
    }

    pub fn factor_assignment(&self) -> &[usize] {
        &self.factor_of
    }

    /// `n_items × n_factors` loading pattern.
    pub fn pattern(&self) -> Vec<Vec<bool>> {
        self.factor_of
            .iter()
            .map(|&f| (0..self.n_factors()).map(|j| j == f).collect())
            .collect()
    }
}
