use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How rows are divided into groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitPlan {
    /// One group per fraction, e.g. `[0.9, 0.1]` for a 90/10 train/test split.
    Holdout { fractions: Vec<f64>, seed: u64 },
    /// `folds` groups of near-equal size.
    KFold { folds: usize, seed: u64 },
}

impl SplitPlan {
    /// Two groups: `train_fraction` then the rest.
    pub fn holdout(train_fraction: f64, seed: u64) -> Self {
        SplitPlan::Holdout {
            fractions: vec![train_fraction, 1.0 - train_fraction],
            seed,
        }
    }

    pub fn k_fold(folds: usize, seed: u64) -> Self {
        SplitPlan::KFold { folds, seed }
    }
}

/// Group index for every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    roles: Vec<usize>,
    groups: usize,
}

impl Assignment {
    pub fn roles(&self) -> &[usize] {
        &self.roles
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    /// Rows in `group`, ascending.
    pub fn indices(&self, group: usize) -> Vec<usize> {
        (0..self.roles.len()).filter(|&i| self.roles[i] == group).collect()
    }

    /// Rows outside `group`, ascending.
    pub fn complement(&self, group: usize) -> Vec<usize> {
        (0..self.roles.len()).filter(|&i| self.roles[i] != group).collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.groups];
        for &r in &self.roles {
            counts[r] += 1;
        }
        counts
    }
}

/// Integer counts summing to `n`, proportional to `fractions`: floors first, then
/// the leftover units go to the largest fractional parts (earlier groups win ties).
pub(crate) fn largest_remainder(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().take(n.saturating_sub(assigned)) {
        counts[g] += 1;
    }
    counts
}

/// Assigns each of `n` rows to a group after a seeded shuffle.
pub fn make_split(n: usize, plan: &SplitPlan) -> Result<Assignment> {
    let (fractions, seed) = match plan {
        SplitPlan::Holdout { fractions, seed } => {
            if fractions.len() < 2 {
                return Err(Error::config("fractions", "need at least two groups"));
            }
            if fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
                return Err(Error::config("fractions", "each fraction must lie in (0, 1)"));
            }
            let sum: f64 = fractions.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::config("fractions", format!("must sum to 1, got {sum}")));
            }
            (fractions.clone(), *seed)
        }
        SplitPlan::KFold { folds, seed } => {
            if *folds < 2 {
                return Err(Error::config("folds", "need at least 2 folds"));
            }
            if n < *folds {
                return Err(Error::config(
                    "folds",
                    format!("{folds} folds requested for only {n} rows"),
                ));
            }
            (vec![1.0 / *folds as f64; *folds], *seed)
        }
    };
    let counts = largest_remainder(n, &fractions);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut roles = vec![0; n];
    let mut pos = 0;
    for (g, &c) in counts.iter().enumerate() {
        for &i in &order[pos..pos + c] {
            roles[i] = g;
        }
        pos += c;
    }
    Ok(Assignment {
        roles,
        groups: fractions.len(),
    })
}
