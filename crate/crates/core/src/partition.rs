//! Sample partitioning, feature partitioning and importance weights.
//!
//! Near-equal splits hand the remainder to the lowest-indexed groups; ties
//! in importance scores break by ascending feature index. Both rules exist
//! purely for reproducibility.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

/// K disjoint feature-index groups covering 0..d, with importance weights
/// q_k ≥ 0 summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePartition {
    pub groups: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

impl FeaturePartition {
    pub fn new(groups: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        let p = Self { groups, weights };
        p.validate()?;
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn dim(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidConfig("partition needs at least one group".into()));
        }
        if self.groups.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.groups.len(),
                got: self.weights.len(),
            });
        }
        let d = self.dim();
        let mut seen = vec![false; d];
        for group in &self.groups {
            if group.is_empty() {
                return Err(Error::InvalidConfig("empty feature group".into()));
            }
            for &i in group {
                if i >= d || seen[i] {
                    return Err(Error::InvalidConfig(format!(
                        "groups must disjointly cover 0..{d} (feature {i})"
                    )));
                }
                seen[i] = true;
            }
        }
        if self.weights.iter().any(|q| *q < 0.0 || !q.is_finite()) {
            return Err(Error::InvalidConfig("weights must be finite and ≥ 0".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("weights must sum to 1, got {total}")));
        }
        Ok(())
    }
}

/// Per-feature nonnegative importance scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector(pub Vec<f64>);

impl ImportanceVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() || scores.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "importance scores must be finite and ≥ 0".into(),
            ));
        }
        if scores.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidConfig("importance scores must not all be zero".into()));
        }
        Ok(Self(scores))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Splits samples into K near-equal disjoint datasets (remainder to the
/// lowest-indexed parts).
pub fn sample_partition(
    data: &LabeledDataset,
    k: usize,
    rng: &mut impl Rng,
) -> Result<Vec<LabeledDataset>> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "sample partition needs 1 ≤ K ≤ n = {n}, got K = {k}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let base = n / k;
    let rem = n % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for g in 0..k {
        let size = base + usize::from(g < rem);
        out.push(data.subset(&idx[start..start + size]));
        start += size;
    }
    Ok(out)
}

/// Group weights from per-feature scores: q_k = Σ_{i ∈ F_k} v_i / Σ_j v_j.
pub fn importance_weights(scores: &ImportanceVector, groups: &[Vec<usize>]) -> Result<Vec<f64>> {
    let d: usize = groups.iter().map(Vec::len).sum();
    if scores.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: scores.len() });
    }
    let total: f64 = scores.0.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidConfig("importance scores sum to zero".into()));
    }
    Ok(groups
        .iter()
        .map(|g| g.iter().map(|&i| scores.0[i]).sum::<f64>() / total)
        .collect())
}

/// Geometric importance profile v_i = α^i for i = 1..d over features assumed
/// pre-sorted by true importance descending. Powers are clamped to the
/// normal f64 range so extreme d·|log α| cannot produce 0 or ∞.
pub fn alpha_importance(d: usize, alpha: f64) -> Result<ImportanceVector> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidConfig(format!("alpha must be > 0, got {alpha}")));
    }
    let scores = (1..=d)
        .map(|i| alpha.powi(i as i32).clamp(1e-300, 1e300))
        .collect();
    ImportanceVector::new(scores)
}

/// How to form feature groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    /// Random disjoint groups of near-equal size, q_k = 1/K.
    UniformRandom,
    /// Features sorted by importance descending, contiguous near-equal
    /// blocks, q_k from the group score sums.
    ImportanceSorted,
}

/// Builds a feature partition of 0..d into K groups.
pub fn feature_partition(
    d: usize,
    k: usize,
    mode: PartitionMode,
    scores: Option<&ImportanceVector>,
    rng: &mut impl Rng,
) -> Result<FeaturePartition> {
    if k == 0 || k > d {
        return Err(Error::InvalidConfig(format!(
            "feature partition needs 1 ≤ K ≤ d = {d}, got K = {k}"
        )));
    }
    let base = d / k;
    let rem = d % k;
    let sizes: Vec<usize> = (0..k).map(|g| base + usize::from(g < rem)).collect();

    match mode {
        PartitionMode::UniformRandom => {
            let mut idx: Vec<usize> = (0..d).collect();
            idx.shuffle(rng);
            let mut groups = Vec::with_capacity(k);
            let mut start = 0;
            for &size in &sizes {
                let mut g = idx[start..start + size].to_vec();
                g.sort_unstable();
                groups.push(g);
                start += size;
            }
            FeaturePartition::new(groups, vec![1.0 / k as f64; k])
        }
        PartitionMode::ImportanceSorted => {
            let scores = scores.ok_or_else(|| {
                Error::InvalidConfig("importance-sorted partition requires scores".into())
            })?;
            if scores.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: scores.len() });
            }
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| scores.0[b].total_cmp(&scores.0[a]).then(a.cmp(&b)));
            let mut groups = Vec::with_capacity(k);
            let mut start = 0;
            for &size in &sizes {
                groups.push(order[start..start + size].to_vec());
                start += size;
            }
            let weights = importance_weights(scores, &groups)?;
            FeaturePartition::new(groups, weights)
        }
    }
}
