//! Stacked ensembles of private logistic regressions.
//!
//! Two layouts:
//!
//! * **Sample-partitioned** — the low-level half of the data is split into K
//!   disjoint sample sets, one full-dimensional model per set. Every
//!   component model runs with the full budget ε: the sample sets and the
//!   high-level half are disjoint, so the budgets compose in parallel.
//! * **Feature-partitioned** — all low-level samples are shared, but each
//!   model sees only its feature group, scaled into a ball of radius q_k.
//!   The budget arithmetic then charges each group's curvature against one
//!   shared ε′, and the expected noise-to-signal in group k is 2·d_k/(ε′q_k):
//!   important groups (large q_k) get less noise.
//!
//! The high-level model is a private logistic regression over the K
//! sigmoid meta-features.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{scale_to_ball, split_disjoint, LabeledDataset};
use crate::error::{Error, Result};
use crate::mechanism::{pstf_params, sample_noise, PerturbationParams, PrivacyBudget};
use crate::numerics::{minimize, sigmoid, Objective, Regularizer, DEFAULT_TOL};
use crate::partition::FeaturePartition;
use crate::plr::{train_plr, LinearModel, TrainDiagnostics};
use crate::seeding::rng_from_seed;

/// Keep meta-features strictly inside (0, 1) even when a margin saturates
/// the sigmoid in floating point.
const META_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StackedKind {
    SamplePartitioned,
    FeaturePartitioned,
}

/// How to combine the K low-level opinions into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Combiner {
    /// The trained high-level model over the meta-features.
    #[serde(rename = "hl", alias = "high-level")]
    HighLevel,
    /// Fraction of low-level models voting positive.
    #[serde(rename = "mv", alias = "majority-vote")]
    MajorityVote,
    /// Importance-weighted positive votes (feature-partitioned only).
    #[serde(rename = "wmv", alias = "weighted-majority-vote")]
    WeightedMajorityVote,
}

/// One disjoint data region and the budget spent on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub region: String,
    pub n_samples: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    pub kind: StackedKind,
    pub low_models: Vec<LinearModel>,
    /// Present iff feature-partitioned.
    pub partition: Option<FeaturePartition>,
    pub high_model: LinearModel,
    pub epsilon: f64,
    /// Sizes of the disjoint low-level training regions (per sample set for
    /// SP; the single shared low half for FP).
    pub low_region_sizes: Vec<usize>,
    pub high_region_size: usize,
}

impl StackedModel {
    pub fn k(&self) -> usize {
        self.low_models.len()
    }

    /// Input dimension the model expects.
    pub fn dim(&self) -> usize {
        match (&self.kind, &self.partition) {
            (StackedKind::FeaturePartitioned, Some(p)) => p.dim(),
            _ => self.low_models[0].dim(),
        }
    }

    /// The sigmoid outputs of the K low-level models on one input row.
    pub fn meta_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        meta_row(&self.low_models, self.partition.as_ref(), x)
    }

    /// One entry per disjoint data region; parallel composition across the
    /// regions gives the whole model its ε guarantee.
    pub fn budget_ledger(&self) -> Vec<LedgerEntry> {
        let mut entries: Vec<LedgerEntry> = match self.kind {
            StackedKind::SamplePartitioned => self
                .low_region_sizes
                .iter()
                .enumerate()
                .map(|(k, &n)| LedgerEntry {
                    region: format!("low/sample-set-{k}"),
                    n_samples: n,
                    epsilon: self.epsilon,
                })
                .collect(),
            StackedKind::FeaturePartitioned => vec![LedgerEntry {
                region: "low/shared".into(),
                n_samples: self.low_region_sizes[0],
                epsilon: self.epsilon,
            }],
        };
        entries.push(LedgerEntry {
            region: "high/meta".into(),
            n_samples: self.high_region_size,
            epsilon: self.epsilon,
        });
        entries
    }
}

/// Meta-feature construction shared by training and prediction. For the
/// feature-partitioned layout, `x_(k)` is the restriction of x to group k;
/// zero-importance groups contribute a neutral 0.5.
fn meta_row(
    low_models: &[LinearModel],
    partition: Option<&FeaturePartition>,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(low_models.len());
    match partition {
        Some(p) => {
            if x.len() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    got: x.len(),
                });
            }
            for ((model, group), &q) in low_models.iter().zip(&p.groups).zip(&p.weights) {
                if q == 0.0 {
                    out.push(0.5);
                    continue;
                }
                let restricted: Vec<f64> = group.iter().map(|&i| x[i]).collect();
                let margin = model.margin(&restricted)?;
                out.push(sigmoid(margin).clamp(META_CLAMP, 1.0 - META_CLAMP));
            }
        }
        None => {
            for model in low_models {
                let margin = model.margin(x)?;
                out.push(sigmoid(margin).clamp(META_CLAMP, 1.0 - META_CLAMP));
            }
        }
    }
    Ok(out)
}

/// Builds the meta-dataset: one row of low-level sigmoid outputs per
/// high-half sample, labels carried over.
pub fn build_meta(
    low_models: &[LinearModel],
    d_high: &LabeledDataset,
    partition: Option<&FeaturePartition>,
) -> Result<LabeledDataset> {
    let mut rows = Vec::with_capacity(d_high.len());
    for (x, _) in d_high.iter_rows() {
        rows.push(meta_row(low_models, partition, x)?);
    }
    LabeledDataset::from_rows(rows, d_high.labels().to_vec())
}

/// Options for sample-partitioned stacking.
#[derive(Debug, Clone)]
pub struct PstSOptions {
    pub k: usize,
    pub lambda_low: f64,
    pub lambda_high: f64,
    /// Fraction of the data that trains the low-level models (default 0.5).
    pub low_fraction: f64,
}

impl PstSOptions {
    pub fn new(k: usize, lambda_low: f64, lambda_high: f64) -> Self {
        Self {
            k,
            lambda_low,
            lambda_high,
            low_fraction: 0.5,
        }
    }
}

/// Trains a sample-partitioned stacked model. Every component training call
/// receives the full budget ε — its data regions are pairwise disjoint.
pub fn train_pst_s(
    data: &LabeledDataset,
    budget: PrivacyBudget,
    opts: &PstSOptions,
    rng: &mut impl Rng,
) -> Result<StackedModel> {
    if opts.k == 0 {
        return Err(Error::InvalidConfig("K must be ≥ 1".into()));
    }
    if data.len() < 2 * opts.k {
        return Err(Error::InvalidConfig(format!(
            "need at least 2K = {} samples, got {}",
            2 * opts.k,
            data.len()
        )));
    }
    let (d_low, d_high) = split_disjoint(data, opts.low_fraction, rng)?;
    let parts = crate::partition::sample_partition(&d_low, opts.k, rng)?;
    let seeds: Vec<u64> = (0..=opts.k).map(|_| rng.random()).collect();

    let mut low_models = Vec::with_capacity(opts.k);
    for (k, part) in parts.iter().enumerate() {
        let mut part_rng = rng_from_seed(seeds[k]);
        low_models.push(train_plr(
            part,
            budget,
            opts.lambda_low,
            Regularizer::L2,
            &mut part_rng,
        )?);
    }

    let meta = build_meta(&low_models, &d_high, None)?;
    let mut high_rng = rng_from_seed(seeds[opts.k]);
    let high_model = train_plr(&meta, budget, opts.lambda_high, Regularizer::L2, &mut high_rng)?;

    Ok(StackedModel {
        kind: StackedKind::SamplePartitioned,
        low_models,
        partition: None,
        high_model,
        epsilon: budget.epsilon,
        low_region_sizes: parts.iter().map(LabeledDataset::len).collect(),
        high_region_size: d_high.len(),
    })
}

/// Options for feature-partitioned stacking.
#[derive(Debug, Clone)]
pub struct PstFOptions {
    /// Per-group regularization weights λ_k.
    pub lambdas: Vec<f64>,
    pub lambda_high: f64,
    pub low_fraction: f64,
    /// Optional per-group anchor functionals on *unscaled* group features
    /// (coefficients of a predictor wᵀx). Each is converted into the group's
    /// scaled coordinates, so the anchored predictor is preserved exactly;
    /// the group regularizer becomes ½‖w − u_k‖².
    pub offsets: Option<Vec<Vec<f64>>>,
}

impl PstFOptions {
    pub fn new(lambdas: Vec<f64>, lambda_high: f64) -> Self {
        Self {
            lambdas,
            lambda_high,
            low_fraction: 0.5,
            offsets: None,
        }
    }

    /// One λ for every group and the high-level model.
    pub fn uniform(k: usize, lambda: f64) -> Self {
        Self::new(vec![lambda; k], lambda)
    }
}

/// Trains a feature-partitioned stacked model.
pub fn train_pst_f(
    data: &LabeledDataset,
    budget: PrivacyBudget,
    partition: &FeaturePartition,
    opts: &PstFOptions,
    rng: &mut impl Rng,
) -> Result<StackedModel> {
    let (d_low, d_high) = split_disjoint(data, opts.low_fraction, rng)?;
    train_pst_f_on_split(&d_low, &d_high, budget, partition, opts, rng, None)
}

/// Pre-split feature-partitioned training with optional per-group noise
/// injection (one vector per group, dimension |F_k|; entries for q_k = 0
/// groups are ignored). Test-only: bypassing the sampler voids the privacy
/// guarantee.
#[cfg(any(test, feature = "test-hooks"))]
pub fn train_pst_f_presplit(
    d_low: &LabeledDataset,
    d_high: &LabeledDataset,
    budget: PrivacyBudget,
    partition: &FeaturePartition,
    opts: &PstFOptions,
    rng: &mut impl Rng,
    noise: Option<&[Vec<f64>]>,
) -> Result<StackedModel> {
    train_pst_f_on_split(d_low, d_high, budget, partition, opts, rng, noise)
}

fn train_pst_f_on_split(
    d_low: &LabeledDataset,
    d_high: &LabeledDataset,
    budget: PrivacyBudget,
    partition: &FeaturePartition,
    opts: &PstFOptions,
    rng: &mut impl Rng,
    injected_noise: Option<&[Vec<f64>]>,
) -> Result<StackedModel> {
    partition.validate()?;
    let k = partition.k();
    if partition.dim() != d_low.dim() {
        return Err(Error::DimensionMismatch {
            expected: d_low.dim(),
            got: partition.dim(),
        });
    }
    if opts.lambdas.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: opts.lambdas.len(),
        });
    }
    if let Some(offsets) = &opts.offsets {
        if offsets.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: offsets.len(),
            });
        }
    }

    let n_low = d_low.len();
    let params = pstf_params(budget, n_low, &opts.lambdas, &partition.weights)?;
    let seeds: Vec<u64> = (0..=k).map(|_| rng.random()).collect();

    let mut low_models = Vec::with_capacity(k);
    for (g, group) in partition.groups.iter().enumerate() {
        let q = partition.weights[g];
        let lambda = opts.lambdas[g];
        let sub = d_low.restrict_features(group);
        let dg = group.len();

        // zero-importance group: features are annihilated, no noise budget,
        // the fit is the unperturbed regularized one (identically zero)
        if q == 0.0 {
            let zeroed = sub.zeroed();
            let noise = vec![0.0; dg];
            let objective = Objective::new(&zeroed, &noise, 0.0, lambda, Regularizer::L2)?;
            let solution = minimize(&objective, &vec![0.0; dg], DEFAULT_TOL)?;
            low_models.push(LinearModel {
                weights: solution.w,
                train_scale: 1.0,
                epsilon: budget.epsilon,
                lambda,
                params: PerturbationParams {
                    eps_prime: params.eps_prime,
                    deltas: vec![0.0],
                    fallback: params.fallback,
                },
                diagnostics: TrainDiagnostics {
                    solver_iterations: solution.iterations,
                    solver_residual: solution.residual,
                    objective_value: solution.value,
                    warnings: vec![format!("group {g} has zero importance: features annihilated")],
                },
            });
            continue;
        }

        let (scaled, s_k) = scale_to_ball(&sub, q)?;
        let noise = match injected_noise {
            None => {
                let mut group_rng = rng_from_seed(seeds[g]);
                sample_noise(dg, params.eps_prime, &mut group_rng)
            }
            Some(over) => {
                let b = over.get(g).ok_or(Error::DimensionMismatch {
                    expected: k,
                    got: over.len(),
                })?;
                if b.len() != dg {
                    return Err(Error::DimensionMismatch {
                        expected: dg,
                        got: b.len(),
                    });
                }
                b.clone()
            }
        };

        let reg = match &opts.offsets {
            Some(offsets) => {
                if offsets[g].len() != dg {
                    return Err(Error::DimensionMismatch {
                        expected: dg,
                        got: offsets[g].len(),
                    });
                }
                // anchor functional on raw features → coordinates of the
                // scaled problem: u = r · s_k keeps (x/s)ᵀu = xᵀr
                Regularizer::OffsetL2(offsets[g].iter().map(|r| r * s_k).collect())
            }
            None => Regularizer::L2,
        };

        let objective = Objective::new(&scaled, &noise, params.deltas[g], lambda, reg)?;
        let w0 = objective.reg.minimizer(dg);
        let solution = minimize(&objective, &w0, DEFAULT_TOL)?;
        low_models.push(LinearModel {
            weights: solution.w,
            train_scale: s_k,
            epsilon: budget.epsilon,
            lambda,
            params: PerturbationParams {
                eps_prime: params.eps_prime,
                deltas: vec![params.deltas[g]],
                fallback: params.fallback,
            },
            diagnostics: TrainDiagnostics {
                solver_iterations: solution.iterations,
                solver_residual: solution.residual,
                objective_value: solution.value,
                warnings: Vec::new(),
            },
        });
    }

    let meta = build_meta(&low_models, d_high, Some(partition))?;
    let mut high_rng = rng_from_seed(seeds[k]);
    let high_model = train_plr(
        &meta,
        budget,
        opts.lambda_high,
        Regularizer::L2,
        &mut high_rng,
    )?;

    Ok(StackedModel {
        kind: StackedKind::FeaturePartitioned,
        low_models,
        partition: Some(partition.clone()),
        high_model,
        epsilon: budget.epsilon,
        low_region_sizes: vec![n_low],
        high_region_size: d_high.len(),
    })
}

/// Scores one input with the chosen combiner. All combiners return a value
/// in [0, 1].
pub fn predict_stacked(model: &StackedModel, x: &[f64], combiner: Combiner) -> Result<f64> {
    let meta = model.meta_features(x)?;
    match combiner {
        Combiner::HighLevel => crate::plr::predict_linear(&model.high_model, &meta),
        Combiner::MajorityVote => {
            let votes = meta.iter().filter(|&&m| m > 0.5).count();
            Ok(votes as f64 / meta.len() as f64)
        }
        Combiner::WeightedMajorityVote => {
            let partition = model.partition.as_ref().ok_or_else(|| {
                Error::InvalidConfig(
                    "weighted majority vote needs feature-group importance weights".into(),
                )
            })?;
            Ok(meta
                .iter()
                .zip(&partition.weights)
                .filter(|(m, _)| **m > 0.5)
                .map(|(_, q)| q)
                .sum())
        }
    }
}
