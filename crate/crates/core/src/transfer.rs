//! Hypothesis transfer across domains: per-group private models trained on
//! a source domain become regularizer anchors for feature-partitioned
//! stacking on the target domain.
//!
//! Only the source weight vectors cross the domain boundary — target
//! training never touches source samples — and the two domains account for
//! their budgets independently (ε_src for every source model, ε_tgt for the
//! target ensemble).

use rand::Rng;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::mechanism::PrivacyBudget;
use crate::numerics::Regularizer;
use crate::partition::FeaturePartition;
use crate::plr::{train_plr, LinearModel};
use crate::seeding::rng_from_seed;
use crate::stacking::{train_pst_f, PstFOptions, StackedModel};

#[derive(Debug, Clone, PartialEq)]
pub struct TransferModel {
    /// One source model per feature group, trained at radius-1 scaling.
    pub source_models: Vec<LinearModel>,
    pub partition: FeaturePartition,
    pub target: StackedModel,
    pub eps_src: f64,
    pub eps_tgt: f64,
}

#[derive(Debug, Clone)]
pub struct PstHOptions {
    pub lambda_src: f64,
    /// Per-group target regularization weights.
    pub lambdas_tgt: Vec<f64>,
    pub lambda_high: f64,
    pub low_fraction: f64,
}

impl PstHOptions {
    pub fn uniform(k: usize, lambda_src: f64, lambda_tgt: f64) -> Self {
        Self {
            lambda_src,
            lambdas_tgt: vec![lambda_tgt; k],
            lambda_high: lambda_tgt,
            low_fraction: 0.5,
        }
    }
}

/// Trains source models per feature group, then anchors target-domain
/// feature-partitioned stacking at them.
pub fn train_pst_h(
    d_src: &LabeledDataset,
    d_tgt: &LabeledDataset,
    budget_src: PrivacyBudget,
    budget_tgt: PrivacyBudget,
    partition: &FeaturePartition,
    opts: &PstHOptions,
    rng: &mut impl Rng,
) -> Result<TransferModel> {
    partition.validate()?;
    if d_src.dim() != d_tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: d_tgt.dim(),
            got: d_src.dim(),
        });
    }
    if partition.dim() != d_tgt.dim() {
        return Err(Error::DimensionMismatch {
            expected: d_tgt.dim(),
            got: partition.dim(),
        });
    }
    let k = partition.k();
    let seeds: Vec<u64> = (0..=k).map(|_| rng.random()).collect();

    let mut source_models = Vec::with_capacity(k);
    for (g, group) in partition.groups.iter().enumerate() {
        let sub = d_src.restrict_features(group);
        let mut src_rng = rng_from_seed(seeds[g]);
        source_models.push(train_plr(
            &sub,
            budget_src,
            opts.lambda_src,
            Regularizer::L2,
            &mut src_rng,
        )?);
    }

    // hand the anchors over as predictors on unscaled group features; the
    // target trainer rescales them into its own coordinates
    let offsets: Vec<Vec<f64>> = source_models
        .iter()
        .map(LinearModel::raw_coefficients)
        .collect();

    let fp_opts = PstFOptions {
        lambdas: opts.lambdas_tgt.clone(),
        lambda_high: opts.lambda_high,
        low_fraction: opts.low_fraction,
        offsets: Some(offsets),
    };
    let mut tgt_rng = rng_from_seed(seeds[k]);
    let target = train_pst_f(d_tgt, budget_tgt, partition, &fp_opts, &mut tgt_rng)?;

    Ok(TransferModel {
        source_models,
        partition: partition.clone(),
        target,
        eps_src: budget_src.epsilon,
        eps_tgt: budget_tgt.epsilon,
    })
}
