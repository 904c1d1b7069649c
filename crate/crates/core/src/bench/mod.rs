//! Evaluation and experiment harness: rank-based AUC, hyperparameter tuning
//! on a validation split, multi-seed sweeps and paired method comparisons.

mod sweep;

pub use sweep::{
    run_experiment, CellFailure, DatasetSpec, ExperimentConfig, ExperimentResult,
    ImportanceSource, Method, PairwiseComparison, ResultRow, SplitFractions, SummaryCell,
    SweepAxis, TransferSpec, EPSILON_INF,
};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::plr::{predict_linear, LinearModel};
use crate::stacking::{predict_stacked, Combiner, StackedModel};
use crate::stats;
use crate::transfer::TransferModel;

/// Anything that maps a feature row to a score in [0, 1].
pub trait Scorer {
    fn score(&self, x: &[f64]) -> Result<f64>;

    fn score_all(&self, data: &LabeledDataset) -> Result<Vec<f64>> {
        (0..data.len()).map(|i| self.score(data.row(i))).collect()
    }
}

impl Scorer for LinearModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        predict_linear(self, x)
    }
}

impl Scorer for StackedModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        predict_stacked(self, x, Combiner::HighLevel)
    }
}

impl Scorer for TransferModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        predict_stacked(&self.target, x, Combiner::HighLevel)
    }
}

/// A stacked model scored with a specific combiner.
pub struct CombinerScorer<'a> {
    pub model: &'a StackedModel,
    pub combiner: Combiner,
}

impl Scorer for CombinerScorer<'_> {
    fn score(&self, x: &[f64]) -> Result<f64> {
        predict_stacked(self.model, x, self.combiner)
    }
}

/// Area under the ROC curve by the rank statistic: concordant pairs plus
/// half the ties, over n₊ · n₋ pairs. Ties in scores get average ranks.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&y| y > 0.0).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // average ranks over tie runs, then sum the positives' ranks
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0; // 1-based
        for &idx in &order[i..=j] {
            if labels[idx] > 0.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let n_pos = n_pos as f64;
    let n_neg = n_neg as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// The λ selected on a validation split, with its score and any grid points
/// the budget arithmetic rejected.
#[derive(Debug, Clone)]
pub struct TunedLambda {
    pub lambda: f64,
    pub valid_auc: f64,
    pub rejected: Vec<(f64, String)>,
}

/// Picks the grid λ with the best validation AUC (ties → smallest λ).
/// Budget rejections are collected and skipped; an error listing them is
/// returned only if every grid point was rejected.
pub fn tune_lambda<S: Scorer>(
    grid: &[f64],
    valid: &LabeledDataset,
    mut train: impl FnMut(f64) -> Result<S>,
) -> Result<TunedLambda> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("lambda grid must be nonempty".into()));
    }
    let mut lambdas = grid.to_vec();
    lambdas.sort_by(f64::total_cmp);

    let mut best: Option<(f64, f64)> = None;
    let mut rejected = Vec::new();
    for &lambda in &lambdas {
        match train(lambda) {
            Ok(scorer) => {
                let scores = scorer.score_all(valid)?;
                let score = auc(&scores, valid.labels())?;
                if best.is_none_or(|(_, b)| score > b) {
                    best = Some((lambda, score));
                }
            }
            Err(Error::BudgetRejected { reason }) => rejected.push((lambda, reason)),
            Err(other) => return Err(other),
        }
    }
    match best {
        Some((lambda, valid_auc)) => Ok(TunedLambda {
            lambda,
            valid_auc,
            rejected,
        }),
        None => Err(Error::AllLambdasRejected(
            rejected
                .iter()
                .map(|(l, r)| format!("λ={l}: {r}"))
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}

/// Default tuning grid: 7 points log-spaced over 1e-4 ..= 1e2.
pub fn default_lambda_grid() -> Vec<f64> {
    (-4..=2).map(|e| 10f64.powi(e)).collect()
}

/// Paired two-sided comparison of two methods' per-seed AUCs, aligned by
/// seed. Errors if the seed sets differ.
pub fn compare_methods(
    result: &ExperimentResult,
    method_a: &str,
    method_b: &str,
    epsilon: f64,
) -> Result<stats::PairedTTest> {
    let collect = |name: &str| -> Vec<(u64, f64)> {
        let mut rows: Vec<(u64, f64)> = result
            .rows
            .iter()
            .filter(|r| r.method == name && r.epsilon == epsilon)
            .map(|r| (r.seed, r.auc))
            .collect();
        rows.sort_by_key(|(s, _)| *s);
        rows
    };
    let a = collect(method_a);
    let b = collect(method_b);
    if a.is_empty() || a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.0 != y.0) {
        return Err(Error::InvalidConfig(format!(
            "methods {method_a} and {method_b} do not share a seed set at epsilon = {epsilon}"
        )));
    }
    let xs: Vec<f64> = a.into_iter().map(|(_, v)| v).collect();
    let ys: Vec<f64> = b.into_iter().map(|(_, v)| v).collect();
    Ok(stats::paired_t_test(&xs, &ys))
}
