//! Multi-seed experiment sweeps over methods × ε × K × α grids.
//!
//! Every cell is deterministic in isolation: its random stream derives from
//! (master seed, method, ε, K, α, seed), while the dataset draw and the
//! train/valid/test split derive from (master seed, seed) only — so methods
//! compared at the same seed see identical data, which is what makes the
//! per-seed paired tests meaningful. λ is tuned per cell on the validation
//! split; the final model is retrained at λ* and scored on the test split.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{
    load_csv, load_sparse, pca_reduce, synth_generate, train_valid_test_split, DataFormat,
    LabeledDataset, SynthSpec,
};
use crate::error::{Error, Result};
use crate::mechanism::PrivacyBudget;
use crate::numerics::Regularizer;
use crate::partition::{
    feature_partition, importance_weights, FeaturePartition, ImportanceVector, PartitionMode,
};
use crate::plr::train_plr;
use crate::seeding::{derive_rng, Tag};
use crate::stacking::{
    train_pst_f, train_pst_s, Combiner, PstFOptions, PstSOptions, StackedModel,
};
use crate::stats;
use crate::transfer::{train_pst_h, PstHOptions};

use super::{auc, default_lambda_grid, tune_lambda, CombinerScorer, Scorer};

/// Sentinel for the noiseless (non-private) variant in ε grids.
pub const EPSILON_INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Plr,
    PstS,
    PstFU,
    PstFW,
    PstH,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Plr => "plr",
            Method::PstS => "pst-s",
            Method::PstFU => "pst-f-u",
            Method::PstFW => "pst-f-w",
            Method::PstH => "pst-h",
        }
    }

    fn uses_k(self) -> bool {
        !matches!(self, Method::Plr)
    }

    /// α only matters for importance-weighted partitions under the
    /// alpha-power importance scheme.
    fn uses_alpha(self, importance: &ImportanceSource) -> bool {
        matches!(self, Method::PstFW | Method::PstH)
            && matches!(importance, ImportanceSource::AlphaPower)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Synthetic(SynthSpec),
    File { path: PathBuf, format: DataFormat },
}

/// Where the per-feature importance scores v_i come from.
///
/// The ε guarantee assumes importance is independent of the training data;
/// scores estimated from the data itself (PCA or column variances) are for
/// ablation-style benchmarking only.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ImportanceSource {
    /// Component variances when PCA preprocessing is on, otherwise raw
    /// per-column variances.
    PcaVariance,
    /// The synthetic generator's exact importance (synthetic datasets only).
    GroundTruth,
    /// Geometric profile α^i over the base importance order; α comes from
    /// the sweep's alpha grid.
    AlphaPower,
    /// CSV file with columns (feature_index, score), 0-based.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.4, valid: 0.2, test: 0.4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferSpec {
    pub source: DatasetSpec,
    /// Budget for the source-domain models; defaults to the cell's ε.
    #[serde(default)]
    pub eps_src: Option<f64>,
}

mod epsilon_list {
    //! ε grids serialize as JSON numbers, with the string "inf" for the
    //! noiseless sentinel.
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(eps: &[f64], ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = ser.serialize_seq(Some(eps.len()))?;
        for &e in eps {
            if e.is_infinite() {
                seq.serialize_element("inf")?;
            } else {
                seq.serialize_element(&e)?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<Raw>::deserialize(de)?;
        raw.into_iter()
            .map(|r| match r {
                Raw::Num(v) if v > 0.0 => Ok(v),
                Raw::Num(v) => Err(D::Error::custom(format!("epsilon must be > 0, got {v}"))),
                Raw::Str(s) if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") => {
                    Ok(f64::INFINITY)
                }
                Raw::Str(s) => Err(D::Error::custom(format!("bad epsilon {s:?}"))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub methods: Vec<Method>,
    #[serde(with = "epsilon_list")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default = "default_low_fraction")]
    pub low_fraction: f64,
    #[serde(default = "default_importance")]
    pub importance: ImportanceSource,
    /// Optional PCA preprocessing applied to the whole dataset before
    /// splitting.
    #[serde(default)]
    pub pca_dims: Option<usize>,
    /// Combiners scored for stacked methods (the high-level model is always
    /// first and is the one λ is tuned with).
    #[serde(default)]
    pub combiners: Vec<Combiner>,
    #[serde(default)]
    pub transfer: Option<TransferSpec>,
}

fn default_ks() -> Vec<usize> {
    vec![5]
}
fn default_low_fraction() -> f64 {
    0.5
}
fn default_importance() -> ImportanceSource {
    ImportanceSource::PcaVariance
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty()
            || self.epsilons.is_empty()
            || self.ks.is_empty()
            || self.lambda_grid.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::InvalidConfig(
                "methods, epsilons, ks, lambda_grid and seeds must be nonempty".into(),
            ));
        }
        let unique: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            return Err(Error::InvalidConfig("seeds must be distinct".into()));
        }
        if self.methods.iter().any(|m| m.uses_alpha(&self.importance)) && self.alphas.is_empty() {
            return Err(Error::InvalidConfig(
                "alpha-power importance needs a nonempty alpha grid".into(),
            ));
        }
        if self.methods.contains(&Method::PstH) && self.transfer.is_none() {
            return Err(Error::InvalidConfig("pst-h needs a transfer block".into()));
        }
        if matches!(self.importance, ImportanceSource::GroundTruth)
            && !matches!(self.dataset, DatasetSpec::Synthetic(_))
        {
            return Err(Error::InvalidConfig(
                "ground-truth importance requires a synthetic dataset".into(),
            ));
        }
        Ok(())
    }

    fn combiners(&self) -> Vec<Combiner> {
        if self.combiners.is_empty() {
            vec![Combiner::HighLevel]
        } else {
            let mut list = vec![Combiner::HighLevel];
            for &c in &self.combiners {
                if !list.contains(&c) {
                    list.push(c);
                }
            }
            list
        }
    }
}

/// One (method, ε, K, α, seed) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub epsilon: f64,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub lambda: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub method: String,
    pub epsilon: f64,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryCell {
    pub method: String,
    pub epsilon: f64,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub method_a: String,
    pub method_b: String,
    pub epsilon: f64,
    pub mean_diff: f64,
    pub p_value: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
    pub summary: Vec<SummaryCell>,
    pub comparisons: Vec<PairwiseComparison>,
}

/// The per-seed materialized data a cell trains and evaluates on.
struct SeedData {
    train: LabeledDataset,
    valid: LabeledDataset,
    test: LabeledDataset,
    /// Base per-feature importance scores for weighted partitions.
    base_importance: Option<Vec<f64>>,
    source_train: Option<LabeledDataset>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellKey {
    method: Method,
    epsilon: f64,
    k: Option<usize>,
    alpha: Option<f64>,
    seed: u64,
}

fn load_spec_dataset(spec: &DatasetSpec, master: u64, seed: u64, tag: &str) -> Result<(LabeledDataset, Option<Vec<f64>>)> {
    match spec {
        DatasetSpec::Synthetic(synth) => {
            let mut spec = synth.clone();
            // keep the informative structure identical across seeds unless
            // the config pinned one explicitly
            if spec.structure_seed.is_none() {
                spec.structure_seed = Some(crate::seeding::derive_seed(
                    master,
                    &[Tag::Str("synth-structure"), Tag::Str(tag)],
                ));
            }
            let mut rng = derive_rng(master, &[Tag::Str("data"), Tag::Str(tag), Tag::U64(seed)]);
            let out = synth_generate(&spec, &mut rng)?;
            Ok((out.dataset, Some(out.importance)))
        }
        DatasetSpec::File { path, format } => {
            let data = match format {
                DataFormat::Csv => load_csv(path)?,
                DataFormat::SparseIndexValue => load_sparse(path)?,
            };
            Ok((data, None))
        }
    }
}

fn load_importance_file(path: &PathBuf, d: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut scores = vec![0.0; d];
    let mut seen = vec![false; d];
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let idx_tok = parts.next().unwrap_or_default().trim();
        if i == 0 && idx_tok.parse::<usize>().is_err() {
            continue; // header
        }
        let idx: usize = idx_tok.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: line_no,
            msg: format!("bad feature index {idx_tok:?}"),
        })?;
        let score: f64 = parts
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: line_no,
                msg: "bad score".into(),
            })?;
        if idx >= d {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: line_no,
                msg: format!("feature index {idx} out of range for d = {d}"),
            });
        }
        scores[idx] = score;
        seen[idx] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::InvalidConfig(format!(
            "importance file {} does not cover every feature 0..{d}",
            path.display()
        )));
    }
    Ok(scores)
}

fn prepare_seed_data(cfg: &ExperimentConfig, master: u64, seed: u64) -> Result<SeedData> {
    let (mut data, ground_truth) = load_spec_dataset(&cfg.dataset, master, seed, "target")?;
    let mut pca_variances = None;
    if let Some(dims) = cfg.pca_dims {
        let (reduced, model) = pca_reduce(&data, dims)?;
        data = reduced;
        pca_variances = Some(model.variances);
    }

    let base_importance = match &cfg.importance {
        ImportanceSource::PcaVariance => Some(match &pca_variances {
            Some(v) => v.clone(),
            None => data.column_variances(),
        }),
        ImportanceSource::GroundTruth => {
            if cfg.pca_dims.is_some() {
                return Err(Error::InvalidConfig(
                    "ground-truth importance is undefined after PCA rotation".into(),
                ));
            }
            ground_truth
        }
        ImportanceSource::AlphaPower => {
            // α powers are laid over the base order given by ground truth
            // (synthetic) or measured variance
            let base = match (&ground_truth, cfg.pca_dims) {
                (Some(gt), None) => gt.clone(),
                _ => match &pca_variances {
                    Some(v) => v.clone(),
                    None => data.column_variances(),
                },
            };
            Some(base)
        }
        ImportanceSource::File { path } => Some(load_importance_file(path, data.dim())?),
    };

    let mut split_rng = derive_rng(master, &[Tag::Str("split"), Tag::U64(seed)]);
    let (train, valid, test) = train_valid_test_split(
        &data,
        (cfg.split.train, cfg.split.valid, cfg.split.test),
        &mut split_rng,
    )?;

    let source_train = match &cfg.transfer {
        Some(t) => {
            let (src, _) = load_spec_dataset(&t.source, master, seed, "source")?;
            if cfg.pca_dims.is_some() {
                return Err(Error::InvalidConfig(
                    "pca preprocessing with a transfer source is not supported: the domains would get different projections".into(),
                ));
            }
            Some(src)
        }
        None => None,
    };

    Ok(SeedData {
        train,
        valid,
        test,
        base_importance,
        source_train,
    })
}

/// Builds the weighted feature partition for a cell: groups sorted by the
/// base importance; weights from the base scores, or from α-powers of the
/// sorted rank when α is set.
fn weighted_partition(
    base: &[f64],
    k: usize,
    alpha: Option<f64>,
) -> Result<FeaturePartition> {
    let d = base.len();
    let scores = ImportanceVector::new(base.to_vec())?;
    // rng is unused in sorted mode; any stream will do
    let mut dummy = crate::seeding::rng_from_seed(0);
    let partition = feature_partition(d, k, PartitionMode::ImportanceSorted, Some(&scores), &mut dummy)?;
    match alpha {
        None => Ok(partition),
        Some(a) => {
            // rank features by the sorted order actually used by the groups
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&x, &y| base[y].total_cmp(&base[x]).then(x.cmp(&y)));
            let mut alpha_scores = vec![0.0; d];
            for (rank, &feat) in order.iter().enumerate() {
                alpha_scores[feat] = a.powi(rank as i32 + 1).clamp(1e-300, 1e300);
            }
            let q = importance_weights(&ImportanceVector::new(alpha_scores)?, &partition.groups)?;
            FeaturePartition::new(partition.groups, q)
        }
    }
}

enum TrainedCell {
    Linear(crate::plr::LinearModel),
    Stacked(StackedModel),
    Transfer(crate::transfer::TransferModel),
}

impl TrainedCell {
    fn stacked(&self) -> Option<&StackedModel> {
        match self {
            TrainedCell::Stacked(m) => Some(m),
            TrainedCell::Transfer(m) => Some(&m.target),
            TrainedCell::Linear(_) => None,
        }
    }
}

impl Scorer for TrainedCell {
    fn score(&self, x: &[f64]) -> Result<f64> {
        match self {
            TrainedCell::Linear(m) => m.score(x),
            TrainedCell::Stacked(m) => m.score(x),
            TrainedCell::Transfer(m) => m.score(x),
        }
    }
}

/// Trains one cell's model at a given λ. The stream derives from the cell
/// key only — not from λ — so every candidate in a tuning pass shares the
/// same split, partition and noise streams, and retraining at the selected
/// λ reproduces the validated model exactly.
fn train_cell(
    cfg: &ExperimentConfig,
    master: u64,
    key: &CellKey,
    data: &SeedData,
    lambda: f64,
) -> Result<TrainedCell> {
    let budget = PrivacyBudget::new(key.epsilon)?;
    let mut rng = derive_rng(
        master,
        &[
            Tag::Str("cell"),
            Tag::Str(key.method.name()),
            Tag::F64(key.epsilon),
            Tag::U64(key.k.unwrap_or(0) as u64),
            Tag::F64(key.alpha.unwrap_or(f64::NAN)),
            Tag::U64(key.seed),
        ],
    );
    match key.method {
        Method::Plr => {
            let model = train_plr(&data.train, budget, lambda, Regularizer::L2, &mut rng)?;
            Ok(TrainedCell::Linear(model))
        }
        Method::PstS => {
            let mut opts = PstSOptions::new(key.k.unwrap(), lambda, lambda);
            opts.low_fraction = cfg.low_fraction;
            Ok(TrainedCell::Stacked(train_pst_s(&data.train, budget, &opts, &mut rng)?))
        }
        Method::PstFU => {
            let k = key.k.unwrap();
            let partition =
                feature_partition(data.train.dim(), k, PartitionMode::UniformRandom, None, &mut rng)?;
            let mut opts = PstFOptions::uniform(k, lambda);
            opts.low_fraction = cfg.low_fraction;
            Ok(TrainedCell::Stacked(train_pst_f(
                &data.train,
                budget,
                &partition,
                &opts,
                &mut rng,
            )?))
        }
        Method::PstFW => {
            let k = key.k.unwrap();
            let base = data.base_importance.as_ref().ok_or_else(|| {
                Error::InvalidConfig("weighted partition needs importance scores".into())
            })?;
            let partition = weighted_partition(base, k, key.alpha)?;
            let mut opts = PstFOptions::uniform(k, lambda);
            opts.low_fraction = cfg.low_fraction;
            Ok(TrainedCell::Stacked(train_pst_f(
                &data.train,
                budget,
                &partition,
                &opts,
                &mut rng,
            )?))
        }
        Method::PstH => {
            let k = key.k.unwrap();
            let base = data.base_importance.as_ref().ok_or_else(|| {
                Error::InvalidConfig("weighted partition needs importance scores".into())
            })?;
            let partition = weighted_partition(base, k, key.alpha)?;
            let source = data.source_train.as_ref().ok_or_else(|| {
                Error::InvalidConfig("pst-h needs a transfer source dataset".into())
            })?;
            let eps_src = cfg
                .transfer
                .as_ref()
                .and_then(|t| t.eps_src)
                .unwrap_or(key.epsilon);
            let mut opts = PstHOptions::uniform(k, lambda, lambda);
            opts.low_fraction = cfg.low_fraction;
            Ok(TrainedCell::Transfer(train_pst_h(
                source,
                &data.train,
                PrivacyBudget::new(eps_src)?,
                budget,
                &partition,
                &opts,
                &mut rng,
            )?))
        }
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    master: u64,
    key: &CellKey,
    data: &SeedData,
) -> Result<Vec<ResultRow>> {
    let tuned = tune_lambda(&cfg.lambda_grid, &data.valid, |lambda| {
        train_cell(cfg, master, key, data, lambda)
    })?;
    let model = train_cell(cfg, master, key, data, tuned.lambda)?;

    let mut rows = Vec::new();
    let base_row = |method: String, auc_value: f64| ResultRow {
        method,
        epsilon: key.epsilon,
        k: key.k,
        alpha: key.alpha,
        seed: key.seed,
        lambda: tuned.lambda,
        auc: auc_value,
    };

    let scores = model.score_all(&data.test)?;
    rows.push(base_row(key.method.name().to_string(), auc(&scores, data.test.labels())?));

    if let Some(stacked) = model.stacked() {
        for combiner in cfg.combiners().into_iter().skip(1) {
            let scorer = CombinerScorer { model: stacked, combiner };
            let scores = scorer.score_all(&data.test)?;
            let label = match combiner {
                Combiner::HighLevel => continue,
                Combiner::MajorityVote => format!("{}[c-mv]", key.method.name()),
                Combiner::WeightedMajorityVote => format!("{}[c-wmv]", key.method.name()),
            };
            rows.push(base_row(label, auc(&scores, data.test.labels())?));
        }
    }
    Ok(rows)
}

/// Runs the full sweep. `jobs` bounds the worker pool (0 = one worker per
/// core); `on_rows` receives each cell's rows as they are finalized, in
/// canonical order. The result is identical regardless of `jobs`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    master_seed: u64,
    jobs: usize,
    mut on_rows: impl FnMut(&[ResultRow]),
) -> Result<ExperimentResult> {
    cfg.validate()?;

    // materialize per-seed data once, shared by every method and ε
    let mut seed_data = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        seed_data.push((seed, prepare_seed_data(cfg, master_seed, seed)?));
    }
    let data_for = |seed: u64| -> &SeedData {
        &seed_data.iter().find(|(s, _)| *s == seed).unwrap().1
    };

    let mut cells = Vec::new();
    for &method in &cfg.methods {
        for &epsilon in &cfg.epsilons {
            let k_axis: Vec<Option<usize>> = if method.uses_k() {
                cfg.ks.iter().map(|&k| Some(k)).collect()
            } else {
                vec![None]
            };
            for &k in &k_axis {
                let alpha_axis: Vec<Option<f64>> = if method.uses_alpha(&cfg.importance) {
                    cfg.alphas.iter().map(|&a| Some(a)).collect()
                } else {
                    vec![None]
                };
                for &alpha in &alpha_axis {
                    for &seed in &cfg.seeds {
                        cells.push(CellKey { method, epsilon, k, alpha, seed });
                    }
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    // batches keep output order canonical while cells inside a batch run in
    // parallel; rows stream out after each batch
    for batch in cells.chunks(64.max(cfg.seeds.len())) {
        let outcomes: Vec<(CellKey, Result<Vec<ResultRow>>)> = pool.install(|| {
            use rayon::prelude::*;
            batch
                .par_iter()
                .map(|key| (*key, run_cell(cfg, master_seed, key, data_for(key.seed))))
                .collect()
        });
        for (key, outcome) in outcomes {
            match outcome {
                Ok(cell_rows) => {
                    on_rows(&cell_rows);
                    rows.extend(cell_rows);
                }
                Err(err) => failures.push(CellFailure {
                    method: key.method.name().to_string(),
                    epsilon: key.epsilon,
                    k: key.k,
                    alpha: key.alpha,
                    seed: key.seed,
                    error: err.to_string(),
                }),
            }
        }
    }

    let summary = summarize(&rows);
    let comparisons = pairwise(&rows, &summary);
    Ok(ExperimentResult { rows, failures, summary, comparisons })
}

fn summarize(rows: &[ResultRow]) -> Vec<SummaryCell> {
    let mut cells: Vec<SummaryCell> = Vec::new();
    for row in rows {
        let found = cells.iter_mut().find(|c| {
            c.method == row.method
                && c.epsilon.to_bits() == row.epsilon.to_bits()
                && c.k == row.k
                && c.alpha.map(f64::to_bits) == row.alpha.map(f64::to_bits)
        });
        match found {
            Some(c) => {
                c.n_seeds += 1;
                c.mean_auc += row.auc;
            }
            None => cells.push(SummaryCell {
                method: row.method.clone(),
                epsilon: row.epsilon,
                k: row.k,
                alpha: row.alpha,
                mean_auc: row.auc,
                std_auc: 0.0,
                n_seeds: 1,
            }),
        }
    }
    for cell in &mut cells {
        cell.mean_auc /= cell.n_seeds as f64;
    }
    for cell in &mut cells {
        let aucs: Vec<f64> = rows
            .iter()
            .filter(|r| {
                r.method == cell.method
                    && r.epsilon.to_bits() == cell.epsilon.to_bits()
                    && r.k == cell.k
                    && r.alpha.map(f64::to_bits) == cell.alpha.map(f64::to_bits)
            })
            .map(|r| r.auc)
            .collect();
        cell.std_auc = if aucs.len() > 1 { stats::std_dev(&aucs) } else { 0.0 };
    }
    cells
}

/// Pairwise paired t-tests between methods at each ε, computed when both
/// methods have exactly one (K, α) cell there and share the seed set.
fn pairwise(rows: &[ResultRow], summary: &[SummaryCell]) -> Vec<PairwiseComparison> {
    let mut methods: Vec<&str> = Vec::new();
    for cell in summary {
        if !methods.contains(&cell.method.as_str()) {
            methods.push(&cell.method);
        }
    }
    let mut epsilons: Vec<f64> = Vec::new();
    for cell in summary {
        if !epsilons.iter().any(|e| e.to_bits() == cell.epsilon.to_bits()) {
            epsilons.push(cell.epsilon);
        }
    }

    let mut out = Vec::new();
    for &eps in &epsilons {
        for (i, &a) in methods.iter().enumerate() {
            for &b in &methods[i + 1..] {
                let cells_for = |m: &str| -> Vec<&SummaryCell> {
                    summary
                        .iter()
                        .filter(|c| c.method == m && c.epsilon.to_bits() == eps.to_bits())
                        .collect()
                };
                if cells_for(a).len() != 1 || cells_for(b).len() != 1 {
                    continue;
                }
                let collect = |m: &str| -> Vec<(u64, f64)> {
                    let mut v: Vec<(u64, f64)> = rows
                        .iter()
                        .filter(|r| r.method == m && r.epsilon.to_bits() == eps.to_bits())
                        .map(|r| (r.seed, r.auc))
                        .collect();
                    v.sort_by_key(|(s, _)| *s);
                    v
                };
                let ra = collect(a);
                let rb = collect(b);
                if ra.len() < 2
                    || ra.len() != rb.len()
                    || ra.iter().zip(&rb).any(|(x, y)| x.0 != y.0)
                {
                    continue;
                }
                let xs: Vec<f64> = ra.iter().map(|(_, v)| *v).collect();
                let ys: Vec<f64> = rb.iter().map(|(_, v)| *v).collect();
                let t = stats::paired_t_test(&xs, &ys);
                out.push(PairwiseComparison {
                    method_a: a.to_string(),
                    method_b: b.to_string(),
                    epsilon: eps,
                    mean_diff: t.mean_diff,
                    p_value: t.p_value,
                    degenerate: t.degenerate,
                });
            }
        }
    }
    out
}

fn fmt_eps(e: f64) -> String {
    if e.is_infinite() {
        "inf".to_string()
    } else {
        format!("{e}")
    }
}

impl ExperimentResult {
    /// `method,epsilon,k,alpha,seed,lambda,auc` — one row per measurement.
    pub fn to_results_csv(&self) -> String {
        let mut out = String::from("method,epsilon,k,alpha,seed,lambda,auc\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.method,
                fmt_eps(row.epsilon),
                row.k.map(|k| k.to_string()).unwrap_or_default(),
                row.alpha.map(|a| a.to_string()).unwrap_or_default(),
                row.seed,
                row.lambda,
                row.auc
            );
        }
        out
    }

    pub fn to_summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            cells: &'a [SummaryCell],
            pairwise: &'a [PairwiseComparison],
            failures: &'a [CellFailure],
        }
        // JSON has no Infinity: route through a Value and patch ε strings
        let mut value = serde_json::to_value(Summary {
            cells: &self.summary,
            pairwise: &self.comparisons,
            failures: &self.failures,
        })?;
        patch_inf(&mut value);
        Ok(serde_json::to_string_pretty(&value)?)
    }

    /// Plot-ready `x,method,mean,std` rows along one sweep axis.
    pub fn plot_csv(&self, axis: SweepAxis) -> String {
        let mut out = String::from(match axis {
            SweepAxis::Epsilon => "epsilon,method,mean_auc,std_auc\n",
            SweepAxis::K => "k,method,mean_auc,std_auc\n",
            SweepAxis::Alpha => "alpha,method,mean_auc,std_auc\n",
        });
        for cell in &self.summary {
            let x = match axis {
                SweepAxis::Epsilon => Some(fmt_eps(cell.epsilon)),
                SweepAxis::K => cell.k.map(|k| k.to_string()),
                SweepAxis::Alpha => cell.alpha.map(|a| a.to_string()),
            };
            if let Some(x) = x {
                let _ = writeln!(out, "{x},{},{},{}", cell.method, cell.mean_auc, cell.std_auc);
            }
        }
        out
    }
}

fn patch_inf(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            for (key, v) in map.iter_mut() {
                if v.is_null() && key.contains("epsilon") {
                    // serde_json writes f64::INFINITY as null; make it legible
                    *v = serde_json::Value::String("inf".into());
                } else {
                    patch_inf(v);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(patch_inf),
        _ => {}
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    K,
    Alpha,
}
