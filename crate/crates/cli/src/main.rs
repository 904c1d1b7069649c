//! Command-line harness: train/predict/eval for the private models, the
//! benchmark sweep runner, the noise-mechanism audit and the synthetic data
//! generator.
//!
//! Exit codes: 0 ok, 2 usage or flag validation, 3 budget-arithmetic
//! rejection, 4 shape mismatch, 5 every sweep cell failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dpstack::bench::{auc, run_experiment, ExperimentConfig, Scorer, SweepAxis};
use dpstack::bounds::{bound_report, QScheme};
use dpstack::data::{load_csv, load_sparse, save_csv, synth_generate, LabeledDataset, SynthSpec};
use dpstack::error::Error;
use dpstack::mechanism::{noise_audit, plr_params, pstf_params, PrivacyBudget};
use dpstack::model_json::{self, AnyModel};
use dpstack::numerics::Regularizer;
use dpstack::partition::{
    alpha_importance, feature_partition, FeaturePartition, ImportanceVector, PartitionMode,
};
use dpstack::plr::train_plr;
use dpstack::seeding::derive_rng;
use dpstack::stacking::{predict_stacked, train_pst_f, train_pst_s, Combiner, PstFOptions, PstSOptions};
use dpstack::transfer::{train_pst_h, PstHOptions};

#[derive(Parser)]
#[command(
    name = "dpstack",
    about = "Differentially private logistic regression with stacked ensembles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a private model and write it as JSON.
    Train(TrainArgs),
    /// Score a dataset with a trained model.
    Predict(PredictArgs),
    /// Compute test AUC from a scores file or a model.
    Eval(EvalArgs),
    /// Run an experiment sweep from a JSON config, or emit the
    /// sample-complexity bound report with --bound-report.
    Bench(BenchArgs),
    /// Statistically audit the noise sampler against its target law.
    NoiseAudit(NoiseAuditArgs),
    /// Generate a synthetic benchmark dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Plr,
    #[value(name = "pst-s")]
    PstS,
    #[value(name = "pst-f-u")]
    PstFU,
    #[value(name = "pst-f-w")]
    PstFW,
    #[value(name = "pst-h")]
    PstH,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Sparse,
}


#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CombinerArg {
    Hl,
    Mv,
    Wmv,
}

impl CombinerArg {
    fn to_combiner(self) -> Combiner {
        match self {
            CombinerArg::Hl => Combiner::HighLevel,
            CombinerArg::Mv => Combiner::MajorityVote,
            CombinerArg::Wmv => Combiner::WeightedMajorityVote,
        }
    }
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s.parse().map_err(|_| format!("bad epsilon {s:?}"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("epsilon must be > 0".into())
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training algorithm.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Privacy budget ε (or "inf" for the noiseless variant).
    #[arg(long, value_parser = parse_epsilon)]
    epsilon: f64,
    /// Training dataset.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Regularization weight (low-level models for stacked methods).
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// High-level regularization weight (defaults to --lambda).
    #[arg(long)]
    lambda_high: Option<f64>,
    /// Number of partitions for stacked methods.
    #[arg(long)]
    k: Option<usize>,
    /// Feature-importance file (csv: feature_index,score) for pst-f-w/pst-h.
    #[arg(long)]
    importance_file: Option<PathBuf>,
    /// Geometric importance profile α (features ranked by variance).
    #[arg(long)]
    alpha: Option<f64>,
    /// Rank features by their observed variance (ablation only: importance
    /// derived from the data weakens the ε guarantee).
    #[arg(long)]
    pca_importance: bool,
    /// Source-domain dataset (pst-h).
    #[arg(long)]
    source_data: Option<PathBuf>,
    /// Source-domain budget (pst-h), defaults to --epsilon.
    #[arg(long, value_parser = parse_epsilon)]
    eps_src: Option<f64>,
    /// Fraction of training data for the low-level models.
    #[arg(long, default_value_t = 0.5)]
    low_fraction: f64,
    /// Optional held-out dataset to report a test AUC.
    #[arg(long)]
    test_data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Output scores file, one score per row.
    #[arg(long)]
    out: PathBuf,
    /// Combiner for stacked models.
    #[arg(long, value_enum, default_value = "hl")]
    combiner: CombinerArg,
}

#[derive(Args)]
struct EvalArgs {
    /// Scores file (one score per row), mutually exclusive with --model.
    #[arg(long, conflicts_with = "model")]
    scores: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "hl")]
    combiner: CombinerArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (JSON). Required unless --bound-report.
    #[arg(long, required_unless_present = "bound_report")]
    config: Option<PathBuf>,
    /// Output directory for results.csv, summary.json and plot data.
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    /// Master seed mixed into every cell stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override the config's method list (comma separated).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Override the config's ε grid ("inf" allowed).
    #[arg(long, value_delimiter = ',', value_parser = parse_epsilon)]
    epsilons: Vec<f64>,
    /// Override the config's K grid.
    #[arg(long = "ks-grid", value_delimiter = ',')]
    ks_grid: Vec<usize>,
    /// Override the config's α grid.
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    /// Override the config's seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Override the config's λ grid.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Vec<f64>,
    /// Emit the sample-complexity bound comparison instead of running a
    /// sweep.
    #[arg(long)]
    bound_report: bool,
    /// Bound report: dimension grid.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    dims: Vec<usize>,
    /// Bound report: partition-count grid.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,25")]
    ks: Vec<usize>,
    /// Bound report: importance scheme ("uniform" or "alpha:<x>").
    #[arg(long, default_value = "uniform")]
    scheme: String,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    eps_g: f64,
    /// Bound report: privacy budget ε.
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    v_norm: f64,
}

#[derive(Args)]
struct NoiseAuditArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    eps_rate: f64,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional output file for the audit JSON (stdout regardless).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 5)]
    k_true: usize,
    /// Per-group signal strengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    signals: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    informative_fraction: f64,
    /// Fixes the informative structure independently of --seed.
    #[arg(long)]
    structure_seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional ground-truth importance CSV (feature_index,score).
    #[arg(long)]
    importance_out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::BudgetRejected { .. } | Error::AllLambdasRejected(..) => 3,
        Error::DimensionMismatch { .. } => 4,
        Error::InvalidConfig(..) | Error::Parse { .. } | Error::EmptySplit => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
        Command::NoiseAudit(args) => cmd_noise_audit(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn load_data(path: &PathBuf, format: FormatArg) -> Result<LabeledDataset, Error> {
    match format {
        FormatArg::Csv => load_csv(path),
        FormatArg::Sparse => load_sparse(path),
    }
}

fn load_importance(path: &PathBuf, d: usize) -> Result<ImportanceVector, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut scores = vec![0.0; d];
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let idx_tok = parts.next().unwrap_or_default().trim();
        if i == 0 && idx_tok.parse::<usize>().is_err() {
            continue;
        }
        let idx: usize = idx_tok.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: format!("bad feature index {idx_tok:?}"),
        })?;
        if idx >= d {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: format!("feature index {idx} out of range (d = {d})"),
            });
        }
        scores[idx] = parts
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: "bad score".into(),
            })?;
    }
    ImportanceVector::new(scores)
}

fn fmt_eps(e: f64) -> String {
    if e.is_infinite() {
        "inf".into()
    } else {
        e.to_string()
    }
}

/// ε as a JSON value: a number when finite, the string "inf" otherwise.
fn eps_json(e: f64) -> serde_json::Value {
    if e.is_infinite() {
        serde_json::json!("inf")
    } else {
        serde_json::json!(e)
    }
}

/// The weighted partition used by pst-f-w and pst-h.
fn build_weighted_partition(
    args: &TrainArgs,
    data: &LabeledDataset,
    k: usize,
) -> Result<FeaturePartition, Error> {
    let d = data.dim();
    let base: ImportanceVector = if let Some(path) = &args.importance_file {
        load_importance(path, d)?
    } else if args.pca_importance || args.alpha.is_some() {
        ImportanceVector::new(data.column_variances())?
    } else {
        return Err(Error::InvalidConfig(
            "weighted partitioning needs --importance-file, --alpha or --pca-importance".into(),
        ));
    };
    // rng unused in sorted mode
    let mut rng = derive_rng(args.seed, &["partition".into()]);
    let partition = feature_partition(d, k, PartitionMode::ImportanceSorted, Some(&base), &mut rng)?;
    match args.alpha {
        None => Ok(partition),
        Some(alpha) => {
            // groups sorted by the base scores; weights from α-powers of rank
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| base.0[b].total_cmp(&base.0[a]).then(a.cmp(&b)));
            let ranked = alpha_importance(d, alpha)?;
            let mut scores = vec![0.0; d];
            for (rank, &feat) in order.iter().enumerate() {
                scores[feat] = ranked.0[rank];
            }
            let q = dpstack::partition::importance_weights(
                &ImportanceVector::new(scores)?,
                &partition.groups,
            )?;
            FeaturePartition::new(partition.groups, q)
        }
    }
}

fn echo_config(label: &str, value: serde_json::Value) {
    println!("effective-config {label}: {value}");
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode, Error> {
    let data = load_data(&args.data, args.format)?;
    let n = data.len();
    let budget = PrivacyBudget::new(args.epsilon)?;
    let lambda_high = args.lambda_high.unwrap_or(args.lambda);
    let mut rng = derive_rng(args.seed, &["train".into()]);

    let model = match args.method {
        MethodArg::Plr => {
            let params = plr_params(budget, n, args.lambda)?;
            echo_config(
                "plr",
                serde_json::json!({
                    "method": "plr", "epsilon": eps_json(args.epsilon), "n": n,
                    "d": data.dim(), "lambda": args.lambda,
                    "eps_prime": eps_json(params.eps_prime), "delta": params.delta(),
                    "fallback_branch": params.fallback, "seed": args.seed,
                }),
            );
            let m = train_plr(&data, budget, args.lambda, Regularizer::L2, &mut rng)?;
            println!(
                "trained: solver_iterations={} residual={:.3e}{}",
                m.diagnostics.solver_iterations,
                m.diagnostics.solver_residual,
                if m.diagnostics.warnings.is_empty() {
                    String::new()
                } else {
                    format!(" warnings={:?}", m.diagnostics.warnings)
                }
            );
            AnyModel::Plr(m)
        }
        MethodArg::PstS => {
            let k = args.k.ok_or_else(|| Error::InvalidConfig("--k required for pst-s".into()))?;
            let n_low = (args.low_fraction * n as f64).round() as usize;
            let per_set = (n_low / k.max(1)).max(1);
            let params = plr_params(budget, per_set, args.lambda)?;
            echo_config(
                "pst-s",
                serde_json::json!({
                    "method": "pst-s", "epsilon": eps_json(args.epsilon), "n": n, "k": k,
                    "lambda": args.lambda, "lambda_high": lambda_high,
                    "low_fraction": args.low_fraction,
                    "eps_prime_per_sample_set": eps_json(params.eps_prime),
                    "delta_per_sample_set": params.delta(), "seed": args.seed,
                }),
            );
            let mut opts = PstSOptions::new(k, args.lambda, lambda_high);
            opts.low_fraction = args.low_fraction;
            let m = train_pst_s(&data, budget, &opts, &mut rng)?;
            print_stacked_diagnostics(&m);
            AnyModel::Stacked(m)
        }
        MethodArg::PstFU | MethodArg::PstFW => {
            let k = args.k.ok_or_else(|| Error::InvalidConfig("--k required for pst-f".into()))?;
            let partition = if matches!(args.method, MethodArg::PstFU) {
                feature_partition(data.dim(), k, PartitionMode::UniformRandom, None, &mut rng)?
            } else {
                build_weighted_partition(&args, &data, k)?
            };
            let n_low = (args.low_fraction * n as f64).round() as usize;
            let lambdas = vec![args.lambda; k];
            let params = pstf_params(budget, n_low.max(1), &lambdas, &partition.weights)?;
            echo_config(
                "pst-f",
                serde_json::json!({
                    "method": if matches!(args.method, MethodArg::PstFU) { "pst-f-u" } else { "pst-f-w" },
                    "epsilon": eps_json(args.epsilon), "n": n, "k": k,
                    "q": partition.weights, "lambda": args.lambda, "lambda_high": lambda_high,
                    "eps_prime": eps_json(params.eps_prime), "deltas": params.deltas,
                    "fallback_branch": params.fallback, "seed": args.seed,
                }),
            );
            let mut opts = PstFOptions::new(lambdas, lambda_high);
            opts.low_fraction = args.low_fraction;
            let m = train_pst_f(&data, budget, &partition, &opts, &mut rng)?;
            print_stacked_diagnostics(&m);
            AnyModel::Stacked(m)
        }
        MethodArg::PstH => {
            let k = args.k.ok_or_else(|| Error::InvalidConfig("--k required for pst-h".into()))?;
            let source_path = args
                .source_data
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("--source-data required for pst-h".into()))?;
            let source = load_data(source_path, args.format)?;
            let eps_src = args.eps_src.unwrap_or(args.epsilon);
            let partition = build_weighted_partition(&args, &data, k)?;
            echo_config(
                "pst-h",
                serde_json::json!({
                    "method": "pst-h", "epsilon_target": eps_json(args.epsilon),
                    "epsilon_source": eps_json(eps_src), "n_target": n, "n_source": source.len(),
                    "k": k, "q": partition.weights, "lambda": args.lambda,
                    "lambda_high": lambda_high, "seed": args.seed,
                }),
            );
            let opts = PstHOptions {
                lambda_src: args.lambda,
                lambdas_tgt: vec![args.lambda; k],
                lambda_high,
                low_fraction: args.low_fraction,
            };
            let m = train_pst_h(
                &source,
                &data,
                PrivacyBudget::new(eps_src)?,
                budget,
                &partition,
                &opts,
                &mut rng,
            )?;
            print_stacked_diagnostics(&m.target);
            AnyModel::Transfer(m)
        }
    };

    model_json::save(&model, &args.out)?;
    println!("model written to {}", args.out.display());

    if let Some(test_path) = &args.test_data {
        let test = load_data(test_path, args.format)?;
        let scores = score_model(&model, &test, Combiner::HighLevel)?;
        println!("test-auc: {}", auc(&scores, test.labels())?);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_stacked_diagnostics(m: &dpstack::stacking::StackedModel) {
    for (k, low) in m.low_models.iter().enumerate() {
        println!(
            "low[{k}]: solver_iterations={} residual={:.3e} scale={}",
            low.diagnostics.solver_iterations, low.diagnostics.solver_residual, low.train_scale
        );
    }
    println!(
        "high: solver_iterations={} residual={:.3e}",
        m.high_model.diagnostics.solver_iterations, m.high_model.diagnostics.solver_residual
    );
    for entry in m.budget_ledger() {
        println!(
            "budget: region={} n={} epsilon={}",
            entry.region,
            entry.n_samples,
            fmt_eps(entry.epsilon)
        );
    }
}

fn score_model(
    model: &AnyModel,
    data: &LabeledDataset,
    combiner: Combiner,
) -> Result<Vec<f64>, Error> {
    match model {
        AnyModel::Plr(m) => {
            if combiner != Combiner::HighLevel {
                return Err(Error::InvalidConfig(
                    "combiner requires a stacked model".into(),
                ));
            }
            m.score_all(data)
        }
        AnyModel::Stacked(m) => (0..data.len())
            .map(|i| predict_stacked(m, data.row(i), combiner))
            .collect(),
        AnyModel::Transfer(m) => (0..data.len())
            .map(|i| predict_stacked(&m.target, data.row(i), combiner))
            .collect(),
    }
}

fn cmd_predict(args: PredictArgs) -> Result<ExitCode, Error> {
    let model = model_json::load(&args.model)?;
    let data = load_data(&args.data, args.format)?;
    if data.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.dim(),
        });
    }
    echo_config(
        "predict",
        serde_json::json!({
            "model_kind": model.kind(), "d": model.dim(), "rows": data.len(),
            "combiner": match args.combiner { CombinerArg::Hl => "hl", CombinerArg::Mv => "mv", CombinerArg::Wmv => "wmv" },
        }),
    );
    let scores = score_model(&model, &data, args.combiner.to_combiner())?;
    let mut out = String::with_capacity(scores.len() * 20);
    for s in &scores {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    std::fs::write(&args.out, out)?;
    println!("{} scores written to {}", scores.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, Error> {
    let data = load_data(&args.data, args.format)?;
    echo_config(
        "eval",
        serde_json::json!({
            "data": args.data.display().to_string(), "rows": data.len(),
            "source": if args.scores.is_some() { "scores-file" } else { "model" },
        }),
    );
    let scores = match (&args.scores, &args.model) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            let mut scores = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                scores.push(line.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line: i + 1,
                    msg: "bad score".into(),
                })?);
            }
            scores
        }
        (None, Some(path)) => {
            let model = model_json::load(path)?;
            if data.dim() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    got: data.dim(),
                });
            }
            score_model(&model, &data, args.combiner.to_combiner())?
        }
        _ => {
            return Err(Error::InvalidConfig(
                "eval needs exactly one of --scores or --model".into(),
            ))
        }
    };
    if scores.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: scores.len(),
        });
    }
    println!("auc: {}", auc(&scores, data.labels())?);
    Ok(ExitCode::SUCCESS)
}

fn parse_scheme(s: &str) -> Result<QScheme, Error> {
    if s == "uniform" {
        return Ok(QScheme::Uniform);
    }
    if let Some(alpha) = s.strip_prefix("alpha:") {
        let alpha: f64 = alpha
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad scheme {s:?}")))?;
        return Ok(QScheme::AlphaPower { alpha });
    }
    Err(Error::InvalidConfig(format!(
        "scheme must be \"uniform\" or \"alpha:<x>\", got {s:?}"
    )))
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, Error> {
    std::fs::create_dir_all(&args.out_dir)?;

    if args.bound_report {
        let scheme = parse_scheme(&args.scheme)?;
        echo_config(
            "bound-report",
            serde_json::json!({
                "dims": args.dims, "ks": args.ks, "scheme": args.scheme,
                "delta": args.delta, "eps_g": args.eps_g, "eps": args.eps,
                "v_norm": args.v_norm,
            }),
        );
        let report = bound_report(
            &args.dims,
            &args.ks,
            &[scheme],
            args.v_norm,
            args.eps_g,
            args.eps,
            args.delta,
        )?;
        print!("{}", report.to_table());
        let csv_path = args.out_dir.join("bound-report.csv");
        std::fs::write(&csv_path, report.to_csv())?;
        println!("bound report written to {}", csv_path.display());
        return Ok(ExitCode::SUCCESS);
    }

    let config_path = args.config.as_ref().expect("clap enforces --config");
    let mut cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(config_path)?)?;
    if !args.methods.is_empty() {
        cfg.methods = args
            .methods
            .iter()
            .map(|name| {
                serde_json::from_value(serde_json::Value::String(name.clone()))
                    .map_err(|_| Error::InvalidConfig(format!("unknown method {name:?}")))
            })
            .collect::<Result<_, _>>()?;
    }
    if !args.epsilons.is_empty() {
        cfg.epsilons = args.epsilons.clone();
    }
    if !args.ks_grid.is_empty() {
        cfg.ks = args.ks_grid.clone();
    }
    if !args.alphas.is_empty() {
        cfg.alphas = args.alphas.clone();
    }
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds.clone();
    }
    if !args.lambda_grid.is_empty() {
        cfg.lambda_grid = args.lambda_grid.clone();
    }
    cfg.validate()?;
    echo_config(
        "bench",
        serde_json::json!({
            "config": config_path.display().to_string(),
            "out_dir": args.out_dir.display().to_string(),
            "master_seed": args.seed, "jobs": args.jobs,
            "methods": cfg.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
            "epsilons": cfg.epsilons.iter().map(|e| eps_json(*e)).collect::<Vec<_>>(),
            "ks": cfg.ks, "alphas": cfg.alphas, "seeds": cfg.seeds,
            "lambda_grid": cfg.lambda_grid,
        }),
    );

    use std::io::Write as _;
    let stream_path = args.out_dir.join("results.csv");
    let mut stream = std::fs::File::create(&stream_path)?;
    writeln!(stream, "method,epsilon,k,alpha,seed,lambda,auc")?;
    let result = run_experiment(&cfg, args.seed, args.jobs, |rows| {
        for row in rows {
            let _ = writeln!(
                stream,
                "{},{},{},{},{},{},{}",
                row.method,
                fmt_eps(row.epsilon),
                row.k.map(|k| k.to_string()).unwrap_or_default(),
                row.alpha.map(|a| a.to_string()).unwrap_or_default(),
                row.seed,
                row.lambda,
                row.auc
            );
            let _ = stream.flush();
        }
    })?;

    for failure in &result.failures {
        eprintln!(
            "cell failed: method={} epsilon={} seed={}: {}",
            failure.method,
            fmt_eps(failure.epsilon),
            failure.seed,
            failure.error
        );
    }
    if result.rows.is_empty() {
        eprintln!("error: every sweep cell failed");
        return Ok(ExitCode::from(5));
    }

    // rewrite canonical results (identical content to the stream unless
    // cells failed mid-write) plus summary and plot data
    std::fs::write(&stream_path, result.to_results_csv())?;
    std::fs::write(args.out_dir.join("summary.json"), result.to_summary_json()?)?;
    if cfg.epsilons.len() > 1 {
        std::fs::write(args.out_dir.join("plot_eps.csv"), result.plot_csv(SweepAxis::Epsilon))?;
    }
    if cfg.ks.len() > 1 {
        std::fs::write(args.out_dir.join("plot_k.csv"), result.plot_csv(SweepAxis::K))?;
    }
    if !cfg.alphas.is_empty() {
        std::fs::write(args.out_dir.join("plot_alpha.csv"), result.plot_csv(SweepAxis::Alpha))?;
    }
    println!(
        "sweep complete: {} rows, {} failures, outputs in {}",
        result.rows.len(),
        result.failures.len(),
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_noise_audit(args: NoiseAuditArgs) -> Result<ExitCode, Error> {
    if args.d == 0 || args.eps_rate <= 0.0 || args.draws == 0 {
        return Err(Error::InvalidConfig(
            "noise-audit needs d ≥ 1, eps-rate > 0, draws ≥ 1".into(),
        ));
    }
    echo_config(
        "noise-audit",
        serde_json::json!({
            "d": args.d, "eps_rate": args.eps_rate, "draws": args.draws, "seed": args.seed,
        }),
    );
    let mut rng = derive_rng(args.seed, &["noise-audit".into()]);
    let audit = noise_audit(args.d, args.eps_rate, args.draws, &mut rng);
    let text = serde_json::to_string_pretty(&audit)?;
    println!("{text}");
    if let Some(path) = &args.out {
        std::fs::write(path, &text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(args: SynthArgs) -> Result<ExitCode, Error> {
    let signals = if args.signals.is_empty() {
        vec![1.0; args.k_true]
    } else {
        args.signals.clone()
    };
    let spec = SynthSpec {
        n: args.n,
        d: args.d,
        k_true: args.k_true,
        informative_fraction: args.informative_fraction,
        noise_level: args.noise,
        group_signals: signals,
        structure_seed: args.structure_seed,
    };
    echo_config("synth", serde_json::to_value(&spec)?);
    let mut rng = derive_rng(args.seed, &["synth".into()]);
    let out = synth_generate(&spec, &mut rng)?;
    save_csv(&out.dataset, &args.out)?;
    println!("{} rows written to {}", out.dataset.len(), args.out.display());
    if let Some(path) = &args.importance_out {
        let mut text = String::from("feature_index,score\n");
        for (i, v) in out.importance.iter().enumerate() {
            text.push_str(&format!("{i},{v}\n"));
        }
        std::fs::write(path, text)?;
        println!("ground-truth importance written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
