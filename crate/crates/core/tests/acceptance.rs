//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria 7–10 run the packaged benchmark configs end to end at desk
//! scale; the optional real-data smoke (criterion 11) skips cleanly unless
//! the fetch script has produced the dataset.

use std::time::Instant;

use rand::Rng;

use dpstack::bench::{
    auc, compare_methods, run_experiment, ExperimentConfig, ExperimentResult,
};
use dpstack::bounds::{bound_report, QScheme};
use dpstack::data::{
    load_csv, pca_reduce, scale_to_ball, split_disjoint, train_valid_test_split, LabeledDataset,
};
use dpstack::mechanism::{
    noise_audit, plr_params, pstf_params, recover_noise, sample_noise, PrivacyBudget,
};
use dpstack::numerics::{minimize, Objective, Regularizer, DEFAULT_TOL};
use dpstack::partition::FeaturePartition;
use dpstack::plr::{train_plr, train_plr_with_noise};
use dpstack::seeding::rng_from_seed;
use dpstack::stacking::{train_pst_f_presplit, PstFOptions};

fn pass(criterion: u32, name: &str, detail: String, started: Instant, budget_secs: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("criterion {criterion:2} ({name}): PASS — {detail} [{elapsed:.1}s]");
    assert!(
        elapsed < budget_secs,
        "criterion {criterion} exceeded its {budget_secs}s runtime budget: {elapsed:.1}s"
    );
}

// ---------------------------------------------------------------- criterion 1

mod fixture {
    use serde::Deserialize;

    #[derive(Deserialize)]
    pub struct Fixture {
        pub plr: Vec<PlrCase>,
        pub pstf: Vec<PstfCase>,
    }

    #[derive(Deserialize)]
    pub struct PlrCase {
        pub eps: f64,
        pub n: usize,
        pub lambda: f64,
        pub expected: PlrExpected,
    }

    #[derive(Deserialize)]
    pub struct PlrExpected {
        pub eps_prime: f64,
        pub delta: f64,
        pub fallback: bool,
        #[serde(default)]
        pub rejected: bool,
    }

    #[derive(Deserialize)]
    pub struct PstfCase {
        pub eps: f64,
        pub n: usize,
        pub lambdas: Vec<f64>,
        pub qs: Vec<f64>,
        pub expected: PstfExpected,
    }

    #[derive(Deserialize)]
    pub struct PstfExpected {
        pub eps_prime: f64,
        pub deltas: Vec<f64>,
        pub fallback: bool,
        #[serde(default)]
        pub rejected: bool,
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

#[test]
fn criterion_01_budget_arithmetic_oracle() {
    let started = Instant::now();
    let text = include_str!("fixtures/budget_oracle.json");
    let fixture: fixture::Fixture = serde_json::from_str(text).expect("fixture parses");
    assert_eq!(fixture.plr.len() + fixture.pstf.len(), 1000);

    let mut fallbacks = 0;
    for (i, case) in fixture.plr.iter().enumerate() {
        let budget = PrivacyBudget::new(case.eps).unwrap();
        let params = plr_params(budget, case.n, case.lambda)
            .unwrap_or_else(|e| panic!("plr case {i} unexpectedly rejected: {e}"));
        assert!(!case.expected.rejected, "plr case {i}: oracle says rejected");
        assert_eq!(params.fallback, case.expected.fallback, "plr case {i} branch");
        assert!(
            rel_err(params.eps_prime, case.expected.eps_prime) <= 1e-12,
            "plr case {i} eps': {} vs oracle {}",
            params.eps_prime,
            case.expected.eps_prime
        );
        if case.expected.fallback {
            fallbacks += 1;
            assert!(
                rel_err(params.delta(), case.expected.delta) <= 1e-12,
                "plr case {i} delta: {} vs oracle {}",
                params.delta(),
                case.expected.delta
            );
        } else {
            assert_eq!(params.delta(), 0.0);
        }
    }

    let mut rejections = 0;
    for (i, case) in fixture.pstf.iter().enumerate() {
        let budget = PrivacyBudget::new(case.eps).unwrap();
        let outcome = pstf_params(budget, case.n, &case.lambdas, &case.qs);
        if case.expected.rejected {
            rejections += 1;
            assert!(
                matches!(outcome, Err(dpstack::Error::BudgetRejected { .. })),
                "pstf case {i}: oracle says rejected, implementation accepted"
            );
            continue;
        }
        let params = outcome.unwrap_or_else(|e| panic!("pstf case {i} rejected: {e}"));
        assert_eq!(params.fallback, case.expected.fallback, "pstf case {i} branch");
        assert!(
            rel_err(params.eps_prime, case.expected.eps_prime) <= 1e-12,
            "pstf case {i} eps'"
        );
        if case.expected.fallback {
            fallbacks += 1;
            for (k, (&got, &want)) in
                params.deltas.iter().zip(&case.expected.deltas).enumerate()
            {
                assert!(rel_err(got, want) <= 1e-12, "pstf case {i} delta_{k}");
            }
        }
    }

    pass(
        1,
        "budget arithmetic",
        format!(
            "1000 configurations at ≤1e-12 relative error ({fallbacks} fallback, {rejections} rejected)"
        ),
        started,
        5.0,
    );
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_02_noise_mechanism_distribution() {
    let started = Instant::now();
    let mut rng = rng_from_seed(0xD01);
    let mut worst_ks_margin = f64::MAX;
    for d in [1usize, 10, 100] {
        for eps_rate in [0.5, 1.0, 2.0] {
            let audit = noise_audit(d, eps_rate, 10_000, &mut rng);
            assert!(
                audit.pass,
                "KS failed at d={d} eps'={eps_rate}: {} ≥ {}",
                audit.ks_stat, audit.ks_critical_1pct
            );
            worst_ks_margin = worst_ks_margin.min(audit.ks_critical_1pct - audit.ks_stat);
            // mean within 3 standard errors: std of ‖b‖ is sqrt(d)·scale
            let se = (d as f64).sqrt() * (2.0 / eps_rate) / (10_000f64).sqrt();
            assert!(
                (audit.mean_norm - audit.expected_norm).abs() < 3.0 * se,
                "mean norm off at d={d} eps'={eps_rate}: {} vs {}",
                audit.mean_norm,
                audit.expected_norm
            );
        }
    }
    pass(
        2,
        "noise mechanism",
        format!("9 (d, eps') audits, worst KS margin {worst_ks_margin:.4}"),
        started,
        60.0,
    );
}

// ---------------------------------------------------------------- criterion 3

fn random_dataset(rng: &mut impl Rng, n: usize, d: usize, radius: f64) -> LabeledDataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
            let target = rng.random::<f64>() * radius;
            raw.into_iter().map(|x| x * target / norm).collect()
        })
        .collect();
    let mut labels: Vec<f64> = (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    labels[0] = 1.0;
    if n > 1 {
        labels[1] = -1.0;
    }
    LabeledDataset::from_rows(rows, labels).unwrap()
}

#[test]
fn criterion_03_solver_and_gradient() {
    let started = Instant::now();
    let mut rng = rng_from_seed(0xD03);
    let mut worst_fd = 0.0f64;
    let mut worst_residual = 0.0f64;
    for trial in 0..100 {
        let n = rng.random_range(3..40);
        let d = rng.random_range(1..8);
        let data = random_dataset(&mut rng, n, d, 1.0);
        let noise: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let lambda = 10f64.powf(rng.random::<f64>() * 4.0 - 3.0);
        let quad = if trial % 3 == 0 { rng.random::<f64>() * 0.5 } else { 0.0 };
        let reg = if trial % 2 == 0 {
            Regularizer::L2
        } else {
            Regularizer::OffsetL2((0..d).map(|_| rng.random::<f64>() - 0.5).collect())
        };
        let objective = Objective::new(&data, &noise, quad, lambda, reg).unwrap();

        // gradient vs central differences at a random point
        let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let (_, grad) = objective.eval(&w).unwrap();
        let h = 1e-6;
        for j in 0..d {
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let fd = (objective.eval(&wp).unwrap().0 - objective.eval(&wm).unwrap().0) / (2.0 * h);
            let err = (grad[j] - fd).abs() / grad[j].abs().max(1.0);
            worst_fd = worst_fd.max(err);
            assert!(err <= 1e-5, "trial {trial} coord {j}: fd err {err}");
        }

        // stationarity at the default tolerance
        let w0 = objective.reg.minimizer(d);
        let solution = minimize(&objective, &w0, DEFAULT_TOL).unwrap();
        let (_, g) = objective.eval(&solution.w).unwrap();
        let res: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst_residual = worst_residual.max(res);
        assert!(res <= DEFAULT_TOL * (1.0 + 1e-9), "trial {trial}: residual {res}");
    }
    pass(
        3,
        "solver + gradient",
        format!("100 objectives, worst fd err {worst_fd:.2e}, worst residual {worst_residual:.2e}"),
        started,
        60.0,
    );
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn criterion_04_noise_recovery_identity() {
    let started = Instant::now();
    let mut rng = rng_from_seed(0xD04);

    // neighboring-dataset bound over 1000 pairs
    let mut worst_slack = f64::MAX;
    for _ in 0..1000 {
        let n = rng.random_range(2..15);
        let d = rng.random_range(1..6);
        let q = rng.random::<f64>() * 2.0 + 0.05;
        let data = random_dataset(&mut rng, n, d, q);
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| data.row(i).to_vec()).collect();
        let mut labels = data.labels().to_vec();
        let replacement = random_dataset(&mut rng, 1, d, q);
        rows[n - 1] = replacement.row(0).to_vec();
        labels[n - 1] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let neighbor = LabeledDataset::from_rows(rows, labels).unwrap();

        let w_bar: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let lambda = 10f64.powf(rng.random::<f64>() * 2.0 - 1.5);
        let quad = rng.random::<f64>() * 0.3;
        let b = recover_noise(&w_bar, &data, lambda, quad, &Regularizer::L2).unwrap();
        let b2 = recover_noise(&w_bar, &neighbor, lambda, quad, &Regularizer::L2).unwrap();
        let diff: f64 = b.iter().zip(&b2).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
        assert!(
            diff <= 2.0 * q + 1e-9,
            "neighboring bound violated: ‖b−b′‖ = {diff} > 2q = {}",
            2.0 * q
        );
        worst_slack = worst_slack.min(2.0 * q + 1e-9 - diff);
    }

    // recover ∘ minimize is the identity on b, 100 instances
    let mut worst_round_trip = 0.0f64;
    for trial in 0..100 {
        let n = rng.random_range(3..25);
        let d = rng.random_range(1..6);
        let data = random_dataset(&mut rng, n, d, 1.0);
        let b_true: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let lambda = 10f64.powf(rng.random::<f64>() * 2.0 - 1.5);
        let quad = if trial % 2 == 0 { 0.25 } else { 0.0 };
        let objective = Objective::new(&data, &b_true, quad, lambda, Regularizer::L2).unwrap();
        let solution = minimize(&objective, &vec![0.0; d], DEFAULT_TOL).unwrap();
        let b_rec = recover_noise(&solution.w, &data, lambda, quad, &Regularizer::L2).unwrap();
        for (r, t) in b_rec.iter().zip(&b_true) {
            worst_round_trip = worst_round_trip.max((r - t).abs());
            assert!((r - t).abs() <= 1e-6, "trial {trial}: {r} vs {t}");
        }
    }

    pass(
        4,
        "noise recovery",
        format!("1000 neighbor pairs in bound, 100 round-trips worst |Δb| {worst_round_trip:.2e}"),
        started,
        60.0,
    );
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn criterion_05_single_group_reduction() {
    let started = Instant::now();
    let mut rng = rng_from_seed(0xD05);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let n = rng.random_range(30..120);
        let d = rng.random_range(2..9);
        let data = random_dataset(&mut rng, n, d, 1.5);
        let budget = PrivacyBudget::new(0.5 + rng.random::<f64>() * 2.0).unwrap();
        let lambda = 10f64.powf(rng.random::<f64>() * 2.0 - 2.0);

        let mut split_rng = rng_from_seed(1000 + trial);
        let (d_low, d_high) = split_disjoint(&data, 0.5, &mut split_rng).unwrap();

        let noise = sample_noise(d, 0.7, &mut rng);
        let partition = FeaturePartition::new(vec![(0..d).collect()], vec![1.0]).unwrap();
        let opts = PstFOptions::uniform(1, lambda);
        let stacked = train_pst_f_presplit(
            &d_low,
            &d_high,
            budget,
            &partition,
            &opts,
            &mut rng_from_seed(2000 + trial),
            Some(std::slice::from_ref(&noise)),
        )
        .unwrap();
        let plain = train_plr_with_noise(&d_low, budget, lambda, Regularizer::L2, &noise).unwrap();

        for (a, b) in stacked.low_models[0].weights.iter().zip(&plain.weights) {
            worst = worst.max((a - b).abs());
            assert!(
                (a - b).abs() <= 1e-8,
                "trial {trial}: low-level weight {a} vs plr weight {b}"
            );
        }
    }
    pass(
        5,
        "K=1 reduction",
        format!("20 datasets, worst ‖Δw‖∞ {worst:.2e}"),
        started,
        60.0,
    );
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_06_auc_oracle() {
    let started = Instant::now();

    let hand = auc(&[0.9, 0.8, 0.4, 0.3], &[1.0, -1.0, 1.0, -1.0]).unwrap();
    assert_eq!(hand, 0.75, "hand example must be exact");

    let brute = |scores: &[f64], labels: &[f64]| -> f64 {
        let mut concordant = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if labels[i] <= 0.0 {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] > 0.0 {
                    continue;
                }
                pairs += 1.0;
                concordant += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
        concordant / pairs
    };

    let mut rng = rng_from_seed(0xD06);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random::<f64>() * 25.0).round() / 25.0)
            .collect();
        let mut labels: Vec<f64> = (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        labels[0] = 1.0;
        if n > 1 {
            labels[1] = -1.0;
        }
        let fast = auc(&scores, &labels).unwrap();
        let slow = brute(&scores, &labels);
        worst = worst.max((fast - slow).abs());
        assert!((fast - slow).abs() <= 1e-12);
    }
    pass(
        6,
        "AUC oracle",
        format!("100 instances, worst |Δ| {worst:.2e}; hand example exact"),
        started,
        60.0,
    );
}

// ------------------------------------------------------------- criteria 7–10

fn packaged_config(name: &str) -> ExperimentConfig {
    let path = format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {path}: {e}"));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("bad config {path}: {e}"))
}

fn mean_auc(result: &ExperimentResult, method: &str, epsilon: f64) -> f64 {
    result
        .summary
        .iter()
        .find(|c| c.method == method && c.epsilon.to_bits() == epsilon.to_bits())
        .unwrap_or_else(|| panic!("missing summary cell {method} eps={epsilon}"))
        .mean_auc
}

#[test]
fn criterion_07_eps_sweep_ordering() {
    let started = Instant::now();
    let cfg = packaged_config("synthetic-eps-sweep.json");
    let result = run_experiment(&cfg, 0, 0, |_| {}).unwrap();
    assert!(result.failures.is_empty(), "cells failed: {:?}", result.failures);

    let w1 = mean_auc(&result, "pst-f-w", 1.0);
    let u1 = mean_auc(&result, "pst-f-u", 1.0);
    let p1 = mean_auc(&result, "plr", 1.0);
    assert!(w1 > u1, "pst-f-w ({w1:.4}) must beat pst-f-u ({u1:.4}) at eps=1");
    assert!(w1 > p1, "pst-f-w ({w1:.4}) must beat plr ({p1:.4}) at eps=1");

    let test = compare_methods(&result, "pst-f-w", "plr", 1.0).unwrap();
    assert!(test.mean_diff > 0.0);
    assert!(
        test.p_value < 0.05,
        "paired test pst-f-w vs plr at eps=1: p = {}",
        test.p_value
    );

    // non-decreasing in eps with at most one adjacent inversion per method
    let eps_grid = [0.1, 1.0, 10.0, f64::INFINITY];
    for method in ["plr", "pst-s", "pst-f-u", "pst-f-w"] {
        let means: Vec<f64> = eps_grid.iter().map(|&e| mean_auc(&result, method, e)).collect();
        let inversions = means.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(
            inversions <= 1,
            "{method} mean AUC not monotone in eps: {means:?}"
        );
    }

    pass(
        7,
        "eps-sweep ordering",
        format!(
            "at eps=1: pst-f-w {w1:.3} > pst-f-u {u1:.3}, > plr {p1:.3} (p = {:.1e})",
            test.p_value
        ),
        started,
        600.0,
    );
}

#[test]
fn criterion_08_alpha_sweep_shape() {
    let started = Instant::now();
    let cfg = packaged_config("alpha-sweep.json");
    let result = run_experiment(&cfg, 0, 0, |_| {}).unwrap();
    assert!(result.failures.is_empty(), "cells failed: {:?}", result.failures);

    let alpha_mean = |alpha: f64| -> f64 {
        result
            .summary
            .iter()
            .find(|c| {
                c.method == "pst-f-w" && c.alpha.map(f64::to_bits) == Some(alpha.to_bits())
            })
            .unwrap_or_else(|| panic!("missing alpha cell {alpha}"))
            .mean_auc
    };
    let best_small = alpha_mean(0.25).max(alpha_mean(0.5));
    let inverted = alpha_mean(4.0);
    assert!(
        best_small > inverted,
        "importance-aligned weighting ({best_small:.4}) must beat inverted ({inverted:.4})"
    );
    pass(
        8,
        "alpha-sweep shape",
        format!("best alpha<1 mean {best_small:.3} > alpha=4 mean {inverted:.3}"),
        started,
        600.0,
    );
}

#[test]
fn criterion_09_combiner_ordering() {
    let started = Instant::now();
    let cfg = packaged_config("combiner-comparison.json");
    let result = run_experiment(&cfg, 0, 0, |_| {}).unwrap();
    assert!(result.failures.is_empty(), "cells failed: {:?}", result.failures);

    for method in ["pst-f-u", "pst-f-w"] {
        let hl = mean_auc(&result, method, 1.0);
        let mv = mean_auc(&result, &format!("{method}[c-mv]"), 1.0);
        let wmv = mean_auc(&result, &format!("{method}[c-wmv]"), 1.0);
        assert!(
            hl >= mv - 0.005,
            "{method}: C-hl ({hl:.4}) must not trail C-mv ({mv:.4})"
        );
        assert!(
            hl >= wmv - 0.005,
            "{method}: C-hl ({hl:.4}) must not trail C-wmv ({wmv:.4})"
        );
    }
    pass(9, "combiner ordering", "C-hl ≥ C-mv, C-wmv for both layouts".into(), started, 600.0);
}

#[test]
fn criterion_10_transfer_ordering() {
    let started = Instant::now();
    let cfg = packaged_config("transfer-benchmark.json");
    let result = run_experiment(&cfg, 0, 0, |_| {}).unwrap();
    assert!(result.failures.is_empty(), "cells failed: {:?}", result.failures);

    let h = mean_auc(&result, "pst-h", 1.0);
    let p = mean_auc(&result, "plr", 1.0);
    assert!(h > p, "pst-h ({h:.4}) must beat plr on the target alone ({p:.4})");
    let test = compare_methods(&result, "pst-h", "plr", 1.0).unwrap();
    assert!(test.mean_diff > 0.0);
    assert!(test.p_value < 0.05, "paired p = {}", test.p_value);
    pass(
        10,
        "transfer ordering",
        format!("pst-h {h:.3} > plr {p:.3} (p = {:.1e})", test.p_value),
        started,
        600.0,
    );
}

// --------------------------------------------------------------- criterion 11

#[test]
fn criterion_11_real_data_smoke() {
    let started = Instant::now();
    let dir = std::env::var("DPSTACK_MNIST_DIR").unwrap_or_else(|_| {
        format!("{}/../../data/mnist", env!("CARGO_MANIFEST_DIR"))
    });
    let path = format!("{dir}/mnist_0v8.csv");
    if !std::path::Path::new(&path).exists() {
        println!(
            "criterion 11 (real-data smoke): SKIP — {path} not found; run scripts/fetch_mnist.py first"
        );
        return;
    }
    let data = load_csv(&path).unwrap();
    let (reduced, _) = pca_reduce(&data, 100).unwrap();

    let mut split_rng = rng_from_seed(0xD11);
    let (train, _, test) =
        train_valid_test_split(&reduced, (0.6, 0.0, 0.4), &mut split_rng).unwrap();

    // noiseless reference fit must be clearly separable
    let noiseless = train_plr(
        &train,
        PrivacyBudget::new(f64::INFINITY).unwrap(),
        1e-3,
        Regularizer::L2,
        &mut rng_from_seed(1),
    )
    .unwrap();
    let scores: Vec<f64> = (0..test.len())
        .map(|i| dpstack::plr::predict_linear(&noiseless, test.row(i)).unwrap())
        .collect();
    let clean_auc = auc(&scores, test.labels()).unwrap();
    assert!(clean_auc >= 0.95, "noiseless AUC {clean_auc:.4} < 0.95");

    // private fit at eps = 1 averaged over 10 seeds
    let mut total = 0.0;
    for seed in 0..10u64 {
        let model = train_plr(
            &train,
            PrivacyBudget::new(1.0).unwrap(),
            1e-3,
            Regularizer::L2,
            &mut rng_from_seed(100 + seed),
        )
        .unwrap();
        let scores: Vec<f64> = (0..test.len())
            .map(|i| dpstack::plr::predict_linear(&model, test.row(i)).unwrap())
            .collect();
        total += auc(&scores, test.labels()).unwrap();
    }
    let private_auc = total / 10.0;
    assert!(private_auc >= 0.80, "eps=1 mean AUC {private_auc:.4} < 0.80");

    pass(
        11,
        "real-data smoke",
        format!("noiseless {clean_auc:.4}, eps=1 mean {private_auc:.4}"),
        started,
        600.0,
    );
}

// --------------------------------------------------------------- criterion 12

#[test]
fn criterion_12_bound_report_ratios() {
    let started = Instant::now();
    let report = bound_report(&[100], &[1, 5], &[QScheme::Uniform], 1.0, 0.1, 1.0, 0.05).unwrap();

    let k1 = report.rows.iter().find(|r| r.k == 1).unwrap();
    assert!((k1.middle_ratio - 1.0).abs() <= 1e-12, "K=1 ratio {}", k1.middle_ratio);

    let k5 = report.rows.iter().find(|r| r.k == 5).unwrap();
    let want = (100.0f64 / (5.0 * 0.05)).ln() / (100.0f64 / 0.05).ln();
    assert!(
        (k5.middle_ratio - want).abs() <= 1e-12,
        "K=5 middle ratio {} vs log ratio {want}",
        k5.middle_ratio
    );
    assert!((want - 0.788_256_996_981_505_6).abs() < 1e-12);

    pass(
        12,
        "bound-report ratios",
        format!("K=1 ratio 1 exactly, K=5 ratio {:.6} = log(d/(Kδ))/log(d/δ)", k5.middle_ratio),
        started,
        60.0,
    );
}

// ------------------------------------------------------- scaling sanity extra

#[test]
fn scale_to_ball_contract_holds_on_training_paths() {
    // every training call derives its scale through this contract
    let mut rng = rng_from_seed(0xD99);
    let data = random_dataset(&mut rng, 50, 4, 3.0);
    let (scaled, s) = scale_to_ball(&data, 1.0).unwrap();
    assert!(s >= 1.0);
    assert!(scaled.max_norm() <= 1.0 + 1e-12);
}
