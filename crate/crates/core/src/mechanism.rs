//! The privacy mechanism: budget arithmetic, the noise-vector sampler, the
//! stationarity-based noise recovery oracle, and sample-complexity bound
//! terms.
//!
//! Budget arithmetic has two branches. The first spends part of ε on the
//! curvature the data term can contribute and draws noise at rate
//! ε′ = ε − Σ_k log(1 + q_k²/(2nλ_k) + q_k⁴/(16n²λ_k²)); if that leaves
//! nothing (ε′ ≤ 0), the fallback adds a quadratic term Δ_k to buy the
//! curvature explicitly and draws noise at rate ε/2. A configuration whose
//! fallback Δ_k would be negative is rejected: λ is too large for this ε.
//!
//! Noise is drawn from the density h(b) ∝ exp(−ε′‖b‖/2): direction uniform
//! on the sphere, norm from Gamma(d, 2/ε′), so E‖b‖ = 2d/ε′.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::{loss_bundle, Margin, Regularizer};
use crate::stats;

/// A privacy budget ε > 0. ε = ∞ is allowed and yields zero noise (the
/// non-private limit used by benchmark sweeps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 {
            Ok(Self { epsilon })
        } else {
            Err(Error::InvalidConfig(format!(
                "privacy budget must be > 0, got {epsilon}"
            )))
        }
    }
}

/// The (ε′, Δ_k) bundle produced by budget arithmetic. Exactly one branch
/// produced the values; `fallback` records which.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    /// Rate of the noise density (ε′ in the first branch, ε/2 in the
    /// fallback). Shared by every group.
    pub eps_prime: f64,
    /// Added quadratic coefficient per group (a single entry for the
    /// unpartitioned case). Zero-importance groups always get 0.
    pub deltas: Vec<f64>,
    /// True iff the fallback branch (ε′ ≤ 0 in the first branch) fired.
    pub fallback: bool,
}

impl PerturbationParams {
    /// The single Δ of an unpartitioned training run.
    pub fn delta(&self) -> f64 {
        self.deltas[0]
    }
}

/// Budget arithmetic for a single unpartitioned training run.
pub fn plr_params(budget: PrivacyBudget, n: usize, lambda: f64) -> Result<PerturbationParams> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be ≥ 1".into()));
    }
    if lambda <= 0.0 {
        return Err(Error::InvalidConfig(format!("lambda must be > 0, got {lambda}")));
    }
    let eps = budget.epsilon;
    let nf = n as f64;
    // ln_1p/exp_m1 keep the arithmetic accurate when the arguments are tiny
    let eps_prime =
        eps - (1.0 / (2.0 * nf * lambda) + 1.0 / (16.0 * nf * nf * lambda * lambda)).ln_1p();
    if eps_prime > 0.0 {
        Ok(PerturbationParams {
            eps_prime,
            deltas: vec![0.0],
            fallback: false,
        })
    } else {
        let delta = 1.0 / (4.0 * nf * (eps / 4.0).exp_m1()) - lambda;
        if delta < 0.0 {
            return Err(Error::BudgetRejected {
                reason: format!(
                    "fallback delta = {delta:.6e} < 0: lambda = {lambda} too large for epsilon = {eps} at n = {n}"
                ),
            });
        }
        Ok(PerturbationParams {
            eps_prime: eps / 2.0,
            deltas: vec![delta],
            fallback: true,
        })
    }
}

/// Budget arithmetic for feature-partitioned training with importance
/// weights q (Σq = 1, q ≥ 0). Zero-importance groups contribute nothing to
/// the budget sum, are skipped by the noise sampler, and always get Δ_k = 0.
pub fn pstf_params(
    budget: PrivacyBudget,
    n: usize,
    lambdas: &[f64],
    weights: &[f64],
) -> Result<PerturbationParams> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be ≥ 1".into()));
    }
    if lambdas.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: lambdas.len(),
        });
    }
    if lambdas.iter().any(|l| *l <= 0.0) {
        return Err(Error::InvalidConfig("all lambdas must be > 0".into()));
    }
    if weights.iter().any(|q| *q < 0.0) {
        return Err(Error::InvalidConfig("importance weights must be ≥ 0".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "importance weights must sum to 1, got {total}"
        )));
    }

    let eps = budget.epsilon;
    let nf = n as f64;
    let mut log_sum = 0.0;
    for (&q, &lam) in weights.iter().zip(lambdas) {
        if q == 0.0 {
            continue;
        }
        let q2 = q * q;
        log_sum += (q2 / (2.0 * nf * lam) + q2 * q2 / (16.0 * nf * nf * lam * lam)).ln_1p();
    }
    let eps_prime = eps - log_sum;

    if eps_prime > 0.0 {
        Ok(PerturbationParams {
            eps_prime,
            deltas: vec![0.0; weights.len()],
            fallback: false,
        })
    } else {
        let mut deltas = Vec::with_capacity(weights.len());
        for (k, (&q, &lam)) in weights.iter().zip(lambdas).enumerate() {
            if q == 0.0 {
                deltas.push(0.0);
                continue;
            }
            let delta = q * q / (4.0 * nf * (eps * q / 4.0).exp_m1()) - lam;
            if delta < 0.0 {
                return Err(Error::BudgetRejected {
                    reason: format!(
                        "fallback delta_{k} = {delta:.6e} < 0: lambda_{k} = {lam} too large for epsilon = {eps}, q_{k} = {q}, n = {n}"
                    ),
                });
            }
            deltas.push(delta);
        }
        Ok(PerturbationParams {
            eps_prime: eps / 2.0,
            deltas,
            fallback: true,
        })
    }
}

/// Draws b from h(b) ∝ exp(−eps_rate·‖b‖/2): norm as a sum of d
/// exponentials (Gamma(d, 2/eps_rate), exact and rejection-free), direction
/// as a normalized isotropic Gaussian.
pub fn sample_noise(d: usize, eps_rate: f64, rng: &mut impl Rng) -> Vec<f64> {
    assert!(d >= 1, "noise dimension must be ≥ 1");
    assert!(eps_rate > 0.0, "noise rate must be > 0");
    let scale = 2.0 / eps_rate;
    let mut norm = 0.0;
    for _ in 0..d {
        let u: f64 = rng.random();
        norm -= scale * (1.0 - u).ln();
    }
    loop {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let dn: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if dn > 1e-12 {
            return dir.into_iter().map(|x| x * norm / dn).collect();
        }
    }
}

/// Recovers the unique noise vector for which `w_bar` is the stationary
/// point of the perturbed objective:
/// b = −nλ∇g(w̄) − Σ_i y_i ℓ′(y_i x_iᵀ w̄) x_i − nΔ w̄.
pub fn recover_noise(
    w_bar: &[f64],
    data: &LabeledDataset,
    lambda: f64,
    quad: f64,
    reg: &Regularizer,
) -> Result<Vec<f64>> {
    let d = data.dim();
    if w_bar.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: w_bar.len() });
    }
    let n = data.len() as f64;
    let mut b = vec![0.0; d];
    reg.add_gradient(w_bar, -n * lambda, &mut b);
    for (row, y) in data.iter_rows() {
        let margin = y * crate::numerics::dot(w_bar, row);
        let coef = -y * loss_bundle(Margin(margin)).d1;
        for (bj, xj) in b.iter_mut().zip(row) {
            *bj += coef * xj;
        }
    }
    for (bj, wj) in b.iter_mut().zip(w_bar) {
        *bj -= n * quad * wj;
    }
    Ok(b)
}

/// Which sample-complexity bound to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// Single-model bound: terms in (‖v‖, d, ε_g, ε, δ).
    Unpartitioned,
    /// Per-group bound for feature-partitioned training, with a_k = q_k‖v_k‖.
    FeaturePartitioned,
}

/// How ‖v_k‖ relates to the reference norm ‖v‖ in the partitioned bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceScaling {
    /// a_k = q_k‖v‖ — the reference model is left as-is.
    Raw,
    /// a_k = ‖v‖ — the reference model is rescaled by 1/q_k to keep the
    /// comparison target fixed when features are shrunk into the q_k-ball.
    Adjusted,
}

/// Inputs shared by the sample-complexity bound terms. `big_k` and `q_k`
/// are ignored by the unpartitioned bound.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    /// Reference model norm ‖v‖.
    pub v_norm: f64,
    pub d: usize,
    pub big_k: usize,
    pub q_k: f64,
    /// Excess-risk target.
    pub eps_g: f64,
    /// Privacy budget.
    pub eps: f64,
    /// Failure probability.
    pub delta: f64,
}

/// The three max-arguments of a sample-complexity bound, with the unknown
/// leading constant normalized to 1 (relative comparison only).
pub fn bound_terms(kind: BoundKind, inputs: BoundInputs, scaling: ReferenceScaling) -> [f64; 3] {
    let BoundInputs { v_norm, d, big_k, q_k, eps_g, eps, delta } = inputs;
    assert!(v_norm > 0.0 && eps_g > 0.0 && eps > 0.0);
    assert!(delta > 0.0 && delta < 1.0 && eps_g < 1.0);
    let df = d as f64;
    match kind {
        BoundKind::Unpartitioned => [
            v_norm * v_norm * (1.0 / delta).ln() / (eps_g * eps_g),
            df * (df / delta).ln() * v_norm / (eps_g * eps),
            v_norm * v_norm / (eps_g * eps),
        ],
        BoundKind::FeaturePartitioned => {
            assert!(big_k >= 1 && q_k > 0.0);
            let kf = big_k as f64;
            let a_k = match scaling {
                ReferenceScaling::Raw => q_k * v_norm,
                ReferenceScaling::Adjusted => v_norm,
            };
            [
                a_k * a_k * (1.0 / delta).ln() / (eps_g * eps_g),
                df * (df / (kf * delta)).ln() * a_k / (q_k * kf * eps_g * eps),
                a_k * a_k / (eps_g * eps),
            ]
        }
    }
}

/// Statistical audit of the noise sampler, serialized as JSON by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseAudit {
    pub d: usize,
    pub eps_rate: f64,
    pub n_draws: usize,
    pub mean_norm: f64,
    pub expected_norm: f64,
    pub ks_stat: f64,
    pub ks_critical_1pct: f64,
    pub pass: bool,
}

/// Draws `n_draws` noise vectors and compares the empirical norm law against
/// Gamma(d, 2/eps_rate) with a KS test at the 1% level.
pub fn noise_audit(d: usize, eps_rate: f64, n_draws: usize, rng: &mut impl Rng) -> NoiseAudit {
    let scale = 2.0 / eps_rate;
    let norms: Vec<f64> = (0..n_draws)
        .map(|_| {
            let b = sample_noise(d, eps_rate, rng);
            b.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .collect();
    let mean_norm = stats::mean(&norms);
    let expected_norm = 2.0 * d as f64 / eps_rate;
    let ks_stat = stats::ks_statistic(&norms, |x| stats::gamma_cdf(x, d as f64, scale));
    let ks_critical_1pct = stats::ks_critical(0.01, n_draws);
    NoiseAudit {
        d,
        eps_rate,
        n_draws,
        mean_norm,
        expected_norm,
        ks_stat,
        ks_critical_1pct,
        pass: ks_stat < ks_critical_1pct,
    }
}
