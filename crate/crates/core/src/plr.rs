//! Private logistic regression by objective perturbation: scale the samples
//! into the unit ball, run the budget arithmetic, draw the noise vector, and
//! minimize the perturbed objective.
//!
//! The model has no intercept term; append a constant feature before
//! ingestion if one is wanted.

use rand::Rng;

use crate::data::{scale_to_ball, LabeledDataset};
use crate::error::{Error, Result};
use crate::mechanism::{plr_params, sample_noise, PerturbationParams, PrivacyBudget};
use crate::numerics::{dot, minimize, sigmoid, Objective, Regularizer, DEFAULT_TOL};

/// A trained linear model together with everything needed to replay the
/// training-time normalization at inference.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    /// Global divisor applied to every sample at training time (≥ 1).
    pub train_scale: f64,
    /// The budget the training call consumed.
    pub epsilon: f64,
    pub lambda: f64,
    pub params: PerturbationParams,
    pub diagnostics: TrainDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainDiagnostics {
    pub solver_iterations: usize,
    pub solver_residual: f64,
    pub objective_value: f64,
    pub warnings: Vec<String>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// The pre-sigmoid score (x / s)ᵀ w.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(dot(x, &self.weights) / self.train_scale)
    }

    /// The model as a linear functional on unscaled inputs: w / s.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.train_scale).collect()
    }
}

/// σ((x / s)ᵀ w) — probability that the label is +1.
pub fn predict_linear(model: &LinearModel, x: &[f64]) -> Result<f64> {
    Ok(sigmoid(model.margin(x)?))
}

enum NoiseSource<'a, R: Rng> {
    Sample(&'a mut R),
    #[cfg_attr(not(any(test, feature = "test-hooks")), allow(dead_code))]
    Injected(&'a [f64]),
}

fn train_impl<R: Rng>(
    data: &LabeledDataset,
    budget: PrivacyBudget,
    lambda: f64,
    reg: Regularizer,
    noise_source: NoiseSource<'_, R>,
) -> Result<LinearModel> {
    let mut warnings = Vec::new();
    let labels = data.labels();
    if labels.iter().all(|&y| y == labels[0]) {
        warnings.push(format!(
            "degenerate dataset: all {} labels equal {}",
            data.len(),
            labels[0]
        ));
    }

    let (scaled, train_scale) = scale_to_ball(data, 1.0)?;
    let params = plr_params(budget, data.len(), lambda)?;
    let noise = match noise_source {
        NoiseSource::Sample(rng) => sample_noise(data.dim(), params.eps_prime, rng),
        NoiseSource::Injected(b) => {
            if b.len() != data.dim() {
                return Err(Error::DimensionMismatch {
                    expected: data.dim(),
                    got: b.len(),
                });
            }
            b.to_vec()
        }
    };

    let objective = Objective::new(&scaled, &noise, params.delta(), lambda, reg)?;
    let w0 = objective.reg.minimizer(data.dim());
    let solution = minimize(&objective, &w0, DEFAULT_TOL)?;

    Ok(LinearModel {
        weights: solution.w,
        train_scale,
        epsilon: budget.epsilon,
        lambda,
        params,
        diagnostics: TrainDiagnostics {
            solver_iterations: solution.iterations,
            solver_residual: solution.residual,
            objective_value: solution.value,
            warnings,
        },
    })
}

/// Trains a private logistic regression with budget ε. Deterministic given
/// the random stream.
pub fn train_plr(
    data: &LabeledDataset,
    budget: PrivacyBudget,
    lambda: f64,
    reg: Regularizer,
    rng: &mut impl Rng,
) -> Result<LinearModel> {
    train_impl(data, budget, lambda, reg, NoiseSource::Sample::<_>(rng))
}

/// Test-only entry point that injects a fixed noise vector instead of
/// sampling one. The quadratic coefficient still comes from the budget
/// arithmetic. Injecting a known b voids the privacy guarantee.
#[cfg(any(test, feature = "test-hooks"))]
pub fn train_plr_with_noise(
    data: &LabeledDataset,
    budget: PrivacyBudget,
    lambda: f64,
    reg: Regularizer,
    noise: &[f64],
) -> Result<LinearModel> {
    train_impl::<rand_chacha::ChaCha12Rng>(data, budget, lambda, reg, NoiseSource::Injected(noise))
}
