//! Logistic loss, regularizers, the perturbed training objective and a
//! deterministic solver for it.
//!
//! The objective minimized everywhere in this crate is
//!
//! ```text
//! F(w) = (1/n) Σ_i log(1 + exp(−y_i wᵀx_i))  +  bᵀw / n
//!        +  Δ ‖w‖² / 2  +  λ g(w)
//! ```
//!
//! with g either ½‖w‖² or ½‖w − u‖² (both 1-strongly convex). F is smooth
//! and (λ + Δ)-strongly convex, so a quasi-Newton descent with a backtracking
//! line search drives the gradient norm below any positive tolerance in a
//! bounded number of iterations. No randomness is involved: the solver is a
//! pure function of its inputs.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

/// A classification margin z = y · wᵀx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin(pub f64);

/// Numerically stable logistic sigmoid 1/(1 + e^{−z}).
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss value and its first two derivatives at a margin.
#[derive(Debug, Clone, Copy)]
pub struct LossBundle {
    /// log(1 + e^{−z})
    pub value: f64,
    /// −σ(−z), in [−1, 0]
    pub d1: f64,
    /// σ(z)σ(−z), in (0, 1/4]
    pub d2: f64,
}

/// Evaluates the logistic loss and derivatives, stable for |z| up to ~700.
pub fn loss_bundle(z: Margin) -> LossBundle {
    let z = z.0;
    let value = if z >= 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    };
    // σ(z)σ(−z) written as e^{−|z|}/(1+e^{−|z|})², which stays positive out
    // to the underflow limit instead of collapsing through the saturated
    // factor at |z| ≈ 37
    let e = (-z.abs()).exp();
    let denom = 1.0 + e;
    LossBundle {
        value,
        d1: -sigmoid(-z),
        d2: e / (denom * denom),
    }
}

/// The regularizer g: ½‖w‖² or ½‖w − u‖². Both are 1-strongly convex.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    L2,
    OffsetL2(Vec<f64>),
}

impl Regularizer {
    /// Strong-convexity modulus (1 for both kinds).
    pub fn mu(&self) -> f64 {
        1.0
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        match self {
            Regularizer::L2 => 0.5 * w.iter().map(|x| x * x).sum::<f64>(),
            Regularizer::OffsetL2(u) => {
                0.5 * w.iter().zip(u).map(|(x, ui)| (x - ui) * (x - ui)).sum::<f64>()
            }
        }
    }

    /// ∇g(w), written into `out`.
    pub fn add_gradient(&self, w: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Regularizer::L2 => {
                for (o, x) in out.iter_mut().zip(w) {
                    *o += scale * x;
                }
            }
            Regularizer::OffsetL2(u) => {
                for ((o, x), ui) in out.iter_mut().zip(w).zip(u) {
                    *o += scale * (x - ui);
                }
            }
        }
    }

    /// The minimizer of the regularizer itself — the solver's start point.
    pub fn minimizer(&self, d: usize) -> Vec<f64> {
        match self {
            Regularizer::L2 => vec![0.0; d],
            Regularizer::OffsetL2(u) => u.clone(),
        }
    }
}

/// The perturbed objective over a (pre-scaled) dataset.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub data: &'a LabeledDataset,
    /// Noise vector b, length d.
    pub noise: &'a [f64],
    /// Extra quadratic coefficient Δ ≥ 0.
    pub quad: f64,
    /// Regularization weight λ > 0.
    pub lambda: f64,
    pub reg: Regularizer,
}

impl<'a> Objective<'a> {
    pub fn new(
        data: &'a LabeledDataset,
        noise: &'a [f64],
        quad: f64,
        lambda: f64,
        reg: Regularizer,
    ) -> Result<Self> {
        if noise.len() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: noise.len(),
            });
        }
        if let Regularizer::OffsetL2(u) = &reg {
            if u.len() != data.dim() {
                return Err(Error::DimensionMismatch {
                    expected: data.dim(),
                    got: u.len(),
                });
            }
        }
        if lambda <= 0.0 {
            return Err(Error::InvalidConfig(format!("lambda must be > 0, got {lambda}")));
        }
        if quad < 0.0 {
            return Err(Error::InvalidConfig(format!("quad must be ≥ 0, got {quad}")));
        }
        Ok(Self { data, noise, quad, lambda, reg })
    }

    /// Objective value and its exact analytic gradient.
    pub fn eval(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = self.data.dim();
        if w.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: w.len() });
        }
        let n = self.data.len() as f64;
        let mut value = 0.0;
        let mut grad = vec![0.0; d];
        for (row, y) in self.data.iter_rows() {
            let margin = y * dot(w, row);
            let bundle = loss_bundle(Margin(margin));
            value += bundle.value;
            let coef = bundle.d1 * y;
            for (g, x) in grad.iter_mut().zip(row) {
                *g += coef * x;
            }
        }
        value /= n;
        for g in grad.iter_mut() {
            *g /= n;
        }

        value += dot(self.noise, w) / n;
        for (g, b) in grad.iter_mut().zip(self.noise) {
            *g += b / n;
        }

        if self.quad > 0.0 {
            value += 0.5 * self.quad * w.iter().map(|x| x * x).sum::<f64>();
            for (g, x) in grad.iter_mut().zip(w) {
                *g += self.quad * x;
            }
        }

        value += self.lambda * self.reg.value(w);
        self.reg.add_gradient(w, self.lambda, &mut grad);

        Ok((value, grad))
    }

    /// Strong-convexity modulus λ·μ + Δ.
    pub fn strong_convexity(&self) -> f64 {
        self.lambda * self.reg.mu() + self.quad
    }

    /// Dense Hessian (row-major d × d):
    /// (1/n) Σ ℓ″(y_i wᵀx_i) x_i x_iᵀ + (Δ + λμ) I.
    pub fn hessian(&self, w: &[f64]) -> Vec<f64> {
        let d = self.data.dim();
        let n = self.data.len() as f64;
        let mut h = vec![0.0; d * d];
        for (row, y) in self.data.iter_rows() {
            let margin = y * dot(w, row);
            let curvature = loss_bundle(Margin(margin)).d2 / n;
            for a in 0..d {
                let ca = curvature * row[a];
                for b in a..d {
                    h[a * d + b] += ca * row[b];
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                h[b * d + a] = h[a * d + b];
            }
        }
        let ridge = self.quad + self.lambda * self.reg.mu();
        for a in 0..d {
            h[a * d + a] += ridge;
        }
        h
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Result of a successful minimization.
#[derive(Debug, Clone)]
pub struct Minimized {
    pub w: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub value: f64,
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 10_000;

/// Minimizes the objective to ‖∇F(w)‖₂ ≤ tol by damped Newton with
/// backtracking, starting from `w0`. Deterministic given (objective, w0,
/// tol). Errors with the residual if the iteration cap is exhausted.
///
/// The Hessian is dense and cheap at these dimensions, and strong convexity
/// keeps it positive definite, so full Newton steps take over near the
/// optimum. Ill-scaled objectives (tiny λ with large noise vectors) reach
/// values where an Armijo test on F alone drowns in rounding; near-optimal
/// steps are therefore also accepted when the gradient norm strictly
/// shrinks while F does not measurably increase.
pub fn minimize(objective: &Objective<'_>, w0: &[f64], tol: f64) -> Result<Minimized> {
    if tol <= 0.0 {
        return Err(Error::InvalidConfig(format!("tol must be > 0, got {tol}")));
    }
    if objective.strong_convexity() <= 0.0 {
        return Err(Error::InvalidConfig(
            "objective is not strictly convex: lambda·mu + delta must be > 0".into(),
        ));
    }

    let d = w0.len();
    let mut w = w0.to_vec();
    let (mut value, mut grad) = objective.eval(&w)?;

    for iter in 0..MAX_ITERATIONS {
        let gnorm = norm(&grad);
        if gnorm <= tol {
            return Ok(Minimized { w, iterations: iter, residual: gnorm, value });
        }

        let hessian = objective.hessian(&w);
        let dir = match cholesky_solve_neg(&hessian, d, &grad) {
            Some(dir) => dir,
            // cannot happen for a positive-definite Hessian; guard anyway
            None => grad.iter().map(|g| -g).collect(),
        };
        let mut slope = dot(&grad, &dir);
        let dir = if slope < 0.0 && slope.is_finite() {
            dir
        } else {
            slope = -gnorm * gnorm;
            grad.iter().map(|g| -g).collect()
        };

        // F-differences smaller than this are indistinguishable from noise
        let f_noise = 8.0 * f64::EPSILON * (1.0 + value.abs());
        let mut step = 1.0f64;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(&dir).map(|(wi, di)| wi + step * di).collect();
            let (tv, tg) = objective.eval(&trial)?;
            let armijo = tv <= value + 1e-4 * step * slope;
            let noise_floor = tv <= value + f_noise && norm(&tg) <= 0.9 * gnorm;
            if armijo || noise_floor {
                accepted = Some((trial, tv, tg));
                break;
            }
            step *= 0.5;
        }
        let Some((new_w, new_value, new_grad)) = accepted else {
            return Err(Error::NonConvergence { iterations: iter, residual: gnorm, tol });
        };
        w = new_w;
        value = new_value;
        grad = new_grad;
    }

    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual: norm(&grad),
        tol,
    })
}

/// Solves H p = −g for SPD H (row-major d × d) by Cholesky. Returns None if
/// the factorization hits a non-positive pivot.
fn cholesky_solve_neg(h: &[f64], d: usize, g: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = h[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    // forward: L y = −g
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut sum = -g[i];
        for k in 0..i {
            sum -= l[i * d + k] * y[k];
        }
        y[i] = sum / l[i * d + i];
    }
    // backward: Lᵀ p = y
    let mut p = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = y[i];
        for k in (i + 1)..d {
            sum -= l[k * d + i] * p[k];
        }
        p[i] = sum / l[i * d + i];
    }
    Some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use rand::Rng;

    const SIGMOID_2: f64 = 0.880_797_077_977_882_4; // 1/(1+e^{-2})

    #[test]
    fn sigmoid_basics() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(2.0) - SIGMOID_2).abs() < 1e-15);
        for z in [-700.0, -36.0, -1.3, 0.7, 36.0, 700.0] {
            let s = sigmoid(z) + sigmoid(-z);
            assert!((s - 1.0).abs() < 1e-15, "symmetry at {z}");
            assert!(sigmoid(z) > 0.0 && sigmoid(z) <= 1.0);
        }
    }

    #[test]
    fn loss_bundle_at_zero_and_one() {
        let at0 = loss_bundle(Margin(0.0));
        assert!((at0.value - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(at0.d1, -0.5);
        assert_eq!(at0.d2, 0.25);

        let at1 = loss_bundle(Margin(1.0));
        assert!((at1.value - 0.313_261_687_518_222_8).abs() < 1e-15);
        assert!((at1.d1 - -0.268_941_421_369_995_1).abs() < 1e-15);
        assert!((at1.d2 - 0.196_611_933_241_481_85).abs() < 1e-15);
    }

    #[test]
    fn loss_vanishes_at_large_margin() {
        let b = loss_bundle(Margin(500.0));
        assert!(b.value < 1e-200);
        assert!(b.d1.abs() < 1e-200);
    }

    #[test]
    fn curvature_bounded_by_quarter() {
        let mut rng = rng_from_seed(17);
        for _ in 0..1_000_000 {
            let z = (rng.random::<f64>() - 0.5) * 100.0;
            let b = loss_bundle(Margin(z));
            assert!(b.d2 <= 0.25 + 1e-15);
            assert!(b.d1 >= -1.0 && b.d1 <= 0.0);
        }
    }

    fn small_dataset(rng: &mut impl Rng, n: usize, d: usize) -> LabeledDataset {
        let rows = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let labels = (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        LabeledDataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn gradient_at_zero_matches_closed_form() {
        // w=0, b=0, Δ=0, L2 → value = log 2, gradient = −(1/2n) Σ y_i x_i
        let mut rng = rng_from_seed(21);
        let data = small_dataset(&mut rng, 12, 4);
        let noise = vec![0.0; 4];
        let obj = Objective::new(&data, &noise, 0.0, 1.0, Regularizer::L2).unwrap();
        let (v, g) = obj.eval(&[0.0; 4]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-14);
        let n = data.len() as f64;
        for j in 0..4 {
            let want: f64 =
                -data.iter_rows().map(|(row, y)| y * row[j]).sum::<f64>() / (2.0 * n);
            assert!((g[j] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn noise_term_is_linear() {
        // w=0, b=e₁, n=1, Δ=0 → gradient includes +e₁/n exactly
        let data = LabeledDataset::from_rows(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        let noise = vec![1.0, 0.0];
        let obj = Objective::new(&data, &noise, 0.0, 1.0, Regularizer::L2).unwrap();
        let (_, g) = obj.eval(&[0.0, 0.0]).unwrap();
        assert_eq!(g[0], 1.0); // x = 0 so the loss contributes nothing
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(22);
        for trial in 0..100 {
            let n = rng.random_range(2..20);
            let d = rng.random_range(1..6);
            let data = small_dataset(&mut rng, n, d);
            let noise: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            let quad = if trial % 3 == 0 { rng.random::<f64>() } else { 0.0 };
            let lambda = 10f64.powf(rng.random::<f64>() * 3.0 - 2.0);
            let reg = if trial % 2 == 0 {
                Regularizer::L2
            } else {
                Regularizer::OffsetL2((0..d).map(|_| rng.random::<f64>() - 0.5).collect())
            };
            let obj = Objective::new(&data, &noise, quad, lambda, reg).unwrap();
            let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let (_, g) = obj.eval(&w).unwrap();
            let h = 1e-6;
            for j in 0..d {
                let mut wp = w.clone();
                wp[j] += h;
                let mut wm = w.clone();
                wm[j] -= h;
                let fd = (obj.eval(&wp).unwrap().0 - obj.eval(&wm).unwrap().0) / (2.0 * h);
                let denom = g[j].abs().max(1.0);
                assert!(
                    (g[j] - fd).abs() / denom <= 1e-5,
                    "trial {trial} coord {j}: analytic {} vs fd {fd}",
                    g[j]
                );
            }
        }
    }

    #[test]
    fn convexity_witness() {
        let mut rng = rng_from_seed(23);
        let data = small_dataset(&mut rng, 15, 3);
        let noise = vec![0.1, -0.2, 0.3];
        let obj = Objective::new(&data, &noise, 0.05, 0.3, Regularizer::L2).unwrap();
        for _ in 0..200 {
            let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let u: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let a: f64 = rng.random();
            let mix: Vec<f64> = w.iter().zip(&u).map(|(x, y)| a * x + (1.0 - a) * y).collect();
            let fw = obj.eval(&w).unwrap().0;
            let fu = obj.eval(&u).unwrap().0;
            let fm = obj.eval(&mix).unwrap().0;
            assert!(fm <= a * fw + (1.0 - a) * fu + 1e-12);
        }
    }

    #[test]
    fn solver_single_sample_fixed_point() {
        // min log(1+e^{-w}) + w²/2 has stationarity w(1+e^w) = 1; solve by
        // bisection as the independent oracle.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (1.0 + mid.exp()) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);

        let data = LabeledDataset::from_rows(vec![vec![1.0]], vec![1.0]).unwrap();
        let noise = vec![0.0];
        let obj = Objective::new(&data, &noise, 0.0, 1.0, Regularizer::L2).unwrap();
        let sol = minimize(&obj, &[0.0], 1e-12).unwrap();
        assert!(
            (sol.w[0] - oracle).abs() < 1e-9,
            "solver {} vs bisection {oracle}",
            sol.w[0]
        );
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn solver_huge_lambda_pins_to_zero() {
        let mut rng = rng_from_seed(25);
        let data = small_dataset(&mut rng, 10, 3);
        let noise = vec![0.0; 3];
        let obj = Objective::new(&data, &noise, 0.0, 1e6, Regularizer::L2).unwrap();
        let sol = minimize(&obj, &[0.0; 3], 1e-10).unwrap();
        assert!(norm(&sol.w) <= 1e-6);
    }

    #[test]
    fn solver_offset_quadratic_only() {
        // all x = 0: minimizer is u·λ/(λ+Δ); with Δ=0 it is u itself.
        let data = LabeledDataset::from_rows(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        let noise = vec![0.0, 0.0];
        let u = vec![0.7, -0.3];
        let lambda = 2.0;
        let quad = 0.5;
        let obj =
            Objective::new(&data, &noise, quad, lambda, Regularizer::OffsetL2(u.clone())).unwrap();
        let sol = minimize(&obj, &u, 1e-12).unwrap();
        for (wi, ui) in sol.w.iter().zip(&u) {
            assert!((wi - ui * lambda / (lambda + quad)).abs() < 1e-10);
        }

        let obj0 = Objective::new(&data, &noise, 0.0, lambda, Regularizer::OffsetL2(u.clone()))
            .unwrap();
        let sol0 = minimize(&obj0, &[0.0, 0.0], 1e-12).unwrap();
        for (wi, ui) in sol0.w.iter().zip(&u) {
            assert!((wi - ui).abs() < 1e-10);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sigmoid_identities(z in -700.0f64..700.0) {
                let s = sigmoid(z);
                prop_assert!(s > 0.0 && s <= 1.0);
                prop_assert!((s + sigmoid(-z) - 1.0).abs() < 1e-15);
            }

            #[test]
            fn loss_derivative_bounds(z in -700.0f64..700.0) {
                let b = loss_bundle(Margin(z));
                prop_assert!(b.value >= 0.0);
                prop_assert!((-1.0..=0.0).contains(&b.d1));
                prop_assert!(b.d2 > 0.0 && b.d2 <= 0.25 + 1e-15);
            }
        }
    }

    #[test]
    fn solver_hits_tolerance_on_random_objectives() {
        let mut rng = rng_from_seed(26);
        for _ in 0..30 {
            let n = rng.random_range(5..40);
            let d = rng.random_range(1..8);
            let data = small_dataset(&mut rng, n, d);
            let noise: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let lambda = 10f64.powf(rng.random::<f64>() * 4.0 - 3.0);
            let obj = Objective::new(&data, &noise, 0.0, lambda, Regularizer::L2).unwrap();
            let sol = minimize(&obj, &vec![0.0; d], DEFAULT_TOL).unwrap();
            assert!(sol.residual <= DEFAULT_TOL);
            let (_, g) = obj.eval(&sol.w).unwrap();
            assert!(norm(&g) <= DEFAULT_TOL * (1.0 + 1e-9));
        }
    }
}
