//! Differentially private logistic regression by objective perturbation,
//! plus stacking-based ensemble variants and a benchmark harness.
//!
//! The crate trains three families of ε-differentially-private classifiers:
//!
//! * [`plr`] — a single logistic regression whose training objective carries a
//!   random linear term and (when the budget is tight) an extra quadratic
//!   term, so that the released weight vector itself is private.
//! * [`stacking`] — stacked ensembles whose low-level models are trained on
//!   disjoint sample partitions or disjoint feature groups; feature groups may
//!   carry importance weights that steer noise away from informative features.
//! * [`transfer`] — a hypothesis-transfer variant that anchors each target
//!   group's regularizer at a model trained on a source domain.
//!
//! Supporting modules: [`numerics`] (loss, objective, deterministic solver),
//! [`mechanism`] (budget arithmetic, noise sampling, noise recovery),
//! [`partition`] (sample/feature partitioning and importance weights),
//! [`data`] (ingestion, splits, PCA, synthetic generation),
//! [`bench`](mod@bench) (AUC, tuning, experiment sweeps, paired tests) and
//! [`bounds`] (sample-complexity term tabulation).
//!
//! All randomness flows through caller-supplied seeded streams; every
//! training call is deterministic given its inputs and seed.

pub mod bench;
pub mod bounds;
pub mod data;
pub mod error;
pub mod mechanism;
pub mod model_json;
pub mod numerics;
pub mod partition;
pub mod plr;
pub mod seeding;
pub mod stacking;
pub mod stats;
pub mod transfer;

pub use error::{Error, Result};
