//! On-disk JSON formats for trained models.
//!
//! Three kinds share a `format_version`/`kind` envelope:
//!
//! * `"plr"`   — `{format_version, kind, d, s, epsilon, lambda, weights[]}`
//! * `"pst-s"`/`"pst-f"` — `{format_version, kind, k, groups[][], q[],
//!   s_k[], low_weights[][], high_weights[], high_s, epsilon, lambdas[],
//!   lambda_high, ...}` (`groups`/`q` only for `"pst-f"`)
//! * `"pst-h"` — `{format_version, kind, source: {...}, target: {...},
//!   eps_src, eps_tgt}`
//!
//! Loaders reject unknown kinds and future format versions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::PerturbationParams;
use crate::partition::FeaturePartition;
use crate::plr::{LinearModel, TrainDiagnostics};
use crate::stacking::{StackedKind, StackedModel};
use crate::transfer::TransferModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlrJson {
    pub format_version: u32,
    pub kind: String,
    pub d: usize,
    pub s: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub eps_prime: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackedJson {
    pub format_version: u32,
    pub kind: String,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    pub s_k: Vec<f64>,
    pub low_weights: Vec<Vec<f64>>,
    pub high_weights: Vec<f64>,
    pub high_s: f64,
    pub epsilon: f64,
    pub lambdas: Vec<f64>,
    pub lambda_high: f64,
    pub eps_prime: f64,
    pub deltas: Vec<f64>,
    pub low_region_sizes: Vec<usize>,
    pub high_region_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferJson {
    pub format_version: u32,
    pub kind: String,
    pub source: Vec<PlrJson>,
    pub groups: Vec<Vec<usize>>,
    pub q: Vec<f64>,
    pub target: StackedJson,
    pub eps_src: f64,
    pub eps_tgt: f64,
}

/// Any trained model, as stored on disk.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Plr(LinearModel),
    Stacked(StackedModel),
    Transfer(TransferModel),
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Plr(_) => "plr",
            AnyModel::Stacked(m) => match m.kind {
                StackedKind::SamplePartitioned => "pst-s",
                StackedKind::FeaturePartitioned => "pst-f",
            },
            AnyModel::Transfer(_) => "pst-h",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnyModel::Plr(m) => m.dim(),
            AnyModel::Stacked(m) => m.dim(),
            AnyModel::Transfer(m) => m.target.dim(),
        }
    }
}

fn epsilon_to_json(e: f64) -> f64 {
    // serde_json writes non-finite floats as null; keep ∞ legible by
    // storing a sentinel that the loader maps back
    if e.is_infinite() {
        -1.0
    } else {
        e
    }
}

fn epsilon_from_json(e: f64) -> f64 {
    if e == -1.0 {
        f64::INFINITY
    } else {
        e
    }
}

fn linear_to_json(m: &LinearModel) -> PlrJson {
    PlrJson {
        format_version: FORMAT_VERSION,
        kind: "plr".into(),
        d: m.dim(),
        s: m.train_scale,
        epsilon: epsilon_to_json(m.epsilon),
        lambda: m.lambda,
        weights: m.weights.clone(),
        eps_prime: epsilon_to_json(m.params.eps_prime),
        delta: m.params.delta(),
    }
}

fn linear_from_json(j: &PlrJson) -> LinearModel {
    LinearModel {
        weights: j.weights.clone(),
        train_scale: j.s,
        epsilon: epsilon_from_json(j.epsilon),
        lambda: j.lambda,
        params: PerturbationParams {
            eps_prime: epsilon_from_json(j.eps_prime),
            deltas: vec![j.delta],
            fallback: false,
        },
        diagnostics: TrainDiagnostics::default(),
    }
}

fn stacked_to_json(m: &StackedModel) -> StackedJson {
    StackedJson {
        format_version: FORMAT_VERSION,
        kind: match m.kind {
            StackedKind::SamplePartitioned => "pst-s".into(),
            StackedKind::FeaturePartitioned => "pst-f".into(),
        },
        k: m.k(),
        groups: m.partition.as_ref().map(|p| p.groups.clone()),
        q: m.partition.as_ref().map(|p| p.weights.clone()),
        s_k: m.low_models.iter().map(|lm| lm.train_scale).collect(),
        low_weights: m.low_models.iter().map(|lm| lm.weights.clone()).collect(),
        high_weights: m.high_model.weights.clone(),
        high_s: m.high_model.train_scale,
        epsilon: epsilon_to_json(m.epsilon),
        lambdas: m.low_models.iter().map(|lm| lm.lambda).collect(),
        lambda_high: m.high_model.lambda,
        eps_prime: epsilon_to_json(m.low_models[0].params.eps_prime),
        deltas: m.low_models.iter().map(|lm| lm.params.delta()).collect(),
        low_region_sizes: m.low_region_sizes.clone(),
        high_region_size: m.high_region_size,
    }
}

fn stacked_from_json(j: &StackedJson) -> Result<StackedModel> {
    let kind = match j.kind.as_str() {
        "pst-s" => StackedKind::SamplePartitioned,
        "pst-f" => StackedKind::FeaturePartitioned,
        other => {
            return Err(Error::InvalidConfig(format!("unknown stacked kind {other:?}")))
        }
    };
    let partition = match (&j.groups, &j.q) {
        (Some(groups), Some(q)) => Some(FeaturePartition::new(groups.clone(), q.clone())?),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidConfig(
                "groups and q must be present together".into(),
            ))
        }
    };
    if kind == StackedKind::FeaturePartitioned && partition.is_none() {
        return Err(Error::InvalidConfig("pst-f model needs groups and q".into()));
    }
    let eps = epsilon_from_json(j.epsilon);
    let eps_prime = epsilon_from_json(j.eps_prime);
    let low_models = j
        .low_weights
        .iter()
        .zip(&j.s_k)
        .zip(&j.lambdas)
        .zip(&j.deltas)
        .map(|(((w, &s), &lambda), &delta)| LinearModel {
            weights: w.clone(),
            train_scale: s,
            epsilon: eps,
            lambda,
            params: PerturbationParams {
                eps_prime,
                deltas: vec![delta],
                fallback: false,
            },
            diagnostics: TrainDiagnostics::default(),
        })
        .collect();
    Ok(StackedModel {
        kind,
        low_models,
        partition,
        high_model: LinearModel {
            weights: j.high_weights.clone(),
            train_scale: j.high_s,
            epsilon: eps,
            lambda: j.lambda_high,
            params: PerturbationParams {
                eps_prime,
                deltas: vec![0.0],
                fallback: false,
            },
            diagnostics: TrainDiagnostics::default(),
        },
        epsilon: eps,
        low_region_sizes: j.low_region_sizes.clone(),
        high_region_size: j.high_region_size,
    })
}

pub fn to_json_string(model: &AnyModel) -> Result<String> {
    let text = match model {
        AnyModel::Plr(m) => serde_json::to_string_pretty(&linear_to_json(m))?,
        AnyModel::Stacked(m) => serde_json::to_string_pretty(&stacked_to_json(m))?,
        AnyModel::Transfer(m) => {
            let json = TransferJson {
                format_version: FORMAT_VERSION,
                kind: "pst-h".into(),
                source: m.source_models.iter().map(linear_to_json).collect(),
                groups: m.partition.groups.clone(),
                q: m.partition.weights.clone(),
                target: stacked_to_json(&m.target),
                eps_src: epsilon_to_json(m.eps_src),
                eps_tgt: epsilon_to_json(m.eps_tgt),
            };
            serde_json::to_string_pretty(&json)?
        }
    };
    Ok(text)
}

pub fn from_json_str(text: &str) -> Result<AnyModel> {
    #[derive(Deserialize)]
    struct Envelope {
        format_version: u32,
        kind: String,
    }
    let envelope: Envelope = serde_json::from_str(text)?;
    if envelope.format_version > FORMAT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "model format version {} is newer than supported {FORMAT_VERSION}",
            envelope.format_version
        )));
    }
    match envelope.kind.as_str() {
        "plr" => {
            let j: PlrJson = serde_json::from_str(text)?;
            Ok(AnyModel::Plr(linear_from_json(&j)))
        }
        "pst-s" | "pst-f" => {
            let j: StackedJson = serde_json::from_str(text)?;
            Ok(AnyModel::Stacked(stacked_from_json(&j)?))
        }
        "pst-h" => {
            let j: TransferJson = serde_json::from_str(text)?;
            let partition = FeaturePartition::new(j.groups.clone(), j.q.clone())?;
            Ok(AnyModel::Transfer(TransferModel {
                source_models: j.source.iter().map(linear_from_json).collect(),
                partition,
                target: stacked_from_json(&j.target)?,
                eps_src: epsilon_from_json(j.eps_src),
                eps_tgt: epsilon_from_json(j.eps_tgt),
            }))
        }
        other => Err(Error::InvalidConfig(format!("unknown model kind {other:?}"))),
    }
}

pub fn save(model: &AnyModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(model)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<AnyModel> {
    from_json_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthSpec};
    use crate::mechanism::PrivacyBudget;
    use crate::numerics::Regularizer;
    use crate::plr::{predict_linear, train_plr};
    use crate::seeding::rng_from_seed;
    use crate::stacking::{predict_stacked, train_pst_f, Combiner, PstFOptions};
    use crate::transfer::{train_pst_h, PstHOptions};

    fn data(n: usize, seed: u64) -> crate::data::LabeledDataset {
        synth_generate(
            &SynthSpec {
                n,
                d: 6,
                k_true: 2,
                informative_fraction: 1.0,
                noise_level: 1.0,
                group_signals: vec![1.0, 0.3],
                structure_seed: Some(9),
            },
            &mut rng_from_seed(seed),
        )
        .unwrap()
        .dataset
    }

    #[test]
    fn plr_round_trip_preserves_predictions() {
        let d = data(60, 1);
        let m = train_plr(
            &d,
            PrivacyBudget::new(1.0).unwrap(),
            0.05,
            Regularizer::L2,
            &mut rng_from_seed(2),
        )
        .unwrap();
        let text = to_json_string(&AnyModel::Plr(m.clone())).unwrap();
        let back = match from_json_str(&text).unwrap() {
            AnyModel::Plr(m) => m,
            _ => panic!("wrong kind"),
        };
        assert_eq!(back.weights, m.weights);
        assert_eq!(back.train_scale, m.train_scale);
        for i in 0..5 {
            assert_eq!(
                predict_linear(&back, d.row(i)).unwrap(),
                predict_linear(&m, d.row(i)).unwrap()
            );
        }
    }

    #[test]
    fn stacked_round_trip_preserves_predictions() {
        let d = data(120, 3);
        let partition = FeaturePartition::new(
            vec![vec![0, 1, 2], vec![3, 4, 5]],
            vec![0.75, 0.25],
        )
        .unwrap();
        let m = train_pst_f(
            &d,
            PrivacyBudget::new(1.0).unwrap(),
            &partition,
            &PstFOptions::uniform(2, 0.05),
            &mut rng_from_seed(4),
        )
        .unwrap();
        let text = to_json_string(&AnyModel::Stacked(m.clone())).unwrap();
        let back = match from_json_str(&text).unwrap() {
            AnyModel::Stacked(s) => s,
            _ => panic!("wrong kind"),
        };
        for i in 0..5 {
            for combiner in [Combiner::HighLevel, Combiner::MajorityVote, Combiner::WeightedMajorityVote] {
                assert_eq!(
                    predict_stacked(&back, d.row(i), combiner).unwrap(),
                    predict_stacked(&m, d.row(i), combiner).unwrap()
                );
            }
        }
    }

    #[test]
    fn transfer_round_trip() {
        let src = data(200, 5);
        let tgt = data(80, 6);
        let partition = FeaturePartition::new(
            vec![vec![0, 1, 2], vec![3, 4, 5]],
            vec![0.6, 0.4],
        )
        .unwrap();
        let m = train_pst_h(
            &src,
            &tgt,
            PrivacyBudget::new(2.0).unwrap(),
            PrivacyBudget::new(1.0).unwrap(),
            &partition,
            &PstHOptions::uniform(2, 0.1, 0.1),
            &mut rng_from_seed(7),
        )
        .unwrap();
        let text = to_json_string(&AnyModel::Transfer(m.clone())).unwrap();
        let back = match from_json_str(&text).unwrap() {
            AnyModel::Transfer(t) => t,
            _ => panic!("wrong kind"),
        };
        assert_eq!(back.eps_src, 2.0);
        assert_eq!(back.eps_tgt, 1.0);
        for i in 0..5 {
            assert_eq!(
                predict_stacked(&back.target, tgt.row(i), Combiner::HighLevel).unwrap(),
                predict_stacked(&m.target, tgt.row(i), Combiner::HighLevel).unwrap()
            );
        }
    }

    #[test]
    fn infinite_epsilon_round_trips() {
        let d = data(40, 8);
        let m = train_plr(
            &d,
            PrivacyBudget::new(f64::INFINITY).unwrap(),
            0.1,
            Regularizer::L2,
            &mut rng_from_seed(9),
        )
        .unwrap();
        let text = to_json_string(&AnyModel::Plr(m)).unwrap();
        match from_json_str(&text).unwrap() {
            AnyModel::Plr(m) => assert!(m.epsilon.is_infinite()),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn rejects_unknown_kind_and_future_version() {
        assert!(from_json_str("{\"format_version\":1,\"kind\":\"mystery\"}").is_err());
        assert!(from_json_str("{\"format_version\":99,\"kind\":\"plr\"}").is_err());
    }
}
