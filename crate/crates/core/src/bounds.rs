//! Sample-complexity comparison report: tabulates the three max-terms of the
//! unpartitioned and feature-partitioned learning bounds across (d, K,
//! weight-scheme) grids and flags configurations where partitioning needs
//! fewer samples.
//!
//! The bounds share an unknown leading constant; it is normalized to 1 here,
//! so only ratios between configurations are meaningful. Every rendering of
//! the report carries that banner.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mechanism::{bound_terms, BoundInputs, BoundKind, ReferenceScaling};
use crate::partition::{alpha_importance, importance_weights, ImportanceVector};

pub const BANNER: &str =
    "leading constant normalized to 1 — relative comparison only, not absolute sample counts";

/// Weight schemes the report tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum QScheme {
    /// q_k = 1/K.
    Uniform,
    /// q from α-power importance over contiguous rank blocks.
    AlphaPower { alpha: f64 },
}

impl QScheme {
    fn weights(&self, d: usize, k: usize) -> Result<Vec<f64>> {
        match self {
            QScheme::Uniform => Ok(vec![1.0 / k as f64; k]),
            QScheme::AlphaPower { alpha } => {
                let scores: ImportanceVector = alpha_importance(d, *alpha)?;
                let groups = crate::data::contiguous_feature_blocks(d, k);
                importance_weights(&scores, &groups)
            }
        }
    }

    fn label(&self) -> String {
        match self {
            QScheme::Uniform => "uniform".to_string(),
            QScheme::AlphaPower { alpha } => format!("alpha={alpha}"),
        }
    }
}

/// One tabulated configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundRow {
    pub d: usize,
    pub k: usize,
    pub scheme: String,
    /// Unpartitioned bound terms (t1, t2, t3).
    pub single: [f64; 3],
    /// Worst group's partitioned terms with the reference rescaled by 1/q_k
    /// (the reading under which the comparison is apples-to-apples).
    pub partitioned_adjusted_max: [f64; 3],
    /// Worst group's partitioned terms with the raw reference (a_k = q_k‖v‖).
    pub partitioned_raw_max: [f64; 3],
    /// max(adjusted terms) / max(single terms).
    pub max_ratio: f64,
    /// Middle-term ratio, the d·log factor comparison.
    pub middle_ratio: f64,
    /// True when the partitioned bound's binding term is strictly smaller.
    pub partitioned_wins: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub v_norm: f64,
    pub eps_g: f64,
    pub eps: f64,
    pub delta: f64,
    pub rows: Vec<BoundRow>,
}

/// Tabulates bound terms over d × K × scheme grids.
pub fn bound_report(
    d_grid: &[usize],
    k_grid: &[usize],
    schemes: &[QScheme],
    v_norm: f64,
    eps_g: f64,
    eps: f64,
    delta: f64,
) -> Result<BoundReport> {
    let mut rows = Vec::new();
    for &d in d_grid {
        for &k in k_grid {
            if k > d {
                continue;
            }
            for scheme in schemes {
                let weights = scheme.weights(d, k)?;
                let base = BoundInputs {
                    v_norm,
                    d,
                    big_k: 1,
                    q_k: 1.0,
                    eps_g,
                    eps,
                    delta,
                };
                let single = bound_terms(BoundKind::Unpartitioned, base, ReferenceScaling::Raw);

                let mut adj = [0.0f64; 3];
                let mut raw = [0.0f64; 3];
                for &q in &weights {
                    if q == 0.0 {
                        continue;
                    }
                    let inputs = BoundInputs { big_k: k, q_k: q, ..base };
                    let a = bound_terms(BoundKind::FeaturePartitioned, inputs, ReferenceScaling::Adjusted);
                    let r = bound_terms(BoundKind::FeaturePartitioned, inputs, ReferenceScaling::Raw);
                    for i in 0..3 {
                        adj[i] = adj[i].max(a[i]);
                        raw[i] = raw[i].max(r[i]);
                    }
                }

                let single_max = single.iter().copied().fold(f64::MIN, f64::max);
                let adj_max = adj.iter().copied().fold(f64::MIN, f64::max);
                rows.push(BoundRow {
                    d,
                    k,
                    scheme: scheme.label(),
                    single,
                    partitioned_adjusted_max: adj,
                    partitioned_raw_max: raw,
                    max_ratio: adj_max / single_max,
                    middle_ratio: adj[1] / single[1],
                    partitioned_wins: adj_max < single_max,
                });
            }
        }
    }
    Ok(BoundReport { v_norm, eps_g, eps, delta, rows })
}

impl BoundReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# {BANNER}\n");
        out.push_str(
            "d,k,scheme,single_t1,single_t2,single_t3,part_adj_t1,part_adj_t2,part_adj_t3,part_raw_t1,part_raw_t2,part_raw_t3,max_ratio,middle_ratio,partitioned_wins\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.d,
                r.k,
                r.scheme,
                r.single[0],
                r.single[1],
                r.single[2],
                r.partitioned_adjusted_max[0],
                r.partitioned_adjusted_max[1],
                r.partitioned_adjusted_max[2],
                r.partitioned_raw_max[0],
                r.partitioned_raw_max[1],
                r.partitioned_raw_max[2],
                r.max_ratio,
                r.middle_ratio,
                r.partitioned_wins
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NOTE: {BANNER}");
        let _ = writeln!(
            out,
            "reference ‖v‖ = {}, eps_g = {}, eps = {}, delta = {}",
            self.v_norm, self.eps_g, self.eps, self.delta
        );
        let _ = writeln!(
            out,
            "{:>5} {:>4} {:>12} {:>12} {:>12} {:>11} {:>11} {:>6}",
            "d", "K", "scheme", "single max", "part max", "max ratio", "mid ratio", "wins"
        );
        for r in &self.rows {
            let single_max = r.single.iter().copied().fold(f64::MIN, f64::max);
            let adj_max = r.partitioned_adjusted_max.iter().copied().fold(f64::MIN, f64::max);
            let _ = writeln!(
                out,
                "{:>5} {:>4} {:>12} {:>12.4e} {:>12.4e} {:>11.6} {:>11.6} {:>6}",
                r.d, r.k, r.scheme, single_max, adj_max, r.max_ratio, r.middle_ratio,
                if r.partitioned_wins { "yes" } else { "no" }
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_ratio_is_exactly_one() {
        let report =
            bound_report(&[100], &[1], &[QScheme::Uniform], 1.0, 0.1, 1.0, 0.05).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.middle_ratio, 1.0);
        assert_eq!(row.max_ratio, 1.0);
        for i in 0..3 {
            assert_eq!(row.single[i], row.partitioned_adjusted_max[i]);
            assert_eq!(row.single[i], row.partitioned_raw_max[i]);
        }
    }

    #[test]
    fn uniform_middle_ratio_is_log_ratio() {
        let report =
            bound_report(&[100], &[5], &[QScheme::Uniform], 1.0, 0.1, 1.0, 0.05).unwrap();
        let row = &report.rows[0];
        let want = (100.0f64 / (5.0 * 0.05)).ln() / (100.0f64 / 0.05).ln();
        assert!((row.middle_ratio - want).abs() < 1e-12);
        assert!((want - 0.788_256_996_981_505_6).abs() < 1e-12);
    }

    #[test]
    fn middle_ratio_decreases_in_k() {
        let report = bound_report(
            &[100],
            &[1, 2, 5, 10, 25],
            &[QScheme::Uniform],
            1.0,
            0.1,
            1.0,
            0.05,
        )
        .unwrap();
        let ratios: Vec<f64> = report.rows.iter().map(|r| r.middle_ratio).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn renders_with_banner() {
        let report =
            bound_report(&[10], &[1, 2], &[QScheme::Uniform, QScheme::AlphaPower { alpha: 0.5 }], 1.0, 0.1, 1.0, 0.05)
                .unwrap();
        assert!(report.to_csv().contains(BANNER));
        assert!(report.to_table().contains(BANNER));
        assert_eq!(report.rows.len(), 4);
    }
}
