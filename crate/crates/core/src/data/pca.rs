//! PCA by exact Jacobi eigendecomposition of the d × d sample covariance.
//!
//! Dimensions stay small here (a few hundred at most), so the dense
//! O(d³)-per-sweep Jacobi iteration is plenty and keeps results
//! deterministic across platforms. Eigenvector signs follow a fixed
//! convention: the largest-magnitude coordinate is made positive.

use crate::error::{Error, Result};

use super::LabeledDataset;

/// A fitted projection: feature means, the top eigenvectors (rows, length d)
/// and the corresponding component variances in non-increasing order.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    /// Number of requested components whose variance is numerically zero
    /// (rank deficiency — they are retained, padded with zero variance).
    pub deficient_components: usize,
}

impl PcaModel {
    pub fn project_row(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|comp| {
                comp.iter()
                    .zip(row)
                    .zip(&self.mean)
                    .map(|((c, x), m)| c * (x - m))
                    .sum()
            })
            .collect()
    }

    /// Maps a projected row back into the original feature space.
    pub fn reconstruct_row(&self, z: &[f64]) -> Vec<f64> {
        let d = self.mean.len();
        let mut out = self.mean.clone();
        for (zi, comp) in z.iter().zip(&self.components) {
            for j in 0..d {
                out[j] += zi * comp[j];
            }
        }
        out
    }
}

/// Reduces a dataset to `target_dims` principal components. Returns the
/// projected dataset, the fitted model, and per-component variances (which
/// double as feature-importance scores for the projected features).
pub fn pca_reduce(
    data: &LabeledDataset,
    target_dims: usize,
) -> Result<(LabeledDataset, PcaModel)> {
    let n = data.len();
    let d = data.dim();
    if target_dims == 0 || target_dims > d.min(n) {
        return Err(Error::InvalidConfig(format!(
            "target_dims must be in 1..=min(n, d) = {}, got {target_dims}",
            d.min(n)
        )));
    }

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(data.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    // covariance, sample (n−1) denominator
    let mut cov = vec![0.0; d * d];
    for i in 0..n {
        let row = data.row(i);
        for a in 0..d {
            let ca = row[a] - mean[a];
            for b in a..d {
                cov[a * d + b] += ca * (row[b] - mean[b]);
            }
        }
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    for a in 0..d {
        for b in a..d {
            cov[a * d + b] /= denom;
            cov[b * d + a] = cov[a * d + b];
        }
    }

    let (mut eigvals, mut eigvecs) = jacobi_eigen(&cov, d);

    // sort descending, ties by original index for determinism
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigvals[b].total_cmp(&eigvals[a]).then(a.cmp(&b)));
    eigvals = order.iter().map(|&i| eigvals[i].max(0.0)).collect();
    eigvecs = order.iter().map(|&i| eigvecs[i].clone()).collect();

    // sign convention: largest-|coordinate| positive
    for vec in &mut eigvecs {
        let (mut best, mut best_abs) = (0usize, 0.0f64);
        for (j, &v) in vec.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = j;
            }
        }
        if vec[best] < 0.0 {
            for v in vec.iter_mut() {
                *v = -*v;
            }
        }
    }

    let scale = eigvals.first().copied().unwrap_or(0.0).max(1.0);
    let deficient = eigvals[..target_dims]
        .iter()
        .filter(|&&v| v <= scale * 1e-12)
        .count();

    let model = PcaModel {
        mean,
        components: eigvecs[..target_dims].to_vec(),
        variances: eigvals[..target_dims].to_vec(),
        deficient_components: deficient,
    };

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        rows.push(model.project_row(data.row(i)));
    }
    let names = (0..target_dims).map(|i| format!("pc{i}")).collect();
    let mut projected = LabeledDataset::from_rows(rows, data.labels().to_vec())?;
    projected.feature_names = Some(names);
    Ok((projected, model))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns (eigenvalues, eigenvectors as rows).
fn jacobi_eigen(matrix: &[f64], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                s += a[p * d + q] * a[p * d + q];
            }
        }
        s
    };
    let scale: f64 = (0..d).map(|i| matrix[i * d + i].abs()).fold(0.0, f64::max).max(1e-300);

    for _sweep in 0..100 {
        if off(&a) <= (scale * 1e-15).powi(2) * (d * d) as f64 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() <= scale * 1e-300 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vpk = v[p * d + k];
                    let vqk = v[q * d + k];
                    v[p * d + k] = c * vpk - s * vqk;
                    v[q * d + k] = s * vpk + c * vqk;
                }
            }
        }
    }

    let eigvals: Vec<f64> = (0..d).map(|i| a[i * d + i]).collect();
    let eigvecs: Vec<Vec<f64>> = (0..d).map(|i| v[i * d..(i + 1) * d].to_vec()).collect();
    (eigvals, eigvecs)
}
