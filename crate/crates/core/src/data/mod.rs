//! Datasets: ingestion, splitting, scaling, PCA reduction and synthetic
//! generation.

mod io;
mod pca;
mod synth;

pub use io::{
    load_csv, load_dataset, load_sparse, load_sparse_with_dims, save_csv, save_sparse, DataFormat,
};
pub use pca::{pca_reduce, PcaModel};
pub use synth::{contiguous_feature_blocks, synth_generate, SynthData, SynthSpec};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A dense dataset of n samples with d real features and labels in {−1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: Vec<f64>, // row-major n × d
    y: Vec<f64>,
    n: usize,
    d: usize,
    pub feature_names: Option<Vec<String>>,
}

impl LabeledDataset {
    /// Builds a dataset from rows, validating shape and labels.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidConfig("dataset must be nonempty".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let d = rows[0].len();
        let mut x = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidConfig(format!("non-finite feature in row {i}")));
            }
            x.extend_from_slice(row);
        }
        for (i, &l) in labels.iter().enumerate() {
            if l != 1.0 && l != -1.0 {
                return Err(Error::InvalidConfig(format!(
                    "label at row {i} must be -1 or +1, got {l}"
                )));
            }
        }
        Ok(Self {
            x,
            y: labels,
            n: rows.len(),
            d,
            feature_names: None,
        })
    }

    pub(crate) fn from_flat(x: Vec<f64>, y: Vec<f64>, n: usize, d: usize) -> Self {
        debug_assert_eq!(x.len(), n * d);
        debug_assert_eq!(y.len(), n);
        Self {
            x,
            y,
            n,
            d,
            feature_names: None,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    /// Largest Euclidean row norm.
    pub fn max_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| norm(self.row(i)))
            .fold(0.0, f64::max)
    }

    /// The subset of samples at the given indices, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut x = Vec::with_capacity(idx.len() * self.d);
        let mut y = Vec::with_capacity(idx.len());
        for &i in idx {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Self {
            x,
            y,
            n: idx.len(),
            d: self.d,
            feature_names: self.feature_names.clone(),
        }
    }

    /// A copy keeping only the feature columns in `cols`, in that order.
    pub fn restrict_features(&self, cols: &[usize]) -> Self {
        let mut x = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            let row = self.row(i);
            for &c in cols {
                x.push(row[c]);
            }
        }
        let feature_names = self
            .feature_names
            .as_ref()
            .map(|names| cols.iter().map(|&c| names[c].clone()).collect());
        Self {
            x,
            y: self.y.clone(),
            n: self.n,
            d: cols.len(),
            feature_names,
        }
    }

    /// A copy with every feature divided by `divisor`.
    pub fn scaled_by(&self, divisor: f64) -> Self {
        assert!(divisor > 0.0 && divisor.is_finite());
        Self {
            x: self.x.iter().map(|v| v / divisor).collect(),
            y: self.y.clone(),
            n: self.n,
            d: self.d,
            feature_names: self.feature_names.clone(),
        }
    }

    /// A copy with every feature set to zero (zero-importance groups).
    pub fn zeroed(&self) -> Self {
        Self {
            x: vec![0.0; self.x.len()],
            y: self.y.clone(),
            n: self.n,
            d: self.d,
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.n).map(move |i| (self.row(i), self.y[i]))
    }

    /// Per-column variance (n − 1 denominator), e.g. as importance scores.
    pub fn column_variances(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.d];
        for i in 0..self.n {
            for (m, v) in means.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= self.n as f64;
        }
        let mut vars = vec![0.0; self.d];
        for i in 0..self.n {
            for ((s, v), m) in vars.iter_mut().zip(self.row(i)).zip(&means) {
                let c = v - m;
                *s += c * c;
            }
        }
        let denom = if self.n > 1 { (self.n - 1) as f64 } else { 1.0 };
        for s in &mut vars {
            *s /= denom;
        }
        vars
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales a dataset into the ball of the given radius with one global divisor
/// s = max(1, max_norm / radius). Data already inside the ball is left alone
/// (s = 1): the privacy analysis only needs the upper bound.
pub fn scale_to_ball(data: &LabeledDataset, radius: f64) -> Result<(LabeledDataset, f64)> {
    if radius <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "scaling radius must be positive, got {radius}"
        )));
    }
    let s = (data.max_norm() / radius).max(1.0);
    Ok((data.scaled_by(s), s))
}

/// Uniformly random disjoint split: the first side gets round(fraction · n)
/// samples. Errors if either side would be empty.
pub fn split_disjoint(
    data: &LabeledDataset,
    fraction: f64,
    rng: &mut impl Rng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must be in (0,1), got {fraction}"
        )));
    }
    let n = data.len();
    let n_low = (fraction * n as f64).round() as usize;
    if n_low == 0 || n_low == n {
        return Err(Error::EmptySplit);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    Ok((data.subset(&idx[..n_low]), data.subset(&idx[n_low..])))
}

/// Disjoint train/validation/test split with sizes rounded to nearest.
/// A zero fraction yields an empty (zero-row placeholder) side only for the
/// validation set; train and test must be nonempty.
pub fn train_valid_test_split(
    data: &LabeledDataset,
    fractions: (f64, f64, f64),
    rng: &mut impl Rng,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let (tr, va, te) = fractions;
    if tr < 0.0 || va < 0.0 || te < 0.0 || tr + va + te > 1.0 + 1e-12 {
        return Err(Error::InvalidConfig(
            "split fractions must be nonnegative and sum to at most 1".into(),
        ));
    }
    let n = data.len();
    let n_tr = (tr * n as f64).round() as usize;
    let n_va = (va * n as f64).round() as usize;
    let n_te = (te * n as f64).round() as usize;
    if n_tr + n_va + n_te > n {
        return Err(Error::InvalidConfig("split sizes exceed dataset".into()));
    }
    if (tr > 0.0 && n_tr == 0) || (va > 0.0 && n_va == 0) || (te > 0.0 && n_te == 0) {
        return Err(Error::EmptySplit);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let train = data.subset(&idx[..n_tr]);
    let valid = data.subset(&idx[n_tr..n_tr + n_va]);
    let test = data.subset(&idx[n_tr + n_va..n_tr + n_va + n_te]);
    Ok((train, valid, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    fn toy(n: usize, d: usize) -> LabeledDataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..d).map(|j| ((i * d + j) % 7) as f64 * 0.25).collect())
            .collect();
        let labels = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        LabeledDataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn rejects_bad_labels() {
        let err = LabeledDataset::from_rows(vec![vec![1.0]], vec![2.0]);
        assert!(err.is_err());
    }

    #[test]
    fn scale_to_ball_examples() {
        // max norm 2, radius 1 → s = 2
        let d = LabeledDataset::from_rows(vec![vec![2.0], vec![1.0]], vec![1.0, -1.0]).unwrap();
        let (scaled, s) = scale_to_ball(&d, 1.0).unwrap();
        assert_eq!(s, 2.0);
        assert!(scaled.max_norm() <= 1.0);

        // max norm 0.5, radius 1 → s = 1 (no up-scaling)
        let d = LabeledDataset::from_rows(vec![vec![0.5]], vec![1.0]).unwrap();
        let (_, s) = scale_to_ball(&d, 1.0).unwrap();
        assert_eq!(s, 1.0);

        // radius 0.2, max norm 1 → s = 5
        let d = LabeledDataset::from_rows(vec![vec![1.0]], vec![1.0]).unwrap();
        let (scaled, s) = scale_to_ball(&d, 0.2).unwrap();
        assert!((s - 5.0).abs() < 1e-12);
        assert!(scaled.max_norm() <= 0.2 + 1e-15);

        assert!(scale_to_ball(&d, 0.0).is_err());
    }

    #[test]
    fn split_disjoint_half() {
        let data = toy(10, 3);
        let mut rng = rng_from_seed(1);
        let (lo, hi) = split_disjoint(&data, 0.5, &mut rng).unwrap();
        assert_eq!(lo.len(), 5);
        assert_eq!(hi.len(), 5);
    }

    #[test]
    fn split_deterministic_under_seed() {
        let data = toy(20, 2);
        let (a1, b1) = split_disjoint(&data, 0.3, &mut rng_from_seed(9)).unwrap();
        let (a2, b2) = split_disjoint(&data, 0.3, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn tvt_split_sizes() {
        let data = toy(5000, 2);
        let mut rng = rng_from_seed(3);
        let (tr, va, te) = train_valid_test_split(&data, (0.4, 0.2, 0.4), &mut rng).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (2000, 1000, 2000));

        let data = toy(10, 2);
        let (tr, va, te) =
            train_valid_test_split(&data, (0.5, 0.0, 0.5), &mut rng_from_seed(4)).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (5, 0, 5));
    }

    #[test]
    fn tvt_split_disjoint_and_covering() {
        let data = toy(101, 2);
        let mut rng = rng_from_seed(5);
        let (tr, va, te) = train_valid_test_split(&data, (0.6, 0.2, 0.2), &mut rng).unwrap();
        // 60.6→61, 20.2→20, 20.2→20: 101 total
        assert_eq!(tr.len() + va.len() + te.len(), 101);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scale_to_ball_never_upscales(
                norms in proptest::collection::vec(0.001f64..4.0, 1..20),
                radius in 0.05f64..2.0,
            ) {
                let rows: Vec<Vec<f64>> = norms.iter().map(|&v| vec![v]).collect();
                let labels = (0..rows.len())
                    .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
                    .collect();
                let data = LabeledDataset::from_rows(rows, labels).unwrap();
                let (scaled, s) = scale_to_ball(&data, radius).unwrap();
                prop_assert!(s >= 1.0);
                prop_assert!(scaled.max_norm() <= radius.max(data.max_norm()) + 1e-12);
                prop_assert!(scaled.max_norm() <= radius + 1e-12 || s == 1.0);
            }
        }
    }
}
