//! Holdout splitting, core truncation, KNN-1 and LDA classifiers, and
//! classification success rate (CSR) statistics.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::mps::FeatureMatrix;
use crate::tensor::{concat_along_new_last_mode, DenseTensor};

/// Samples of one common shape with class ids in `0..class_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<DenseTensor>,
    labels: Vec<usize>,
    ids: Vec<String>,
    class_count: usize,
}

impl LabeledDataset {
    /// Sample ids default to the decimal sample index.
    pub fn new(samples: Vec<DenseTensor>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let ids = (0..samples.len()).map(|i| i.to_string()).collect();
        Self::with_ids(samples, labels, ids, class_count)
    }

    pub fn with_ids(
        samples: Vec<DenseTensor>,
        labels: Vec<usize>,
        ids: Vec<String>,
        class_count: usize,
    ) -> Result<Self> {
        if samples.len() != labels.len() || samples.len() != ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples, {} labels, {} ids",
                samples.len(),
                labels.len(),
                ids.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= class_count) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} not below class count {class_count}"
            )));
        }
        if let Some(first) = samples.first() {
            if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| s.shape() != first.shape()) {
                return Err(Error::DimensionMismatch(format!(
                    "sample {} has shape {:?}, expected {:?}",
                    ids[i],
                    s.shape(),
                    first.shape()
                )));
            }
        }
        Ok(Self {
            samples,
            labels,
            ids,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[DenseTensor] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn sample_shape(&self) -> Option<&[usize]> {
        self.samples.first().map(DenseTensor::shape)
    }

    /// Subset in the given index order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            class_count: self.class_count,
        }
    }

    /// All samples along a trailing mode.
    pub fn stack(&self) -> Result<DenseTensor> {
        concat_along_new_last_mode(&self.samples)
    }

    /// Raw samples flattened to one feature row each.
    pub fn raw_features(&self) -> Result<FeatureMatrix> {
        let cols = self.samples.first().map_or(0, DenseTensor::len);
        let values = self.samples.iter().flat_map(|s| s.data().iter().copied()).collect();
        FeatureMatrix::new(self.len(), cols, values)?.with_labels(self.labels.clone())
    }
}

/// Train and test index sets, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Class-stratified holdout split where `r` is the fraction of each class
/// sent to the test set (rounded to nearest, half away from zero).
pub fn holdout_indices(labels: &[usize], class_count: usize, r: f64, seed: u64) -> Result<Split> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("holdout ratio {r} outside (0, 1)")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..class_count {
        let Some(members) = by_class.get_mut(&c) else {
            continue;
        };
        members.shuffle(&mut rng);
        let n_test = (r * members.len() as f64).round() as usize;
        if n_test >= members.len() {
            return Err(Error::EmptyTrainingClass(c));
        }
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

pub fn holdout_split(ds: &LabeledDataset, r: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let split = holdout_indices(&ds.labels, ds.class_count, r, seed)?;
    Ok((ds.subset(&split.train), ds.subset(&split.test)))
}

/// Keeps the leading `keep[m]` indices of every non-sample mode of a core
/// whose sample mode is last.
pub fn truncate_core(core: &DenseTensor, keep: &[usize]) -> Result<DenseTensor> {
    if keep.len() + 1 != core.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} keep extents for a core of order {}",
            keep.len(),
            core.order()
        )));
    }
    let mut full = keep.to_vec();
    full.push(*core.shape().last().expect("order >= 1"));
    core.leading_block(&full)
}

/// Label of the Euclidean-nearest training row; ties go to the lowest
/// training index.
pub fn knn1_classify(train: &FeatureMatrix, test: &FeatureMatrix) -> Result<Vec<usize>> {
    let labels = train
        .labels()
        .ok_or_else(|| Error::InvalidParameter("training features carry no labels".into()))?;
    if train.rows() == 0 {
        return Err(Error::Empty("training set".into()));
    }
    if train.cols() != test.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} training features vs {} test features",
            train.cols(),
            test.cols()
        )));
    }
    Ok((0..test.rows())
        .map(|q| {
            let x = test.row(q);
            let mut best = (f64::INFINITY, 0usize);
            for p in 0..train.rows() {
                let d: f64 = train.row(p).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, p);
                }
            }
            labels[best.1]
        })
        .collect())
}

/// Linear discriminant model with a shared (pooled) covariance.
#[derive(Debug, Clone)]
pub struct LdaModel {
    classes: Vec<usize>,
    /// Column `c` is `S^{-1} mu_c`.
    weights: Matrix,
    /// `-1/2 mu_c^T S^{-1} mu_c + ln prior_c`.
    offsets: Vec<f64>,
    ridge: f64,
}

impl LdaModel {
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Discriminant scores of one feature row, in `classes()` order.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes.len())
            .map(|c| {
                let w = self.weights.col(c);
                w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offsets[c]
            })
            .collect()
    }
}

/// Fits class means and the pooled within-class covariance
/// `S_W = sum_c sum_{x in c} (x - mu_c)(x - mu_c)^T / (n - C)`, regularized
/// by `ridge * I`. `ridge = None` uses `1e-6 * trace(S_W) / dim`.
pub fn lda_fit(train: &FeatureMatrix, ridge: Option<f64>) -> Result<LdaModel> {
    let labels = train
        .labels()
        .ok_or_else(|| Error::InvalidParameter("training features carry no labels".into()))?;
    let dim = train.cols();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "LDA needs at least 2 classes, got {}",
            groups.len()
        )));
    }
    if let Some(r) = ridge {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter(format!("ridge = {r}")));
        }
    }
    let n = train.rows();
    let classes: Vec<usize> = groups.keys().copied().collect();
    let mut means = Matrix::zeros(dim, classes.len());
    let mut scatter = Matrix::zeros(dim, dim);
    for (c, members) in groups.values().enumerate() {
        let mu = means.col_mut(c);
        for &i in members {
            for (m, v) in mu.iter_mut().zip(train.row(i)) {
                *m += v;
            }
        }
        let inv = 1.0 / members.len() as f64;
        mu.iter_mut().for_each(|m| *m *= inv);
        let mu = means.col(c).to_vec();
        for &i in members {
            let d: Vec<f64> = train.row(i).iter().zip(&mu).map(|(x, m)| x - m).collect();
            for b in 0..dim {
                if d[b] == 0.0 {
                    continue;
                }
                let col = scatter.col_mut(b);
                for a in 0..dim {
                    col[a] += d[a] * d[b];
                }
            }
        }
    }
    let dof = if n > classes.len() { n - classes.len() } else { 1 };
    let inv_dof = 1.0 / dof as f64;
    let mut cov = Matrix::from_col_major(dim, dim, scatter.as_slice().iter().map(|v| v * inv_dof).collect());
    let ridge = ridge.unwrap_or_else(|| {
        let trace: f64 = (0..dim).map(|i| cov.get(i, i)).sum();
        1e-6 * trace / dim.max(1) as f64
    });
    for i in 0..dim {
        let v = cov.get(i, i);
        cov.set(i, i, v + ridge);
    }
    let weights = cholesky_solve(&cov, &means).ok_or(Error::SingularScatter)?;
    let offsets = groups
        .values()
        .enumerate()
        .map(|(c, members)| {
            let quad: f64 = weights.col(c).iter().zip(means.col(c)).map(|(a, b)| a * b).sum();
            -0.5 * quad + (members.len() as f64 / n as f64).ln()
        })
        .collect();
    Ok(LdaModel {
        classes,
        weights,
        offsets,
        ridge,
    })
}

/// Class with the largest discriminant score; ties go to the smaller class id.
pub fn lda_predict(model: &LdaModel, test: &FeatureMatrix) -> Result<Vec<usize>> {
    if test.cols() != model.weights.rows() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} features, test has {}",
            model.weights.rows(),
            test.cols()
        )));
    }
    Ok((0..test.rows())
        .map(|q| {
            let scores = model.scores(test.row(q));
            let mut best = 0;
            for (c, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = c;
                }
            }
            model.classes[best]
        })
        .collect())
}

/// Percentage of matching labels. An empty pair scores 100.
pub fn csr(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Ok(100.0);
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(100.0 * hits as f64 / truth.len() as f64)
}

/// Mean and sample standard deviation of per-trial CSR values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsrStat {
    pub mean: f64,
    pub stddev: f64,
    pub trials: usize,
}

impl CsrStat {
    pub fn aggregate(values: &[f64]) -> CsrStat {
        let (mean, stddev) = mean_std(values);
        CsrStat {
            mean,
            stddev,
            trials: values.len(),
        }
    }
}

/// Mean and sample (n - 1) standard deviation; zero spread for n < 2.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
