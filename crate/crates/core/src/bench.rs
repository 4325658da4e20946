//! Holdout benchmark over methods, thresholds and classifiers.
//!
//! Each (holdout, trial) pair draws one stratified split with seed
//! `seed + trial`, shared by every method, eps, keep and classifier, so cells
//! are compared on identical splits. Pairs run in parallel; results are
//! merged back in configuration order, which keeps the CSV byte-stable.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rayon::prelude::*;

use crate::classify::{holdout_indices, knn1_classify, lda_fit, lda_predict, csr, truncate_core, LabeledDataset};
use crate::config::{Classifier, DatasetSource, ExperimentConfig, KeepSpec, Method};
use crate::error::{Error, Result};
use crate::hooi::{hooi_decompose, hooi_features, hooi_project_test, TuckerOptions};
use crate::ingest::{ingest_dtf, ingest_ppm_dir};
use crate::mps::{features_from_core, mps_decompose, mps_project_test, FeatureMatrix, MpsOptions};
use crate::report::{fmt_num, BenchmarkReport, CellRecord};
use crate::synth::synth_dataset;
use crate::tensor::DenseTensor;

/// Loads or generates the dataset named by the config.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    match &cfg.dataset {
        DatasetSource::Synth(spec) => synth_dataset(spec),
        DatasetSource::Dtf { data, labels } => ingest_dtf(data, labels),
        DatasetSource::Ppm { dir, labels } => ingest_ppm_dir(dir, labels),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellKey {
    method: Method,
    eps_index: usize,
    holdout_index: usize,
    keep_index: usize,
    classifier: Classifier,
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    csr: f64,
    n_features: usize,
    bonds: Vec<usize>,
    wall_ms: f64,
    cost: f64,
}

type TrialResult = std::result::Result<TrialOutcome, String>;

fn cell_keys(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut keys = Vec::new();
    for &method in &cfg.methods {
        for eps_index in 0..cfg.eps.len() {
            for holdout_index in 0..cfg.holdout.len() {
                for keep_index in 0..cfg.keep_mps.len() {
                    for &classifier in &cfg.classifiers {
                        keys.push(CellKey {
                            method,
                            eps_index,
                            holdout_index,
                            keep_index,
                            classifier,
                        });
                    }
                }
            }
        }
    }
    keys
}

/// Runs every configured cell on `ds`. Stage failures end up in the cell's
/// `status`; only an invalid configuration or dataset fails the whole run.
pub fn run_benchmark(cfg: &ExperimentConfig, ds: &LabeledDataset) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Empty("dataset".into()));
    }
    let keys = cell_keys(cfg);
    let jobs: Vec<(usize, usize)> = (0..cfg.holdout.len())
        .flat_map(|h| (0..cfg.trials).map(move |t| (h, t)))
        .collect();
    let run = |&(h, t): &(usize, usize)| run_trial(cfg, ds, h, t, &keys);
    let per_job: Vec<Vec<TrialResult>> = if cfg.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };

    // single-writer merge, in configuration order
    let mut by_cell: HashMap<usize, Vec<TrialResult>> = HashMap::new();
    for ((h, _), results) in jobs.iter().zip(per_job) {
        for (ki, r) in results.into_iter().enumerate() {
            if keys[ki].holdout_index == *h {
                by_cell.entry(ki).or_default().push(r);
            }
        }
    }
    let cells = keys
        .iter()
        .enumerate()
        .map(|(ki, key)| aggregate(cfg, key, by_cell.remove(&ki).unwrap_or_default()))
        .collect();
    Ok(BenchmarkReport { cells })
}

fn aggregate(cfg: &ExperimentConfig, key: &CellKey, results: Vec<TrialResult>) -> CellRecord {
    let keep = match key.method {
        Method::Mps => &cfg.keep_mps[key.keep_index],
        Method::Hooi => &cfg.keep_hooi[key.keep_index],
    };
    let mut record = CellRecord {
        method: key.method,
        eps: cfg.eps[key.eps_index],
        holdout: cfg.holdout[key.holdout_index],
        keep_dims: keep.label(),
        classifier: key.classifier,
        csr_trials: Vec::new(),
        n_features_trials: Vec::new(),
        bond_dims: String::new(),
        wall_ms: None,
        cost_estimate: None,
        status: "ok".into(),
    };
    let mut ok = Vec::with_capacity(results.len());
    for (trial, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => ok.push(o),
            Err(msg) => {
                record.status = format!("error (trial {trial}): {msg}");
                return record;
            }
        }
    }
    if ok.is_empty() {
        record.status = "error: no trials ran".into();
        return record;
    }
    let n = ok.len() as f64;
    record.csr_trials = ok.iter().map(|o| o.csr).collect();
    record.n_features_trials = ok.iter().map(|o| o.n_features).collect();
    let width = ok[0].bonds.len();
    record.bond_dims = (0..width)
        .map(|j| fmt_num(ok.iter().map(|o| o.bonds.get(j).copied().unwrap_or(0) as f64).sum::<f64>() / n))
        .collect::<Vec<_>>()
        .join("-");
    if cfg.timing {
        record.wall_ms = Some(ok.iter().map(|o| o.wall_ms).sum::<f64>() / n);
    }
    record.cost_estimate = Some(ok.iter().map(|o| o.cost).sum::<f64>() / n);
    record
}

/// Train and test features of one decomposition, plus its profile.
struct Extracted {
    train_core: DenseTensor,
    test_core: DenseTensor,
    bonds: Vec<usize>,
    wall_ms: f64,
    cost: f64,
}

fn run_trial(
    cfg: &ExperimentConfig,
    ds: &LabeledDataset,
    holdout_index: usize,
    trial: usize,
    keys: &[CellKey],
) -> Vec<TrialResult> {
    let r = cfg.holdout[holdout_index];
    let split = match holdout_indices(ds.labels(), ds.class_count(), r, cfg.seed.wrapping_add(trial as u64)) {
        Ok(s) => s,
        Err(e) => return keys.iter().map(|_| Err(e.to_string())).collect(),
    };
    let train = ds.subset(&split.train);
    let test = ds.subset(&split.test);
    let stacks = train.stack().and_then(|tr| {
        if cfg.audit {
            audit_isolation(&train, &test, &tr)?;
        }
        Ok((tr, test.stack()?))
    });
    let (train_stack, test_stack) = match stacks {
        Ok(s) => s,
        Err(e) => return keys.iter().map(|_| Err(e.to_string())).collect(),
    };

    let mut extracted: HashMap<(Method, usize), std::result::Result<Extracted, String>> = HashMap::new();
    keys.iter()
        .map(|key| {
            if key.holdout_index != holdout_index {
                return Err("not run".into());
            }
            let ex = extracted
                .entry((key.method, key.eps_index))
                .or_insert_with(|| {
                    extract(cfg, key.method, cfg.eps[key.eps_index], &train_stack, &test_stack)
                        .map_err(|e| e.to_string())
                })
                .as_ref()
                .map_err(Clone::clone)?;
            let keep = match key.method {
                Method::Mps => &cfg.keep_mps[key.keep_index],
                Method::Hooi => &cfg.keep_hooi[key.keep_index],
            };
            classify_cell(cfg, key, keep, ex, &train, &test).map_err(|e| e.to_string())
        })
        .collect()
}

fn extract(
    cfg: &ExperimentConfig,
    method: Method,
    eps: f64,
    train_stack: &DenseTensor,
    test_stack: &DenseTensor,
) -> Result<Extracted> {
    let start = Instant::now();
    match method {
        Method::Mps => {
            let mut opts = MpsOptions::new(eps);
            if let Some(n) = cfg.core_position {
                opts = opts.core_position(n);
            }
            if let Some(o) = &cfg.mode_order {
                opts = opts.mode_order(o.clone());
            }
            let model = mps_decompose(train_stack, &opts)?;
            let test_core = mps_project_test(&model, test_stack)?;
            Ok(Extracted {
                train_core: model.core().clone(),
                test_core,
                bonds: model.bond_dims().to_vec(),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                cost: model.cost_estimate().dominant_ops as f64,
            })
        }
        Method::Hooi => {
            let opts = TuckerOptions::new(eps).max_iters(cfg.max_iters).tol(cfg.tol);
            let model = hooi_decompose(train_stack, &opts)?;
            let test_core = hooi_project_test(&model, test_stack)?;
            Ok(Extracted {
                train_core: model.core().clone(),
                test_core,
                bonds: model.ranks(),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                cost: model.cost_estimate(),
            })
        }
    }
}

fn classify_cell(
    cfg: &ExperimentConfig,
    key: &CellKey,
    keep: &KeepSpec,
    ex: &Extracted,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<TrialOutcome> {
    let (train_core, test_core) = match keep {
        KeepSpec::Full => (ex.train_core.clone(), ex.test_core.clone()),
        KeepSpec::Dims(dims) => {
            // bond dimensions vary between splits, so clamp to what this one has
            let extents = &ex.train_core.shape()[..ex.train_core.order() - 1];
            if dims.len() != extents.len() {
                return Err(Error::DimensionMismatch(format!(
                    "keep {} for a core with {} feature modes",
                    keep.label(),
                    extents.len()
                )));
            }
            let k: Vec<usize> = dims.iter().zip(extents).map(|(&d, &e)| d.min(e)).collect();
            (truncate_core(&ex.train_core, &k)?, truncate_core(&ex.test_core, &k)?)
        }
    };
    let features = |core: &DenseTensor| match key.method {
        Method::Mps => features_from_core(core, 3),
        Method::Hooi => hooi_features(core),
    };
    let train_f: FeatureMatrix = features(&train_core)?.with_labels(train.labels().to_vec())?;
    let test_f = features(&test_core)?;
    let predicted = match key.classifier {
        Classifier::Knn1 => knn1_classify(&train_f, &test_f)?,
        Classifier::Lda => lda_predict(&lda_fit(&train_f, cfg.ridge)?, &test_f)?,
    };
    Ok(TrialOutcome {
        csr: csr(&predicted, test.labels())?,
        n_features: train_f.cols(),
        bonds: ex.bonds.clone(),
        wall_ms: ex.wall_ms,
        cost: ex.cost,
    })
}

/// Checks that the training stack is built from training samples only:
/// train and test ids are disjoint and slice `q` of the stack hashes to
/// training sample `q`.
pub fn audit_isolation(train: &LabeledDataset, test: &LabeledDataset, train_stack: &DenseTensor) -> Result<()> {
    let test_ids: BTreeSet<&String> = test.ids().iter().collect();
    if let Some(id) = train.ids().iter().find(|id| test_ids.contains(id)) {
        return Err(Error::InvalidParameter(format!("sample {id} is in both train and test")));
    }
    let k = *train_stack.shape().last().unwrap_or(&0);
    if k != train.len() {
        return Err(Error::InvalidParameter(format!(
            "training stack holds {k} samples, expected {}",
            train.len()
        )));
    }
    for (q, s) in train.samples().iter().enumerate() {
        if digest(&train_stack.last_mode_slice(q)) != digest(s) {
            return Err(Error::InvalidParameter(format!(
                "stack slice {q} is not training sample {}",
                train.ids()[q]
            )));
        }
    }
    Ok(())
}

fn digest(t: &DenseTensor) -> u64 {
    let mut h = DefaultHasher::new();
    t.shape().hash(&mut h);
    for v in t.data() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}
