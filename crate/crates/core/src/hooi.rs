//! Tucker decomposition by HOSVD initialization followed by higher-order
//! orthogonal iteration (alternating least squares under orthonormality).
//!
//! The stack `X` (`I_1 x ... x I_N x K`) is approximated as
//! `G x_1 A(1) x_2 ... x_N A(N)` with orthonormal-column `A(j)` of shape
//! `I_j x D_j`. The sample mode is never factored. Ranks `D_j` come from
//! the threshold rule on the HOSVD unfoldings and stay fixed during ALS.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::{
    expect_magic, read_dtf, read_f64, read_u32, read_u64, write_dtf, write_f64, write_u32,
    write_u64,
};
use crate::linalg::{check_eps, svd_economy, truncation_rank, Matrix, TruncationCriterion};
use crate::mps::{features_from_core, FeatureMatrix};
use crate::tensor::{matricize_mode_n, mode_n_product, DenseTensor};

pub const TKR_MAGIC: &[u8; 4] = b"TKR1";

#[derive(Debug, Clone, PartialEq)]
pub struct TuckerOptions {
    pub eps: f64,
    pub max_iters: usize,
    /// Stop once the fit improves by less than this between rounds.
    pub tol: f64,
    pub criterion: TruncationCriterion,
}

impl TuckerOptions {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            max_iters: 50,
            tol: 1e-6,
            criterion: TruncationCriterion::Mass,
        }
    }

    pub fn max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    factors: Vec<Matrix>,
    core: DenseTensor,
    eps: f64,
    iterations_run: usize,
    objective_trace: Vec<f64>,
}

impl TuckerModel {
    /// `A(1)..A(N)`, each `I_j x D_j` with orthonormal columns.
    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    /// Core of shape `D_1 x ... x D_N x K`.
    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::cols).collect()
    }

    pub fn sample_shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Fit `||G||_F / ||X||_F`: entry 0 after HOSVD, entry `i` after ALS
    /// round `i`.
    pub fn objective_trace(&self) -> &[f64] {
        &self.objective_trace
    }

    pub fn n_features(&self) -> usize {
        self.ranks().iter().product()
    }

    pub fn parameter_count(&self) -> usize {
        self.factors.iter().map(|a| a.rows() * a.cols()).sum::<usize>() + self.core.len()
    }

    /// HOSVD cost `sum_j I_j * |X|` plus `iterations_run` rounds of the
    /// per-iteration estimate, using geometric-mean extent and rank.
    pub fn cost_estimate(&self) -> f64 {
        let shape = self.sample_shape();
        let ranks = self.ranks();
        let k = *self.core.shape().last().expect("sample mode") as f64;
        let total = shape.iter().map(|&e| e as f64).product::<f64>() * k;
        let init: f64 = shape.iter().map(|&e| e as f64 * total).sum();
        let n = shape.len() as f64;
        let gm = |v: &[usize]| (v.iter().map(|&x| (x as f64).ln()).sum::<f64>() / n).exp();
        let (i, d) = (gm(&shape), gm(&ranks));
        let per_iter = k * d * i.powf(n)
            + n * k * i * d.powf(2.0 * (n - 1.0))
            + n * k * d.powf(3.0 * (n - 1.0));
        init + self.iterations_run as f64 * per_iter
    }
}

/// Leading left singular vectors of every non-sample unfolding, with ranks
/// chosen by the threshold rule (at least 1).
pub fn hosvd_init(stack: &DenseTensor, eps: f64) -> Result<Vec<Matrix>> {
    hosvd_init_with(stack, eps, TruncationCriterion::Mass)
}

pub fn hosvd_init_with(
    stack: &DenseTensor,
    eps: f64,
    criterion: TruncationCriterion,
) -> Result<Vec<Matrix>> {
    check_eps(eps)?;
    check_stack(stack)?;
    (1..stack.order())
        .map(|j| {
            let svd = svd_economy(&matricize_mode_n(stack, j)?.to_matrix())?;
            let k = truncation_rank(&svd.s, eps, criterion)?.max(1);
            Ok(svd.u.leading_cols(k))
        })
        .collect()
}

/// HOSVD-initialized HOOI. Hitting `max_iters` without meeting `tol` is not
/// an error; the trace shows where it stopped.
pub fn hooi_decompose(stack: &DenseTensor, opts: &TuckerOptions) -> Result<TuckerModel> {
    if opts.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    if opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(Error::InvalidParameter(format!("tol = {}", opts.tol)));
    }
    let mut factors = hosvd_init_with(stack, opts.eps, opts.criterion)?;
    let n_modes = factors.len();
    let norm = stack.frobenius_norm();
    let fit_of = |core: &DenseTensor| if norm > 0.0 { core.frobenius_norm() / norm } else { 1.0 };

    let mut core = project(stack, &factors)?;
    let mut trace = vec![fit_of(&core)];
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        for j in 0..n_modes {
            let mut y = stack.clone();
            for (m, a) in factors.iter().enumerate() {
                if m != j {
                    y = mode_n_product(&y, &a.transpose(), m + 1)?;
                }
            }
            let k = factors[j].cols();
            let svd = svd_economy(&matricize_mode_n(&y, j + 1)?.to_matrix())?;
            factors[j] = svd.u.leading_cols(k);
            if j + 1 == n_modes {
                core = mode_n_product(&y, &factors[j].transpose(), j + 1)?;
            }
        }
        let fit = fit_of(&core);
        let prev = *trace.last().expect("initial fit");
        trace.push(fit);
        if (fit - prev).abs() < opts.tol {
            break;
        }
    }

    Ok(TuckerModel {
        factors,
        core,
        eps: opts.eps,
        iterations_run: iterations,
        objective_trace: trace,
    })
}

/// `Y x_1 A(1)^T ... x_N A(N)^T`: reduced features of each test sample.
pub fn hooi_project_test(model: &TuckerModel, test_stack: &DenseTensor) -> Result<DenseTensor> {
    let shape = model.sample_shape();
    if test_stack.order() != shape.len() + 1 || test_stack.shape()[..shape.len()] != shape[..] {
        return Err(Error::DimensionMismatch(format!(
            "test stack {:?} does not match training samples {shape:?}",
            test_stack.shape()
        )));
    }
    project(test_stack, &model.factors)
}

/// Flattens every non-sample mode: `N_f = prod D_j`.
pub fn hooi_features(core: &DenseTensor) -> Result<FeatureMatrix> {
    features_from_core(core, core.order())
}

/// Per-iteration cost `K D I^N + N K I D^(2(N-1)) + N K D^(3(N-1))` under
/// uniform extents `I` and ranks `D`.
pub fn hooi_cost_estimate(i: u64, delta: u64, n: u32, k: u64) -> u128 {
    let (i, d, k) = (i as u128, delta as u128, k as u128);
    let nn = n as u128;
    let e = n.saturating_sub(1);
    k * d * i.pow(n) + nn * k * i * d.pow(2 * e) + nn * k * d.pow(3 * e)
}

/// Stored scalars of a uniform Tucker model: `N I D + K D^N`.
pub fn tucker_parameter_count(i: u64, delta: u64, n: u32, k: u64) -> u128 {
    let (i, d, k) = (i as u128, delta as u128, k as u128);
    n as u128 * i * d + k * d.pow(n)
}

fn project(stack: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let mut y = stack.clone();
    for (m, a) in factors.iter().enumerate() {
        y = mode_n_product(&y, &a.transpose(), m + 1)?;
    }
    Ok(y)
}

fn check_stack(stack: &DenseTensor) -> Result<()> {
    if stack.order() < 2 {
        return Err(Error::InvalidShape(format!(
            "stack needs a sample mode and at least one data mode, got order {}",
            stack.order()
        )));
    }
    Ok(())
}

impl TuckerModel {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(TKR_MAGIC)?;
        write_u32(w, self.factors.len() as u32)?;
        for r in self.ranks() {
            write_u64(w, r as u64)?;
        }
        write_f64(w, self.eps)?;
        write_u32(w, self.iterations_run as u32)?;
        write_u32(w, self.objective_trace.len() as u32)?;
        for &f in &self.objective_trace {
            write_f64(w, f)?;
        }
        for a in &self.factors {
            let t = DenseTensor::new(vec![a.rows(), a.cols()], a.as_slice().to_vec())?;
            write_dtf(w, &t)?;
        }
        write_dtf(w, &self.core)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        expect_magic(r, TKR_MAGIC)?;
        let n = read_u32(r)? as usize;
        if n == 0 || n > 64 {
            return Err(Error::Format(format!("bad mode count {n}")));
        }
        let ranks = (0..n)
            .map(|_| read_u64(r).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let eps = read_f64(r)?;
        let iterations_run = read_u32(r)? as usize;
        let nt = read_u32(r)? as usize;
        if nt != iterations_run + 1 {
            return Err(Error::Format("trace length disagrees with iterations".into()));
        }
        let objective_trace = (0..nt).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
        let mut factors = Vec::with_capacity(n);
        for &rank in &ranks {
            let t = read_dtf(r)?;
            if t.order() != 2 || t.shape()[1] != rank {
                return Err(Error::Format(format!(
                    "factor of shape {:?} for rank {rank}",
                    t.shape()
                )));
            }
            let rows = t.shape()[0];
            factors.push(Matrix::from_col_major(rows, rank, t.into_data()));
        }
        let core = read_dtf(r)?;
        if core.order() != n + 1 || core.shape()[..n] != ranks[..] {
            return Err(Error::Format(format!(
                "core shape {:?} disagrees with ranks {ranks:?}",
                core.shape()
            )));
        }
        Ok(TuckerModel {
            factors,
            core,
            eps,
            iterations_run,
            objective_trace,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
