//! Mixed-canonical matrix product state decomposition of a training stack.
//!
//! A stack `X` of shape `I_1 x ... x I_N x K` (samples on the last mode) is
//! first permuted so the sample mode sits at chain position `n`:
//! `I_1 x ... x I_{n-1} x K x I_n x ... x I_N`. Writing `d_1..d_{N+1}` for
//! the permuted extents, the decomposition is
//!
//! ```text
//! x[i_1 .. k .. i_N] = B(1)[i_1] ... B(n-1)[i_{n-1}] G(n)[k] C(n+1)[i_n] ... C(N+1)[i_N]
//! ```
//!
//! where every `B(j)[i]` and `C(j)[i]` is a `D_{j-1} x D_j` matrix with
//! `D_0 = D_{N+1} = 1`. The left factors satisfy `sum_i B^T B = I`, the right
//! factors `sum_i C C^T = I`, so the core `G(n)` holds the stack expressed in
//! orthonormal coordinates. Each sample's features are the `D_{n-1} x D_n`
//! matrix `G(n)[k]`, flattened.
//!
//! Factors are stored positionally as third-order tensors
//! `D_{j-1} x d_j x D_j`, so a factor tensor reshaped to
//! `(D_{j-1} d_j) x D_j` is the left-orthonormal matrix and reshaped to
//! `D_{j-1} x (d_j D_j)` is the right-orthonormal one.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::{
    expect_magic, read_dtf, read_f64, read_u32, read_u64, write_dtf, write_f64, write_u32,
    write_u64,
};
use crate::linalg::{check_eps, svd_economy, truncation_rank, Matrix, SvdResult, TruncationCriterion};
use crate::tensor::{inverse_permutation, matricize_mode_n, permute_modes, validate_permutation, DenseTensor};

pub const MPS_MAGIC: &[u8; 4] = b"MPS1";

/// Decomposition parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsOptions {
    /// Singular-value mass threshold in (0, 1].
    pub eps: f64,
    /// Chain position (1-based) of the sample mode. Defaults to
    /// `round(N/2)` rounding half up, clamped to at least 1.
    pub core_position: Option<usize>,
    /// Order in which the N sample modes are laid along the chain, as a
    /// 1-based permutation of `1..=N`. Defaults to the identity.
    pub mode_order: Option<Vec<usize>>,
    /// Upper bound on every bond dimension.
    pub max_bond: Option<usize>,
    pub criterion: TruncationCriterion,
}

impl MpsOptions {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            core_position: None,
            mode_order: None,
            max_bond: None,
            criterion: TruncationCriterion::Mass,
        }
    }

    pub fn core_position(mut self, n: usize) -> Self {
        self.core_position = Some(n);
        self
    }

    pub fn mode_order(mut self, order: Vec<usize>) -> Self {
        self.mode_order = Some(order);
        self
    }

    pub fn max_bond(mut self, cap: usize) -> Self {
        self.max_bond = Some(cap);
        self
    }

    pub fn criterion(mut self, c: TruncationCriterion) -> Self {
        self.criterion = c;
        self
    }
}

/// Default core position for `n_modes` sample modes: `round(N/2)`, half up.
pub fn default_core_position(n_modes: usize) -> usize {
    n_modes.div_ceil(2).max(1)
}

/// A training stack in mixed-canonical MPS form.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsModel {
    left: Vec<DenseTensor>,
    core: DenseTensor,
    right: Vec<DenseTensor>,
    bond_dims: Vec<usize>,
    core_position: usize,
    mode_order: Vec<usize>,
    sample_shape: Vec<usize>,
    eps: f64,
    discarded: Vec<f64>,
}

impl MpsModel {
    /// Left factors `B(1)..B(n-1)`, each `D_{j-1} x d_j x D_j`.
    pub fn left_factors(&self) -> &[DenseTensor] {
        &self.left
    }

    /// Right factors `C(n+1)..C(N+1)`, each `D_{j-1} x d_j x D_j`.
    pub fn right_factors(&self) -> &[DenseTensor] {
        &self.right
    }

    /// Training core `G(n)` of shape `D_{n-1} x D_n x K`.
    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    /// `(D_0 = 1, D_1, ..., D_N, D_{N+1} = 1)`.
    pub fn bond_dims(&self) -> &[usize] {
        &self.bond_dims
    }

    pub fn core_position(&self) -> usize {
        self.core_position
    }

    pub fn mode_order(&self) -> &[usize] {
        &self.mode_order
    }

    /// Extents of one sample, in the original (unpermuted) mode order.
    pub fn sample_shape(&self) -> &[usize] {
        &self.sample_shape
    }

    pub fn sample_count(&self) -> usize {
        *self.core.shape().last().expect("core is order 3")
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Squared singular-value mass dropped by each SVD, in sweep order.
    pub fn discarded(&self) -> &[f64] {
        &self.discarded
    }

    pub fn discarded_total(&self) -> f64 {
        self.discarded.iter().sum()
    }

    /// Features per sample, `D_{n-1} D_n`.
    pub fn n_features(&self) -> usize {
        self.bond_dims[self.core_position - 1] * self.bond_dims[self.core_position]
    }

    /// Number of stored scalars across factors and core.
    pub fn parameter_count(&self) -> usize {
        self.left.iter().chain(&self.right).map(DenseTensor::len).sum::<usize>() + self.core.len()
    }

    /// Dominant cost of this decomposition (first chain extent times stack
    /// size) and its actual stored-scalar count.
    pub fn cost_estimate(&self) -> MpsCost {
        let dims = self.chain_dims(self.sample_count());
        let total: u128 = dims.iter().map(|&d| d as u128).product();
        MpsCost {
            dominant_ops: total * dims[0] as u128,
            parameters: self.parameter_count() as u128,
        }
    }

    /// Permutation (1-based) taking a stack with samples last to chain order.
    pub fn stack_permutation(&self) -> Vec<usize> {
        chain_permutation(&self.mode_order, self.core_position)
    }

    /// Extents along the chain, sample position filled with `samples`.
    fn chain_dims(&self, samples: usize) -> Vec<usize> {
        self.stack_permutation()
            .iter()
            .map(|&p| {
                if p == self.sample_shape.len() + 1 {
                    samples
                } else {
                    self.sample_shape[p - 1]
                }
            })
            .collect()
    }

    /// Every chain site as `D_{j-1} x d_j x D_j`, the core in site layout.
    fn sites(&self) -> Vec<DenseTensor> {
        let mut sites = self.left.clone();
        sites.push(permute_modes(&self.core, &[1, 3, 2]).expect("order-3 core"));
        sites.extend(self.right.iter().cloned());
        sites
    }

    /// Maps a tensor in chain order back to samples-last order.
    pub fn unpermute(&self, chained: &DenseTensor) -> Result<DenseTensor> {
        permute_modes(chained, &inverse_permutation(&self.stack_permutation()))
    }
}

fn chain_permutation(mode_order: &[usize], n: usize) -> Vec<usize> {
    let sample = mode_order.len() + 1;
    let mut perm = Vec::with_capacity(sample);
    perm.extend_from_slice(&mode_order[..n - 1]);
    perm.push(sample);
    perm.extend_from_slice(&mode_order[n - 1..]);
    perm
}

struct Truncator<'a> {
    opts: &'a MpsOptions,
    discarded: Vec<f64>,
}

impl Truncator<'_> {
    fn svd(&mut self, w: &Matrix) -> Result<SvdResult> {
        let full = svd_economy(w)?;
        // At least one bond index is kept so the chain stays connected.
        let mut k = truncation_rank(&full.s, self.opts.eps, self.opts.criterion)?.max(1);
        if let Some(cap) = self.opts.max_bond {
            k = k.min(cap);
        }
        self.discarded.push(full.s[k..].iter().map(|s| s * s).sum());
        Ok(full.truncate(k))
    }
}

/// Decomposes a stack (samples on the last mode) into mixed-canonical MPS
/// form with a left-to-right then right-to-left sweep of truncated SVDs.
pub fn mps_decompose(stack: &DenseTensor, opts: &MpsOptions) -> Result<MpsModel> {
    check_eps(opts.eps)?;
    if stack.order() < 2 {
        return Err(Error::InvalidShape(format!(
            "stack needs a sample mode and at least one data mode, got order {}",
            stack.order()
        )));
    }
    let n_modes = stack.order() - 1;
    let n = opts.core_position.unwrap_or_else(|| default_core_position(n_modes));
    if n == 0 || n > n_modes + 1 {
        return Err(Error::InvalidParameter(format!(
            "core position {n} outside 1..={}",
            n_modes + 1
        )));
    }
    let mode_order = match &opts.mode_order {
        Some(o) => {
            validate_permutation(o, n_modes)?;
            o.clone()
        }
        None => (1..=n_modes).collect(),
    };
    if opts.max_bond == Some(0) {
        return Err(Error::InvalidParameter("max_bond must be positive".into()));
    }

    let perm = chain_permutation(&mode_order, n);
    let x = permute_modes(stack, &perm)?;
    let dims = x.shape().to_vec();
    let total_sites = dims.len();
    let mut bonds = vec![1usize; total_sites + 1];
    let mut trunc = Truncator {
        opts,
        discarded: Vec::new(),
    };

    // Left-to-right: W <- S V^T after each split, carrying D_j into the rows.
    let mut w = Matrix::from_col_major(dims[0], x.len() / dims[0], x.into_data());
    let mut left = Vec::with_capacity(n - 1);
    for j in 1..n {
        let len = w.rows() * w.cols();
        let rows = bonds[j - 1] * dims[j - 1];
        w = w.reshape(rows, len / rows);
        let svd = trunc.svd(&w)?;
        let k = svd.rank();
        bonds[j] = k;
        w = svd.svt();
        left.push(DenseTensor::from_parts(
            vec![bonds[j - 1], dims[j - 1], k],
            svd.u.into_vec(),
        ));
    }

    // Right-to-left over (D_{n-1} K ... d_{j-1}) x (d_j D_j): W <- U S.
    let mut right = Vec::with_capacity(total_sites - n);
    for j in (n + 1..=total_sites).rev() {
        let len = w.rows() * w.cols();
        let cols = dims[j - 1] * bonds[j];
        w = w.reshape(len / cols, cols);
        let svd = trunc.svd(&w)?;
        let k = svd.rank();
        bonds[j - 1] = k;
        w = svd.us();
        right.push(DenseTensor::from_parts(
            vec![k, dims[j - 1], bonds[j]],
            svd.vt.into_vec(),
        ));
    }
    right.reverse();

    let samples = dims[n - 1];
    let core_site = DenseTensor::from_parts(vec![bonds[n - 1], samples, bonds[n]], w.into_vec());
    let core = permute_modes(&core_site, &[1, 3, 2])?;

    Ok(MpsModel {
        left,
        core,
        right,
        bond_dims: bonds,
        core_position: n,
        mode_order,
        sample_shape: stack.shape()[..n_modes].to_vec(),
        eps: opts.eps,
        discarded: trunc.discarded,
    })
}

/// Contracts the chain back into a full tensor in chain (permuted) order.
pub fn mps_reconstruct(model: &MpsModel) -> DenseTensor {
    let sites = model.sites();
    let dims = model.chain_dims(model.sample_count());
    let first = &sites[0];
    let mut acc = Matrix::from_col_major(first.shape()[1], first.shape()[2], first.data().to_vec());
    for site in &sites[1..] {
        let s = site.shape();
        let m = Matrix::from_col_major(s[0], s[1] * s[2], site.data().to_vec());
        let prod = acc.matmul(&m);
        let rows = prod.rows() * s[1];
        acc = prod.reshape(rows, s[2]);
    }
    DenseTensor::from_parts(dims, acc.into_vec())
}

/// Projects a test stack (samples last, same sample shape as training) onto
/// the model's common factors, giving a core of shape `D_{n-1} x D_n x L`.
pub fn mps_project_test(model: &MpsModel, test_stack: &DenseTensor) -> Result<DenseTensor> {
    let n_modes = model.sample_shape.len();
    if test_stack.order() != n_modes + 1 || test_stack.shape()[..n_modes] != model.sample_shape[..] {
        return Err(Error::DimensionMismatch(format!(
            "test stack {:?} does not match training samples {:?}",
            test_stack.shape(),
            model.sample_shape
        )));
    }
    let y = permute_modes(test_stack, &model.stack_permutation())?;
    let dims = y.shape().to_vec();
    let bonds = &model.bond_dims;
    let mut w = Matrix::from_col_major(dims[0], y.len() / dims[0], y.into_data());

    for (j, b) in model.left.iter().enumerate() {
        let s = b.shape();
        let len = w.rows() * w.cols();
        let rows = s[0] * s[1];
        w = w.reshape(rows, len / rows);
        let bm = Matrix::from_col_major(rows, s[2], b.data().to_vec());
        w = bm.tr_matmul(&w);
        debug_assert_eq!(w.rows(), bonds[j + 1]);
    }
    for c in model.right.iter().rev() {
        let s = c.shape();
        let len = w.rows() * w.cols();
        let cols = s[1] * s[2];
        w = w.reshape(len / cols, cols);
        let cm = Matrix::from_col_major(s[0], cols, c.data().to_vec());
        w = w.matmul(&cm.transpose());
    }
    let n = model.core_position;
    let site = DenseTensor::from_parts(vec![bonds[n - 1], dims[n - 1], bonds[n]], w.into_vec());
    permute_modes(&site, &[1, 3, 2])
}

/// Samples x features matrix. Row `q` flattens the core slice of sample `q`
/// in first-index-fastest order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl FeatureMatrix {
    /// `values` are row-major.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} feature matrix",
                values.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            values,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                self.rows
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, q: usize) -> &[f64] {
        &self.values[q * self.cols..(q + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Rebuilds the core: `slice_shape` extents followed by the sample mode.
    pub fn to_core(&self, slice_shape: &[usize]) -> Result<DenseTensor> {
        if slice_shape.iter().product::<usize>() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "slice shape {slice_shape:?} does not hold {} features",
                self.cols
            )));
        }
        let mut shape = slice_shape.to_vec();
        shape.push(self.rows);
        DenseTensor::new(shape, self.values.clone())
    }

    /// Applies `f` to every value, keeping labels.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Matricizes a core along its sample mode (1-based): row `q` is slice `q`
/// flattened over the remaining modes.
pub fn features_from_core(core: &DenseTensor, sample_mode: usize) -> Result<FeatureMatrix> {
    let m = matricize_mode_n(core, sample_mode)?;
    let (rows, cols) = (m.rows(), m.cols());
    let mut values = Vec::with_capacity(rows * cols);
    for q in 0..rows {
        for j in 0..cols {
            values.push(m.get(q, j));
        }
    }
    FeatureMatrix::new(rows, cols, values)
}

/// Cost figures for an MPS of a stack with the given sample extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MpsCost {
    /// `K * prod(I_j) * I_1`: the first SVD of the mode-1 unfolding, which
    /// reduces to `K I^(N+1)` for uniform extents.
    pub dominant_ops: u128,
    /// Stored scalars with every interior bond equal to `delta`. With
    /// uniform extents and an interior core this is
    /// `(N-2) I D^2 + K D^2 + 2 I D`.
    pub parameters: u128,
}

/// Cost of decomposing `samples` stacked samples of `sample_shape` with the
/// default core position and every interior bond set to `delta`.
pub fn mps_cost_estimate(sample_shape: &[usize], samples: usize, delta: usize) -> MpsCost {
    let total: u128 = sample_shape.iter().map(|&e| e as u128).product::<u128>() * samples as u128;
    let first = sample_shape.first().copied().unwrap_or(1) as u128;
    let n = default_core_position(sample_shape.len());
    let chain: Vec<usize> = chain_permutation(&(1..=sample_shape.len()).collect::<Vec<_>>(), n)
        .iter()
        .map(|&p| if p > sample_shape.len() { samples } else { sample_shape[p - 1] })
        .collect();
    let sites = chain.len();
    let parameters = chain
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let l = if j == 0 { 1 } else { delta };
            let r = if j + 1 == sites { 1 } else { delta };
            (l * d * r) as u128
        })
        .sum();
    MpsCost {
        dominant_ops: total * first,
        parameters,
    }
}

impl MpsModel {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MPS_MAGIC)?;
        write_u32(w, self.core_position as u32)?;
        write_u32(w, self.bond_dims.len() as u32)?;
        for &d in &self.bond_dims {
            write_u64(w, d as u64)?;
        }
        write_f64(w, self.eps)?;
        write_u32(w, self.mode_order.len() as u32)?;
        for &m in &self.mode_order {
            write_u32(w, m as u32)?;
        }
        write_u32(w, self.sample_shape.len() as u32)?;
        for &e in &self.sample_shape {
            write_u64(w, e as u64)?;
        }
        write_u32(w, self.discarded.len() as u32)?;
        for &d in &self.discarded {
            write_f64(w, d)?;
        }
        for t in &self.left {
            write_dtf(w, t)?;
        }
        write_dtf(w, &self.core)?;
        for t in &self.right {
            write_dtf(w, t)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        expect_magic(r, MPS_MAGIC)?;
        let core_position = read_u32(r)? as usize;
        let nb = read_u32(r)? as usize;
        if !(3..=66).contains(&nb) {
            return Err(Error::Format(format!("bad bond count {nb}")));
        }
        let bond_dims = (0..nb)
            .map(|_| read_u64(r).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let eps = read_f64(r)?;
        let n_modes = read_u32(r)? as usize;
        if n_modes + 2 != nb {
            return Err(Error::Format("mode order length disagrees with bonds".into()));
        }
        let mode_order = (0..n_modes)
            .map(|_| read_u32(r).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        validate_permutation(&mode_order, n_modes).map_err(|e| Error::Format(e.to_string()))?;
        let ns = read_u32(r)? as usize;
        if ns != n_modes {
            return Err(Error::Format("sample shape length disagrees with bonds".into()));
        }
        let sample_shape = (0..ns)
            .map(|_| read_u64(r).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let nd = read_u32(r)? as usize;
        if nd != n_modes {
            return Err(Error::Format("discarded-mass count disagrees with bonds".into()));
        }
        let discarded = (0..nd).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
        if core_position == 0 || core_position > n_modes + 1 {
            return Err(Error::Format(format!("bad core position {core_position}")));
        }
        let left = (1..core_position)
            .map(|_| read_dtf(r))
            .collect::<Result<Vec<_>>>()?;
        let core = read_dtf(r)?;
        let right = (core_position..=n_modes)
            .map(|_| read_dtf(r))
            .collect::<Result<Vec<_>>>()?;
        let model = MpsModel {
            left,
            core,
            right,
            bond_dims,
            core_position,
            mode_order,
            sample_shape,
            eps,
            discarded,
        };
        model.check_shapes()?;
        Ok(model)
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

    /// Checks that factor shapes chain through the bond dimensions.
    fn check_shapes(&self) -> Result<()> {
        let dims = self.chain_dims(*self.core.shape().last().unwrap_or(&0));
        let sites = self.sites();
        if sites.len() != dims.len() || self.bond_dims.len() != dims.len() + 1 {
            return Err(Error::Format("site count disagrees with bonds".into()));
        }
        for (j, site) in sites.iter().enumerate() {
            let want = [self.bond_dims[j], dims[j], self.bond_dims[j + 1]];
            if site.shape() != want {
                return Err(Error::Format(format!(
                    "site {} has shape {:?}, expected {want:?}",
                    j + 1,
                    site.shape()
                )));
            }
        }
        if self.bond_dims[0] != 1 || *self.bond_dims.last().unwrap() != 1 {
            return Err(Error::Format("boundary bonds must be 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(shape.to_vec(), |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn rel_err(a: &DenseTensor, b: &DenseTensor) -> f64 {
        a.axpy(-1.0, b).unwrap().frobenius_norm() / b.frobenius_norm()
    }

    #[test]
    fn default_core_position_rounds_half_up() {
        assert_eq!(default_core_position(1), 1);
        assert_eq!(default_core_position(2), 1);
        assert_eq!(default_core_position(3), 2);
        assert_eq!(default_core_position(4), 2);
        assert_eq!(default_core_position(5), 3);
    }

    #[test]
    fn shapes_and_bonds_chain() {
        let x = random(&[4, 3, 5, 6], 1);
        let m = mps_decompose(&x, &MpsOptions::new(1.0)).unwrap();
        assert_eq!(m.core_position(), 2);
        // chain 4 x K x 3 x 5
        assert_eq!(m.bond_dims(), &[1, 4, 15, 5, 1]);
        assert_eq!(m.left_factors()[0].shape(), &[1, 4, 4]);
        assert_eq!(m.core().shape(), &[4, 15, 6]);
        assert_eq!(m.right_factors()[0].shape(), &[15, 3, 5]);
        assert_eq!(m.right_factors()[1].shape(), &[5, 5, 1]);
        assert_eq!(m.n_features(), 60);
        assert_eq!(m.discarded().len(), 3);
    }

    #[test]
    fn exact_at_eps_one_for_every_core_position() {
        let x = random(&[3, 4, 2, 5], 2);
        for n in 1..=4 {
            let m = mps_decompose(&x, &MpsOptions::new(1.0).core_position(n)).unwrap();
            let back = m.unpermute(&mps_reconstruct(&m)).unwrap();
            assert!(rel_err(&back, &x) < 1e-12, "n = {n}");
            let g = mps_project_test(&m, &x).unwrap();
            assert!(g.axpy(-1.0, m.core()).unwrap().frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn single_sample_stack() {
        let x = random(&[3, 3, 1], 3);
        let m = mps_decompose(&x, &MpsOptions::new(1.0)).unwrap();
        let back = m.unpermute(&mps_reconstruct(&m)).unwrap();
        assert!(rel_err(&back, &x) < 1e-12);
    }

    #[test]
    fn matrix_samples() {
        // order-2 stack: vector samples
        let x = random(&[6, 4], 4);
        let m = mps_decompose(&x, &MpsOptions::new(1.0)).unwrap();
        assert_eq!(m.core_position(), 1);
        assert!(m.left_factors().is_empty());
        assert_eq!(m.right_factors().len(), 1);
        let back = m.unpermute(&mps_reconstruct(&m)).unwrap();
        assert!(rel_err(&back, &x) < 1e-12);
    }

    #[test]
    fn parameter_errors() {
        let x = random(&[3, 3, 2], 5);
        assert!(matches!(
            mps_decompose(&x, &MpsOptions::new(0.0)),
            Err(Error::InvalidThreshold(_))
        ));
        assert!(mps_decompose(&x, &MpsOptions::new(1.0).core_position(0)).is_err());
        assert!(mps_decompose(&x, &MpsOptions::new(1.0).core_position(4)).is_err());
        assert!(mps_decompose(&x, &MpsOptions::new(1.0).mode_order(vec![1, 1])).is_err());
        assert!(mps_decompose(&random(&[5], 1), &MpsOptions::new(1.0)).is_err());
        let m = mps_decompose(&x, &MpsOptions::new(1.0)).unwrap();
        assert!(matches!(
            mps_project_test(&m, &random(&[3, 2, 2], 6)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_test_sample_projects_to_zero() {
        let x = random(&[3, 4, 3, 5], 7);
        let m = mps_decompose(&x, &MpsOptions::new(0.8)).unwrap();
        let zero = DenseTensor::zeros(vec![3, 4, 3, 2]).unwrap();
        let q = mps_project_test(&m, &zero).unwrap();
        assert!(q.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn features_from_core_layouts() {
        let core = random(&[1, 1, 5], 8);
        let f = features_from_core(&core, 3).unwrap();
        assert_eq!((f.rows(), f.cols()), (5, 1));
        assert_eq!(f.values(), core.data());

        let core = random(&[2, 3, 4], 9);
        let f = features_from_core(&core, 3).unwrap();
        assert_eq!((f.rows(), f.cols()), (4, 6));
        assert_eq!(f.row(2)[1 + 2 * 2], core.get(&[1, 2, 2]));
        assert_eq!(f.to_core(&[2, 3]).unwrap(), core);
    }

    #[test]
    fn cost_estimate_closed_forms() {
        let c = mps_cost_estimate(&[4, 4, 4], 10, 1);
        assert_eq!(c.dominant_ops, 2560);
        // (N-2) I + K + 2 I with N = 3, I = 4, K = 10
        assert_eq!(c.parameters, 4 + 10 + 8);
        let c = mps_cost_estimate(&[5, 5, 5, 5], 7, 3);
        assert_eq!(c.parameters, 2 * 5 * 9 + 7 * 9 + 2 * 5 * 3);
    }

    #[test]
    fn serialization_round_trip() {
        let x = random(&[3, 4, 2, 5], 10);
        let m = mps_decompose(&x, &MpsOptions::new(0.9).mode_order(vec![2, 3, 1])).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"MPS1");
        assert_eq!(MpsModel::read_from(&mut buf.as_slice()).unwrap(), m);
        buf[4] = 9;
        assert!(MpsModel::read_from(&mut buf.as_slice()).is_err());
    }
}
