//! Dense N-order tensors and the multilinear operations built on them.
//!
//! Storage is first-index-fastest: the entry at zero-based multi-index
//! `(i_1, ..., i_N)` lives at `i_1 + I_1 * (i_2 + I_2 * (i_3 + ...))`.
//! With this layout the prefix matricization `(I_1..I_j) x (I_{j+1}..I_N)`
//! is the raw buffer reinterpreted as a column-major matrix, so the sweeps
//! in [`crate::mps`] reshape between split points without copying.
//!
//! Mode numbers are 1-based everywhere in this module (mode 1 is the first
//! mode), matching the usual notation `X_(n)`, `X x_n A`. Element indices
//! passed to [`DenseTensor::get`] are 0-based.
//!
//! Mode-n matricization uses the standard column map: entry
//! `(i_1, ..., i_N)` (1-based) goes to row `i_n` and column
//! `j = 1 + sum_{k != n} (i_k - 1) J_k` with `J_k = prod_{m < k, m != n} I_m`.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// An immutable dense tensor of `f64` in first-index-fastest layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor, rejecting empty shapes, zero extents, length
    /// mismatches and non-finite entries.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::DataLength {
                shape,
                len: data.len(),
                expected,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        check_shape(&shape)?;
        let len = shape.iter().product();
        Ok(Self {
            shape,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor whose entry at each 0-based multi-index is `f(index)`.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Self::new(shape, data)
    }

    /// Internal constructor for buffers produced by our own arithmetic.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Entry at a 0-based multi-index. Panics if the index is out of bounds.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.linear_index(index)]
    }

    pub fn linear_index(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index arity");
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &extent) in index.iter().zip(&self.shape) {
            assert!(i < extent, "index {i} out of bounds for extent {extent}");
            lin += i * stride;
            stride *= extent;
        }
        lin
    }

    /// Same data, new shape with the same element count. No copy of the
    /// logical ordering takes place: the buffer is reinterpreted.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        check_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(Error::DataLength {
                shape,
                len: self.data.len(),
                expected,
            });
        }
        Ok(Self {
            shape,
            data: self.data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::from_parts(self.shape.clone(), self.data.iter().map(|v| alpha * v).collect())
    }

    /// Elementwise `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &DenseTensor) -> Result<Self> {
        same_shape(self, other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Self::from_parts(self.shape.clone(), data))
    }

    /// Slice `k` (0-based) of the last mode, as a tensor of order N-1.
    /// For an order-1 tensor the result is a single-entry order-1 tensor.
    pub fn last_mode_slice(&self, k: usize) -> Self {
        let (&last, head) = self.shape.split_last().expect("order >= 1");
        assert!(k < last, "slice {k} out of range for extent {last}");
        let slice_len: usize = head.iter().product();
        let data = self.data[k * slice_len..(k + 1) * slice_len].to_vec();
        let shape = if head.is_empty() { vec![1] } else { head.to_vec() };
        Self::from_parts(shape, data)
    }

    /// Keeps the leading `keep[m]` indices of every mode.
    pub fn leading_block(&self, keep: &[usize]) -> Result<Self> {
        if keep.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} keep extents for an order-{} tensor",
                keep.len(),
                self.order()
            )));
        }
        for (m, (&k, &extent)) in keep.iter().zip(&self.shape).enumerate() {
            if k == 0 || k > extent {
                return Err(Error::InvalidParameter(format!(
                    "keep {k} on mode {} with extent {extent}",
                    m + 1
                )));
            }
        }
        Ok(Self::from_fn(keep.to_vec(), |idx| self.get(idx)).expect("finite source"))
    }
}

/// Which modes index the rows of a matricization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSpec {
    /// Mode-n matricization `X_(n)`; 1-based.
    Single(usize),
    /// Mode-(1..j) matricization `X_[j]`.
    Prefix(usize),
}

/// A tensor viewed as a column-major matrix. Prefix views borrow the source
/// buffer; single-mode views own a gathered copy.
#[derive(Debug, Clone)]
pub struct MatricizedView<'a> {
    rows: usize,
    cols: usize,
    source_shape: Vec<usize>,
    mode: ModeSpec,
    data: Cow<'a, [f64]>,
}

impl MatricizedView<'_> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn source_shape(&self) -> &[usize] {
        &self.source_shape
    }

    pub fn mode(&self) -> ModeSpec {
        self.mode
    }

    pub fn is_borrowed(&self) -> bool {
        matches!(self.data, Cow::Borrowed(_))
    }

    /// Entry at 0-based (row, col).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row + self.rows * col]
    }

    /// Column-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_col_major(self.rows, self.cols, self.data.to_vec())
    }

    /// Inverts the matricization, restoring the source tensor.
    pub fn dematricize(&self) -> DenseTensor {
        match self.mode {
            ModeSpec::Prefix(_) => {
                DenseTensor::from_parts(self.source_shape.clone(), self.data.to_vec())
            }
            ModeSpec::Single(n) => {
                let (outer, mid, inner) = split_around(&self.source_shape, n - 1);
                let mut out = vec![0.0; self.data.len()];
                // Column index of (l, r) is l + outer * r; row is the mode index.
                for r in 0..inner {
                    for i in 0..mid {
                        for l in 0..outer {
                            out[l + outer * (i + mid * r)] = self.data[i + mid * (l + outer * r)];
                        }
                    }
                }
                DenseTensor::from_parts(self.source_shape.clone(), out)
            }
        }
    }
}

/// Mode-n matricization `X_(n)` (n is 1-based): an `I_n x prod_{k != n} I_k`
/// matrix with the standard column map.
pub fn matricize_mode_n(t: &DenseTensor, n: usize) -> Result<MatricizedView<'static>> {
    if n == 0 || n > t.order() {
        return Err(Error::ModeOutOfRange {
            mode: n,
            order: t.order(),
        });
    }
    let (outer, mid, inner) = split_around(&t.shape, n - 1);
    let mut data = vec![0.0; t.len()];
    for r in 0..inner {
        for i in 0..mid {
            let src = &t.data[outer * (i + mid * r)..outer * (i + mid * r) + outer];
            for (l, &v) in src.iter().enumerate() {
                data[i + mid * (l + outer * r)] = v;
            }
        }
    }
    Ok(MatricizedView {
        rows: mid,
        cols: outer * inner,
        source_shape: t.shape.clone(),
        mode: ModeSpec::Single(n),
        data: Cow::Owned(data),
    })
}

/// Mode-(1..j) matricization `X_[j]`: rows linearize modes 1..=j, columns
/// the rest. Borrows the tensor's buffer.
pub fn matricize_prefix(t: &DenseTensor, j: usize) -> Result<MatricizedView<'_>> {
    if j == 0 || j >= t.order() {
        return Err(Error::SplitOutOfRange {
            split: j,
            order: t.order(),
        });
    }
    let rows: usize = t.shape[..j].iter().product();
    Ok(MatricizedView {
        rows,
        cols: t.len() / rows,
        source_shape: t.shape.clone(),
        mode: ModeSpec::Prefix(j),
        data: Cow::Borrowed(&t.data),
    })
}

/// Mode-n product `t x_n m`: contracts mode `n` (1-based) of `t` with the
/// columns of `m` (`J_n x I_n`), replacing extent `I_n` by `J_n`.
pub fn mode_n_product(t: &DenseTensor, m: &Matrix, n: usize) -> Result<DenseTensor> {
    if n == 0 || n > t.order() {
        return Err(Error::ModeOutOfRange {
            mode: n,
            order: t.order(),
        });
    }
    let (outer, mid, inner) = split_around(&t.shape, n - 1);
    if m.cols() != mid {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but mode {n} has extent {mid}",
            m.rows(),
            m.cols()
        )));
    }
    let new_mid = m.rows();
    let mut out = vec![0.0; outer * new_mid * inner];
    for r in 0..inner {
        for i in 0..mid {
            let src = &t.data[outer * (i + mid * r)..outer * (i + mid * r + 1)];
            for j in 0..new_mid {
                let a = m.get(j, i);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out[outer * (j + new_mid * r)..outer * (j + new_mid * r + 1)];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
    }
    let mut shape = t.shape.clone();
    shape[n - 1] = new_mid;
    Ok(DenseTensor::from_parts(shape, out))
}

/// `<a, b>` = sum of elementwise products.
pub fn inner_product(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    same_shape(a, b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    t.frobenius_norm()
}

/// Reorders modes: result mode `k` is source mode `perm[k - 1]` (both 1-based),
/// so `result.shape()[k-1] == t.shape()[perm[k-1] - 1]`.
pub fn permute_modes(t: &DenseTensor, perm: &[usize]) -> Result<DenseTensor> {
    validate_permutation(perm, t.order())?;
    if perm.iter().enumerate().all(|(k, &p)| p == k + 1) {
        return Ok(t.clone());
    }
    let order = t.order();
    let new_shape: Vec<usize> = perm.iter().map(|&p| t.shape[p - 1]).collect();
    let mut src_strides = vec![1usize; order];
    for k in 1..order {
        src_strides[k] = src_strides[k - 1] * t.shape[k - 1];
    }
    let strides: Vec<usize> = perm.iter().map(|&p| src_strides[p - 1]).collect();
    let mut out = Vec::with_capacity(t.len());
    let mut idx = vec![0usize; order];
    let mut offset = 0usize;
    for _ in 0..t.len() {
        out.push(t.data[offset]);
        // odometer over the destination index, tracking the source offset
        for k in 0..order {
            idx[k] += 1;
            offset += strides[k];
            if idx[k] < new_shape[k] {
                break;
            }
            offset -= strides[k] * new_shape[k];
            idx[k] = 0;
        }
    }
    Ok(DenseTensor::from_parts(new_shape, out))
}

/// Inverse of a 1-based permutation.
pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p - 1] = k + 1;
    }
    inv
}

pub fn validate_permutation(perm: &[usize], order: usize) -> Result<()> {
    if perm.len() != order {
        return Err(Error::InvalidPermutation(perm.to_vec()));
    }
    let mut seen = vec![false; order];
    for &p in perm {
        if p == 0 || p > order || seen[p - 1] {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        seen[p - 1] = true;
    }
    Ok(())
}

/// Stacks same-shape samples along a new trailing mode of extent K.
pub fn concat_along_new_last_mode(samples: &[DenseTensor]) -> Result<DenseTensor> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Empty("no samples to concatenate".into()))?;
    let mut data = Vec::with_capacity(first.len() * samples.len());
    for (k, s) in samples.iter().enumerate() {
        if s.shape != first.shape {
            return Err(Error::DimensionMismatch(format!(
                "sample {k} has shape {:?}, expected {:?}",
                s.shape, first.shape
            )));
        }
        data.extend_from_slice(&s.data);
    }
    let mut shape = first.shape.clone();
    shape.push(samples.len());
    Ok(DenseTensor::from_parts(shape, data))
}

/// Splits the shape around zero-based mode `m` into
/// (product before, extent of m, product after).
pub(crate) fn split_around(shape: &[usize], m: usize) -> (usize, usize, usize) {
    let outer = shape[..m].iter().product();
    let inner = shape[m + 1..].iter().product();
    (outer, shape[m], inner)
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("order must be at least 1".into()));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(format!(
            "zero extent in {shape:?}"
        )));
    }
    Ok(())
}

fn same_shape(a: &DenseTensor, b: &DenseTensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(Error::DimensionMismatch(format!(
            "shapes {:?} and {:?}",
            a.shape, b.shape
        )));
    }
    Ok(())
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for (i, &extent) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < extent {
            return;
        }
        *i = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(shape: &[usize]) -> DenseTensor {
        let len: usize = shape.iter().product();
        DenseTensor::new(shape.to_vec(), (1..=len).map(|v| v as f64).collect()).unwrap()
    }

    fn lcg_tensor(shape: &[usize], seed: u64) -> DenseTensor {
        let mut state = seed;
        DenseTensor::from_fn(shape.to_vec(), |_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(DenseTensor::new(vec![], vec![]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(matches!(
            DenseTensor::new(vec![2], vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(DenseTensor::new(vec![1], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn order_one_matricization_is_the_vector() {
        let t = seq(&[5]);
        let m = matricize_mode_n(&t, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (5, 1));
        assert_eq!(m.as_slice(), t.data());
    }

    #[test]
    fn mode_one_of_2x2x2_follows_column_map() {
        // x_{i1 i2 i3} = 1..8 lexicographic in (i1, i2, i3), i.e. i3 fastest.
        let t = DenseTensor::from_fn(vec![2, 2, 2], |i| (4 * i[0] + 2 * i[1] + i[2] + 1) as f64)
            .unwrap();
        let m = matricize_mode_n(&t, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 4));
        for i1 in 1..=2 {
            for i2 in 1..=2 {
                for i3 in 1..=2 {
                    let j = 1 + (i2 - 1) + (i3 - 1) * 2;
                    let x = (4 * (i1 - 1) + 2 * (i2 - 1) + (i3 - 1) + 1) as f64;
                    assert_eq!(m.get(i1 - 1, j - 1), x);
                }
            }
        }
        // row 1 is x_{1..}: 1, 3, 2, 4
        assert_eq!(
            (0..4).map(|j| m.get(0, j)).collect::<Vec<_>>(),
            vec![1.0, 3.0, 2.0, 4.0]
        );
    }

    #[test]
    fn matricize_round_trip_is_exact() {
        let t = lcg_tensor(&[3, 4, 5], 7);
        for n in 1..=3 {
            let back = matricize_mode_n(&t, n).unwrap().dematricize();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn mode_out_of_range() {
        let t = seq(&[2, 3]);
        assert!(matches!(
            matricize_mode_n(&t, 0),
            Err(Error::ModeOutOfRange { .. })
        ));
        assert!(matricize_mode_n(&t, 3).is_err());
        assert!(matches!(
            matricize_prefix(&t, 2),
            Err(Error::SplitOutOfRange { .. })
        ));
        assert!(matricize_prefix(&t, 0).is_err());
    }

    #[test]
    fn prefix_of_matrix_is_the_matrix() {
        let t = seq(&[2, 3]);
        let m = matricize_prefix(&t, 1).unwrap();
        assert!(m.is_borrowed());
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), t.get(&[i, j]));
            }
        }
    }

    #[test]
    fn prefix_2x3x4_at_two() {
        let t = lcg_tensor(&[2, 3, 4], 3);
        let m = matricize_prefix(&t, 2).unwrap();
        assert_eq!((m.rows(), m.cols()), (6, 4));
        for i1 in 0..2 {
            for i2 in 0..3 {
                for i3 in 0..4 {
                    assert_eq!(m.get(i1 + 2 * i2, i3), t.get(&[i1, i2, i3]));
                }
            }
        }
        assert_eq!(m.dematricize(), t);
    }

    #[test]
    fn mode_product_with_identity_and_row_of_ones() {
        let t = lcg_tensor(&[2, 3, 4], 11);
        let id = Matrix::identity(3);
        assert_eq!(mode_n_product(&t, &id, 2).unwrap(), t);

        let ones = DenseTensor::new(vec![2, 2, 2], vec![1.0; 8]).unwrap();
        let row = Matrix::from_row_major(1, 2, vec![1.0, 1.0]);
        let r = mode_n_product(&ones, &row, 2).unwrap();
        assert_eq!(r.shape(), &[2, 1, 2]);
        assert!(r.data().iter().all(|&v| v == 2.0));

        let bad = Matrix::zeros(2, 5);
        assert!(matches!(
            mode_n_product(&t, &bad, 1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn inner_product_basics() {
        let t = lcg_tensor(&[2, 3], 5);
        let z = DenseTensor::zeros(vec![2, 3]).unwrap();
        assert_eq!(inner_product(&t, &z).unwrap(), 0.0);
        let e = |k: usize| {
            let mut d = vec![0.0; 6];
            d[k] = 1.0;
            DenseTensor::new(vec![2, 3], d).unwrap()
        };
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(inner_product(&e(i), &e(j)).unwrap(), expected);
            }
        }
        let other = seq(&[3, 2]);
        assert!(inner_product(&t, &other).is_err());
    }

    #[test]
    fn permutation_cases() {
        let t = lcg_tensor(&[2, 3, 4, 5], 9);
        assert_eq!(permute_modes(&t, &[1, 2, 3, 4]).unwrap(), t);

        let m = seq(&[2, 3]);
        let mt = permute_modes(&m, &[2, 1]).unwrap();
        assert_eq!(mt.shape(), &[3, 2]);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(mt.get(&[j, i]), m.get(&[i, j]));
            }
        }

        let perm = [3, 1, 4, 2];
        let p = permute_modes(&t, &perm).unwrap();
        assert_eq!(p.shape(), &[4, 2, 5, 3]);
        assert_eq!(p.get(&[1, 0, 2, 2]), t.get(&[0, 2, 1, 2]));
        let back = permute_modes(&p, &inverse_permutation(&perm)).unwrap();
        assert_eq!(back, t);

        assert!(permute_modes(&t, &[1, 1, 2, 3]).is_err());
        assert!(permute_modes(&t, &[1, 2, 3]).is_err());
        assert!(permute_modes(&t, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn concat_cases() {
        let a = seq(&[2, 2]);
        let one = concat_along_new_last_mode(std::slice::from_ref(&a)).unwrap();
        assert_eq!(one.shape(), &[2, 2, 1]);

        let b = a.scale(-2.0);
        let s = concat_along_new_last_mode(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s.shape(), &[2, 2, 2]);
        assert_eq!(s.last_mode_slice(0), a);
        assert_eq!(s.last_mode_slice(1), b);

        let images: Vec<_> = (0..5).map(|k| lcg_tensor(&[32, 32, 3], k)).collect();
        let stack = concat_along_new_last_mode(&images).unwrap();
        assert_eq!(stack.shape(), &[32, 32, 3, 5]);

        assert!(matches!(
            concat_along_new_last_mode(&[]),
            Err(Error::Empty(_))
        ));
        assert!(concat_along_new_last_mode(&[a, seq(&[4])]).is_err());
    }

    #[test]
    fn degenerate_extents_are_legal() {
        let t = lcg_tensor(&[1, 3, 1], 2);
        let m = matricize_mode_n(&t, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 3));
        let m3 = matricize_mode_n(&t, 3).unwrap();
        assert_eq!((m3.rows(), m3.cols()), (1, 3));
    }

    #[test]
    fn leading_block_keeps_prefix_indices() {
        let t = lcg_tensor(&[3, 4, 2], 4);
        let b = t.leading_block(&[2, 3, 2]).unwrap();
        assert_eq!(b.get(&[1, 2, 1]), t.get(&[1, 2, 1]));
        assert_eq!(t.leading_block(&[3, 4, 2]).unwrap(), t);
        assert!(t.leading_block(&[4, 1, 1]).is_err());
        assert!(t.leading_block(&[1, 1]).is_err());
    }
}
