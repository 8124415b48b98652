//! Dense order-m, dimension-n real tensors and the multilinear kernels built on them.
//!
//! Indices are 0-based in the Rust API. Entry `(i1, ..., im)` lives at offset
//! `Σ_k i_k · n^(m-k)`, so row `i` (first index fixed) is the contiguous block
//! `[i·n^(m-1), (i+1)·n^(m-1))`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Default cap on `n^m`; guards against accidental huge allocations.
pub const DEFAULT_ELEMENT_CAP: usize = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    order: usize,
    dim: usize,
    values: Vec<f64>,
}

/// Read-only view of the row subtensor `(t_{i i2 ... im})`, an order-(m-1) tensor.
#[derive(Clone, Copy, Debug)]
pub struct RowSubtensor<'a> {
    owner_index: usize,
    order: usize,
    dim: usize,
    values: &'a [f64],
}

impl<'a> RowSubtensor<'a> {
    pub fn owner_index(&self) -> usize {
        self.owner_index
    }

    /// Order of the slice, `m - 1`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn get(&self, tail: &[usize]) -> Result<f64> {
        let offset = offset_of(tail, self.order, self.dim)?;
        Ok(self.values[offset])
    }

    /// Nonzero entries as (tail multi-index, value), in offset order.
    pub fn nonzeros(&self) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        for_each_index(self.order, self.dim, |offset, tail| {
            let v = self.values[offset];
            if v != 0.0 {
                out.push((tail.to_vec(), v));
            }
        });
        out
    }
}

fn element_count(order: usize, dim: usize) -> u128 {
    (dim as u128).saturating_pow(order as u32)
}

fn offset_of(idx: &[usize], order: usize, dim: usize) -> Result<usize> {
    if idx.len() != order {
        return Err(Error::WrongArity {
            expected: order,
            got: idx.len(),
        });
    }
    let mut offset = 0usize;
    for &i in idx {
        if i >= dim {
            return Err(Error::IndexOutOfRange {
                index: idx.to_vec(),
                dim,
            });
        }
        offset = offset * dim + i;
    }
    Ok(offset)
}

/// Visits every multi-index of `[dim]^len` in lexicographic (= offset) order.
pub(crate) fn for_each_index<F: FnMut(usize, &[usize])>(len: usize, dim: usize, mut f: F) {
    let mut idx = vec![0usize; len];
    let total = dim.pow(len as u32);
    for offset in 0..total {
        f(offset, &idx);
        for k in (0..len).rev() {
            idx[k] += 1;
            if idx[k] < dim {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Full contraction `Σ row[i2..im] x_{i2} ... x_{im}` of one row block.
///
/// Contracts the last index first, reusing `scratch` between levels. The
/// level count is explicit because lengths cannot tell levels apart at `n = 1`.
fn contract_row(row: &[f64], dim: usize, levels: usize, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(row.chunks_exact(dim).map(|c| dot(c, x)));
    for _ in 1..levels {
        let next = scratch.len() / dim;
        for k in 0..next {
            let v = dot(&scratch[k * dim..(k + 1) * dim], x);
            scratch[k] = v;
        }
        scratch.truncate(next);
    }
    scratch[0]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

impl Tensor {
    /// All-zero tensor, subject to [`DEFAULT_ELEMENT_CAP`].
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        Self::zeros_with_cap(order, dim, DEFAULT_ELEMENT_CAP)
    }

    pub fn zeros_with_cap(order: usize, dim: usize, cap: usize) -> Result<Self> {
        if order < 2 || dim < 1 {
            return Err(Error::InvalidShape { order, dim });
        }
        let elements = element_count(order, dim);
        if elements > cap as u128 {
            return Err(Error::SizeLimit { elements, cap });
        }
        Ok(Tensor {
            order,
            dim,
            values: vec![0.0; elements as usize],
        })
    }

    /// Builds a tensor from sparse entries; unspecified slots are zero.
    pub fn from_entries<I>(order: usize, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        Self::from_entries_with_cap(order, dim, entries, DEFAULT_ELEMENT_CAP)
    }

    pub fn from_entries_with_cap<I>(order: usize, dim: usize, entries: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut t = Self::zeros_with_cap(order, dim, cap)?;
        let mut seen = vec![false; t.values.len()];
        for (idx, v) in entries {
            let offset = t.offset(&idx)?;
            if seen[offset] {
                return Err(Error::DuplicateEntry { index: idx });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("entry {}", crate::error::one_based(&idx)),
                });
            }
            seen[offset] = true;
            t.values[offset] = v;
        }
        Ok(t)
    }

    /// Wraps a flat value array laid out as described in the module docs.
    pub fn from_values(order: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        let t = Self::zeros_with_cap(order, dim, DEFAULT_ELEMENT_CAP)?;
        if values.len() != t.values.len() {
            return Err(Error::DimensionMismatch {
                expected: t.values.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("value at offset {k}"),
            });
        }
        Ok(Tensor { order, dim, values })
    }

    /// The unit tensor ℐ: 1 on every `(i, ..., i)`, 0 elsewhere.
    pub fn identity(order: usize, dim: usize) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        for i in 0..dim {
            let d = t.diagonal_offset(i);
            t.values[d] = 1.0;
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of entries in one row subtensor, `n^(m-1)`.
    pub fn row_len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        offset_of(idx, self.order, self.dim)
    }

    /// Inverse of [`Tensor::offset`].
    pub fn index_of(&self, mut offset: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order];
        for k in (0..self.order).rev() {
            idx[k] = offset % self.dim;
            offset /= self.dim;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.values[self.offset(idx)?])
    }

    pub fn set(&mut self, idx: &[usize], value: f64) -> Result<()> {
        let offset = self.offset(idx)?;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                what: format!("entry {}", crate::error::one_based(idx)),
            });
        }
        self.values[offset] = value;
        Ok(())
    }

    /// Offset of `(i, ..., i)`.
    pub fn diagonal_offset(&self, i: usize) -> usize {
        // i · (n^(m-1) + ... + n + 1)
        let stride: usize = (0..self.order).map(|k| self.dim.pow(k as u32)).sum();
        i * stride
    }

    /// Position of the diagonal slot inside row `i`'s block.
    pub(crate) fn diagonal_in_row(&self, i: usize) -> usize {
        self.diagonal_offset(i) - i * self.row_len()
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.values[self.diagonal_offset(i)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.diag(i)).collect()
    }

    /// Contiguous block of row `i`; panics if `i >= dim`.
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        let len = self.row_len();
        &self.values[i * len..(i + 1) * len]
    }

    pub fn row_subtensor(&self, i: usize) -> Result<RowSubtensor<'_>> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: vec![i],
                dim: self.dim,
            });
        }
        Ok(RowSubtensor {
            owner_index: i,
            order: self.order - 1,
            dim: self.dim,
            values: self.row(i),
        })
    }

    /// Nonzero entries as (multi-index, value), in offset order.
    pub fn nonzeros(&self) -> Vec<(Vec<usize>, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (self.index_of(k), *v))
            .collect()
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::ShapeMismatch {
                left_order: self.order,
                left_dim: self.dim,
                right_order: other.order,
                right_dim: other.dim,
            });
        }
        Ok(())
    }

    /// `T x^(m-1)`: component i is `Σ t_{i i2..im} x_{i2} ... x_{im}`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(x, Execution::default())
    }

    pub fn apply_with(&self, x: &[f64], exec: Execution) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        let exec = exec.for_work(self.values.len());
        Ok(par::map_indices(exec, self.dim, |i| {
            let mut scratch = Vec::with_capacity(self.row_len() / self.dim.max(1));
            contract_row(self.row(i), self.dim, self.order - 1, x, &mut scratch)
        }))
    }

    /// `x^T T x^(m-1) = T x^m`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let y = self.apply(x)?;
        Ok(dot(x, &y))
    }

    /// Exact Jacobian of `x ↦ T x^(m-1)`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.jacobian_with(x, Execution::default())
    }

    pub fn jacobian_with(&self, x: &[f64], exec: Execution) -> Result<DMatrix<f64>> {
        self.check_vector(x)?;
        let n = self.dim;
        let tail = self.order - 1;
        let exec = exec.for_work(self.values.len() * tail);
        let rows = par::map_indices(exec, n, |i| {
            let row = self.row(i);
            let mut grad = vec![0.0; n];
            // prefix[k] = x_{i2}..x_{i(k+1)}, suffix likewise from the right
            let mut prefix = vec![1.0; tail + 1];
            let mut suffix = vec![1.0; tail + 1];
            for_each_index(tail, n, |offset, idx| {
                let t = row[offset];
                if t == 0.0 {
                    return;
                }
                for k in 0..tail {
                    prefix[k + 1] = prefix[k] * x[idx[k]];
                }
                for k in (0..tail).rev() {
                    suffix[k] = suffix[k + 1] * x[idx[k]];
                }
                for k in 0..tail {
                    grad[idx[k]] += t * prefix[k] * suffix[k + 1];
                }
            });
            grad
        });
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Product `T · diag(w)`: entry `(i, i2, ..., im)` becomes `t · w_{i2} ... w_{im}`.
    pub fn scale_columns(&self, w: &[f64]) -> Result<Tensor> {
        self.check_vector(w)?;
        let n = self.dim;
        let row_len = self.row_len();
        let mut weights = vec![1.0; row_len];
        for_each_index(self.order - 1, n, |offset, idx| {
            weights[offset] = idx.iter().map(|&k| w[k]).product();
        });
        let values: Vec<f64> = self
            .values
            .chunks_exact(row_len)
            .flat_map(|row| row.iter().zip(&weights).map(|(t, s)| t * s))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "scaled tensor".into(),
            });
        }
        Ok(Tensor {
            order: self.order,
            dim: n,
            values,
        })
    }

    /// Comparison tensor: `|t_{i..i}|` on the diagonal, `-|t|` elsewhere.
    pub fn comparison(&self) -> Tensor {
        let mut out = self.map(|v| -v.abs());
        for i in 0..self.dim {
            let d = self.diagonal_offset(i);
            out.values[d] = self.values[d].abs();
        }
        out
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Tensor {
        Tensor {
            order: self.order,
            dim: self.dim,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn checked_add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        Ok(Tensor {
            order: self.order,
            dim: self.dim,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `s·ℐ - self`.
    pub fn shifted_negation(&self, s: f64) -> Tensor {
        let mut out = self.map(|v| -v);
        for i in 0..self.dim {
            let d = self.diagonal_offset(i);
            out.values[d] += s;
        }
        out
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.order == other.order && self.dim == other.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_tensor;
    use approx::assert_relative_eq;

    #[test]
    fn example_has_sixteen_nonzeros() {
        let t = example_tensor();
        assert_eq!(t.values().len(), 256);
        assert_eq!(t.nonzeros().len(), 16);
        assert_eq!(t.get(&[3, 3, 3, 3]).unwrap(), 10.0);
        assert_eq!(t.get(&[0, 0, 0, 0]).unwrap(), 8.0);
    }

    #[test]
    fn smallest_and_zero_tensors() {
        let t = Tensor::from_entries(2, 1, [(vec![0, 0], 5.0)]).unwrap();
        assert_eq!(t.values(), &[5.0]);
        let z = Tensor::from_entries(3, 2, Vec::new()).unwrap();
        assert_eq!(z.values(), &[0.0; 8]);
        assert_eq!(z.get(&[1, 0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(Tensor::zeros(1, 3), Err(Error::InvalidShape { .. })));
        assert!(matches!(Tensor::zeros(2, 0), Err(Error::InvalidShape { .. })));
        assert!(matches!(
            Tensor::from_entries(2, 2, [(vec![0, 2], 1.0)]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            Tensor::from_entries(2, 2, [(vec![0], 1.0)]),
            Err(Error::WrongArity { .. })
        ));
        assert!(matches!(
            Tensor::from_entries(2, 2, [(vec![0, 1], 1.0), (vec![0, 1], 2.0)]),
            Err(Error::DuplicateEntry { .. })
        ));
        assert!(matches!(
            Tensor::from_entries(2, 2, [(vec![0, 1], f64::NAN)]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(Tensor::zeros(9, 10), Err(Error::SizeLimit { .. })));
        assert!(matches!(Tensor::zeros_with_cap(3, 3, 26), Err(Error::SizeLimit { .. })));
        assert!(Tensor::zeros_with_cap(3, 3, 27).is_ok());
    }

    #[test]
    fn set_get_and_offsets() {
        let mut t = Tensor::zeros(3, 4).unwrap();
        let v = 0.1 + 0.2;
        t.set(&[3, 1, 2], v).unwrap();
        assert_eq!(t.get(&[3, 1, 2]).unwrap().to_bits(), v.to_bits());
        assert_eq!(t.offset(&[3, 1, 2]).unwrap(), 3 * 16 + 4 + 2);
        assert_eq!(t.index_of(54), vec![3, 1, 2]);
        assert!(t.set(&[0, 0, 4], 1.0).is_err());
        assert!(t.set(&[0, 0, 0], f64::INFINITY).is_err());
        assert_eq!(t.diagonal_offset(2), t.offset(&[2, 2, 2]).unwrap());
    }

    #[test]
    fn row_subtensor_views() {
        let t = example_tensor();
        let r = t.row_subtensor(2).unwrap();
        assert_eq!(r.order(), 3);
        assert_eq!(r.values().len(), 64);
        assert_eq!(r.nonzeros(), vec![(vec![1, 1, 1], -1.0), (vec![2, 2, 2], 3.0)]);

        let id = Tensor::identity(4, 3).unwrap();
        assert_eq!(id.row_subtensor(1).unwrap().nonzeros(), vec![(vec![1, 1, 1], 1.0)]);
        let z = Tensor::zeros(3, 2).unwrap();
        assert!(z.row_subtensor(0).unwrap().nonzeros().is_empty());
        assert!(t.row_subtensor(4).is_err());
    }

    #[test]
    fn apply_in_one_dimension() {
        for m in 2..6 {
            let t = Tensor::from_values(m, 1, vec![3.0]).unwrap();
            assert_eq!(t.apply(&[2.0]).unwrap(), vec![3.0 * 2f64.powi(m as i32 - 1)]);
            assert_eq!(t.quad_form(&[2.0]).unwrap(), 3.0 * 2f64.powi(m as i32));
        }
    }

    #[test]
    fn apply_examples() {
        let id = Tensor::identity(4, 3).unwrap();
        assert_eq!(id.apply(&[2.0, 1.0, 0.0]).unwrap(), vec![8.0, 1.0, 0.0]);

        let ones = Tensor::from_values(3, 2, vec![1.0; 8]).unwrap();
        assert_eq!(ones.apply(&[1.0, 1.0]).unwrap(), vec![4.0, 4.0]);

        let t = example_tensor();
        // only t_{i111} contribute at e1; row 4 has no such entry
        assert_eq!(t.apply(&[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![8.0, -1.0, 0.0, 0.0]);
        assert!(matches!(t.apply(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn quad_form_examples() {
        let id = Tensor::identity(4, 3).unwrap();
        assert_eq!(id.quad_form(&[2.0, 1.0, 0.0]).unwrap(), 17.0);
        let z = Tensor::zeros(3, 2).unwrap();
        assert_eq!(z.quad_form(&[0.3, -2.0]).unwrap(), 0.0);
        let ones = Tensor::from_values(3, 2, vec![1.0; 8]).unwrap();
        assert_eq!(ones.quad_form(&[1.0, 1.0]).unwrap(), 8.0);
    }

    #[test]
    fn jacobian_examples() {
        let id = Tensor::identity(4, 3).unwrap();
        let j = id.jacobian(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(j, DMatrix::from_diagonal_element(3, 3, 3.0));
        let j0 = example_tensor().jacobian(&[0.0; 4]).unwrap();
        assert!(j0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scale_columns_examples() {
        let t = example_tensor();
        assert_eq!(t.scale_columns(&[1.0; 4]).unwrap(), t);
        let zero = t.scale_columns(&[0.0; 4]).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        let w = [2.0, 3.0, 5.0, 7.0];
        let s = t.scale_columns(&w).unwrap();
        assert_relative_eq!(s.get(&[0, 0, 0, 1]).unwrap(), -1.0 * 2.0 * 2.0 * 3.0);
        assert_relative_eq!(s.diag(3), 10.0 * 343.0);
    }

    #[test]
    fn comparison_examples() {
        let t = example_tensor();
        assert_eq!(t.comparison(), t);
        let mut u = Tensor::zeros(3, 2).unwrap();
        u.set(&[0, 1, 0], 2.0).unwrap();
        u.set(&[1, 1, 1], -4.0).unwrap();
        let c = u.comparison();
        assert_eq!(c.get(&[0, 1, 0]).unwrap(), -2.0);
        assert_eq!(c.get(&[1, 1, 1]).unwrap(), 4.0);
        let z = Tensor::zeros(4, 2).unwrap();
        assert_eq!(z.comparison(), z);
    }

    #[test]
    fn identity_is_matrix_identity_for_order_two() {
        let id = Tensor::identity(2, 3).unwrap();
        assert_eq!(
            id.values(),
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn parallel_apply_matches_sequential() {
        let n = 12;
        let values: Vec<f64> = (0..n * n * n * n).map(|k| ((k * 37) % 19) as f64 - 9.0).collect();
        let t = Tensor::from_values(4, n, values).unwrap();
        let x: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 - 0.4).collect();
        assert_eq!(
            t.apply_with(&x, Execution::Sequential).unwrap(),
            t.apply_with(&x, Execution::Parallel).unwrap()
        );
        assert_eq!(
            t.jacobian_with(&x, Execution::Sequential).unwrap(),
            t.jacobian_with(&x, Execution::Parallel).unwrap()
        );
    }
}
