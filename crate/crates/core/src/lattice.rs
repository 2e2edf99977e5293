//! Subset indexing and the zeta/Möbius transforms over the subset lattice of
//! `V = {1, ..., p}`.
//!
//! Node `i` (1-based) is stored at bit `i - 1` of a [`SubsetIndex`]; inside the
//! crate nodes are addressed 0-based, so node `k` lives at bit `k`. Every
//! lattice vector is laid out by mask, `values[mask]`.
//!
//! The fast transforms are the usual subset-sum recurrence and are equal to
//! multiplication by the transposed Kronecker-product matrices built by
//! [`dense_zeta_matrix`] and [`dense_mobius_matrix`].

use std::fmt;
use std::ops::{AddAssign, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest node count for which a lattice vector may be allocated.
pub const MAX_NODES: usize = 25;

/// Largest node count for the dense matrix oracles.
pub const DENSE_MAX_NODES: usize = 12;

pub fn check_dimension(p: usize) -> Result<()> {
    if p > MAX_NODES {
        return Err(Error::DimensionTooLarge { p, max: MAX_NODES });
    }
    Ok(())
}

/// A subset `D ⊆ V` encoded as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsetIndex(u32);

impl SubsetIndex {
    pub const EMPTY: SubsetIndex = SubsetIndex(0);

    pub const fn new(mask: u32) -> Self {
        SubsetIndex(mask)
    }

    /// The full set `V` for `p` nodes.
    pub fn full(p: usize) -> Self {
        SubsetIndex(((1u64 << p) - 1) as u32)
    }

    pub fn singleton(node: usize) -> Self {
        SubsetIndex(1 << node)
    }

    pub fn pair(i: usize, j: usize) -> Self {
        SubsetIndex((1 << i) | (1 << j))
    }

    /// Builds a subset from 0-based node indices.
    pub fn from_nodes<I: IntoIterator<Item = usize>>(nodes: I) -> Self {
        SubsetIndex(nodes.into_iter().fold(0, |m, k| m | (1 << k)))
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, node: usize) -> bool {
        self.0 >> node & 1 == 1
    }

    pub fn is_subset_of(self, other: SubsetIndex) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: SubsetIndex) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: SubsetIndex) -> Self {
        SubsetIndex(self.0 | other.0)
    }

    pub fn without(self, node: usize) -> Self {
        SubsetIndex(self.0 & !(1 << node))
    }

    pub fn with(self, node: usize) -> Self {
        SubsetIndex(self.0 | (1 << node))
    }

    /// 0-based node indices in increasing order.
    pub fn nodes(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(k)
        })
    }

    /// Every subset of `self`, including `∅` and `self`, in decreasing mask order.
    pub fn subsets(self) -> impl Iterator<Item = SubsetIndex> {
        let full = self.0;
        let mut next = Some(full);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 { None } else { Some((cur - 1) & full) };
            Some(SubsetIndex(cur))
        })
    }
}

impl fmt::Display for SubsetIndex {
    /// Renders with 1-based node labels, e.g. `{1,3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, node) in self.nodes().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", node + 1)?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Real values indexed by every subset of `V`; exactly `2^p` finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeVector {
    p: usize,
    values: Vec<f64>,
}

impl LatticeVector {
    pub fn zeros(p: usize) -> Result<Self> {
        check_dimension(p)?;
        Ok(LatticeVector {
            p,
            values: vec![0.0; 1 << p],
        })
    }

    pub fn new(p: usize, values: Vec<f64>) -> Result<Self> {
        check_dimension(p)?;
        if values.len() != 1 << p {
            return Err(Error::LengthMismatch {
                expected: 1 << p,
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(SubsetIndex::new(bad as u32)));
        }
        Ok(LatticeVector { p, values })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, d: SubsetIndex) -> f64 {
        self.values[d.index()]
    }

    pub fn set(&mut self, d: SubsetIndex, value: f64) {
        self.values[d.index()] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `(subset, value)` pairs in mask order.
    pub fn iter(&self) -> impl Iterator<Item = (SubsetIndex, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(m, &v)| (SubsetIndex::new(m as u32), v))
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.values.iter().map(|&v| f(v)).collect()
    }
}

fn lattice_dimension(len: usize) -> Result<usize> {
    if !len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "lattice slice length {len} is not a power of two"
        )));
    }
    let p = len.trailing_zeros() as usize;
    check_dimension(p)?;
    Ok(p)
}

/// In-place `g_C = Σ_{R ⊆ C} f_R`.
pub fn zeta_in_place<T: Copy + AddAssign>(values: &mut [T]) -> Result<()> {
    let p = lattice_dimension(values.len())?;
    for bit in 0..p {
        let step = 1usize << bit;
        for block in values.chunks_exact_mut(step << 1) {
            let (lo, hi) = block.split_at_mut(step);
            for (h, &l) in hi.iter_mut().zip(lo.iter()) {
                *h += l;
            }
        }
    }
    Ok(())
}

/// In-place `f_D = Σ_{D' ⊆ D} (-1)^{|D \ D'|} g_{D'}`; inverse of [`zeta_in_place`].
pub fn mobius_in_place<T: Copy + SubAssign>(values: &mut [T]) -> Result<()> {
    let p = lattice_dimension(values.len())?;
    for bit in 0..p {
        let step = 1usize << bit;
        for block in values.chunks_exact_mut(step << 1) {
            let (lo, hi) = block.split_at_mut(step);
            for (h, &l) in hi.iter_mut().zip(lo.iter()) {
                *h -= l;
            }
        }
    }
    Ok(())
}

/// Subset sums, i.e. multiplication by `Zᵗ`.
pub fn zeta_transform(f: &LatticeVector) -> Result<LatticeVector> {
    let mut out = f.values.clone();
    zeta_in_place(&mut out)?;
    LatticeVector::new(f.p, out)
}

/// Möbius inversion, i.e. multiplication by `Mᵗ`.
pub fn mobius_transform(g: &LatticeVector) -> Result<LatticeVector> {
    let mut out = g.values.clone();
    mobius_in_place(&mut out)?;
    LatticeVector::new(g.p, out)
}

/// Square matrix with small integer entries, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<i64>,
}

impl DenseMatrix {
    fn identity(dim: usize) -> Self {
        let mut data = vec![0; dim * dim];
        for k in 0..dim {
            data[k * dim + k] = 1;
        }
        DenseMatrix { dim, data }
    }

    pub fn from_rows(rows: &[&[i64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("matrix rows must be square"));
        }
        Ok(DenseMatrix {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.dim + col]
    }

    /// `outer ⊗ self`: `outer` supplies the most significant index bit.
    fn kron_left(&self, outer: [[i64; 2]; 2]) -> Self {
        let n = self.dim;
        let dim = 2 * n;
        let mut data = vec![0; dim * dim];
        for (ra, orow) in outer.iter().enumerate() {
            for (ca, &a) in orow.iter().enumerate() {
                for rb in 0..n {
                    for cb in 0..n {
                        data[(ra * n + rb) * dim + ca * n + cb] = a * self.get(rb, cb);
                    }
                }
            }
        }
        DenseMatrix { dim, data }
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.dim;
        let mut data = vec![0; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..n {
                    data[r * n + c] += a * other.get(k, c);
                }
            }
        }
        DenseMatrix { dim: n, data }
    }

    pub fn is_identity(&self) -> bool {
        *self == DenseMatrix::identity(self.dim)
    }

    /// `selfᵗ · v`.
    pub fn transpose_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|c| (0..n).map(|r| self.get(r, c) as f64 * v[r]).sum())
            .collect()
    }

    /// Reorders rows and columns: entry `(r, c)` of the result is entry
    /// `(order[r], order[c])` of `self`.
    pub fn permuted(&self, order: &[SubsetIndex]) -> DenseMatrix {
        let n = self.dim;
        let mut data = vec![0; n * n];
        for (r, &sr) in order.iter().enumerate() {
            for (c, &sc) in order.iter().enumerate() {
                data[r * n + c] = self.get(sr.index(), sc.index());
            }
        }
        DenseMatrix { dim: n, data }
    }
}

const ZETA_FACTOR: [[i64; 2]; 2] = [[1, 1], [0, 1]];
const MOBIUS_FACTOR: [[i64; 2]; 2] = [[1, -1], [0, 1]];

fn kronecker_power(p: usize, factor: [[i64; 2]; 2]) -> Result<DenseMatrix> {
    if p > DENSE_MAX_NODES {
        return Err(Error::DimensionTooLarge {
            p,
            max: DENSE_MAX_NODES,
        });
    }
    // node 1 is the least significant bit, so later nodes are outer factors
    Ok((0..p).fold(DenseMatrix::identity(1), |acc, _| acc.kron_left(factor)))
}

/// `Z = ⊗ Z_i` in mask order; entry `(R, C)` is 1 iff `R ⊆ C`.
pub fn dense_zeta_matrix(p: usize) -> Result<DenseMatrix> {
    kronecker_power(p, ZETA_FACTOR)
}

/// `M = ⊗ M_i` in mask order; the inverse of [`dense_zeta_matrix`].
pub fn dense_mobius_matrix(p: usize) -> Result<DenseMatrix> {
    kronecker_power(p, MOBIUS_FACTOR)
}

/// All subsets of `V` ordered by cardinality, then lexicographically by
/// node list: `∅, {1}, {2}, {3}, {1,2}, {1,3}, {2,3}, V` for `p = 3`.
pub fn cardinality_order(p: usize) -> Result<Vec<SubsetIndex>> {
    check_dimension(p)?;
    let mut all: Vec<SubsetIndex> = (0..1u32 << p).map(SubsetIndex::new).collect();
    all.sort_by_cached_key(|s| (s.len(), s.nodes().collect::<Vec<_>>()));
    Ok(all)
}

/// Splits the down-set of `d` by the parity of `|d \ d'|`: returns
/// `(even, odd)`.
pub fn subset_parity_split(d: SubsetIndex) -> (Vec<SubsetIndex>, Vec<SubsetIndex>) {
    let size = d.len();
    d.subsets().partition(|s| (size - s.len()).is_multiple_of(2))
}
