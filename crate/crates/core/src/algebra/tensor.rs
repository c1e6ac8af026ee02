//! Dense multi-index arrays with a declared symmetry class.

use std::fmt::Debug;

use super::{Rational, WFrac};
use crate::error::{Error, Result};

/// Entry type of a [`Tensor`]: an exact commutative ring element.
pub trait Scalar: Clone + PartialEq + Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn try_add(&self, other: &Self) -> Result<Self>;
    fn try_mul(&self, other: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
}

impl Scalar for Rational {
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn try_add(&self, other: &Self) -> Result<Self> {
        Ok(self + other)
    }
    fn try_mul(&self, other: &Self) -> Result<Self> {
        Ok(self * other)
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Scalar for WFrac {
    fn zero_like(&self) -> Self {
        WFrac::zero(self.context())
    }
    fn is_zero(&self) -> bool {
        WFrac::is_zero(self)
    }
    fn try_add(&self, other: &Self) -> Result<Self> {
        WFrac::try_add(self, other)
    }
    fn try_mul(&self, other: &Self) -> Result<Self> {
        WFrac::try_mul(self, other)
    }
    fn neg(&self) -> Self {
        WFrac::neg(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    None,
    /// `T_ij = T_ji`.
    Symmetric2,
    /// Algebraic curvature tensor: antisymmetric in each pair, pair-swap
    /// symmetric, first Bianchi identity.
    Riemann,
}

impl Symmetry {
    fn name(self) -> &'static str {
        match self {
            Symmetry::None => "none",
            Symmetry::Symmetric2 => "symmetric-2",
            Symmetry::Riemann => "riemann",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    rank: usize,
    dim: usize,
    data: Vec<T>,
    symmetry: Symmetry,
}

/// All multi-indices of the given rank over `0..dim`, row-major.
pub fn multi_indices(rank: usize, dim: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = flat % dim;
            flat /= dim;
        }
        idx
    })
}

/// Representatives `(i,j,k,l)` with `i<j`, `k<l`, `(i,j) <= (k,l)`: one per
/// orbit of the pair symmetries of a curvature tensor.
pub fn riemann_representatives(dim: usize) -> Vec<[usize; 4]> {
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[a..] {
            out.push([i, j, k, l]);
        }
    }
    out
}

impl<T: Scalar> Tensor<T> {
    /// Fills every entry from `f` and validates the declared symmetry.
    pub fn from_fn<F>(rank: usize, dim: usize, symmetry: Symmetry, f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Result<T>,
    {
        let t = Self::from_fn_unchecked(rank, dim, symmetry, f)?;
        t.validate()?;
        Ok(t)
    }

    pub(crate) fn from_fn_unchecked<F>(
        rank: usize,
        dim: usize,
        symmetry: Symmetry,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Result<T>,
    {
        match (symmetry, rank) {
            (Symmetry::Symmetric2, 2) | (Symmetry::Riemann, 4) | (Symmetry::None, _) => {}
            _ => {
                return Err(Error::Argument(format!(
                    "symmetry {} needs a different rank than {rank}",
                    symmetry.name()
                )))
            }
        }
        let data = multi_indices(rank, dim)
            .map(|idx| f(&idx))
            .collect::<Result<Vec<_>>>()?;
        Ok(Tensor {
            rank,
            dim,
            data,
            symmetry,
        })
    }

    pub fn from_vec(rank: usize, dim: usize, symmetry: Symmetry, data: Vec<T>) -> Result<Self> {
        if data.len() != dim.pow(rank as u32) {
            return Err(Error::DimensionMismatch {
                expected: dim.pow(rank as u32),
                found: data.len(),
            });
        }
        let t = Tensor {
            rank,
            dim,
            data,
            symmetry,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.rank, "index arity");
        idx.iter().fold(0, |acc, &i| {
            assert!(
                i < self.dim,
                "index {i} out of range for dimension {}",
                self.dim
            );
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &T)> {
        multi_indices(self.rank, self.dim).zip(self.data.iter())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    /// Re-declares the symmetry class, validating it.
    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Result<Self> {
        self.symmetry = symmetry;
        self.validate()?;
        Ok(self)
    }

    /// Checks every entry against the declared symmetry class.
    pub fn validate(&self) -> Result<()> {
        let violation = |index: &[usize]| Error::SymmetryViolation {
            class: self.symmetry.name(),
            index: index.to_vec(),
        };
        match self.symmetry {
            Symmetry::None => Ok(()),
            Symmetry::Symmetric2 => {
                for idx in multi_indices(2, self.dim) {
                    let (i, j) = (idx[0], idx[1]);
                    if i < j && self.get(&[i, j]) != self.get(&[j, i]) {
                        return Err(violation(&idx));
                    }
                }
                Ok(())
            }
            Symmetry::Riemann => {
                for idx in multi_indices(4, self.dim) {
                    let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
                    let t = self.get(&idx);
                    if *self.get(&[j, i, k, l]) != t.neg()
                        || *self.get(&[i, j, l, k]) != t.neg()
                        || self.get(&[k, l, i, j]) != t
                    {
                        return Err(violation(&idx));
                    }
                    let bianchi = t
                        .try_add(self.get(&[i, k, l, j]))?
                        .try_add(self.get(&[i, l, j, k]))?;
                    if !bianchi.is_zero() {
                        return Err(violation(&idx));
                    }
                }
                Ok(())
            }
        }
    }

    /// Entrywise map into another scalar type, keeping the symmetry class.
    pub fn map<U: Scalar, F>(&self, f: F) -> Result<Tensor<U>>
    where
        F: FnMut(&T) -> Result<U>,
    {
        Ok(Tensor {
            rank: self.rank,
            dim: self.dim,
            data: self.data.iter().map(f).collect::<Result<Vec<_>>>()?,
            symmetry: self.symmetry,
        })
    }

    pub fn try_add(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        if self.rank != other.rank || self.dim != other.dim {
            return Err(Error::Argument("tensor shapes differ".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<Vec<_>>>()?;
        let symmetry = if self.symmetry == other.symmetry {
            self.symmetry
        } else {
            Symmetry::None
        };
        Ok(Tensor {
            rank: self.rank,
            dim: self.dim,
            data,
            symmetry,
        })
    }

    /// Sums over paired slots: `pairs[(a, b)]` contracts slot `a` of `self`
    /// with slot `b` of `other`. Free slots of `self` come first in the
    /// result, then free slots of `other`, each in their original order.
    pub fn contract(&self, other: &Tensor<T>, pairs: &[(usize, usize)]) -> Result<Tensor<T>> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if a >= self.rank || b >= other.rank {
                return Err(Error::Argument(format!(
                    "contraction pair ({a}, {b}) exceeds ranks ({}, {})",
                    self.rank, other.rank
                )));
            }
            if pairs[..k].iter().any(|&(a2, b2)| a2 == a || b2 == b) {
                return Err(Error::Argument(format!(
                    "slot reused in contraction pair ({a}, {b})"
                )));
            }
        }
        let free_a: Vec<usize> = (0..self.rank)
            .filter(|s| pairs.iter().all(|p| p.0 != *s))
            .collect();
        let free_b: Vec<usize> = (0..other.rank)
            .filter(|s| pairs.iter().all(|p| p.1 != *s))
            .collect();
        let rank = free_a.len() + free_b.len();
        let dim = self.dim;
        let sums: Vec<Vec<usize>> = multi_indices(pairs.len(), dim).collect();

        Tensor::from_fn_unchecked(rank, dim, Symmetry::None, |out| {
            let mut ia = vec![0; self.rank];
            let mut ib = vec![0; other.rank];
            for (k, &s) in free_a.iter().enumerate() {
                ia[s] = out[k];
            }
            for (k, &s) in free_b.iter().enumerate() {
                ib[s] = out[free_a.len() + k];
            }
            let mut acc: Option<T> = None;
            for summed in &sums {
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    ia[a] = summed[p];
                    ib[b] = summed[p];
                }
                let term = self.get(&ia).try_mul(other.get(&ib))?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.try_add(&term)?,
                });
            }
            Ok(acc.expect("dimension is positive"))
        })
    }
}

impl Tensor<WFrac> {
    /// Exact entrywise value at a rational point.
    pub fn eval(&self, point: &[Rational]) -> Result<Tensor<Rational>> {
        self.map(|e| e.eval(point))
    }
}

impl Tensor<Rational> {
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(Rational::to_f64).collect()
    }
}

/// A contiguous block of `dim^rank` entries, serialized as nested arrays.
struct Nested<'a, T> {
    data: &'a [T],
    rank: usize,
    dim: usize,
}

impl<T: serde::Serialize> serde::Serialize for Nested<'_, T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.rank == 0 {
            return self.data[0].serialize(s);
        }
        let stride = self.dim.pow(self.rank as u32 - 1);
        s.collect_seq(
            self.data
                .chunks(stride.max(1))
                .take(self.dim)
                .map(|chunk| Nested {
                    data: chunk,
                    rank: self.rank - 1,
                    dim: self.dim,
                }),
        )
    }
}

/// Row-major nested arrays, one level per slot.
impl<T: serde::Serialize> serde::Serialize for Tensor<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Nested {
            data: &self.data,
            rank: self.rank,
            dim: self.dim,
        }
        .serialize(s)
    }
}

/// Square matrix of rationals as a rank-2 tensor.
pub fn rational_matrix(rows: &[Vec<Rational>], symmetry: Symmetry) -> Result<Tensor<Rational>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Argument("matrix is not square".into()));
    }
    Tensor::from_fn(2, n, symmetry, |idx| Ok(rows[idx[0]][idx[1]].clone()))
}
