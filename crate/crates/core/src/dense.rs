//! Floating rank-4 arrays for the numerical side of the crate.

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::algebra::{Rational, Tensor};

/// A dense `n⁴` array of `f64`, row-major in `(i, j, k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Array4 {
    n: usize,
    data: Vec<f64>,
}

impl Array4 {
    pub fn zeros(n: usize) -> Self {
        Array4 {
            n,
            data: vec![0.0; n.pow(4)],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut([usize; 4]) -> f64) -> Self {
        let mut a = Array4::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        a.set([i, j, k, l], f([i, j, k, l]));
                    }
                }
            }
        }
        a
    }

    pub fn from_rational(t: &Tensor<Rational>) -> Self {
        assert_eq!(t.rank(), 4, "rank-4 tensor expected");
        Array4 {
            n: t.dim(),
            data: t.to_f64(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, [i, j, k, l]: [usize; 4]) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    pub fn get(&self, idx: [usize; 4]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: [usize; 4], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Array4) -> f64 {
        assert_eq!(self.n, other.n, "array dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `(self − other) / d`, entrywise.
    pub fn diff_quotient(&self, other: &Array4, d: f64) -> Array4 {
        assert_eq!(self.n, other.n, "array dimensions differ");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) / d)
            .collect();
        Array4 { n: self.n, data }
    }

    pub fn scaled(&self, c: f64) -> Array4 {
        Array4 {
            n: self.n,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// Largest deviation from the algebraic curvature symmetries: pair
    /// antisymmetry, pair exchange and the first Bianchi identity.
    pub fn riemann_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let t = self.get([i, j, k, l]);
                        worst = worst
                            .max((t + self.get([j, i, k, l])).abs())
                            .max((t + self.get([i, j, l, k])).abs())
                            .max((t - self.get([k, l, i, j])).abs())
                            .max((t + self.get([i, k, l, j]) + self.get([i, l, j, k])).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Nested `[i][j][k][l]` arrays of [`fmt_f64`] strings.
impl Serialize for Array4 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n = self.n;
        let mut outer = s.serialize_seq(Some(n))?;
        for i in 0..n {
            let block: Vec<Vec<Vec<String>>> = (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| (0..n).map(|l| fmt_f64(self.get([i, j, k, l]))).collect())
                        .collect()
                })
                .collect();
            outer.serialize_element(&block)?;
        }
        outer.end()
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
