//! The cubic family `f = Σ_{r,q} a_rq x_r x_q²` and the first-order change
//! of its curvature at the origin under Ricci flow.
//!
//! Every second derivative of `f` is linear, so at the origin the metric is
//! the identity and both the Christoffel symbols and the curvature vanish.
//! The heat-type evolution of the curvature then collapses to
//! `∂_t Rm(0, p) = Σ_s ∂_s ∂_s Rm(p)`, and since `Rm = A / W` with `A` and `∂A`
//! vanishing at `p`, to `Σ_s ∂_s ∂_s A_ijkl` at `p`. That is a constant
//! quadratic expression in the coefficients `a_rq`, given branch by branch in
//! [`laplacian_a_table`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{riemann_representatives, Poly, Rational, Symmetry, Tensor};
use crate::error::{Error, Result};
use crate::geometry::GraphSurface;

/// The coefficient matrix `(a_rq)`, not necessarily symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefMatrix {
    a: Vec<Vec<Rational>>,
}

impl CoefMatrix {
    pub fn new(a: Vec<Vec<Rational>>) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::Argument(
                "coefficient matrix must be at least 1×1".into(),
            ));
        }
        if let Some((r, row)) = a.iter().enumerate().find(|(_, row)| row.len() != n) {
            return Err(Error::Argument(format!(
                "a[{r}]: expected {n} entries, found {}",
                row.len()
            )));
        }
        Ok(CoefMatrix { a })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        CoefMatrix {
            a: (0..n).map(|r| (0..n).map(|q| f(r, q)).collect()).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        CoefMatrix::from_fn(n, |_, _| Rational::zero())
    }

    pub fn ones(n: usize) -> Self {
        CoefMatrix::from_fn(n, |_, _| Rational::one())
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// `a_rq` (0-based).
    pub fn get(&self, r: usize, q: usize) -> &Rational {
        &self.a[r][q]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.a
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile {
            n: self.n(),
            a: self.a.clone(),
        }
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        if file.a.len() != file.n {
            return Err(Error::Parse(format!(
                "a: expected {} rows, found {}",
                file.n,
                file.a.len()
            )));
        }
        CoefMatrix::new(file.a.clone()).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(s)?;
        CoefMatrix::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("matrix serialization is infallible")
    }
}

/// On-disk form: `{ "n": n, "a": [ ["p/q", ...], ... ] }`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub n: usize,
    pub a: Vec<Vec<Rational>>,
}

/// `a_ij = 0` above the diagonal, `1` on and below it.
pub fn lower_ones_matrix(n: usize) -> CoefMatrix {
    CoefMatrix::from_fn(n, |r, q| {
        if q <= r {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

fn var(n: usize, i: usize) -> Poly {
    Poly::var(n, i).expect("axis in range")
}

/// `f = Σ_{r,q} a_rq x_r x_q²`, homogeneous of degree 3.
pub fn cubic_family(a: &CoefMatrix) -> Poly {
    let n = a.n();
    let mut f = Poly::zero(n);
    for r in 0..n {
        for q in 0..n {
            let c = a.get(r, q);
            if c.is_zero() {
                continue;
            }
            let mut exps = vec![0u32; n];
            exps[r] += 1;
            exps[q] += 2;
            f = &f + &Poly::from_terms(n, [(exps, c.clone())]).expect("length n");
        }
    }
    f
}

/// `∂_i ∂_j f` in closed form: `2a_ij x_j + 2a_ji x_i` off the diagonal and
/// `Σ_{q≠i} 2a_qi x_q + 6a_ii x_i` on it.
pub fn hessian_closed_form(a: &CoefMatrix, i: usize, j: usize) -> Poly {
    let n = a.n();
    let lin = |c: &Rational, k: usize| var(n, k).scale(&(c * &Rational::from_integer(2)));
    if i != j {
        &lin(a.get(i, j), j) + &lin(a.get(j, i), i)
    } else {
        let mut p = var(n, i).scale(&(a.get(i, i) * &Rational::from_integer(6)));
        for q in (0..n).filter(|&q| q != i) {
            p = &p + &lin(a.get(q, i), q);
        }
        p
    }
}

/// Maps `(i,j,k,l)` to its representative `i<j`, `k<l`, `(i,j) <= (k,l)` and
/// the sign picked up on the way; `None` when a pair repeats an index.
pub fn canonical_index(idx: [usize; 4]) -> Option<([usize; 4], i32)> {
    let [mut i, mut j, mut k, mut l] = idx;
    if i == j || k == l {
        return None;
    }
    let mut sign = 1;
    if i > j {
        std::mem::swap(&mut i, &mut j);
        sign = -sign;
    }
    if k > l {
        std::mem::swap(&mut k, &mut l);
        sign = -sign;
    }
    if (i, j) > (k, l) {
        std::mem::swap(&mut i, &mut k);
        std::mem::swap(&mut j, &mut l);
    }
    Some(([i, j, k, l], sign))
}

/// Whether the index pattern is equivalent to `(i,j,i,j)` under the curvature
/// symmetries, i.e. `{i,j} = {k,l}`.
pub fn is_diagonal_pattern(idx: [usize; 4]) -> bool {
    let [i, j, k, l] = idx;
    i != j && ((i == k && j == l) || (i == l && j == k))
}

/// The branch-by-branch closed form of `A_ijkl` on the cubic family, for
/// `i<j`, `k<l`, `i<=k`. Each factor is half a second derivative of `f`.
pub fn a_tensor_case_display(a: &CoefMatrix, idx: [usize; 4]) -> Result<Poly> {
    let [i, j, k, l] = idx;
    let n = a.n();
    if !(i < j && k < l && i <= k && l < n && j < n) {
        return Err(Error::Argument(format!(
            "case display needs i<j, k<l, i<=k; got {:?}",
            idx.map(|x| x + 1)
        )));
    }
    // (a_uv x_v + a_vu x_u)
    let mixed = |u: usize, v: usize| &var(n, v).scale(a.get(u, v)) + &var(n, u).scale(a.get(v, u));
    // Σ_{q≠u} a_qu x_q + 3 a_uu x_u
    let pure = |u: usize| {
        (0..n).filter(|&q| q != u).fold(
            var(n, u).scale(&(a.get(u, u) * &Rational::from_integer(3))),
            |acc, q| &acc + &var(n, q).scale(a.get(q, u)),
        )
    };
    let four = Rational::from_integer(4);
    let branch =
        |p1: Poly, p2: Poly, m1: Poly, m2: Poly| (&(&p1 * &p2) - &(&m1 * &m2)).scale(&four);
    let distinct = i != k && i != l && j != k && j != l;
    Ok(if distinct {
        branch(mixed(i, l), mixed(k, j), mixed(i, k), mixed(j, l))
    } else if i < k && k == j {
        branch(mixed(i, l), pure(j), mixed(i, j), mixed(j, l))
    } else if i < k && l == j {
        branch(mixed(i, j), mixed(k, j), mixed(i, k), pure(j))
    } else if i == k && j != l {
        branch(mixed(i, l), mixed(i, j), mixed(j, l), pure(i))
    } else {
        // i == k, j == l
        branch(mixed(i, j), mixed(i, j), pure(i), pure(j))
    })
}

/// `Σ_s ∂_s ∂_s A_ijkl` at the origin from the five-branch table, for a
/// representative `i<j`, `k<l`, `i<=k`.
pub fn laplacian_a_table(a: &CoefMatrix, idx: [usize; 4]) -> Rational {
    let [i, j, k, l] = idx;
    let n = a.n();
    let at = |r: usize, q: usize| a.get(r, q);
    let eight = Rational::from_integer(8);
    let distinct = i != k && i != l && j != k && j != l;
    let value = if distinct {
        Rational::zero()
    } else if i < k && k == j {
        &(&(at(i, l) * at(l, j)) + &(at(l, i) * at(i, j))) - &(at(i, j) * at(l, j))
    } else if i < k && l == j {
        &(at(i, j) * at(k, j)) - &(&(at(i, k) * at(k, j)) + &(at(k, i) * at(i, j)))
    } else if i == k && j != l {
        &(at(l, i) * at(j, i)) - &(&(at(j, l) * at(l, i)) + &(at(l, j) * at(j, i)))
    } else {
        let three = Rational::from_integer(3);
        let cross: Rational = (0..n)
            .filter(|&q| q != i && q != j)
            .map(|q| at(q, i) * at(q, j))
            .sum();
        let squares = &(at(i, j) * at(i, j)) + &(at(j, i) * at(j, i));
        let rest =
            &(&cross + &(&three * &(at(i, i) * at(i, j)))) + &(&three * &(at(j, j) * at(j, i)));
        &squares - &rest
    };
    &eight * &value
}

fn extend_by_symmetry(
    n: usize,
    mut rep_value: impl FnMut([usize; 4]) -> Result<Rational>,
) -> Result<Tensor<Rational>> {
    let reps: BTreeMap<[usize; 4], Rational> = riemann_representatives(n)
        .into_iter()
        .map(|rep| Ok((rep, rep_value(rep)?)))
        .collect::<Result<_>>()?;
    Tensor::from_fn(4, n, Symmetry::Riemann, |x| {
        Ok(match canonical_index([x[0], x[1], x[2], x[3]]) {
            None => Rational::zero(),
            Some((rep, sign)) => {
                let v = reps[&rep].clone();
                if sign < 0 {
                    -v
                } else {
                    v
                }
            }
        })
    })
}

/// Independent route: differentiate `A_ijkl` of `cubic_family(a)` twice
/// along every axis and evaluate at the origin.
pub fn laplacian_a_oracle(a: &CoefMatrix) -> Result<Tensor<Rational>> {
    let n = a.n();
    let surface = GraphSurface::new(cubic_family(a));
    let at = surface.a_tensor()?;
    let origin = vec![Rational::zero(); n];
    Tensor::from_fn(4, n, Symmetry::Riemann, |x| {
        let e = at.get(x).num();
        let mut acc = Rational::zero();
        for s in 0..n {
            acc += e.diff(s)?.diff(s)?.eval(&origin)?;
        }
        Ok(acc)
    })
}

/// `Σ_s ∂_s ∂_s A_ijkl` at the origin for every index tuple, from the
/// five-branch table extended by the curvature symmetries. With `verify`
/// set, the result is also computed by [`laplacian_a_oracle`] and any
/// disagreement is an error.
pub fn laplacian_a_origin(a: &CoefMatrix, verify: bool) -> Result<Tensor<Rational>> {
    let table = extend_by_symmetry(a.n(), |rep| Ok(laplacian_a_table(a, rep)))?;
    if verify {
        let oracle = laplacian_a_oracle(a)?;
        if let Some((idx, _)) = table.entries().find(|(idx, v)| *v != oracle.get(idx)) {
            return Err(Error::Precondition(format!(
                "case table disagrees with direct differentiation at {:?}",
                idx.iter().map(|x| x + 1).collect::<Vec<_>>()
            )));
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignClass {
    AllNegative,
    AllPositive,
    Mixed,
    Zero,
}

impl SignClass {
    pub fn classify<'a>(values: impl IntoIterator<Item = &'a Rational>) -> SignClass {
        Self::from_signs(values.into_iter().map(Rational::signum))
    }

    pub fn from_signs(signs: impl IntoIterator<Item = i32>) -> SignClass {
        let (mut neg, mut pos, mut zero, mut total) = (0, 0, 0, 0);
        for s in signs {
            total += 1;
            match s {
                s if s < 0 => neg += 1,
                s if s > 0 => pos += 1,
                _ => zero += 1,
            }
        }
        if zero == total {
            SignClass::Zero
        } else if neg == total {
            SignClass::AllNegative
        } else if pos == total {
            SignClass::AllPositive
        } else {
            SignClass::Mixed
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, SignClass::AllNegative | SignClass::AllPositive)
    }
}

/// `∂_t Rm(0, p)` at the origin for the cubic family.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub matrix: CoefMatrix,
    pub dt_rm: Tensor<Rational>,
    /// Every entry not equivalent to `(i,j,i,j)` vanishes.
    pub offdiag_zero: bool,
    /// `(i, j) -> dt_rm[i,j,i,j]` for `i < j` (0-based keys).
    pub diag_entries: BTreeMap<(usize, usize), Rational>,
    pub diag_sign: SignClass,
}

impl ProbeResult {
    pub fn n(&self) -> usize {
        self.dt_rm.dim()
    }

    /// Nonzero entries at the canonical representatives, 0-based.
    pub fn nonzero_representatives(&self) -> Vec<([usize; 4], Rational)> {
        riemann_representatives(self.n())
            .into_iter()
            .map(|rep| (rep, self.dt_rm.get(&rep).clone()))
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }
}

/// 1-based on the wire: `diag_entries` is a list of `{pair, value}`.
impl Serialize for ProbeResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;

        #[derive(Serialize)]
        struct Diag<'a> {
            pair: [usize; 2],
            value: &'a Rational,
        }
        let diag: Vec<Diag> = self
            .diag_entries
            .iter()
            .map(|(&(i, j), value)| Diag {
                pair: [i + 1, j + 1],
                value,
            })
            .collect();
        let mut st = s.serialize_struct("ProbeResult", 5)?;
        st.serialize_field("n", &self.n())?;
        st.serialize_field("dt_rm", &self.dt_rm)?;
        st.serialize_field("offdiag_zero", &self.offdiag_zero)?;
        st.serialize_field("diag_entries", &diag)?;
        st.serialize_field("diag_sign", &self.diag_sign)?;
        st.end()
    }
}

/// `∂_t Rm(0, p) = Σ_s ∂_s ∂_s A / W(p)` with `W(p) = 1`.
pub fn dt_riemann_origin(a: &CoefMatrix, verify: bool) -> Result<ProbeResult> {
    let n = a.n();
    let lap = laplacian_a_origin(a, verify)?;
    let surface = GraphSurface::new(cubic_family(a));
    let w0 = surface.w().eval(&vec![Rational::zero(); n])?;
    let inv_w0 = w0.recip()?;
    let dt_rm = lap.map(|v| Ok(v * &inv_w0))?;

    let offdiag_zero = dt_rm
        .entries()
        .all(|(idx, v)| v.is_zero() || is_diagonal_pattern([idx[0], idx[1], idx[2], idx[3]]));
    let diag_entries: BTreeMap<(usize, usize), Rational> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| ((i, j), dt_rm.get(&[i, j, i, j]).clone()))
        .collect();
    let diag_sign = SignClass::classify(diag_entries.values());
    Ok(ProbeResult {
        matrix: a.clone(),
        dt_rm,
        offdiag_zero,
        diag_entries,
        diag_sign,
    })
}

/// Ordered triples of mutually distinct indices (0-based) violating
/// `a_αβ a_βγ + a_βα a_αγ = a_αγ a_βγ`. Empty iff the condition holds.
pub fn star_check(a: &CoefMatrix) -> Vec<(usize, usize, usize)> {
    let n = a.n();
    let mut out = Vec::new();
    for al in 0..n {
        for be in 0..n {
            for ga in 0..n {
                if al == be || be == ga || al == ga {
                    continue;
                }
                let lhs = &(a.get(al, be) * a.get(be, ga)) + &(a.get(be, al) * a.get(al, ga));
                let rhs = a.get(al, ga) * a.get(be, ga);
                if lhs != rhs {
                    out.push((al, be, ga));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarSearch {
    pub matrices: Vec<CoefMatrix>,
    /// Candidates inspected before stopping.
    pub examined: u64,
    /// The budget ran out before the candidate space was exhausted.
    pub truncated: bool,
}

/// Enumerates `n×n` matrices over `values` satisfying the star condition.
///
/// Candidates are visited grade by grade, where the grade is the sum of the
/// positions (in `values`) of the entries, and row-major lexicographically
/// within a grade. At most `budget` candidates are inspected.
pub fn star_search(n: usize, values: &[Rational], budget: u64) -> Result<StarSearch> {
    if values.is_empty() {
        return Err(Error::Argument("value set is empty".into()));
    }
    if n == 0 {
        return Err(Error::Argument("dimension must be positive".into()));
    }
    let cells = n * n;
    let top = values.len() - 1;
    let mut found = Vec::new();
    let mut examined = 0u64;
    let mut digits = vec![0usize; cells];
    for grade in 0..=cells * top {
        if !first_composition(&mut digits, grade, top) {
            continue;
        }
        loop {
            if examined == budget {
                return Ok(StarSearch {
                    matrices: found,
                    examined,
                    truncated: true,
                });
            }
            examined += 1;
            let m = CoefMatrix::from_fn(n, |r, q| values[digits[r * n + q]].clone());
            if star_check(&m).is_empty() {
                found.push(m);
            }
            if !next_composition(&mut digits, top) {
                break;
            }
        }
    }
    Ok(StarSearch {
        matrices: found,
        examined,
        truncated: false,
    })
}

/// Lexicographically smallest digit vector (each ≤ `top`) summing to `grade`.
fn first_composition(digits: &mut [usize], mut grade: usize, top: usize) -> bool {
    if grade > digits.len() * top {
        return false;
    }
    for d in digits.iter_mut().rev() {
        let take = grade.min(top);
        *d = take;
        grade -= take;
    }
    true
}

/// Advances to the lexicographically next digit vector with the same sum.
fn next_composition(digits: &mut [usize], top: usize) -> bool {
    let len = digits.len();
    // Find the rightmost position that can be raised while something to its
    // right can be lowered.
    let mut suffix_sum = 0;
    for pos in (0..len).rev() {
        if pos + 1 < len {
            suffix_sum += digits[pos + 1];
        }
        if digits[pos] < top && suffix_sum > 0 {
            digits[pos] += 1;
            let mut rest = suffix_sum - 1;
            for d in digits[pos + 1..].iter_mut().rev() {
                let take = rest.min(top);
                *d = take;
                rest -= take;
            }
            return true;
        }
    }
    false
}
