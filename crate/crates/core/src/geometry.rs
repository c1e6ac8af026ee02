//! Induced geometry of a graph hypersurface `M = graph(f) ⊂ ℝⁿ⁺¹`.
//!
//! The embedding is `F = (id, f)`, covered by a single chart. Everything the
//! Euclidean ambient induces on `M` has a closed form in the derivatives of
//! `f` and the scalar `W = 1 + |∇f|²`:
//!
//! | quantity | closed form |
//! |---|---|
//! | metric | `g_ij = δ_ij + ∂_i f ∂_j f` |
//! | determinant | `det g = W` |
//! | inverse metric | `g^ij = δ_ij − ∂_i f ∂_j f / W` |
//! | Christoffel symbols | `Γ^k_ij = ∂_k f ∂_i ∂_j f / W` |
//! | second fundamental form | `h_ij = ∂_i ∂_j f / √W` |
//! | curvature | `R_ijkl = h_il h_jk − h_ik h_jl = A_ijkl / W` |
//!
//! with `A_ijkl = ∂_i∂_l f ∂_j∂_k f − ∂_i∂_k f ∂_j∂_l f`.
//!
//! Independently of these closed forms, [`christoffel_from_metric`] and
//! [`intrinsic_riemann`] compute the same objects from the metric alone by
//! their definitions. The curvature convention of the whole crate is fixed by
//! [`intrinsic_riemann`]: `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk −
//! Γ^l_jm Γ^m_ik`, lowered as `R_ijkl = g_lm R^m_ijk`, so that the sectional
//! curvature of the plane `(e_i, e_j)` is `R_ijji / |e_i ∧ e_j|²`.
//! [`curvature_sign`] measures how the closed form relates to it.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::algebra::{cofactor_det, Poly, Rational, Symmetry, Tensor, WContext, WFrac};
use crate::error::{Error, Result};

pub struct GraphSurface {
    ctx: Arc<WContext>,
    hessian: Vec<Vec<Poly>>,
    metric: OnceLock<Tensor<WFrac>>,
    metric_inv: OnceLock<Tensor<WFrac>>,
    christoffel: OnceLock<Tensor<WFrac>>,
    second_fundamental: OnceLock<Tensor<WFrac>>,
    a_tensor: OnceLock<Tensor<WFrac>>,
    riemann: OnceLock<Tensor<WFrac>>,
}

impl std::fmt::Debug for GraphSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphSurface").field("f", self.f()).finish()
    }
}

/// First committed value wins; racing computations produce the same value.
fn cached<F>(cell: &OnceLock<Tensor<WFrac>>, compute: F) -> Result<&Tensor<WFrac>>
where
    F: FnOnce() -> Result<Tensor<WFrac>>,
{
    if let Some(t) = cell.get() {
        return Ok(t);
    }
    let t = compute()?;
    Ok(cell.get_or_init(|| t))
}

impl GraphSurface {
    pub fn new(f: Poly) -> Self {
        let ctx = WContext::new(f);
        let n = ctx.nvars();
        let hessian = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| ctx.grad(i).diff(j).expect("axis in range"))
                    .collect()
            })
            .collect();
        GraphSurface {
            ctx,
            hessian,
            metric: OnceLock::new(),
            metric_inv: OnceLock::new(),
            christoffel: OnceLock::new(),
            second_fundamental: OnceLock::new(),
            a_tensor: OnceLock::new(),
            riemann: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.ctx.nvars()
    }

    pub fn f(&self) -> &Poly {
        self.ctx.f()
    }

    pub fn context(&self) -> &Arc<WContext> {
        &self.ctx
    }

    /// `W = 1 + |∇f|²`.
    pub fn w(&self) -> &Poly {
        self.ctx.w()
    }

    /// `∂_i ∂_j f`.
    pub fn hessian(&self, i: usize, j: usize) -> &Poly {
        &self.hessian[i][j]
    }

    /// The unit normal `N = (∇f, −1) / √W` as its polynomial direction and
    /// the scalar factor `W^(-1/2)`.
    pub fn unit_normal(&self) -> (Vec<Poly>, WFrac) {
        let n = self.dim();
        let mut dir: Vec<Poly> = (0..n).map(|i| self.ctx.grad(i).clone()).collect();
        dir.push(Poly::constant(n, Rational::from_integer(-1)));
        let scale = WFrac::new(Poly::one(n), 1, &self.ctx).expect("same ring");
        (dir, scale)
    }

    fn wfrac(&self, num: Poly, halves: u32) -> WFrac {
        WFrac::new(num, halves, &self.ctx).expect("same ring")
    }

    fn delta(&self, i: usize, j: usize) -> Poly {
        if i == j {
            Poly::one(self.dim())
        } else {
            Poly::zero(self.dim())
        }
    }

    /// `g_ij = δ_ij + ∂_i f ∂_j f`.
    pub fn metric(&self) -> Result<&Tensor<WFrac>> {
        cached(&self.metric, || {
            Tensor::from_fn(2, self.dim(), Symmetry::Symmetric2, |x| {
                let (i, j) = (x[0], x[1]);
                Ok(self.wfrac(
                    &self.delta(i, j) + &(self.ctx.grad(i) * self.ctx.grad(j)),
                    0,
                ))
            })
        })
    }

    /// `det g = 1 + |∇f|²`.
    pub fn metric_det(&self) -> Poly {
        self.w().clone()
    }

    /// Determinant of the metric by cofactor expansion; agrees with
    /// [`metric_det`](Self::metric_det).
    pub fn metric_det_cofactor(&self) -> Result<Poly> {
        let g = self.metric()?;
        let n = self.dim();
        let rows: Vec<Vec<Poly>> = (0..n)
            .map(|i| (0..n).map(|j| g.get(&[i, j]).num().clone()).collect())
            .collect();
        Ok(cofactor_det(&rows, n))
    }

    /// `g^ij = (δ_ij W − ∂_i f ∂_j f) / W`.
    pub fn metric_inv(&self) -> Result<&Tensor<WFrac>> {
        cached(&self.metric_inv, || {
            Tensor::from_fn(2, self.dim(), Symmetry::Symmetric2, |x| {
                let (i, j) = (x[0], x[1]);
                let num = &(&self.delta(i, j) * self.w()) - &(self.ctx.grad(i) * self.ctx.grad(j));
                Ok(self.wfrac(num, 2))
            })
        })
    }

    /// `Γ^k_ij = ∂_k f ∂_i ∂_j f / W`, stored at index `[k, i, j]`.
    pub fn christoffel(&self) -> Result<&Tensor<WFrac>> {
        cached(&self.christoffel, || {
            Tensor::from_fn(3, self.dim(), Symmetry::None, |x| {
                let (k, i, j) = (x[0], x[1], x[2]);
                Ok(self.wfrac(self.ctx.grad(k) * &self.hessian[i][j], 2))
            })
        })
    }

    /// `h_ij = ∂_i ∂_j f / √W`.
    pub fn second_fundamental(&self) -> Result<&Tensor<WFrac>> {
        cached(&self.second_fundamental, || {
            Tensor::from_fn(2, self.dim(), Symmetry::Symmetric2, |x| {
                Ok(self.wfrac(self.hessian[x[0]][x[1]].clone(), 1))
            })
        })
    }

    /// `A_ijkl = ∂_i∂_l f ∂_j∂_k f − ∂_i∂_k f ∂_j∂_l f` (polynomial entries).
    pub fn a_tensor(&self) -> Result<&Tensor<WFrac>> {
        cached(&self.a_tensor, || {
            let h = &self.hessian;
            Tensor::from_fn(4, self.dim(), Symmetry::Riemann, |x| {
                let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
                Ok(self.wfrac(&(&h[i][l] * &h[j][k]) - &(&h[i][k] * &h[j][l]), 0))
            })
        })
    }

    /// Curvature from the Gauss equation: `R_ijkl = A_ijkl / W`.
    pub fn gauss_riemann(&self) -> Result<&Tensor<WFrac>> {
        cached(&self.riemann, || {
            self.a_tensor()?.map(|a| Ok(self.wfrac(a.num().clone(), 2)))
        })
    }

    /// The Gauss equation assembled from the second fundamental form itself,
    /// `h_il h_jk − h_ik h_jl`.
    pub fn gauss_riemann_from_h(&self) -> Result<Tensor<WFrac>> {
        let h = self.second_fundamental()?;
        Tensor::from_fn(4, self.dim(), Symmetry::Riemann, |x| {
            let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
            h.get(&[i, l])
                .try_mul(h.get(&[j, k]))?
                .try_sub(&h.get(&[i, k]).try_mul(h.get(&[j, l]))?)
        })
    }

    /// `g(x)` at a rational point, without building the symbolic metric.
    pub fn metric_at(&self, point: &[Rational]) -> Result<Tensor<Rational>> {
        let df = self.gradient_at(point)?;
        Tensor::from_fn_unchecked(2, self.dim(), Symmetry::Symmetric2, |x| {
            let d = if x[0] == x[1] {
                Rational::one()
            } else {
                Rational::zero()
            };
            Ok(&d + &(&df[x[0]] * &df[x[1]]))
        })
    }

    /// `Ric(x)` in the reference convention at a rational point. With
    /// `H = ∂∂f(x)` and `R = σ A / W`, the trace collapses to
    /// `Ric = σ (tr(g⁻¹H) H − H g⁻¹ H) / W`.
    pub fn ricci_at(&self, point: &[Rational]) -> Result<Tensor<Rational>> {
        let n = self.dim();
        let df = self.gradient_at(point)?;
        let hess: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..n).map(|j| self.hessian(i, j).eval(point)).collect())
            .collect::<Result<_>>()?;
        let w = &Rational::one() + &df.iter().map(|d| d * d).sum::<Rational>();
        let inv_w = w.recip()?;
        let ginv: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|l| {
                        let d = if i == l {
                            Rational::one()
                        } else {
                            Rational::zero()
                        };
                        &d - &(&(&df[i] * &df[l]) * &inv_w)
                    })
                    .collect()
            })
            .collect();
        // g⁻¹H
        let gh: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| (0..n).map(|l| &ginv[i][l] * &hess[l][k]).sum())
                    .collect()
            })
            .collect();
        let trace: Rational = (0..n).map(|i| gh[i][i].clone()).sum();
        let sign = curvature_sign();
        Tensor::from_fn_unchecked(2, n, Symmetry::Symmetric2, |x| {
            let (j, k) = (x[0], x[1]);
            let hgh: Rational = (0..n).map(|i| &hess[j][i] * &gh[i][k]).sum();
            Ok(sign.apply(&(&(&(&trace * &hess[j][k]) - &hgh) * &inv_w)))
        })
    }

    fn gradient_at(&self, point: &[Rational]) -> Result<Vec<Rational>> {
        (0..self.dim())
            .map(|i| self.ctx.grad(i).eval(point))
            .collect()
    }
}

/// `Σ_l g_il g^lj`.
fn metric_product(g: &Tensor<WFrac>, ginv: &Tensor<WFrac>) -> Result<Tensor<WFrac>> {
    g.contract(ginv, &[(1, 0)])
}

/// Checks that `ginv` is the exact inverse of `g`.
pub fn check_inverse_pair(g: &Tensor<WFrac>, ginv: &Tensor<WFrac>) -> Result<()> {
    if g.rank() != 2 || ginv.rank() != 2 || g.dim() != ginv.dim() {
        return Err(Error::Precondition(
            "metric and inverse must be square rank-2 tensors".into(),
        ));
    }
    let prod = metric_product(g, ginv)?;
    let ctx = g.get(&[0, 0]).context();
    for (idx, e) in prod.entries() {
        let expected = if idx[0] == idx[1] {
            WFrac::poly(Poly::one(ctx.nvars()), ctx)
        } else {
            WFrac::zero(ctx)
        };
        if *e != expected {
            return Err(Error::Precondition(format!(
                "g · g⁻¹ differs from the identity at {idx:?}"
            )));
        }
    }
    Ok(())
}

/// Christoffel symbols of the second kind from their definition,
/// `Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, at index `[k, i, j]`.
pub fn christoffel_from_metric(g: &Tensor<WFrac>, ginv: &Tensor<WFrac>) -> Result<Tensor<WFrac>> {
    check_inverse_pair(g, ginv)?;
    christoffel_unchecked(g, ginv)
}

fn christoffel_unchecked(g: &Tensor<WFrac>, ginv: &Tensor<WFrac>) -> Result<Tensor<WFrac>> {
    let n = g.dim();
    let dg: Vec<Tensor<WFrac>> = (0..n)
        .map(|s| g.map(|e| e.diff(s)))
        .collect::<Result<_>>()?;
    let half = Rational::new(1, 2);
    Tensor::from_fn_unchecked(3, n, Symmetry::None, |x| {
        let (k, i, j) = (x[0], x[1], x[2]);
        let mut acc = WFrac::zero(g.get(&[0, 0]).context());
        for l in 0..n {
            let bracket = dg[i]
                .get(&[j, l])
                .try_add(dg[j].get(&[i, l]))?
                .try_sub(dg[l].get(&[i, j]))?;
            acc = acc.try_add(&ginv.get(&[k, l]).try_mul(&bracket)?)?;
        }
        Ok(acc.scale(&half))
    })
}

/// Curvature from the metric alone, in the crate's reference convention:
/// `R_ijkl = g_lm (∂_i Γ^m_jk − ∂_j Γ^m_ik + Γ^m_ip Γ^p_jk − Γ^m_jp Γ^p_ik)`.
pub fn intrinsic_riemann(g: &Tensor<WFrac>, ginv: &Tensor<WFrac>) -> Result<Tensor<WFrac>> {
    let gamma = christoffel_from_metric(g, ginv)?;
    let n = g.dim();
    let dgamma: Vec<Tensor<WFrac>> = (0..n)
        .map(|s| gamma.map(|e| e.diff(s)))
        .collect::<Result<_>>()?;
    let zero = WFrac::zero(g.get(&[0, 0]).context());

    // R^m_ijk for i < j; the rest follows from antisymmetry in (i, j).
    let mut upper = vec![zero.clone(); n.pow(4)];
    let at = |m: usize, i: usize, j: usize, k: usize| ((m * n + i) * n + j) * n + k;
    for m in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let mut r = dgamma[i]
                        .get(&[m, j, k])
                        .try_sub(dgamma[j].get(&[m, i, k]))?;
                    for p in 0..n {
                        let quad = gamma
                            .get(&[m, i, p])
                            .try_mul(gamma.get(&[p, j, k]))?
                            .try_sub(&gamma.get(&[m, j, p]).try_mul(gamma.get(&[p, i, k]))?)?;
                        r = r.try_add(&quad)?;
                    }
                    upper[at(m, j, i, k)] = r.neg();
                    upper[at(m, i, j, k)] = r;
                }
            }
        }
    }
    Tensor::from_fn_unchecked(4, n, Symmetry::Riemann, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let mut acc = zero.clone();
        for m in 0..n {
            acc = acc.try_add(&g.get(&[l, m]).try_mul(&upper[at(m, i, j, k)])?)?;
        }
        Ok(acc)
    })
}

/// [`intrinsic_riemann`] evaluated at a single rational point. The
/// Christoffel symbols and their first derivatives are symbolic; the
/// quadratic terms and the lowering are done in exact rationals.
pub fn intrinsic_riemann_at(
    g: &Tensor<WFrac>,
    ginv: &Tensor<WFrac>,
    point: &[Rational],
) -> Result<Tensor<Rational>> {
    let gamma = christoffel_from_metric(g, ginv)?;
    let n = g.dim();
    let gam = gamma.eval(point)?;
    let dgam: Vec<Tensor<Rational>> = (0..n)
        .map(|s| gamma.map(|e| e.diff(s)?.eval(point)))
        .collect::<Result<_>>()?;
    let gp = g.eval(point)?;
    let upper = |m: usize, i: usize, j: usize, k: usize| -> Rational {
        let mut r = dgam[i].get(&[m, j, k]) - dgam[j].get(&[m, i, k]);
        for p in 0..n {
            r += gam.get(&[m, i, p]) * gam.get(&[p, j, k]);
            r -= gam.get(&[m, j, p]) * gam.get(&[p, i, k]);
        }
        r
    };
    Tensor::from_fn_unchecked(4, n, Symmetry::Riemann, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        Ok((0..n).map(|m| gp.get(&[l, m]) * &upper(m, i, j, k)).sum())
    })
}

/// `Ric_jk = Σ_il g^il R_ijkl`, the trace over the first and last slots.
pub fn ricci<T: crate::algebra::Scalar>(rm: &Tensor<T>, ginv: &Tensor<T>) -> Result<Tensor<T>> {
    if rm.rank() != 4 || ginv.rank() != 2 {
        return Err(Error::Argument(
            "ricci needs a rank-4 curvature and a rank-2 inverse metric".into(),
        ));
    }
    rm.contract(ginv, &[(0, 0), (3, 1)])?
        .with_symmetry(Symmetry::Symmetric2)
}

/// `Σ_jk g^jk Ric_jk`.
pub fn scalar_curvature<T: crate::algebra::Scalar>(rm: &Tensor<T>, ginv: &Tensor<T>) -> Result<T> {
    let ric = ricci(rm, ginv)?;
    let s = ric.contract(ginv, &[(0, 0), (1, 1)])?;
    Ok(s.data()[0].clone())
}

/// Sectional curvature `K(e_i, e_j) = R_ijji / (g_ii g_jj − g_ij²)` at
/// `point`, with `rm` in the reference convention.
pub fn sectional(
    rm: &Tensor<WFrac>,
    g: &Tensor<WFrac>,
    i: usize,
    j: usize,
    point: &[Rational],
) -> Result<Rational> {
    let n = g.dim();
    if i >= n || j >= n {
        return Err(Error::Argument(format!(
            "plane ({}, {}) out of range",
            i + 1,
            j + 1
        )));
    }
    if i == j {
        return Err(Error::DegeneratePlane { i: i + 1, j: j + 1 });
    }
    let gij = g.get(&[i, j]).eval(point)?;
    let area = &(&g.get(&[i, i]).eval(point)? * &g.get(&[j, j]).eval(point)?) - &(&gij * &gij);
    if area.is_zero() {
        return Err(Error::DegeneratePlane { i: i + 1, j: j + 1 });
    }
    Ok(&rm.get(&[i, j, j, i]).eval(point)? / &area)
}

/// A sectional curvature value at a point, with 1-based plane labels.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SectionalReport {
    pub point: Vec<Rational>,
    pub plane: [usize; 2],
    pub value: Rational,
    pub approx: f64,
}

impl SectionalReport {
    pub fn new(
        rm: &Tensor<WFrac>,
        g: &Tensor<WFrac>,
        i: usize,
        j: usize,
        point: &[Rational],
    ) -> Result<Self> {
        let value = sectional(rm, g, i, j, point)?;
        Ok(SectionalReport {
            point: point.to_vec(),
            plane: [i + 1, j + 1],
            approx: value.to_f64(),
            value,
        })
    }
}

/// Relation between the Gauss-equation curvature and the reference
/// convention: `intrinsic_riemann = sign · gauss_riemann`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurvatureSign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl CurvatureSign {
    pub fn as_i64(self) -> i64 {
        match self {
            CurvatureSign::Plus => 1,
            CurvatureSign::Minus => -1,
        }
    }

    pub fn apply(self, r: &Rational) -> Rational {
        match self {
            CurvatureSign::Plus => r.clone(),
            CurvatureSign::Minus => -r,
        }
    }
}

/// `f = ½ Σ x_i²`.
pub fn paraboloid(n: usize) -> Poly {
    (0..n).fold(Poly::zero(n), |acc, i| {
        let x = Poly::var(n, i).expect("axis in range");
        &acc + &(&x * &x).scale(&Rational::new(1, 2))
    })
}

/// Calibrates the curvature convention on the paraboloid `f = ½(x₁² + x₂²)`.
///
/// Requires the intrinsic sectional curvature at the vertex to be exactly
/// `+1`, then measures the sign relating the Gauss-equation curvature to the
/// intrinsic one there.
pub fn calibrate_sign() -> Result<CurvatureSign> {
    let s = GraphSurface::new(paraboloid(2));
    let g = s.metric()?;
    let ginv = s.metric_inv()?;
    let origin = vec![Rational::zero(); 2];
    let intrinsic = intrinsic_riemann(g, ginv)?;
    let k = sectional(&intrinsic, g, 0, 1, &origin)?;
    if !k.is_one() {
        return Err(Error::Precondition(format!(
            "paraboloid vertex sectional curvature is {k}, expected 1/1"
        )));
    }
    let gauss = s.gauss_riemann()?.get(&[0, 1, 1, 0]).eval(&origin)?;
    let ratio = &intrinsic.get(&[0, 1, 1, 0]).eval(&origin)? / &gauss;
    if ratio.is_one() {
        Ok(CurvatureSign::Plus)
    } else if (-&ratio).is_one() {
        Ok(CurvatureSign::Minus)
    } else {
        Err(Error::Precondition(format!(
            "calibration ratio {ratio} is not ±1"
        )))
    }
}

/// The calibrated sign, computed once per process.
pub fn curvature_sign() -> CurvatureSign {
    static SIGN: OnceLock<CurvatureSign> = OnceLock::new();
    *SIGN.get_or_init(|| calibrate_sign().expect("paraboloid calibration"))
}

/// Curvature in the reference convention, built from the closed form.
pub fn reference_riemann(s: &GraphSurface) -> Result<Tensor<WFrac>> {
    let gauss = s.gauss_riemann()?;
    match curvature_sign() {
        CurvatureSign::Plus => Ok(gauss.clone()),
        CurvatureSign::Minus => gauss.map(|e| Ok(e.neg())),
    }
}

/// Whether every entry vanishes at `point`. Only numerators matter, so odd
/// half-powers are fine here.
pub fn vanishes_at(t: &Tensor<WFrac>, point: &[Rational]) -> Result<bool> {
    for e in t.data() {
        if !e.num().eval(point)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}
