//! Polynomials over half-integer powers of `W = 1 + |∇f|²`.
//!
//! Every quantity induced on a graph hypersurface (metric inverse,
//! Christoffel symbols, second fundamental form, curvature) is a polynomial
//! divided by `W^(k/2)`. [`WFrac`] stores exactly that pair, unreduced, and
//! shares the defining polynomial `f` through an [`Arc<WContext>`].

use std::fmt;
use std::sync::{Arc, RwLock};

use super::{Poly, Rational};
use crate::error::{Error, Result};

/// The polynomial `f` together with the derived data every [`WFrac`]
/// operation needs: `∇f`, `W`, `∂W`, and a cache of integer powers of `W`.
pub struct WContext {
    f: Poly,
    grad: Vec<Poly>,
    w: Poly,
    dw: Vec<Poly>,
    wpowers: RwLock<Vec<Poly>>,
}

impl WContext {
    pub fn new(f: Poly) -> Arc<Self> {
        let n = f.nvars();
        let grad: Vec<Poly> = (0..n).map(|i| f.diff(i).expect("axis in range")).collect();
        let w = grad.iter().fold(Poly::one(n), |acc, g| &acc + &(g * g));
        let dw = (0..n).map(|s| w.diff(s).expect("axis in range")).collect();
        Arc::new(WContext {
            f,
            grad,
            w: w.clone(),
            dw,
            wpowers: RwLock::new(vec![Poly::one(n), w]),
        })
    }

    pub fn f(&self) -> &Poly {
        &self.f
    }

    pub fn nvars(&self) -> usize {
        self.f.nvars()
    }

    /// `∂_i f`.
    pub fn grad(&self, i: usize) -> &Poly {
        &self.grad[i]
    }

    /// `W = 1 + Σ (∂_i f)²`.
    pub fn w(&self) -> &Poly {
        &self.w
    }

    /// `∂_s W = 2 Σ_q ∂_q f ∂_s ∂_q f`.
    pub fn dw(&self, s: usize) -> &Poly {
        &self.dw[s]
    }

    /// `W^k`, memoized.
    pub fn w_pow(&self, k: u32) -> Poly {
        let k = k as usize;
        if let Some(p) = self.wpowers.read().expect("cache lock").get(k) {
            return p.clone();
        }
        let mut cache = self.wpowers.write().expect("cache lock");
        while cache.len() <= k {
            let next = &cache[cache.len() - 1] * &self.w;
            cache.push(next);
        }
        cache[k].clone()
    }
}

impl fmt::Debug for WContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WContext").field("f", &self.f).finish()
    }
}

/// `num / W^(halves/2)`.
#[derive(Clone)]
pub struct WFrac {
    num: Poly,
    halves: u32,
    ctx: Arc<WContext>,
}

impl WFrac {
    pub fn new(num: Poly, halves: u32, ctx: &Arc<WContext>) -> Result<Self> {
        if num.nvars() != ctx.nvars() {
            return Err(Error::DimensionMismatch {
                expected: ctx.nvars(),
                found: num.nvars(),
            });
        }
        Ok(WFrac {
            num,
            halves,
            ctx: Arc::clone(ctx),
        })
    }

    /// A polynomial value (`W^0` denominator).
    pub fn poly(num: Poly, ctx: &Arc<WContext>) -> Self {
        WFrac::new(num, 0, ctx).expect("polynomial from the surface's own ring")
    }

    pub fn zero(ctx: &Arc<WContext>) -> Self {
        WFrac {
            num: Poly::zero(ctx.nvars()),
            halves: 0,
            ctx: Arc::clone(ctx),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    /// Exponent of `W` in half-units: `W^(halves/2)`.
    pub fn halves(&self) -> u32 {
        self.halves
    }

    pub fn context(&self) -> &Arc<WContext> {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn check_ctx(&self, other: &WFrac) -> Result<()> {
        if Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx.f == other.ctx.f {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    /// Numerator rewritten over `W^(target/2)`; `target - halves` must be even
    /// and non-negative.
    fn lifted(&self, target: u32) -> Poly {
        debug_assert!(target >= self.halves && (target - self.halves).is_multiple_of(2));
        let k = (target - self.halves) / 2;
        if k == 0 {
            self.num.clone()
        } else {
            &self.num * &self.ctx.w_pow(k)
        }
    }

    pub fn try_add(&self, other: &WFrac) -> Result<WFrac> {
        self.check_ctx(other)?;
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        if self.halves % 2 != other.halves % 2 {
            return Err(Error::ParityMismatch {
                lhs: self.halves,
                rhs: other.halves,
            });
        }
        let target = self.halves.max(other.halves);
        Ok(WFrac {
            num: &self.lifted(target) + &other.lifted(target),
            halves: target,
            ctx: Arc::clone(&self.ctx),
        })
    }

    pub fn try_sub(&self, other: &WFrac) -> Result<WFrac> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &WFrac) -> Result<WFrac> {
        self.check_ctx(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(WFrac::zero(&self.ctx));
        }
        Ok(WFrac {
            num: &self.num * &other.num,
            halves: self.halves + other.halves,
            ctx: Arc::clone(&self.ctx),
        })
    }

    pub fn neg(&self) -> WFrac {
        WFrac {
            num: -&self.num,
            halves: self.halves,
            ctx: Arc::clone(&self.ctx),
        }
    }

    pub fn scale(&self, c: &Rational) -> WFrac {
        WFrac {
            num: self.num.scale(c),
            halves: self.halves,
            ctx: Arc::clone(&self.ctx),
        }
    }

    /// Multiplies by a plain polynomial.
    pub fn mul_poly(&self, p: &Poly) -> WFrac {
        WFrac {
            num: &self.num * p,
            halves: self.halves,
            ctx: Arc::clone(&self.ctx),
        }
    }

    /// Exact partial derivative by the quotient rule:
    /// `∂(u / W^k) = (∂u · W - k · u · ∂W) / W^(k+1)` with `k = halves/2`.
    ///
    /// Polynomials differentiate in place, and when `∂_s W` vanishes the
    /// denominator is left unchanged.
    pub fn diff(&self, axis: usize) -> Result<WFrac> {
        let du = self.num.diff(axis)?;
        if self.is_zero() {
            return Ok(WFrac::zero(&self.ctx));
        }
        let dw = self.ctx.dw(axis);
        if self.halves == 0 || dw.is_zero() {
            return Ok(WFrac {
                num: du,
                halves: self.halves,
                ctx: Arc::clone(&self.ctx),
            });
        }
        let k = Rational::new(i64::from(self.halves), 2);
        let num = &(&du * self.ctx.w()) - &(&self.num * dw).scale(&k);
        Ok(WFrac {
            num,
            halves: self.halves + 2,
            ctx: Arc::clone(&self.ctx),
        })
    }

    /// Exact value at a rational point. Odd half-powers have no rational
    /// value in general and are rejected.
    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        let num = self.num.eval(point)?;
        if num.is_zero() {
            return Ok(num);
        }
        if self.halves % 2 == 1 {
            return Err(Error::IrrationalValue(self.halves));
        }
        let w = self.ctx.w.eval(point)?;
        Ok(&num / &w.pow(self.halves / 2))
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        let num = self.num.eval_f64(point)?;
        let w = self.ctx.w.eval_f64(point)?;
        Ok(num / w.powf(f64::from(self.halves) / 2.0))
    }
}

impl PartialEq for WFrac {
    /// Cross-multiplied comparison. Values whose half-powers differ in
    /// parity compare equal only when both vanish.
    fn eq(&self, other: &WFrac) -> bool {
        if self.check_ctx(other).is_err() {
            return false;
        }
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        if self.halves % 2 != other.halves % 2 {
            return false;
        }
        let target = self.halves.max(other.halves);
        self.lifted(target) == other.lifted(target)
    }
}

impl fmt::Display for WFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.halves {
            0 => write!(f, "{}", self.num),
            h if h % 2 == 0 => write!(f, "({}) / W^{}", self.num, h / 2),
            h => write!(f, "({}) / W^({h}/2)", self.num),
        }
    }
}

impl fmt::Debug for WFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
