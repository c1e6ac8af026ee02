//! Numerical cross-check of the first-order curvature change under Ricci
//! flow: one explicit Euler step `g − 2 dt Ric`, finite-difference curvature
//! at the origin, and a convergence study against the exact value.
//!
//! Metric samples are evaluated exactly at rational points and rounded once,
//! so the floating error is the finite-difference error alone. The rate
//! estimate subtracts the curvature of the initial metric computed on the
//! same stencil: the stepped curvature is exactly linear in `dt` at the
//! origin, and the subtraction cancels the `O(h²)` stencil bias that would
//! otherwise be amplified by `1/dt`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::algebra::{Rational, Tensor};
use crate::dense::{fmt_f64, Array4};
use crate::error::{Error, Result};
use crate::geometry::{curvature_sign, GraphSurface};
use crate::ricciprobe::{cubic_family, dt_riemann_origin, CoefMatrix, SignClass};

pub const DEFAULT_FD_STEP: f64 = 1e-2;
pub const DEFAULT_DT_SWEEP: [f64; 3] = [1e-3, 5e-4, 2.5e-4];
/// Max-norm error at the smallest `dt`, relative to the largest exact entry.
pub const AGREEMENT_TOLERANCE: f64 = 0.05;
/// Accepted range for the fitted first-order convergence slope.
pub const SLOPE_RANGE: (f64, f64) = (0.8, 1.2);
/// The sign the source argument assigns to the sectional curvatures after
/// the step.
pub const CLAIMED_SIGN: &str = "negative";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Initial,
    EulerStep(f64),
    Custom,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Initial => f.write_str("initial"),
            Provenance::EulerStep(dt) => write!(f, "euler-step({})", fmt_f64(*dt)),
            Provenance::Custom => f.write_str("custom"),
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

type Evaluator = dyn Fn(&[Rational]) -> Result<DMatrix<f64>> + Send + Sync;

/// A metric given by its values at rational points.
#[derive(Clone)]
pub struct MetricField {
    n: usize,
    provenance: Provenance,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("n", &self.n)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

fn round_matrix(t: &Tensor<Rational>) -> DMatrix<f64> {
    let n = t.dim();
    DMatrix::from_fn(n, n, |i, j| t.get(&[i, j]).to_f64())
}

fn point_f64(point: &[Rational]) -> Vec<f64> {
    point.iter().map(Rational::to_f64).collect()
}

impl MetricField {
    pub fn new<F>(n: usize, provenance: Provenance, evaluator: F) -> Self
    where
        F: Fn(&[Rational]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        MetricField {
            n,
            provenance,
            evaluator: Arc::new(evaluator),
        }
    }

    /// The induced metric `g(x)` of a graph surface.
    pub fn initial(surface: Arc<GraphSurface>) -> Self {
        let n = surface.dim();
        MetricField::new(n, Provenance::Initial, move |x| {
            Ok(round_matrix(&surface.metric_at(x)?))
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn eval(&self, point: &[Rational]) -> Result<DMatrix<f64>> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: point.len(),
            });
        }
        (self.evaluator)(point)
    }
}

/// `g(x) − 2 dt Ric(x)`, formed exactly and rounded once. Every sample is
/// checked for positive definiteness.
pub fn euler_step_metric(surface: Arc<GraphSurface>, dt: f64) -> Result<MetricField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Argument(format!(
            "time step must be positive and finite, got {dt}"
        )));
    }
    let n = surface.dim();
    let two_dt = &Rational::from_integer(2) * &Rational::from_f64(dt)?;
    Ok(MetricField::new(n, Provenance::EulerStep(dt), move |x| {
        let g = surface.metric_at(x)?;
        let ric = surface.ricci_at(x)?;
        let stepped = g.try_add(&ric.map(|r| Ok(-(r * &two_dt)))?)?;
        let m = round_matrix(&stepped);
        if m.clone().cholesky().is_none() {
            return Err(Error::StepTooLarge {
                dt,
                point: point_f64(x),
            });
        }
        Ok(m)
    }))
}

/// Christoffel symbols `Γ^k_ij` at `[k][i][j]`, flattened.
fn christoffel_fd(g: &DMatrix<f64>, dg: &[&DMatrix<f64>], at: &[Rational]) -> Result<Vec<f64>> {
    let n = g.nrows();
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMetric {
            point: point_f64(at),
        })?;
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma[(k * n + i) * n + j] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

/// Curvature at `point` by nested second-order central differences with step
/// `h`, in the same convention as the exact intrinsic curvature:
/// `R_ijkl = g_lm (∂_i Γ^m_jk − ∂_j Γ^m_ik + Γ^m_ip Γ^p_jk − Γ^m_jp Γ^p_ik)`.
pub fn fd_riemann(m: &MetricField, point: &[Rational], h: f64) -> Result<Array4> {
    let n = m.n();
    if point.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: point.len(),
        });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Argument(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let hq = Rational::from_f64(h)?;
    let unit = |s: usize, a: i8| {
        let mut o = vec![0i8; n];
        o[s] = a;
        o
    };
    let add = |a: &[i8], b: &[i8]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<i8>>();

    // Γ is needed at p and p ± h e_s; each needs g at its centre and ± h e_t.
    let mut centres = vec![vec![0i8; n]];
    for s in 0..n {
        centres.push(unit(s, 1));
        centres.push(unit(s, -1));
    }
    let mut stencil: Vec<Vec<i8>> = Vec::new();
    for c in &centres {
        stencil.push(c.clone());
        for t in 0..n {
            stencil.push(add(c, &unit(t, 1)));
            stencil.push(add(c, &unit(t, -1)));
        }
    }
    stencil.sort();
    stencil.dedup();

    let locate = |o: &[i8]| -> Vec<Rational> {
        point
            .iter()
            .zip(o)
            .map(|(p, &k)| p + &(&hq * &Rational::from_integer(k as i64)))
            .collect()
    };
    let samples: BTreeMap<Vec<i8>, DMatrix<f64>> = stencil
        .par_iter()
        .map(|o| Ok((o.clone(), m.eval(&locate(o))?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    let two_h = 2.0 * h;
    let gamma_at = |c: &[i8]| -> Result<Vec<f64>> {
        let dg: Vec<DMatrix<f64>> = (0..n)
            .map(|t| (&samples[&add(c, &unit(t, 1))] - &samples[&add(c, &unit(t, -1))]) / two_h)
            .collect();
        let refs: Vec<&DMatrix<f64>> = dg.iter().collect();
        christoffel_fd(&samples[c], &refs, &locate(c))
    };
    let gamma = gamma_at(&centres[0])?;
    let dgamma: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let plus = gamma_at(&unit(s, 1))?;
            let minus = gamma_at(&unit(s, -1))?;
            Ok(plus
                .iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / two_h)
                .collect())
        })
        .collect::<Result<_>>()?;

    let g3 = |t: &[f64], k: usize, i: usize, j: usize| t[(k * n + i) * n + j];
    let mut upper = vec![0.0; n.pow(4)];
    for mm in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = g3(&dgamma[i], mm, j, k) - g3(&dgamma[j], mm, i, k);
                    for p in 0..n {
                        r += g3(&gamma, mm, i, p) * g3(&gamma, p, j, k)
                            - g3(&gamma, mm, j, p) * g3(&gamma, p, i, k);
                    }
                    upper[((mm * n + i) * n + j) * n + k] = r;
                }
            }
        }
    }
    let g0 = &samples[&centres[0]];
    Ok(Array4::from_fn(n, |[i, j, k, l]| {
        (0..n)
            .map(|mm| g0[(l, mm)] * upper[((mm * n + i) * n + j) * n + k])
            .sum()
    }))
}

/// Least-squares slope of `ln e` against `ln x`; `None` unless every error
/// is above `floor` and there are at least two points.
pub fn convergence_slope(xs: &[f64], errors: &[f64], floor: f64) -> Option<f64> {
    if xs.len() < 2 || xs.len() != errors.len() || errors.iter().any(|&e| e.is_nan() || e <= floor) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// A sectional curvature value of a coordinate plane, 1-based labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneValue {
    pub plane: [usize; 2],
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
}

fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_f64(*x))
}

fn ser_f64_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| fmt_f64(*x)))
}

fn ser_f64_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&fmt_f64(*v)),
        None => s.serialize_none(),
    }
}

/// `K(e_i, e_j) = R_ijji / (g_ii g_jj − g_ij²)` for every `i < j`.
pub fn coordinate_sectionals(rm: &Array4, g: &DMatrix<f64>) -> Vec<PlaneValue> {
    let n = rm.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let area = g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(i, j)];
            out.push(PlaneValue {
                plane: [i + 1, j + 1],
                value: rm.get([i, j, j, i]) / area,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowCheckReport {
    pub n: usize,
    #[serde(serialize_with = "ser_f64_vec")]
    pub dt_values: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub fd_step: f64,
    /// Per `dt`: `(Rm_fd(g_dt) − Rm_fd(g_0)) / dt` at the origin.
    pub estimates: Vec<Array4>,
    /// `∂_t Rm(0, p)` in the reference convention.
    pub exact_target: Tensor<Rational>,
    /// Max-norm deviation of each estimate from the target.
    #[serde(serialize_with = "ser_f64_vec")]
    pub errors: Vec<f64>,
    /// The same deviation for `Rm_fd(g_dt) / dt` without the baseline.
    #[serde(serialize_with = "ser_f64_vec")]
    pub raw_errors: Vec<f64>,
    /// Errors at or below this are treated as floating noise.
    #[serde(serialize_with = "ser_f64")]
    pub noise_floor: f64,
    pub errors_monotone: bool,
    /// Smallest-`dt` error over the largest exact entry; `None` for a zero target.
    #[serde(serialize_with = "ser_f64_opt")]
    pub relative_error: Option<f64>,
    /// Fitted order of `errors` in `dt`; `None` when undefined.
    #[serde(serialize_with = "ser_f64_opt")]
    pub slope: Option<f64>,
    #[serde(serialize_with = "ser_f64_opt")]
    pub raw_slope: Option<f64>,
    /// Coordinate sectional curvatures of the stepped metric at the origin,
    /// smallest `dt`.
    pub sectional_after_step: Vec<PlaneValue>,
    /// `∂_t K(e_i, e_j)` from the smallest-`dt` estimate.
    pub sectional_rate: Vec<PlaneValue>,
    pub sectional_sign_after_step: SignClass,
    /// Sign class of the exact entries at the pattern `(i, j, i, j)`.
    pub diag_pattern_sign: SignClass,
    pub claimed_sign: &'static str,
    pub claimed_sign_matches: bool,
    pub agreement: bool,
}

impl FlowCheckReport {
    /// Whether the fitted slope is asserted. For `n = 2` the dt-independent
    /// `O(h²)` stencil term is as large as the `O(dt)` term over the default
    /// sweep, so the slope is reported only.
    pub fn slope_required(&self) -> bool {
        self.n >= 3 && !self.exact_target.is_zero()
    }

    pub fn slope_in_range(&self) -> bool {
        self.slope
            .is_some_and(|s| (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&s))
    }

    /// Agreement within tolerance, slope in range where required (and
    /// undefined for a zero target), monotone errors and a strict post-step
    /// sign.
    pub fn passes(&self) -> bool {
        let target_zero = self.exact_target.is_zero();
        let slope_ok = if target_zero {
            self.slope.is_none()
        } else {
            !self.slope_required() || self.slope_in_range()
        };
        let sign_ok = self.sectional_sign_after_step.is_strict() || target_zero;
        self.agreement && slope_ok && sign_ok && self.errors_monotone
    }
}

/// Runs the Euler-step convergence study for `cubic_family(a)` at the origin.
pub fn flow_consistency_check(
    a: &CoefMatrix,
    dt_values: &[f64],
    h: f64,
) -> Result<FlowCheckReport> {
    if dt_values.len() < 2 {
        return Err(Error::Argument("at least two time steps are needed".into()));
    }
    if dt_values.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
        return Err(Error::Argument(
            "time steps must be positive and finite".into(),
        ));
    }
    if dt_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument(
            "time steps must be strictly decreasing".into(),
        ));
    }
    let n = a.n();
    let surface = Arc::new(GraphSurface::new(cubic_family(a)));
    let origin = vec![Rational::zero(); n];
    let sign = curvature_sign();
    let probe = dt_riemann_origin(a, false)?;
    let exact_target = probe.dt_rm.map(|v| Ok(sign.apply(v)))?;
    let target = Array4::from_rational(&exact_target);

    let initial = MetricField::initial(surface.clone());
    let baseline = fd_riemann(&initial, &origin, h)?;
    let stepped: Vec<(Array4, DMatrix<f64>)> = dt_values
        .par_iter()
        .map(|&dt| {
            let field = euler_step_metric(surface.clone(), dt)?;
            Ok((fd_riemann(&field, &origin, h)?, field.eval(&origin)?))
        })
        .collect::<Result<_>>()?;

    let estimates: Vec<Array4> = stepped
        .iter()
        .zip(dt_values)
        .map(|((rm, _), &dt)| rm.diff_quotient(&baseline, dt))
        .collect();
    let errors: Vec<f64> = estimates.iter().map(|e| e.max_abs_diff(&target)).collect();
    let raw_errors: Vec<f64> = stepped
        .iter()
        .zip(dt_values)
        .map(|((rm, _), &dt)| rm.scaled(1.0 / dt).max_abs_diff(&target))
        .collect();

    let dt_min = *dt_values.last().expect("non-empty");
    let noise_floor = 64.0 * f64::EPSILON / (h * h * dt_min);
    let errors_monotone = errors.windows(2).all(|w| w[1] <= w[0] + noise_floor);
    let scale = target.max_abs();
    let last_error = *errors.last().expect("non-empty");
    let relative_error = (scale > 0.0).then(|| last_error / scale);
    let agreement = match relative_error {
        Some(r) => r <= AGREEMENT_TOLERANCE,
        None => last_error <= noise_floor,
    };
    let slope = convergence_slope(dt_values, &errors, noise_floor);
    let raw_slope = convergence_slope(dt_values, &raw_errors, noise_floor);

    let (rm_last, g_last) = stepped.last().expect("non-empty");
    let sectional_after_step = coordinate_sectionals(rm_last, g_last);
    let g0 = initial.eval(&origin)?;
    let sectional_rate = coordinate_sectionals(estimates.last().expect("non-empty"), &g0);
    let sectional_sign_after_step = classify_f64(&sectional_after_step, noise_floor * dt_min);
    let claimed_sign_matches = sectional_sign_after_step == SignClass::AllNegative;

    Ok(FlowCheckReport {
        n,
        dt_values: dt_values.to_vec(),
        fd_step: h,
        estimates,
        exact_target,
        errors,
        raw_errors,
        noise_floor,
        errors_monotone,
        relative_error,
        slope,
        raw_slope,
        sectional_after_step,
        sectional_rate,
        sectional_sign_after_step,
        diag_pattern_sign: probe.diag_sign,
        claimed_sign: CLAIMED_SIGN,
        claimed_sign_matches,
        agreement,
    })
}

/// Values within `floor` of zero count as zero.
fn classify_f64(values: &[PlaneValue], floor: f64) -> SignClass {
    SignClass::from_signs(values.iter().map(|v| {
        if v.value > floor {
            1
        } else if v.value < -floor {
            -1
        } else {
            0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Poly;
    use crate::geometry::{intrinsic_riemann, paraboloid};
    use crate::ricciprobe::lower_ones_matrix;

    fn origin(n: usize) -> Vec<Rational> {
        vec![Rational::zero(); n]
    }

    #[test]
    fn flat_surface_steps_to_identity() {
        let s = Arc::new(GraphSurface::new(Poly::zero(3)));
        let m = euler_step_metric(s, 0.3).unwrap();
        assert_eq!(m.eval(&origin(3)).unwrap(), DMatrix::identity(3, 3));
        assert_eq!(
            m.provenance().to_string(),
            "euler-step(2.9999999999999999e-1)"
        );
    }

    #[test]
    fn cubic_step_is_trivial_at_origin() {
        let s = Arc::new(GraphSurface::new(cubic_family(&lower_ones_matrix(3))));
        let m = euler_step_metric(s.clone(), 1e-4).unwrap();
        assert_eq!(
            m.eval(&origin(3)).unwrap(),
            MetricField::initial(s).eval(&origin(3)).unwrap()
        );
    }

    #[test]
    fn paraboloid_step_at_vertex() {
        let s = Arc::new(GraphSurface::new(paraboloid(2)));
        let g = euler_step_metric(s, 1e-3)
            .unwrap()
            .eval(&origin(2))
            .unwrap();
        let want = DMatrix::<f64>::identity(2, 2) * (1.0 - 2e-3);
        assert!((g - want).amax() < 1e-15);
    }

    #[test]
    fn step_too_large_is_reported() {
        let s = Arc::new(GraphSurface::new(paraboloid(2)));
        let m = euler_step_metric(s, 1.0).unwrap();
        assert!(matches!(
            m.eval(&origin(2)),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(euler_step_metric(Arc::new(GraphSurface::new(paraboloid(2))), 0.0).is_err());
    }

    #[test]
    fn flat_fields_have_no_fd_curvature() {
        let s = Arc::new(GraphSurface::new(Poly::zero(3)));
        let m = MetricField::initial(s);
        for h in [1e-4, 1e-3, 1e-2] {
            assert!(fd_riemann(&m, &origin(3), h).unwrap().max_abs() < 1e-10);
        }
        // diag(1 + 4x², 1) is a reparametrised line times a line
        let bent = MetricField::new(2, Provenance::Custom, |x| {
            let x0 = x[0].to_f64();
            Ok(DMatrix::from_row_slice(
                2,
                2,
                &[1.0 + 4.0 * x0 * x0, 0.0, 0.0, 1.0],
            ))
        });
        let p = [Rational::new(1, 3), Rational::new(1, 5)];
        assert!(fd_riemann(&bent, &p, 1e-3).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn paraboloid_fd_matches_exact() {
        let s = GraphSurface::new(paraboloid(2));
        let exact = intrinsic_riemann(s.metric().unwrap(), s.metric_inv().unwrap()).unwrap();
        let want = exact.get(&[0, 1, 0, 1]).eval(&origin(2)).unwrap().to_f64();
        let rm = fd_riemann(&MetricField::initial(Arc::new(s)), &origin(2), 1e-3).unwrap();
        assert!((rm.get([0, 1, 0, 1]) - want).abs() < 1e-5);
        assert!(rm.riemann_defect() < 1e-9);
    }

    #[test]
    fn cubic_initial_curvature_is_small_at_origin() {
        let s = Arc::new(GraphSurface::new(cubic_family(&lower_ones_matrix(3))));
        let m = MetricField::initial(s);
        // stencil bias is O(h²)
        assert!(fd_riemann(&m, &origin(3), 1e-3).unwrap().max_abs() < 1e-5);
        assert!(fd_riemann(&m, &origin(3), 1e-2).unwrap().max_abs() < 1e-3);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs = [1e-3, 5e-4, 2.5e-4];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((convergence_slope(&xs, &ys, 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(convergence_slope(&xs, &[1.0, 0.0, 1.0], 0.0), None);
    }

    #[test]
    fn zero_matrix_has_undefined_slope() {
        let r = flow_consistency_check(&CoefMatrix::zeros(3), &DEFAULT_DT_SWEEP, 1e-2).unwrap();
        assert!(r.exact_target.is_zero());
        assert!(r.errors.iter().all(|&e| e <= r.noise_floor));
        assert_eq!(r.slope, None);
        assert!(r.passes());
    }

    #[test]
    fn bad_sweeps_are_rejected() {
        let a = lower_ones_matrix(3);
        assert!(flow_consistency_check(&a, &[1e-3], 1e-2).is_err());
        assert!(flow_consistency_check(&a, &[1e-3, 1e-3], 1e-2).is_err());
        assert!(flow_consistency_check(&a, &[1e-4, 1e-3], 1e-2).is_err());
    }
}
