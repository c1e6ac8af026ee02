mod common;

use std::sync::Arc;

use curvprobe::algebra::{Poly, Rational, Symmetry, Tensor, WFrac};
use curvprobe::geometry::{
    christoffel_from_metric, curvature_sign, intrinsic_riemann, sectional, CurvatureSign,
    GraphSurface,
};
use curvprobe::numflow::{fd_riemann, flow_consistency_check, MetricField};
use curvprobe::obstruction::{
    extension_obstruction, gauss_lsq_solve, pairwise_sign_test, Ambient, Verdict,
};
use curvprobe::ricciprobe::{
    a_tensor_case_display, cubic_family, dt_riemann_origin, hessian_closed_form,
    is_diagonal_pattern, laplacian_a_oracle, laplacian_a_origin, lower_ones_matrix, star_check,
    star_search, CoefMatrix,
};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(p, q)| Rational::new(p, q))
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (1i64..=5, 1i64..=4, any::<bool>())
        .prop_map(|(p, q, neg)| Rational::new(if neg { -p } else { p }, q))
}

fn exps(n: usize, max_deg: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=max_deg, n)
        .prop_filter("total degree", move |e| e.iter().sum::<u32>() <= max_deg)
}

fn poly(n: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((exps(n, max_deg), rational()), 0..=max_terms)
        .prop_map(move |terms| Poly::from_terms(n, terms).unwrap())
}

fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(rational(), n)
}

fn matrix(n: usize) -> impl Strategy<Value = CoefMatrix> {
    prop::collection::vec(prop::collection::vec(rational(), n), n)
        .prop_map(|rows| CoefMatrix::new(rows).unwrap())
}

fn dim_poly(max_n: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Poly> {
    (1..=max_n).prop_flat_map(move |n| poly(n, max_deg, max_terms))
}

/// `d/dt P(p + t e_s)` at `t = 0` by exact Lagrange interpolation on
/// `t = 0..=deg`, without symbolic differentiation.
fn line_derivative(p: &Poly, at: &[Rational], s: usize) -> Rational {
    let deg = p.degree().unwrap_or(0) as i64;
    let nodes: Vec<i64> = (0..=deg).collect();
    let mut acc = Rational::zero();
    for &k in &nodes {
        let mut x = at.to_vec();
        x[s] = &x[s] + &Rational::from_integer(k);
        let value = p.eval(&x).unwrap();
        // L_k'(0) = Σ_{m≠k} (1/(k−m)) Π_{r≠k,m} (0−r)/(k−r)
        let mut lk = Rational::zero();
        for &m in nodes.iter().filter(|&&m| m != k) {
            let mut term = Rational::new(1, k - m);
            for &r in nodes.iter().filter(|&&r| r != k && r != m) {
                term = &term * &Rational::new(-r, k - r);
            }
            lk += term;
        }
        acc += &value * &lk;
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn polynomial_ring_axioms(
        (a, b, c) in (1usize..=4).prop_flat_map(|n| (poly(n, 3, 4), poly(n, 3, 4), poly(n, 3, 4)))
    ) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn polynomial_json_round_trip_is_byte_identical(f in dim_poly(4, 4, 6)) {
        let json = f.to_json();
        let back = Poly::from_json(&json).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(back.to_json(), json);
    }

    #[test]
    fn rational_string_round_trip(r in rational()) {
        let s = r.to_string();
        prop_assert_eq!(s.parse::<Rational>().unwrap(), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn wfrac_derivative_matches_line_derivative(
        (f, u, halves, pts) in (1usize..=3).prop_flat_map(|n| (
            poly(n, 3, 3),
            poly(n, 3, 3),
            0u32..=5,
            prop::collection::vec(point(n), 20),
        ))
    ) {
        let n = f.nvars();
        let ctx = curvprobe::algebra::WContext::new(f);
        let q = WFrac::new(u.clone(), halves, &ctx).unwrap();
        for s in 0..n {
            let d = q.diff(s).unwrap();
            if !d.is_zero() {
                prop_assert_eq!(d.halves() % 2, halves % 2);
            }
            for p in &pts {
                // value u / W^(h/2): derivative numerator over W^(h/2 + 1)
                let w = ctx.w().eval(p).unwrap();
                let expected = &(&line_derivative(&u, p, s) * &w)
                    - &(&(&Rational::new(halves as i64, 2) * &u.eval(p).unwrap())
                        * &line_derivative(ctx.w(), p, s));
                let lhs = if d.is_zero() {
                    Rational::zero()
                } else {
                    &d.num().eval(p).unwrap() * &w.pow((halves + 2 - d.halves()) / 2)
                };
                prop_assert_eq!(lhs, expected);
            }
        }
    }

    #[test]
    fn riemann_validation_rejects_any_perturbation(
        (h, idx, bump) in (2usize..=4).prop_flat_map(|n| (
            prop::collection::vec(prop::collection::vec(rational(), n), n),
            prop::collection::vec(0..n, 4),
            nonzero_rational(),
        ))
    ) {
        let n = h.len();
        let sym = |a: usize, b: usize| if a <= b { h[a][b].clone() } else { h[b][a].clone() };
        let good = Tensor::from_fn(4, n, Symmetry::Riemann, |x| {
            Ok(&(&sym(x[0], x[3]) * &sym(x[1], x[2])) - &(&sym(x[0], x[2]) * &sym(x[1], x[3])))
        })
        .unwrap();
        let offset = ((idx[0] * n + idx[1]) * n + idx[2]) * n + idx[3];
        let mut data = good.data().to_vec();
        data[offset] = &data[offset] + &bump;
        prop_assert!(Tensor::from_vec(4, n, Symmetry::Riemann, data).is_err());
    }

    #[test]
    fn symmetric_validation_rejects_asymmetry(
        (rows, i, j, bump) in (2usize..=4).prop_flat_map(|n| (
            prop::collection::vec(prop::collection::vec(rational(), n), n),
            0..n,
            0..n,
            nonzero_rational(),
        ))
    ) {
        prop_assume!(i != j);
        let n = rows.len();
        let mut data: Vec<Rational> = (0..n * n)
            .map(|k| {
                let (a, b) = (k / n, k % n);
                if a <= b { rows[a][b].clone() } else { rows[b][a].clone() }
            })
            .collect();
        data[i * n + j] = &data[i * n + j] + &bump;
        prop_assert!(Tensor::from_vec(2, n, Symmetry::Symmetric2, data).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn induced_geometry_identities(f in dim_poly(3, 3, 4)) {
        let s = GraphSurface::new(f);
        let g = s.metric().unwrap();
        let ginv = s.metric_inv().unwrap();
        prop_assert_eq!(s.metric_det_cofactor().unwrap(), s.metric_det());
        curvprobe::geometry::check_inverse_pair(g, ginv).unwrap();
        prop_assert_eq!(s.christoffel().unwrap(), &christoffel_from_metric(g, ginv).unwrap());
        prop_assert_eq!(s.gauss_riemann().unwrap(), &s.gauss_riemann_from_h().unwrap());
        s.a_tensor().unwrap().validate().unwrap();
        let intrinsic = intrinsic_riemann(g, ginv).unwrap();
        let gauss = s.gauss_riemann().unwrap();
        match curvature_sign() {
            CurvatureSign::Plus => prop_assert_eq!(&intrinsic, gauss),
            CurvatureSign::Minus => prop_assert_eq!(&intrinsic, &gauss.map(|e| Ok(e.neg())).unwrap()),
        }
    }

    #[test]
    fn sectional_is_symmetric_and_scale_invariant(
        (f, p, scales) in (2usize..=3).prop_flat_map(|n| (
            poly(n, 3, 3),
            point(n),
            prop::collection::vec(nonzero_rational(), n),
        ))
    ) {
        let n = f.nvars();
        let s = GraphSurface::new(f);
        let g = s.metric().unwrap();
        let rm = intrinsic_riemann(g, s.metric_inv().unwrap()).unwrap();
        let scaled_g = Tensor::from_fn(2, n, Symmetry::Symmetric2, |x| {
            Ok(g.get(x).scale(&(&scales[x[0]] * &scales[x[1]])))
        })
        .unwrap();
        let scaled_rm = Tensor::from_fn(4, n, Symmetry::Riemann, |x| {
            let c: Rational = x.iter().map(|&i| scales[i].clone()).product();
            Ok(rm.get(x).scale(&c))
        })
        .unwrap();
        for i in 0..n {
            for j in i + 1..n {
                let k = sectional(&rm, g, i, j, &p).unwrap();
                prop_assert_eq!(&k, &sectional(&rm, g, j, i, &p).unwrap());
                prop_assert_eq!(&k, &sectional(&scaled_rm, &scaled_g, i, j, &p).unwrap());
            }
        }
    }

    #[test]
    fn case_table_matches_direct_differentiation(a in (3usize..=4).prop_flat_map(matrix)) {
        let table = laplacian_a_origin(&a, false).unwrap();
        prop_assert_eq!(&table, &laplacian_a_oracle(&a).unwrap());
    }

    #[test]
    fn case_display_matches_a_tensor(a in (2usize..=4).prop_flat_map(matrix)) {
        let s = GraphSurface::new(cubic_family(&a));
        let at = s.a_tensor().unwrap();
        for rep in curvprobe::algebra::riemann_representatives(a.n()) {
            let [i, j, k, l] = rep;
            if i < j && k < l && i <= k {
                prop_assert_eq!(&a_tensor_case_display(&a, rep).unwrap(), at.get(&rep).num());
            }
        }
    }

    #[test]
    fn closed_hessian_matches_differentiation(a in (1usize..=4).prop_flat_map(matrix)) {
        let f = cubic_family(&a);
        let n = a.n();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(hessian_closed_form(&a, i, j), f.diff(i).unwrap().diff(j).unwrap());
            }
        }
        if !f.is_zero() {
            prop_assert!(f.terms().all(|(m, _)| m.degree() == 3));
        }
    }

    #[test]
    fn cubic_graph_is_flat_to_first_order_at_origin(a in (1usize..=3).prop_flat_map(matrix)) {
        let n = a.n();
        let s = GraphSurface::new(cubic_family(&a));
        let origin = vec![Rational::zero(); n];
        let g0 = s.metric().unwrap().eval(&origin).unwrap();
        for (idx, v) in g0.entries() {
            prop_assert_eq!(v.is_one(), idx[0] == idx[1]);
            prop_assert_eq!(v.is_zero(), idx[0] != idx[1]);
        }
        prop_assert!(s.christoffel().unwrap().eval(&origin).unwrap().is_zero());
        prop_assert!(s.gauss_riemann().unwrap().eval(&origin).unwrap().is_zero());
    }

    #[test]
    fn certificates_are_pure(a in (2usize..=4).prop_flat_map(matrix)) {
        let probe = dt_riemann_origin(&a, false).unwrap();
        let n = a.n();
        let h = curvprobe::algebra::rational_matrix(&vec![vec![Rational::zero(); n]; n], Symmetry::Symmetric2).unwrap();
        let first = extension_obstruction(&probe, &h, Ambient::EvolvingMetric);
        let second = extension_obstruction(&probe, &h, Ambient::EvolvingMetric);
        match (first, second) {
            (Ok(c1), Ok(c2)) => {
                prop_assert_eq!(&c1, &c2);
                c1.check().unwrap();
            }
            (Err(curvprobe::Error::NoObstruction), Err(curvprobe::Error::NoObstruction)) => {
                prop_assert!(probe.dt_rm.is_zero());
            }
            other => prop_assert!(false, "unexpected outcome {:?}", other),
        }
    }

    #[test]
    fn linear_graphs_have_no_fd_curvature(
        (coefs, h) in (prop::collection::vec(rational(), 3), 1e-4f64..=1e-2)
    ) {
        let f = coefs.iter().enumerate().fold(Poly::zero(3), |acc, (i, c)| {
            &acc + &Poly::var(3, i).unwrap().scale(c)
        });
        let m = MetricField::initial(Arc::new(GraphSurface::new(f)));
        let rm = fd_riemann(&m, &[Rational::new(1, 3), Rational::zero(), Rational::new(-1, 2)], h).unwrap();
        prop_assert!(rm.max_abs() < 1e-10, "{}", rm.max_abs());
    }
}

#[test]
fn star_solutions_kill_off_diagonal_entries() {
    let values = [
        Rational::zero(),
        Rational::one(),
        Rational::from_integer(-1),
    ];
    for (n, budget) in [(3, u64::MAX), (4, 20_000)] {
        let found = star_search(n, &values, budget).unwrap();
        assert!(!found.matrices.is_empty());
        for a in &found.matrices {
            assert!(star_check(a).is_empty());
            let probe = dt_riemann_origin(a, false).unwrap();
            assert!(probe.offdiag_zero, "{a:?}");
            for (idx, v) in probe.dt_rm.entries() {
                assert!(v.is_zero() || is_diagonal_pattern([idx[0], idx[1], idx[2], idx[3]]));
            }
        }
    }
}

#[test]
fn lower_ones_diagonal_law() {
    for n in 3..=6 {
        let probe = dt_riemann_origin(&lower_ones_matrix(n), true).unwrap();
        for (&(i, j), v) in &probe.diag_entries {
            assert_eq!(v, probe.dt_rm.get(&[i, j, i, j]));
            assert_eq!(
                *v,
                Rational::from_integer(8 * (j as i64 + 1 - n as i64 - 2))
            );
        }
    }
}

#[test]
fn pairwise_sign_by_dimension() {
    let pairs = |n: usize, v: i64| {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| ((i, j), Rational::from_integer(v))))
            .collect()
    };
    for n in 3..=8 {
        assert_eq!(
            pairwise_sign_test(&pairs(n, -1), n).unwrap(),
            Verdict::HypersurfaceInfeasible
        );
    }
    for v in [-3, 0, 5] {
        assert_eq!(
            pairwise_sign_test(&pairs(2, v), 2).unwrap(),
            Verdict::Feasible
        );
    }
}

#[test]
fn gauss_solver_is_bitwise_deterministic() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    for n in 2..=4 {
        let h = common::random_symmetric(&mut rng, n, 2.0);
        let t = common::gauss_target(&h);
        let a = gauss_lsq_solve(&t, n, 6, 11).unwrap();
        let b = gauss_lsq_solve(&t, n, 6, 11).unwrap();
        assert_eq!(a.residual.to_bits(), b.residual.to_bits());
        assert_eq!(a, b);
        let recomputed = curvprobe::obstruction::gauss_defect(&a.h, &t);
        assert!((recomputed - a.residual).abs() <= 1e-12 * a.residual.max(f64::MIN_POSITIVE));
    }
}

#[test]
fn flow_reports_are_bitwise_deterministic() {
    let a = lower_ones_matrix(3);
    let dts = [1e-3, 5e-4];
    let r1 = flow_consistency_check(&a, &dts, 1e-2).unwrap();
    let r2 = flow_consistency_check(&a, &dts, 1e-2).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(
        serde_json::to_string(&r1).unwrap(),
        serde_json::to_string(&r2).unwrap()
    );
}
