#![allow(dead_code)]

use curvprobe::algebra::{Poly, Rational};
use curvprobe::dense::Array4;
use curvprobe::ricciprobe::CoefMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Small nonzero rational p/q with |p| ≤ 4, 1 ≤ q ≤ 3.
pub fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    let p = loop {
        let p = rng.random_range(-4i64..=4);
        if p != 0 {
            break p;
        }
    };
    Rational::new(p, rng.random_range(1i64..=3))
}

/// A sparse polynomial in `n` variables with 1..=4 terms of degree ≤ `max_deg`.
pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_deg: u32) -> Poly {
    let nterms = rng.random_range(1..=4);
    let terms = (0..nterms).map(|_| {
        let deg = rng.random_range(1..=max_deg);
        let mut exps = vec![0u32; n];
        for _ in 0..deg {
            exps[rng.random_range(0..n)] += 1;
        }
        (exps, small_rational(rng))
    });
    Poly::from_terms(n, terms.collect::<Vec<_>>()).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n)
        .map(|_| Rational::new(rng.random_range(-3i64..=3), rng.random_range(1i64..=4)))
        .collect()
}

/// Random rational matrix with entries p/q, |p| ≤ 5, 1 ≤ q ≤ 4 (zeros allowed).
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CoefMatrix {
    let rows = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| Rational::new(rng.random_range(-5i64..=5), rng.random_range(1i64..=4)))
                .collect()
        })
        .collect();
    CoefMatrix::new(rows).unwrap()
}

/// Symmetric `n×n` matrix with entries uniform in `[-bound, bound]`.
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<Vec<f64>> {
    let mut h = vec![vec![0.0; n]; n];
    for (i, j) in (0..n).flat_map(|i| (i..n).map(move |j| (i, j))) {
        let v = rng.random_range(-bound..=bound);
        h[i][j] = v;
        h[j][i] = v;
    }
    h
}

/// The Gauss-realizable target `T_ijkl = h_il h_jk − h_ik h_jl`.
pub fn gauss_target(h: &[Vec<f64>]) -> Array4 {
    Array4::from_fn(h.len(), |[i, j, k, l]| {
        h[i][l] * h[j][k] - h[i][k] * h[j][l]
    })
}
