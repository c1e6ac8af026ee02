//! Why the initial embedding cannot follow the flow.
//!
//! Two independent arguments live here. [`extension_obstruction`] packages
//! the differentiated Gauss identity at a point where the second fundamental
//! form vanishes into a checkable certificate; it needs `n >= 2` and works in
//! any codimension. [`pairwise_sign_test`] is the hypersurface-only argument
//! from the signs of the coordinate sectional curvatures. [`gauss_lsq_solve`]
//! is the numerical counterpart: it searches for a second fundamental form
//! that realizes a given curvature.

mod certificate;
mod gauss_solve;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use certificate::{
    extension_obstruction, Ambient, CertificateEntry, GaussTerm, ObstructionCertificate,
    PiEvidence, CONCLUSION,
};
pub use gauss_solve::{gauss_defect, gauss_lsq_solve, GaussSolveResult, TargetEntry, TargetFile};

use crate::algebra::Rational;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HypersurfaceInfeasible,
    Feasible,
    Inconclusive,
}

/// Reads `diag[(i, j)]`, `i < j` (0-based), as the signs of all coordinate
/// sectional curvatures at a point of a hypersurface.
///
/// In an eigenbasis of `h` the sectional curvature of `(e_i, e_j)` is
/// `λ_i λ_j`, and no three reals have pairwise products all negative. So all
/// strictly negative values with `n >= 3` are infeasible. All positive or
/// all zero values are realized by `h = I` or `h = 0`, and `n = 2` is always
/// realized (a saddle or a bowl). Anything else is inconclusive.
pub fn pairwise_sign_test(diag: &BTreeMap<(usize, usize), Rational>, n: usize) -> Result<Verdict> {
    if n < 2 {
        return Err(Error::Argument(format!(
            "pairwise sign test needs n >= 2, got {n}"
        )));
    }
    if let Some(&(i, j)) = diag.keys().find(|&&(i, j)| !(i < j && j < n)) {
        return Err(Error::Argument(format!(
            "pair ({}, {}) is not a plane of dimension {n}",
            i + 1,
            j + 1
        )));
    }
    let mut signs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = diag.get(&(i, j)).ok_or_else(|| {
                Error::Argument(format!(
                    "missing sectional value for pair ({}, {})",
                    i + 1,
                    j + 1
                ))
            })?;
            signs.push(v.signum());
        }
    }
    if n == 2 {
        return Ok(Verdict::Feasible);
    }
    Ok(if signs.iter().all(|&s| s < 0) {
        Verdict::HypersurfaceInfeasible
    } else if signs.iter().all(|&s| s > 0) || signs.iter().all(|&s| s == 0) {
        Verdict::Feasible
    } else {
        Verdict::Inconclusive
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_pairs(n: usize, v: i64) -> BTreeMap<(usize, usize), Rational> {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| ((i, j), Rational::from_integer(v))))
            .collect()
    }

    #[test]
    fn verdicts() {
        assert_eq!(
            pairwise_sign_test(&all_pairs(3, -1), 3).unwrap(),
            Verdict::HypersurfaceInfeasible
        );
        assert_eq!(
            pairwise_sign_test(&all_pairs(2, -1), 2).unwrap(),
            Verdict::Feasible
        );
        assert_eq!(
            pairwise_sign_test(&all_pairs(3, 1), 3).unwrap(),
            Verdict::Feasible
        );
        assert_eq!(
            pairwise_sign_test(&all_pairs(4, 0), 4).unwrap(),
            Verdict::Feasible
        );
        let mut mixed = all_pairs(3, -1);
        mixed.insert((1, 2), Rational::one());
        assert_eq!(
            pairwise_sign_test(&mixed, 3).unwrap(),
            Verdict::Inconclusive
        );
    }

    #[test]
    fn malformed_inputs() {
        let mut d = all_pairs(3, -1);
        d.remove(&(0, 2));
        assert!(pairwise_sign_test(&d, 3)
            .unwrap_err()
            .to_string()
            .contains("(1, 3)"));
        let mut d = all_pairs(3, -1);
        d.insert((2, 1), Rational::one());
        assert!(pairwise_sign_test(&d, 3).is_err());
        assert!(pairwise_sign_test(&BTreeMap::new(), 1).is_err());
    }
}
