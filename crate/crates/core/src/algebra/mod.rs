//! Exact arithmetic: rationals, multivariate polynomials, fractions over
//! powers of `W = 1 + |∇f|²`, and dense tensors.

mod poly;
mod rational;
mod tensor;
mod wfrac;

pub use poly::{cofactor_det, Monomial, Poly, PolyFile, TermEntry};
pub use rational::Rational;
pub use tensor::{
    multi_indices, rational_matrix, riemann_representatives, Scalar, Symmetry, Tensor,
};
pub use wfrac::{WContext, WFrac};
