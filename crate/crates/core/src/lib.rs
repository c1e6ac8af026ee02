pub mod algebra;
pub mod cli;
pub mod dense;
pub mod error;
pub mod geometry;
pub mod numflow;
pub mod obstruction;
pub mod report;
pub mod ricciprobe;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/graph-geometry.md")]
    mod graph_geometry {}
    #[doc = include_str!("../../../book/src/cubic-probe.md")]
    mod cubic_probe {}
    #[doc = include_str!("../../../book/src/obstruction.md")]
    mod obstruction {}
    #[doc = include_str!("../../../book/src/flow-check.md")]
    mod flow_check {}
}
