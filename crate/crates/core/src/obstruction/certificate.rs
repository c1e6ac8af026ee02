use serde::{Deserialize, Serialize};

use crate::algebra::{Rational, Symmetry, Tensor};
use crate::error::{Error, Result};
use crate::ricciprobe::ProbeResult;

pub const CONCLUSION: &str = "no t-smooth family of isometric embeddings extends e₀";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ambient {
    /// Fixed Euclidean ambient metric.
    Flat,
    /// Ambient metric `η(t)` allowed to vary with `t`.
    EvolvingMetric,
}

/// `Π(0)` at the point, entry by entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiEvidence {
    pub vanishes: bool,
    pub h: Vec<Vec<Rational>>,
}

/// One term of `∂_t` of the Gauss identity at `t = 0`, with the number of
/// `Π(0)` factors it carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussTerm {
    pub term: String,
    pub pi_factors: u32,
}

/// A nonzero entry of `∂_t Rm(0, p)`, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub idx: [usize; 4],
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstructionCertificate {
    pub n: usize,
    pub point: Vec<Rational>,
    pub pi_at_p: PiEvidence,
    pub ambient: Ambient,
    /// Every term of the differentiated identity, each vanishing at `p`.
    pub derivative_terms: Vec<GaussTerm>,
    pub nonzero_entries: Vec<CertificateEntry>,
    pub conclusion: String,
}

fn derivative_terms(ambient: Ambient) -> Vec<GaussTerm> {
    let t = |term: &str, pi_factors| GaussTerm {
        term: term.to_string(),
        pi_factors,
    };
    let mut terms = vec![
        t("⟨Π'(X,W), Π(Y,Z)⟩", 1),
        t("⟨Π(X,W), Π'(Y,Z)⟩", 1),
        t("−⟨Π'(X,Z), Π(Y,W)⟩", 1),
        t("−⟨Π(X,Z), Π'(Y,W)⟩", 1),
    ];
    if ambient == Ambient::EvolvingMetric {
        terms.push(t("η'(Π(X,W), Π(Y,Z))", 2));
        terms.push(t("−η'(Π(X,Z), Π(Y,W))", 2));
    }
    terms
}

impl ObstructionCertificate {
    /// Re-checks every invariant from the certificate's own fields.
    pub fn check(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Precondition(format!("invalid certificate: {msg}")));
        if self.n < 2 || self.point.len() != self.n {
            return fail("dimension and point disagree");
        }
        if self.h_shape_wrong() {
            return fail("h is not n×n");
        }
        if !self.pi_at_p.vanishes || self.pi_at_p.h.iter().flatten().any(|v| !v.is_zero()) {
            return fail("Π(0) does not vanish at the point");
        }
        if self.derivative_terms != derivative_terms(self.ambient) {
            return fail("derivative terms do not match the ambient mode");
        }
        if self.nonzero_entries.is_empty() {
            return fail("no nonzero curvature derivative listed");
        }
        if self
            .nonzero_entries
            .iter()
            .any(|e| e.value.is_zero() || e.idx.iter().any(|&i| i == 0 || i > self.n))
        {
            return fail("listed entry is zero or out of range");
        }
        if self.conclusion != CONCLUSION {
            return fail("unexpected conclusion");
        }
        Ok(())
    }

    fn h_shape_wrong(&self) -> bool {
        self.pi_at_p.h.len() != self.n || self.pi_at_p.h.iter().any(|r| r.len() != self.n)
    }
}

/// Certificate that the embedding cannot be extended in `t`: at the origin
/// `Π(0) = 0`, so every term of the differentiated Gauss identity vanishes,
/// which forces `∂_t Rm(0, p) = 0` against the listed nonzero entries.
pub fn extension_obstruction(
    probe: &ProbeResult,
    h_at_p: &Tensor<Rational>,
    ambient: Ambient,
) -> Result<ObstructionCertificate> {
    let n = probe.n();
    if n < 2 {
        return Err(Error::Argument("the obstruction needs n >= 2".into()));
    }
    if h_at_p.rank() != 2 || h_at_p.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h_at_p.dim(),
        });
    }
    let h_at_p = h_at_p.clone().with_symmetry(Symmetry::Symmetric2)?;
    if let Some((idx, v)) = h_at_p.entries().find(|(_, v)| !v.is_zero()) {
        return Err(Error::NotApplicable(format!(
            "second fundamental form is {v} at ({}, {}), not zero",
            idx[0] + 1,
            idx[1] + 1
        )));
    }
    let nonzero_entries: Vec<CertificateEntry> = probe
        .nonzero_representatives()
        .into_iter()
        .map(|(idx, value)| CertificateEntry {
            idx: idx.map(|i| i + 1),
            value,
        })
        .collect();
    if nonzero_entries.is_empty() {
        return Err(Error::NoObstruction);
    }
    let cert = ObstructionCertificate {
        n,
        point: vec![Rational::zero(); n],
        pi_at_p: PiEvidence {
            vanishes: true,
            h: (0..n)
                .map(|i| (0..n).map(|j| h_at_p.get(&[i, j]).clone()).collect())
                .collect(),
        },
        ambient,
        derivative_terms: derivative_terms(ambient),
        nonzero_entries,
        conclusion: CONCLUSION.to_string(),
    };
    cert.check()?;
    Ok(cert)
}
