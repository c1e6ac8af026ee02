use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::dense::{fmt_f64, Array4};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussSolveResult {
    #[serde(serialize_with = "ser_matrix")]
    pub h: Vec<Vec<f64>>,
    #[serde(serialize_with = "ser_f64")]
    pub residual: f64,
    pub restarts_used: usize,
    pub best_restart: usize,
    pub seed: u64,
}

fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_f64(*x))
}

fn ser_matrix<S: Serializer>(m: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(
        m.iter()
            .map(|row| row.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>()),
    )
}

/// On-disk target: `{ "n": n, "entries": [ { "idx": [i,j,k,l], "val": x } ] }`
/// with 1-based indices. Missing entries are filled by the curvature
/// symmetries; unlisted classes are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    pub n: usize,
    pub entries: Vec<TargetEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub idx: [usize; 4],
    pub val: f64,
}

impl TargetFile {
    pub fn from_json(s: &str) -> Result<Array4> {
        let file: TargetFile = serde_json::from_str(s)?;
        file.complete()
    }

    /// Expands every listed entry to its eight symmetric images.
    pub fn complete(&self) -> Result<Array4> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Parse("n: must be positive".into()));
        }
        let mut out = Array4::zeros(n);
        let mut set = vec![false; n.pow(4)];
        for (e, entry) in self.entries.iter().enumerate() {
            if entry.idx.iter().any(|&i| i == 0 || i > n) {
                return Err(Error::Parse(format!(
                    "entries[{e}].idx: indices must lie in 1..={n}"
                )));
            }
            if !entry.val.is_finite() {
                return Err(Error::Parse(format!(
                    "entries[{e}].val: not a finite number"
                )));
            }
            let [i, j, k, l] = entry.idx.map(|x| x - 1);
            let v = entry.val;
            let images = [
                ([i, j, k, l], v),
                ([j, i, k, l], -v),
                ([i, j, l, k], -v),
                ([j, i, l, k], v),
                ([k, l, i, j], v),
                ([l, k, i, j], -v),
                ([k, l, j, i], -v),
                ([l, k, j, i], v),
            ];
            for (idx, val) in images {
                let o = ((idx[0] * n + idx[1]) * n + idx[2]) * n + idx[3];
                if set[o] && out.get(idx) != val {
                    return Err(Error::Parse(format!(
                        "entries[{e}]: conflicts with an earlier entry at {:?}",
                        idx.map(|x| x + 1)
                    )));
                }
                set[o] = true;
                out.set(idx, val);
            }
        }
        Ok(out)
    }
}

/// `(i, j)` pairs with `i < j`.
fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Position of `h_ab` in the packed upper triangle.
fn var_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a + 1) / 2 + b
}

fn unpack(n: usize, x: &DVector<f64>) -> Vec<Vec<f64>> {
    (0..n)
        .map(|a| (0..n).map(|b| x[var_index(n, a, b)]).collect())
        .collect()
}

/// Residuals `h_il h_jk − h_ik h_jl − T_ijkl` over `i<j`, `k<l`, in a fixed
/// order.
fn residuals(n: usize, x: &DVector<f64>, target: &Array4) -> DVector<f64> {
    let h = |a: usize, b: usize| x[var_index(n, a, b)];
    let ps = pairs(n);
    DVector::from_iterator(
        ps.len() * ps.len(),
        ps.iter().flat_map(|&(i, j)| {
            ps.iter().map(move |&(k, l)| {
                h(i, l) * h(j, k) - h(i, k) * h(j, l) - target.get([i, j, k, l])
            })
        }),
    )
}

fn jacobian(n: usize, x: &DVector<f64>) -> DMatrix<f64> {
    let h = |a: usize, b: usize| x[var_index(n, a, b)];
    let ps = pairs(n);
    let nvar = n * (n + 1) / 2;
    let mut jac = DMatrix::zeros(ps.len() * ps.len(), nvar);
    let mut row = 0;
    for &(i, j) in &ps {
        for &(k, l) in &ps {
            jac[(row, var_index(n, i, l))] += h(j, k);
            jac[(row, var_index(n, j, k))] += h(i, l);
            jac[(row, var_index(n, i, k))] -= h(j, l);
            jac[(row, var_index(n, j, l))] -= h(i, k);
            row += 1;
        }
    }
    jac
}

/// `sqrt(Σ_{i<j, k<l} (h_il h_jk − h_ik h_jl − T_ijkl)²)`.
pub fn gauss_defect(h: &[Vec<f64>], target: &Array4) -> f64 {
    let n = h.len();
    let mut acc = 0.0;
    for &(i, j) in &pairs(n) {
        for &(k, l) in &pairs(n) {
            let d = h[i][l] * h[j][k] - h[i][k] * h[j][l] - target.get([i, j, k, l]);
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// Levenberg–Marquardt from `x`, damping divided by 3 on success and
/// doubled on failure.
fn minimize(n: usize, mut x: DVector<f64>, target: &Array4) -> DVector<f64> {
    let nvar = x.len();
    let mut r = residuals(n, &x, target);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        if cost < 1e-30 {
            break;
        }
        let jac = jacobian(n, &x);
        let jt = jac.transpose();
        let grad = &jt * &r;
        let normal = &jt * &jac;
        let mut accepted = false;
        while lambda < 1e16 {
            let damped = &normal + DMatrix::identity(nvar, nvar) * lambda;
            let Some(chol) = damped.cholesky() else {
                lambda *= 2.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial = &x + &step;
            let r_trial = residuals(n, &trial, target);
            let c_trial = r_trial.norm_squared();
            if c_trial < cost {
                let converged = step.norm() <= 1e-15 * (1.0 + x.norm());
                x = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = !converged;
                break;
            }
            lambda *= 2.0;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Searches for a symmetric `h` with `h_il h_jk − h_ik h_jl = T_ijkl` by
/// damped least squares from `restarts` seeded starting points. Returns the
/// best restart; ties go to the lowest restart index.
pub fn gauss_lsq_solve(
    target: &Array4,
    n: usize,
    restarts: usize,
    seed: u64,
) -> Result<GaussSolveResult> {
    if target.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: target.n(),
        });
    }
    if restarts == 0 {
        return Err(Error::Argument("at least one restart is needed".into()));
    }
    let defect = target.riemann_defect();
    if defect.is_nan() || defect > SYMMETRY_TOLERANCE {
        return Err(Error::Argument(format!(
            "target violates the curvature symmetries by {defect:e}"
        )));
    }
    let nvar = n * (n + 1) / 2;
    let scale = target.max_abs().sqrt().max(1.0);
    let runs: Vec<(f64, Vec<Vec<f64>>)> = (0..restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(restart as u64);
            let x0 =
                DVector::from_iterator(nvar, (0..nvar).map(|_| rng.random_range(-scale..=scale)));
            let h = unpack(n, &minimize(n, x0, target));
            (gauss_defect(&h, target), h)
        })
        .collect();
    let (best_restart, (residual, h)) = runs
        .into_iter()
        .enumerate()
        .reduce(|best, cand| if cand.1 .0 < best.1 .0 { cand } else { best })
        .expect("restarts >= 1");
    Ok(GaussSolveResult {
        h,
        residual,
        restarts_used: restarts,
        best_restart,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target_from_h(h: &[Vec<f64>]) -> Array4 {
        Array4::from_fn(h.len(), |[i, j, k, l]| {
            h[i][l] * h[j][k] - h[i][k] * h[j][l]
        })
    }

    #[test]
    fn recovers_diagonal_h() {
        let h = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ];
        let res = gauss_lsq_solve(&target_from_h(&h), 3, 20, 7).unwrap();
        assert!(res.residual < 1e-8, "{}", res.residual);
        let s = res.h[0][0].signum();
        for (a, row) in h.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                assert!((res.h[a][b] - s * v).abs() < 1e-6, "{:?}", res.h);
            }
        }
    }

    #[test]
    fn saddle_is_realized() {
        let t = TargetFile {
            n: 2,
            entries: vec![TargetEntry {
                idx: [1, 2, 2, 1],
                val: -1.0,
            }],
        };
        let res = gauss_lsq_solve(&t.complete().unwrap(), 2, 10, 1).unwrap();
        assert!(res.residual < 1e-8);
        let det = res.h[0][0] * res.h[1][1] - res.h[0][1] * res.h[1][0];
        assert!((det + 1.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let t = target_from_h(&[vec![0.5, 1.0], vec![1.0, -0.3]]);
        let a = gauss_lsq_solve(&t, 2, 5, 99).unwrap();
        let b = gauss_lsq_solve(&t, 2, 5, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.residual.to_bits(), b.residual.to_bits());
    }

    #[test]
    fn rejects_bad_targets() {
        let mut t = Array4::zeros(3);
        t.set([0, 1, 0, 1], 1.0);
        assert!(gauss_lsq_solve(&t, 3, 1, 0).is_err());
        assert!(gauss_lsq_solve(&Array4::zeros(3), 3, 0, 0).is_err());
        assert!(gauss_lsq_solve(&Array4::zeros(3), 2, 1, 0).is_err());
    }

    #[test]
    fn target_file_completion() {
        let t =
            TargetFile::from_json(r#"{"n":3,"entries":[{"idx":[1,2,2,1],"val":-1.0}]}"#).unwrap();
        assert_eq!(t.get([0, 1, 1, 0]), -1.0);
        assert_eq!(t.get([1, 0, 0, 1]), -1.0);
        assert_eq!(t.get([0, 1, 0, 1]), 1.0);
        assert_eq!(t.riemann_defect(), 0.0);
        let err = TargetFile::from_json(r#"{"n":2,"entries":[{"idx":[1,2,3,1],"val":1.0}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("entries[0].idx"), "{err}");
        let err = TargetFile::from_json(
            r#"{"n":2,"entries":[{"idx":[1,2,1,2],"val":1.0},{"idx":[2,1,2,1],"val":2.0}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("conflicts"), "{err}");
    }

    #[test]
    fn packed_indices_cover_the_triangle() {
        let n = 4;
        let mut seen: Vec<usize> = (0..n)
            .flat_map(|a| (a..n).map(move |b| var_index(n, a, b)))
            .collect();
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(var_index(n, 3, 1), var_index(n, 1, 3));
    }
}
