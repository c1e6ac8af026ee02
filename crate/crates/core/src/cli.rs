//! Command-line front end. Every command produces a [`VerificationReport`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::algebra::{Poly, Rational, Symmetry};
use crate::dense::fmt_f64;
use crate::error::{Error, Result};
use crate::geometry::{
    curvature_sign, intrinsic_riemann_at, reference_riemann, ricci, GraphSurface, SectionalReport,
};
use crate::numflow::{self, flow_consistency_check, FlowCheckReport};
use crate::obstruction::{
    self, extension_obstruction, gauss_lsq_solve, Ambient, TargetFile, Verdict,
};
use crate::report::{to_value, Check, VerificationReport};
use crate::ricciprobe::{
    cubic_family, dt_riemann_origin, laplacian_a_oracle, lower_ones_matrix, star_check, CoefMatrix,
    ProbeResult, SignClass,
};

/// Residual below which `gauss-solve` reports a realization.
pub const GAUSS_FEASIBLE_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "curvprobe",
    version,
    about = "Exact curvature probes for graph hypersurfaces under Ricci flow"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Format {
    /// Emit a JSON report (default).
    #[arg(long, global = true, conflicts_with = "text")]
    pub json: bool,
    /// Emit a short human-readable summary.
    #[arg(long, global = true)]
    pub text: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full chain for the lower-triangular ones matrix of size n.
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..=8))]
        n: u32,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// List ordered triples violating the coefficient condition.
    Star {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Curvature derivative at the origin for a coefficient matrix.
    Dtrm {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Metric, curvature and coordinate sectional curvatures at a point.
    Curvature {
        /// Polynomial file.
        #[arg(long)]
        f: PathBuf,
        /// Comma-separated rationals, e.g. `0,1/2`.
        #[arg(long, value_delimiter = ',', required = true)]
        at: Vec<Rational>,
        /// Expected dimension; checked against the polynomial file.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Finite-difference check of one Euler step of the flow.
    Flowcheck {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
        n: Option<u32>,
        /// Coefficient matrix file; defaults to the lower-triangular ones matrix.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Search for a second fundamental form realizing a target curvature.
    GaussSolve {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// Strictly decreasing time steps, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = numflow::DEFAULT_DT_SWEEP)]
    pub dt: Vec<f64>,
    /// Finite-difference step.
    #[arg(long, default_value_t = numflow::DEFAULT_FD_STEP)]
    pub h: f64,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify { .. } => "verify",
            Command::Star { .. } => "star",
            Command::Dtrm { .. } => "dtrm",
            Command::Curvature { .. } => "curvature",
            Command::Flowcheck { .. } => "flowcheck",
            Command::GaussSolve { .. } => "gauss-solve",
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> Result<CoefMatrix> {
    with_path(path, CoefMatrix::from_json(&read(path)?))
}

fn floats(xs: &[f64]) -> Value {
    Value::from(xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>())
}

/// Runs a command; errors become an `error` report with exit code 2.
pub fn execute(cli: &Cli) -> VerificationReport {
    let name = cli.command.name();
    let run = match &cli.command {
        Command::Verify { n, flow } => cmd_verify(*n as usize, &flow.dt, flow.h),
        Command::Star { matrix } => cmd_star(matrix),
        Command::Dtrm { matrix } => cmd_dtrm(matrix),
        Command::Curvature { f, at, n } => cmd_curvature(f, at, *n),
        Command::Flowcheck { n, matrix, flow } => {
            cmd_flowcheck(*n, matrix.as_deref(), &flow.dt, flow.h)
        }
        Command::GaussSolve {
            target,
            restarts,
            seed,
        } => cmd_gauss_solve(target, *restarts, *seed),
    };
    run.unwrap_or_else(|e| VerificationReport::error(name, e.to_string()))
}

pub fn render(cli: &Cli, report: &VerificationReport) -> String {
    if cli.format.text {
        report.to_text()
    } else {
        report.to_json()
    }
}

fn diag_law(n: usize, probe: &ProbeResult) -> bool {
    probe
        .diag_entries
        .iter()
        .all(|(&(_, j), v)| *v == Rational::from_integer(8 * (j as i64 + 1 - n as i64 - 2)))
}

fn flow_check_entry(report: &FlowCheckReport) -> Check {
    let rel = report.relative_error.map_or("n/a".to_string(), fmt_f64);
    let slope = report.slope.map_or("undefined".to_string(), fmt_f64);
    let slope_note = if report.slope_required() {
        ""
    } else {
        " (reported only)"
    };
    Check::new(
        "flow_consistency",
        report.passes(),
        format!(
            "relative error {rel} (tolerance {}), slope {slope}{slope_note}, errors monotone: {}",
            numflow::AGREEMENT_TOLERANCE,
            report.errors_monotone
        ),
    )
}

fn sign_word(c: SignClass) -> &'static str {
    match c {
        SignClass::AllNegative => "all negative",
        SignClass::AllPositive => "all positive",
        SignClass::Mixed => "mixed",
        SignClass::Zero => "zero",
    }
}

fn diag_notes(probe: &ProbeResult) -> Vec<String> {
    let mut notes: Vec<String> = probe
        .diag_entries
        .iter()
        .map(|(&(i, j), v)| format!("dt_rm[{0},{1},{0},{1}] = {v}", i + 1, j + 1))
        .collect();
    notes.push(format!("diagonal sign: {}", sign_word(probe.diag_sign)));
    notes
}

/// Compares the case table against direct differentiation (`W(0) = 1`).
fn oracle_entry(a: &CoefMatrix, probe: &ProbeResult) -> Result<Check> {
    let oracle = laplacian_a_oracle(a)?;
    let mismatches = probe
        .dt_rm
        .entries()
        .filter(|(idx, v)| *v != oracle.get(idx))
        .count();
    Ok(Check::new(
        "case_table_matches_oracle",
        mismatches == 0,
        format!("{mismatches} entries differ from direct differentiation"),
    ))
}

/// `Π(0)` at the origin of the cubic graph, which is exactly zero there.
fn h_at_origin(a: &CoefMatrix) -> Result<crate::algebra::Tensor<Rational>> {
    let s = GraphSurface::new(cubic_family(a));
    s.second_fundamental()?.eval(&vec![Rational::zero(); a.n()])
}

pub fn cmd_verify(n: usize, dt: &[f64], h: f64) -> Result<VerificationReport> {
    if !(2..=8).contains(&n) {
        return Err(Error::Argument(format!(
            "verify needs 2 <= n <= 8, got {n}"
        )));
    }
    let a = lower_ones_matrix(n);
    let mut checks = Vec::new();

    let violations = star_check(&a);
    checks.push(Check::new(
        "star_condition",
        violations.is_empty(),
        format!("{} violating triples", violations.len()),
    ));

    let probe = dt_riemann_origin(&a, false)?;
    checks.push(oracle_entry(&a, &probe)?);
    checks.push(Check::new(
        "offdiag_zero",
        probe.offdiag_zero,
        "entries not equivalent to (i,j,i,j) vanish",
    ));
    checks.push(Check::new(
        "diag_law",
        diag_law(n, &probe),
        "dt_rm[i,j,i,j] = 8(j - n - 2)",
    ));
    checks.push(Check::new(
        "diag_all_negative",
        probe.diag_sign == SignClass::AllNegative,
        format!("diagonal pattern sign: {:?}", probe.diag_sign),
    ));

    let h_p = h_at_origin(&a)?;
    let mut certificates = Vec::new();
    for ambient in [Ambient::Flat, Ambient::EvolvingMetric] {
        let cert = extension_obstruction(&probe, &h_p, ambient)?;
        checks.push(Check::new(
            match ambient {
                Ambient::Flat => "certificate_flat",
                Ambient::EvolvingMetric => "certificate_evolving",
            },
            cert.check().is_ok(),
            format!(
                "{} nonzero entries, Π(0)(p) = 0",
                cert.nonzero_entries.len()
            ),
        ));
        certificates.push(to_value(&cert)?);
    }

    let flow = flow_consistency_check(&a, dt, h)?;
    checks.push(flow_check_entry(&flow));
    checks.push(Check::new(
        "post_step_sign_strict",
        flow.sectional_sign_after_step.is_strict(),
        format!(
            "sectional curvatures after the step: {:?}; claimed: {}",
            flow.sectional_sign_after_step, flow.claimed_sign
        ),
    ));

    let pairwise = if n >= 3 {
        // Literal reading: the (i,j,i,j) entries taken as sectional signs.
        let literal = obstruction::pairwise_sign_test(&probe.diag_entries, n)?;
        // Calibrated reading: the measured sectional curvatures after the step.
        let measured: BTreeMap<(usize, usize), Rational> = flow
            .sectional_after_step
            .iter()
            .map(|p| {
                Ok((
                    (p.plane[0] - 1, p.plane[1] - 1),
                    Rational::from_f64(p.value)?,
                ))
            })
            .collect::<Result<_>>()?;
        let calibrated = obstruction::pairwise_sign_test(&measured, n)?;
        let applies = flow.sectional_sign_after_step == SignClass::AllNegative;
        checks.push(Check::new(
            "pairwise_sign_literal",
            literal == Verdict::HypersurfaceInfeasible,
            format!("{literal:?} from the (i,j,i,j) entries"),
        ));
        checks.push(Check::new(
            "pairwise_sign_calibrated",
            (calibrated == Verdict::HypersurfaceInfeasible) == applies,
            format!(
                "{calibrated:?} from measured sectional curvatures; argument applies: {applies}"
            ),
        ));
        json!({
            "literal": literal,
            "calibrated": calibrated,
            "applies": applies,
        })
    } else {
        json!({
            "skipped": true,
            "note": "the pairwise sign argument concerns n >= 3 only",
        })
    };

    let results = json!({
        "star_violations": violations.len(),
        "probe": to_value(&probe)?,
        "certificates": certificates,
        "pairwise_sign": pairwise,
        "flow": to_value(&flow)?,
        "curvature_sign": curvature_sign(),
    });
    let mut notes = diag_notes(&probe);
    notes.push(format!(
        "sectional curvatures after one Euler step: {}; claimed sign: {}",
        sign_word(flow.sectional_sign_after_step),
        flow.claimed_sign
    ));
    notes.push(
        "in the calibrated convention K(e_i, e_j) = R_ijji, so negative (i,j,i,j) entries mean \
         increasing sectional curvature"
            .to_string(),
    );
    if n == 2 {
        notes.push("pairwise sign test skipped: the argument concerns n >= 3 only".to_string());
    }
    let inputs =
        json!({ "n": n, "matrix": to_value(&a.to_file())?, "dt": floats(dt), "h": fmt_f64(h) });
    Ok(VerificationReport::new("verify", inputs, results, checks).with_notes(notes))
}

pub fn cmd_star(path: &Path) -> Result<VerificationReport> {
    let a = load_matrix(path)?;
    let violations = star_check(&a);
    let listed: Vec<[usize; 3]> = violations
        .iter()
        .map(|&(x, y, z)| [x + 1, y + 1, z + 1])
        .collect();
    let checks = vec![Check::new(
        "star_condition",
        listed.is_empty(),
        format!("{} violating triples", listed.len()),
    )];
    let notes = listed
        .iter()
        .map(|t| format!("violated at (α, β, γ) = {t:?}"))
        .collect();
    let inputs = json!({ "matrix": to_value(&a.to_file())? });
    let results = json!({ "holds": listed.is_empty(), "violations": listed });
    Ok(VerificationReport::new("star", inputs, results, checks).with_notes(notes))
}

pub fn cmd_dtrm(path: &Path) -> Result<VerificationReport> {
    let a = load_matrix(path)?;
    let probe = dt_riemann_origin(&a, false)?;
    let checks = vec![oracle_entry(&a, &probe)?];
    let inputs = json!({ "matrix": to_value(&a.to_file())? });
    let mut notes = diag_notes(&probe);
    notes.push(format!(
        "off-diagonal entries vanish: {}",
        probe.offdiag_zero
    ));
    Ok(VerificationReport::new("dtrm", inputs, to_value(&probe)?, checks).with_notes(notes))
}

pub fn cmd_curvature(path: &Path, at: &[Rational], n: Option<usize>) -> Result<VerificationReport> {
    let f = with_path(path, Poly::from_json(&read(path)?))?;
    let dim = f.nvars();
    if let Some(n) = n {
        if n != dim {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: dim,
            });
        }
    }
    if at.len() != dim {
        return Err(Error::Argument(format!(
            "--at has {} coordinates, surface has {dim}",
            at.len()
        )));
    }
    let s = GraphSurface::new(f.clone());
    let g = s.metric()?;
    let ginv = s.metric_inv()?;
    let rm = reference_riemann(&s)?;
    let intrinsic = intrinsic_riemann_at(g, ginv, at)?;
    let closed = rm.eval(at)?;
    let mut sectionals = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            sectionals.push(SectionalReport::new(&rm, g, i, j, at)?);
        }
    }
    let ric = ricci(&closed, &ginv.eval(at)?)?;
    let checks = vec![Check::new(
        "gauss_matches_intrinsic",
        intrinsic == closed,
        "curvature from the metric equals the Gauss-equation form at the point",
    )];
    let results = json!({
        "metric": to_value(&g.eval(at)?)?,
        "riemann": to_value(&closed)?,
        "ricci": to_value(&ric.with_symmetry(Symmetry::Symmetric2)?)?,
        "sectional": to_value(&sectionals)?,
        "curvature_sign": curvature_sign(),
    });
    let notes = sectionals
        .iter()
        .map(|r| format!("K(e{}, e{}) = {}", r.plane[0], r.plane[1], r.value))
        .collect();
    let inputs = json!({ "f": to_value(&f.to_file())?, "at": to_value(&at.to_vec())? });
    Ok(VerificationReport::new("curvature", inputs, results, checks).with_notes(notes))
}

pub fn cmd_flowcheck(
    n: Option<u32>,
    matrix: Option<&Path>,
    dt: &[f64],
    h: f64,
) -> Result<VerificationReport> {
    let a = match (n, matrix) {
        (_, Some(path)) => {
            let a = load_matrix(path)?;
            if let Some(n) = n {
                if a.n() != n as usize {
                    return Err(Error::DimensionMismatch {
                        expected: n as usize,
                        found: a.n(),
                    });
                }
            }
            a
        }
        (Some(n), None) => lower_ones_matrix(n as usize),
        (None, None) => return Err(Error::Argument("flowcheck needs --n or --matrix".into())),
    };
    let flow = flow_consistency_check(&a, dt, h)?;
    let checks = vec![
        flow_check_entry(&flow),
        Check::new(
            "post_step_sign_strict",
            flow.sectional_sign_after_step.is_strict() || flow.exact_target.is_zero(),
            format!(
                "{:?}; claimed: {}",
                flow.sectional_sign_after_step, flow.claimed_sign
            ),
        ),
    ];
    let notes = flow
        .sectional_after_step
        .iter()
        .map(|p| {
            format!(
                "K(e{}, e{}) after the step = {}",
                p.plane[0],
                p.plane[1],
                fmt_f64(p.value)
            )
        })
        .collect();
    let inputs = json!({ "matrix": to_value(&a.to_file())?, "dt": floats(dt), "h": fmt_f64(h) });
    Ok(VerificationReport::new("flowcheck", inputs, to_value(&flow)?, checks).with_notes(notes))
}

pub fn cmd_gauss_solve(path: &Path, restarts: usize, seed: u64) -> Result<VerificationReport> {
    let file: TargetFile = with_path(
        path,
        serde_json::from_str(&read(path)?).map_err(Error::from),
    )?;
    let target = with_path(path, file.complete())?;
    let res = gauss_lsq_solve(&target, file.n, restarts, seed)?;
    let checks = vec![Check::new(
        "realized",
        res.residual < GAUSS_FEASIBLE_RESIDUAL,
        format!(
            "best residual {} over {restarts} restarts",
            fmt_f64(res.residual)
        ),
    )];
    let notes = vec![format!("best restart: {}", res.best_restart)];
    let inputs = json!({ "target": to_value(&file)?, "restarts": restarts, "seed": seed });
    Ok(VerificationReport::new("gauss-solve", inputs, to_value(&res)?, checks).with_notes(notes))
}

/// Sizes the global thread pool from `CURVPROBE_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CURVPROBE_THREADS") else {
        return Ok(());
    };
    let threads: usize = v.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Error::Argument(format!(
            "CURVPROBE_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Argument(e.to_string()))
}
