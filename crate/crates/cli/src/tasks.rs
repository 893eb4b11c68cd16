//! One engine task plus the oracle comparisons that come with it.

use std::time::{Duration, Instant};

use compop::engine::{
    aluthge_symbol, classify_affine_exp, classify_compop, fit_linear_growth, iterate_norm_curve, polar_of_compop,
    power_symbol, sab_chain, symbols_equal, verdict, verdict_affine_exp_in, verdict_l2_gaussian, ProjectionChain,
    Verdict,
};
use compop::fock_basis::{compose_matrix, AffineSymbol, CompOpMatrix};
use compop::matrix_core::{json, min_eigenvalue, op_norm, selfadjoint_residual, CMatrix};
use compop::verify_oracle::{
    block_identity_check, compression_norm_curve, compression_spectral_radius, l2_gram_norm, BlockCheck, L2Mode,
    OracleEstimate,
};
use compop::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::problem::{Problem, Task};

/// One engine-versus-oracle comparison.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Check {
    fn flag(name: &'static str, passed: bool) -> Self {
        Check { name, passed, value: None, target: None, tolerance: None }
    }

    /// |value - target| <= rtol * |target|.
    fn close(name: &'static str, value: f64, target: f64, rtol: f64) -> Self {
        let passed = (value - target).abs() <= rtol * target.abs();
        Check { name, passed, value: Some(value), target: Some(target), tolerance: Some(rtol) }
    }

    /// value <= bound * (1 + rtol).
    fn below(name: &'static str, value: f64, bound: f64, rtol: f64) -> Self {
        let passed = value <= bound * (1.0 + rtol);
        Check { name, passed, value: Some(value), target: Some(bound), tolerance: Some(rtol) }
    }

    /// value <= tol.
    fn small(name: &'static str, value: f64, tol: f64) -> Self {
        Check { name, passed: value <= tol, value: Some(value), target: Some(0.0), tolerance: Some(tol) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskError {
    pub code: &'static str,
    pub message: String,
}

impl From<Error> for TaskError {
    fn from(e: Error) -> Self {
        TaskError { code: e.code(), message: e.to_string() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub task: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<TaskError>,
    pub checks: Vec<Check>,
    /// Convergence curve for `--csv`.
    #[serde(skip)]
    pub curve: Option<OracleEstimate>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl TaskReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Output {
    result: Value,
    checks: Vec<Check>,
    curve: Option<OracleEstimate>,
}

impl Output {
    fn new(result: Value) -> Self {
        Output { result, checks: Vec::new(), curve: None }
    }

    fn check(mut self, c: Check) -> Self {
        self.checks.push(c);
        self
    }
}

type TaskResult = std::result::Result<Output, TaskError>;

pub fn run_task(p: &Problem, index: usize) -> TaskReport {
    let task = &p.tasks[index];
    let start = Instant::now();
    let out = match task {
        Task::Verdict => run_verdict(p),
        Task::Classify => run_classify(p),
        Task::Polar => run_polar(p),
        Task::Power { t } => run_power(p, *t),
        Task::Aluthge { s, t } => run_aluthge(p, *s, *t),
        Task::Equal { other } => other.build().map_err(TaskError::from).and_then(|o| run_equal(p, &o)),
        Task::Sab => run_sab(p),
        Task::L2 { monte_carlo } => run_l2(p, *monte_carlo),
        Task::Iterate { n_max } => run_iterate(p, *n_max),
        Task::Oracle => run_oracle(p),
    };
    let elapsed = start.elapsed();
    match out {
        Ok(o) => TaskReport {
            index,
            task: task.name(),
            result: Some(o.result),
            error: None,
            checks: o.checks,
            curve: o.curve,
            elapsed,
        },
        Err(e) => {
            TaskReport { index, task: task.name(), result: None, error: Some(e), checks: Vec::new(), curve: None, elapsed }
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn linear_part(p: &Problem, what: &str) -> std::result::Result<CMatrix, TaskError> {
    if p.symbol.is_linear() {
        Ok(p.symbol.a.clone())
    } else {
        Err(TaskError { code: "LINEAR_SYMBOL_REQUIRED", message: format!("{what} needs b = 0") })
    }
}

fn engine_verdict(p: &Problem) -> compop::Result<Verdict> {
    if p.symbol.is_linear() || !p.phi.is_exp() {
        verdict(&p.phi, &p.symbol, &p.tol)
    } else {
        verdict_affine_exp_in(&p.symbol.a, &p.symbol.b, p.ambient, &p.tol)
    }
}

fn linear_matrix(p: &Problem) -> compop::Result<CompOpMatrix> {
    compose_matrix(&p.phi, &AffineSymbol::linear(p.symbol.a.clone()), p.truncation)
}

/// Absolute tolerance for block identities, scaled by the truncated operator.
fn block_tol(p: &Problem, m: &CompOpMatrix) -> f64 {
    p.tol.residual * 10.0 * op_norm(&m.leading(p.truncation)).max(1.0)
}

fn run_verdict(p: &Problem) -> TaskResult {
    let v = engine_verdict(p)?;
    let mut out = Output::new(to_value(&v));
    if let Some(norm) = v.norm.finite() {
        let curve = compression_norm_curve(&p.phi, &p.symbol, p.truncation)?;
        out = out.check(Check::below("compression_below_norm", curve.final_value, norm, 1e-9));
    }
    if v.bounded && p.symbol.is_linear() {
        if let Some(r) = v.spectral_radius.value().and_then(|r| r.finite()) {
            let est = compression_spectral_radius(&p.phi, &p.symbol.a, p.truncation)?;
            out = out.check(Check::close("spectral_radius", est, r, p.oracle_rtol));
        }
    }
    Ok(out)
}

fn run_oracle(p: &Problem) -> TaskResult {
    let curve = compression_norm_curve(&p.phi, &p.symbol, p.truncation)?;
    let norm = engine_verdict(p).ok().map(|v| v.norm);
    let mut out = Output::new(json!({ "curve": to_value(&curve), "formula_norm": norm }))
        .check(Check::flag("nondecreasing", curve.is_nondecreasing(1e-12)));
    if let Some(norm) = norm.and_then(|n| n.finite()) {
        out = out.check(Check::close("final_matches_norm", curve.final_value, norm, p.oracle_rtol));
    }
    out.curve = Some(curve);
    Ok(out)
}

fn psd_scan(m: &CMatrix, tol: f64) -> bool {
    let scale = op_norm(m).max(1.0);
    selfadjoint_residual(m) <= tol * scale && min_eigenvalue(m) >= -tol * scale
}

fn hyponormal_scan(m: &CMatrix, tol: f64) -> bool {
    let scale = op_norm(m).powi(2).max(1.0);
    min_eigenvalue(&(m.adjoint() * m - m * m.adjoint())) >= -tol * scale
}

fn run_classify(p: &Problem) -> TaskResult {
    if !p.symbol.is_linear() {
        if !p.phi.is_exp() {
            return Err(Error::AffineUnsupportedForPhi.into());
        }
        let rep = classify_affine_exp(&p.symbol.a, &p.symbol.b, &p.tol)?;
        return Ok(Output::new(to_value(&rep)));
    }
    let rep = classify_compop(&p.phi, &p.symbol.a, &p.tol)?;
    // C_A leaves every degree block invariant, so the truncation is a direct
    // sum of blocks and block-wise predicates decide the truncated operator.
    let m = linear_matrix(p)?;
    let lead = m.leading(p.truncation);
    let blocks: Vec<CMatrix> =
        (0..=p.truncation).filter(|&n| !m.basis.block_range(n).is_empty()).map(|n| m.block(n)).collect();
    let tol = p.tol.residual;
    let scale = op_norm(&lead).max(1.0);
    let agree = |name, engine: Option<bool>, oracle: bool| engine.map(|e| Check::flag(name, e == oracle));
    let hypo = blocks.iter().all(|b| hyponormal_scan(b, tol));
    let cohypo = blocks.iter().all(|b| hyponormal_scan(&b.adjoint(), tol));
    let checks = [
        agree("selfadjoint_on_truncation", rep.selfadjoint.holds, selfadjoint_residual(&lead) <= tol * scale),
        agree("positive_on_truncation", rep.positive.holds, psd_scan(&lead, tol)),
        agree("hyponormal_on_truncation", rep.hyponormal.holds, hypo),
        agree("cohyponormal_on_truncation", rep.cohyponormal.holds, cohypo),
        agree("normal_on_truncation", rep.normal.holds, hypo && cohypo),
    ];
    let mut out = Output::new(to_value(&rep));
    out.checks = checks.into_iter().flatten().collect();
    Ok(out)
}

fn run_polar(p: &Problem) -> TaskResult {
    let a = linear_part(p, "polar")?;
    let (u, abs_star) = polar_of_compop(&a, &p.tol)?;
    let m = linear_matrix(p)?;
    let res = block_identity_check(BlockCheck::Polar, &p.phi, &a, p.truncation, &p.tol)?;
    Ok(Output::new(json!({ "u": json::matrix_to_rows(&u), "abs_adjoint": json::matrix_to_rows(&abs_star) }))
        .check(Check::small("polar_blocks", res, block_tol(p, &m))))
}

fn run_power(p: &Problem, t: f64) -> TaskResult {
    let a = linear_part(p, "power")?;
    let sym = power_symbol(&a, t, &p.tol)?;
    let m = linear_matrix(p)?;
    let res = block_identity_check(BlockCheck::Power { t }, &p.phi, &a, p.truncation, &p.tol)?;
    Ok(Output::new(json!({ "t": t, "symbol": json::matrix_to_rows(&sym) }))
        .check(Check::small("power_blocks", res, block_tol(p, &m))))
}

fn run_aluthge(p: &Problem, s: f64, t: f64) -> TaskResult {
    let a = linear_part(p, "aluthge")?;
    let sym = aluthge_symbol(&p.phi, &a, s, t, &p.tol)?;
    let m = linear_matrix(p)?;
    let res = block_identity_check(BlockCheck::Aluthge { s, t }, &p.phi, &a, p.truncation, &p.tol)?;
    Ok(Output::new(json!({ "s": s, "t": t, "transform": to_value(&sym) }))
        .check(Check::small("aluthge_blocks", res, block_tol(p, &m))))
}

fn run_equal(p: &Problem, other: &AffineSymbol) -> TaskResult {
    let (equal, alpha) = symbols_equal(&p.phi, &p.symbol, other, &p.tol)?;
    let m1 = compose_matrix(&p.phi, &p.symbol, p.truncation)?.leading(p.truncation);
    let m2 = compose_matrix(&p.phi, other, p.truncation)?.leading(p.truncation);
    let diff = op_norm(&(&m1 - &m2));
    let same = diff <= p.tol.residual * 10.0 * op_norm(&m1).max(op_norm(&m2)).max(1.0);
    Ok(Output::new(json!({ "equal": equal, "alpha": alpha.map(|z| [z.re, z.im]), "truncation_distance": diff }))
        .check(Check::flag("equal_on_truncation", equal == same)))
}

fn run_sab(p: &Problem) -> TaskResult {
    let chain = ProjectionChain::coordinate(p.symbol.dim());
    let res = sab_chain(&p.symbol.a, &p.symbol.b, &chain, &p.tol)?;
    let mut out = Output::new(to_value(&res))
        .check(Check::flag("monotone", res.monotone))
        .check(Check::flag("limit_matches", res.limit_matches));
    if p.phi.is_exp() {
        if let (Ok(v), Some(limit)) = (engine_verdict(p), res.limit.finite()) {
            if let Some(s) = v.s_ab {
                out = out.check(Check::close("limit_matches_verdict", limit, s, p.oracle_rtol.min(1e-6)));
            }
        }
    }
    Ok(out)
}

/// Bidegree level of the exact Gaussian Gram oracle by default.
fn l2_level(p: &Problem) -> usize {
    let cap = match p.symbol.dim() {
        1 => 8,
        2 => 4,
        _ => 2,
    };
    cap.min(p.truncation)
}

fn run_l2(p: &Problem, mc: Option<compop::verify_oracle::McConfig>) -> TaskResult {
    let v = verdict_l2_gaussian(&p.symbol.a, &p.symbol.b, &p.tol)?;
    let mode = match mc {
        Some(cfg) => L2Mode::MonteCarlo(compop::verify_oracle::McConfig { seed: p.seed, ..cfg }),
        None => L2Mode::Analytic,
    };
    let curve = l2_gram_norm(&p.symbol.a, &p.symbol.b, l2_level(p), mode, &p.tol)?;
    let mut out = Output::new(json!({ "verdict": to_value(&v), "oracle": to_value(&curve) }));
    if let Some(norm) = v.norm.finite() {
        // The Gram oracle is a lower bound; its gap to the formula shrinks slowly with the level.
        let rtol = if matches!(mode, L2Mode::Analytic) { 1e-9 } else { 5.0 * curve.std_error.unwrap_or(0.0) / norm };
        out = out.check(Check::below("oracle_below_norm", curve.final_value, norm, rtol));
    }
    out.curve = Some(curve);
    Ok(out)
}

fn run_iterate(p: &Problem, n_max: usize) -> TaskResult {
    if !p.phi.is_exp() {
        return Err(Error::AffineUnsupportedForPhi.into());
    }
    let curve = iterate_norm_curve(&p.symbol.a, &p.symbol.b, n_max, &p.tol)?;
    let fit = fit_linear_growth(&curve);
    Ok(Output::new(json!({ "curve": to_value(&curve), "fit": to_value(&fit) }))
        .check(Check::flag("linear_growth_holds_out_of_sample", fit.holds)))
}
