//! Empirical checks of the type system's guarantees: metric preservation on
//! deterministic programs, the DP inequality on exact output distributions,
//! and the algebraic laws of the environments and accountant.

mod gen;
mod lemmas;
mod pairs;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use serde_json::json;

use crate::accountant::PrivEnv;
use crate::env::Sens;
use crate::eval::{eval_exact_output, run_program, EvalError, ExactConfig, Inputs, Value, DEFAULT_FUEL};
use crate::mechanisms::{RealDist, Rng};
use crate::real::EDCost;
use crate::syntax::{SType, Type};
use crate::typeck::{show_ty, TypedProgram};

pub use gen::{erase_sensitive, gen_random_program, gen_random_program_with_env, MAX_GEN_SIZE};
pub use lemmas::check_algebra_laws;
pub use pairs::{random_value, related, value_distance};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("NotDeterministicFragment: {0}")]
    NotDeterministicFragment(String),
    #[error("UnboundedSpec: source `{0}` has infinite distance but nonzero sensitivity")]
    UnboundedSpec(String),
    #[error("invalid distance spec: {0}")]
    InvalidSpec(String),
    #[error("no usable privacy claim: {0}")]
    NoClaim(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Initial distance between the paired inputs of each source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSpec(pub BTreeMap<String, f64>);

impl DistanceSpec {
    /// The same distance for every declared source.
    pub fn uniform(tp: &TypedProgram, d: f64) -> Self {
        DistanceSpec(tp.program.sources.iter().map(|s| (s.name.clone(), d)).collect())
    }

    pub fn get(&self, source: &str) -> f64 {
        self.0.get(source).copied().unwrap_or(0.0)
    }

    fn validate(&self, tp: &TypedProgram) -> Result<(), VerifyError> {
        for (k, d) in &self.0 {
            if tp.program.source(k).is_none() {
                return Err(VerifyError::InvalidSpec(format!("`{k}` is not a declared source")));
            }
            if d.is_nan() || *d < 0.0 {
                return Err(VerifyError::InvalidSpec(format!("distance for `{k}` must be nonnegative, got {d}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub detail: String,
    pub bound: f64,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub kind: &'static str,
    pub trials: usize,
    pub violations: Vec<Violation>,
    pub max_observed: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub details: BTreeMap<String, serde_json::Value>,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} check: {}", self.kind, if self.pass { "PASS" } else { "FAIL" })?;
        writeln!(f, "  trials: {}", self.trials)?;
        if let Some(s) = self.seed {
            writeln!(f, "  seed: {s}")?;
        }
        writeln!(f, "  max observed: {}", self.max_observed)?;
        for (k, v) in &self.details {
            writeln!(f, "  {k}: {v}")?;
        }
        writeln!(f, "  violations: {}", self.violations.len())?;
        for v in self.violations.iter().take(10) {
            writeln!(f, "    trial {}: {} (bound {}, observed {})", v.trial, v.detail, v.bound, v.observed)?;
        }
        Ok(())
    }
}

/// Σ·Σ′ with 0·∞ = 0.
fn dot_bound(spec: &DistanceSpec, sens: &crate::env::SEnv) -> Result<f64, VerifyError> {
    let mut total = 0.0;
    for (k, s) in sens.iter() {
        let d = spec.get(k.as_str());
        if d == 0.0 || s.is_zero() {
            continue;
        }
        match s {
            Sens::Inf => return Ok(f64::INFINITY),
            Sens::Finite(n) => {
                if d.is_infinite() {
                    return Err(VerifyError::UnboundedSpec(k.to_string()));
                }
                total += d * *n as f64;
            }
        }
    }
    Ok(total)
}

fn deterministic_env(tp: &TypedProgram) -> Result<&crate::env::SEnv, VerifyError> {
    match &tp.main {
        Type::Sensitive(SType::SReal(_), s) => Ok(s),
        t => Err(VerifyError::NotDeterministicFragment(format!("main has type {}, expected a sensitive real", show_ty(t)))),
    }
}

fn output(tp: &TypedProgram, inputs: &Inputs, fuel: u64) -> Result<f64, VerifyError> {
    let v = run_program(tp, inputs, 0, fuel)?.value;
    v.as_real().ok_or_else(|| VerifyError::NotDeterministicFragment(format!("main produced {v}")))
}

fn inputs_json(i: &Inputs) -> serde_json::Value {
    serde_json::Value::Object(i.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}

/// Compare `|v − v′|` against Σ·Σ′ on the given input pairs.
pub fn check_metric_pairs(
    tp: &TypedProgram,
    spec: &DistanceSpec,
    pairs: &[(Inputs, Inputs)],
    fuel: u64,
) -> Result<VerifyReport, VerifyError> {
    spec.validate(tp)?;
    let bound = dot_bound(spec, deterministic_env(tp)?)?;
    let mut violations = Vec::new();
    let mut max_observed: f64 = 0.0;
    for (trial, (a, b)) in pairs.iter().enumerate() {
        let (va, vb) = (output(tp, a, fuel)?, output(tp, b, fuel)?);
        let observed = (va - vb).abs();
        max_observed = max_observed.max(observed);
        if observed > bound + 1e-9 * (1.0 + va.abs().max(vb.abs())) {
            violations.push(Violation {
                trial,
                detail: format!("inputs {} and {} give {va} and {vb}", inputs_json(a), inputs_json(b)),
                bound,
                observed,
            });
        }
    }
    let mut details = BTreeMap::new();
    details.insert("bound".into(), json!(bound));
    Ok(VerifyReport {
        kind: "metric",
        trials: pairs.len(),
        pass: violations.is_empty(),
        violations,
        max_observed,
        seed: None,
        details,
    })
}

/// Random related input pairs per `spec`, checked with [`check_metric_pairs`].
pub fn check_metric_preservation(
    tp: &TypedProgram,
    spec: &DistanceSpec,
    trials: usize,
    seed: u64,
) -> Result<VerifyReport, VerifyError> {
    spec.validate(tp)?;
    deterministic_env(tp)?;
    let mut rng = Rng::from_seed(seed);
    let pairs: Vec<(Inputs, Inputs)> = (0..trials)
        .map(|_| {
            let mut r = rng.split();
            let mut a = Inputs::new();
            let mut b = Inputs::new();
            for s in &tp.program.sources {
                let x = random_value(&s.ty, &mut r);
                let y = related(&s.ty, &x, spec.get(&s.name), &mut r);
                a.insert(s.name.clone(), x);
                b.insert(s.name.clone(), y);
            }
            (a, b)
        })
        .collect();
    let mut report = check_metric_pairs(tp, spec, &pairs, DEFAULT_FUEL)?;
    report.seed = Some(seed);
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct DpOptions {
    pub config: ExactConfig,
    pub tol: f64,
    /// Overrides the ε read from the budget.
    pub claim_eps: Option<f64>,
    /// Overrides the δ read from the budget.
    pub claim_delta: Option<f64>,
    pub fuel: u64,
}

impl DpOptions {
    pub fn new(config: ExactConfig) -> Self {
        DpOptions { config, tol: 1e-3, claim_eps: None, claim_delta: None, fuel: DEFAULT_FUEL }
    }
}

/// The (ε, δ) the budget promises for this input pair: the largest product
/// of input distance and per-source cost over the sources.
fn claimed(tp: &TypedProgram, a: &Inputs, b: &Inputs) -> Result<(f64, f64), String> {
    let budget = tp.budget.as_ref().ok_or("main is not a privacy-monad computation")?;
    let dist = |src: &str| -> f64 {
        let ty = &tp.program.source(src).expect("budget sources are declared").ty;
        match (a.get(src), b.get(src)) {
            (Some(x), Some(y)) => value_distance(ty, x, y),
            _ => 0.0,
        }
    };
    let (mut eps, mut delta) = (0.0f64, 0.0f64);
    match budget {
        PrivEnv::Eps(env) => {
            for (k, c) in env.iter() {
                let d = dist(k.as_str());
                if d > 0.0 {
                    eps = eps.max(d * c.as_f64());
                }
            }
        }
        PrivEnv::Ed(env) => {
            for (k, c) in env.iter() {
                let d = dist(k.as_str());
                if d == 0.0 {
                    continue;
                }
                if d > 1.0 {
                    return Err(format!("inputs for `{k}` are {d} apart; (eps, delta) claims cover neighbors only"));
                }
                match c {
                    EDCost::Inf => eps = f64::INFINITY,
                    EDCost::Finite { eps: e, delta: dl } => {
                        eps = eps.max(e.eval().map_err(|e| e.to_string())?);
                        delta = delta.max(dl.eval().map_err(|e| e.to_string())?);
                    }
                }
            }
        }
        PrivEnv::Rdp(_) => return Err("Renyi budgets need an explicit eps claim".into()),
    }
    Ok((eps, delta))
}

fn two_sided(p: &RealDist, q: &RealDist, eps: f64) -> f64 {
    p.required_delta(q, eps).max(q.required_delta(p, eps))
}

/// Smallest ε at which the two distributions meet `delta`, or infinity.
fn tightest_eps(p: &RealDist, q: &RealDist, delta: f64) -> f64 {
    let ok = |e: f64| two_sided(p, q, e) <= delta;
    if ok(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1024.0 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Exact output distributions on both inputs, checked against the claim.
pub fn check_dp(tp: &TypedProgram, inputs1: &Inputs, inputs2: &Inputs, opts: &DpOptions) -> Result<VerifyReport, VerifyError> {
    let (mut eps, mut delta) = match (opts.claim_eps, claimed(tp, inputs1, inputs2)) {
        (_, Ok(c)) => c,
        (Some(e), Err(_)) => (e, 0.0),
        (None, Err(m)) => return Err(VerifyError::NoClaim(m)),
    };
    if let Some(e) = opts.claim_eps {
        eps = e;
    }
    if let Some(d) = opts.claim_delta {
        delta = d;
    }
    let p = eval_exact_output(tp, inputs1, opts.config, opts.fuel)?;
    let q = eval_exact_output(tp, inputs2, opts.config, opts.fuel)?;
    let forward = p.required_delta(&q, eps);
    let backward = q.required_delta(&p, eps);
    let required = forward.max(backward);
    let allowed = delta + opts.tol;
    let mut violations = Vec::new();
    if required > allowed {
        violations.push(Violation {
            trial: 0,
            detail: format!("required delta {required} exceeds {delta} + tol {}", opts.tol),
            bound: allowed,
            observed: required,
        });
    }
    let g = opts.config.grid;
    let mut details = BTreeMap::new();
    details.insert("claimed_eps".into(), json!(eps));
    details.insert("claimed_delta".into(), json!(delta));
    details.insert("tol".into(), json!(opts.tol));
    details.insert("discretization_slack".into(), json!(0.0));
    details.insert("required_delta_forward".into(), json!(forward));
    details.insert("required_delta_backward".into(), json!(backward));
    details.insert("tightest_eps".into(), json!(tightest_eps(&p, &q, allowed)));
    details.insert("grid".into(), json!(format!("{}:{}:{}", g.lo(), g.hi(), g.step())));
    details.insert("support".into(), json!([p.len(), q.len()]));
    Ok(VerifyReport {
        kind: "dp",
        trials: 1,
        pass: violations.is_empty(),
        violations,
        max_observed: required,
        seed: None,
        details,
    })
}

/// Inputs where every source takes its zero value, and a neighbor where
/// the first source moves by one unit.
pub fn default_neighbors(tp: &TypedProgram) -> (Inputs, Inputs) {
    fn zero(t: &SType) -> Value {
        match t {
            SType::SReal(_) => Value::Real(0.0),
            SType::SProd(_, a, b) => Value::pair(zero(a), zero(b)),
            SType::SMatrix(_, r, c, a) => {
                Value::list((0..*r).map(|_| Value::list((0..*c).map(|_| zero(a)).collect())).collect())
            }
            SType::SList(..) | SType::SSet(_) | SType::SDict(..) => Value::list(Vec::new()),
        }
    }
    fn bump(t: &SType) -> Value {
        match t {
            SType::SReal(_) => Value::Real(1.0),
            SType::SProd(_, a, b) => Value::pair(bump(a), zero(b)),
            SType::SMatrix(_, r, c, a) => Value::list(
                (0..*r)
                    .map(|i| Value::list((0..*c).map(|j| if i == 0 && j == 0 { bump(a) } else { zero(a) }).collect()))
                    .collect(),
            ),
            SType::SSet(p) => Value::list(vec![plain_zero(p)]),
            SType::SList(..) | SType::SDict(..) => Value::list(Vec::new()),
        }
    }
    fn plain_zero(p: &crate::syntax::PlainType) -> Value {
        use crate::syntax::PlainType;
        match p {
            PlainType::Bool => Value::Bool(false),
            PlainType::Real => Value::Real(0.0),
            PlainType::Prod(a, b) => Value::pair(plain_zero(a), plain_zero(b)),
            PlainType::List(_) => Value::list(Vec::new()),
        }
    }
    let a: Inputs = tp.program.sources.iter().map(|s| (s.name.clone(), zero(&s.ty))).collect();
    let mut b = a.clone();
    if let Some(s) = tp.program.sources.first() {
        b.insert(s.name.clone(), bump(&s.ty));
    }
    (a, b)
}

#[cfg(test)]
mod tests;
