//! Step-counted interpreter.
//!
//! Only applications consume steps (including `let`, which is an
//! application in disguise, and closure calls made by primitives). In
//! sampling mode privacy-monad computations draw noise when run; in exact
//! mode they produce finite distributions on a grid.

mod input;
mod interp;
mod prims;
mod value;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::mechanisms::{MechError, RealDist, RealGrid};
use crate::syntax::{Expr, Program, Type};
use crate::typeck::TypedProgram;

pub use input::{inputs_from_json, value_from_json};
pub use value::{cmp_value, Closure, Pm, Value, ValueEnv};

pub type Inputs = BTreeMap<String, Value>;

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ran out of fuel after {0} steps")]
    OutOfFuel(u64),
    #[error("stuck term: {0}")]
    StuckTerm(String),
    #[error(transparent)]
    Mech(#[from] MechError),
    #[error("no input given for source `{0}`")]
    MissingSource(String),
    #[error("input for source `{source_name}` does not match its type: {message}")]
    ShapeMismatch { source_name: String, message: String },
    #[error("exact evaluation not supported: {0}")]
    UnsupportedExactProgram(String),
}

/// Limits for exact evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ExactConfig {
    pub grid: RealGrid,
    /// Largest support any intermediate distribution may have.
    pub max_support: usize,
    /// Largest number of branches a single bind may mix.
    pub max_components: usize,
}

impl ExactConfig {
    pub fn new(grid: RealGrid) -> Self {
        ExactConfig { grid, max_support: 1 << 16, max_components: 1 << 13 }
    }
}

/// One mechanism invocation during a sampling run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub mechanism: &'static str,
    pub params: BTreeMap<&'static str, f64>,
    pub output: serde_json::Value,
}

pub enum Mode {
    Sampling(crate::mechanisms::Rng),
    Exact(ExactConfig),
}

/// An interpreter with its own step budget and randomness.
pub struct Evaluator {
    inner: interp::Interp,
}

impl Evaluator {
    pub fn new(mode: Mode, fuel: u64) -> Self {
        Evaluator { inner: interp::Interp::new(mode, fuel) }
    }

    pub fn sampling(seed: u64, fuel: u64) -> Self {
        Self::new(Mode::Sampling(crate::mechanisms::Rng::from_seed(seed)), fuel)
    }

    pub fn eval(&mut self, env: &ValueEnv, e: &Expr) -> Result<Value, EvalError> {
        self.inner.eval(env, e)
    }

    /// Run a privacy-monad value: a sample in sampling mode, a `Value::Dist`
    /// in exact mode. Other values are returned unchanged.
    pub fn run(&mut self, v: Value) -> Result<Value, EvalError> {
        self.inner.run_top(v)
    }

    pub fn steps(&self) -> u64 {
        self.inner.steps
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.inner.trace
    }

    /// Bind the sources to their inputs and every definition to its value.
    pub fn program_env(&mut self, p: &Program, inputs: &Inputs) -> Result<ValueEnv, EvalError> {
        let mut env = ValueEnv::new();
        for s in &p.sources {
            let v = inputs.get(&s.name).ok_or_else(|| EvalError::MissingSource(s.name.clone()))?;
            env = env.extend(s.name.clone(), v.clone());
        }
        for d in &p.defs {
            let v = self.eval(&env, &d.body)?;
            env = env.extend(d.name.clone(), v);
        }
        Ok(env)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub value: Value,
    pub steps: u64,
    pub trace: Vec<TraceEvent>,
}

/// Evaluate `main`, drawing noise from the seeded stream.
pub fn run_program(tp: &TypedProgram, inputs: &Inputs, seed: u64, fuel: u64) -> Result<RunOutput, EvalError> {
    let mut ev = Evaluator::sampling(seed, fuel);
    let env = ev.program_env(&tp.program, inputs)?;
    let v = ev.eval(&env, &tp.program.main)?;
    let value = ev.run(v)?;
    Ok(RunOutput { value, steps: ev.steps(), trace: ev.inner.trace })
}

/// The output distribution of a private program returning a real, with
/// outputs snapped to the grid.
pub fn eval_exact_output(
    tp: &TypedProgram,
    inputs: &Inputs,
    config: ExactConfig,
    fuel: u64,
) -> Result<RealDist, EvalError> {
    match &tp.main {
        Type::Pm(_, t) if matches!(**t, Type::Real) => {}
        t => {
            return Err(EvalError::UnsupportedExactProgram(format!(
                "main has type {}, expected a privacy-monad computation of a real",
                crate::typeck::show_ty(t)
            )))
        }
    }
    let mut ev = Evaluator::new(Mode::Exact(config), fuel);
    let env = ev.program_env(&tp.program, inputs)?;
    let v = ev.eval(&env, &tp.program.main)?;
    let d = match ev.run(v)? {
        Value::Dist(d) => d,
        other => return Err(EvalError::StuckTerm(format!("expected a distribution, got {other}"))),
    };
    let mut support = Vec::with_capacity(d.len());
    for v in d.support() {
        support.push(v.as_real().ok_or_else(|| EvalError::StuckTerm(format!("non-real output {v}")))?);
    }
    let real = RealDist::from_parts(support, d.masses().to_vec())?;
    Ok(real.snap(&config.grid))
}

#[cfg(test)]
mod tests;
