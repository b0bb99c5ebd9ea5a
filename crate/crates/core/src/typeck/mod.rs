//! Sensitivity and privacy type checking.

mod check;
mod convert;
pub mod schema;

use std::fmt;

use serde::Serialize;

use crate::accountant::PrivEnv;
use crate::env::{EpsCost, SEnv};
use crate::real::{EDCost, RDPCost};
use crate::syntax::{pretty_type, Program, Span, Type};

pub use check::{erase, typecheck_program};
pub use convert::ty_to_ast;

/// A checked type: sensitivity and privacy environments are concrete.
pub type Ty = Type<SEnv, PrivEnv>;

pub fn show_ty(t: &Ty) -> String {
    pretty_type(&ty_to_ast(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorCode {
    ParseError,
    UnboundVariable,
    UnboundEnvVar,
    TypeMismatch,
    MetricMismatch,
    BranchEnvMismatch,
    SensitiveBranchCondition,
    EnvEscape,
    InfiniteSensitivity,
    SensitivityExceeded,
    UnificationFailure,
    UnknownPrimitive,
    ArityMismatch,
    AlphaMismatch,
    PreconditionViolation,
    InvalidStatic,
    DuplicateDefinition,
    NotAPrivateProgram,
}

impl ErrorCode {
    pub const ALL: &'static [ErrorCode] = &[
        ErrorCode::ParseError,
        ErrorCode::UnboundVariable,
        ErrorCode::UnboundEnvVar,
        ErrorCode::TypeMismatch,
        ErrorCode::MetricMismatch,
        ErrorCode::BranchEnvMismatch,
        ErrorCode::SensitiveBranchCondition,
        ErrorCode::EnvEscape,
        ErrorCode::InfiniteSensitivity,
        ErrorCode::SensitivityExceeded,
        ErrorCode::UnificationFailure,
        ErrorCode::UnknownPrimitive,
        ErrorCode::ArityMismatch,
        ErrorCode::AlphaMismatch,
        ErrorCode::PreconditionViolation,
        ErrorCode::InvalidStatic,
        ErrorCode::DuplicateDefinition,
        ErrorCode::NotAPrivateProgram,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::ParseError => "ParseError",
            ErrorCode::UnboundVariable => "UnboundVariable",
            ErrorCode::UnboundEnvVar => "UnboundEnvVar",
            ErrorCode::TypeMismatch => "TypeMismatch",
            ErrorCode::MetricMismatch => "MetricMismatch",
            ErrorCode::BranchEnvMismatch => "BranchEnvMismatch",
            ErrorCode::SensitiveBranchCondition => "SensitiveBranchCondition",
            ErrorCode::EnvEscape => "EnvEscape",
            ErrorCode::InfiniteSensitivity => "InfiniteSensitivity",
            ErrorCode::SensitivityExceeded => "SensitivityExceeded",
            ErrorCode::UnificationFailure => "UnificationFailure",
            ErrorCode::UnknownPrimitive => "UnknownPrimitive",
            ErrorCode::ArityMismatch => "ArityMismatch",
            ErrorCode::AlphaMismatch => "AlphaMismatch",
            ErrorCode::PreconditionViolation => "PreconditionViolation",
            ErrorCode::InvalidStatic => "InvalidStatic",
            ErrorCode::DuplicateDefinition => "DuplicateDefinition",
            ErrorCode::NotAPrivateProgram => "NotAPrivateProgram",
        }
    }

    pub fn parse(s: &str) -> Option<ErrorCode> {
        ErrorCode::ALL.iter().copied().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeError {
    pub code: ErrorCode,
    pub span: Span,
    pub message: String,
    /// The definition being checked when the error arose.
    pub def: Option<String>,
}

impl TypeError {
    pub fn new(code: ErrorCode, span: Span, message: impl Into<String>) -> Self {
        TypeError { code, span, message: message.into(), def: None }
    }

    /// `line:col: CODE: message`, to be prefixed with a file name.
    pub fn diagnostic(&self) -> String {
        format!("{}: {}", self.span, self)
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.def {
            Some(d) => write!(f, "{}: in `{d}`: {}", self.code, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl std::error::Error for TypeError {}

#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub program: Program,
    /// Checked type of each definition, in program order. Definitions with
    /// quantifiers report their generic type, with skolem sources.
    pub defs: Vec<(String, Ty)>,
    pub main: Ty,
    pub budget: Option<PrivEnv>,
}

impl TypedProgram {
    pub fn is_private(&self) -> bool {
        self.budget.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetEntry {
    pub source: String,
    pub variant: String,
    /// Cost in the type syntax, e.g. `3` or `(2*(1/10)*sqrt(200*ln(100000)), 11/100000)`.
    pub symbolic: String,
    pub eps: f64,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
}

impl fmt::Display for BudgetEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: eps = ", self.source)?;
        match (&self.delta, &self.alpha) {
            (Some(d), None) => write!(f, "{} (delta = {})  [{}]", fmt_f64(self.eps), fmt_f64(*d), self.symbolic),
            (None, Some(a)) => write!(f, "{} at alpha = {}  [{}]", fmt_f64(self.eps), fmt_f64(*a), self.symbolic),
            _ => {
                let plain = fmt_f64(self.eps);
                if plain == self.symbolic {
                    f.write_str(&plain)
                } else {
                    write!(f, "{plain}  [{}]", self.symbolic)
                }
            }
        }
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        let s = format!("{x:.6}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

/// Per-source privacy cost of a private program.
pub fn budget_report(tp: &TypedProgram) -> Result<Vec<BudgetEntry>, TypeError> {
    let p = tp.budget.as_ref().ok_or_else(|| {
        TypeError::new(
            ErrorCode::NotAPrivateProgram,
            tp.program.main.span,
            format!("main has type {}, not a privacy-monad type", show_ty(&tp.main)),
        )
    })?;
    let variant = p.variant().to_string();
    let eval = |e: &crate::real::RealExpr| e.eval().unwrap_or(f64::NAN);
    let mut out = Vec::new();
    let entry = |source: String, symbolic: String, eps: f64, delta, alpha| BudgetEntry {
        source,
        variant: variant.clone(),
        symbolic,
        eps,
        delta,
        alpha,
    };
    match p {
        PrivEnv::Eps(env) => {
            for (k, v) in env.iter() {
                out.push(entry(k.to_string(), v.to_string(), v.as_f64(), None, None));
            }
        }
        PrivEnv::Ed(env) => {
            for (k, v) in env.iter() {
                match v {
                    EDCost::Finite { eps, delta } => {
                        out.push(entry(k.to_string(), v.to_string(), eval(eps), Some(eval(delta)), None))
                    }
                    EDCost::Inf => out.push(entry(k.to_string(), "inf".into(), f64::INFINITY, Some(1.0), None)),
                }
            }
        }
        PrivEnv::Rdp(env) => {
            for (k, v) in env.iter() {
                match v {
                    RDPCost::Finite { alpha, eps } => out.push(entry(
                        k.to_string(),
                        v.to_string(),
                        eval(eps),
                        None,
                        Some(crate::real::rational_to_f64(alpha)),
                    )),
                    RDPCost::Inf => out.push(entry(k.to_string(), "inf".into(), f64::INFINITY, None, None)),
                }
            }
        }
    }
    Ok(out)
}

/// The ε-cost of a source under a pure-DP budget, if finite.
pub fn eps_of(p: &PrivEnv, source: &str) -> Option<EpsCost> {
    match p {
        PrivEnv::Eps(env) => env.iter().find(|(k, _)| k.as_str() == source).map(|(_, v)| v.clone()),
        _ => None,
    }
}
