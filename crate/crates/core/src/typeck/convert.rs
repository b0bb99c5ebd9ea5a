//! Between written types (`TypeAst`) and checked types (`Ty`).

use num_traits::One;

use super::{ErrorCode, Ty, TypeError};
use crate::accountant::{PrivEnv, Variant};
use crate::env::{senv_join, senv_plus, senv_scale, EpsCost, PEnv, SEnv, Sens, SourceName};
use crate::real::{EDCost, RDPCost};
use crate::syntax::{CostLit, EnvExpr, PrivExpr, PrivNode, Span, Type, TypeAst};

/// Resolves environment variables while converting.
pub(crate) trait EnvLookup {
    fn lookup_env(&self, name: &str) -> Option<SEnv>;
}

pub(crate) fn source_name(name: &str, span: Span) -> Result<SourceName, TypeError> {
    SourceName::new(name).map_err(|e| TypeError::new(ErrorCode::InvalidStatic, span, e.to_string()))
}

pub(crate) fn env_expr(e: &EnvExpr, look: &dyn EnvLookup, span: Span) -> Result<SEnv, TypeError> {
    Ok(match e {
        EnvExpr::Lit(entries) => {
            let mut out = SEnv::empty();
            for (n, s) in entries {
                out = senv_plus(&out, &SEnv::singleton(source_name(n, span)?, *s));
            }
            out
        }
        EnvExpr::Var(v) => look.lookup_env(v).ok_or_else(|| {
            TypeError::new(ErrorCode::UnboundEnvVar, span, format!("environment variable `{v}` is not bound"))
        })?,
        EnvExpr::Plus(a, b) => senv_plus(&env_expr(a, look, span)?, &env_expr(b, look, span)?),
        EnvExpr::Join(a, b) => senv_join(&env_expr(a, look, span)?, &env_expr(b, look, span)?),
        EnvExpr::Scale(k, a) => senv_scale(*k, &env_expr(a, look, span)?),
    })
}

fn account(span: Span) -> impl Fn(crate::accountant::AccountError) -> TypeError {
    move |e| {
        let code = match e {
            crate::accountant::AccountError::AlphaMismatch { .. } => ErrorCode::AlphaMismatch,
            crate::accountant::AccountError::PreconditionViolation(_) => ErrorCode::PreconditionViolation,
            _ => ErrorCode::TypeMismatch,
        };
        TypeError::new(code, span, e.to_string())
    }
}

fn cost_lit(v: Variant, c: &CostLit, span: Span) -> Result<PrivEnvCost, TypeError> {
    let bad = || TypeError::new(ErrorCode::InvalidStatic, span, format!("cost is not a {v} cost"));
    Ok(match (v, c) {
        (Variant::Eps, CostLit::Inf) => PrivEnvCost::Eps(EpsCost::Inf),
        (Variant::Ed, CostLit::Inf) => PrivEnvCost::Ed(EDCost::Inf),
        (Variant::Rdp, CostLit::Inf) => PrivEnvCost::Rdp(RDPCost::Inf),
        (Variant::Eps, CostLit::Eps(r)) => PrivEnvCost::Eps(EpsCost::Finite(r.clone())),
        (Variant::Ed, CostLit::Ed(e, d)) => PrivEnvCost::Ed(EDCost::Finite { eps: e.clone(), delta: d.clone() }),
        (Variant::Rdp, CostLit::Rdp(a, e)) => {
            if *a <= crate::Rational::one() {
                return Err(TypeError::new(ErrorCode::InvalidStatic, span, "RDP order must exceed 1"));
            }
            PrivEnvCost::Rdp(RDPCost::Finite { alpha: a.clone(), eps: e.clone() })
        }
        _ => return Err(bad()),
    })
}

enum PrivEnvCost {
    Eps(EpsCost),
    Ed(EDCost),
    Rdp(RDPCost),
}

fn truncate(c: PrivEnvCost, s: &SEnv) -> PrivEnv {
    use crate::env::senv_truncate;
    match c {
        PrivEnvCost::Eps(c) => PrivEnv::Eps(senv_truncate(&c, s)),
        PrivEnvCost::Ed(c) => PrivEnv::Ed(senv_truncate(&c, s)),
        PrivEnvCost::Rdp(c) => PrivEnv::Rdp(senv_truncate(&c, s)),
    }
}

fn priv_node(v: Variant, n: &PrivNode, look: &dyn EnvLookup, span: Span) -> Result<PrivEnv, TypeError> {
    Ok(match n {
        PrivNode::Lit(entries) => {
            let mut out = PrivEnv::empty(v);
            for (name, c) in entries {
                let one = SEnv::singleton(source_name(name, span)?, Sens::ONE);
                out = out.seq_comp(&truncate(cost_lit(v, c, span)?, &one)).map_err(account(span))?;
            }
            out
        }
        PrivNode::Trunc(c, e) => truncate(cost_lit(v, c, span)?, &env_expr(e, look, span)?),
        PrivNode::Inf(e) => PrivEnv::infinite(v, &env_expr(e, look, span)?),
        PrivNode::Plus(a, b) => {
            priv_node(v, a, look, span)?.seq_comp(&priv_node(v, b, look, span)?).map_err(account(span))?
        }
        PrivNode::Scale(k, a) => priv_node(v, a, look, span)?.scale(*k),
    })
}

pub(crate) fn priv_expr(p: &PrivExpr, look: &dyn EnvLookup, span: Span) -> Result<PrivEnv, TypeError> {
    priv_node(p.variant, &p.node, look, span)
}

pub(crate) fn ast_to_ty(t: &TypeAst, look: &dyn EnvLookup, span: Span) -> Result<Ty, TypeError> {
    Ok(match t {
        Type::Bool => Type::Bool,
        Type::Real => Type::Real,
        Type::RealSing(r) => Type::RealSing(r.clone()),
        Type::Fun(a, b) => Type::fun(ast_to_ty(a, look, span)?, ast_to_ty(b, look, span)?),
        Type::Prod(a, b) => Type::prod(ast_to_ty(a, look, span)?, ast_to_ty(b, look, span)?),
        Type::List(a) => Type::list(ast_to_ty(a, look, span)?),
        Type::Pm(p, a) => Type::pm(priv_expr(p, look, span)?, ast_to_ty(a, look, span)?),
        Type::Sensitive(s, e) => Type::Sensitive(s.clone(), env_expr(e, look, span)?),
    })
}

/// Environment variables occurring in a written type, in order of first use.
pub(crate) fn env_vars(t: &TypeAst, out: &mut Vec<String>) {
    fn env(e: &EnvExpr, out: &mut Vec<String>) {
        match e {
            EnvExpr::Lit(_) => {}
            EnvExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            EnvExpr::Plus(a, b) | EnvExpr::Join(a, b) => {
                env(a, out);
                env(b, out);
            }
            EnvExpr::Scale(_, a) => env(a, out),
        }
    }
    fn node(n: &PrivNode, out: &mut Vec<String>) {
        match n {
            PrivNode::Lit(_) => {}
            PrivNode::Trunc(_, e) | PrivNode::Inf(e) => env(e, out),
            PrivNode::Plus(a, b) => {
                node(a, out);
                node(b, out);
            }
            PrivNode::Scale(_, a) => node(a, out),
        }
    }
    match t {
        Type::Bool | Type::Real | Type::RealSing(_) => {}
        Type::Fun(a, b) | Type::Prod(a, b) => {
            env_vars(a, out);
            env_vars(b, out);
        }
        Type::List(a) => env_vars(a, out),
        Type::Pm(p, a) => {
            node(&p.node, out);
            env_vars(a, out);
        }
        Type::Sensitive(_, e) => env(e, out),
    }
}

pub fn senv_to_ast(s: &SEnv) -> EnvExpr {
    EnvExpr::Lit(s.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

fn penv_lit<C>(p: &PEnv<C>, f: impl Fn(&C) -> CostLit) -> PrivNode
where
    C: crate::env::EnvValue,
{
    PrivNode::Lit(p.iter().map(|(k, v)| (k.to_string(), f(v))).collect())
}

pub fn privenv_to_ast(p: &PrivEnv) -> PrivExpr {
    let node = match p {
        PrivEnv::Eps(e) => penv_lit(e, |c| match c {
            EpsCost::Finite(r) => CostLit::Eps(r.clone()),
            EpsCost::Inf => CostLit::Inf,
        }),
        PrivEnv::Ed(e) => penv_lit(e, |c| match c {
            EDCost::Finite { eps, delta } => CostLit::Ed(eps.clone(), delta.clone()),
            EDCost::Inf => CostLit::Inf,
        }),
        PrivEnv::Rdp(e) => penv_lit(e, |c| match c {
            RDPCost::Finite { alpha, eps } => CostLit::Rdp(alpha.clone(), eps.clone()),
            RDPCost::Inf => CostLit::Inf,
        }),
    };
    PrivExpr { variant: p.variant(), node }
}

pub fn ty_to_ast(t: &Ty) -> TypeAst {
    match t {
        Type::Bool => Type::Bool,
        Type::Real => Type::Real,
        Type::RealSing(r) => Type::RealSing(r.clone()),
        Type::Fun(a, b) => Type::fun(ty_to_ast(a), ty_to_ast(b)),
        Type::Prod(a, b) => Type::prod(ty_to_ast(a), ty_to_ast(b)),
        Type::List(a) => Type::list(ty_to_ast(a)),
        Type::Pm(p, a) => Type::pm(privenv_to_ast(p), ty_to_ast(a)),
        Type::Sensitive(s, e) => Type::Sensitive(s.clone(), senv_to_ast(e)),
    }
}
