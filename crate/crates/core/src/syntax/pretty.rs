//! Printing back to concrete syntax. `parse(pretty(p)) == p` for every AST
//! the parser can produce.

use std::fmt::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::ast::*;
use crate::real::format_rational;
use crate::Rational;

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for s in &p.sources {
        let _ = writeln!(out, "source {} : {};", s.name, pretty_stype(&s.ty));
    }
    if !p.sources.is_empty() {
        out.push('\n');
    }
    for d in &p.defs {
        let q = if d.quantifiers.is_empty() { String::new() } else { format!("forall {}. ", d.quantifiers.join(" ")) };
        let _ = writeln!(out, "def {} : {q}{} =\n  {};\n", d.name, pretty_type(&d.sig), pretty_expr(&d.body));
    }
    let _ = writeln!(out, "main = {};", pretty_expr(&p.main));
    out
}

/// Decimal when the expansion terminates, `n/d` otherwise.
pub fn format_literal(r: &Rational) -> String {
    let mut d = r.denom().clone();
    let mut digits = 0usize;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format_rational(r);
    }
    digits += twos.max(fives);
    if digits == 0 {
        return r.numer().to_string();
    }
    let scaled = (r * Rational::from_integer(num_traits::pow(BigInt::from(10), digits))).to_integer();
    let neg = scaled.is_negative();
    let mut s = scaled.abs().to_string();
    while s.len() <= digits {
        s.insert(0, '0');
    }
    let (int_part, frac) = s.split_at(s.len() - digits);
    format!("{}{int_part}.{frac}", if neg { "-" } else { "" })
}

// ---- types ----

pub fn pretty_type(t: &TypeAst) -> String {
    let mut s = String::new();
    ty(&mut s, t, false);
    s
}

/// `atomic` requests parentheses around arrows.
fn ty(out: &mut String, t: &TypeAst, atomic: bool) {
    match t {
        Type::Bool => out.push_str("bool"),
        Type::Real => out.push_str("real"),
        Type::RealSing(r) => {
            let _ = write!(out, "real[{}]", format_literal(r));
        }
        Type::Fun(a, b) => {
            if atomic {
                out.push('(');
            }
            ty(out, a, true);
            out.push_str(" -> ");
            ty(out, b, false);
            if atomic {
                out.push(')');
            }
        }
        Type::Prod(a, b) => {
            out.push('(');
            ty(out, a, false);
            out.push_str(", ");
            ty(out, b, false);
            out.push(')');
        }
        Type::List(a) => {
            out.push_str("list(");
            ty(out, a, false);
            out.push(')');
        }
        Type::Pm(p, a) => {
            let _ = write!(out, "{} ", p.variant.keyword());
            penv_atom(out, &p.node);
            out.push(' ');
            ty(out, a, true);
        }
        Type::Sensitive(s, e) => {
            out.push_str(&pretty_stype(s));
            out.push(' ');
            env_atom(out, e);
        }
    }
}

pub fn pretty_stype(s: &SType) -> String {
    match s {
        SType::SReal(m) => format!("sreal {m}"),
        SType::SProd(w, a, b) => format!("spair {w} ({}) ({})", pretty_stype(a), pretty_stype(b)),
        SType::SList(w, a) => format!("slist {w} ({})", pretty_stype(a)),
        SType::SSet(p) => format!("sset {}", pretty_plain(p)),
        SType::SMatrix(w, r, c, a) => format!("smatrix {w} {r} {c} ({})", pretty_stype(a)),
        SType::SDict(w, a, b) => format!("sdict {w} ({}) ({})", pretty_stype(a), pretty_stype(b)),
    }
}

pub fn pretty_plain(p: &PlainType) -> String {
    match p {
        PlainType::Bool => "bool".into(),
        PlainType::Real => "real".into(),
        PlainType::Prod(a, b) => format!("({}, {})", pretty_plain(a), pretty_plain(b)),
        PlainType::List(a) => format!("list({})", pretty_plain(a)),
    }
}

pub fn pretty_env(e: &EnvExpr) -> String {
    let mut s = String::new();
    env(&mut s, e);
    s
}

fn env(out: &mut String, e: &EnvExpr) {
    match e {
        EnvExpr::Plus(a, b) => {
            env(out, a);
            out.push_str(" + ");
            env_term(out, b);
        }
        _ => env_term(out, e),
    }
}

fn env_term(out: &mut String, e: &EnvExpr) {
    match e {
        EnvExpr::Scale(k, a) => {
            let _ = write!(out, "{k} * ");
            env_atom(out, a);
        }
        _ => env_atom(out, e),
    }
}

fn env_atom(out: &mut String, e: &EnvExpr) {
    match e {
        EnvExpr::Lit(entries) => {
            out.push('[');
            for (i, (n, s)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{n}:{s}");
            }
            out.push(']');
        }
        EnvExpr::Var(v) => out.push_str(v),
        EnvExpr::Join(a, b) => {
            out.push_str("join(");
            env(out, a);
            out.push_str(", ");
            env(out, b);
            out.push(')');
        }
        EnvExpr::Plus(..) | EnvExpr::Scale(..) => {
            out.push('(');
            env(out, e);
            out.push(')');
        }
    }
}

fn cost(out: &mut String, c: &CostLit) {
    match c {
        CostLit::Inf => out.push_str("inf"),
        CostLit::Eps(r) => out.push_str(&format_literal(r)),
        CostLit::Ed(e, d) => {
            let _ = write!(out, "({e}, {d})");
        }
        CostLit::Rdp(a, e) => {
            let _ = write!(out, "({}, {e})", format_literal(a));
        }
    }
}

fn penv(out: &mut String, p: &PrivNode) {
    match p {
        PrivNode::Plus(a, b) => {
            penv(out, a);
            out.push_str(" + ");
            penv_term(out, b);
        }
        _ => penv_term(out, p),
    }
}

fn penv_term(out: &mut String, p: &PrivNode) {
    match p {
        PrivNode::Scale(k, a) => {
            let _ = write!(out, "{k} * ");
            penv_atom(out, a);
        }
        _ => penv_atom(out, p),
    }
}

fn penv_atom(out: &mut String, p: &PrivNode) {
    match p {
        PrivNode::Lit(entries) => {
            out.push('[');
            for (i, (n, c)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{n}:");
                cost(out, c);
            }
            out.push(']');
        }
        PrivNode::Trunc(c, e) => {
            out.push_str("trunc(");
            cost(out, c);
            out.push_str(", ");
            env(out, e);
            out.push(')');
        }
        PrivNode::Inf(e) => {
            out.push_str("inf(");
            env(out, e);
            out.push(')');
        }
        PrivNode::Plus(..) | PrivNode::Scale(..) => {
            out.push('(');
            penv(out, p);
            out.push(')');
        }
    }
}

// ---- expressions ----

const LOWEST: u8 = 0;
const CONS: u8 = 1;
const ADD: u8 = 2;
const MUL: u8 = 3;
const APP: u8 = 4;

pub fn pretty_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, LOWEST);
    s
}

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Lam { .. } | ExprKind::Let(..) | ExprKind::Bind(..) => LOWEST,
        ExprKind::Cons(..) => CONS,
        ExprKind::BinOp(BinOp::Add, ..) => ADD,
        ExprKind::BinOp(..) => MUL,
        ExprKind::App(..) => APP,
        _ => 5,
    }
}

fn expr(out: &mut String, e: &Expr, prec: u8) {
    if level(e) < prec {
        out.push('(');
        expr(out, e, LOWEST);
        out.push(')');
        return;
    }
    match &e.kind {
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Real(r) => out.push_str(&format_literal(r)),
        ExprKind::Sing(r) => {
            let _ = write!(out, "sing({})", format_literal(r));
        }
        ExprKind::BinOp(op, a, b) => {
            let own = level(e);
            expr(out, a, own);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, b, own + 1);
        }
        ExprKind::If(c, a, b) => {
            out.push_str("if(");
            expr(out, c, LOWEST);
            out.push_str(") {");
            expr(out, a, LOWEST);
            out.push_str("} {");
            expr(out, b, LOWEST);
            out.push('}');
        }
        ExprKind::Pair(a, b) => call(out, "", &[a, b]),
        ExprKind::Proj(i, a) => call(out, if *i == 1 { "fst" } else { "snd" }, &[a]),
        ExprKind::SProj(i, a) => call(out, if *i == 1 { "sfst" } else { "ssnd" }, &[a]),
        ExprKind::SPair(w, a, b) => call(out, &format!("spair[{w}]"), &[a, b]),
        ExprKind::Nil(t) => {
            let _ = write!(out, "nil[{}]", pretty_type(t));
        }
        ExprKind::Cons(h, t) => {
            expr(out, h, ADD);
            out.push_str(" :: ");
            expr(out, t, CONS);
        }
        ExprKind::Case { scrut, nil, head, tail, cons } => alts(out, "case", "nil", scrut, nil, head, tail, cons),
        ExprKind::SNil(w, s) => {
            let _ = write!(out, "snil[{w}, {}]", pretty_stype(s));
        }
        ExprKind::SCons(a, b) => call(out, "scons", &[a, b]),
        ExprKind::SCase { scrut, nil, head, tail, cons } => alts(out, "scase", "snil", scrut, nil, head, tail, cons),
        ExprKind::Lam { self_name, param, param_ty, ret_ty, body } => {
            match (self_name, ret_ty) {
                (Some(z), Some(r)) => {
                    let _ = write!(out, "fun {z} ({param} : {}) : {} => ", pretty_type(param_ty), pretty_type(r));
                }
                _ => {
                    let _ = write!(out, "fn ({param} : {}) => ", pretty_type(param_ty));
                }
            }
            expr(out, body, LOWEST);
        }
        ExprKind::App(f, a) => {
            expr(out, f, APP);
            out.push('(');
            expr(out, a, LOWEST);
            out.push(')');
        }
        ExprKind::Let(x, a, b) => {
            let _ = write!(out, "let {x} = ");
            expr(out, a, LOWEST);
            out.push_str(" in ");
            expr(out, b, LOWEST);
        }
        ExprKind::Reveal(a) => call(out, "reveal", &[a]),
        ExprKind::Return(a) => call(out, "return", &[a]),
        ExprKind::Laplace(s, eps, a) => {
            out.push_str("laplace[");
            static_arg(out, s);
            out.push_str(", ");
            static_arg(out, eps);
            out.push(']');
            call(out, "", &[a]);
        }
        ExprKind::Bind(x, a, b) => {
            let _ = write!(out, "{x} <- ");
            expr(out, a, CONS);
            out.push_str(";\n  ");
            expr(out, b, LOWEST);
        }
        ExprKind::Prim { name, statics, args } => {
            out.push_str(name);
            if !statics.is_empty() {
                out.push('[');
                for (i, s) in statics.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    static_arg(out, s);
                }
                out.push(']');
            }
            let refs: Vec<&Expr> = args.iter().collect();
            call(out, "", &refs);
        }
    }
}

fn call(out: &mut String, head: &str, args: &[&Expr]) {
    out.push_str(head);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a, LOWEST);
    }
    out.push(')');
}

/// Singletons print bare; a plain real literal is parenthesised so that it
/// does not read back as a singleton.
fn static_arg(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Sing(r) => out.push_str(&format_literal(r)),
        ExprKind::Real(r) => {
            let _ = write!(out, "({})", format_literal(r));
        }
        _ => expr(out, e, LOWEST),
    }
}

#[allow(clippy::too_many_arguments)]
fn alts(out: &mut String, kw: &str, nil_kw: &str, scrut: &Expr, nil: &Expr, head: &str, tail: &str, cons: &Expr) {
    call(out, kw, &[scrut]);
    let _ = write!(out, " {{{nil_kw} => ");
    expr(out, nil, LOWEST);
    let _ = write!(out, "}} {{{head} :: {tail} => ");
    expr(out, cons, LOWEST);
    out.push('}');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_program, parse_type};

    #[test]
    fn literal_format() {
        let q = |n: i64, d: i64| Rational::new(n.into(), d.into());
        assert_eq!(format_literal(&q(1, 10)), "0.1");
        assert_eq!(format_literal(&q(-5, 2)), "-2.5");
        assert_eq!(format_literal(&q(1, 100000)), "0.00001");
        assert_eq!(format_literal(&q(1, 3)), "1/3");
        assert_eq!(format_literal(&q(7, 1)), "7");
    }

    #[test]
    fn env_and_pm_rendering() {
        let t = parse_type("sreal diff [db:2]").unwrap();
        assert_eq!(pretty_type(&t), "sreal diff [db:2]");
        let t = parse_type("EpsPM [o:2] real").unwrap();
        assert_eq!(pretty_type(&t), "EpsPM [o:2] real");
        let t = parse_type("(sreal diff s -> EpsPM trunc(1/10, s) real) -> list(real)").unwrap();
        assert_eq!(pretty_type(&t), "(sreal diff s -> EpsPM trunc(0.1, s) real) -> list(real)");
    }

    #[test]
    fn expression_round_trip() {
        let src = "x <- laplace[2, sing(1)](a <+> b); y <- return((1 ltimes x) :: nil[real]); \
                   return(case(y){nil => 0}{h :: t => h <*> (h <+> 1)})";
        let e = parse_expr(src, &["a", "b"]).unwrap();
        let printed = pretty_expr(&e);
        assert_eq!(parse_expr(&printed, &["a", "b"]).unwrap(), e, "{printed}");
    }

    #[test]
    fn program_round_trip() {
        let src = "source db : slist L1 (sreal disc);\n\
                   def dbl : forall s. sreal diff s -> sreal diff (s + s) = fn (x : sreal diff s) => x <+> x;\n\
                   main = laplace[sing(2), sing(1)](dbl(sum(clip(db))));";
        let p = parse_program(src).unwrap();
        let printed = pretty_program(&p);
        assert_eq!(parse_program(&printed).unwrap(), p, "{printed}");
    }
}
