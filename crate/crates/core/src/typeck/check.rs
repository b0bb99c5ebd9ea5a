//! The typing rules.
//!
//! Definitions with quantified environment variables are checked once
//! generically, with each variable bound to a skolem source of sensitivity
//! 1. At a call site the parameter types are matched against the argument
//! types to bind the variables, and the body is checked again with the
//! concrete environments: sensitivity bounds of mechanisms and the
//! difference between `+` and `join` only show up on concrete
//! environments.

use std::collections::BTreeMap;

use num_traits::{Signed, ToPrimitive};

use super::convert::{ast_to_ty, env_expr, env_vars, priv_expr, EnvLookup};
use super::schema::{self, check_max_sens, StaticKind};
use super::{show_ty, ErrorCode, Ty, TypeError, TypedProgram};
use crate::accountant::{AccountError, PrivEnv, Variant};
use crate::env::{senv_join, senv_leq, senv_plus, senv_scale, SEnv, Sens, SourceName};
use crate::syntax::{
    pretty_type, BinOp, CMetric, Def, EnvExpr, Expr, ExprKind, NMetric, PrivExpr, Program, SType, Span, Type,
    TypeAst,
};
use crate::Rational;

type TResult<T> = Result<T, TypeError>;

pub fn typecheck_program(p: &Program) -> TResult<TypedProgram> {
    let mut seen: Vec<&str> = Vec::new();
    for s in &p.sources {
        if seen.contains(&s.name.as_str()) {
            return Err(TypeError::new(ErrorCode::DuplicateDefinition, s.span, format!("`{}` is declared twice", s.name)));
        }
        seen.push(&s.name);
    }
    for d in &p.defs {
        if seen.contains(&d.name.as_str()) {
            return Err(TypeError::new(ErrorCode::DuplicateDefinition, d.span, format!("`{}` is declared twice", d.name)));
        }
        seen.push(&d.name);
    }
    let mut ck = Checker::new(p);
    let mut defs = Vec::new();
    for (i, d) in p.defs.iter().enumerate() {
        let ty = ck.check_def(d).map_err(|mut e| {
            e.def.get_or_insert_with(|| d.name.clone());
            e
        })?;
        ck.defs.insert(d.name.clone(), (i, ty.clone()));
        defs.push((d.name.clone(), ty));
    }
    let main = ck.check(&p.main)?;
    let budget = match &main {
        Type::Pm(pe, _) => Some(pe.clone()),
        _ => None,
    };
    Ok(TypedProgram { program: p.clone(), defs, main, budget })
}

struct Checker<'p> {
    prog: &'p Program,
    defs: BTreeMap<String, (usize, Ty)>,
    vars: Vec<(String, Ty)>,
    env_vars: Vec<(String, SEnv)>,
    rigid: Vec<SourceName>,
    fresh: u64,
    instances: Vec<(String, Vec<(String, SEnv)>, Ty)>,
}

impl EnvLookup for Checker<'_> {
    fn lookup_env(&self, name: &str) -> Option<SEnv> {
        self.env_vars.iter().rev().find(|(n, _)| n == name).map(|(_, e)| e.clone())
    }
}

struct Binds<'a>(&'a BTreeMap<String, SEnv>);

impl EnvLookup for Binds<'_> {
    fn lookup_env(&self, name: &str) -> Option<SEnv> {
        self.0.get(name).cloned()
    }
}

enum Deferred {
    Env(EnvExpr, SEnv),
    Priv(PrivExpr, PrivEnv),
}

fn err<T>(code: ErrorCode, span: Span, msg: impl Into<String>) -> TResult<T> {
    Err(TypeError::new(code, span, msg))
}

/// Types that carry a sensitivity or privacy environment somewhere.
fn has_env(t: &Ty) -> bool {
    match t {
        Type::Bool | Type::Real | Type::RealSing(_) => false,
        Type::Fun(a, b) | Type::Prod(a, b) => has_env(a) || has_env(b),
        Type::List(a) => has_env(a),
        Type::Pm(..) | Type::Sensitive(..) => true,
    }
}

/// Equal up to the choice of metrics.
fn same_shape(a: &SType, b: &SType) -> bool {
    match (a, b) {
        (SType::SReal(_), SType::SReal(_)) => true,
        (SType::SProd(_, a1, a2), SType::SProd(_, b1, b2)) | (SType::SDict(_, a1, a2), SType::SDict(_, b1, b2)) => {
            same_shape(a1, b1) && same_shape(a2, b2)
        }
        (SType::SList(_, a), SType::SList(_, b)) => same_shape(a, b),
        (SType::SSet(a), SType::SSet(b)) => a == b,
        (SType::SMatrix(_, r1, c1, a), SType::SMatrix(_, r2, c2, b)) => r1 == r2 && c1 == c2 && same_shape(a, b),
        _ => false,
    }
}

fn mismatch_code(expected: &Ty, found: &Ty) -> ErrorCode {
    match (expected, found) {
        (Type::Sensitive(a, _), Type::Sensitive(b, _)) if a != b && same_shape(a, b) => ErrorCode::MetricMismatch,
        (Type::Fun(a1, a2), Type::Fun(b1, b2)) | (Type::Prod(a1, a2), Type::Prod(b1, b2)) => {
            let c = mismatch_code(a1, b1);
            if c == ErrorCode::MetricMismatch {
                c
            } else {
                mismatch_code(a2, b2)
            }
        }
        (Type::List(a), Type::List(b)) | (Type::Pm(_, a), Type::Pm(_, b)) => mismatch_code(a, b),
        _ => ErrorCode::TypeMismatch,
    }
}

/// `a ⊑ b`: equal shapes, pointwise smaller environments in covariant positions.
fn leq_ty(a: &Ty, b: &Ty) -> bool {
    match (a, b) {
        (Type::Sensitive(s1, e1), Type::Sensitive(s2, e2)) => s1 == s2 && senv_leq(e1, e2),
        (Type::Pm(p1, a1), Type::Pm(p2, a2)) => p1.leq(p2) && leq_ty(a1, a2),
        (Type::Fun(a1, r1), Type::Fun(a2, r2)) => a1 == a2 && leq_ty(r1, r2),
        (Type::Prod(a1, b1), Type::Prod(a2, b2)) => leq_ty(a1, a2) && leq_ty(b1, b2),
        (Type::List(a1), Type::List(a2)) => leq_ty(a1, a2),
        _ => a == b,
    }
}

/// The plain type a sensitive value has once revealed.
pub fn erase(s: &SType) -> Ty {
    match s {
        SType::SReal(_) => Type::Real,
        SType::SProd(_, a, b) => Type::prod(erase(a), erase(b)),
        SType::SList(_, a) => Type::list(erase(a)),
        SType::SSet(p) => Type::list(p.to_type()),
        SType::SMatrix(_, _, _, a) => Type::list(Type::list(erase(a))),
        SType::SDict(_, a, b) => Type::list(Type::prod(erase(a), erase(b))),
    }
}

/// Combine the environments of a compound value built from two parts.
fn combine(w: CMetric, a: &SEnv, b: &SEnv) -> SEnv {
    match w {
        CMetric::L1 | CMetric::L2 => senv_plus(a, b),
        CMetric::LInf => senv_join(a, b),
    }
}

fn account(span: Span) -> impl Fn(AccountError) -> TypeError {
    move |e| {
        let code = match e {
            AccountError::AlphaMismatch { .. } => ErrorCode::AlphaMismatch,
            AccountError::PreconditionViolation(_) => ErrorCode::PreconditionViolation,
            _ => ErrorCode::TypeMismatch,
        };
        TypeError::new(code, span, e.to_string())
    }
}

fn spine(e: &Expr) -> (&Expr, Vec<&Expr>) {
    let mut args = Vec::new();
    let mut cur = e;
    while let ExprKind::App(f, a) = &cur.kind {
        args.push(&**a);
        cur = f;
    }
    args.reverse();
    (cur, args)
}

impl<'p> Checker<'p> {
    fn new(prog: &'p Program) -> Self {
        Checker {
            prog,
            defs: BTreeMap::new(),
            vars: Vec::new(),
            env_vars: Vec::new(),
            rigid: Vec::new(),
            fresh: 0,
            instances: Vec::new(),
        }
    }

    fn lookup_var(&self, name: &str) -> Option<Ty> {
        if let Some((_, t)) = self.vars.iter().rev().find(|(n, _)| n == name) {
            return Some(t.clone());
        }
        if let Some((_, t)) = self.defs.get(name) {
            return Some(t.clone());
        }
        let src = self.prog.source(name)?;
        let sn = SourceName::new(name).ok()?;
        Some(Type::Sensitive(src.ty.clone(), SEnv::singleton(sn, Sens::ONE)))
    }

    fn to_ty(&self, t: &TypeAst, span: Span) -> TResult<Ty> {
        ast_to_ty(t, self, span)
    }

    fn check_def(&mut self, d: &Def) -> TResult<Ty> {
        let mut declared = Vec::new();
        env_vars(&d.sig, &mut declared);
        for q in &d.quantifiers {
            let sk = SourceName::skolem(&format!("{}.{q}", d.name));
            self.env_vars.push((q.clone(), SEnv::singleton(sk.clone(), Sens::ONE)));
            self.rigid.push(sk);
        }
        let result = (|| {
            let sig = self.to_ty(&d.sig, d.span)?;
            let body = self.check(&d.body)?;
            if body != sig {
                return err(
                    mismatch_code(&sig, &body),
                    d.body.span,
                    format!("body has type {} but the signature is {}", show_ty(&body), show_ty(&sig)),
                );
            }
            Ok(sig)
        })();
        self.env_vars.clear();
        self.rigid.clear();
        result
    }

    fn check(&mut self, e: &Expr) -> TResult<Ty> {
        let span = e.span;
        match &e.kind {
            ExprKind::Var(x) => self
                .lookup_var(x)
                .ok_or_else(|| TypeError::new(ErrorCode::UnboundVariable, span, format!("`{x}` is not bound"))),
            ExprKind::Bool(_) => Ok(Type::Bool),
            ExprKind::Real(_) => Ok(Type::Real),
            ExprKind::Sing(r) => Ok(Type::RealSing(r.clone())),
            ExprKind::BinOp(op, a, b) => {
                let ta = self.check(a)?;
                let tb = self.check(b)?;
                self.binop(*op, &ta, &tb, span)
            }
            ExprKind::If(c, a, b) => {
                match self.check(c)? {
                    Type::Bool => {}
                    t @ Type::Sensitive(..) => {
                        return err(
                            ErrorCode::SensitiveBranchCondition,
                            c.span,
                            format!("cannot branch on the sensitive value of type {}", show_ty(&t)),
                        )
                    }
                    t => return err(ErrorCode::TypeMismatch, c.span, format!("condition has type {}, expected bool", show_ty(&t))),
                }
                let ta = self.check(a)?;
                let tb = self.check(b)?;
                self.same_arms(ta, tb, span)
            }
            ExprKind::Pair(a, b) => Ok(Type::prod(self.check(a)?, self.check(b)?)),
            ExprKind::Proj(i, a) => match self.check(a)? {
                Type::Prod(x, y) => Ok(if *i == 1 { *x } else { *y }),
                t => err(ErrorCode::TypeMismatch, span, format!("projection from {}, expected a pair", show_ty(&t))),
            },
            ExprKind::SPair(w, a, b) => {
                let (sa, ea) = self.sensitive(a)?;
                let (sb, eb) = self.sensitive(b)?;
                Ok(Type::Sensitive(SType::SProd(*w, Box::new(sa), Box::new(sb)), combine(*w, &ea, &eb)))
            }
            ExprKind::SProj(i, a) => match self.check(a)? {
                Type::Sensitive(SType::SProd(_, x, y), env) => Ok(Type::Sensitive(if *i == 1 { *x } else { *y }, env)),
                t => err(ErrorCode::TypeMismatch, span, format!("projection from {}, expected a sensitive pair", show_ty(&t))),
            },
            ExprKind::Nil(t) => Ok(Type::list(self.to_ty(t, span)?)),
            ExprKind::Cons(h, t) => {
                let th = self.check(h)?;
                match self.check(t)? {
                    Type::List(el) if *el == th => Ok(Type::List(el)),
                    tt => err(
                        mismatch_code(&Type::list(th.clone()), &tt),
                        span,
                        format!("cannot add an element of type {} to a value of type {}", show_ty(&th), show_ty(&tt)),
                    ),
                }
            }
            ExprKind::Case { scrut, nil, head, tail, cons } => {
                let el = match self.check(scrut)? {
                    Type::List(el) => *el,
                    t => return err(ErrorCode::TypeMismatch, scrut.span, format!("case on {}, expected a list", show_ty(&t))),
                };
                let tn = self.check(nil)?;
                let n = self.vars.len();
                self.vars.push((head.clone(), el.clone()));
                self.vars.push((tail.clone(), Type::list(el)));
                let tc = self.check(cons);
                self.vars.truncate(n);
                self.same_arms(tn, tc?, span)
            }
            ExprKind::SNil(w, s) => Ok(Type::Sensitive(SType::SList(*w, Box::new(s.clone())), SEnv::empty())),
            ExprKind::SCons(h, t) => {
                let (sh, eh) = self.sensitive(h)?;
                match self.check(t)? {
                    Type::Sensitive(SType::SList(w, el), et) => {
                        if *el != sh {
                            let code = if same_shape(&el, &sh) { ErrorCode::MetricMismatch } else { ErrorCode::TypeMismatch };
                            return err(
                                code,
                                span,
                                format!(
                                    "element of type {} added to a list of {}",
                                    crate::syntax::pretty::pretty_stype(&sh),
                                    crate::syntax::pretty::pretty_stype(&el)
                                ),
                            );
                        }
                        Ok(Type::Sensitive(SType::SList(w, el), combine(w, &eh, &et)))
                    }
                    tt => err(ErrorCode::TypeMismatch, t.span, format!("scons onto {}, expected a sensitive list", show_ty(&tt))),
                }
            }
            ExprKind::SCase { scrut, nil, head, tail, cons } => {
                let (w, el, env) = match self.check(scrut)? {
                    Type::Sensitive(SType::SList(w, el), env) => (w, *el, env),
                    t => {
                        return err(ErrorCode::TypeMismatch, scrut.span, format!("scase on {}, expected a sensitive list", show_ty(&t)))
                    }
                };
                let tn = self.check(nil)?;
                let n = self.vars.len();
                self.vars.push((head.clone(), Type::Sensitive(el.clone(), env.clone())));
                self.vars.push((tail.clone(), Type::Sensitive(SType::SList(w, Box::new(el)), env)));
                let tc = self.check(cons);
                self.vars.truncate(n);
                self.same_arms(tn, tc?, span)
            }
            ExprKind::Lam { self_name, param, param_ty, ret_ty, body } => {
                let mark = (self.vars.len(), self.env_vars.len(), self.rigid.len());
                let r = self.lambda(self_name.as_deref(), param, param_ty, ret_ty.as_ref(), body, span);
                self.vars.truncate(mark.0);
                self.env_vars.truncate(mark.1);
                self.rigid.truncate(mark.2);
                r
            }
            ExprKind::App(..) => self.app(e),
            ExprKind::Let(x, a, b) => {
                let ta = self.check(a)?;
                let n = self.vars.len();
                self.vars.push((x.clone(), ta));
                let tb = self.check(b);
                self.vars.truncate(n);
                tb
            }
            ExprKind::Reveal(a) => match self.check(a)? {
                Type::Sensitive(s, env) => Ok(Type::pm(PrivEnv::infinite(Variant::Eps, &env), erase(&s))),
                t => err(ErrorCode::TypeMismatch, a.span, format!("reveal of {}, expected a sensitive value", show_ty(&t))),
            },
            ExprKind::Laplace(s, eps, a) => {
                let sv = self.static_value(s, StaticKind::Nat)?;
                let ev = self.static_value(eps, StaticKind::Pos)?;
                match self.check(a)? {
                    Type::Sensitive(SType::SReal(NMetric::Diff), env) => {
                        let bound = sv.to_integer().to_u64().unwrap_or(u64::MAX);
                        check_max_sens(&env, bound).map_err(|(c, m)| TypeError::new(c, a.span, m))?;
                        Ok(Type::pm(PrivEnv::truncate_eps(&ev, &env), Type::Real))
                    }
                    Type::Sensitive(SType::SReal(NMetric::Disc), _) => {
                        err(ErrorCode::MetricMismatch, a.span, "laplace needs a sensitive number with the diff metric, found disc")
                    }
                    t => err(ErrorCode::TypeMismatch, a.span, format!("laplace of {}, expected sreal diff", show_ty(&t))),
                }
            }
            ExprKind::Return(a) => Ok(Type::pm(PrivEnv::empty(Variant::Eps), self.check(a)?)),
            ExprKind::Bind(x, a, b) => {
                let (p1, t1) = match self.check(a)? {
                    Type::Pm(p, t) => (p, *t),
                    t => return err(ErrorCode::TypeMismatch, a.span, format!("bind of {}, expected a privacy-monad value", show_ty(&t))),
                };
                let n = self.vars.len();
                self.vars.push((x.clone(), t1));
                let tb = self.check(b);
                self.vars.truncate(n);
                match tb? {
                    Type::Pm(p2, t2) => Ok(Type::Pm(p1.seq_comp(&p2).map_err(account(span))?, t2)),
                    t => err(ErrorCode::TypeMismatch, b.span, format!("bind continues with {}, expected a privacy-monad value", show_ty(&t))),
                }
            }
            ExprKind::Prim { name, statics, args } => {
                let schema = schema::lookup(name)
                    .ok_or_else(|| TypeError::new(ErrorCode::UnknownPrimitive, span, format!("no primitive or variable named `{name}`")))?;
                let mut sv = Vec::new();
                for s in statics {
                    sv.push(self.singleton(s)?);
                }
                let mut tys = Vec::new();
                for a in args {
                    tys.push(self.check(a)?);
                }
                let rigid = self.rigid.clone();
                let (_, t) = schema
                    .instantiate(sv, &tys, &|s| rigid.contains(s))
                    .map_err(|(c, m)| TypeError::new(c, span, m))?;
                Ok(t)
            }
        }
    }

    fn singleton(&mut self, e: &Expr) -> TResult<Rational> {
        match self.check(e)? {
            Type::RealSing(r) => Ok(r),
            t => err(ErrorCode::InvalidStatic, e.span, format!("static argument has type {}, expected a singleton real[r]", show_ty(&t))),
        }
    }

    fn static_value(&mut self, e: &Expr, kind: StaticKind) -> TResult<Rational> {
        let r = self.singleton(e)?;
        kind.check(&r).map_err(|m| TypeError::new(ErrorCode::InvalidStatic, e.span, m))?;
        Ok(r)
    }

    fn sensitive(&mut self, e: &Expr) -> TResult<(SType, SEnv)> {
        match self.check(e)? {
            Type::Sensitive(s, env) => Ok((s, env)),
            t => err(ErrorCode::TypeMismatch, e.span, format!("expected a sensitive value, found {}", show_ty(&t))),
        }
    }

    fn same_arms(&self, a: Ty, b: Ty, span: Span) -> TResult<Ty> {
        if a == b {
            return Ok(a);
        }
        let code = if has_env(&a) || has_env(&b) { ErrorCode::BranchEnvMismatch } else { ErrorCode::TypeMismatch };
        err(code, span, format!("branches have different types: {} and {}", show_ty(&a), show_ty(&b)))
    }

    fn binop(&self, op: BinOp, a: &Ty, b: &Ty, span: Span) -> TResult<Ty> {
        let plain = |t: &Ty| matches!(t, Type::Real | Type::RealSing(_));
        let bad = |what: &str| {
            err(
                ErrorCode::TypeMismatch,
                span,
                format!("`{}` {what}, found {} and {}", op.symbol(), show_ty(a), show_ty(b)),
            )
        };
        match op {
            BinOp::Add => match (a, b) {
                _ if plain(a) && plain(b) => Ok(Type::Real),
                (Type::Sensitive(SType::SReal(m1), e1), Type::Sensitive(SType::SReal(m2), e2)) => {
                    if *m1 != NMetric::Diff || *m2 != NMetric::Diff {
                        return err(ErrorCode::MetricMismatch, span, "`<+>` on sensitive numbers needs the diff metric on both sides");
                    }
                    Ok(Type::Sensitive(SType::SReal(NMetric::Diff), senv_plus(e1, e2)))
                }
                _ => bad("adds two reals or two sensitive numbers"),
            },
            BinOp::Mul => {
                if plain(a) && plain(b) {
                    Ok(Type::Real)
                } else {
                    bad("multiplies two plain reals")
                }
            }
            BinOp::LTimes => match (a, b) {
                (Type::RealSing(r), Type::Sensitive(SType::SReal(NMetric::Diff), env)) => {
                    let k = r.abs().ceil().to_integer().to_u64().map_or(Sens::Inf, Sens::Finite);
                    Ok(Type::Sensitive(SType::SReal(NMetric::Diff), senv_scale(k, env)))
                }
                (Type::RealSing(_), Type::Sensitive(SType::SReal(NMetric::Disc), _)) => {
                    err(ErrorCode::MetricMismatch, span, "`ltimes` scales a sensitive number with the diff metric")
                }
                _ => bad("takes a singleton real[r] on the left and a sensitive number on the right"),
            },
        }
    }

    fn lambda(
        &mut self,
        self_name: Option<&str>,
        param: &str,
        param_ty: &TypeAst,
        ret_ty: Option<&TypeAst>,
        body: &Expr,
        span: Span,
    ) -> TResult<Ty> {
        let mut names = Vec::new();
        env_vars(param_ty, &mut names);
        for n in names {
            if self.lookup_env(&n).is_none() {
                self.fresh += 1;
                let sk = SourceName::skolem(&format!("{n}#{}", self.fresh));
                self.env_vars.push((n, SEnv::singleton(sk.clone(), Sens::ONE)));
                self.rigid.push(sk);
            }
        }
        let pty = self.to_ty(param_ty, span)?;
        let ret = match ret_ty {
            Some(r) => Some(self.to_ty(r, span)?),
            None => None,
        };
        if let Some(z) = self_name {
            let Some(r) = &ret else {
                return err(ErrorCode::TypeMismatch, span, "a recursive function needs a result type");
            };
            self.vars.push((z.to_string(), Type::fun(pty.clone(), r.clone())));
        }
        self.vars.push((param.to_string(), pty.clone()));
        let bty = self.check(body)?;
        if let Some(r) = ret {
            if r != bty {
                return err(
                    mismatch_code(&r, &bty),
                    body.span,
                    format!("body has type {} but the declared result is {}", show_ty(&bty), show_ty(&r)),
                );
            }
        }
        Ok(Type::fun(pty, bty))
    }

    fn app(&mut self, e: &Expr) -> TResult<Ty> {
        let (head, args) = spine(e);
        let mut done = 0;
        let mut fty = match &head.kind {
            ExprKind::Var(name) if !self.vars.iter().any(|(n, _)| n == name) && self.is_poly_def(name) => {
                let (n, t) = self.poly_app(name, &args, e.span)?;
                done = n;
                t
            }
            _ => self.check(head)?,
        };
        for a in &args[done..] {
            let ta = self.check(a)?;
            fty = match fty {
                Type::Fun(p, r) => {
                    if *p != ta {
                        return err(
                            mismatch_code(&p, &ta),
                            a.span,
                            format!("argument has type {}, expected {}", show_ty(&ta), show_ty(&p)),
                        );
                    }
                    *r
                }
                t => return err(ErrorCode::TypeMismatch, head.span, format!("applying a value of type {}", show_ty(&t))),
            };
        }
        Ok(fty)
    }

    fn is_poly_def(&self, name: &str) -> bool {
        self.defs.get(name).is_some_and(|(i, _)| !self.prog.defs[*i].quantifiers.is_empty())
    }

    /// Instantiate a quantified definition at a call. Returns how many
    /// arguments were consumed and the remaining type.
    fn poly_app(&mut self, name: &str, args: &[&Expr], span: Span) -> TResult<(usize, Ty)> {
        let def = &self.prog.defs[self.defs[name].0];
        let mut params = Vec::new();
        let mut rest = &def.sig;
        while params.len() < args.len() {
            match rest {
                Type::Fun(a, b) => {
                    params.push(&**a);
                    rest = b;
                }
                _ => break,
            }
        }
        let mut binds = BTreeMap::new();
        let mut deferred = Vec::new();
        for (i, p) in params.iter().enumerate() {
            let ta = self.check(args[i])?;
            unify_ast(p, &ta, &def.quantifiers, &mut binds, &mut deferred).map_err(|code| {
                TypeError::new(
                    code,
                    args[i].span,
                    format!("argument {} of `{name}`: expected {}, found {}", i + 1, pretty_type(p), show_ty(&ta)),
                )
            })?;
        }
        if let Some(q) = def.quantifiers.iter().find(|q| !binds.contains_key(*q)) {
            return err(
                ErrorCode::UnificationFailure,
                span,
                format!("cannot determine environment variable `{q}` of `{name}` from the arguments"),
            );
        }
        for d in deferred {
            let ok = match &d {
                Deferred::Env(ex, found) => env_expr(ex, &Binds(&binds), span)? == *found,
                Deferred::Priv(ex, found) => priv_expr(ex, &Binds(&binds), span)? == *found,
            };
            if !ok {
                let (want, got) = match d {
                    Deferred::Env(ex, found) => (crate::syntax::pretty::pretty_env(&ex), found.to_string()),
                    Deferred::Priv(ex, found) => (format!("{:?}", ex.node), found.to_string()),
                };
                return err(
                    ErrorCode::UnificationFailure,
                    span,
                    format!("call of `{name}`: environment {want} does not match {got}"),
                );
            }
        }
        let inst = ast_to_ty(&def.sig, &Binds(&binds), span)?;
        self.check_instance(name, &binds, &inst, span)?;
        let mut t = inst;
        for _ in 0..params.len() {
            t = match t {
                Type::Fun(_, r) => *r,
                other => other,
            };
        }
        Ok((params.len(), t))
    }

    /// Check the body of a quantified definition at concrete environments.
    fn check_instance(&mut self, name: &str, binds: &BTreeMap<String, SEnv>, inst: &Ty, span: Span) -> TResult<()> {
        let key: Vec<(String, SEnv)> = binds.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        if self.instances.iter().any(|(n, k, _)| n == name && *k == key) {
            return Ok(());
        }
        let def = &self.prog.defs[self.defs[name].0];
        let saved_vars = std::mem::take(&mut self.vars);
        let saved_envs = std::mem::replace(&mut self.env_vars, key.clone());
        let body = self.check(&def.body);
        self.vars = saved_vars;
        self.env_vars = saved_envs;
        let body = body.map_err(|e| {
            TypeError::new(e.code, span, format!("in this call of `{name}`, the body fails to check: {}", e.message))
        })?;
        if !leq_ty(&body, inst) {
            return err(
                ErrorCode::TypeMismatch,
                span,
                format!(
                    "at this call `{name}` has type {}, which exceeds its signature {}",
                    show_ty(&body),
                    show_ty(inst)
                ),
            );
        }
        self.instances.push((name.to_string(), key, body));
        Ok(())
    }
}

fn unify_ast(
    p: &TypeAst,
    t: &Ty,
    qs: &[String],
    binds: &mut BTreeMap<String, SEnv>,
    deferred: &mut Vec<Deferred>,
) -> Result<(), ErrorCode> {
    match (p, t) {
        (Type::Bool, Type::Bool) | (Type::Real, Type::Real) => Ok(()),
        (Type::RealSing(a), Type::RealSing(b)) if a == b => Ok(()),
        (Type::Fun(a, b), Type::Fun(x, y)) | (Type::Prod(a, b), Type::Prod(x, y)) => {
            unify_ast(a, x, qs, binds, deferred)?;
            unify_ast(b, y, qs, binds, deferred)
        }
        (Type::List(a), Type::List(x)) => unify_ast(a, x, qs, binds, deferred),
        (Type::Pm(pe, a), Type::Pm(pv, x)) => {
            deferred.push(Deferred::Priv(pe.clone(), pv.clone()));
            unify_ast(a, x, qs, binds, deferred)
        }
        (Type::Sensitive(sa, ea), Type::Sensitive(sb, eb)) => {
            if sa != sb {
                return Err(if same_shape(sa, sb) { ErrorCode::MetricMismatch } else { ErrorCode::TypeMismatch });
            }
            match ea {
                EnvExpr::Var(v) if qs.contains(v) => match binds.get(v) {
                    Some(old) if old != eb => Err(ErrorCode::UnificationFailure),
                    Some(_) => Ok(()),
                    None => {
                        binds.insert(v.clone(), eb.clone());
                        Ok(())
                    }
                },
                _ => {
                    deferred.push(Deferred::Env(ea.clone(), eb.clone()));
                    Ok(())
                }
            }
        }
        _ => Err(ErrorCode::TypeMismatch),
    }
}
