//! Random well-typed programs in the deterministic sensitive fragment.
//!
//! Generation is type directed and tracks the sensitivity environment of
//! every subterm with the checker's rules, so the checker accepts every
//! output with exactly the environment computed here.

use crate::env::{senv_join, senv_plus, senv_scale, SEnv, Sens, SourceName};
use crate::mechanisms::Rng;
use crate::syntax::{
    BinOp, CMetric, EnvExpr, Expr, ExprKind, NMetric, Program, SType, SourceDecl, Span, Type, TypeAst,
};
use crate::Rational;
use num_traits::Signed;

pub const MAX_GEN_SIZE: usize = 64;

const SOURCES: [&str; 3] = ["o", "p", "q"];
const SCALES: [(i64, i64); 7] = [(1, 1), (2, 1), (3, 1), (-1, 1), (-2, 1), (1, 2), (3, 2)];
const METRICS: [CMetric; 3] = [CMetric::L1, CMetric::L2, CMetric::LInf];

#[derive(Clone, Copy, PartialEq)]
enum G {
    Real,
    Pair(CMetric),
    List(CMetric),
}

fn stype(g: G) -> SType {
    let r = || Box::new(SType::SReal(NMetric::Diff));
    match g {
        G::Real => SType::SReal(NMetric::Diff),
        G::Pair(w) => SType::SProd(w, r(), r()),
        G::List(w) => SType::SList(w, r()),
    }
}

fn combine(w: CMetric, a: &SEnv, b: &SEnv) -> SEnv {
    match w {
        CMetric::LInf => senv_join(a, b),
        _ => senv_plus(a, b),
    }
}

fn e(kind: ExprKind) -> Expr {
    Expr::synth(kind)
}

fn var(x: &str) -> Expr {
    e(ExprKind::Var(x.to_string()))
}

fn plus(a: Expr, b: Expr) -> Expr {
    e(ExprKind::BinOp(BinOp::Add, a.boxed(), b.boxed()))
}

fn env_lit(s: &SEnv) -> EnvExpr {
    EnvExpr::Lit(s.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

struct Gen<'r> {
    rng: &'r mut Rng,
    sources: Vec<&'static str>,
    locals: Vec<(String, G, SEnv)>,
    fresh: usize,
}

impl Gen<'_> {
    fn below(&mut self, n: usize) -> usize {
        (self.rng.next_u64() % n as u64) as usize
    }

    fn coin(&mut self) -> bool {
        self.rng.next_u64() & 1 == 1
    }

    fn fresh(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    /// Split `n` into two positive parts.
    fn split(&mut self, n: usize) -> (usize, usize) {
        let n = n.max(2);
        let a = 1 + self.below(n - 1);
        (a, n - a)
    }

    fn leaf(&mut self, g: G) -> Option<(Expr, SEnv)> {
        let locals: Vec<(String, SEnv)> =
            self.locals.iter().filter(|(_, t, _)| *t == g).map(|(n, _, s)| (n.clone(), s.clone())).collect();
        let use_local = !locals.is_empty() && (g != G::Real || self.coin());
        if use_local {
            let (n, s) = locals[self.below(locals.len())].clone();
            return Some((var(&n), s));
        }
        if g == G::Real {
            let i = self.below(self.sources.len());
            let src = self.sources[i];
            let name = SourceName::new(src).expect("valid source name");
            return Some((var(src), SEnv::singleton(name, Sens::ONE)));
        }
        None
    }

    fn real(&mut self, size: usize) -> (Expr, SEnv) {
        if size <= 1 {
            return self.leaf(G::Real).expect("a source is always available");
        }
        match self.below(8) {
            0 | 1 => {
                let (a, b) = self.split(size - 1);
                let (x, sx) = self.real(a);
                let (y, sy) = self.real(b);
                (plus(x, y), senv_plus(&sx, &sy))
            }
            2 => {
                let (n, d) = SCALES[self.below(SCALES.len())];
                let r = Rational::new(n.into(), d.into());
                let k = r.abs().ceil().to_integer().try_into().map_or(Sens::Inf, Sens::Finite);
                let (x, sx) = self.real(size - 1);
                (e(ExprKind::BinOp(BinOp::LTimes, e(ExprKind::Sing(r)).boxed(), x.boxed())), senv_scale(k, &sx))
            }
            3 => {
                let (p, _, sp) = self.pair(size - 1);
                let i = if self.coin() { 1 } else { 2 };
                (e(ExprKind::SProj(i, p.boxed())), sp)
            }
            4 => {
                let (a, b) = self.split(size - 1);
                let g = self.any_g();
                let (x, sx) = self.of(g, a);
                let name = self.fresh("x");
                self.locals.push((name.clone(), g, sx));
                let (body, sb) = self.real(b);
                self.locals.pop();
                (e(ExprKind::Let(name, x.boxed(), body.boxed())), sb)
            }
            5 => {
                let (a, b) = self.split(size - 1);
                let g = self.any_g();
                let (arg, sa) = self.of(g, a);
                let name = self.fresh("y");
                let param_ty: TypeAst = Type::Sensitive(stype(g), env_lit(&sa));
                self.locals.push((name.clone(), g, sa));
                let (body, sb) = self.real(b);
                self.locals.pop();
                let lam = e(ExprKind::Lam { self_name: None, param: name, param_ty, ret_ty: None, body: body.boxed() });
                (e(ExprKind::App(lam.boxed(), arg.boxed())), sb)
            }
            6 => {
                let (l, sl) = self.list_with(CMetric::L1, size - 1);
                (e(ExprKind::Prim { name: "sum".into(), statics: vec![], args: vec![l] }), sl)
            }
            _ => self.scase(size),
        }
    }

    /// `let l = .. in scase(l){snil => ..}{h :: t => ..}` with arms of equal type.
    fn scase(&mut self, size: usize) -> (Expr, SEnv) {
        let (a, b) = self.split(size.saturating_sub(1));
        let (l, sl) = self.list_with(CMetric::L1, a);
        let (lname, h, t) = (self.fresh("l"), self.fresh("h"), self.fresh("t"));
        let sum = |x: &str| e(ExprKind::Prim { name: "sum".into(), statics: vec![], args: vec![var(x)] });
        let (nil, cons, env) = if self.coin() {
            let (x, sx) = self.real(b);
            (plus(sum(&lname), x.clone()), plus(var(&h), x), senv_plus(&sl, &sx))
        } else {
            (plus(sum(&lname), sum(&lname)), plus(var(&h), sum(&t)), senv_plus(&sl, &sl))
        };
        let case = e(ExprKind::SCase { scrut: var(&lname).boxed(), nil: nil.boxed(), head: h, tail: t, cons: cons.boxed() });
        (e(ExprKind::Let(lname, l.boxed(), case.boxed())), env)
    }

    fn pair(&mut self, size: usize) -> (Expr, CMetric, SEnv) {
        let w = METRICS[self.below(3)];
        if size <= 2 {
            if let Some((x, s)) = self.leaf(G::Pair(w)) {
                return (x, w, s);
            }
        }
        let (a, b) = self.split(size.saturating_sub(1));
        let (x, sx) = self.real(a);
        let (y, sy) = self.real(b);
        (e(ExprKind::SPair(w, x.boxed(), y.boxed())), w, combine(w, &sx, &sy))
    }

    fn list_with(&mut self, w: CMetric, size: usize) -> (Expr, SEnv) {
        if size <= 2 {
            if let Some(found) = self.leaf(G::List(w)) {
                return found;
            }
        }
        let mut sizes = Vec::new();
        let mut left = size.saturating_sub(1);
        while left > 0 && sizes.len() < 4 {
            let k = 1 + self.below(left.min(6));
            sizes.push(k);
            left -= k;
        }
        let mut out = e(ExprKind::SNil(w, SType::SReal(NMetric::Diff)));
        let mut env = SEnv::empty();
        for k in sizes.into_iter().rev() {
            let (x, sx) = self.real(k);
            env = combine(w, &sx, &env);
            out = e(ExprKind::SCons(x.boxed(), out.boxed()));
        }
        (out, env)
    }

    fn any_g(&mut self) -> G {
        match self.below(4) {
            0 | 1 => G::Real,
            2 => G::Pair(METRICS[self.below(3)]),
            _ => G::List(METRICS[self.below(3)]),
        }
    }

    fn of(&mut self, g: G, size: usize) -> (Expr, SEnv) {
        match g {
            G::Real => self.real(size),
            G::Pair(w) => {
                let (a, b) = self.split(size.saturating_sub(1));
                let (x, sx) = self.real(a);
                let (y, sy) = self.real(b);
                (e(ExprKind::SPair(w, x.boxed(), y.boxed())), combine(w, &sx, &sy))
            }
            G::List(w) => self.list_with(w, size),
        }
    }
}

/// A random program whose `main` has type `sreal diff Σ`, together with Σ.
pub fn gen_random_program_with_env(size: usize, rng: &mut Rng) -> (Program, SEnv) {
    let size = size.clamp(1, MAX_GEN_SIZE);
    let n = if size == 1 { 1 } else { 1 + (rng.next_u64() % 3) as usize };
    let sources = SOURCES[..n].to_vec();
    let mut g = Gen { rng, sources: sources.clone(), locals: Vec::new(), fresh: 0 };
    let (main, env) = g.real(size);
    let decls = sources
        .iter()
        .map(|s| SourceDecl { name: s.to_string(), ty: SType::SReal(NMetric::Diff), span: Span::default() })
        .collect();
    (Program { sources: decls, defs: Vec::new(), main }, env)
}

pub fn gen_random_program(size: usize, rng: &mut Rng) -> Program {
    gen_random_program_with_env(size, rng).0
}

fn erase_stype(s: &SType) -> TypeAst {
    crate::typeck::ty_to_ast(&crate::typeck::erase(s))
}

fn erase_type(t: &TypeAst) -> TypeAst {
    let b = |x: &TypeAst| Box::new(erase_type(x));
    match t {
        Type::Sensitive(s, _) => erase_stype(s),
        Type::Fun(a, c) => Type::Fun(b(a), b(c)),
        Type::Prod(a, c) => Type::Prod(b(a), b(c)),
        Type::List(a) => Type::List(b(a)),
        Type::Pm(p, a) => Type::Pm(p.clone(), b(a)),
        other => other.clone(),
    }
}

/// Replace every sensitive constructor by its plain counterpart.
pub fn erase_sensitive(x: &Expr) -> Expr {
    let b = |y: &Expr| erase_sensitive(y).boxed();
    let kind = match &x.kind {
        ExprKind::SPair(_, a, c) => ExprKind::Pair(b(a), b(c)),
        ExprKind::SProj(i, a) => ExprKind::Proj(*i, b(a)),
        ExprKind::SNil(_, s) => ExprKind::Nil(erase_stype(s)),
        ExprKind::SCons(h, t) => ExprKind::Cons(b(h), b(t)),
        ExprKind::SCase { scrut, nil, head, tail, cons } | ExprKind::Case { scrut, nil, head, tail, cons } => {
            ExprKind::Case { scrut: b(scrut), nil: b(nil), head: head.clone(), tail: tail.clone(), cons: b(cons) }
        }
        ExprKind::BinOp(op, a, c) => ExprKind::BinOp(*op, b(a), b(c)),
        ExprKind::If(c, a, d) => ExprKind::If(b(c), b(a), b(d)),
        ExprKind::Pair(a, c) => ExprKind::Pair(b(a), b(c)),
        ExprKind::Proj(i, a) => ExprKind::Proj(*i, b(a)),
        ExprKind::Cons(h, t) => ExprKind::Cons(b(h), b(t)),
        ExprKind::Lam { self_name, param, param_ty, ret_ty, body } => ExprKind::Lam {
            self_name: self_name.clone(),
            param: param.clone(),
            param_ty: erase_type(param_ty),
            ret_ty: ret_ty.as_ref().map(erase_type),
            body: b(body),
        },
        ExprKind::App(f, a) => ExprKind::App(b(f), b(a)),
        ExprKind::Let(v, a, c) => ExprKind::Let(v.clone(), b(a), b(c)),
        ExprKind::Reveal(a) => ExprKind::Reveal(b(a)),
        ExprKind::Return(a) => ExprKind::Return(b(a)),
        ExprKind::Laplace(s, p, a) => ExprKind::Laplace(b(s), b(p), b(a)),
        ExprKind::Bind(v, a, c) => ExprKind::Bind(v.clone(), b(a), b(c)),
        ExprKind::Prim { name, statics, args } => ExprKind::Prim {
            name: name.clone(),
            statics: statics.iter().map(erase_sensitive).collect(),
            args: args.iter().map(erase_sensitive).collect(),
        },
        k @ (ExprKind::Var(_) | ExprKind::Bool(_) | ExprKind::Real(_) | ExprKind::Sing(_) | ExprKind::Nil(_)) => k.clone(),
    };
    Expr::new(kind, x.span)
}
