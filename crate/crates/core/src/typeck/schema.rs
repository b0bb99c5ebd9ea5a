//! Signatures of the trusted primitives and their instantiation.
//!
//! A schema lists static arguments, parameter patterns and a function that
//! builds the result type from the instantiation. Patterns carry type,
//! metric, dimension and environment variables; instantiation is
//! first-order matching where environment variables bind whole
//! environments. A rank-2 parameter `forall s'. a s' -> b (k * s')` is
//! matched against a function whose parameter environment is a skolem.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_traits::{One, ToPrimitive, Zero};

use super::{show_ty, ErrorCode, Ty};
use crate::accountant::{adv_comp, AccountError, PrivEnv, Variant};
use crate::env::{senv_max, senv_plus, senv_scale, SEnv, Sens, SourceName};
use crate::real::{format_rational, RealExpr};
use crate::syntax::{CMetric, NMetric, PlainType, SType, Type};
use crate::Rational;

pub type SResult<T> = Result<T, (ErrorCode, String)>;

#[derive(Debug, Clone)]
pub enum CPat {
    Is(CMetric),
    Var(&'static str),
}

#[derive(Debug, Clone)]
pub enum SPat {
    SReal(NMetric),
    SProd(CPat, Box<SPat>, Box<SPat>),
    SList(CPat, Box<SPat>),
    /// Element pattern; it must match a plain type.
    SSet(Box<TPat>),
    SMatrix(CPat, &'static str, &'static str, Box<SPat>),
    SDict(CPat, Box<SPat>, Box<SPat>),
    Var(&'static str),
}

#[derive(Debug, Clone)]
pub enum TPat {
    Bool,
    /// Matches `real` and every singleton `real[r]`.
    Real,
    Prod(Box<TPat>, Box<TPat>),
    List(Box<TPat>),
    Fun(Box<TPat>, Box<TPat>),
    Var(&'static str),
    Sens(SPat, &'static str),
    /// Privacy monad of a fixed variant (`None` for any) with environment variable.
    Pm(Option<Variant>, &'static str, Box<TPat>),
    /// `forall s'. a s' -> b (k * s')`.
    Rank2 { a: SPat, b: SPat, k: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticKind {
    /// Natural number of at least 1.
    Nat,
    /// Rational greater than 0.
    Pos,
    /// Rational strictly between 0 and 1.
    Prob,
    /// Rational greater than 1.
    Alpha,
}

impl StaticKind {
    pub fn check(self, r: &Rational) -> Result<(), String> {
        let ok = match self {
            StaticKind::Nat => r.is_integer() && *r >= Rational::one(),
            StaticKind::Pos => *r > Rational::zero(),
            StaticKind::Prob => *r > Rational::zero() && *r < Rational::one(),
            StaticKind::Alpha => *r > Rational::one(),
        };
        if ok {
            Ok(())
        } else {
            let what = match self {
                StaticKind::Nat => "a positive natural number",
                StaticKind::Pos => "positive",
                StaticKind::Prob => "strictly between 0 and 1",
                StaticKind::Alpha => "greater than 1",
            };
            Err(format!("{} must be {what}", format_rational(r)))
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Subst {
    pub types: BTreeMap<&'static str, Ty>,
    pub stypes: BTreeMap<&'static str, SType>,
    pub cmetrics: BTreeMap<&'static str, CMetric>,
    pub dims: BTreeMap<&'static str, u64>,
    pub envs: BTreeMap<&'static str, SEnv>,
    pub penvs: BTreeMap<&'static str, PrivEnv>,
    pub scales: BTreeMap<&'static str, Sens>,
}

/// A matched call: the substitution plus the static argument values.
#[derive(Debug)]
pub struct Inst {
    pub subst: Subst,
    pub statics: Vec<Rational>,
}

impl Inst {
    pub fn env(&self, n: &str) -> &SEnv {
        &self.subst.envs[n]
    }

    pub fn penv(&self, n: &str) -> &PrivEnv {
        &self.subst.penvs[n]
    }

    pub fn ty(&self, n: &str) -> Ty {
        self.subst.types[n].clone()
    }

    pub fn stype(&self, n: &str) -> SType {
        self.subst.stypes[n].clone()
    }

    pub fn cm(&self, n: &str) -> CMetric {
        self.subst.cmetrics[n]
    }

    pub fn nat(&self, i: usize) -> u64 {
        self.statics[i].to_integer().to_u64().unwrap_or(u64::MAX)
    }

    pub fn rat(&self, i: usize) -> &Rational {
        &self.statics[i]
    }

    pub fn real(&self, i: usize) -> RealExpr {
        RealExpr::Lit(self.statics[i].clone())
    }
}

pub struct PrimSchema {
    pub name: &'static str,
    pub statics: Vec<(&'static str, StaticKind)>,
    pub params: Vec<TPat>,
    pub result: fn(&Inst) -> SResult<Ty>,
    /// Human-readable result type.
    pub result_doc: &'static str,
}

impl PrimSchema {
    pub fn signature(&self) -> String {
        let mut s = self.name.to_string();
        if !self.statics.is_empty() {
            let st: Vec<&str> = self.statics.iter().map(|(n, _)| *n).collect();
            s.push_str(&format!("[{}]", st.join(", ")));
        }
        let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        format!("{s} : {} -> {}", ps.join(" -> "), self.result_doc)
    }

    /// Match argument types against the parameters.
    pub fn instantiate(
        &self,
        statics: Vec<Rational>,
        args: &[Ty],
        rigid: &dyn Fn(&SourceName) -> bool,
    ) -> SResult<(Inst, Ty)> {
        if statics.len() != self.statics.len() {
            return Err((
                ErrorCode::ArityMismatch,
                format!("`{}` takes {} static argument(s), given {}", self.name, self.statics.len(), statics.len()),
            ));
        }
        for ((n, kind), r) in self.statics.iter().zip(&statics) {
            kind.check(r).map_err(|m| (ErrorCode::InvalidStatic, format!("static argument `{n}` of `{}`: {m}", self.name)))?;
        }
        if args.len() != self.params.len() {
            return Err((
                ErrorCode::ArityMismatch,
                format!("`{}` takes {} argument(s), given {}", self.name, self.params.len(), args.len()),
            ));
        }
        let mut subst = Subst::default();
        for (i, (p, t)) in self.params.iter().zip(args).enumerate() {
            unify(p, t, &mut subst, rigid).map_err(|(code, detail)| {
                let mut msg = format!("argument {} of `{}`: expected {p}, found {}", i + 1, self.name, show_ty(t));
                if !detail.is_empty() {
                    msg.push_str(&format!(" ({detail})"));
                }
                (code, msg)
            })?;
        }
        let inst = Inst { subst, statics };
        let ty = (self.result)(&inst)?;
        Ok((inst, ty))
    }
}

fn bind<K: Ord + Copy, V: PartialEq + Clone>(
    map: &mut BTreeMap<K, V>,
    k: K,
    v: &V,
    code: ErrorCode,
) -> SResult<()> {
    match map.get(&k) {
        Some(old) if old != v => Err((code, String::new())),
        Some(_) => Ok(()),
        None => {
            map.insert(k, v.clone());
            Ok(())
        }
    }
}

fn mismatch() -> (ErrorCode, String) {
    (ErrorCode::TypeMismatch, String::new())
}

pub fn unify(p: &TPat, t: &Ty, s: &mut Subst, rigid: &dyn Fn(&SourceName) -> bool) -> SResult<()> {
    match (p, t) {
        (TPat::Bool, Type::Bool) => Ok(()),
        (TPat::Real, Type::Real | Type::RealSing(_)) => Ok(()),
        (TPat::Prod(a, b), Type::Prod(x, y)) | (TPat::Fun(a, b), Type::Fun(x, y)) => {
            unify(a, x, s, rigid)?;
            unify(b, y, s, rigid)
        }
        (TPat::List(a), Type::List(x)) => unify(a, x, s, rigid),
        (TPat::Var(v), t) => bind(&mut s.types, *v, t, ErrorCode::TypeMismatch),
        (TPat::Sens(sp, e), Type::Sensitive(st, env)) => {
            unify_s(sp, st, s, rigid)?;
            bind(&mut s.envs, *e, env, ErrorCode::UnificationFailure)
                .map_err(|(c, _)| (c, format!("environment `{e}` would need two different values")))
        }
        (TPat::Pm(v, e, a), Type::Pm(penv, x)) => {
            if let Some(v) = v {
                if penv.variant() != *v && !penv.is_empty() {
                    return Err((ErrorCode::TypeMismatch, format!("expected the {} monad", v.keyword())));
                }
            }
            bind(&mut s.penvs, *e, penv, ErrorCode::UnificationFailure)?;
            unify(a, x, s, rigid)
        }
        (TPat::Rank2 { a, b, k }, Type::Fun(x, y)) => {
            let (Type::Sensitive(sa, ea), Type::Sensitive(sb, eb)) = (&**x, &**y) else {
                return Err(mismatch());
            };
            let mut keys = ea.iter();
            let sk = match (keys.next(), keys.next()) {
                (Some((k, Sens::Finite(1))), None) if k.is_skolem() => k.clone(),
                _ => {
                    return Err((
                        ErrorCode::UnificationFailure,
                        format!("the parameter environment {ea} is not a fresh environment variable"),
                    ))
                }
            };
            if rigid(&sk) {
                return Err((
                    ErrorCode::EnvEscape,
                    format!("environment variable {sk} is bound outside the function and would escape its scope"),
                ));
            }
            if let Some((other, _)) = eb.iter().find(|(k, _)| **k != sk) {
                return Err((
                    ErrorCode::EnvEscape,
                    format!("the result depends on {other}, which is captured from outside the mapped function"),
                ));
            }
            unify_s(a, sa, s, rigid)?;
            unify_s(b, sb, s, rigid)?;
            let scale = eb.get(&sk).copied().unwrap_or(Sens::ZERO);
            bind(&mut s.scales, *k, &scale, ErrorCode::UnificationFailure)
        }
        _ => Err(mismatch()),
    }
}

fn unify_c(p: &CPat, c: CMetric, s: &mut Subst) -> SResult<()> {
    match p {
        CPat::Is(m) if *m == c => Ok(()),
        CPat::Is(_) => Err((ErrorCode::MetricMismatch, String::new())),
        CPat::Var(v) => bind(&mut s.cmetrics, *v, &c, ErrorCode::MetricMismatch),
    }
}

pub fn unify_s(p: &SPat, t: &SType, s: &mut Subst, rigid: &dyn Fn(&SourceName) -> bool) -> SResult<()> {
    match (p, t) {
        (SPat::SReal(m), SType::SReal(n)) => {
            if m == n {
                Ok(())
            } else {
                Err((ErrorCode::MetricMismatch, format!("metric {n} where {m} is required")))
            }
        }
        (SPat::SProd(c, a, b), SType::SProd(w, x, y)) | (SPat::SDict(c, a, b), SType::SDict(w, x, y)) => {
            unify_c(c, *w, s)?;
            unify_s(a, x, s, rigid)?;
            unify_s(b, y, s, rigid)
        }
        (SPat::SList(c, a), SType::SList(w, x)) => {
            unify_c(c, *w, s)?;
            unify_s(a, x, s, rigid)
        }
        (SPat::SSet(a), SType::SSet(p)) => unify(a, &p.to_type(), s, rigid),
        (SPat::SMatrix(c, r, k, a), SType::SMatrix(w, rows, cols, x)) => {
            unify_c(c, *w, s)?;
            bind(&mut s.dims, *r, rows, ErrorCode::TypeMismatch)?;
            bind(&mut s.dims, *k, cols, ErrorCode::TypeMismatch)?;
            unify_s(a, x, s, rigid)
        }
        (SPat::Var(v), t) => bind(&mut s.stypes, *v, t, ErrorCode::TypeMismatch),
        _ => Err(mismatch()),
    }
}

// ---- pattern printing ----

impl fmt::Display for CPat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CPat::Is(m) => write!(f, "{m}"),
            CPat::Var(v) => f.write_str(v),
        }
    }
}

impl fmt::Display for SPat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SPat::SReal(m) => write!(f, "sreal {m}"),
            SPat::SProd(c, a, b) => write!(f, "spair {c} ({a}) ({b})"),
            SPat::SList(c, a) => write!(f, "slist {c} ({a})"),
            SPat::SSet(a) => write!(f, "sset {a}"),
            SPat::SMatrix(c, r, k, a) => write!(f, "smatrix {c} {r} {k} ({a})"),
            SPat::SDict(c, a, b) => write!(f, "sdict {c} ({a}) ({b})"),
            SPat::Var(v) => f.write_str(v),
        }
    }
}

impl fmt::Display for TPat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TPat::Bool => f.write_str("bool"),
            TPat::Real => f.write_str("real"),
            TPat::Prod(a, b) => write!(f, "({a}, {b})"),
            TPat::List(a) => write!(f, "list({a})"),
            TPat::Fun(a, b) => write!(f, "({a} -> {b})"),
            TPat::Var(v) => f.write_str(v),
            TPat::Sens(s, e) => write!(f, "{s} {e}"),
            TPat::Pm(v, e, a) => write!(f, "{} {e} {a}", v.map_or("PM", |v| v.keyword())),
            TPat::Rank2 { a, b, k } => write!(f, "(forall s'. {a} s' -> {b} ({k} * s'))"),
        }
    }
}

// ---- registry ----

fn real() -> TPat {
    TPat::Real
}
fn list(a: TPat) -> TPat {
    TPat::List(Box::new(a))
}
fn prod(a: TPat, b: TPat) -> TPat {
    TPat::Prod(Box::new(a), Box::new(b))
}
fn fun(a: TPat, b: TPat) -> TPat {
    TPat::Fun(Box::new(a), Box::new(b))
}
fn tv(v: &'static str) -> TPat {
    TPat::Var(v)
}
fn pt() -> TPat {
    prod(real(), real())
}
fn sens(s: SPat, e: &'static str) -> TPat {
    TPat::Sens(s, e)
}
fn sreal(m: NMetric) -> SPat {
    SPat::SReal(m)
}
fn slist(c: CPat, a: SPat) -> SPat {
    SPat::SList(c, Box::new(a))
}
fn sset(a: TPat) -> SPat {
    SPat::SSet(Box::new(a))
}
fn pm(v: Option<Variant>, e: &'static str, a: TPat) -> TPat {
    TPat::Pm(v, e, Box::new(a))
}

const DIFF: NMetric = NMetric::Diff;
const DISC: NMetric = NMetric::Disc;
const L1: CPat = CPat::Is(CMetric::L1);

fn ty_real() -> Ty {
    Type::Real
}
fn ty_list(t: Ty) -> Ty {
    Type::list(t)
}
fn ty_pt() -> Ty {
    Type::prod(Type::Real, Type::Real)
}
fn sreal_diff(e: SEnv) -> Ty {
    Type::Sensitive(SType::SReal(DIFF), e)
}

fn plain(t: &Ty) -> PlainType {
    match t {
        Type::Bool => PlainType::Bool,
        Type::Prod(a, b) => PlainType::Prod(Box::new(plain(a)), Box::new(plain(b))),
        Type::List(a) => PlainType::List(Box::new(plain(a))),
        _ => PlainType::Real,
    }
}

/// The bound `max(Σ) ≤ s` of the noise mechanisms.
pub fn check_max_sens(env: &SEnv, bound: u64) -> SResult<()> {
    match senv_max(env) {
        Sens::Inf => Err((ErrorCode::InfiniteSensitivity, format!("argument has infinite sensitivity in {env}"))),
        Sens::Finite(m) if m > bound => Err((
            ErrorCode::SensitivityExceeded,
            format!("argument is {m}-sensitive in {env}, but the mechanism is calibrated for sensitivity {bound}"),
        )),
        _ => Ok(()),
    }
}

fn account(e: AccountError) -> (ErrorCode, String) {
    let code = match e {
        AccountError::AlphaMismatch { .. } => ErrorCode::AlphaMismatch,
        AccountError::PreconditionViolation(_) | AccountError::Real(_) => ErrorCode::PreconditionViolation,
        AccountError::VariantMismatch(..) | AccountError::UnsupportedConversion(..) => ErrorCode::TypeMismatch,
    };
    (code, e.to_string())
}

fn s(name: &'static str, kind: StaticKind) -> (&'static str, StaticKind) {
    (name, kind)
}

fn build() -> Vec<PrimSchema> {
    use StaticKind::*;
    vec![
        PrimSchema {
            name: "clip",
            statics: vec![],
            params: vec![sens(slist(CPat::Var("w"), sreal(DISC)), "s")],
            result: |i| Ok(Type::Sensitive(SType::SList(i.cm("w"), Box::new(SType::SReal(DIFF))), i.env("s").clone())),
            result_doc: "slist w (sreal diff) s",
        },
        PrimSchema {
            name: "sum",
            statics: vec![],
            params: vec![sens(slist(L1, sreal(DIFF)), "s")],
            result: |i| Ok(sreal_diff(i.env("s").clone())),
            result_doc: "sreal diff s",
        },
        PrimSchema {
            name: "map",
            statics: vec![],
            params: vec![
                TPat::Rank2 { a: SPat::Var("a"), b: SPat::Var("b"), k: "k" },
                sens(slist(CPat::Var("w"), SPat::Var("a")), "s"),
            ],
            result: |i| {
                let k = i.subst.scales["k"];
                Ok(Type::Sensitive(SType::SList(i.cm("w"), Box::new(i.stype("b"))), senv_scale(k, i.env("s"))))
            },
            result_doc: "slist w (b) (k * s)",
        },
        PrimSchema {
            name: "list_map",
            statics: vec![],
            params: vec![fun(tv("a"), tv("b")), list(tv("a"))],
            result: |i| Ok(ty_list(i.ty("b"))),
            result_doc: "list(b)",
        },
        PrimSchema {
            name: "zip",
            statics: vec![],
            params: vec![list(tv("a")), list(tv("b"))],
            result: |i| Ok(ty_list(Type::prod(i.ty("a"), i.ty("b")))),
            result_doc: "list((a, b))",
        },
        PrimSchema {
            name: "head",
            statics: vec![],
            params: vec![list(real())],
            result: |_| Ok(ty_real()),
            result_doc: "real",
        },
        PrimSchema {
            name: "tail",
            statics: vec![],
            params: vec![list(tv("a"))],
            result: |i| Ok(ty_list(i.ty("a"))),
            result_doc: "list(a)",
        },
        PrimSchema {
            name: "div",
            statics: vec![],
            params: vec![real(), real()],
            result: |_| Ok(ty_real()),
            result_doc: "real",
        },
        PrimSchema {
            name: "listLaplace",
            statics: vec![s("s", Nat), s("eps", Pos)],
            params: vec![sens(slist(L1, sreal(DIFF)), "e")],
            result: |i| {
                check_max_sens(i.env("e"), i.nat(0))?;
                Ok(Type::pm(PrivEnv::truncate_eps(i.rat(1), i.env("e")), ty_list(ty_real())))
            },
            result_doc: "EpsPM trunc(eps, e) list(real)",
        },
        PrimSchema {
            name: "gauss",
            statics: vec![s("s", Nat), s("eps", Pos), s("delta", Prob)],
            params: vec![sens(sreal(DIFF), "e")],
            result: |i| {
                check_max_sens(i.env("e"), i.nat(0))?;
                Ok(Type::pm(PrivEnv::truncate_ed(i.real(1), i.real(2), i.env("e")), ty_real()))
            },
            result_doc: "EDPM trunc((eps, delta), e) real",
        },
        PrimSchema {
            name: "listGauss",
            statics: vec![s("s", Nat), s("eps", Pos), s("delta", Prob)],
            params: vec![sens(slist(CPat::Is(CMetric::L2), sreal(DIFF)), "e")],
            result: |i| {
                check_max_sens(i.env("e"), i.nat(0))?;
                Ok(Type::pm(PrivEnv::truncate_ed(i.real(1), i.real(2), i.env("e")), ty_list(ty_real())))
            },
            result_doc: "EDPM trunc((eps, delta), e) list(real)",
        },
        PrimSchema {
            name: "advloop",
            statics: vec![s("k", Nat), s("delta'", Prob)],
            params: vec![tv("a"), fun(tv("a"), pm(Some(Variant::Ed), "p", tv("a")))],
            result: |i| {
                let p = match i.penv("p") {
                    PrivEnv::Ed(p) => PrivEnv::Ed(adv_comp(i.nat(0), &i.real(1), p).map_err(account)?),
                    _ => PrivEnv::empty(Variant::Ed),
                };
                Ok(Type::pm(p, i.ty("a")))
            },
            result_doc: "EDPM advcomp(k, delta', p) a",
        },
        PrimSchema {
            name: "mloop",
            statics: vec![s("k", Nat)],
            params: vec![tv("a"), fun(tv("a"), pm(None, "p", tv("a")))],
            result: |i| Ok(Type::pm(i.penv("p").scale(i.nat(0)), i.ty("a"))),
            result_doc: "PM (k * p) a",
        },
        PrimSchema {
            name: "conv_eps_to_ed",
            statics: vec![],
            params: vec![pm(Some(Variant::Eps), "p", tv("a"))],
            result: |i| Ok(Type::pm(i.penv("p").convert(Variant::Ed, None).map_err(account)?, i.ty("a"))),
            result_doc: "EDPM p a",
        },
        PrimSchema {
            name: "conv_eps_to_rdp",
            statics: vec![s("alpha", Alpha)],
            params: vec![pm(Some(Variant::Eps), "p", tv("a"))],
            result: |i| Ok(Type::pm(i.penv("p").convert(Variant::Rdp, Some(&i.real(0))).map_err(account)?, i.ty("a"))),
            result_doc: "RDPPM p a",
        },
        PrimSchema {
            name: "conv_rdp_to_ed",
            statics: vec![s("delta", Prob)],
            params: vec![pm(Some(Variant::Rdp), "p", tv("a"))],
            result: |i| Ok(Type::pm(i.penv("p").convert(Variant::Ed, Some(&i.real(0))).map_err(account)?, i.ty("a"))),
            result_doc: "EDPM p a",
        },
        PrimSchema {
            name: "assign",
            statics: vec![],
            params: vec![list(pt()), sens(sset(pt()), "s")],
            result: |i| {
                let elem = PlainType::Prod(Box::new(plain(&ty_pt())), Box::new(PlainType::Real));
                Ok(Type::Sensitive(SType::SSet(elem), i.env("s").clone()))
            },
            result_doc: "sset ((real, real), real) s",
        },
        PrimSchema {
            name: "partition",
            statics: vec![s("k", Nat)],
            params: vec![sens(sset(prod(tv("e"), real())), "s")],
            result: |i| {
                let set = SType::SSet(plain(&i.ty("e")));
                Ok(Type::Sensitive(SType::SList(CMetric::L1, Box::new(set)), i.env("s").clone()))
            },
            result_doc: "slist L1 (sset e) s",
        },
        PrimSchema {
            name: "totx",
            statics: vec![],
            params: vec![sens(sset(pt()), "s")],
            result: |i| Ok(sreal_diff(i.env("s").clone())),
            result_doc: "sreal diff s",
        },
        PrimSchema {
            name: "toty",
            statics: vec![],
            params: vec![sens(sset(pt()), "s")],
            result: |i| Ok(sreal_diff(i.env("s").clone())),
            result_doc: "sreal diff s",
        },
        PrimSchema {
            name: "size",
            statics: vec![],
            params: vec![sens(sset(tv("e")), "s")],
            result: |i| Ok(sreal_diff(i.env("s").clone())),
            result_doc: "sreal diff s",
        },
        PrimSchema {
            name: "bag_filter_lt",
            statics: vec![],
            params: vec![real(), sens(sset(real()), "s")],
            result: |i| Ok(Type::Sensitive(SType::SSet(PlainType::Real), i.env("s").clone())),
            result_doc: "sset real s",
        },
        PrimSchema {
            name: "mclip",
            statics: vec![],
            params: vec![sens(SPat::SMatrix(CPat::Var("w"), "r", "c", Box::new(sreal(DISC))), "s")],
            result: |i| {
                let m = SType::SMatrix(
                    i.cm("w"),
                    i.subst.dims["r"],
                    i.subst.dims["c"],
                    Box::new(SType::SReal(DIFF)),
                );
                Ok(Type::Sensitive(m, i.env("s").clone()))
            },
            result_doc: "smatrix w r c (sreal diff) s",
        },
        PrimSchema {
            name: "xgradient",
            statics: vec![],
            params: vec![
                list(real()),
                sens(SPat::SMatrix(L1, "r", "c", Box::new(sreal(DIFF))), "s1"),
                sens(slist(L1, sreal(DIFF)), "s2"),
            ],
            result: |i| {
                let l = SType::SList(CMetric::L1, Box::new(SType::SReal(DIFF)));
                Ok(Type::Sensitive(l, senv_plus(i.env("s1"), i.env("s2"))))
            },
            result_doc: "slist L1 (sreal diff) (s1 + s2)",
        },
        PrimSchema {
            name: "vec_sub",
            statics: vec![],
            params: vec![list(real()), list(real())],
            result: |_| Ok(ty_list(ty_real())),
            result_doc: "list(real)",
        },
        PrimSchema {
            name: "vec_scale",
            statics: vec![],
            params: vec![real(), list(real())],
            result: |_| Ok(ty_list(ty_real())),
            result_doc: "list(real)",
        },
        PrimSchema {
            name: "expmech",
            statics: vec![s("eps", Pos)],
            params: vec![
                list(pt()),
                list(pt()),
                sens(SPat::SDict(CPat::Is(CMetric::LInf), Box::new(sreal(DIFF)), Box::new(sreal(DIFF))), "s"),
            ],
            result: |i| Ok(Type::pm(PrivEnv::truncate_eps(i.rat(0), i.env("s")), ty_real())),
            result_doc: "EpsPM trunc(eps, s) real",
        },
        PrimSchema {
            name: "expnloop",
            statics: vec![s("k", Nat), s("eps", Pos)],
            params: vec![
                list(pt()),
                sens(SPat::SDict(CPat::Is(CMetric::LInf), Box::new(sreal(DIFF)), Box::new(sreal(DIFF))), "s"),
                list(pt()),
            ],
            result: |i| {
                let k2 = i.nat(0).saturating_mul(2);
                Ok(Type::pm(PrivEnv::truncate_eps(i.rat(1), i.env("s")).scale(k2), ty_list(ty_pt())))
            },
            result_doc: "EpsPM (2k * trunc(eps, s)) list((real, real))",
        },
    ]
}

pub fn registry() -> &'static [PrimSchema] {
    static REG: OnceLock<Vec<PrimSchema>> = OnceLock::new();
    REG.get_or_init(build)
}

pub fn lookup(name: &str) -> Option<&'static PrimSchema> {
    registry().iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(s: &str) -> SourceName {
        SourceName::new(s).unwrap()
    }

    fn env1(s: &str, n: u64) -> SEnv {
        SEnv::singleton(src(s), Sens::Finite(n))
    }

    fn no_rigid(_: &SourceName) -> bool {
        false
    }

    fn l1(a: SType) -> SType {
        SType::SList(CMetric::L1, Box::new(a))
    }

    #[test]
    fn clip_keeps_environment() {
        let arg = Type::Sensitive(l1(SType::SReal(DISC)), env1("db", 1));
        let (_, t) = lookup("clip").unwrap().instantiate(vec![], &[arg], &no_rigid).unwrap();
        assert_eq!(t, Type::Sensitive(l1(SType::SReal(DIFF)), env1("db", 1)));
    }

    #[test]
    fn map_scales_by_function_sensitivity() {
        let sk = SourceName::skolem("s");
        for k in [1u64, 2] {
            let f = Type::fun(
                Type::Sensitive(SType::SReal(DIFF), SEnv::singleton(sk.clone(), Sens::ONE)),
                Type::Sensitive(SType::SReal(DIFF), SEnv::singleton(sk.clone(), Sens::Finite(k))),
            );
            let xs = Type::Sensitive(l1(SType::SReal(DIFF)), env1("db", 1));
            let (_, t) = lookup("map").unwrap().instantiate(vec![], &[f, xs], &no_rigid).unwrap();
            assert_eq!(t, Type::Sensitive(l1(SType::SReal(DIFF)), env1("db", k)));
        }
    }

    #[test]
    fn map_rejects_captured_sources() {
        let sk = SourceName::skolem("s");
        let f = Type::fun(
            Type::Sensitive(SType::SReal(DIFF), SEnv::singleton(sk.clone(), Sens::ONE)),
            Type::Sensitive(SType::SReal(DIFF), env1("x", 1)),
        );
        let xs = Type::Sensitive(l1(SType::SReal(DIFF)), env1("db", 1));
        let err = lookup("map").unwrap().instantiate(vec![], &[f.clone(), xs.clone()], &no_rigid).unwrap_err();
        assert_eq!(err.0, ErrorCode::EnvEscape);
        let rigid = |n: &SourceName| n.is_skolem();
        let f_ok = Type::fun(
            Type::Sensitive(SType::SReal(DIFF), SEnv::singleton(sk.clone(), Sens::ONE)),
            Type::Sensitive(SType::SReal(DIFF), SEnv::singleton(sk, Sens::ONE)),
        );
        let err = lookup("map").unwrap().instantiate(vec![], &[f_ok, xs], &rigid).unwrap_err();
        assert_eq!(err.0, ErrorCode::EnvEscape);
    }

    #[test]
    fn sum_demands_diff() {
        let arg = Type::Sensitive(l1(SType::SReal(DISC)), env1("db", 1));
        let err = lookup("sum").unwrap().instantiate(vec![], &[arg], &no_rigid).unwrap_err();
        assert_eq!(err.0, ErrorCode::MetricMismatch);
    }

    #[test]
    fn statics_are_validated() {
        let arg = Type::Sensitive(l1(SType::SReal(DIFF)), env1("db", 1));
        let half = Rational::new(1.into(), 2.into());
        let err = lookup("listLaplace").unwrap().instantiate(vec![half.clone(), half], &[arg], &no_rigid).unwrap_err();
        assert_eq!(err.0, ErrorCode::InvalidStatic);
    }

    #[test]
    fn signatures_print() {
        for p in registry() {
            assert!(p.signature().starts_with(p.name));
        }
        assert_eq!(lookup("clip").unwrap().signature(), "clip : slist w (sreal disc) s -> slist w (sreal diff) s");
    }
}
