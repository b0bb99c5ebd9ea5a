//! Composition and conversion of privacy costs.

use std::fmt;

use num_traits::{One, Zero};

use crate::env::{senv_scale_to_inf, senv_truncate, EpsCost, PEnv, SEnv, SourceName};
use crate::real::{format_rational, EDCost, RDPCost, RealError, RealExpr};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AccountError {
    #[error("source {src} is accounted at alpha {left} and alpha {right}")]
    AlphaMismatch { src: SourceName, left: String, right: String },
    #[error("cannot compose a {0} computation with a {1} computation")]
    VariantMismatch(Variant, Variant),
    #[error("no conversion from {0} to {1}")]
    UnsupportedConversion(Variant, Variant),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error(transparent)]
    Real(#[from] RealError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Eps,
    Ed,
    Rdp,
}

impl Variant {
    /// Keyword used for the monad type in source text.
    pub fn keyword(self) -> &'static str {
        match self {
            Variant::Eps => "EpsPM",
            Variant::Ed => "EDPM",
            Variant::Rdp => "RDPPM",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Eps => "eps",
            Variant::Ed => "ed",
            Variant::Rdp => "rdp",
        })
    }
}

pub fn eps_seq_comp(p1: &PEnv<EpsCost>, p2: &PEnv<EpsCost>) -> PEnv<EpsCost> {
    p1.union_with(p2, |a, b| a.add(b))
}

pub fn ed_seq_comp(p1: &PEnv<EDCost>, p2: &PEnv<EDCost>) -> PEnv<EDCost> {
    p1.union_with(p2, |a, b| match (a, b) {
        (EDCost::Finite { eps: e1, delta: d1 }, EDCost::Finite { eps: e2, delta: d2 }) => EDCost::Finite {
            eps: RealExpr::add(e1.clone(), e2.clone()),
            delta: RealExpr::add(d1.clone(), d2.clone()),
        },
        _ => EDCost::Inf,
    })
}

pub fn rdp_seq_comp(p1: &PEnv<RDPCost>, p2: &PEnv<RDPCost>) -> Result<PEnv<RDPCost>, AccountError> {
    p1.try_union_with(p2, |src, a, b| match (a, b) {
        (RDPCost::Finite { alpha: a1, eps: e1 }, RDPCost::Finite { alpha: a2, eps: e2 }) => {
            if a1 != a2 {
                return Err(AccountError::AlphaMismatch {
                    src: src.clone(),
                    left: format_rational(a1),
                    right: format_rational(a2),
                });
            }
            Ok(RDPCost::Finite { alpha: a1.clone(), eps: RealExpr::add(e1.clone(), e2.clone()) })
        }
        _ => Ok(RDPCost::Inf),
    })
}

fn check_unit_interval(what: &str, e: &RealExpr) -> Result<f64, AccountError> {
    let v = e.eval()?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(AccountError::PreconditionViolation(format!("{what} = {e} must lie in (0, 1)")))
    }
}

/// k-fold adaptive composition of an (ε, δ) environment.
pub fn adv_comp(k: u64, delta_prime: &RealExpr, p: &PEnv<EDCost>) -> Result<PEnv<EDCost>, AccountError> {
    if k == 0 {
        return Err(AccountError::PreconditionViolation("iteration count must be positive".into()));
    }
    check_unit_interval("delta'", delta_prime)?;
    let log_term = RealExpr::ln(RealExpr::div(RealExpr::int(1), delta_prime.clone())?)?;
    let root = RealExpr::sqrt(RealExpr::mul(RealExpr::int(2 * k), log_term))?;
    p.try_map_values(|src, c| match c {
        EDCost::Finite { eps, delta } => {
            check_unit_interval(&format!("eps of {src}"), eps)?;
            Ok(EDCost::Finite {
                eps: RealExpr::mul(RealExpr::mul(RealExpr::int(2), eps.clone()), root.clone()),
                delta: RealExpr::add(RealExpr::mul(RealExpr::int(k), delta.clone()), delta_prime.clone()),
            })
        }
        EDCost::Inf => Ok(EDCost::Inf),
    })
}

/// Costs that can be multiplied by a repetition count.
pub trait Scalable {
    fn scaled(&self, k: u64) -> Self;
}

impl Scalable for EpsCost {
    fn scaled(&self, k: u64) -> Self {
        self.scale(k)
    }
}

impl Scalable for EDCost {
    fn scaled(&self, k: u64) -> Self {
        match self {
            EDCost::Finite { eps, delta } => EDCost::Finite {
                eps: RealExpr::mul(RealExpr::int(k), eps.clone()),
                delta: RealExpr::mul(RealExpr::int(k), delta.clone()),
            },
            EDCost::Inf if k == 0 => EDCost::Finite { eps: RealExpr::zero(), delta: RealExpr::zero() },
            EDCost::Inf => EDCost::Inf,
        }
    }
}

impl Scalable for RDPCost {
    fn scaled(&self, k: u64) -> Self {
        match self {
            RDPCost::Finite { alpha, eps } => {
                RDPCost::Finite { alpha: alpha.clone(), eps: RealExpr::mul(RealExpr::int(k), eps.clone()) }
            }
            RDPCost::Inf if k == 0 => RDPCost::Finite { alpha: Rational::from_integer(2.into()), eps: RealExpr::zero() },
            RDPCost::Inf => RDPCost::Inf,
        }
    }
}

pub fn scale_priv<C: Scalable + crate::env::EnvValue>(k: u64, p: &PEnv<C>) -> PEnv<C> {
    p.map_values(|c| c.scaled(k))
}

pub fn conv_eps_to_ed(p: &PEnv<EpsCost>) -> PEnv<EDCost> {
    p.map_values(|c| match c {
        EpsCost::Finite(r) => EDCost::Finite { eps: RealExpr::Lit(r.clone()), delta: RealExpr::zero() },
        EpsCost::Inf => EDCost::Inf,
    })
}

pub fn conv_eps_to_rdp(p: &PEnv<EpsCost>, alpha: &Rational) -> Result<PEnv<RDPCost>, AccountError> {
    if *alpha <= Rational::one() {
        return Err(RealError::DomainError(format!("alpha {} must exceed 1", format_rational(alpha))).into());
    }
    Ok(p.map_values(|c| match c {
        EpsCost::Finite(r) => RDPCost::Finite { alpha: alpha.clone(), eps: RealExpr::Lit(r.clone()) },
        EpsCost::Inf => RDPCost::Inf,
    }))
}

pub fn conv_rdp_to_ed(p: &PEnv<RDPCost>, delta: &RealExpr) -> Result<PEnv<EDCost>, AccountError> {
    let d = delta.eval()?;
    if !(d > 0.0 && d < 1.0) {
        return Err(RealError::DomainError(format!("delta {delta} must lie in (0, 1)")).into());
    }
    let log_term = RealExpr::ln(RealExpr::div(RealExpr::int(1), delta.clone())?)?;
    p.try_map_values(|_, c| match c {
        RDPCost::Finite { alpha, eps } => {
            let shift = RealExpr::div(log_term.clone(), RealExpr::Lit(alpha - Rational::one()))?;
            Ok(EDCost::Finite { eps: RealExpr::add(eps.clone(), shift), delta: delta.clone() })
        }
        RDPCost::Inf => Ok(EDCost::Inf),
    })
}

/// A privacy environment tagged with its variant.
///
/// Empty environments of different variants compare equal: the empty
/// environment is the unit of every variant's composition.
#[derive(Debug, Clone)]
pub enum PrivEnv {
    Eps(PEnv<EpsCost>),
    Ed(PEnv<EDCost>),
    Rdp(PEnv<RDPCost>),
}

impl PartialEq for PrivEnv {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (PrivEnv::Eps(a), PrivEnv::Eps(b)) => a == b,
            (PrivEnv::Ed(a), PrivEnv::Ed(b)) => a == b,
            (PrivEnv::Rdp(a), PrivEnv::Rdp(b)) => a == b,
            _ => self.is_empty() && other.is_empty(),
        }
    }
}

impl PrivEnv {
    pub fn empty(v: Variant) -> Self {
        match v {
            Variant::Eps => PrivEnv::Eps(PEnv::empty()),
            Variant::Ed => PrivEnv::Ed(PEnv::empty()),
            Variant::Rdp => PrivEnv::Rdp(PEnv::empty()),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            PrivEnv::Eps(_) => Variant::Eps,
            PrivEnv::Ed(_) => Variant::Ed,
            PrivEnv::Rdp(_) => Variant::Rdp,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            PrivEnv::Eps(p) => p.is_empty(),
            PrivEnv::Ed(p) => p.is_empty(),
            PrivEnv::Rdp(p) => p.is_empty(),
        }
    }

    pub fn sources(&self) -> Vec<SourceName> {
        match self {
            PrivEnv::Eps(p) => p.keys().cloned().collect(),
            PrivEnv::Ed(p) => p.keys().cloned().collect(),
            PrivEnv::Rdp(p) => p.keys().cloned().collect(),
        }
    }

    /// `⌉Σ⌈^∞` in the given variant.
    pub fn infinite(v: Variant, s: &SEnv) -> Self {
        match v {
            Variant::Eps => PrivEnv::Eps(senv_scale_to_inf(s)),
            Variant::Ed => PrivEnv::Ed(senv_scale_to_inf(s)),
            Variant::Rdp => PrivEnv::Rdp(senv_scale_to_inf(s)),
        }
    }

    pub fn truncate_eps(eps: &Rational, s: &SEnv) -> Self {
        PrivEnv::Eps(senv_truncate(&EpsCost::Finite(eps.clone()), s))
    }

    pub fn truncate_ed(eps: RealExpr, delta: RealExpr, s: &SEnv) -> Self {
        PrivEnv::Ed(senv_truncate(&EDCost::Finite { eps, delta }, s))
    }

    /// Sequential composition. An empty side adopts the other's variant.
    pub fn seq_comp(&self, other: &PrivEnv) -> Result<PrivEnv, AccountError> {
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        match (self, other) {
            (PrivEnv::Eps(a), PrivEnv::Eps(b)) => Ok(PrivEnv::Eps(eps_seq_comp(a, b))),
            (PrivEnv::Ed(a), PrivEnv::Ed(b)) => Ok(PrivEnv::Ed(ed_seq_comp(a, b))),
            (PrivEnv::Rdp(a), PrivEnv::Rdp(b)) => Ok(PrivEnv::Rdp(rdp_seq_comp(a, b)?)),
            _ => Err(AccountError::VariantMismatch(self.variant(), other.variant())),
        }
    }

    pub fn scale(&self, k: u64) -> PrivEnv {
        match self {
            PrivEnv::Eps(p) => PrivEnv::Eps(scale_priv(k, p)),
            PrivEnv::Ed(p) => PrivEnv::Ed(scale_priv(k, p)),
            PrivEnv::Rdp(p) => PrivEnv::Rdp(scale_priv(k, p)),
        }
    }

    /// Convert to another variant. `param` is α for RDP targets and δ for
    /// (ε, δ) targets from RDP; it is ignored otherwise.
    pub fn convert(&self, target: Variant, param: Option<&RealExpr>) -> Result<PrivEnv, AccountError> {
        let missing = || AccountError::PreconditionViolation(format!("conversion to {target} needs a parameter"));
        match (self, target) {
            (p, t) if p.variant() == t => Ok(p.clone()),
            (PrivEnv::Eps(p), Variant::Ed) => Ok(PrivEnv::Ed(conv_eps_to_ed(p))),
            (PrivEnv::Eps(p), Variant::Rdp) => {
                let alpha = param.and_then(RealExpr::as_lit).ok_or_else(missing)?;
                Ok(PrivEnv::Rdp(conv_eps_to_rdp(p, alpha)?))
            }
            (PrivEnv::Rdp(p), Variant::Ed) => Ok(PrivEnv::Ed(conv_rdp_to_ed(p, param.ok_or_else(missing)?)?)),
            (p, t) => Err(AccountError::UnsupportedConversion(p.variant(), t)),
        }
    }

    /// Pointwise comparison. ε-costs compare exactly, symbolic costs by
    /// structure or, failing that, by evaluation.
    pub fn leq(&self, other: &PrivEnv) -> bool {
        if self.is_empty() {
            return true;
        }
        let real_leq = |a: &RealExpr, b: &RealExpr| a == b || matches!((a.eval(), b.eval()), (Ok(x), Ok(y)) if x <= y);
        match (self, other) {
            (PrivEnv::Eps(a), PrivEnv::Eps(b)) => a.iter().all(|(k, v)| match (v, b.get(k)) {
                (_, Some(EpsCost::Inf)) => true,
                (EpsCost::Finite(x), Some(EpsCost::Finite(y))) => x <= y,
                (EpsCost::Finite(x), None) => x.is_zero(),
                _ => false,
            }),
            (PrivEnv::Ed(a), PrivEnv::Ed(b)) => a.iter().all(|(k, v)| match (v, b.get(k)) {
                (_, Some(EDCost::Inf)) => true,
                (EDCost::Finite { eps: e1, delta: d1 }, Some(EDCost::Finite { eps: e2, delta: d2 })) => {
                    real_leq(e1, e2) && real_leq(d1, d2)
                }
                _ => false,
            }),
            (PrivEnv::Rdp(a), PrivEnv::Rdp(b)) => a.iter().all(|(k, v)| match (v, b.get(k)) {
                (_, Some(RDPCost::Inf)) => true,
                (RDPCost::Finite { alpha: a1, eps: e1 }, Some(RDPCost::Finite { alpha: a2, eps: e2 })) => {
                    a1 == a2 && real_leq(e1, e2)
                }
                _ => false,
            }),
            _ => false,
        }
    }
}

impl fmt::Display for PrivEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrivEnv::Eps(p) => p.fmt(f),
            PrivEnv::Ed(p) => p.fmt(f),
            PrivEnv::Rdp(p) => p.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Env;
    use proptest::prelude::*;

    fn src(s: &str) -> SourceName {
        SourceName::new(s).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn eps_env(entries: &[(&str, Rational)]) -> PEnv<EpsCost> {
        Env::from_entries(entries.iter().map(|(k, v)| (src(k), EpsCost::Finite(v.clone()))))
    }

    fn ed(e: Rational, d: Rational) -> EDCost {
        EDCost::Finite { eps: RealExpr::Lit(e), delta: RealExpr::Lit(d) }
    }

    #[test]
    fn eps_composition() {
        let c = eps_seq_comp(&eps_env(&[("o", q(2, 1))]), &eps_env(&[("o", q(3, 1))]));
        assert_eq!(c, eps_env(&[("o", q(5, 1))]));
        let p = eps_env(&[("a", q(1, 2))]);
        assert_eq!(eps_seq_comp(&PEnv::empty(), &p), p);
        assert_eq!(
            eps_seq_comp(&p, &eps_env(&[("b", q(1, 2))])),
            eps_env(&[("a", q(1, 2)), ("b", q(1, 2))])
        );
    }

    #[test]
    fn ed_composition() {
        let p = Env::singleton(src("o"), ed(q(1, 1), q(1, 100000)));
        let c = ed_seq_comp(&p, &p);
        assert_eq!(c, Env::singleton(src("o"), ed(q(2, 1), q(2, 100000))));
        let inf = Env::singleton(src("o"), EDCost::Inf);
        assert_eq!(ed_seq_comp(&p, &inf), inf);
    }

    #[test]
    fn advanced_composition_oracle() {
        let p = Env::singleton(src("o"), ed(q(1, 10), q(1, 1000000)));
        let out = adv_comp(100, &RealExpr::Lit(q(1, 100000)), &p).unwrap();
        let EDCost::Finite { eps, delta } = out.get(&src("o")).unwrap() else { panic!() };
        // 2*0.1*sqrt(2*100*ln(1e5)) evaluated independently
        assert!((eps.eval().unwrap() - 9.597051824376162).abs() < 1e-3);
        assert!((delta.eval().unwrap() - 1.1e-4).abs() < 1e-9);
        assert_eq!(eps.to_string(), "(1/5)*sqrt(200*ln(100000))");
        assert!(adv_comp(3, &RealExpr::Lit(q(1, 100)), &PEnv::empty()).unwrap().is_empty());
    }

    #[test]
    fn advanced_composition_precondition() {
        let p = Env::singleton(src("o"), ed(q(1, 1), q(0, 1)));
        assert!(matches!(
            adv_comp(10, &RealExpr::Lit(q(1, 100)), &p),
            Err(AccountError::PreconditionViolation(_))
        ));
    }

    #[test]
    fn advanced_composition_beats_sequential() {
        // 2ε√(2k ln(1/δ′)) < kε exactly when k > 8 ln(1/δ′) ≈ 92.1 at δ′ = 1e-5
        let adv_eps = |k: u64, e: &Rational| {
            let p = Env::singleton(src("o"), ed(e.clone(), q(0, 1)));
            let adv = adv_comp(k, &RealExpr::Lit(q(1, 100000)), &p).unwrap();
            let EDCost::Finite { eps, .. } = adv.get(&src("o")).unwrap() else { panic!() };
            eps.eval().unwrap()
        };
        for e in [q(1, 10), q(1, 20), q(1, 100)] {
            let seq = |k: u64| crate::real::rational_to_f64(&e) * k as f64;
            for k in [93u64, 100, 1000] {
                assert!(adv_eps(k, &e) < seq(k), "k={k} eps={e}");
            }
            assert!(adv_eps(16, &e) > seq(16));
        }
    }

    #[test]
    fn rdp_composition_and_conversion() {
        let r = |a: i64, e: Rational| Env::singleton(src("o"), RDPCost::Finite { alpha: q(a, 1), eps: RealExpr::Lit(e) });
        let c = rdp_seq_comp(&r(2, q(1, 10)), &r(2, q(2, 10))).unwrap();
        assert_eq!(c, r(2, q(3, 10)));
        assert!(matches!(rdp_seq_comp(&r(2, q(1, 10)), &r(3, q(1, 10))), Err(AccountError::AlphaMismatch { .. })));

        let conv = conv_eps_to_rdp(&eps_env(&[("o", q(1, 1))]), &q(2, 1)).unwrap();
        assert_eq!(conv, r(2, q(1, 1)));
        assert!(conv_eps_to_rdp(&eps_env(&[("o", q(1, 1))]), &q(1, 1)).is_err());

        let ed_out = conv_rdp_to_ed(&r(2, q(1, 2)), &RealExpr::Lit(q(1, 100000))).unwrap();
        let EDCost::Finite { eps, delta } = ed_out.get(&src("o")).unwrap() else { panic!() };
        // 0.5 + ln(1e5)/(2-1) evaluated independently
        assert!((eps.eval().unwrap() - 12.012925464970229).abs() < 1e-9);
        assert_eq!(delta, &RealExpr::Lit(q(1, 100000)));
    }

    #[test]
    fn eps_to_ed() {
        let out = conv_eps_to_ed(&eps_env(&[("o", q(2, 1))]));
        assert_eq!(out, Env::singleton(src("o"), ed(q(2, 1), q(0, 1))));
        let inf: PEnv<EpsCost> = Env::singleton(src("o"), EpsCost::Inf);
        assert_eq!(conv_eps_to_ed(&inf), Env::singleton(src("o"), EDCost::Inf));
    }

    #[test]
    fn reverse_conversions_rejected() {
        let p = PrivEnv::Ed(Env::singleton(src("o"), ed(q(1, 1), q(1, 100))));
        assert!(matches!(p.convert(Variant::Eps, None), Err(AccountError::UnsupportedConversion(..))));
        assert!(matches!(p.convert(Variant::Rdp, None), Err(AccountError::UnsupportedConversion(..))));
        let r = PrivEnv::Rdp(PEnv::empty());
        assert!(matches!(r.convert(Variant::Eps, None), Err(AccountError::UnsupportedConversion(..))));
    }

    #[test]
    fn scale_examples() {
        let p = eps_env(&[("b", q(1, 10))]);
        assert_eq!(scale_priv(3, &p), eps_seq_comp(&eps_env(&[("b", q(1, 10))]), &eps_seq_comp(&p, &p)));
        assert_eq!(scale_priv(1, &p), p);
        assert_eq!(scale_priv(2 * 4, &eps_env(&[("db", q(1, 10))])), eps_env(&[("db", q(8, 10))]));
    }

    #[test]
    fn empty_env_is_variant_neutral() {
        let ed = PrivEnv::Ed(Env::singleton(src("o"), ed(q(1, 1), q(1, 100))));
        assert_eq!(PrivEnv::empty(Variant::Eps).seq_comp(&ed).unwrap(), ed);
        assert_eq!(PrivEnv::empty(Variant::Eps), PrivEnv::empty(Variant::Rdp));
        let eps = PrivEnv::Eps(eps_env(&[("o", q(1, 1))]));
        assert!(matches!(eps.seq_comp(&ed), Err(AccountError::VariantMismatch(..))));
    }

    fn arb_eps_env() -> impl Strategy<Value = PEnv<EpsCost>> {
        let cost = prop_oneof![8 => (0i64..8, 1i64..5).prop_map(|(n, d)| EpsCost::Finite(q(n, d))), 1 => Just(EpsCost::Inf)];
        prop::collection::vec((prop::sample::select(vec!["a", "b", "c"]), cost), 0..4)
            .prop_map(|v| Env::from_entries(v.into_iter().map(|(k, c)| (src(k), c))))
    }

    fn arb_ed_env() -> impl Strategy<Value = PEnv<EDCost>> {
        let cost = (0i64..8, 1i64..5, 0i64..3).prop_map(|(n, d, m)| ed(q(n, d), q(m, 1000)));
        prop::collection::vec((prop::sample::select(vec!["a", "b", "c"]), cost), 0..4)
            .prop_map(|v| Env::from_entries(v.into_iter().map(|(k, c)| (src(k), c))))
    }

    fn eval_ed(p: &PEnv<EDCost>) -> Vec<(SourceName, f64, f64)> {
        p.iter()
            .map(|(k, c)| match c {
                EDCost::Finite { eps, delta } => (k.clone(), eps.eval().unwrap(), delta.eval().unwrap()),
                EDCost::Inf => (k.clone(), f64::INFINITY, f64::INFINITY),
            })
            .collect()
    }

    proptest! {
        #[test]
        fn eps_monoid(a in arb_eps_env(), b in arb_eps_env(), c in arb_eps_env()) {
            prop_assert_eq!(eps_seq_comp(&a, &b), eps_seq_comp(&b, &a));
            prop_assert_eq!(eps_seq_comp(&eps_seq_comp(&a, &b), &c), eps_seq_comp(&a, &eps_seq_comp(&b, &c)));
            prop_assert_eq!(eps_seq_comp(&a, &PEnv::empty()), a.clone());
        }

        #[test]
        fn ed_monoid_by_value(a in arb_ed_env(), b in arb_ed_env(), c in arb_ed_env()) {
            prop_assert_eq!(eval_ed(&ed_seq_comp(&a, &b)), eval_ed(&ed_seq_comp(&b, &a)));
            prop_assert_eq!(
                eval_ed(&ed_seq_comp(&ed_seq_comp(&a, &b), &c)),
                eval_ed(&ed_seq_comp(&a, &ed_seq_comp(&b, &c)))
            );
            prop_assert_eq!(ed_seq_comp(&a, &PEnv::empty()), a.clone());
        }

        #[test]
        fn scale_is_iterated_composition(a in arb_eps_env(), e in arb_ed_env(), k in 1u64..=8) {
            let mut acc = a.clone();
            let mut acc_ed = e.clone();
            for _ in 1..k {
                acc = eps_seq_comp(&acc, &a);
                acc_ed = ed_seq_comp(&acc_ed, &e);
            }
            prop_assert_eq!(scale_priv(k, &a), acc);
            prop_assert_eq!(scale_priv(k, &e), acc_ed);
        }

        #[test]
        fn rdp_route_only_weakens(n in 1i64..20, d in 1i64..10, alpha in 2i64..40) {
            let p = eps_env(&[("o", q(n, d))]);
            let direct = conv_eps_to_ed(&p);
            let via = conv_rdp_to_ed(&conv_eps_to_rdp(&p, &q(alpha, 1)).unwrap(), &RealExpr::Lit(q(1, 100000))).unwrap();
            prop_assert!(eval_ed(&via)[0].1 >= eval_ed(&direct)[0].1);
        }
    }
}
