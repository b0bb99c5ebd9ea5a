//! Randomised checks of the real-number distance lemmas and of the
//! environment and accountant algebra. Arithmetic is exact.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::VerifyReport;
use crate::accountant::{ed_seq_comp, eps_seq_comp, rdp_seq_comp, scale_priv};
use crate::env::{senv_join, senv_plus, senv_scale, senv_truncate, EpsCost, PEnv, SEnv, Sens, SourceName};
use crate::mechanisms::Rng;
use crate::real::{EDCost, RDPCost, RealExpr};
use crate::Rational;

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

fn below(rng: &mut Rng, n: u64) -> u64 {
    rng.next_u64() % n
}

fn rat(rng: &mut Rng) -> Rational {
    let n = below(rng, 2001) as i64 - 1000;
    let d = 1 + below(rng, 50) as i64;
    Rational::new(n.into(), d.into())
}

fn nonneg(rng: &mut Rng) -> Rational {
    rat(rng).abs()
}

/// A point within `r` of `x`.
fn within(rng: &mut Rng, x: &Rational, r: &Rational) -> Rational {
    let k = below(rng, 201) as i64 - 100;
    x + r * Rational::new(k.into(), 100.into())
}

fn senv(rng: &mut Rng) -> SEnv {
    let mut entries = Vec::new();
    for n in NAMES {
        if rng.next_u64() & 1 == 1 {
            let s = if below(rng, 20) == 0 { Sens::Inf } else { Sens::Finite(1 + below(rng, 5)) };
            entries.push((SourceName::new(n).expect("valid name"), s));
        }
    }
    SEnv::from_entries(entries)
}

fn penv<C: crate::env::EnvValue>(rng: &mut Rng, mut cost: impl FnMut(&mut Rng) -> C) -> PEnv<C> {
    let mut entries = Vec::new();
    for n in NAMES {
        if rng.next_u64() & 1 == 1 {
            entries.push((SourceName::new(n).expect("valid name"), cost(rng)));
        }
    }
    PEnv::from_entries(entries)
}

fn eps_cost(rng: &mut Rng) -> EpsCost {
    if below(rng, 20) == 0 {
        EpsCost::Inf
    } else {
        EpsCost::Finite(Rational::new((1 + below(rng, 30) as i64).into(), (1 + below(rng, 10) as i64).into()))
    }
}

fn lit(rng: &mut Rng) -> RealExpr {
    RealExpr::Lit(Rational::new((1 + below(rng, 30) as i64).into(), (1 + below(rng, 1000) as i64).into()))
}

fn ed_cost(rng: &mut Rng) -> EDCost {
    if below(rng, 20) == 0 {
        EDCost::Inf
    } else {
        EDCost::Finite { eps: lit(rng), delta: lit(rng) }
    }
}

fn rdp_cost(alpha: &Rational) -> impl FnMut(&mut Rng) -> RDPCost + '_ {
    move |rng| RDPCost::Finite { alpha: alpha.clone(), eps: lit(rng) }
}

fn ed_close(a: &PEnv<EDCost>, b: &PEnv<EDCost>) -> bool {
    let close = |x: &RealExpr, y: &RealExpr| match (x.eval(), y.eval()) {
        (Ok(u), Ok(v)) => (u - v).abs() <= 1e-9 * (1.0 + u.abs()),
        _ => false,
    };
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|((ka, va), (kb, vb))| {
            ka == kb
                && match (va, vb) {
                    (EDCost::Inf, EDCost::Inf) => true,
                    (EDCost::Finite { eps: e1, delta: d1 }, EDCost::Finite { eps: e2, delta: d2 }) => {
                        close(e1, e2) && close(d1, d2)
                    }
                    _ => false,
                }
        })
}

fn rdp_close(a: &PEnv<RDPCost>, b: &PEnv<RDPCost>) -> bool {
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|((ka, va), (kb, vb))| {
            ka == kb
                && match (va, vb) {
                    (RDPCost::Inf, RDPCost::Inf) => true,
                    (RDPCost::Finite { alpha: a1, eps: e1 }, RDPCost::Finite { alpha: a2, eps: e2 }) => {
                        a1 == a2 && matches!((e1.eval(), e2.eval()), (Ok(u), Ok(v)) if (u - v).abs() <= 1e-9 * (1.0 + u.abs()))
                    }
                    _ => false,
                }
        })
}

type Check = (&'static str, fn(&mut Rng) -> bool);

fn checks() -> Vec<Check> {
    vec![
        ("plus_respects", |rng| {
            let (r1, r3, r) = (rat(rng), rat(rng), nonneg(rng));
            let r2 = within(rng, &r1, &r);
            ((&r1 + &r3) - (&r2 + &r3)).abs() <= r
        }),
        ("times_respects", |rng| {
            let (r1, r) = (rat(rng), nonneg(rng));
            let r3 = if below(rng, 10) == 0 { Rational::zero() } else { rat(rng) };
            let r2 = within(rng, &r1, &r);
            let d = (&r3 * &r1 - &r3 * &r2).abs();
            d <= r3.abs() * r && (!r3.is_zero() || d.is_zero())
        }),
        ("triangle", |rng| {
            let (r1, ra, rb) = (rat(rng), nonneg(rng), nonneg(rng));
            let r2 = within(rng, &r1, &ra);
            let r3 = within(rng, &r2, &rb);
            (r1 - r3).abs() <= ra + rb
        }),
        ("senv_plus_monoid", |rng| {
            let (a, b, c) = (senv(rng), senv(rng), senv(rng));
            senv_plus(&a, &senv_plus(&b, &c)) == senv_plus(&senv_plus(&a, &b), &c)
                && senv_plus(&a, &SEnv::empty()) == a
                && senv_plus(&SEnv::empty(), &a) == a
                && senv_plus(&a, &b) == senv_plus(&b, &a)
        }),
        ("senv_join_laws", |rng| {
            let (a, b, c) = (senv(rng), senv(rng), senv(rng));
            senv_join(&a, &senv_join(&b, &c)) == senv_join(&senv_join(&a, &b), &c)
                && senv_join(&a, &b) == senv_join(&b, &a)
                && senv_join(&a, &a) == a
                && senv_join(&a, &SEnv::empty()) == a
        }),
        ("senv_scale_laws", |rng| {
            let (a, b) = (senv(rng), senv(rng));
            let k = Sens::Finite(below(rng, 6));
            senv_scale(Sens::ONE, &a) == a
                && senv_scale(Sens::ZERO, &a) == SEnv::empty()
                && senv_scale(k, &senv_plus(&a, &b)) == senv_plus(&senv_scale(k, &a), &senv_scale(k, &b))
        }),
        ("truncate_laws", |rng| {
            let (a, b) = (senv(rng), senv(rng));
            let c = eps_cost(rng);
            let k = Sens::Finite(1 + below(rng, 5));
            senv_truncate(&c, &senv_scale(k, &a)) == senv_truncate(&c, &a)
                && senv_truncate(&c, &senv_plus(&a, &b)) == senv_truncate(&c, &senv_join(&a, &b))
                && senv_truncate(&c, &SEnv::empty()) == PEnv::empty()
        }),
        ("eps_seq_comp_monoid", |rng| {
            let (a, b, c) = (penv(rng, eps_cost), penv(rng, eps_cost), penv(rng, eps_cost));
            let k = below(rng, 9);
            let mut iter = PEnv::empty();
            for _ in 0..k {
                iter = eps_seq_comp(&iter, &a);
            }
            eps_seq_comp(&a, &eps_seq_comp(&b, &c)) == eps_seq_comp(&eps_seq_comp(&a, &b), &c)
                && eps_seq_comp(&a, &PEnv::empty()) == a
                && eps_seq_comp(&PEnv::empty(), &a) == a
                && (scale_priv(k, &a) == iter
                    || (k == 0 && scale_priv(k, &a).iter().all(|(_, v)| crate::env::EnvValue::is_zero(v))))
        }),
        ("ed_seq_comp_monoid", |rng| {
            let (a, b, c) = (penv(rng, ed_cost), penv(rng, ed_cost), penv(rng, ed_cost));
            let k = 1 + below(rng, 8);
            let mut iter = PEnv::empty();
            for _ in 0..k {
                iter = ed_seq_comp(&iter, &a);
            }
            ed_close(&ed_seq_comp(&a, &ed_seq_comp(&b, &c)), &ed_seq_comp(&ed_seq_comp(&a, &b), &c))
                && ed_seq_comp(&a, &PEnv::empty()) == a
                && ed_seq_comp(&PEnv::empty(), &a) == a
                && ed_close(&scale_priv(k, &a), &iter)
        }),
        ("rdp_seq_comp_monoid", |rng| {
            let alpha = Rational::new((2 + below(rng, 30) as i64).into(), 2.into()) + Rational::new(1.into(), 3.into());
            let mut cost = rdp_cost(&alpha);
            let (a, b, c) = (penv(rng, &mut cost), penv(rng, &mut cost), penv(rng, &mut cost));
            let k = 1 + below(rng, 8);
            let comp = |x: &PEnv<RDPCost>, y: &PEnv<RDPCost>| rdp_seq_comp(x, y).expect("equal orders compose");
            let mut iter = PEnv::empty();
            for _ in 0..k {
                iter = comp(&iter, &a);
            }
            rdp_close(&comp(&a, &comp(&b, &c)), &comp(&comp(&a, &b), &c))
                && comp(&a, &PEnv::empty()) == a
                && rdp_close(&scale_priv(k, &a), &iter)
        }),
    ]
}

/// Run every check `trials` times.
pub fn check_algebra_laws(trials: usize, seed: u64) -> VerifyReport {
    let mut rng = Rng::from_seed(seed);
    let mut details = BTreeMap::new();
    let mut violations = Vec::new();
    for (name, check) in checks() {
        let mut failures = 0usize;
        for t in 0..trials {
            let mut trial_rng = rng.split();
            if !check(&mut trial_rng) {
                failures += 1;
                if violations.len() < 20 {
                    violations.push(super::Violation {
                        trial: t,
                        detail: format!("{name} failed"),
                        bound: 0.0,
                        observed: 1.0,
                    });
                }
            }
        }
        details.insert(name.to_string(), serde_json::json!({"trials": trials, "failures": failures}));
    }
    let pass = violations.is_empty();
    VerifyReport {
        kind: "lemmas",
        trials,
        max_observed: violations.len() as f64,
        pass,
        violations,
        seed: Some(seed),
        details,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemmas_hold() {
        let r = check_algebra_laws(2_000, 1);
        assert!(r.pass, "{r}");
        assert_eq!(r.details.len(), checks().len());
    }

    #[test]
    fn times_respects_degenerate_scaling() {
        let r1 = Rational::new(3.into(), 2.into());
        let r2 = Rational::new(7.into(), 4.into());
        let r3 = Rational::zero();
        assert!((&r3 * r1 - &r3 * r2).is_zero());
    }
}
