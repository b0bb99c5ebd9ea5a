//! Symbolic nonnegative reals used as (ε, δ) and RDP costs.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Float, FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::env::{Cost, EnvValue};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RealError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("division by zero in {0}")]
    DivideByZero(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RealExpr {
    Lit(Rational),
    Add(Box<RealExpr>, Box<RealExpr>),
    Mul(Box<RealExpr>, Box<RealExpr>),
    Div(Box<RealExpr>, Box<RealExpr>),
    Sqrt(Box<RealExpr>),
    Ln(Box<RealExpr>),
    Inf,
}

impl RealExpr {
    pub fn lit(r: Rational) -> Result<Self, RealError> {
        if r.is_negative() {
            return Err(RealError::DomainError(format!("negative literal {}", format_rational(&r))));
        }
        Ok(RealExpr::Lit(r))
    }

    pub fn int(n: u64) -> Self {
        RealExpr::Lit(Rational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        RealExpr::int(0)
    }

    pub fn as_lit(&self) -> Option<&Rational> {
        match self {
            RealExpr::Lit(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero_lit(&self) -> bool {
        matches!(self, RealExpr::Lit(r) if r.is_zero())
    }

    fn is_one_lit(&self) -> bool {
        matches!(self, RealExpr::Lit(r) if r.is_one())
    }

    pub fn add(a: RealExpr, b: RealExpr) -> RealExpr {
        match (a, b) {
            (RealExpr::Lit(x), RealExpr::Lit(y)) => RealExpr::Lit(x + y),
            (a, b) if a.is_zero_lit() => b,
            (a, b) if b.is_zero_lit() => a,
            (a, b) => RealExpr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: RealExpr, b: RealExpr) -> RealExpr {
        match (a, b) {
            (RealExpr::Lit(x), RealExpr::Lit(y)) => RealExpr::Lit(x * y),
            (a, b) if a.is_one_lit() => b,
            (a, b) if b.is_one_lit() => a,
            (a, b) => RealExpr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: RealExpr, b: RealExpr) -> Result<RealExpr, RealError> {
        if b.is_zero_lit() {
            return Err(RealError::DivideByZero(format!("{a}/0")));
        }
        Ok(match (a, b) {
            (RealExpr::Lit(x), RealExpr::Lit(y)) => RealExpr::Lit(x / y),
            (a, b) if b.is_one_lit() => a,
            (a, b) => RealExpr::Div(Box::new(a), Box::new(b)),
        })
    }

    pub fn sqrt(a: RealExpr) -> Result<RealExpr, RealError> {
        if let RealExpr::Lit(r) = &a {
            if r.is_negative() {
                return Err(RealError::DomainError(format!("sqrt of {}", format_rational(r))));
            }
        }
        Ok(RealExpr::Sqrt(Box::new(a)))
    }

    /// Logarithms are only built over arguments ≥ 1, keeping the value nonnegative.
    pub fn ln(a: RealExpr) -> Result<RealExpr, RealError> {
        if let RealExpr::Lit(r) = &a {
            if *r < Rational::one() {
                return Err(RealError::DomainError(format!("ln of {} < 1", format_rational(r))));
            }
        }
        Ok(RealExpr::Ln(Box::new(a)))
    }

    pub fn eval(&self) -> Result<f64, RealError> {
        self.eval_as::<f64>()
    }

    pub fn eval_as<F: Float + FromPrimitive>(&self) -> Result<F, RealError> {
        Ok(match self {
            RealExpr::Lit(r) => F::from_f64(rational_to_f64(r)).unwrap_or_else(F::nan),
            RealExpr::Add(a, b) => a.eval_as::<F>()? + b.eval_as::<F>()?,
            RealExpr::Mul(a, b) => a.eval_as::<F>()? * b.eval_as::<F>()?,
            RealExpr::Div(a, b) => {
                let d = b.eval_as::<F>()?;
                if d.is_zero() {
                    return Err(RealError::DivideByZero(self.to_string()));
                }
                a.eval_as::<F>()? / d
            }
            RealExpr::Sqrt(a) => {
                let x = a.eval_as::<F>()?;
                if x < F::zero() {
                    return Err(RealError::DomainError(self.to_string()));
                }
                x.sqrt()
            }
            RealExpr::Ln(a) => {
                let x = a.eval_as::<F>()?;
                if x <= F::zero() {
                    return Err(RealError::DomainError(self.to_string()));
                }
                x.ln()
            }
            RealExpr::Inf => F::infinity(),
        })
    }

    /// Structural equality. Literals are always stored reduced, so `1/2` and
    /// `2/4` compare equal while `sqrt(4)` and `2` do not.
    pub fn struct_eq(&self, other: &RealExpr) -> bool {
        self == other
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: sum context, 1: product operand, 2: right operand of a product
        let needs = |own: u8| own < prec;
        match self {
            RealExpr::Lit(r) => {
                if r.is_integer() || prec == 0 {
                    f.write_str(&format_rational(r))
                } else {
                    write!(f, "({})", format_rational(r))
                }
            }
            RealExpr::Add(a, b) => {
                if needs(0) {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 0)?;
                f.write_str(" + ")?;
                b.fmt_prec(f, 1)?;
                if needs(0) {
                    f.write_str(")")?;
                }
                Ok(())
            }
            RealExpr::Mul(a, b) | RealExpr::Div(a, b) => {
                let op = if matches!(self, RealExpr::Mul(..)) { "*" } else { "/" };
                if needs(1) {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 1)?;
                f.write_str(op)?;
                b.fmt_prec(f, 2)?;
                if needs(1) {
                    f.write_str(")")?;
                }
                Ok(())
            }
            RealExpr::Sqrt(a) => {
                f.write_str("sqrt(")?;
                a.fmt_prec(f, 0)?;
                f.write_str(")")
            }
            RealExpr::Ln(a) => {
                f.write_str("ln(")?;
                a.fmt_prec(f, 0)?;
                f.write_str(")")
            }
            RealExpr::Inf => f.write_str("inf"),
        }
    }
}

impl fmt::Display for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Cost of (ε, δ)-differential privacy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EDCost {
    Finite { eps: RealExpr, delta: RealExpr },
    Inf,
}

impl EnvValue for EDCost {
    fn is_zero(&self) -> bool {
        matches!(self, EDCost::Finite { eps, delta } if eps.is_zero_lit() && delta.is_zero_lit())
    }
}

impl Cost for EDCost {
    fn infinity() -> Self {
        EDCost::Inf
    }
}

impl fmt::Display for EDCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EDCost::Finite { eps, delta } => write!(f, "({eps}, {delta})"),
            EDCost::Inf => f.write_str("inf"),
        }
    }
}

/// Cost of Rényi differential privacy at order `alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RDPCost {
    Finite { alpha: Rational, eps: RealExpr },
    Inf,
}

impl EnvValue for RDPCost {
    fn is_zero(&self) -> bool {
        matches!(self, RDPCost::Finite { eps, .. } if eps.is_zero_lit())
    }
}

impl Cost for RDPCost {
    fn infinity() -> Self {
        RDPCost::Inf
    }
}

impl fmt::Display for RDPCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RDPCost::Finite { alpha, eps } => write!(f, "({}, {eps})", format_rational(alpha)),
            RDPCost::Inf => f.write_str("inf"),
        }
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `n` for integers, `n/d` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse an exact decimal such as `-12`, `0.00001` or `3.25`.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if body.contains('.') && (frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = Rational::new(digits, denom);
    Some(if neg { -r } else { r })
}

pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn lit(n: i64, d: i64) -> RealExpr {
        RealExpr::lit(q(n, d)).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(lit(5, 2).eval().unwrap(), 2.5);
        let e = RealExpr::sqrt(RealExpr::Mul(Box::new(lit(2, 1)), Box::new(lit(8, 1)))).unwrap();
        assert_eq!(e.eval().unwrap(), 4.0);
        assert_eq!(RealExpr::Inf.eval().unwrap(), f64::INFINITY);
    }

    #[test]
    fn advanced_composition_expression() {
        // 2 * (1/10) * sqrt(200 * ln(100000)), built unfolded as written
        let e = RealExpr::Mul(
            Box::new(RealExpr::Mul(Box::new(lit(2, 1)), Box::new(lit(1, 10)))),
            Box::new(RealExpr::Sqrt(Box::new(RealExpr::Mul(
                Box::new(lit(200, 1)),
                Box::new(RealExpr::Ln(Box::new(lit(100000, 1)))),
            )))),
        );
        // independent evaluation: 2*0.1*sqrt(200*ln(1e5)) = 9.597051824376162
        assert!((e.eval().unwrap() - 9.597051824376162).abs() < 1e-9);
        assert_eq!(e.to_string(), "2*(1/10)*sqrt(200*ln(100000))");
    }

    #[test]
    fn folding() {
        assert_eq!(RealExpr::add(lit(1, 1), lit(2, 1)), lit(3, 1));
        let s = RealExpr::sqrt(lit(2, 1)).unwrap();
        assert_eq!(RealExpr::add(lit(0, 1), s.clone()), s);
        assert!(matches!(s, RealExpr::Sqrt(_)));
        assert_eq!(RealExpr::mul(lit(1, 1), s.clone()), s);
        assert_eq!(RealExpr::div(lit(1, 1), lit(10, 1)).unwrap(), lit(1, 10));
    }

    #[test]
    fn struct_eq_examples() {
        assert!(lit(1, 2).struct_eq(&lit(2, 4)));
        assert!(!RealExpr::sqrt(lit(4, 1)).unwrap().struct_eq(&lit(2, 1)));
    }

    #[test]
    fn domain_errors() {
        assert!(RealExpr::lit(q(-1, 2)).is_err());
        assert!(RealExpr::ln(lit(1, 2)).is_err());
        assert!(matches!(RealExpr::div(lit(1, 1), lit(0, 1)), Err(RealError::DivideByZero(_))));
        let d = RealExpr::Div(Box::new(lit(1, 1)), Box::new(RealExpr::Add(Box::new(lit(0, 1)), Box::new(lit(0, 1)))));
        assert!(matches!(d.eval(), Err(RealError::DivideByZero(_))));
    }

    #[test]
    fn eval_generic_f32() {
        let e = RealExpr::sqrt(lit(16, 1)).unwrap();
        assert_eq!(e.eval_as::<f32>().unwrap(), 4.0f32);
    }

    #[test]
    fn decimals() {
        assert_eq!(parse_decimal("0.00001"), Some(q(1, 100000)));
        assert_eq!(parse_decimal("-3.25"), Some(q(-13, 4)));
        assert_eq!(parse_decimal("7"), Some(q(7, 1)));
        assert_eq!(parse_decimal("1."), None);
        assert_eq!(parse_decimal(".5"), None);
    }

    pub(crate) fn arb_real() -> impl Strategy<Value = RealExpr> {
        let leaf = (1i64..50, 1i64..20).prop_map(|(n, d)| lit(n, d));
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| RealExpr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| RealExpr::mul(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| RealExpr::div(a, b).unwrap()),
                inner.clone().prop_map(|a| RealExpr::sqrt(a).unwrap()),
                inner.prop_map(|a| RealExpr::ln(RealExpr::add(RealExpr::int(1), a)).unwrap()),
            ]
        })
    }

    /// Raise every literal by `bump`.
    fn bump_lits(e: &RealExpr, bump: &Rational) -> RealExpr {
        match e {
            RealExpr::Lit(r) => RealExpr::Lit(r + bump),
            RealExpr::Add(a, b) => RealExpr::Add(Box::new(bump_lits(a, bump)), Box::new(bump_lits(b, bump))),
            RealExpr::Mul(a, b) => RealExpr::Mul(Box::new(bump_lits(a, bump)), Box::new(bump_lits(b, bump))),
            RealExpr::Div(a, b) => RealExpr::Div(Box::new(bump_lits(a, bump)), Box::new(b.as_ref().clone())),
            RealExpr::Sqrt(a) => RealExpr::Sqrt(Box::new(bump_lits(a, bump))),
            RealExpr::Ln(a) => RealExpr::Ln(Box::new(bump_lits(a, bump))),
            RealExpr::Inf => RealExpr::Inf,
        }
    }

    proptest! {
        #[test]
        fn monotone_in_literals(e in arb_real(), n in 1i64..10) {
            // divisors are held fixed, so only numerators grow
            let up = bump_lits(&e, &q(n, 7));
            prop_assert!(up.eval().unwrap() >= e.eval().unwrap());
        }

        #[test]
        fn folding_preserves_value(a in 0i64..100, b in 1i64..100, c in 0i64..100, d in 1i64..100) {
            let folded = RealExpr::add(lit(a, b), RealExpr::mul(lit(c, d), lit(b, d)));
            let exact = q(a, b) + q(c, d) * q(b, d);
            prop_assert_eq!(folded, RealExpr::Lit(exact));
        }

        #[test]
        fn struct_eq_implies_eval_eq(e in arb_real()) {
            let copy = e.clone();
            prop_assert!(e.struct_eq(&copy));
            prop_assert_eq!(e.eval().unwrap().to_bits(), copy.eval().unwrap().to_bits());
        }
    }
}
