//! Sensitivity and privacy environments.
//!
//! An environment maps data sources to a sensitivity (`SEnv`) or to a
//! privacy cost (`PEnv<C>`). Zero entries are never stored, so an absent
//! key means zero and structural equality is environment equality.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("invalid source name {0:?}")]
    InvalidSourceName(String),
}

/// Name of a data source. Ordered byte-wise.
///
/// Names created with [`SourceName::skolem`] start with `'` and can never
/// collide with a user-declared source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceName(String);

impl SourceName {
    pub fn new(name: impl Into<String>) -> Result<Self, EnvError> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(SourceName(name))
        } else {
            Err(EnvError::InvalidSourceName(name))
        }
    }

    /// A rigid placeholder source standing for an environment variable.
    pub fn skolem(label: &str) -> Self {
        SourceName(format!("'{label}"))
    }

    pub fn is_skolem(&self) -> bool {
        self.0.starts_with('\'')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SourceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A sensitivity: a natural number or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sens {
    Finite(u64),
    Inf,
}

impl Sens {
    pub const ZERO: Sens = Sens::Finite(0);
    pub const ONE: Sens = Sens::Finite(1);

    pub fn is_zero(self) -> bool {
        self == Sens::ZERO
    }

    /// Overflow saturates to infinity, which only ever over-approximates.
    pub fn add(self, other: Sens) -> Sens {
        match (self, other) {
            (Sens::Finite(a), Sens::Finite(b)) => a.checked_add(b).map_or(Sens::Inf, Sens::Finite),
            _ => Sens::Inf,
        }
    }

    /// Multiplication with `0 * inf = 0`.
    pub fn mul(self, other: Sens) -> Sens {
        match (self, other) {
            (Sens::Finite(0), _) | (_, Sens::Finite(0)) => Sens::ZERO,
            (Sens::Finite(a), Sens::Finite(b)) => a.checked_mul(b).map_or(Sens::Inf, Sens::Finite),
            _ => Sens::Inf,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sens::Finite(n) => n as f64,
            Sens::Inf => f64::INFINITY,
        }
    }

    pub fn to_rational(self) -> Option<Rational> {
        match self {
            Sens::Finite(n) => Some(Rational::from_integer(n.into())),
            Sens::Inf => None,
        }
    }
}

impl fmt::Display for Sens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sens::Finite(n) => write!(f, "{n}"),
            Sens::Inf => f.write_str("inf"),
        }
    }
}

/// Values that can sit in an environment.
pub trait EnvValue: Clone + PartialEq + fmt::Debug {
    fn is_zero(&self) -> bool;
}

/// Costs that can be produced by truncating a sensitivity environment.
pub trait Cost: EnvValue {
    fn infinity() -> Self;
}

impl EnvValue for Sens {
    fn is_zero(&self) -> bool {
        Sens::is_zero(*self)
    }
}

/// Pure differential privacy cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EpsCost {
    Finite(Rational),
    Inf,
}

impl EpsCost {
    pub fn finite(r: Rational) -> Self {
        assert!(r >= Rational::zero(), "negative privacy cost");
        EpsCost::Finite(r)
    }

    pub fn add(&self, other: &EpsCost) -> EpsCost {
        match (self, other) {
            (EpsCost::Finite(a), EpsCost::Finite(b)) => EpsCost::Finite(a + b),
            _ => EpsCost::Inf,
        }
    }

    pub fn scale(&self, k: u64) -> EpsCost {
        match self {
            _ if k == 0 => EpsCost::Finite(Rational::zero()),
            EpsCost::Finite(a) => EpsCost::Finite(a * Rational::from_integer(k.into())),
            EpsCost::Inf => EpsCost::Inf,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            EpsCost::Finite(r) => crate::real::rational_to_f64(r),
            EpsCost::Inf => f64::INFINITY,
        }
    }
}

impl EnvValue for EpsCost {
    fn is_zero(&self) -> bool {
        matches!(self, EpsCost::Finite(r) if r.is_zero())
    }
}

impl Cost for EpsCost {
    fn infinity() -> Self {
        EpsCost::Inf
    }
}

impl fmt::Display for EpsCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsCost::Finite(r) => f.write_str(&crate::real::format_rational(r)),
            EpsCost::Inf => f.write_str("inf"),
        }
    }
}

/// Ordered map from sources to nonzero values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Env<V> {
    entries: BTreeMap<SourceName, V>,
}

pub type SEnv = Env<Sens>;
pub type PEnv<C> = Env<C>;

impl<V> Default for Env<V> {
    fn default() -> Self {
        Env { entries: BTreeMap::new() }
    }
}

impl<V: EnvValue> Env<V> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(name: SourceName, value: V) -> Self {
        Self::from_entries([(name, value)])
    }

    /// Later duplicates overwrite earlier ones; zeros are dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (SourceName, V)>) -> Self {
        let entries = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Env { entries }
    }

    pub fn get(&self, name: &SourceName) -> Option<&V> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SourceName, &V)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &SourceName> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when keys are strictly increasing and no zero value is stored.
    pub fn is_canonical(&self) -> bool {
        let ordered = self.entries.keys().zip(self.entries.keys().skip(1)).all(|(a, b)| a < b);
        ordered && self.entries.values().all(|v| !v.is_zero())
    }

    /// Combine two environments key by key. A key present on one side only
    /// keeps its value, so `f` must have zero as its identity.
    pub fn try_union_with<E>(
        &self,
        other: &Self,
        mut f: impl FnMut(&SourceName, &V, &V) -> Result<V, E>,
    ) -> Result<Self, E> {
        let mut out = self.entries.clone();
        for (k, b) in &other.entries {
            let v = match self.entries.get(k) {
                Some(a) => f(k, a, b)?,
                None => b.clone(),
            };
            out.insert(k.clone(), v);
        }
        out.retain(|_, v| !v.is_zero());
        Ok(Env { entries: out })
    }

    pub fn union_with(&self, other: &Self, mut f: impl FnMut(&V, &V) -> V) -> Self {
        self.try_union_with::<std::convert::Infallible>(other, |_, a, b| Ok(f(a, b)))
            .unwrap_or_else(|e| match e {})
    }

    pub fn map_values<W: EnvValue>(&self, mut f: impl FnMut(&V) -> W) -> Env<W> {
        Env::from_entries(self.entries.iter().map(|(k, v)| (k.clone(), f(v))))
    }

    pub fn try_map_values<W: EnvValue, E>(
        &self,
        mut f: impl FnMut(&SourceName, &V) -> Result<W, E>,
    ) -> Result<Env<W>, E> {
        let mut out = Vec::with_capacity(self.entries.len());
        for (k, v) in &self.entries {
            out.push((k.clone(), f(k, v)?));
        }
        Ok(Env::from_entries(out))
    }
}

impl<V: EnvValue + fmt::Display> fmt::Display for Env<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}:{v}")?;
        }
        f.write_str("]")
    }
}

pub fn senv_plus(a: &SEnv, b: &SEnv) -> SEnv {
    a.union_with(b, |x, y| x.add(*y))
}

pub fn senv_join(a: &SEnv, b: &SEnv) -> SEnv {
    a.union_with(b, |x, y| (*x).max(*y))
}

pub fn senv_scale(k: Sens, a: &SEnv) -> SEnv {
    a.map_values(|v| k.mul(*v))
}

pub fn senv_truncate<C: EnvValue>(c: &C, a: &SEnv) -> PEnv<C> {
    a.map_values(|_| c.clone())
}

pub fn senv_max(a: &SEnv) -> Sens {
    a.iter().map(|(_, v)| *v).max().unwrap_or(Sens::ZERO)
}

pub fn senv_leq(a: &SEnv, b: &SEnv) -> bool {
    a.iter().all(|(k, v)| *v <= b.get(k).copied().unwrap_or(Sens::ZERO))
}

pub fn senv_scale_to_inf<C: Cost>(a: &SEnv) -> PEnv<C> {
    a.map_values(|_| C::infinity())
}

/// Remove the entries whose key satisfies `drop`.
pub fn senv_without(a: &SEnv, mut drop: impl FnMut(&SourceName) -> bool) -> SEnv {
    Env::from_entries(a.iter().filter(|(k, _)| !drop(k)).map(|(k, v)| (k.clone(), *v)))
}
