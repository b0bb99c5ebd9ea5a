use std::cmp::Ordering;
use std::fmt;
use std::rc::Rc;

use crate::mechanisms::Dist;
use crate::syntax::Expr;

/// Runtime values. Sensitive and plain data share one representation:
/// sets, matrices and dictionaries are lists (of rows, of key/value pairs).
#[derive(Clone)]
pub enum Value {
    Bool(bool),
    Real(f64),
    Pair(Rc<Value>, Rc<Value>),
    List(Rc<Vec<Value>>),
    Closure(Rc<Closure>),
    /// A privacy-monad computation, run when bound or at the top level.
    Pm(Rc<Pm>),
    Dist(Rc<Dist<Value>>),
}

pub struct Closure {
    pub self_name: Option<String>,
    pub param: String,
    pub body: Rc<Expr>,
    pub env: ValueEnv,
}

/// Suspended privacy-monad computations.
pub enum Pm {
    Ret(Value),
    Laplace { center: f64, scale: f64 },
    Gauss { center: f64, sigma: f64 },
    ListLaplace { xs: Vec<f64>, scale: f64 },
    ListGauss { xs: Vec<f64>, sigma: f64 },
    Bind { first: Rc<Pm>, var: String, body: Rc<Expr>, env: ValueEnv },
    Loop { k: u64, init: Value, f: Value },
    ExpMech { eps: f64, scores: Vec<f64> },
    ExpNLoop { k: u64, eps: f64, queries: Vec<(f64, f64)>, data: Vec<(f64, f64)>, syn: Vec<(f64, f64)> },
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Rc::new(a), Rc::new(b))
    }

    pub fn list(xs: Vec<Value>) -> Value {
        Value::List(Rc::new(xs))
    }

    pub fn reals(xs: impl IntoIterator<Item = f64>) -> Value {
        Value::list(xs.into_iter().map(Value::Real).collect())
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::{json, Value as J};
        match self {
            Value::Bool(b) => J::Bool(*b),
            Value::Real(x) => serde_json::Number::from_f64(*x).map_or_else(|| J::String(x.to_string()), J::Number),
            Value::Pair(a, b) => J::Array(vec![a.to_json(), b.to_json()]),
            Value::List(xs) => J::Array(xs.iter().map(Value::to_json).collect()),
            Value::Closure(_) => J::String("<closure>".into()),
            Value::Pm(_) => J::String("<pm>".into()),
            Value::Dist(d) => J::Array(d.iter().map(|(v, m)| json!({"value": v.to_json(), "mass": m})).collect()),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Real(_) => 1,
            Value::Pair(..) => 2,
            Value::List(_) => 3,
            Value::Closure(_) => 4,
            Value::Pm(_) => 5,
            Value::Dist(_) => 6,
        }
    }
}

/// A total order on data values, used to merge distribution supports.
/// Closures, computations and distributions compare by kind only.
pub fn cmp_value(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Real(x), Value::Real(y)) => x.total_cmp(y),
        (Value::Pair(a1, a2), Value::Pair(b1, b2)) => cmp_value(a1, b1).then_with(|| cmp_value(a2, b2)),
        (Value::List(xs), Value::List(ys)) => {
            for (x, y) in xs.iter().zip(ys.iter()) {
                let o = cmp_value(x, y);
                if o != Ordering::Equal {
                    return o;
                }
            }
            xs.len().cmp(&ys.len())
        }
        _ => a.rank().cmp(&b.rank()),
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Closure(a), Value::Closure(b)) => Rc::ptr_eq(a, b),
            (Value::Pm(a), Value::Pm(b)) => Rc::ptr_eq(a, b),
            (Value::Dist(a), Value::Dist(b)) => a == b,
            _ => self.rank() == other.rank() && cmp_value(self, other) == Ordering::Equal,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
            Value::List(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
            Value::Closure(_) => f.write_str("<closure>"),
            Value::Pm(_) => f.write_str("<pm>"),
            Value::Dist(d) => {
                f.write_str("{")?;
                for (i, (v, m)) in d.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v} -> {m}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Immutable variable environment; extension shares the tail.
#[derive(Clone, Default)]
pub struct ValueEnv(Option<Rc<Frame>>);

struct Frame {
    name: String,
    value: Value,
    next: ValueEnv,
}

impl ValueEnv {
    pub fn new() -> Self {
        ValueEnv(None)
    }

    pub fn extend(&self, name: impl Into<String>, value: Value) -> ValueEnv {
        ValueEnv(Some(Rc::new(Frame { name: name.into(), value, next: self.clone() })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(frame) = cur {
            if frame.name == name {
                return Some(&frame.value);
            }
            cur = &frame.next.0;
        }
        None
    }
}

impl fmt::Debug for ValueEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<env>")
    }
}
