//! Source inputs from JSON.
//!
//! A number for `sreal`, a two-element array for pairs, arrays for lists
//! and sets, an array of `c`-element rows for an `r × c` matrix, and for a
//! dictionary either an object with numeric string keys or an array of
//! `[key, value]` pairs.

use serde_json::Value as J;

use super::value::Value;
use super::{EvalError, Inputs};
use crate::syntax::{PlainType, Program, SType};

type R<T> = Result<T, String>;

fn number(j: &J) -> R<f64> {
    j.as_f64().ok_or_else(|| format!("expected a number, found {j}"))
}

fn array(j: &J) -> R<&Vec<J>> {
    j.as_array().ok_or_else(|| format!("expected an array, found {j}"))
}

fn two(j: &J) -> R<(&J, &J)> {
    match array(j)?.as_slice() {
        [a, b] => Ok((a, b)),
        _ => Err(format!("expected a two-element array, found {j}")),
    }
}

fn plain(t: &PlainType, j: &J) -> R<Value> {
    Ok(match t {
        PlainType::Bool => Value::Bool(j.as_bool().ok_or_else(|| format!("expected a boolean, found {j}"))?),
        PlainType::Real => Value::Real(number(j)?),
        PlainType::Prod(a, b) => {
            let (x, y) = two(j)?;
            Value::pair(plain(a, x)?, plain(b, y)?)
        }
        PlainType::List(a) => Value::list(array(j)?.iter().map(|x| plain(a, x)).collect::<R<_>>()?),
    })
}

fn sensitive(t: &SType, j: &J) -> R<Value> {
    Ok(match t {
        SType::SReal(_) => Value::Real(number(j)?),
        SType::SProd(_, a, b) => {
            let (x, y) = two(j)?;
            Value::pair(sensitive(a, x)?, sensitive(b, y)?)
        }
        SType::SList(_, a) => Value::list(array(j)?.iter().map(|x| sensitive(a, x)).collect::<R<_>>()?),
        SType::SSet(p) => Value::list(array(j)?.iter().map(|x| plain(p, x)).collect::<R<_>>()?),
        SType::SMatrix(_, r, c, a) => {
            let rows = array(j)?;
            if rows.len() as u64 != *r {
                return Err(format!("expected {r} rows, found {}", rows.len()));
            }
            let mut out = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let cells = array(row)?;
                if cells.len() as u64 != *c {
                    return Err(format!("row {} has {} entries, expected {c}", i + 1, cells.len()));
                }
                out.push(Value::list(cells.iter().map(|x| sensitive(a, x)).collect::<R<_>>()?));
            }
            Value::list(out)
        }
        SType::SDict(_, k, v) => {
            let mut entries = Vec::new();
            match j {
                J::Object(map) => {
                    for (key, val) in map {
                        let kj: J = key
                            .parse::<f64>()
                            .ok()
                            .and_then(serde_json::Number::from_f64)
                            .map(J::Number)
                            .ok_or_else(|| format!("dictionary key `{key}` is not a number"))?;
                        entries.push((sensitive(k, &kj)?, sensitive(v, val)?));
                    }
                }
                _ => {
                    for e in array(j)? {
                        let (a, b) = two(e)?;
                        entries.push((sensitive(k, a)?, sensitive(v, b)?));
                    }
                }
            }
            entries.sort_by(|a, b| super::cmp_value(&a.0, &b.0));
            Value::list(entries.into_iter().map(|(a, b)| Value::pair(a, b)).collect())
        }
    })
}

/// The runtime value of one source's input.
pub fn value_from_json(source: &str, t: &SType, j: &J) -> Result<Value, EvalError> {
    sensitive(t, j).map_err(|message| EvalError::ShapeMismatch { source_name: source.to_string(), message })
}

/// Inputs for every source of the program from a JSON object.
pub fn inputs_from_json(p: &Program, j: &J) -> Result<Inputs, EvalError> {
    let obj = j.as_object().ok_or_else(|| EvalError::ShapeMismatch {
        source_name: String::new(),
        message: "inputs must be a JSON object keyed by source name".into(),
    })?;
    let mut out = Inputs::new();
    for s in &p.sources {
        let v = obj.get(&s.name).ok_or_else(|| EvalError::MissingSource(s.name.clone()))?;
        out.insert(s.name.clone(), value_from_json(&s.name, &s.ty, v)?);
    }
    Ok(out)
}
