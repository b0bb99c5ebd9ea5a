//! Runtime behaviour of the built-in primitives.

use std::rc::Rc;

use super::interp::{list, pair, real, stuck, Interp};
use super::value::{Pm, Value};
use super::EvalError;
use crate::mechanisms::{self, Rng};

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn reals(v: &Value) -> Result<Vec<f64>, EvalError> {
    list(v)?.iter().map(real).collect()
}

fn real_pairs(v: &Value) -> Result<Vec<(f64, f64)>, EvalError> {
    list(v)?
        .iter()
        .map(|p| {
            let (a, b) = pair(p)?;
            Ok((real(a)?, real(b)?))
        })
        .collect()
}

fn pm(p: Pm) -> Result<Value, EvalError> {
    Ok(Value::Pm(Rc::new(p)))
}

fn noise_scale(s: f64, eps: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s / eps
    }
}

fn sigma(s: f64, eps: f64, delta: f64) -> Result<f64, EvalError> {
    if s == 0.0 {
        Ok(0.0)
    } else {
        Ok(mechanisms::gauss_sigma(s, eps, delta)?)
    }
}

fn nat(x: f64) -> u64 {
    x.max(0.0) as u64
}

/// Sum of the counts whose key lies in `[lo, hi]`.
fn query(q: (f64, f64), hist: &[(f64, f64)]) -> f64 {
    hist.iter().filter(|(k, _)| q.0 <= *k && *k <= q.1).map(|(_, c)| c).sum()
}

fn mwem_scores(queries: &[(f64, f64)], data: &[(f64, f64)], syn: &[(f64, f64)]) -> Vec<f64> {
    queries.iter().map(|q| (query(*q, data) - query(*q, syn)).abs()).collect()
}

/// Multiplicative weights: `k` rounds of selecting the worst-answered
/// query, measuring it with Laplace noise and reweighting the synthetic
/// histogram towards the measurement.
pub(super) fn mwem(
    k: u64,
    eps: f64,
    queries: &[(f64, f64)],
    data: &[(f64, f64)],
    syn: &[(f64, f64)],
    rng: &mut Rng,
) -> Result<Vec<(f64, f64)>, EvalError> {
    let mut syn = syn.to_vec();
    let total: f64 = syn.iter().map(|(_, w)| w).sum();
    for _ in 0..k {
        let i = mechanisms::exp_mech(&mwem_scores(queries, data, &syn), eps, 1.0, rng)?;
        let q = queries[i];
        let measured = mechanisms::laplace_sample(query(q, data), 1.0 / eps, rng)?;
        let err = measured - query(q, &syn);
        let norm = if total > 0.0 { 2.0 * total } else { 1.0 };
        for (key, w) in syn.iter_mut() {
            if q.0 <= *key && *key <= q.1 {
                *w *= (err / norm).exp();
            }
        }
        let now: f64 = syn.iter().map(|(_, w)| w).sum();
        if now > 0.0 {
            for (_, w) in syn.iter_mut() {
                *w *= total / now;
            }
        }
    }
    Ok(syn)
}

fn nearest(p: (f64, f64), centers: &[(f64, f64)]) -> usize {
    let d = |c: &(f64, f64)| (p.0 - c.0).powi(2) + (p.1 - c.1).powi(2);
    centers
        .iter()
        .enumerate()
        .min_by(|a, b| d(a.1).total_cmp(&d(b.1)))
        .map_or(0, |(i, _)| i)
}

/// Per-row gradient of squared error, each row's gradient clipped to L1
/// norm at most 1, summed over rows.
fn xgradient(theta: &[f64], rows: &[Vec<f64>], ys: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; theta.len()];
    for (x, y) in rows.iter().zip(ys) {
        let pred: f64 = theta.iter().zip(x).map(|(t, xi)| t * xi).sum();
        let row: Vec<f64> = theta.iter().enumerate().map(|(j, _)| (pred - y) * x.get(j).copied().unwrap_or(0.0)).collect();
        let norm: f64 = row.iter().map(|v| v.abs()).sum();
        let k = if norm > 1.0 { 1.0 / norm } else { 1.0 };
        for (gj, rj) in g.iter_mut().zip(row) {
            *gj += rj * k;
        }
    }
    g
}

pub(super) fn call(it: &mut Interp, name: &str, st: &[f64], args: Vec<Value>) -> Result<Value, EvalError> {
    let arg = |i: usize| args.get(i).ok_or_else(|| EvalError::StuckTerm(format!("`{name}` is missing argument {}", i + 1)));
    let stat = |i: usize| st.get(i).copied().ok_or_else(|| EvalError::StuckTerm(format!("`{name}` is missing static {}", i + 1)));
    match name {
        "clip" => Ok(Value::reals(reals(arg(0)?)?.into_iter().map(clamp01))),
        "sum" => Ok(Value::Real(reals(arg(0)?)?.into_iter().sum())),
        "map" | "list_map" => {
            let f = arg(0)?.clone();
            let xs = list(arg(1)?)?.to_vec();
            let mut out = Vec::with_capacity(xs.len());
            for x in xs {
                out.push(it.apply(&f, x)?);
            }
            Ok(Value::list(out))
        }
        "zip" => {
            let (a, b) = (list(arg(0)?)?, list(arg(1)?)?);
            Ok(Value::list(a.iter().zip(b).map(|(x, y)| Value::pair(x.clone(), y.clone())).collect()))
        }
        "head" => Ok(list(arg(0)?)?.first().cloned().unwrap_or(Value::Real(0.0))),
        "tail" => Ok(Value::list(list(arg(0)?)?.iter().skip(1).cloned().collect())),
        "div" => {
            let (a, b) = (real(arg(0)?)?, real(arg(1)?)?);
            Ok(Value::Real(if b == 0.0 { 0.0 } else { a / b }))
        }
        "listLaplace" => pm(Pm::ListLaplace { xs: reals(arg(0)?)?, scale: noise_scale(stat(0)?, stat(1)?) }),
        "gauss" => pm(Pm::Gauss { center: real(arg(0)?)?, sigma: sigma(stat(0)?, stat(1)?, stat(2)?)? }),
        "listGauss" => pm(Pm::ListGauss { xs: reals(arg(0)?)?, sigma: sigma(stat(0)?, stat(1)?, stat(2)?)? }),
        "advloop" | "mloop" => pm(Pm::Loop { k: nat(stat(0)?), init: arg(0)?.clone(), f: arg(1)?.clone() }),
        "conv_eps_to_ed" | "conv_eps_to_rdp" | "conv_rdp_to_ed" => Ok(arg(0)?.clone()),
        "assign" => {
            let centers = real_pairs(arg(0)?)?;
            let pts = real_pairs(arg(1)?)?;
            Ok(Value::list(
                pts.into_iter()
                    .map(|p| {
                        let pt = Value::pair(Value::Real(p.0), Value::Real(p.1));
                        Value::pair(pt, Value::Real(nearest(p, &centers) as f64))
                    })
                    .collect(),
            ))
        }
        "partition" => {
            let k = nat(stat(0)?) as usize;
            let mut parts = vec![Vec::new(); k];
            for x in list(arg(0)?)? {
                let (e, idx) = pair(x)?;
                if k > 0 {
                    let i = (real(idx)?.round().max(0.0) as usize).min(k - 1);
                    parts[i].push(e.clone());
                }
            }
            Ok(Value::list(parts.into_iter().map(Value::list).collect()))
        }
        "totx" => Ok(Value::Real(real_pairs(arg(0)?)?.into_iter().map(|p| clamp01(p.0)).sum())),
        "toty" => Ok(Value::Real(real_pairs(arg(0)?)?.into_iter().map(|p| clamp01(p.1)).sum())),
        "size" => Ok(Value::Real(list(arg(0)?)?.len() as f64)),
        "bag_filter_lt" => {
            let t = real(arg(0)?)?;
            Ok(Value::reals(reals(arg(1)?)?.into_iter().filter(|x| *x < t)))
        }
        "mclip" => {
            let rows: Result<Vec<Value>, EvalError> =
                list(arg(0)?)?.iter().map(|r| Ok(Value::reals(reals(r)?.into_iter().map(clamp01)))).collect();
            Ok(Value::list(rows?))
        }
        "xgradient" => {
            let theta = reals(arg(0)?)?;
            let rows: Result<Vec<Vec<f64>>, EvalError> = list(arg(1)?)?.iter().map(reals).collect();
            let ys = reals(arg(2)?)?;
            Ok(Value::reals(xgradient(&theta, &rows?, &ys)))
        }
        "vec_sub" => {
            let (a, b) = (reals(arg(0)?)?, reals(arg(1)?)?);
            Ok(Value::reals(a.iter().zip(&b).map(|(x, y)| x - y)))
        }
        "vec_scale" => {
            let k = real(arg(0)?)?;
            Ok(Value::reals(reals(arg(1)?)?.into_iter().map(|x| k * x)))
        }
        "expmech" => {
            let queries = real_pairs(arg(0)?)?;
            let syn = real_pairs(arg(1)?)?;
            let data = real_pairs(arg(2)?)?;
            pm(Pm::ExpMech { eps: stat(0)?, scores: mwem_scores(&queries, &data, &syn) })
        }
        "expnloop" => pm(Pm::ExpNLoop {
            k: nat(stat(0)?),
            eps: stat(1)?,
            queries: real_pairs(arg(0)?)?,
            data: real_pairs(arg(1)?)?,
            syn: real_pairs(arg(2)?)?,
        }),
        _ => stuck(format!("no runtime for primitive `{name}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_rows_are_clipped() {
        let g = xgradient(&[1.0, 1.0], &[vec![1.0, 1.0], vec![0.1, 0.0]], &[0.0, 0.0]);
        // first row: (2, 2) has norm 4, scaled to (0.5, 0.5); second: (0.01, 0)
        assert!((g[0] - 0.51).abs() < 1e-12);
        assert!((g[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mwem_keeps_total_weight() {
        let mut rng = Rng::from_seed(1);
        let syn = vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)];
        let data = vec![(0.0, 5.0), (1.0, 0.0), (2.0, 1.0)];
        let out = mwem(3, 0.5, &[(0.0, 0.0), (1.0, 2.0)], &data, &syn, &mut rng).unwrap();
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        assert!((total - 3.0).abs() < 1e-9);
    }

    #[test]
    fn nearest_center() {
        assert_eq!(nearest((0.9, 0.9), &[(0.0, 0.0), (1.0, 1.0)]), 1);
        assert_eq!(nearest((0.9, 0.9), &[]), 0);
    }
}
