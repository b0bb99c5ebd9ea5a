//! Random inputs, related input pairs and the distance between inputs.

use crate::eval::{cmp_value, Value};
use crate::mechanisms::Rng;
use crate::syntax::{CMetric, NMetric, PlainType, SType};

/// Budget given to a component whose distance is unconstrained.
const FREE: f64 = 20.0;

fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

fn below(rng: &mut Rng, n: u64) -> u64 {
    rng.next_u64() % n.max(1)
}

fn plain_value(t: &PlainType, rng: &mut Rng) -> Value {
    match t {
        PlainType::Bool => Value::Bool(rng.next_u64() & 1 == 1),
        PlainType::Real => Value::Real(uniform(rng, -0.5, 1.5)),
        PlainType::Prod(a, b) => Value::pair(plain_value(a, rng), plain_value(b, rng)),
        PlainType::List(a) => Value::list((0..below(rng, 4)).map(|_| plain_value(a, rng)).collect()),
    }
}

/// A random value of the given type.
pub fn random_value(t: &SType, rng: &mut Rng) -> Value {
    match t {
        SType::SReal(_) => Value::Real(uniform(rng, -10.0, 10.0)),
        SType::SProd(_, a, b) => Value::pair(random_value(a, rng), random_value(b, rng)),
        SType::SList(_, a) => Value::list((0..below(rng, 7)).map(|_| random_value(a, rng)).collect()),
        SType::SSet(p) => Value::list((0..below(rng, 7)).map(|_| plain_value(p, rng)).collect()),
        SType::SMatrix(_, r, c, a) => Value::list(
            (0..*r).map(|_| Value::list((0..*c).map(|_| random_value(a, rng)).collect())).collect(),
        ),
        SType::SDict(_, k, v) => {
            let n = below(rng, 6);
            Value::list(
                (0..n)
                    .map(|i| {
                        let key = match **k {
                            SType::SReal(_) => Value::Real(i as f64),
                            _ => random_value(k, rng),
                        };
                        Value::pair(key, random_value(v, rng))
                    })
                    .collect(),
            )
        }
    }
}

/// Per-component budgets whose combination under `w` stays within `d`.
fn split_budget(w: CMetric, d: f64, n: usize, rng: &mut Rng) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if !d.is_finite() {
        return vec![FREE; n];
    }
    if w == CMetric::LInf {
        return vec![d; n];
    }
    if rng.next_u64() & 1 == 1 {
        // all the distance on one component
        let k = below(rng, n as u64) as usize;
        return (0..n).map(|i| if i == k { d } else { 0.0 }).collect();
    }
    let weights: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let norm = match w {
        CMetric::L1 => weights.iter().sum::<f64>(),
        _ => weights.iter().map(|x| x * x).sum::<f64>().sqrt(),
    };
    // shave a little so rounding cannot push the total past d
    weights.into_iter().map(|x| d * x / norm * (1.0 - 1e-12)).collect()
}

fn pair_components(ts: &[&SType], xs: &[Value], w: CMetric, d: f64, rng: &mut Rng) -> Vec<Value> {
    let budgets = split_budget(w, d, xs.len(), rng);
    xs.iter().zip(ts).zip(budgets).map(|((x, t), b)| related(t, x, b, rng)).collect()
}

/// A value at distance at most `d` from `x` (any value when `d` is infinite).
pub fn related(t: &SType, x: &Value, d: f64, rng: &mut Rng) -> Value {
    match (t, x) {
        (SType::SReal(NMetric::Diff), Value::Real(v)) => {
            if !d.is_finite() {
                return Value::Real(uniform(rng, -10.0, 10.0));
            }
            let delta = match below(rng, 4) {
                0 => d,
                1 => -d,
                _ => uniform(rng, -d, d),
            };
            Value::Real(v + delta)
        }
        (SType::SReal(NMetric::Disc), Value::Real(v)) => {
            if d >= 1.0 && rng.next_u64() & 1 == 1 {
                Value::Real(v + uniform(rng, 0.5, 10.0))
            } else {
                Value::Real(*v)
            }
        }
        (SType::SProd(w, a, b), Value::Pair(x1, x2)) => {
            let out = pair_components(&[a, b], &[(**x1).clone(), (**x2).clone()], *w, d, rng);
            Value::pair(out[0].clone(), out[1].clone())
        }
        (SType::SList(w, a), Value::List(xs)) => {
            let ts = vec![&**a; xs.len()];
            Value::list(pair_components(&ts, xs, *w, d, rng))
        }
        (SType::SMatrix(w, _, _, a), Value::List(rows)) => {
            let cells: Vec<Value> = rows.iter().flat_map(|r| match r {
                Value::List(c) => c.to_vec(),
                _ => Vec::new(),
            }).collect();
            let ts = vec![&**a; cells.len()];
            let out = pair_components(&ts, &cells, *w, d, rng);
            let width = if rows.is_empty() { 0 } else { cells.len() / rows.len() };
            Value::list(out.chunks(width.max(1)).map(|c| Value::list(c.to_vec())).collect())
        }
        (SType::SDict(w, _, v), Value::List(entries)) => {
            let vals: Vec<Value> = entries.iter().filter_map(|e| match e {
                Value::Pair(_, b) => Some((**b).clone()),
                _ => None,
            }).collect();
            let ts = vec![&**v; vals.len()];
            let out = pair_components(&ts, &vals, *w, d, rng);
            Value::list(
                entries
                    .iter()
                    .zip(out)
                    .map(|(e, nv)| match e {
                        Value::Pair(k, _) => Value::pair((**k).clone(), nv),
                        other => other.clone(),
                    })
                    .collect(),
            )
        }
        (SType::SSet(p), Value::List(xs)) => {
            let mut out = xs.to_vec();
            let budget = if d.is_finite() { d.floor() as u64 } else { 4 };
            for _ in 0..below(rng, budget + 1) {
                if !out.is_empty() && rng.next_u64() & 1 == 1 {
                    let k = below(rng, out.len() as u64) as usize;
                    out.remove(k);
                } else {
                    out.push(plain_value(p, rng));
                }
            }
            Value::list(out)
        }
        _ => x.clone(),
    }
}

fn combine(w: CMetric, ds: impl Iterator<Item = f64>) -> f64 {
    match w {
        CMetric::L1 => ds.sum(),
        CMetric::L2 => ds.map(|d| d * d).sum::<f64>().sqrt(),
        CMetric::LInf => ds.fold(0.0, f64::max),
    }
}

fn same_len(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len()
}

/// Size of the multiset symmetric difference.
fn bag_distance(a: &[Value], b: &[Value]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(cmp_value);
    y.sort_by(cmp_value);
    let (mut i, mut j, mut diff) = (0, 0, 0usize);
    while i < x.len() && j < y.len() {
        match cmp_value(&x[i], &y[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                diff += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                diff += 1;
                j += 1;
            }
        }
    }
    (diff + (x.len() - i) + (y.len() - j)) as f64
}

/// Distance between two values of a sensitive type under its metrics.
/// Values of different shapes are infinitely far apart.
pub fn value_distance(t: &SType, a: &Value, b: &Value) -> f64 {
    match (t, a, b) {
        (SType::SReal(NMetric::Diff), Value::Real(x), Value::Real(y)) => (x - y).abs(),
        (SType::SReal(NMetric::Disc), Value::Real(x), Value::Real(y)) => {
            if x == y {
                0.0
            } else {
                1.0
            }
        }
        (SType::SProd(w, ta, tb), Value::Pair(a1, a2), Value::Pair(b1, b2)) => {
            combine(*w, [value_distance(ta, a1, b1), value_distance(tb, a2, b2)].into_iter())
        }
        (SType::SList(w, te), Value::List(xs), Value::List(ys)) if same_len(xs, ys) => {
            combine(*w, xs.iter().zip(ys.iter()).map(|(x, y)| value_distance(te, x, y)))
        }
        (SType::SMatrix(w, _, _, te), Value::List(xs), Value::List(ys)) if same_len(xs, ys) => {
            let mut ds = Vec::new();
            for (rx, ry) in xs.iter().zip(ys.iter()) {
                match (rx, ry) {
                    (Value::List(cx), Value::List(cy)) if same_len(cx, cy) => {
                        ds.extend(cx.iter().zip(cy.iter()).map(|(x, y)| value_distance(te, x, y)))
                    }
                    _ => return f64::INFINITY,
                }
            }
            combine(*w, ds.into_iter())
        }
        (SType::SDict(w, _, tv), Value::List(xs), Value::List(ys)) if same_len(xs, ys) => {
            let mut ds = Vec::new();
            for (ex, ey) in xs.iter().zip(ys.iter()) {
                match (ex, ey) {
                    (Value::Pair(kx, vx), Value::Pair(ky, vy)) if kx == ky => ds.push(value_distance(tv, vx, vy)),
                    _ => return f64::INFINITY,
                }
            }
            combine(*w, ds.into_iter())
        }
        (SType::SSet(_), Value::List(xs), Value::List(ys)) => bag_distance(xs, ys),
        _ => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn types() -> Vec<SType> {
        let diff = || Box::new(SType::SReal(NMetric::Diff));
        let disc = || Box::new(SType::SReal(NMetric::Disc));
        vec![
            SType::SReal(NMetric::Diff),
            SType::SReal(NMetric::Disc),
            SType::SProd(CMetric::L2, diff(), disc()),
            SType::SList(CMetric::L1, disc()),
            SType::SList(CMetric::LInf, diff()),
            SType::SMatrix(CMetric::L1, 2, 3, diff()),
            SType::SDict(CMetric::LInf, diff(), diff()),
            SType::SSet(PlainType::Prod(Box::new(PlainType::Real), Box::new(PlainType::Real))),
        ]
    }

    proptest! {
        #[test]
        fn related_values_are_within_budget(seed in any::<u64>(), d in 0.0f64..3.0, which in 0usize..8) {
            let t = &types()[which];
            let mut rng = crate::mechanisms::Rng::from_seed(seed);
            let x = random_value(t, &mut rng);
            let y = related(t, &x, d, &mut rng);
            prop_assert!(value_distance(t, &x, &y) <= d + 1e-9, "{} > {}", value_distance(t, &x, &y), d);
        }
    }

    #[test]
    fn bag_distances() {
        let r = |x: f64| Value::Real(x);
        assert_eq!(bag_distance(&[r(1.0), r(2.0)], &[r(2.0), r(1.0)]), 0.0);
        assert_eq!(bag_distance(&[r(1.0), r(1.0)], &[r(1.0)]), 1.0);
        assert_eq!(bag_distance(&[r(1.0)], &[r(3.0)]), 2.0);
    }
}
