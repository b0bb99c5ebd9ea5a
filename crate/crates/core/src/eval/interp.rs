use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::prims;
use super::value::{cmp_value, Closure, Pm, Value, ValueEnv};
use super::{EvalError, ExactConfig, Mode, TraceEvent};
use crate::mechanisms::{self, Dist};
use crate::real::rational_to_f64;
use crate::syntax::{BinOp, Expr, ExprKind};

pub(super) struct Interp {
    mode: Mode,
    fuel: u64,
    pub(super) steps: u64,
    pub(super) trace: Vec<TraceEvent>,
    bodies: HashMap<*const Expr, Rc<Expr>>,
}

pub(super) fn stuck<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::StuckTerm(msg.into()))
}

pub(super) fn real(v: &Value) -> Result<f64, EvalError> {
    match v {
        Value::Real(x) => Ok(*x),
        other => stuck(format!("expected a number, found {other}")),
    }
}

pub(super) fn list(v: &Value) -> Result<&[Value], EvalError> {
    match v {
        Value::List(xs) => Ok(xs),
        other => stuck(format!("expected a list, found {other}")),
    }
}

pub(super) fn pair(v: &Value) -> Result<(&Value, &Value), EvalError> {
    match v {
        Value::Pair(a, b) => Ok((a, b)),
        other => stuck(format!("expected a pair, found {other}")),
    }
}

fn pm(v: Value) -> Result<Rc<Pm>, EvalError> {
    match v {
        Value::Pm(p) => Ok(p),
        other => stuck(format!("expected a privacy-monad computation, found {other}")),
    }
}

impl Interp {
    pub(super) fn new(mode: Mode, fuel: u64) -> Self {
        Interp { mode, fuel, steps: 0, trace: Vec::new(), bodies: HashMap::new() }
    }

    fn shared(&mut self, e: &Expr) -> Rc<Expr> {
        self.bodies.entry(e as *const Expr).or_insert_with(|| Rc::new(e.clone())).clone()
    }

    fn tick(&mut self) -> Result<(), EvalError> {
        if self.steps >= self.fuel {
            return Err(EvalError::OutOfFuel(self.steps));
        }
        self.steps += 1;
        Ok(())
    }

    pub(super) fn apply(&mut self, f: &Value, arg: Value) -> Result<Value, EvalError> {
        let Value::Closure(c) = f else {
            return stuck(format!("applying {f}, which is not a function"));
        };
        self.tick()?;
        let mut env = c.env.clone();
        if let Some(z) = &c.self_name {
            env = env.extend(z.clone(), f.clone());
        }
        env = env.extend(c.param.clone(), arg);
        let body = c.body.clone();
        self.eval(&env, &body)
    }

    pub(super) fn eval(&mut self, env: &ValueEnv, e: &Expr) -> Result<Value, EvalError> {
        match &e.kind {
            ExprKind::Var(x) => env.lookup(x).cloned().ok_or_else(|| EvalError::StuckTerm(format!("unbound `{x}`"))),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Real(r) | ExprKind::Sing(r) => Ok(Value::Real(rational_to_f64(r))),
            ExprKind::BinOp(op, a, b) => {
                let x = real(&self.eval(env, a)?)?;
                let y = real(&self.eval(env, b)?)?;
                Ok(Value::Real(match op {
                    BinOp::Add => x + y,
                    BinOp::Mul | BinOp::LTimes => x * y,
                }))
            }
            ExprKind::If(c, a, b) => match self.eval(env, c)? {
                Value::Bool(true) => self.eval(env, a),
                Value::Bool(false) => self.eval(env, b),
                other => stuck(format!("condition evaluated to {other}")),
            },
            ExprKind::Pair(a, b) | ExprKind::SPair(_, a, b) => {
                let x = self.eval(env, a)?;
                let y = self.eval(env, b)?;
                Ok(Value::pair(x, y))
            }
            ExprKind::Proj(i, a) | ExprKind::SProj(i, a) => {
                let v = self.eval(env, a)?;
                let (x, y) = pair(&v)?;
                Ok(if *i == 1 { x.clone() } else { y.clone() })
            }
            ExprKind::Nil(_) | ExprKind::SNil(..) => Ok(Value::list(Vec::new())),
            ExprKind::Cons(h, t) | ExprKind::SCons(h, t) => {
                let h = self.eval(env, h)?;
                let t = self.eval(env, t)?;
                let mut xs = Vec::with_capacity(list(&t)?.len() + 1);
                xs.push(h);
                xs.extend(list(&t)?.iter().cloned());
                Ok(Value::list(xs))
            }
            ExprKind::Case { scrut, nil, head, tail, cons } | ExprKind::SCase { scrut, nil, head, tail, cons } => {
                let v = self.eval(env, scrut)?;
                let xs = list(&v)?;
                match xs.split_first() {
                    None => self.eval(env, nil),
                    Some((h, t)) => {
                        let env = env.extend(head.clone(), h.clone()).extend(tail.clone(), Value::list(t.to_vec()));
                        self.eval(&env, cons)
                    }
                }
            }
            ExprKind::Lam { self_name, param, body, .. } => Ok(Value::Closure(Rc::new(Closure {
                self_name: self_name.clone(),
                param: param.clone(),
                body: self.shared(body),
                env: env.clone(),
            }))),
            ExprKind::App(f, a) => {
                let f = self.eval(env, f)?;
                let a = self.eval(env, a)?;
                self.apply(&f, a)
            }
            ExprKind::Let(x, a, b) => {
                let v = self.eval(env, a)?;
                self.tick()?;
                self.eval(&env.extend(x.clone(), v), b)
            }
            ExprKind::Reveal(a) => Ok(Value::Pm(Rc::new(Pm::Ret(self.eval(env, a)?)))),
            ExprKind::Return(a) => Ok(Value::Pm(Rc::new(Pm::Ret(self.eval(env, a)?)))),
            ExprKind::Laplace(s, eps, a) => {
                let s = real(&self.eval(env, s)?)?;
                let eps = real(&self.eval(env, eps)?)?;
                let center = real(&self.eval(env, a)?)?;
                Ok(Value::Pm(Rc::new(Pm::Laplace { center, scale: s / eps })))
            }
            ExprKind::Bind(x, a, b) => {
                let first = pm(self.eval(env, a)?)?;
                Ok(Value::Pm(Rc::new(Pm::Bind { first, var: x.clone(), body: self.shared(b), env: env.clone() })))
            }
            ExprKind::Prim { name, statics, args } => {
                let mut sv = Vec::with_capacity(statics.len());
                for s in statics {
                    sv.push(real(&self.eval(env, s)?)?);
                }
                let mut av = Vec::with_capacity(args.len());
                for a in args {
                    av.push(self.eval(env, a)?);
                }
                prims::call(self, name, &sv, av)
            }
        }
    }

    pub(super) fn run_top(&mut self, v: Value) -> Result<Value, EvalError> {
        let Value::Pm(p) = v else { return Ok(v) };
        if matches!(self.mode, Mode::Exact(_)) {
            Ok(Value::Dist(Rc::new(self.exact(&p)?)))
        } else {
            self.sample(&p)
        }
    }

    fn rng(&mut self) -> Result<&mut mechanisms::Rng, EvalError> {
        match &mut self.mode {
            Mode::Sampling(r) => Ok(r),
            Mode::Exact(_) => stuck("sampling in exact mode"),
        }
    }

    fn record(&mut self, mechanism: &'static str, params: &[(&'static str, f64)], output: serde_json::Value) {
        self.trace.push(TraceEvent { mechanism, params: params.iter().copied().collect::<BTreeMap<_, _>>(), output });
    }

    fn sample(&mut self, p: &Pm) -> Result<Value, EvalError> {
        match p {
            Pm::Ret(v) => Ok(v.clone()),
            Pm::Laplace { center, scale } => {
                let x = mechanisms::laplace_sample(*center, *scale, self.rng()?)?;
                self.record("laplace", &[("scale", *scale)], x.into());
                Ok(Value::Real(x))
            }
            Pm::Gauss { center, sigma } => {
                let x = mechanisms::gauss_sample(*center, *sigma, self.rng()?)?;
                self.record("gauss", &[("sigma", *sigma)], x.into());
                Ok(Value::Real(x))
            }
            Pm::ListLaplace { xs, scale } => {
                let mut out = Vec::with_capacity(xs.len());
                for x in xs {
                    out.push(mechanisms::laplace_sample(*x, *scale, self.rng()?)?);
                }
                self.record("listLaplace", &[("scale", *scale), ("len", xs.len() as f64)], out.clone().into());
                Ok(Value::reals(out))
            }
            Pm::ListGauss { xs, sigma } => {
                let mut out = Vec::with_capacity(xs.len());
                for x in xs {
                    out.push(mechanisms::gauss_sample(*x, *sigma, self.rng()?)?);
                }
                self.record("listGauss", &[("sigma", *sigma), ("len", xs.len() as f64)], out.clone().into());
                Ok(Value::reals(out))
            }
            Pm::Bind { first, var, body, env } => {
                let v = self.sample(first)?;
                let next = pm(self.eval(&env.extend(var.clone(), v), body)?)?;
                self.sample(&next)
            }
            Pm::Loop { k, init, f } => {
                let mut x = init.clone();
                for _ in 0..*k {
                    let next = pm(self.apply(f, x)?)?;
                    x = self.sample(&next)?;
                }
                Ok(x)
            }
            Pm::ExpMech { eps, scores } => {
                let i = mechanisms::exp_mech(scores, *eps, 1.0, self.rng()?)?;
                self.record("expmech", &[("eps", *eps), ("candidates", scores.len() as f64)], i.into());
                Ok(Value::Real(i as f64))
            }
            Pm::ExpNLoop { k, eps, queries, data, syn } => {
                let out = prims::mwem(*k, *eps, queries, data, syn, self.rng()?)?;
                let json = serde_json::Value::Array(out.iter().map(|(a, b)| serde_json::json!([a, b])).collect());
                self.record("expnloop", &[("eps", *eps), ("k", *k as f64)], json);
                Ok(Value::list(out.into_iter().map(|(a, b)| Value::pair(Value::Real(a), Value::Real(b))).collect()))
            }
        }
    }

    fn config(&self) -> Result<ExactConfig, EvalError> {
        match &self.mode {
            Mode::Exact(c) => Ok(*c),
            Mode::Sampling(_) => stuck("exact evaluation in sampling mode"),
        }
    }

    fn mix(&mut self, d: &Dist<Value>, mut k: impl FnMut(&mut Self, &Value) -> Result<Dist<Value>, EvalError>) -> Result<Dist<Value>, EvalError> {
        let cfg = self.config()?;
        if d.len() > cfg.max_components {
            return Err(EvalError::UnsupportedExactProgram(format!(
                "bind over {} outcomes exceeds the limit of {}",
                d.len(),
                cfg.max_components
            )));
        }
        let out = d.bind(|v| k(self, v), cmp_value)?;
        if out.len() > cfg.max_support {
            return Err(EvalError::UnsupportedExactProgram(format!(
                "distribution with {} outcomes exceeds the limit of {}",
                out.len(),
                cfg.max_support
            )));
        }
        Ok(out)
    }

    fn exact(&mut self, p: &Pm) -> Result<Dist<Value>, EvalError> {
        let cfg = self.config()?;
        let reals = |d: Dist<f64>| d.map(Value::Real);
        match p {
            Pm::Ret(v) => Ok(Dist::point(v.clone())),
            Pm::Laplace { center, scale } if *scale == 0.0 => Ok(Dist::point(Value::Real(*center))),
            Pm::Laplace { center, scale } => Ok(reals(mechanisms::laplace_pmf(*center, *scale, &cfg.grid)?)),
            Pm::Gauss { center, sigma } => Ok(reals(mechanisms::gauss_pmf(*center, *sigma, &cfg.grid)?)),
            Pm::Bind { first, var, body, env } => {
                let d = self.exact(first)?;
                self.mix(&d, |me, v| {
                    let next = pm(me.eval(&env.extend(var.clone(), v.clone()), body)?)?;
                    me.exact(&next)
                })
            }
            Pm::Loop { k, init, f } => {
                let mut d = Dist::point(init.clone());
                for _ in 0..*k {
                    d = self.mix(&d, |me, x| {
                        let next = pm(me.apply(f, x.clone())?)?;
                        me.exact(&next)
                    })?;
                }
                Ok(d)
            }
            Pm::ExpMech { eps, scores } => {
                let probs = mechanisms::exp_mech_probs(scores, *eps, 1.0)?;
                let support = (0..scores.len()).map(|i| Value::Real(i as f64)).collect();
                Ok(Dist::from_parts(support, probs)?)
            }
            Pm::ListLaplace { .. } | Pm::ListGauss { .. } | Pm::ExpNLoop { .. } => Err(EvalError::UnsupportedExactProgram(
                "list-valued mechanisms have no exact form".into(),
            )),
        }
    }
}
