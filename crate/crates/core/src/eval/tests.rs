use serde_json::json;

use super::*;
use crate::mechanisms::{laplace_pmf, Grid};
use crate::syntax::{parse_expr, parse_program};
use crate::typeck::typecheck_program;

fn typed(src: &str) -> TypedProgram {
    typecheck_program(&parse_program(src).unwrap()).unwrap_or_else(|e| panic!("{e}"))
}

fn eval_closed(src: &str) -> (Value, u64) {
    let e = parse_expr(src, &[]).unwrap();
    let mut ev = Evaluator::sampling(0, 1000);
    let v = ev.eval(&ValueEnv::new(), &e).unwrap();
    (v, ev.steps())
}

fn inputs(p: &TypedProgram, j: serde_json::Value) -> Inputs {
    inputs_from_json(&p.program, &j).unwrap()
}

const DBL: &str = "source db : sreal diff;\n\
    def dbl : forall s. sreal diff s -> sreal diff (s + s) = fn (x : sreal diff s) => x <+> x;\n\
    main = dbl(db);";

#[test]
fn dbl_steps() {
    let tp = typed(DBL);
    let out = run_program(&tp, &inputs(&tp, json!({"db": 3.0})), 0, 100).unwrap();
    assert_eq!(out.value, Value::Real(6.0));
    assert_eq!(out.steps, 1);
}

#[test]
fn identity_application_takes_one_step() {
    let (v, steps) = eval_closed("(fun z (x : real) : real => x)(5)");
    assert_eq!(v, Value::Real(5.0));
    assert_eq!(steps, 1);
}

#[test]
fn curried_application_counts_each_argument() {
    let (v, steps) = eval_closed("(fn (x : real) (y : real) => x <*> y)(3, 4)");
    assert_eq!(v, Value::Real(12.0));
    assert_eq!(steps, 2);
}

#[test]
fn if_and_case_take_no_steps() {
    let (v, steps) = eval_closed("if(true){case(1.0 :: nil[real]){nil => 0}{h :: t => h}}{2}");
    assert_eq!(v, Value::Real(1.0));
    assert_eq!(steps, 0);
}

#[test]
fn recursion_runs_out_of_fuel() {
    let e = parse_expr("(fun f (x : real) : real => f(x))(1)", &[]).unwrap();
    let mut ev = Evaluator::sampling(0, 50);
    assert_eq!(ev.eval(&ValueEnv::new(), &e), Err(EvalError::OutOfFuel(50)));
}

#[test]
fn recursion_over_lists() {
    let src = "(fun len (xs : list(real)) : real => case(xs){nil => 0}{h :: t => 1 <+> len(t)})(1 :: 2 :: 3 :: nil[real])";
    let (v, steps) = eval_closed(src);
    assert_eq!(v, Value::Real(3.0));
    assert_eq!(steps, 4);
}

#[test]
fn return_is_a_point_mass() {
    let tp = typed("main = return(7);");
    let grid = Grid::new(-10.0, 10.0, 1.0).unwrap();
    let d = eval_exact_output(&tp, &Inputs::new(), ExactConfig::new(grid), 100).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d.masses()[0], 1.0);
    assert_eq!(d.support()[0], grid.snap(7.0));
    let out = run_program(&tp, &Inputs::new(), 0, 100).unwrap();
    assert_eq!(out.value, Value::Real(7.0));
}

#[test]
fn exact_bind_of_point() {
    let e = parse_expr("x <- return(3); return(x <+> 1)", &[]).unwrap();
    let mut ev = Evaluator::new(Mode::Exact(ExactConfig::new(Grid::new(0.0, 8.0, 1.0).unwrap())), 100);
    let v = ev.eval(&ValueEnv::new(), &e).unwrap();
    match ev.run(v).unwrap() {
        Value::Dist(d) => {
            assert_eq!(d.support(), &[Value::Real(4.0)]);
            assert_eq!(d.masses(), &[1.0]);
        }
        other => panic!("expected a distribution, got {other}"),
    }
}

#[test]
fn exact_single_laplace_is_the_pmf() {
    let tp = typed("source o : sreal diff;\nmain = laplace[1, 1](o);");
    let grid = Grid::new(-20.0, 21.0, 0.01).unwrap();
    let d = eval_exact_output(&tp, &inputs(&tp, json!({"o": 0.0})), ExactConfig::new(grid), 100).unwrap();
    let want = laplace_pmf(0.0, 1.0, &grid).unwrap();
    assert_eq!(d.len(), want.len());
    assert!(d.tv_distance(&want) < 1e-12);
}

#[test]
fn exact_two_laplace_is_a_convolution() {
    let tp = typed("source o : sreal diff;\nmain = x <- laplace[1, 1](o); y <- laplace[1, 2](o); return(x <+> y);");
    let grid = Grid::new(-10.0, 10.0, 0.25).unwrap();
    let d = eval_exact_output(&tp, &inputs(&tp, json!({"o": 0.5})), ExactConfig::new(grid), 1_000_000).unwrap();
    assert!((d.total() - 1.0).abs() < 1e-9);
    // convolve the two bin-level PMFs directly and snap the sums
    let p = laplace_pmf(0.5, 1.0, &grid).unwrap();
    let q = laplace_pmf(0.5, 0.5, &grid).unwrap();
    let mut acc = vec![0.0; grid.bins()];
    for (x, px) in p.iter() {
        for (y, qy) in q.iter() {
            acc[grid.index_of(x + y)] += px * qy;
        }
    }
    let oracle = crate::mechanisms::RealDist::from_parts((0..grid.bins()).map(|i| grid.center(i)).collect(), acc)
        .unwrap()
        .snap(&grid);
    assert!(d.tv_distance(&oracle) < 1e-6);
}

#[test]
fn exact_mode_refuses_oversized_mixtures() {
    let tp = typed("source o : sreal diff;\nmain = x <- laplace[1, 1](o); y <- laplace[1, 1](o); return(x <+> y);");
    let grid = Grid::new(-20.0, 21.0, 0.1).unwrap();
    let config = ExactConfig { max_components: 100, ..ExactConfig::new(grid) };
    let r = eval_exact_output(&tp, &inputs(&tp, json!({"o": 0.0})), config, u64::MAX);
    assert!(matches!(r, Err(EvalError::UnsupportedExactProgram(_))), "{r:?}");
}

#[test]
fn grid_too_narrow() {
    let tp = typed("source o : sreal diff;\nmain = laplace[1, 1](o);");
    let grid = Grid::new(-1.0, 1.0, 0.5).unwrap();
    let r = eval_exact_output(&tp, &inputs(&tp, json!({"o": 5.0})), ExactConfig::new(grid), 100);
    assert!(matches!(r, Err(EvalError::Mech(crate::mechanisms::MechError::GridTooNarrow { .. }))));
}

#[test]
fn sampling_is_deterministic() {
    let tp = typed("source o : sreal diff;\nmain = x <- laplace[2, 2](o <+> o); return(x);");
    let ins = inputs(&tp, json!({"o": 1.0}));
    let a = run_program(&tp, &ins, 7, 100).unwrap();
    let b = run_program(&tp, &ins, 7, 100).unwrap();
    assert_eq!(a.value.as_real().unwrap().to_bits(), b.value.as_real().unwrap().to_bits());
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.trace.len(), 1);
    assert_eq!(a.trace[0].mechanism, "laplace");
    let c = run_program(&tp, &ins, 8, 100).unwrap();
    assert_ne!(a.value, c.value);
}

#[test]
fn summation_clips() {
    let tp = typed("source input_db : slist L1 (sreal disc);\nmain = sum(clip(input_db));");
    let out = run_program(&tp, &inputs(&tp, json!({"input_db": [0.5, 2.0, -1.0]})), 0, 100).unwrap();
    assert_eq!(out.value, Value::Real(1.5));
}

#[test]
fn map_applications_count() {
    let tp = typed("source db : slist L1 (sreal diff);\nmain = map(fn (y : sreal diff s) => y <+> y, db);");
    let out = run_program(&tp, &inputs(&tp, json!({"db": [1, 2, 3]})), 0, 100).unwrap();
    assert_eq!(out.value, Value::reals([2.0, 4.0, 6.0]));
    assert_eq!(out.steps, 3);
}

#[test]
fn input_errors() {
    let tp = typed("source m : smatrix L1 2 2 (sreal disc);\nmain = mclip(m);");
    assert_eq!(inputs_from_json(&tp.program, &json!({})), Err(EvalError::MissingSource("m".into())));
    let r = inputs_from_json(&tp.program, &json!({"m": [[1, 2], [3]]}));
    assert!(matches!(r, Err(EvalError::ShapeMismatch { .. })));
    let ok = inputs(&tp, json!({"m": [[1, 2], [-3, 0.5]]}));
    let out = run_program(&tp, &ok, 0, 10).unwrap();
    assert_eq!(out.value.to_json(), json!([[1.0, 1.0], [0.0, 0.5]]));
}

#[test]
fn dictionaries_from_objects_or_pairs() {
    let t = crate::syntax::SType::SDict(
        crate::syntax::CMetric::LInf,
        Box::new(crate::syntax::SType::SReal(crate::syntax::NMetric::Diff)),
        Box::new(crate::syntax::SType::SReal(crate::syntax::NMetric::Diff)),
    );
    let a = value_from_json("d", &t, &json!({"2": 5, "1": 3})).unwrap();
    let b = value_from_json("d", &t, &json!([[1, 3], [2, 5]])).unwrap();
    assert_eq!(a, b);
    assert!(value_from_json("d", &t, &json!({"x": 1})).is_err());
}

#[test]
fn sensitive_and_plain_forms_agree() {
    let hat = "scase(scons(spair[L1](1, 2), snil[L1, spair L1 (sreal diff) (sreal diff)])){snil => 0}{h :: t => sfst(h) <+> ssnd(h)}";
    let plain = "case((1, 2) :: nil[(real, real)]){nil => 0}{h :: t => fst(h) <+> snd(h)}";
    let (a, sa) = eval_closed(hat);
    let (b, sb) = eval_closed(plain);
    assert_eq!(a, b);
    assert_eq!(sa, sb);
}
