use serde_json::json;

use super::*;
use crate::env::{SEnv, SourceName};
use crate::eval::inputs_from_json;
use crate::mechanisms::Grid;
use crate::syntax::{parse_program, pretty_program, NMetric};
use crate::typeck::typecheck_program;

fn typed(src: &str) -> TypedProgram {
    typecheck_program(&parse_program(src).unwrap()).unwrap_or_else(|e| panic!("{e}"))
}

fn inputs(tp: &TypedProgram, j: serde_json::Value) -> Inputs {
    inputs_from_json(&tp.program, &j).unwrap()
}

fn spec(pairs: &[(&str, f64)]) -> DistanceSpec {
    DistanceSpec(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

const DBL: &str = "source db : sreal diff;\n\
    def dbl : forall s. sreal diff s -> sreal diff (s + s) = fn (x : sreal diff s) => x <+> x;\n\
    main = dbl(db);";

fn laplace_grid() -> ExactConfig {
    ExactConfig::new(Grid::new(-20.0, 21.0, 0.01).unwrap())
}

#[test]
fn size_one_is_a_source() {
    let mut rng = Rng::from_seed(3);
    let (p, env) = gen_random_program_with_env(1, &mut rng);
    assert_eq!(pretty_program(&p).lines().last().unwrap(), "main = o;");
    assert_eq!(env, SEnv::singleton(SourceName::new("o").unwrap(), Sens::ONE));
}

#[test]
fn generated_programs_typecheck_with_the_generated_env() {
    let mut rng = Rng::from_seed(11);
    let mut largest = 0;
    for i in 0..1000 {
        let size = 1 + i % MAX_GEN_SIZE;
        let (p, env) = gen_random_program_with_env(size, &mut rng);
        let tp = typecheck_program(&p).unwrap_or_else(|e| panic!("{e}\n{}", pretty_program(&p)));
        assert_eq!(tp.main, Type::Sensitive(SType::SReal(NMetric::Diff), env.clone()), "{}", pretty_program(&p));
        if let Sens::Finite(n) = crate::env::senv_max(&env) {
            largest = largest.max(n);
        }
    }
    assert!(largest >= 32, "largest sensitivity {largest}");
}

#[test]
fn generated_programs_round_trip() {
    let mut rng = Rng::from_seed(5);
    for i in 0..2000 {
        let p = gen_random_program(1 + i % MAX_GEN_SIZE, &mut rng);
        let printed = pretty_program(&p);
        assert_eq!(parse_program(&printed).unwrap(), p, "{printed}");
    }
}

#[test]
fn erasure_preserves_values_and_steps() {
    let mut rng = Rng::from_seed(21);
    for i in 0..300 {
        let p = gen_random_program(1 + i % MAX_GEN_SIZE, &mut rng);
        let tp = typecheck_program(&p).unwrap();
        let erased = erase_sensitive(&p.main);
        let ins: Inputs = p.sources.iter().map(|s| (s.name.clone(), random_value(&s.ty, &mut rng))).collect();
        let a = run_program(&tp, &ins, 0, DEFAULT_FUEL).unwrap();
        let mut ev = crate::eval::Evaluator::sampling(0, DEFAULT_FUEL);
        let env = ev.program_env(&p, &ins).unwrap();
        let b = ev.eval(&env, &erased).unwrap();
        assert_eq!(a.value, b);
        assert_eq!(a.steps, ev.steps());
    }
}

#[test]
fn dbl_boundary_pair() {
    let tp = typed(DBL);
    let pair = (inputs(&tp, json!({"db": 3.0})), inputs(&tp, json!({"db": 3.5})));
    let r = check_metric_pairs(&tp, &spec(&[("db", 0.5)]), &[pair], DEFAULT_FUEL).unwrap();
    assert!(r.pass, "{r}");
    assert_eq!(r.details["bound"], json!(1.0));
    assert_eq!(r.max_observed, 1.0);
}

#[test]
fn dbl_random_pairs() {
    let tp = typed(DBL);
    let r = check_metric_preservation(&tp, &spec(&[("db", 0.5)]), 500, 9).unwrap();
    assert!(r.pass, "{r}");
    assert!(r.max_observed > 0.9);
}

#[test]
fn summation_with_one_differing_row() {
    let tp = typed("source input_db : slist L1 (sreal disc);\nmain = sum(clip(input_db));");
    // every pattern of one differing entry over a fixed length-5 list
    let base = [0.1, 0.9, 0.5, 2.0, -1.0];
    let mut pairs = Vec::new();
    for i in 0..5 {
        for alt in [-3.0, 0.0, 0.25, 1.0, 7.0] {
            let mut other = base;
            other[i] = alt;
            pairs.push((inputs(&tp, json!({"input_db": base})), inputs(&tp, json!({"input_db": other}))));
        }
    }
    let r = check_metric_pairs(&tp, &spec(&[("input_db", 1.0)]), &pairs, DEFAULT_FUEL).unwrap();
    assert!(r.pass, "{r}");
    assert!(r.max_observed <= 1.0);
    let r = check_metric_preservation(&tp, &spec(&[("input_db", 1.0)]), 500, 2).unwrap();
    assert!(r.pass, "{r}");
}

#[test]
fn generated_corpus_has_no_violations() {
    let mut rng = Rng::from_seed(77);
    for i in 0..200 {
        let p = gen_random_program(1 + i % MAX_GEN_SIZE, &mut rng);
        let tp = typecheck_program(&p).unwrap();
        let r = check_metric_preservation(&tp, &DistanceSpec::uniform(&tp, 1.0), 20, i as u64).unwrap();
        assert!(r.pass, "{r}\n{}", pretty_program(&p));
    }
}

#[test]
fn metric_errors() {
    let tp = typed("source o : sreal diff;\nmain = laplace[1, 1](o);");
    assert!(matches!(
        check_metric_preservation(&tp, &spec(&[("o", 1.0)]), 1, 0),
        Err(VerifyError::NotDeterministicFragment(_))
    ));
    let tp = typed(DBL);
    assert_eq!(
        check_metric_preservation(&tp, &spec(&[("db", f64::INFINITY)]), 1, 0),
        Err(VerifyError::UnboundedSpec("db".into()))
    );
    assert!(matches!(check_metric_preservation(&tp, &spec(&[("zz", 1.0)]), 1, 0), Err(VerifyError::InvalidSpec(_))));
    // infinite distance on a source the result ignores is fine
    let tp = typed("source a : sreal diff;\nsource b : sreal diff;\nmain = a;");
    assert!(check_metric_preservation(&tp, &spec(&[("a", 1.0), ("b", f64::INFINITY)]), 50, 0).unwrap().pass);
}

#[test]
fn reports_are_reproducible() {
    let tp = typed(DBL);
    let a = check_metric_preservation(&tp, &spec(&[("db", 2.0)]), 50, 4).unwrap();
    let b = check_metric_preservation(&tp, &spec(&[("db", 2.0)]), 50, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn laplace_meets_its_claim() {
    let tp = typed("source o : sreal diff;\nmain = laplace[1, 1](o);");
    let (a, b) = default_neighbors(&tp);
    let r = check_dp(&tp, &a, &b, &DpOptions::new(laplace_grid())).unwrap();
    assert!(r.pass, "{r}");
    assert!(r.max_observed <= 1e-3);
    let tightest = r.details["tightest_eps"].as_f64().unwrap();
    assert!((tightest - 1.0).abs() <= 0.05, "{tightest}");
}

#[test]
fn miscalibrated_claim_fails() {
    let tp = typed("source o : sreal diff;\nmain = laplace[2, 2](o <+> o);");
    let (a, b) = default_neighbors(&tp);
    let opts = DpOptions { claim_eps: Some(1.0), ..DpOptions::new(laplace_grid()) };
    let r = check_dp(&tp, &a, &b, &opts).unwrap();
    assert!(!r.pass);
    // shift 2 at scale 1: half the e-fold excess survives
    let expected = 1.0 - (-0.5f64).exp();
    assert!((r.max_observed - expected).abs() < 0.01, "{}", r.max_observed);
    let tightest = r.details["tightest_eps"].as_f64().unwrap();
    assert!((tightest - 2.0).abs() <= 0.05, "{tightest}");
    // the budget's own claim of 2 holds
    assert!(check_dp(&tp, &a, &b, &DpOptions::new(laplace_grid())).unwrap().pass);
}

#[test]
fn return_only_is_exact() {
    let tp = typed("source o : sreal diff;\nmain = return(3);");
    let a = inputs(&tp, json!({"o": 0.0}));
    let opts = DpOptions { claim_eps: Some(0.0), tol: 0.0, ..DpOptions::new(laplace_grid()) };
    let r = check_dp(&tp, &a, &a, &opts).unwrap();
    assert!(r.pass);
    assert_eq!(r.max_observed, 0.0);
}

#[test]
fn dp_needs_a_pm_program() {
    let tp = typed(DBL);
    let (a, b) = default_neighbors(&tp);
    let opts = DpOptions { claim_eps: Some(1.0), ..DpOptions::new(laplace_grid()) };
    assert!(matches!(check_dp(&tp, &a, &b, &opts), Err(VerifyError::Eval(EvalError::UnsupportedExactProgram(_)))));
    assert!(matches!(check_dp(&tp, &a, &b, &DpOptions::new(laplace_grid())), Err(VerifyError::NoClaim(_))));
}
