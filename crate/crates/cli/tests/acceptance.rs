//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p dpsens-cli --test acceptance`.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value as J;

use dpsens_core::accountant::adv_comp;
use dpsens_core::corpus::{expectation, Outcome, CORPUS};
use dpsens_core::env::{PEnv, SourceName};
use dpsens_core::eval::ExactConfig;
use dpsens_core::mechanisms::{gauss_sigma, Grid, Rng};
use dpsens_core::real::{parse_decimal, EDCost, RealExpr};
use dpsens_core::syntax::{parse_program, pretty_program};
use dpsens_core::typeck::typecheck_program;
use dpsens_core::verify::{
    check_algebra_laws, check_dp, check_metric_preservation, default_neighbors, gen_random_program, DistanceSpec,
    DpOptions, MAX_GEN_SIZE,
};

fn corpus_path(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(format!("{name}.solo"));
    p.to_string_lossy().into_owned()
}

fn dpsens(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dpsens")).args(args).output().expect("binary runs")
}

fn lit(s: &str) -> RealExpr {
    RealExpr::lit(parse_decimal(s).unwrap()).unwrap()
}

type Verdict = Result<String, String>;

fn golden_typing() -> Verdict {
    let mut notes = Vec::new();
    for (name, text) in CORPUS {
        let want = expectation(text).ok_or(format!("{name}: no header"))?;
        let out = dpsens(&["check", &corpus_path(name), "--format", "json"]);
        let j: J = serde_json::from_slice(&out.stdout).map_err(|e| format!("{name}: {e}"))?;
        let got = match j["status"].as_str() {
            Some("ok") => Outcome::Type(j["type"].as_str().unwrap_or_default().to_string()),
            _ => Outcome::Error(j["code"].as_str().unwrap_or_default().to_string()),
        };
        if got != want.outcome {
            return Err(format!("{name}: expected {:?}, got {got:?}", want.outcome));
        }
        if !want.budget.is_empty() {
            let b = dpsens(&["budget", &corpus_path(name)]);
            let lines = String::from_utf8_lossy(&b.stdout).into_owned();
            for l in &want.budget {
                if !lines.lines().any(|x| x == l) {
                    return Err(format!("{name}: budget line `{l}` not in {lines:?}"));
                }
            }
        }
    }
    // per-source costs of the case studies, recomputed from their parameters
    let budget_eps = |name: &str, source: &str| -> Result<f64, String> {
        let b = dpsens(&["budget", &corpus_path(name), "--format", "json"]);
        let j: J = serde_json::from_slice(&b.stdout).map_err(|e| e.to_string())?;
        j["budget"]
            .as_array()
            .and_then(|a| a.iter().find(|e| e["source"] == source))
            .and_then(|e| e["eps"].as_f64())
            .ok_or(format!("{name}: no cost for {source}"))
    };
    let expected = [
        ("simple_privacy", "o", 2.0),
        ("add_noise_twice", "o", 2.0 + 3.0),
        ("kmeans_iter", "b", 3.0 * 0.5),
        ("cdf", "db", 4.0 * 0.5),
        ("gd", "xs", 5.0 * 0.1),
        ("mwem", "real_data", 2.0 * 4.0 * 0.5),
    ];
    for (name, src, want) in expected {
        let got = budget_eps(name, src)?;
        if (got - want).abs() > 1e-12 {
            return Err(format!("{name}: {src} costs {got}, expected {want}"));
        }
        notes.push(format!("{name}={got}"));
    }
    Ok(format!("{} programs; {}", CORPUS.len(), notes.join(", ")))
}

fn advanced_composition() -> Verdict {
    let (k, eps, delta, delta_p) = (100u64, 0.1f64, 1e-6f64, 1e-5f64);
    let oracle_eps = 2.0 * eps * (2.0 * k as f64 * (1.0 / delta_p).ln()).sqrt();
    let oracle_delta = k as f64 * delta + delta_p;
    let o = SourceName::new("o").unwrap();
    let p = PEnv::singleton(o.clone(), EDCost::Finite { eps: lit("0.1"), delta: lit("0.000001") });
    let r = adv_comp(k, &lit("0.00001"), &p).map_err(|e| e.to_string())?;
    let (e, d) = match r.get(&o) {
        Some(EDCost::Finite { eps, delta }) => (eps.eval().map_err(|e| e.to_string())?, delta.eval().map_err(|e| e.to_string())?),
        other => return Err(format!("unexpected cost {other:?}")),
    };
    let ok = (e - oracle_eps).abs() <= 1e-3 && (e - 9.5972).abs() <= 1e-3 && (d - oracle_delta).abs() <= 1e-9;
    let msg = format!("eps' = {e:.6} (oracle {oracle_eps:.6}), delta = {d:e} (oracle {oracle_delta:e})");
    if ok { Ok(msg) } else { Err(msg) }
}

fn gaussian_calibration() -> Verdict {
    let oracle = (2.0 * (1.25f64 / 1e-5).ln()).sqrt();
    let s = gauss_sigma(1.0f64, 1.0, 1e-5).map_err(|e| e.to_string())?;
    let msg = format!("sigma = {s:.6} (oracle {oracle:.6})");
    if (s - oracle).abs() <= 1e-3 && (s - 4.8448).abs() <= 1e-3 { Ok(msg) } else { Err(msg) }
}

fn dp_brute_force() -> Verdict {
    let config = ExactConfig::new(Grid::new(-20.0, 21.0, 0.01).map_err(|e| e.to_string())?);
    let load = |name: &str| typecheck_program(&parse_program(dpsens_core::corpus::get(name).unwrap()).unwrap()).unwrap();
    let tp = load("laplace1");
    let (a, b) = default_neighbors(&tp);
    let r = check_dp(&tp, &a, &b, &DpOptions::new(config)).map_err(|e| e.to_string())?;
    let fwd = r.details["required_delta_forward"].as_f64().unwrap();
    let bwd = r.details["required_delta_backward"].as_f64().unwrap();
    if !(r.pass && fwd <= 1e-3 && bwd <= 1e-3) {
        return Err(format!("laplace1: required delta {fwd} / {bwd}"));
    }
    let tp = load("miscalibrated");
    let (a, b) = default_neighbors(&tp);
    let opts = DpOptions { claim_eps: Some(1.0), ..DpOptions::new(config) };
    let r = check_dp(&tp, &a, &b, &opts).map_err(|e| e.to_string())?;
    let tightest = r.details["tightest_eps"].as_f64().unwrap();
    let msg = format!("laplace1 required delta {:.2e}; miscalibrated fails = {}, tightest eps {tightest:.4}", fwd.max(bwd), !r.pass);
    if !r.pass && (tightest - 2.0).abs() <= 0.05 { Ok(msg) } else { Err(msg) }
}

fn metric_preservation() -> Verdict {
    let mut rng = Rng::from_seed(2024);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let p = gen_random_program(1 + i % MAX_GEN_SIZE, &mut rng);
        let tp = typecheck_program(&p).map_err(|e| format!("generated program {i} rejected: {e}"))?;
        let spec = DistanceSpec::uniform(&tp, 1.0 + (i % 3) as f64 * 0.5);
        let r = check_metric_preservation(&tp, &spec, 100, i as u64).map_err(|e| e.to_string())?;
        if !r.pass {
            return Err(format!("program {i}: {}\n{}", r.violations[0].detail, pretty_program(&p)));
        }
        let b = r.details["bound"].as_f64().unwrap_or(f64::INFINITY);
        if b > 0.0 {
            worst = worst.max(r.max_observed / b);
        }
    }
    Ok(format!("1000 programs x 100 pairs, 0 violations, max observed/bound {worst:.4}"))
}

fn algebra_laws() -> Verdict {
    let r = check_algebra_laws(100_000, 7);
    let summary = format!("{} properties x 100000 instances, {} failures", r.details.len(), r.violations.len());
    if r.pass { Ok(summary) } else { Err(format!("{summary}: {:?}", r.violations.first())) }
}

fn determinism() -> Verdict {
    for (name, _) in CORPUS {
        let a = dpsens(&["run", &corpus_path(name), "--seed", "7", "--trace"]);
        let b = dpsens(&["run", &corpus_path(name), "--seed", "7", "--trace"]);
        if a.stdout != b.stdout || a.stderr != b.stderr || a.status.code() != b.status.code() {
            return Err(format!("{name}: runs differ"));
        }
    }
    for (name, text) in CORPUS {
        let p = parse_program(text).map_err(|e| format!("{name}: {e}"))?;
        if parse_program(&pretty_program(&p)).ok() != Some(p) {
            return Err(format!("{name}: round trip differs"));
        }
    }
    let mut rng = Rng::from_seed(99);
    for i in 0..10_000 {
        let p = gen_random_program(1 + i % MAX_GEN_SIZE, &mut rng);
        let printed = pretty_program(&p);
        if parse_program(&printed).ok() != Some(p) {
            return Err(format!("generated program {i} does not round trip:\n{printed}"));
        }
    }
    Ok(format!("{} programs run twice identically; round trip on corpus and 10000 generated programs", CORPUS.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Duration); 7] = [
        ("golden typing suite", golden_typing, Duration::from_secs(5)),
        ("advanced composition", advanced_composition, Duration::from_secs(1)),
        ("gaussian calibration", gaussian_calibration, Duration::from_secs(1)),
        ("dp brute force", dp_brute_force, Duration::from_secs(30)),
        ("metric preservation", metric_preservation, Duration::from_secs(120)),
        ("algebra laws", algebra_laws, Duration::from_secs(60)),
        ("determinism and round trip", determinism, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = run();
        let took = start.elapsed();
        let (ok, detail) = match verdict {
            Ok(d) if took <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; took {took:.1?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {} ({name}): {} [{took:.2?}] {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
