//! `dpsens`: check, account, run and verify programs.
//!
//! Exit codes: 0 success, 1 type error, 2 parse error, 3 runtime, input or
//! I/O error, 4 a verification check failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as J};

use dpsens_core::corpus;
use dpsens_core::eval::{inputs_from_json, run_program, ExactConfig, Inputs, DEFAULT_FUEL};
use dpsens_core::mechanisms::{Grid, Rng};
use dpsens_core::syntax::parse_program;
use dpsens_core::typeck::{budget_report, show_ty, typecheck_program, TypedProgram};
use dpsens_core::verify::{
    check_algebra_laws, check_dp, check_metric_preservation, default_neighbors, random_value, DistanceSpec,
    DpOptions, VerifyReport,
};

const EXIT_TYPE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "dpsens", version, about = "Sensitivity and privacy checker for .solo programs")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck a program and print the type of `main`.
    Check { file: PathBuf },
    /// Print the per-source privacy cost of a private program.
    Budget { file: PathBuf },
    /// Run a program with seeded noise.
    Run(RunArgs),
    /// Check the type system's guarantees empirically.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// List or print the bundled example programs.
    Examples {
        /// Print only the names.
        #[arg(long)]
        list: bool,
        /// Print this example's source.
        name: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// JSON object with a value for every source. Random inputs drawn
    /// from the seed are used when absent.
    #[arg(long)]
    inputs: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step limit.
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    /// Print every mechanism invocation as a JSON line.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Compare output distances against the sensitivity bound on random related inputs.
    Metric {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input distance for every source.
        #[arg(long, default_value_t = 1.0)]
        distance: f64,
        /// JSON object of per-source input distances; overrides --distance.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Check the privacy inequality on exact output distributions.
    Dp {
        file: PathBuf,
        /// First input; with --inputs2, the neighboring pair. Defaults to all
        /// zeros against the first source moved by one.
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long)]
        inputs2: Option<PathBuf>,
        /// Discretization grid `lo:hi:step`.
        #[arg(long, default_value = "-20:21:0.01")]
        grid: String,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Check against this epsilon instead of the budget's.
        #[arg(long)]
        eps: Option<f64>,
        /// Check against this delta instead of the budget's.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Randomized checks of the distance lemmas and the environment algebra.
    Lemmas {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A command's result: what to print and how to exit.
struct Outcome {
    code: u8,
    text: String,
    json: J,
}

impl Outcome {
    fn ok(text: String, json: J) -> Self {
        Outcome { code: 0, text, json }
    }

    fn fail(code: u8, text: String, json: J) -> Self {
        Outcome { code, text, json }
    }

    fn error(code: u8, kind: &str, message: String) -> Self {
        let json = json!({"status": "error", "kind": kind, "message": message});
        Outcome { code, text: message, json }
    }
}

fn read(path: &Path) -> Result<String, Outcome> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) => {
            // fall back to a bundled example of the same name
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            match corpus::get(stem) {
                Some(s) if path.extension().is_none_or(|x| x == "solo") => Ok(s.to_string()),
                _ => Err(Outcome::error(EXIT_RUNTIME, "io", format!("{}: {e}", path.display()))),
            }
        }
    }
}

fn load(path: &Path) -> Result<TypedProgram, Outcome> {
    let text = read(path)?;
    let program = parse_program(&text).map_err(|e| {
        let json = json!({
            "status": "error", "kind": "parse", "code": "ParseError",
            "line": e.span.line, "col": e.span.col, "message": e.to_string(),
        });
        Outcome::fail(EXIT_PARSE, format!("{}:{}: ParseError: {e}", path.display(), e.span), json)
    })?;
    typecheck_program(&program).map_err(|e| {
        let json = json!({
            "status": "error", "kind": "type", "code": e.code.as_str(),
            "line": e.span.line, "col": e.span.col, "message": e.to_string(),
        });
        Outcome::fail(EXIT_TYPE, format!("{}:{}", path.display(), e.diagnostic()), json)
    })
}

fn read_inputs(tp: &TypedProgram, path: &Path) -> Result<Inputs, Outcome> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Outcome::error(EXIT_RUNTIME, "io", format!("{}: {e}", path.display())))?;
    let j: J = serde_json::from_str(&text)
        .map_err(|e| Outcome::error(EXIT_RUNTIME, "input", format!("{}: {e}", path.display())))?;
    inputs_from_json(&tp.program, &j).map_err(|e| Outcome::error(EXIT_RUNTIME, "input", e.to_string()))
}

fn cmd_check(file: &Path) -> Result<Outcome, Outcome> {
    let tp = load(file)?;
    let ty = show_ty(&tp.main);
    let defs: Vec<J> = tp.defs.iter().map(|(n, t)| json!({"name": n, "type": show_ty(t)})).collect();
    Ok(Outcome::ok(ty.clone(), json!({"status": "ok", "type": ty, "defs": defs})))
}

fn cmd_budget(file: &Path) -> Result<Outcome, Outcome> {
    let tp = load(file)?;
    let entries = budget_report(&tp).map_err(|e| {
        let json = json!({"status": "error", "kind": "type", "code": e.code.as_str(), "message": e.to_string()});
        Outcome::fail(EXIT_TYPE, format!("{}: {e}", file.display()), json)
    })?;
    let text = entries.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n");
    Ok(Outcome::ok(text, json!({"status": "ok", "budget": entries})))
}

fn random_inputs(tp: &TypedProgram, seed: u64) -> Inputs {
    let mut rng = Rng::from_seed(seed);
    tp.program.sources.iter().map(|s| (s.name.clone(), random_value(&s.ty, &mut rng))).collect()
}

fn cmd_run(a: &RunArgs) -> Result<Outcome, Outcome> {
    let tp = load(&a.file)?;
    let inputs = match &a.inputs {
        Some(p) => read_inputs(&tp, p)?,
        None => random_inputs(&tp, a.seed),
    };
    let out = run_program(&tp, &inputs, a.seed, a.fuel).map_err(|e| Outcome::error(EXIT_RUNTIME, "runtime", e.to_string()))?;
    let trace: Vec<J> = out.trace.iter().map(|t| serde_json::to_value(t).expect("trace serializes")).collect();
    let mut text = String::new();
    if a.trace {
        for t in &trace {
            text.push_str(&t.to_string());
            text.push('\n');
        }
    }
    text.push_str(&format!("result: {}\nsteps: {}", out.value, out.steps));
    let mut j = json!({"status": "ok", "value": out.value.to_json(), "steps": out.steps});
    if a.trace {
        j["trace"] = J::Array(trace);
    }
    Ok(Outcome::ok(text, j))
}

fn report(r: VerifyReport) -> Outcome {
    let code = if r.pass { 0 } else { EXIT_VERIFY };
    let mut j = serde_json::to_value(&r).expect("report serializes");
    j["status"] = json!(if r.pass { "pass" } else { "fail" });
    Outcome::fail(code, r.to_string().trim_end().to_string(), j)
}

fn verify_error(e: dpsens_core::verify::VerifyError) -> Outcome {
    Outcome::error(EXIT_RUNTIME, "verify", e.to_string())
}

fn cmd_verify(v: &VerifyCmd) -> Result<Outcome, Outcome> {
    match v {
        VerifyCmd::Metric { file, trials, seed, distance, spec } => {
            let tp = load(file)?;
            let spec = match spec {
                None => DistanceSpec::uniform(&tp, *distance),
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| Outcome::error(EXIT_RUNTIME, "io", format!("{}: {e}", p.display())))?;
                    let map = serde_json::from_str(&text)
                        .map_err(|e| Outcome::error(EXIT_RUNTIME, "input", format!("{}: {e}", p.display())))?;
                    DistanceSpec(map)
                }
            };
            check_metric_preservation(&tp, &spec, *trials, *seed).map(report).map_err(verify_error)
        }
        VerifyCmd::Dp { file, inputs, inputs2, grid, tol, eps, delta, fuel } => {
            let tp = load(file)?;
            let (a, b) = match (inputs, inputs2) {
                (Some(p), Some(q)) => (read_inputs(&tp, p)?, read_inputs(&tp, q)?),
                (None, None) => default_neighbors(&tp),
                _ => return Err(Outcome::error(EXIT_RUNTIME, "input", "give both --inputs and --inputs2, or neither".into())),
            };
            let grid: Grid<f64> = grid.parse().map_err(|e| Outcome::error(EXIT_RUNTIME, "input", format!("--grid: {e}")))?;
            let opts = DpOptions { tol: *tol, claim_eps: *eps, claim_delta: *delta, fuel: *fuel, ..DpOptions::new(ExactConfig::new(grid)) };
            check_dp(&tp, &a, &b, &opts).map(report).map_err(verify_error)
        }
        VerifyCmd::Lemmas { trials, seed } => Ok(report(check_algebra_laws(*trials, *seed))),
    }
}

fn cmd_examples(list: bool, name: &Option<String>) -> Result<Outcome, Outcome> {
    if let Some(n) = name {
        let text = corpus::get(n).ok_or_else(|| Outcome::error(EXIT_RUNTIME, "input", format!("no bundled example `{n}`")))?;
        return Ok(Outcome::ok(text.trim_end().to_string(), json!({"status": "ok", "name": n, "source": text})));
    }
    let rows: Vec<(String, String)> = corpus::CORPUS
        .iter()
        .map(|(n, t)| {
            let e = match corpus::expectation(t).map(|e| e.outcome) {
                Some(corpus::Outcome::Type(t)) => t,
                Some(corpus::Outcome::Error(c)) => format!("error {c}"),
                None => String::new(),
            };
            (n.to_string(), e)
        })
        .collect();
    let text = if list {
        rows.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>().join("\n")
    } else {
        let w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        rows.iter().map(|(n, e)| format!("{n:w$}  {e}")).collect::<Vec<_>>().join("\n")
    };
    let j: Vec<J> = rows.iter().map(|(n, e)| json!({"name": n, "expect": e})).collect();
    Ok(Outcome::ok(text, json!({"status": "ok", "examples": j})))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { file } => cmd_check(file),
        Command::Budget { file } => cmd_budget(file),
        Command::Run(a) => cmd_run(a),
        Command::Verify(v) => cmd_verify(v),
        Command::Examples { list, name } => cmd_examples(*list, name),
    };
    let out = result.unwrap_or_else(|e| e);
    match cli.format {
        Format::Json => println!("{}", out.json),
        Format::Text if out.code == 0 || out.code == EXIT_VERIFY => println!("{}", out.text),
        Format::Text => eprintln!("{}", out.text),
    }
    ExitCode::from(out.code)
}
