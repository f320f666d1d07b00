//! `dfcalc`: runs the identity suites, prints chaos kernels of a functional,
//! and cross-checks exact expectations by Monte Carlo.
//!
//! Exit codes: 0 when everything passes, 1 on an identity failure, 2 on a
//! usage or input error.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dfcalc::chaos::{is_in_hn, is_in_hn_tol, kernels_general, ChaosExpansion};
use dfcalc::combinat::{factorial, rising_factorial};
use dfcalc::json::{self as codec, JsonScalar};
use dfcalc::law::expect_poly;
use dfcalc::montecarlo::{mc_expect, Sampler};
use dfcalc::report::{reports_to_csv, reports_to_json, VerificationReport};
use dfcalc::suites::{run_battery, SuiteConfig};
use dfcalc::tensor::for_each_index;
use dfcalc::{FiniteMeasure, PolyFunctional, Rational, Scalar};

const SEED_ENV: &str = "DFCALC_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "dfcalc", version, about = "Exact and Monte Carlo checks of the Dirichlet-Ferguson calculus")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scalar backend
    #[arg(long, value_enum, default_value = "exact", global = true)]
    mode: Mode,
    /// Largest number of atoms used by the suites
    #[arg(long, default_value_t = 3, global = true)]
    d: usize,
    #[arg(long, default_value_t = 3, global = true)]
    max_degree: usize,
    /// Randomized trials per identity
    #[arg(long, default_value_t = 50, global = true)]
    trials: usize,
    /// Base seed; the DFCALC_SEED environment variable takes precedence
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,
    /// Relative tolerance for float comparisons
    #[arg(long, default_value_t = dfcalc::scalar::DEFAULT_TOL, global = true)]
    tolerance: f64,
    /// Largest dense tensor, in entries
    #[arg(long, default_value_t = dfcalc::tensor::DEFAULT_MEMORY_CAP, global = true)]
    memory_cap: u64,
    /// Output file; standard output when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Self-test: perturb chaos kernels so the battery must fail
    #[arg(long, hide = true, global = true)]
    inject_fault: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every identity suite (the default command)
    Verify,
    /// Chaos kernels of a functional given as JSON
    Kernels(InputArgs),
    /// Monte Carlo estimate of the expectation of a functional (float mode)
    Mc {
        #[command(flatten)]
        input: InputArgs,
        /// Number of samples; scientific notation such as 1e5 is accepted
        #[arg(long, default_value = "100000", value_parser = parse_count)]
        samples: u64,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Functional file: {"d": d, "terms": {"0": c, "1": [...], ...}}
    file: PathBuf,
    /// Measure file: {"d": d, "mode": ..., "weights": [...]}; unit weights
    /// when absent
    #[arg(long)]
    measure: Option<PathBuf>,
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a count: `{s}`"))?;
    if v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("not a positive integer count: `{s}`"))
    }
}

/// Failure that maps to an exit code.
enum Failure {
    Usage(String),
    Identity,
}

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Identity) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = suite_config(&cli.run)?;
    match &cli.command {
        None | Some(Command::Verify) => verify(&cli.run, &cfg),
        Some(Command::Kernels(input)) => match cli.run.mode {
            Mode::Exact => kernels::<Rational>(&cli.run, &cfg, input),
            Mode::Float => kernels::<f64>(&cli.run, &cfg, input),
        },
        Some(Command::Mc { input, samples }) => mc(&cli.run, &cfg, input, *samples),
    }
}

fn suite_config(run: &RunArgs) -> Result<SuiteConfig, Failure> {
    let seed = match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV} must be an unsigned integer, found `{v}`")))?,
        Err(_) => run.seed,
    };
    let bad = |m: &str| Err(Failure::Usage(m.to_string()));
    if run.d < 1 {
        return bad("--d must be at least 1");
    }
    if run.trials < 1 {
        return bad("--trials must be at least 1");
    }
    if run.memory_cap < 1 {
        return bad("--memory-cap must be at least 1");
    }
    if !(run.tolerance.is_finite() && run.tolerance > 0.0) {
        return bad("--tolerance must be a positive number");
    }
    Ok(SuiteConfig {
        d: run.d,
        max_degree: run.max_degree,
        trials: run.trials,
        seed,
        tolerance: run.tolerance,
        memory_cap: run.memory_cap,
        inject_fault: run.inject_fault,
    })
}

fn verify(run: &RunArgs, cfg: &SuiteConfig) -> Outcome {
    let reports = match run.mode {
        Mode::Exact => run_battery::<Rational>(cfg),
        Mode::Float => run_battery::<f64>(cfg),
    };
    for rep in &reports {
        summarize(rep);
    }
    let text = match run.format {
        Format::Json => reports_to_json(&reports)?,
        Format::Csv => reports_to_csv(&reports)?,
    };
    emit(run.out.as_deref(), &text)?;
    if reports.iter().all(VerificationReport::passed) {
        Ok(())
    } else {
        Err(Failure::Identity)
    }
}

fn summarize(rep: &VerificationReport) {
    eprintln!("{}: {} checks, {} failures", rep.suite, rep.results.len(), rep.failures);
    for (id, (failed, total)) in rep.failures_by_identity() {
        if failed > 0 {
            eprintln!("  FAIL {id}: {failed}/{total}");
        }
    }
}

/// Writes the whole output at once: to a sibling temporary file that is
/// then renamed over the target, or to standard output.
fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| e.error)?;
        }
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    codec::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_inputs<S: JsonScalar>(input: &InputArgs) -> Result<(FiniteMeasure<S>, PolyFunctional<S>), Failure> {
    let f = codec::poly_from_json::<S>(&read_json(&input.file)?)?;
    let rho = match &input.measure {
        Some(p) => codec::measure_from_json::<S>(&read_json(p)?)?,
        None => FiniteMeasure::new(vec![S::one(); f.d()])?,
    };
    rho.check_dims(f.d())?;
    Ok((rho, f))
}

/// `sum_{n>=1} n!/theta^(2n) rho^[n](f_n^2)`, the variance part of the
/// chaos isometry.
fn isometry_norm<S: Scalar>(rho: &FiniteMeasure<S>, ce: &ChaosExpansion<S>) -> dfcalc::Result<S> {
    let mut acc = S::zero();
    for (n, k) in ce.kernels() {
        let sq = k.hadamard(k)?;
        let mut term = factorial::<S>(*n) * dfcalc::bracket::bracket_integrate(rho, &sq)?;
        term /= &rising_factorial(rho.theta(), 2 * n);
        acc += &term;
    }
    Ok(acc)
}

fn kernels<S: JsonScalar>(run: &RunArgs, cfg: &SuiteConfig, input: &InputArgs) -> Outcome {
    let (rho, f) = load_inputs::<S>(input)?;
    let ce = kernels_general(&rho, &f)?;
    let in_hn = |k: &dfcalc::TensorFn<S>| match S::MODE {
        dfcalc::Mode::Exact => is_in_hn(&rho, k),
        dfcalc::Mode::Float => is_in_hn_tol(&rho, k, cfg.tolerance),
    };
    let norm = isometry_norm(&rho, &ce)?;
    let mean = expect_poly(&rho, &f)?;
    let text = match run.format {
        Format::Json => {
            let kernels: serde_json::Map<String, Value> = ce
                .kernels()
                .iter()
                .map(|(n, k)| {
                    let entry = json!({
                        "values": codec::tensor_to_json(k)["values"].clone(),
                        "in_hn": in_hn(k),
                    });
                    (n.to_string(), entry)
                })
                .collect();
            let doc = json!({
                "mode": S::MODE.as_str(),
                "measure": codec::measure_to_json(&rho),
                "functional": codec::poly_to_json(&f),
                "f0": ce.f0().to_json(),
                "expectation": mean.to_json(),
                "kernels": kernels,
                "isometry_norm": norm.to_json(),
            });
            pretty(&doc)?
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["kind", "order", "index", "value"])?;
            w.write_record(["f0", "0", "", &ce.f0().to_string()])?;
            for (n, k) in ce.kernels() {
                let mut rows = Vec::new();
                for_each_index(k.d(), *n, |idx| {
                    let index = idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".");
                    rows.push([
                        "kernel".to_string(),
                        n.to_string(),
                        index,
                        k.get(idx).to_string(),
                    ]);
                });
                for r in rows {
                    w.write_record(&r)?;
                }
                w.write_record(["in_hn", &n.to_string(), "", &in_hn(k).to_string()])?;
            }
            w.write_record(["isometry_norm", "", "", &norm.to_string()])?;
            String::from_utf8(w.into_inner().map_err(|e| e.to_string())?)?
        }
    };
    emit(run.out.as_deref(), &text)
}

fn mc(run: &RunArgs, cfg: &SuiteConfig, input: &InputArgs, samples: u64) -> Outcome {
    if run.mode == Mode::Exact {
        return Err(Failure::Usage("mc needs --mode float".into()));
    }
    // the reference value is computed exactly from the same files
    let (rho_q, f_q) = load_inputs::<Rational>(input)?;
    let exact = expect_poly(&rho_q, &f_q)?.to_f64();
    let (rho, f) = load_inputs::<f64>(input)?;
    let est = mc_expect(&rho, &f, samples, cfg.seed)?;
    let report = est.report(exact);
    let text = match run.format {
        Format::Json => {
            let mut doc = serde_json::to_value(&report)?;
            doc["sampler"] = json!(Sampler::Gamma.id());
            pretty(&doc)?
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["mean", "std_error", "n", "seed", "exact_ref", "z_score"])?;
            w.write_record([
                report.mean.to_string(),
                report.std_error.to_string(),
                report.n.to_string(),
                report.seed.to_string(),
                report.exact_ref.to_string(),
                report.z_score.map_or(String::new(), |z| z.to_string()),
            ])?;
            String::from_utf8(w.into_inner().map_err(|e| e.to_string())?)?
        }
    };
    emit(run.out.as_deref(), &text)
}

fn pretty(doc: &Value) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}
