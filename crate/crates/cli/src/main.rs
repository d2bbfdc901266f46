//! `qwitness` command-line tool.
//!
//! Exit statuses: 0 success or violation witnessed, 1 completed without a
//! violation, 2 validation failure, 3 usage or I/O failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qwitness::document::{report_json, PlanDocument, TripleDocument};
use qwitness::optimizer::{full_search, grid_search, refine_local, ReducedParams};
use qwitness::simulator::{
    fibonacci_probes, noise_threshold, run_protocol, sweep, write_sweep_csv, zero_crossing, ExperimentPlan, NoiseFamily,
    NoiseModel, DEFAULT_BATCH_SIZE,
};
use qwitness::{Error, WitnessTriple};

#[derive(Parser, Debug)]
#[command(name = "qwitness", version, about = "Operator-ordering witnesses for a single qubit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check 0 <= A <= B <= I and report the first and second moment gaps.
    Verify {
        #[command(flatten)]
        input: TripleInput,
        /// Tolerance for the positivity checks.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Search for the strongest second-moment violation.
    Optimize {
        /// Grid spacing of the coarse scan, in (0, 0.01].
        #[arg(long, default_value_t = 1e-3)]
        grid: f64,
        /// Convergence tolerance of the local refinement.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Also scan the unreduced four-parameter space and report its constraint slacks.
        #[arg(long)]
        full: bool,
        /// Grid spacing of the unreduced scan, in (0, 0.05].
        #[arg(long, default_value_t = 0.02)]
        full_step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the two-stage test with finite shot statistics.
    Simulate {
        #[command(flatten)]
        input: TripleInput,
        #[arg(long)]
        seed: Option<u64>,
        /// Shots per observable and probe state.
        #[arg(long)]
        shots: Option<usize>,
        /// `none`, `depolarizing:<p>` or `jitter:<sigma_deg>`.
        #[arg(long)]
        noise: Option<String>,
        /// z threshold for both stages.
        #[arg(long)]
        significance: Option<f64>,
        /// Number of Fibonacci-lattice probe states added to the document's state.
        #[arg(long)]
        probe_grid: Option<usize>,
        /// Use exact expectations instead of sampling.
        #[arg(long)]
        exact: bool,
        /// Shots per RNG stream.
        #[arg(long)]
        batch_size: Option<usize>,
        /// JSON plan; explicit flags take precedence over its fields.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the protocol over a grid of depolarizing strengths and write CSV.
    Sweep {
        #[command(flatten)]
        input: TripleInput,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 0.4)]
        to: f64,
        #[arg(long, default_value_t = 81)]
        steps: usize,
        #[arg(long, default_value_t = 100_000)]
        shots: usize,
        #[arg(long, default_value_t = 5.0)]
        significance: f64,
        #[arg(long, default_value_t = 0)]
        probe_grid: usize,
        #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
        batch_size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate a pure-state triple into polarization angles.
    Angles {
        #[command(flatten)]
        input: TripleInput,
    },
}

#[derive(Args, Debug)]
struct TripleInput {
    /// Triple document (JSON).
    #[arg(value_name = "TRIPLE", conflicts_with = "triple")]
    path: Option<PathBuf>,
    /// Triple document (JSON), as a flag.
    #[arg(long, value_name = "TRIPLE")]
    triple: Option<PathBuf>,
}

impl TripleInput {
    fn path(&self) -> Option<&Path> {
        self.path.as_deref().or(self.triple.as_deref())
    }
}

const EXIT_NO_VIOLATION: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotOrdered | Error::PureStateRequired | Error::IterationCap { .. } => EXIT_INVALID,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_triple(input: &TripleInput) -> Result<WitnessTriple<f64>, Failure> {
    let path = input
        .path()
        .ok_or_else(|| Failure::usage("a triple document is required (positional or --triple)"))?;
    let text = read_text(path)?;
    let doc = TripleDocument::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    doc.to_triple().map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Opened before any computation so that an unwritable path fails early.
enum Sink {
    Stdout,
    File(PathBuf, File),
}

impl Sink {
    fn open(out: Option<&Path>) -> Result<Self, Failure> {
        match out {
            None => Ok(Sink::Stdout),
            Some(p) => File::create(p)
                .map(|f| Sink::File(p.to_path_buf(), f))
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        }
    }

    fn is_stdout(&self) -> bool {
        matches!(self, Sink::Stdout)
    }

    fn write(self, bytes: &[u8]) -> Result<(), Failure> {
        let io_fail = |what: String, e: io::Error| Failure::usage(format!("cannot write {what}: {e}"));
        match self {
            Sink::Stdout => {
                let mut out = io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|e| io_fail("standard output".into(), e))
            }
            Sink::File(p, mut f) => f
                .write_all(bytes)
                .and_then(|_| f.flush())
                .map_err(|e| io_fail(p.display().to_string(), e)),
        }
    }
}

fn require(ok: bool, message: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::usage(message()))
    }
}

fn positive_finite(name: &str, x: f64) -> Result<(), Failure> {
    require(x.is_finite() && x > 0.0, || format!("--{name} must be finite and positive, got {x}"))
}

fn verify(input: &TripleInput, tol: f64) -> CmdResult {
    require(tol.is_finite() && tol >= 0.0, || format!("--tol must be finite and >= 0, got {tol}"))?;
    let t = load_triple(input)?;
    let ordering = t.check_ordering(tol);
    let violation = t.violation_report();
    Sink::Stdout.write(report_json(&json!({ "ordering": ordering, "violation": violation })).as_bytes())?;
    if ordering.ordered {
        Ok(0)
    } else {
        eprintln!("triple is not ordered: 0 <= A <= B <= I fails at tol {tol:e}");
        Ok(EXIT_INVALID)
    }
}

fn optimize(grid: f64, tol: f64, full: bool, full_step: f64, out: Option<&Path>) -> CmdResult {
    require(grid > 0.0 && grid <= 0.01, || format!("--grid must lie in (0, 0.01], got {grid}"))?;
    positive_finite("tol", tol)?;
    require(full_step > 0.0 && full_step <= 0.05, || {
        format!("--full-step must lie in (0, 0.05], got {full_step}")
    })?;
    let sink = Sink::open(out)?;

    let coarse = grid_search(grid)?;
    let start = ReducedParams::new(coarse.params.a1, coarse.params.a2)?;
    let opt = refine_local(start, tol)?;
    let mut doc = TripleDocument::from_optimum(&opt, "reduced", grid, Some(tol));
    eprintln!(
        "objective {:.10} at a1={:.6} a2={:.6} b={:.6} xi={:.6} ({} evaluations)",
        opt.objective, opt.params.a1, opt.params.a2, opt.params.b, opt.params.xi, opt.evaluations
    );
    if full {
        let f = full_search(full_step)?;
        let (s1, s2) = f.constraint_slacks;
        eprintln!(
            "full search (step {full_step}): objective {:.6}, constraint slacks ({s1:.6}, {s2:.6})",
            f.objective
        );
        let block = json!({
            "step": full_step,
            "evaluations": f.evaluations,
            "objective": f.objective,
            "slacks": [s1, s2],
            "params": {"a1": f.params.a1, "a2": f.params.a2, "b": f.params.b, "xi": f.params.xi},
        });
        doc.metadata.insert("full_search".into(), block);
    }
    sink.write(doc.to_json().as_bytes())?;
    Ok(0)
}

struct SimulateArgs<'a> {
    input: &'a TripleInput,
    seed: Option<u64>,
    shots: Option<usize>,
    noise: Option<&'a str>,
    significance: Option<f64>,
    probe_grid: Option<usize>,
    exact: bool,
    batch_size: Option<usize>,
    plan: Option<&'a Path>,
    out: Option<&'a Path>,
}

fn build_plan(a: &SimulateArgs) -> Result<ExperimentPlan, Failure> {
    let doc = match a.plan {
        Some(p) => PlanDocument::parse(&read_text(p)?).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => PlanDocument {
            version: 1,
            triple: None,
            seed: None,
            shots: None,
            noise: None,
            significance: None,
            probe_grid: None,
            probe_states: None,
            exact: None,
            batch_size: None,
        },
    };
    let merged = PlanDocument {
        seed: a.seed.or(doc.seed),
        shots: a.shots.or(doc.shots),
        noise: a.noise.map(str::to_string).or(doc.noise.clone()),
        significance: a.significance.or(doc.significance),
        probe_grid: a.probe_grid.or(doc.probe_grid),
        exact: if a.exact { Some(true) } else { doc.exact },
        batch_size: a.batch_size.or(doc.batch_size),
        ..doc.clone()
    };
    require(merged.seed.is_some(), || "--seed is required".into())?;
    if let Some(n) = merged.shots {
        require(n >= 2, || format!("--shots must be at least 2, got {n}"))?;
    }
    if let Some(z) = merged.significance {
        positive_finite("significance", z)?;
    }
    if let Some(s) = &merged.noise {
        s.parse::<NoiseModel>()?;
    }
    let triple = match (a.input.path(), doc.inline_triple()?) {
        (Some(_), _) => load_triple(a.input)?,
        (None, Some(t)) => t,
        (None, None) => return Err(Failure::usage("a triple document is required (--triple or inline in --plan)")),
    };
    Ok(merged.to_plan(triple, None)?)
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let plan = build_plan(&a)?;
    let sink = Sink::open(a.out)?;
    let v = run_protocol(&plan)?;
    let report = json!({
        "config": {
            "seed": plan.seed,
            "shots_per_observable": plan.shots_per_observable,
            "noise": plan.noise.to_string(),
            "significance": plan.significance,
            "probe_states": plan.probe_states.len(),
            "exact": plan.exact,
            "batch_size": plan.batch_size,
        },
        "verdict": v,
    });
    sink.write(report_json(&report).as_bytes())?;
    eprintln!(
        "stage 1 {}, stage 2 {} (z = {:.2}, threshold {})",
        if v.stage1_pass { "passed" } else { "failed" },
        if v.stage2_violation { "violation witnessed" } else { "no violation" },
        v.z_score,
        plan.significance
    );
    Ok(if v.stage2_violation { 0 } else { EXIT_NO_VIOLATION })
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    input: &TripleInput,
    seed: u64,
    from: f64,
    to: f64,
    steps: usize,
    shots: usize,
    significance: f64,
    probe_grid: usize,
    batch_size: usize,
    out: Option<&Path>,
) -> CmdResult {
    require((0.0..=1.0).contains(&from) && (0.0..=1.0).contains(&to) && from < to, || {
        format!("sweep range must satisfy 0 <= --from < --to <= 1, got [{from}, {to}]")
    })?;
    require(steps >= 2, || format!("--steps must be at least 2, got {steps}"))?;
    require(shots >= 2, || format!("--shots must be at least 2, got {shots}"))?;
    require(batch_size >= 1, || "--batch-size must be positive".into())?;
    positive_finite("significance", significance)?;
    let triple = load_triple(input)?;
    let sink = Sink::open(out)?;
    let to_stdout = sink.is_stdout();

    let mut plan = ExperimentPlan::new(triple, seed);
    plan.shots_per_observable = shots;
    plan.significance = significance;
    plan.batch_size = batch_size;
    plan.probe_states.extend(fibonacci_probes(probe_grid));
    let rows = sweep(&plan, from, to, steps)?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).map_err(|e| Failure::usage(format!("cannot format CSV: {e}")))?;
    sink.write(&csv)?;

    let estimate = zero_crossing(&rows);
    let exact = noise_threshold(&plan.triple, NoiseFamily::Depolarizing).ok();
    let line = match estimate {
        Some(p) => format!("p* = {p:.6}"),
        None => "p* = undetermined".to_string(),
    };
    let line = match exact {
        Some(e) => format!("{line} (closed form {e:.6})"),
        None => line,
    };
    if to_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
    Ok(0)
}

fn angles(input: &TripleInput) -> CmdResult {
    let t = load_triple(input)?;
    let setup = t.photon_angles().map_err(|e| match e {
        Error::PureStateRequired => Failure::invalid("a pure state is required: mixed states have no single polarization angle"),
        other => Failure::from(other),
    })?;
    for w in &setup.warnings {
        eprintln!("warning: {w}");
    }
    Sink::Stdout.write(report_json(&setup).as_bytes())?;
    Ok(0)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Verify { input, tol } => verify(&input, tol),
        Command::Optimize {
            grid,
            tol,
            full,
            full_step,
            out,
        } => optimize(grid, tol, full, full_step, out.as_deref()),
        Command::Simulate {
            input,
            seed,
            shots,
            noise,
            significance,
            probe_grid,
            exact,
            batch_size,
            plan,
            out,
        } => simulate(SimulateArgs {
            input: &input,
            seed,
            shots,
            noise: noise.as_deref(),
            significance,
            probe_grid,
            exact,
            batch_size,
            plan: plan.as_deref(),
            out: out.as_deref(),
        }),
        Command::Sweep {
            input,
            seed,
            from,
            to,
            steps,
            shots,
            significance,
            probe_grid,
            batch_size,
            out,
        } => run_sweep(
            &input,
            seed,
            from,
            to,
            steps,
            shots,
            significance,
            probe_grid,
            batch_size,
            out.as_deref(),
        ),
        Command::Angles { input } => angles(&input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
