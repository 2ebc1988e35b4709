use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use cfill::convex_roof::{convex_roof_f4, MixedState, RoofOptions};
use cfill::geometry::{export_mesh, shape_for, MeshFormat, MeshMeta};
use cfill::measures::{fill4_from_profile, rank_symbol};
use cfill::verify::{check_sample, summarize, Suite, SuiteSettings};
use cfill::{concurrence_profile, measure, named_state, DensityMatrix, Error, PureState, SolverOptions};

const RANK_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "cfill", version, about = "Concurrence fill and related four-qubit entanglement measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report F4, GMC, GBC and the concurrence profile of one state.
    Measure {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two states under GMC, GBC and F4.
    Compare {
        /// Named state or path to a state JSON file.
        a: String,
        b: String,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite over seeded random states.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(short = 'n', long, default_value_t = 1000, value_parser = parse_samples)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solver starts per state (uniqueness suite).
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        /// Random local unitaries per state (invariance suite).
        #[arg(long, default_value_t = 50)]
        unitaries: usize,
        #[arg(long, default_value_t = 1e-12, value_parser = parse_tol)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the concurrence tetrahedron (or its zero-volume limit) as a mesh.
    ExportGeometry {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "obj", value_parser = parse_mesh_format)]
        format: MeshFormat,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upper bound on the convex-roof F4 of a 16x16 density matrix.
    ConvexRoof {
        /// JSON matrix of [re, im] pairs.
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        ensemble_size: Option<usize>,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 4, value_parser = parse_samples)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in state, e.g. ghz4, cluster4, w4, product.
    #[arg(long)]
    named: Option<String>,
    /// State JSON file: {"n_qubits": 4, "amplitudes": [[re, im], ...]}.
    #[arg(long)]
    state: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-12, value_parser = parse_tol)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            restarts: self.restarts,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Tsv,
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (1e-15..=1e-3).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [1e-15, 1e-3]"))
    }
}

fn parse_samples(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite `{s}` (expected one of {})", names.join(", "))
    })
}

fn parse_mesh_format(s: &str) -> Result<MeshFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Numerical(String),
    Suite(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Suite(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Suite(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. }
            | Error::Internal(_)
            | Error::InfeasibleProfile(_)
            | Error::NegativeSigma(_)
            | Error::DegenerateShape => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn read_state(path: &Path) -> Result<PureState, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    PureState::from_json_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(source: &Source) -> Result<PureState, Failure> {
    match (&source.named, &source.state) {
        (Some(name), _) => Ok(named_state(name)?),
        (_, Some(path)) => read_state(path),
        _ => Err(Failure::Usage("one of --named or --state is required".into())),
    }
}

fn name_or_path(arg: &str) -> Result<PureState, Failure> {
    match named_state(arg) {
        Ok(s) => Ok(s),
        Err(_) if Path::new(arg).exists() => read_state(Path::new(arg)),
        Err(e) => Err(Failure::Usage(format!("{e}; no file named `{arg}` either"))),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| io_failure(path, e)),
        None => io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| Failure::Usage(format!("stdout: {e}"))),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable report");
    bytes.push(b'\n');
    bytes
}

#[derive(Serialize)]
struct CompareRow {
    measure: &'static str,
    a: f64,
    b: f64,
    ranking: char,
}

#[derive(Serialize)]
struct Comparison {
    a: String,
    b: String,
    tolerance: f64,
    rows: Vec<CompareRow>,
}

fn compare(a: &str, b: &str, opts: &SolverOptions) -> Result<Comparison, Failure> {
    let ra = measure(&name_or_path(a)?, opts)?;
    let rb = measure(&name_or_path(b)?, opts)?;
    let row = |measure, x: f64, y: f64| CompareRow {
        measure,
        a: x,
        b: y,
        ranking: rank_symbol(x, y, RANK_TOL),
    };
    Ok(Comparison {
        a: a.to_string(),
        b: b.to_string(),
        tolerance: RANK_TOL,
        rows: vec![
            row("gmc", ra.gmc, rb.gmc),
            row("gbc", ra.gbc, rb.gbc),
            row("f4", ra.f4, rb.f4),
        ],
    })
}

fn tsv(c: &Comparison) -> Vec<u8> {
    let mut s = format!("measure\t{}\t{}\tranking\n", c.a, c.b);
    for r in &c.rows {
        s.push_str(&format!("{}\t{:.10}\t{:.10}\t{}\n", r.measure, r.a, r.b, r.ranking));
    }
    s.into_bytes()
}

#[derive(Serialize)]
struct RoofReport {
    /// Always an upper bound on the convex roof.
    value: f64,
    bound: &'static str,
    rank: usize,
    ensemble_size: usize,
    budget: usize,
    start_values: Vec<f64>,
    spread: f64,
    weights: Vec<f64>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Measure { source, solver, out } => {
            let report = measure(&load(&source)?, &solver.options())?;
            emit(out.as_deref(), &json_bytes(&report))
        }
        Command::Compare {
            a,
            b,
            format,
            solver,
            out,
        } => {
            let c = compare(&a, &b, &solver.options())?;
            let bytes = match format {
                TableFormat::Json => json_bytes(&c),
                TableFormat::Tsv => tsv(&c),
            };
            emit(out.as_deref(), &bytes)
        }
        Command::Verify {
            suite,
            samples,
            seed,
            restarts,
            unitaries,
            tol,
            max_iter,
            out,
        } => {
            let settings = SuiteSettings {
                solver: SolverOptions {
                    tol,
                    max_iter,
                    ..SolverOptions::default()
                },
                starts: restarts,
                local_unitaries: unitaries,
            };
            let outcomes = (0..samples as u64)
                .into_par_iter()
                .map(|i| check_sample(suite, i, seed, &settings))
                .collect();
            let report = summarize(suite, outcomes);
            emit(out.as_deref(), &json_bytes(&report))?;
            eprintln!(
                "{suite}: {}/{} passed, worst metric {:e}",
                report.passed, report.samples, report.worst_metric
            );
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Suite(format!(
                    "{suite}: {} of {} samples failed",
                    report.failed, report.samples
                )))
            }
        }
        Command::ExportGeometry {
            source,
            format,
            solver,
            out,
        } => {
            let profile = concurrence_profile(&load(&source)?)?;
            let fill = fill4_from_profile(&profile, &solver.options())?;
            let meta = MeshMeta {
                volume: fill.volume,
                f4: fill.f4,
                degeneracy: fill.degeneracy,
            };
            let shape = shape_for(&fill.solution)?;
            emit(out.as_deref(), &export_mesh(&shape, meta, format)?)
        }
        Command::ConvexRoof {
            rho,
            ensemble_size,
            budget,
            starts,
            seed,
            out,
        } => {
            let text = fs::read_to_string(&rho).map_err(|e| io_failure(&rho, e))?;
            let state = MixedState::new(DensityMatrix::from_json_str(&text)?)?;
            let opts = RoofOptions {
                ensemble_size,
                budget,
                starts,
                seed,
            };
            let r = convex_roof_f4(&state, &opts)?;
            let report = RoofReport {
                value: r.value,
                bound: "upper",
                rank: state.rank(),
                ensemble_size: ensemble_size.unwrap_or_else(|| state.default_ensemble_size()),
                budget,
                start_values: r.start_values,
                spread: r.spread,
                weights: r.best.weights,
            };
            emit(out.as_deref(), &json_bytes(&report))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
