//! `degbel` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or failed comparison, 2 I/O
//! error, 3 impossible history.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use degbel::belief::{bel_grid, linspace, posterior_density_grid, DensityGrid, DEFAULT_CELLS};
use degbel::oracle::{grid_filter, particle_filter, OracleError};
use degbel::{
    bel, check_theory, parse_query, posterior_density, BeliefError, BeliefProblem, History, QuadratureConfig, Theory,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "degbel", version, about = "Degrees of belief over noisy action histories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a theory file.
    Check {
        /// Theory file (alternative to --theory).
        path: Option<PathBuf>,
        #[arg(long)]
        theory: Option<PathBuf>,
    },
    /// Degree of belief in a query after a history.
    Bel(RunArgs),
    /// Posterior density of one fluent on a grid of points.
    Density {
        #[command(flatten)]
        run: RunArgs,
        /// Fluent to tabulate; may be omitted for single-fluent theories.
        #[arg(long)]
        fluent: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        grid_lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        grid_hi: f64,
        #[arg(long, default_value_t = 2048)]
        grid_n: usize,
    },
    /// Compare the engine with the grid and particle filters.
    OracleCompare {
        #[command(flatten)]
        run: RunArgs,
        /// Largest acceptable pairwise gap.
        #[arg(long, default_value_t = 5e-3)]
        tol: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    theory: PathBuf,
    /// Events such as `fwd(2); sonar()=4`.
    #[arg(long, default_value = "")]
    history: String,
    #[arg(long, default_value = "true")]
    query: String,
    #[arg(long, value_enum, default_value_t = Strategy::RegressQuad)]
    strategy: Strategy,
    /// Cells per fluent for the grid strategy and the grid filter.
    #[arg(long, default_value_t = DEFAULT_CELLS)]
    cells: usize,
    #[arg(long, default_value_t = 100_000)]
    particles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format; `density` defaults to csv, other verbs to text.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    RegressQuad,
    Grid,
    Particle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

/// A failure with its exit code; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<BeliefError> for Failure {
    fn from(e: BeliefError) -> Self {
        match e {
            BeliefError::ImpossibleHistory { .. } => Failure {
                code: 3,
                message: e.to_string(),
            },
            e => Failure::invalid(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::ImpossibleHistory => Failure {
                code: 3,
                message: e.to_string(),
            },
            e => Failure::invalid(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::io(format!("cannot write output: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check { path, theory } => check(path.or(theory)),
        Command::Bel(run) => cmd_bel(&run),
        Command::Density {
            run,
            fluent,
            grid_lo,
            grid_hi,
            grid_n,
        } => cmd_density(&run, fluent.as_deref(), grid_lo, grid_hi, grid_n),
        Command::OracleCompare { run, tol } => cmd_oracle_compare(&run, tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("degbel: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

/// Reads and checks a theory, printing every diagnostic to stderr.
fn load_theory(path: &PathBuf) -> Result<Theory, Failure> {
    let text = read(path)?;
    let (theory, diags) = check_theory(&text);
    let shown = path.display().to_string();
    for d in &diags {
        eprint!("{}", d.render(&text, &shown));
    }
    theory.ok_or_else(|| {
        let n = diags.iter().filter(|d| d.is_error()).count();
        Failure::invalid(format!("{shown}: {n} error(s)"))
    })
}

fn check(path: Option<PathBuf>) -> Result<(), Failure> {
    let path = path.ok_or_else(|| Failure::invalid("check needs a theory file"))?;
    let t = load_theory(&path)?;
    println!(
        "{}: ok ({} fluent(s), {} action(s))",
        t.name,
        t.fluents.len(),
        t.actions.len()
    );
    Ok(())
}

fn problem(run: &RunArgs) -> Result<BeliefProblem, Failure> {
    let t = load_theory(&run.theory)?;
    let hist = History::parse(&run.history).map_err(|d| {
        eprint!("{}", d.render(&run.history, "<history>"));
        Failure::invalid("invalid history")
    })?;
    let query = parse_query(&run.query, &t).map_err(|ds| {
        for d in ds {
            eprint!("{}", d.render(&run.query, "<query>"));
        }
        Failure::invalid("invalid query")
    })?;
    Ok(BeliefProblem::new(t, hist, query)?)
}

/// Falls back from quadrature to the grid when the problem is too large.
fn effective(strategy: Strategy, p: &BeliefProblem, cfg: &QuadratureConfig) -> Strategy {
    if strategy == Strategy::RegressQuad && p.dimension() > cfg.max_dimension {
        eprintln!(
            "degbel: dimension {} exceeds {}; using the grid strategy",
            p.dimension(),
            cfg.max_dimension
        );
        return Strategy::Grid;
    }
    strategy
}

#[derive(Serialize)]
struct BelReport {
    belief: f64,
    gamma: f64,
    abs_error: f64,
    dimension: usize,
    evaluations: u64,
}

fn cmd_bel(run: &RunArgs) -> Result<(), Failure> {
    let p = problem(run)?;
    let cfg = QuadratureConfig::default();
    let report = match effective(run.strategy, &p, &cfg) {
        s @ (Strategy::RegressQuad | Strategy::Grid) => {
            let r = if s == Strategy::RegressQuad {
                bel(&p, &cfg)?
            } else {
                bel_grid(&p, run.cells)?
            };
            for w in &r.warnings {
                eprintln!("degbel: warning: {w}");
            }
            BelReport {
                belief: r.belief,
                gamma: r.gamma,
                abs_error: r.estimated_abs_error,
                dimension: r.dimension,
                evaluations: r.evaluations,
            }
        }
        Strategy::Particle => {
            let cloud = particle_filter(&p.theory, &p.history, run.particles, run.seed)?;
            BelReport {
                belief: cloud.belief(&p.query)?,
                gamma: cloud.gamma,
                abs_error: cloud.variance(&p.query)?.sqrt(),
                dimension: p.dimension(),
                evaluations: (run.particles * p.history.len().max(1)) as u64,
            }
        }
    };
    let mut out = io::stdout().lock();
    match run.format.unwrap_or(Format::Text) {
        Format::Text => {
            writeln!(out, "belief      {:.10}", report.belief)?;
            writeln!(out, "gamma       {:.10e}", report.gamma)?;
            writeln!(out, "abs_error   {:.3e}", report.abs_error)?;
            writeln!(out, "dimension   {}", report.dimension)?;
            writeln!(out, "evaluations {}", report.evaluations)?;
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string(&report).expect("plain numbers"))?,
        Format::Csv => {
            writeln!(out, "belief,gamma,abs_error,dimension,evaluations")?;
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{},{}",
                report.belief, report.gamma, report.abs_error, report.dimension, report.evaluations
            )?;
        }
    }
    Ok(())
}

fn cmd_density(run: &RunArgs, fluent: Option<&str>, lo: f64, hi: f64, n: usize) -> Result<(), Failure> {
    let p = problem(run)?;
    let fluent = match fluent {
        Some(f) => f.to_string(),
        None if p.theory.fluents.len() == 1 => p.theory.fluents[0].name.clone(),
        None => {
            return Err(Failure::invalid(
                "--fluent is required when the theory has several fluents",
            ))
        }
    };
    let points = linspace(lo, hi, n);
    let cfg = QuadratureConfig::default();
    let d: DensityGrid = match effective(run.strategy, &p, &cfg) {
        Strategy::RegressQuad => posterior_density(&p.theory, &p.history, &fluent, &points, &cfg)?,
        Strategy::Grid => posterior_density_grid(&p.theory, &p.history, &fluent, &points, run.cells)?,
        Strategy::Particle => {
            return Err(Failure::invalid(
                "density supports the regress-quad and grid strategies",
            ))
        }
    };
    let mut out = io::stdout().lock();
    match run.format.unwrap_or(Format::Csv) {
        Format::Csv | Format::Text => d.write_csv(&mut out)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                fluent: &'a str,
                points: &'a [f64],
                densities: &'a [f64],
            }
            let r = Report {
                fluent: &d.fluent,
                points: &d.points,
                densities: &d.densities,
            };
            writeln!(out, "{}", serde_json::to_string(&r).expect("plain numbers"))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareReport {
    engine: f64,
    grid: f64,
    particle: f64,
    particle_stderr: f64,
    max_gap: f64,
    tol: f64,
    pass: bool,
}

fn cmd_oracle_compare(run: &RunArgs, tol: f64) -> Result<(), Failure> {
    let p = problem(run)?;
    let cfg = QuadratureConfig::default();
    let engine = match effective(Strategy::RegressQuad, &p, &cfg) {
        Strategy::RegressQuad => bel(&p, &cfg)?,
        _ => bel_grid(&p, run.cells)?,
    };
    let grid = grid_filter(&p.theory, &p.history, run.cells)?.belief(&p.query)?;
    let cloud = particle_filter(&p.theory, &p.history, run.particles, run.seed)?;
    let particle = cloud.belief(&p.query)?;
    let values = [engine.belief, grid, particle];
    let max_gap = values
        .iter()
        .flat_map(|a| values.iter().map(move |b| (a - b).abs()))
        .fold(0.0, f64::max);
    let report = CompareReport {
        engine: engine.belief,
        grid,
        particle,
        particle_stderr: cloud.variance(&p.query)?.sqrt(),
        max_gap,
        tol,
        pass: max_gap <= tol,
    };
    let mut out = io::stdout().lock();
    match run.format.unwrap_or(Format::Text) {
        Format::Text => {
            writeln!(out, "engine    {:.10}", report.engine)?;
            writeln!(out, "grid      {:.10} ({} cells)", report.grid, run.cells)?;
            writeln!(
                out,
                "particle  {:.10} ± {:.2e} ({} particles, seed {})",
                report.particle, report.particle_stderr, run.particles, run.seed
            )?;
            writeln!(out, "max gap   {:.3e} (tol {:.1e})", report.max_gap, report.tol)?;
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string(&report).expect("plain numbers"))?,
        Format::Csv => {
            writeln!(out, "engine,grid,particle,particle_stderr,max_gap,tol")?;
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                report.engine, report.grid, report.particle, report.particle_stderr, report.max_gap, report.tol
            )?;
        }
    }
    if !report.pass {
        return Err(Failure::invalid(format!(
            "gap {:.3e} exceeds tolerance {:.1e}",
            max_gap, tol
        )));
    }
    Ok(())
}
