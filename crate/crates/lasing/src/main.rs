use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lasing::acceptance::{run_acceptance, Suite};
use lasing::core::oracle::{build_liouvillian, DEFAULT_CEILING, DEFAULT_TAIL_TOLERANCE};
use lasing::core::statistics::{find_g2_peak_with, PeakOptions, PeakResult};
use lasing::core::{Error as ModelError, SystemParams};
use lasing::output::{self, COLUMNS};
use lasing::sweep::{self, Engine, Grid, Spacing, SweepSpec, SweptVariable};
use lasing::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "lasing", version, about = "Steady state of the incoherently pumped one-emitter laser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a single parameter point.
    Point(PointArgs),
    /// Sweep the pump or the emitter decay rate over a grid.
    Sweep(SweepArgs),
    /// Locate the pump at which g2 is largest.
    Peak(PeakArgs),
    /// Run acceptance checks.
    Accept(AcceptArgs),
    /// Write the oracle density matrix as `row col re im` lines.
    DumpRho(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Rates share one unit; `g = 1` by default.
#[derive(Args, Debug, Clone)]
struct Rates {
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long, default_value_t = 0.01)]
    gamma_a: f64,
    #[arg(long, default_value_t = 0.01)]
    gamma_sigma: f64,
    #[arg(long, default_value_t = 0.01)]
    pump: f64,
    /// Drop the Purcell term (infinite coupling); recurrence only.
    #[arg(long)]
    universal: bool,
}

impl Rates {
    fn params(&self) -> Result<SystemParams> {
        SystemParams::new(self.g, self.gamma_a, self.gamma_sigma, self.pump).map_err(|e| Error::InvalidSpec(e.to_string()))
    }
}

#[derive(Args, Debug, Clone)]
struct Solver {
    /// Fixed truncation; automatic convergence when omitted.
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, value_enum, default_value_t = Engine::Recurrence)]
    engine: Engine,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOLERANCE)]
    tail_tol: f64,
    #[arg(long, default_value_t = DEFAULT_CEILING)]
    ceiling: usize,
    /// Highest coherence order reported.
    #[arg(long, default_value_t = 4)]
    orders: usize,
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    rates: Rates,
    #[command(flatten)]
    solver: Solver,
    /// Include p(n) and δ_n.
    #[arg(long)]
    distribution: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    rates: Rates,
    #[command(flatten)]
    solver: Solver,
    /// Swept rate, in units of γ_a.
    #[arg(long, value_enum, default_value_t = SweptVariable::Pump)]
    sweep: SweptVariable,
    #[arg(long, value_enum, default_value_t = Spacing::Log)]
    grid: Spacing,
    #[arg(long, default_value_t = 1e-3)]
    min: f64,
    #[arg(long, default_value_t = 1e3)]
    max: f64,
    #[arg(long, default_value_t = 61)]
    count: usize,
    /// Also write one p(n)/δ_n table per point.
    #[arg(long)]
    distributions: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Output stem: writes <stem>.csv and <stem>.json. CSV to stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct PeakArgs {
    #[command(flatten)]
    rates: Rates,
    /// Scan range in units of γ_a.
    #[arg(long, default_value_t = 1e-2)]
    pmin: f64,
    #[arg(long, default_value_t = 1e2)]
    pmax: f64,
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[arg(long, default_value_t = 1e-6)]
    rel_width: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct AcceptArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DumpArgs {
    #[command(flatten)]
    rates: Rates,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOLERANCE)]
    tail_tol: f64,
    #[arg(long, default_value_t = DEFAULT_CEILING)]
    ceiling: usize,
    /// Also write the Liouvillian nonzeros here.
    #[arg(long)]
    liouvillian: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::Io { context: dir.display().to_string(), source: e })?;
            }
            let f = fs::File::create(path).map_err(|e| Error::Io { context: path.display().to_string(), source: e })?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Io { context: "writing output".into(), source: e }
}

fn spec_from(rates: &Rates, solver: &Solver, variable: SweptVariable, grid: Grid) -> Result<SweepSpec> {
    let mut spec = SweepSpec::new(rates.params()?, variable, grid);
    spec.universal = rates.universal;
    spec.engine = solver.engine;
    spec.n_max = solver.nmax;
    spec.tail_tol = solver.tail_tol;
    spec.ceiling = solver.ceiling;
    spec.max_order = solver.orders;
    Ok(spec)
}

fn point(args: PointArgs) -> Result<ExitCode> {
    let p = args.rates.params()?;
    let mut spec = spec_from(&args.rates, &args.solver, SweptVariable::Pump, Grid::single(p.pump_dimless()))?;
    spec.distributions = args.distribution;
    spec.validate()?;
    let row = sweep::evaluate(&spec, 0, p.pump_dimless())?;
    let mut w = sink(args.out.as_deref())?;
    match args.format {
        Format::Csv => {
            let mut cols: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
            cols.extend((5..=spec.max_order).map(|k| format!("g{k}")));
            writeln!(w, "{}", cols.join(",")).map_err(io_err)?;
            writeln!(w, "{}", output::row_line(&row, spec.max_order)).map_err(io_err)?;
            if let Some(d) = &row.distribution {
                writeln!(w).map_err(io_err)?;
                output::write_distribution(&mut w, row.swept_value, d).map_err(io_err)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &row)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(if row.converged { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn run_sweep(args: SweepArgs) -> Result<ExitCode> {
    let grid = Grid { spacing: args.grid, min: args.min, max: args.max, count: args.count };
    let mut spec = spec_from(&args.rates, &args.solver, args.sweep, grid)?;
    spec.distributions = args.distributions;
    spec.workers = args.workers;
    let result = sweep::run_sweep(&spec)?;
    match &args.out {
        Some(stem) => {
            for path in output::write_sweep_files(stem, &result)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut w = sink(None)?;
            match args.format {
                Format::Csv => output::write_csv(&mut w, &result).map_err(io_err)?,
                Format::Json => output::write_sidecar(&mut w, &result)?,
            }
            w.flush().map_err(io_err)?;
        }
    }
    let failed = result.rows.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows did not converge", result.rows.len());
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn write_peak(w: &mut dyn Write, r: &PeakResult, format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "p_star,g2_max,bracket_lo,bracket_hi,converged")?;
            writeln!(w, "{:e},{:e},{:e},{:e},{}", r.p_star, r.g2_max, r.bracket.0, r.bracket.1, r.converged)
        }
        Format::Json => writeln!(
            w,
            "{{\"p_star\": {:e}, \"g2_max\": {:e}, \"bracket\": [{:e}, {:e}], \"converged\": {}}}",
            r.p_star, r.g2_max, r.bracket.0, r.bracket.1, r.converged
        ),
    }
}

fn peak(args: PeakArgs) -> Result<ExitCode> {
    let p = args.rates.params()?;
    let mode = if args.rates.universal { lasing::core::Mode::Universal } else { lasing::core::Mode::Full };
    let opts = PeakOptions { p_min: args.pmin, p_max: args.pmax, grid_points: args.points, rel_width: args.rel_width };
    let (result, code) = match find_g2_peak_with(&p, mode, &opts) {
        Ok(r) => (r, ExitCode::SUCCESS),
        Err(ModelError::NoPeak(r)) => {
            eprintln!("g2 is largest at the edge of the scan; no interior peak");
            (r, ExitCode::from(3))
        }
        Err(e) => return Err(e.into()),
    };
    let mut w = sink(args.out.as_deref())?;
    write_peak(&mut w, &result, args.format).and_then(|_| w.flush()).map_err(io_err)?;
    Ok(code)
}

fn accept(args: AcceptArgs) -> Result<ExitCode> {
    let report = run_acceptance(args.suite);
    let mut w = sink(args.out.as_deref())?;
    writeln!(w, "{report}").and_then(|_| w.flush()).map_err(io_err)?;
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn dump_rho(args: DumpArgs) -> Result<ExitCode> {
    if args.rates.universal {
        return Err(Error::InvalidSpec("the oracle has no universal (infinite coupling) form".into()));
    }
    let p = args.rates.params()?;
    let mut spec = SweepSpec::new(p, SweptVariable::Pump, Grid::single(p.pump_dimless()));
    spec.engine = Engine::Oracle;
    spec.n_max = args.nmax;
    spec.tail_tol = args.tail_tol;
    spec.ceiling = args.ceiling;
    spec.validate()?;
    let rho = sweep::oracle_state(&spec, &p)?;
    let mut w = sink(args.out.as_deref())?;
    output::write_rho(&mut w, &rho).and_then(|_| w.flush()).map_err(io_err)?;
    if let Some(path) = &args.liouvillian {
        let l = build_liouvillian(&p, rho.space())?;
        let mut w = sink(Some(path))?;
        output::write_liouvillian(&mut w, &l).and_then(|_| w.flush()).map_err(io_err)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Point(a) => point(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Peak(a) => peak(a),
        Command::Accept(a) => accept(a),
        Command::DumpRho(a) => dump_rho(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
