use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hypercauchy::catalog::list_fixtures;
use hypercauchy::error::Error;
use hypercauchy::harness::VerificationReport;
use hypercauchy::integration::surface_area;
use hypercauchy_cli::{
    exit_code, fmt_num, integral_csv, load_algebra, load_surface, run, write_report, Experiment, GridConfig, Rule, RunConfig,
    SurfaceRef,
};

/// Numerical checks of the Cauchy integral theorem for algebra-valued
/// surface integrals.
#[derive(Parser)]
#[command(name = "hypercauchy", version)]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "HYPERCAUCHY_THREADS", default_value_t = 0)]
    threads: usize,
    /// Directory of user algebra files (*.json).
    #[arg(long, global = true)]
    user_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one verification experiment and write report.json and series.csv.
    Verify(VerifyArgs),
    /// Integrate Psi sigma over a closed surface.
    Integrate(IntegrateArgs),
    /// Surface area of a closed surface.
    Area(AreaArgs),
    /// Minkowski ratios or box counts of a surface.
    Measure(MeasureArgs),
    /// List the built-in and user fixtures.
    Fixtures,
}

#[derive(Args, Default)]
struct Overrides {
    /// JSON experiment config; flags given alongside override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algebra: Option<String>,
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    surface: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    /// Quadrature cells per unit length of parameter.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum)]
    rule: Option<Rule>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl Overrides {
    fn config(&self, experiment: Option<Experiment>) -> Result<RunConfig, String> {
        let base = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::default(),
        };
        let grid = match (self.grid, self.rule) {
            (None, None) => None,
            (cells, rule) => {
                Some(GridConfig::Full { cells: cells.unwrap_or(32), rule: rule.unwrap_or(Rule::Gauss3) })
            }
        };
        let flags = RunConfig {
            experiment,
            algebra: self.algebra.clone().map(hypercauchy_cli::AlgebraRef::Name),
            function: self.function.clone(),
            surface: self.surface.clone().map(SurfaceRef::Name),
            domain: self.domain.clone(),
            grid,
            epsilons: self.epsilons.clone(),
            depth: self.depth,
            seed: self.seed,
            probes: self.probes,
            resolution: self.resolution,
            ..Default::default()
        };
        Ok(base.overridden_by(flags))
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    #[command(flatten)]
    o: Overrides,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    o: Overrides,
}

#[derive(Args)]
struct AreaArgs {
    #[command(flatten)]
    o: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Minkowski,
    Covering,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long, value_enum, default_value = "minkowski")]
    kind: Measure,
    #[command(flatten)]
    o: Overrides,
}

enum Failure {
    Usage(String),
    Io(std::io::Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot start {} worker threads: {e}", cli.threads);
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(passed) => ExitCode::from(if passed { 0 } else { 3 }),
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool, Failure> {
    let user_dir = cli.user_dir.as_deref();
    match &cli.command {
        Command::Fixtures => {
            print!("{}", list_fixtures(user_dir));
            Ok(true)
        }
        Command::Verify(args) => {
            let config = args.o.config(args.experiment).map_err(Failure::Usage)?;
            verify(&config, &args.o, user_dir)
        }
        Command::Measure(args) => {
            let experiment = match args.kind {
                Measure::Minkowski => Experiment::Minkowski,
                Measure::Covering => Experiment::Covering,
            };
            let config = args.o.config(Some(experiment)).map_err(Failure::Usage)?;
            verify(&config, &args.o, user_dir)
        }
        Command::Integrate(args) => {
            let config = args.o.config(Some(Experiment::Lemma3)).map_err(Failure::Usage)?;
            let r = config.resolved().map_err(Failure::Usage)?;
            let algebra = load_algebra(&r.algebra, user_dir)?;
            let surface = load_surface(&r.surface)?;
            let grid = r.grid.grid()?;
            let csv = integral_csv(&surface, r.function.as_deref().unwrap_or("square"), &algebra, &grid)?;
            std::fs::create_dir_all(&args.o.out)?;
            std::fs::write(args.o.out.join("integrals.csv"), &csv)?;
            print!("{csv}");
            Ok(true)
        }
        Command::Area(args) => {
            let config = args.o.config(Some(Experiment::Lemma1)).map_err(Failure::Usage)?;
            let r = config.resolved().map_err(Failure::Usage)?;
            let surface = load_surface(&r.surface)?;
            let a = surface_area(&surface, &r.grid.grid()?)?;
            println!("{},{},{}", surface.label(), fmt_num(a.value), fmt_num(a.refinement_estimate));
            Ok(true)
        }
    }
}

fn verify(config: &RunConfig, o: &Overrides, user_dir: Option<&std::path::Path>) -> Result<bool, Failure> {
    let resolved = config.resolved().map_err(Failure::Usage)?;
    let start = Instant::now();
    let mut report: VerificationReport = run(&resolved, user_dir)?;
    if o.timing {
        report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    }
    let (json, _) = write_report(&o.out, &report)?;
    for c in &report.checks {
        println!(
            "{} {}: {} {} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt_num(c.observed),
            if c.inclusive { "<=" } else { "<" },
            fmt_num(c.limit)
        );
    }
    println!("{} {} -> {}", report.experiment, if report.passed { "passed" } else { "failed" }, json.display());
    Ok(report.passed)
}
