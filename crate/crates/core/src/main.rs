use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use llpsim::experiments::{
    self, Config, ContourMethod, Experiment, ExperimentError, Grid, HeuristicChoice, PercolateMode, WindowGrid,
};
use llpsim::pathfinding::Strategy;
use llpsim::Dims;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

/// Bond percolation and limited-lookahead pathfinding experiments.
///
/// Results are written as CSV (to --out, or stdout). A TOML file given with
/// --config supplies defaults; flags override it.
#[derive(Debug, Parser)]
#[command(name = "llpsim", version)]
struct Cli {
    /// Master seed; trial i of every grid point uses stream i of this seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per point estimate (per probe for `contour`).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// CSV output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write the rows as a JSON array.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Use 200-layer lattices and at most 200 trials.
    #[arg(long, global = true)]
    quick: bool,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the merged configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spanning probability, minimum side length, largest cluster or Newman-Ziff curves.
    Percolate(PercolateArgs),
    /// Pathfinding success rate over a (p, W, strategy) grid.
    Pathfind(PathfindArgs),
    /// Smallest p reaching a target success rate, per side length and window.
    Contour(ContourArgs),
    /// Stacked-block, unique-component and Γ-bound heuristics.
    Heuristic(HeuristicArgs),
    /// Newman-Ziff spanning curves with crossing points of consecutive lattices.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
#[group(id = "mode", multiple = false)]
struct PercolateModeArgs {
    /// Search for the smallest side length reaching --target.
    #[arg(long)]
    lmin: bool,
    /// Mean fraction of nodes in the largest cluster.
    #[arg(long)]
    largest: bool,
    /// Newman-Ziff curve, crossed against a lattice of half the size.
    #[arg(long)]
    newman_ziff: bool,
}

#[derive(Debug, Args)]
struct PercolateArgs {
    #[command(flatten)]
    mode: PercolateModeArgs,
    /// Lattice as TxYxZ (for --lmin only T is used).
    #[arg(long)]
    dims: Option<Dims>,
    /// Probabilities: a value, a list `a,b` or a range `start:stop:step`.
    #[arg(long)]
    p: Option<Grid>,
    #[arg(long)]
    target: Option<f64>,
    /// Largest side length tried by --lmin.
    #[arg(long)]
    cap: Option<u32>,
}

#[derive(Debug, Args)]
struct PathfindArgs {
    #[arg(long)]
    dims: Option<Dims>,
    #[arg(long)]
    p: Option<Grid>,
    /// Windows: a value, a list or a range `start:stop[:step]`.
    #[arg(long)]
    window: Option<WindowGrid>,
    /// Comma-separated strategy names, or `all`.
    #[arg(long, value_parser = parse_strategies)]
    strategy: Option<StrategyList>,
}

#[derive(Debug, Args)]
struct ContourArgs {
    #[arg(long, value_parser = parse_method)]
    method: Option<ContourMethod>,
    /// Comma-separated side lengths.
    #[arg(long, value_delimiter = ',')]
    sides: Option<Vec<u32>>,
    #[arg(long)]
    window: Option<WindowGrid>,
    /// Lattice length L_t.
    #[arg(long)]
    length: Option<u32>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    target: Option<f64>,
    /// Bisection stops once the bracket on p is this narrow.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Debug, Args)]
struct HeuristicArgs {
    /// Comma-separated: stacked-block, unique-component, gamma.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    kind: Option<Vec<HeuristicChoice>>,
    #[arg(long, value_delimiter = ',')]
    sides: Option<Vec<u32>>,
    #[arg(long)]
    window: Option<WindowGrid>,
    #[arg(long)]
    p: Option<Grid>,
    #[arg(long)]
    length: Option<u32>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated lattices, e.g. `16x16x16,24x24x24`.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<Dims>>,
    #[arg(long)]
    p: Option<Grid>,
}

#[derive(Debug, Clone)]
struct StrategyList(Vec<Strategy>);

fn parse_strategies(s: &str) -> Result<StrategyList, String> {
    if s == "all" {
        return Ok(StrategyList(Strategy::ALL.to_vec()));
    }
    s.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>().map(StrategyList)
}

fn parse_method(s: &str) -> Result<ContourMethod, String> {
    match s {
        "direct" => Ok(ContourMethod::Direct),
        "unique-component" => Ok(ContourMethod::UniqueComponent),
        _ => Err(format!("unknown method `{s}` (expected direct or unique-component)")),
    }
}

fn parse_kind(s: &str) -> Result<HeuristicChoice, String> {
    match s {
        "stacked-block" => Ok(HeuristicChoice::StackedBlock),
        "unique-component" => Ok(HeuristicChoice::UniqueComponent),
        "gamma" => Ok(HeuristicChoice::Gamma),
        _ => Err(format!("unknown heuristic `{s}` (expected stacked-block, unique-component or gamma)")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Applies command-line flags on top of `config` and names the experiment to run.
fn merge(cli: Cli, mut config: Config) -> (Experiment, Config) {
    set(&mut config.seed, cli.seed);
    set(&mut config.trials, cli.trials);
    config.workers = cli.workers.or(config.workers);
    config.out = cli.out.or(config.out);
    config.json = cli.json.or(config.json);
    config.quick |= cli.quick;
    let experiment = match cli.command {
        Command::Percolate(a) => {
            let c = &mut config.percolate;
            if a.mode.lmin {
                c.mode = PercolateMode::Lmin;
            } else if a.mode.largest {
                c.mode = PercolateMode::Largest;
            } else if a.mode.newman_ziff {
                c.mode = PercolateMode::NewmanZiff;
            }
            set(&mut c.dims, a.dims);
            set(&mut c.p, a.p);
            set(&mut c.target, a.target);
            set(&mut c.cap, a.cap);
            Experiment::Percolate
        }
        Command::Pathfind(a) => {
            let c = &mut config.pathfind;
            set(&mut c.dims, a.dims);
            set(&mut c.p, a.p);
            set(&mut c.window, a.window);
            set(&mut c.strategies, a.strategy.map(|s| s.0));
            Experiment::Pathfind
        }
        Command::Contour(a) => {
            let c = &mut config.contour;
            set(&mut c.method, a.method);
            set(&mut c.sides, a.sides);
            set(&mut c.window, a.window);
            set(&mut c.length, a.length);
            set(&mut c.strategy, a.strategy);
            set(&mut c.target, a.target);
            set(&mut c.tolerance, a.tolerance);
            set(&mut c.trials_per_probe, cli.trials);
            Experiment::Contour
        }
        Command::Heuristic(a) => {
            let c = &mut config.heuristic;
            set(&mut c.kinds, a.kind);
            set(&mut c.sides, a.sides);
            set(&mut c.window, a.window);
            set(&mut c.p, a.p);
            set(&mut c.length, a.length);
            Experiment::Heuristic
        }
        Command::Sweep(a) => {
            let c = &mut config.sweep;
            set(&mut c.dims, a.dims);
            set(&mut c.p, a.p);
            Experiment::Sweep
        }
    };
    (experiment, config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => Config::default(),
    };
    let print_config = cli.print_config;
    let (experiment, config) = merge(cli, config);
    if print_config {
        print!("{}", config.to_toml());
        return ExitCode::SUCCESS;
    }

    let rows = match experiments::run(experiment, &config) {
        Ok(rows) => rows,
        Err(e @ (ExperimentError::Config(_) | ExperimentError::Simulation(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    let written = match &config.out {
        Some(path) => experiments::write_csv(&rows, path).map_err(|e| (path.clone(), e)),
        None => experiments::write_csv_to(&rows, io::stdout().lock()).map_err(|e| (PathBuf::from("<stdout>"), e)),
    }
    .and_then(|()| match &config.json {
        Some(path) => experiments::write_json(&rows, path).map_err(|e| (path.clone(), e)),
        None => Ok(()),
    });
    if let Err((path, e)) = written {
        eprintln!("error: cannot write {}: {e}", path.display());
        return ExitCode::from(EXIT_IO);
    }
    ExitCode::SUCCESS
}
