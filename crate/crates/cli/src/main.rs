//! `thermoflat`: nonlinear pressures and equilibrium measures from a model file.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Parser)]
#[command(name = "thermoflat", version, about = "Nonlinear thermodynamic formalism solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Linear pressures and Perron data of every potential.
    Pressure(Common),
    /// Max-min value, optimizers and equilibrium measures.
    Solve(Common),
    /// Both sides of the game and the duality gap.
    Game(Common),
    /// Kantorovich problem between order-parameter distributions.
    Transport {
        #[command(flatten)]
        common: Common,
        /// One atom of the y+ distribution (comma-separated); repeatable.
        #[arg(long = "y-plus", value_delimiter = ',', num_args = 1.., allow_negative_numbers = true, action = clap::ArgAction::Append)]
        y_plus: Vec<f64>,
        /// One atom of the y- distribution (comma-separated); repeatable.
        #[arg(long = "y-minus", value_delimiter = ',', num_args = 1.., allow_negative_numbers = true, action = clap::ArgAction::Append)]
        y_minus: Vec<f64>,
    },
    /// Δ-functionals, affine pressures and sampled order parameters.
    Delta {
        #[command(flatten)]
        common: Common,
        /// Largest n for exact enumeration of μ(g∘θ(𝔼ₙ)).
        #[arg(long, default_value_t = 8)]
        birkhoff: usize,
        /// Number of sampled paths (0 disables sampling).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        /// Length n of each sampled Birkhoff average.
        #[arg(long, default_value_t = 1000)]
        length: usize,
        /// Histogram bins of the sampled order parameters.
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Comparison with the brute-force references.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Pressure, game, transport and oracle records in one report.
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        oracle: OracleArgs,
    },
}

#[derive(Args, Clone)]
struct OracleArgs {
    /// Grid points per free coordinate of the direct scan.
    #[arg(long, default_value_t = 41)]
    resolution: usize,
    /// Grid points per expectation of the entropy-function route.
    #[arg(long = "z-grid", default_value_t = 21)]
    z_grid: usize,
}

#[derive(Args, Clone)]
struct Common {
    /// Model file (schema thermoflat/1).
    model: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "sc-tol")]
    sc_tol: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    multistart: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "radius-plus")]
    radius_plus: Option<f64>,
    #[arg(long = "radius-minus")]
    radius_minus: Option<f64>,
    /// Report path; side files are written next to it. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> commands::Overrides {
        commands::Overrides {
            tol: self.tol,
            sc_tol: self.sc_tol,
            grid: self.grid,
            multistart: self.multistart,
            seed: self.seed,
            radius_plus: self.radius_plus,
            radius_minus: self.radius_minus,
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("THERMOFLAT_THREADS") else {
        return Ok(());
    };
    let n: usize =
        value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Failure::Validation(format!("THERMOFLAT_THREADS must be a positive integer, got {value:?}"))
        })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Solver(e.to_string()))
}

fn atoms(flat: &[f64], dim: usize) -> Result<Vec<Vec<f64>>, Failure> {
    if dim == 0 || flat.len() % dim != 0 {
        return Err(Failure::Validation(format!("{} coordinates do not form points of dimension {dim}", flat.len())));
    }
    Ok(flat.chunks(dim).map(<[f64]>::to_vec).collect())
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match cli.command {
        Command::Pressure(c) => {
            let (file, config) = commands::load(&c.model, &c.overrides())?;
            commands::emit(&commands::pressure(&file, &config)?, c.out.as_deref(), &[])
        }
        Command::Solve(c) => {
            let (file, config) = commands::load(&c.model, &c.overrides())?;
            let report = commands::solve(&file, &config, false)?;
            let csv = commands::scan_csv(&report.solution);
            commands::emit(&report, c.out.as_deref(), &[("scan.csv", csv)])
        }
        Command::Game(c) => {
            let (file, config) = commands::load(&c.model, &c.overrides())?;
            let report = commands::solve(&file, &config, true)?;
            let csv = commands::scan_csv(&report.solution);
            commands::emit(&report, c.out.as_deref(), &[("scan.csv", csv)])
        }
        Command::Transport { common: c, y_plus, y_minus } => {
            let (file, config) = commands::load(&c.model, &c.overrides())?;
            let model = file.model().map_err(Failure::from)?;
            let explicit = match (y_plus.is_empty(), y_minus.is_empty()) {
                (true, true) => None,
                (false, false) => Some((atoms(&y_plus, model.n_plus())?, atoms(&y_minus, model.n_minus())?)),
                _ => return Err(Failure::Validation("give both --y-plus and --y-minus, or neither".into())),
            };
            commands::emit(&commands::transport(&file, &config, explicit)?, c.out.as_deref(), &[])
        }
        Command::Delta { common: c, birkhoff, samples, length, bins } => {
            let (file, config) = commands::load(&c.model, &c.overrides())?;
            let (report, hist) = commands::delta(&file, &config, birkhoff, samples, length, bins)?;
            let side: Vec<(&str, String)> = hist.into_iter().map(|h| ("hist.csv", h)).collect();
            commands::emit(&report, c.out.as_deref(), &side)
        }
        Command::Oracle { common: c, oracle } => {
            let (file, config) = commands::load(&c.model, &c.overrides())?;
            commands::emit(&commands::oracle(&file, &config, oracle.resolution, oracle.z_grid)?, c.out.as_deref(), &[])
        }
        Command::Report { common: c, oracle } => {
            let (file, config) = commands::load(&c.model, &c.overrides())?;
            let report = commands::full_report(&file, &config, oracle.resolution, oracle.z_grid)?;
            let csv = commands::scan_csv(&report.game.solution);
            commands::emit(&report, c.out.as_deref(), &[("scan.csv", csv)])
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
