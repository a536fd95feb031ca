use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use risnet::optimize::SearchOptions;
use risnet_cli::blockfile::{convert, parse_block_file};
use risnet_cli::experiments::{
    check_table2, eval, eval_table, radians, run_sweep, run_table1, run_table2, sweep_table,
    table1, table2, LinkSpec, Loads, ModelChoice, SearchConfig, SweepSpec, TABLE2_SPACINGS,
};
use risnet_cli::scenario_file::parse_scenario;
use risnet_cli::{CliError, Format, Result, Table};

/// Multiport simulator for RIS-aided links
#[derive(Parser, Debug)]
#[command(name = "risnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write results to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug, Clone, Copy)]
struct LinkArgs {
    /// Tx to RIS distance in wavelengths
    #[arg(long, default_value_t = 100.0)]
    d_rs: f64,

    /// RIS to Rx distance in wavelengths
    #[arg(long, default_value_t = 1000.0)]
    d_dr: f64,

    /// Port reference resistance in ohms
    #[arg(long, default_value_t = 50.0)]
    resistance: f64,
}

impl From<LinkArgs> for LinkSpec {
    fn from(a: LinkArgs) -> Self {
        LinkSpec {
            d_rs: a.d_rs,
            d_dr: a.d_dr,
            resistance: a.resistance,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct SearchArgs {
    /// Optimizer multi-starts
    #[arg(long, default_value_t = 24)]
    starts: usize,

    /// Seed for starting points and random baselines
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions::new(self.starts, self.seed)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single RIS element: transfer for x = X/R in {-inf, -1, 0, 1, inf}
    Table1 {
        #[command(flatten)]
        link: LinkArgs,

        /// Additional normalized reactances
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// Two RIS elements: optimum reactances at d in {0, 1/4, 1/2, 3/4, 1} wavelengths
    Table2 {
        #[command(flatten)]
        link: LinkArgs,

        #[command(flatten)]
        search: SearchArgs,

        /// Grid oracle step
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
    },
    /// Optimized, cross-applied and random-phase gains over element spacing
    Sweep {
        #[command(flatten)]
        link: LinkArgs,

        #[command(flatten)]
        search: SearchArgs,

        #[arg(long, default_value_t = 0.0)]
        spacing_min: f64,

        #[arg(long, default_value_t = 1.0)]
        spacing_max: f64,

        #[arg(long, default_value_t = 201)]
        spacing_steps: usize,

        /// Random-phase trials per point
        #[arg(long, default_value_t = 100_000)]
        trials: u64,

        /// Phase of element 1 (degrees) in the cross-applied conventional optimum
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        pinned_phase: f64,
    },
    /// Convert a Z block file to S or an S block file to Z
    Convert {
        /// Input block file
        input: PathBuf,
    },
    /// Normalized transfer matrix for given terminations
    Eval {
        /// Scenario file; defaults to the two-element link
        #[arg(long)]
        scenario: Option<PathBuf>,

        #[command(flatten)]
        link: LinkArgs,

        /// Element spacing in wavelengths for the default link
        #[arg(long, default_value_t = 0.5)]
        spacing: f64,

        /// Normalized reactances X/R, one per RIS element
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            conflicts_with = "phases"
        )]
        x: Vec<f64>,

        /// Reflection phases in degrees, one per RIS element
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phases: Vec<f64>,

        #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
        model: ModelChoice,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn emit(output: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source| CliError::Io { path, source }
    };
    match output {
        Some(path) => {
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush().map_err(io_err(path))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush().map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn emit_table(cli: &Cli, table: &Table) -> Result<()> {
    emit(cli.output.as_deref(), |w| table.write(w, cli.format))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Table1 { link, x } => {
            let rows = run_table1(&(*link).into(), x)?;
            emit_table(cli, &table1(&rows))
        }
        Command::Table2 {
            link,
            search,
            grid_step,
        } => {
            let cfg = SearchConfig {
                search: search.options(),
                grid_step: *grid_step,
                ..SearchConfig::default()
            };
            let rows = run_table2(&(*link).into(), &cfg, &TABLE2_SPACINGS)?;
            emit_table(cli, &table2(&rows))?;
            check_table2(&rows)
        }
        Command::Sweep {
            link,
            search,
            spacing_min,
            spacing_max,
            spacing_steps,
            trials,
            pinned_phase,
        } => {
            let spec = SweepSpec {
                link: (*link).into(),
                spacing_min: *spacing_min,
                spacing_max: *spacing_max,
                steps: *spacing_steps,
                trials: *trials,
                seed: search.seed,
                pinned_phase: radians(*pinned_phase),
                search: search.options(),
            };
            let rows = run_sweep(&spec)?;
            emit_table(cli, &sweep_table(&rows))
        }
        Command::Convert { input } => {
            let text = read(input)?;
            let file = parse_block_file(&text).map_err(|e| match e {
                CliError::Parse { line, message } => CliError::Parse {
                    line,
                    message: format!("{}: {message}", input.display()),
                },
                other => other,
            })?;
            let conv = convert(&file)?;
            for line in conv.report() {
                log::info!("{line}");
            }
            emit(cli.output.as_deref(), |w| {
                w.write_all(conv.render().as_bytes())
                    .map_err(|source| CliError::Io {
                        path: "<output>".into(),
                        source,
                    })
            })
        }
        Command::Eval {
            scenario,
            link,
            spacing,
            x,
            phases,
            model,
        } => {
            let sc = match scenario {
                Some(path) => parse_scenario(&read(path)?)?,
                None => LinkSpec::from(*link).pair(*spacing)?,
            };
            let loads = if !phases.is_empty() {
                Loads::PhasesDeg(phases.clone())
            } else if !x.is_empty() {
                Loads::Reactances(x.clone())
            } else {
                return Err(CliError::Argument(
                    "give terminations with --x or --phases".into(),
                ));
            };
            let result = eval(&sc, &loads, *model)?;
            log::info!(
                "max deviation among physical transfer forms: {:.3e}",
                result.deviation
            );
            emit_table(cli, &eval_table(&result))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
