//! Argument parsing and dispatch for the `leris` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use leris_core::sweep::Figure;
use log::info;

use crate::config::{parse_config, ConfigError, RunConfig};
use crate::fixture::{Fixture, BUNDLED};
use crate::output::{table_csv, write_csv, write_file, Meta};
use crate::run::{self, RunError};

#[derive(Debug, Parser)]
#[command(name = "leris", version, about = "VCSEL-assisted RIS localization, sensing and routing simulator")]
pub struct Cli {
    /// TOML configuration; omitted keys take the reference values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trials per sweep point (or in total for `simulate`).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["4b", "5", "6", "7", "8"])]
    pub figure: Option<String>,
    #[arg(long, global = true, value_parser = ["lm5", "dual3"])]
    pub method: Option<String>,
    /// Decide obstruction from the raw straddle test, without the extent filters.
    #[arg(long, global = true)]
    pub raw_prop3: bool,
    #[arg(long, global = true, value_parser = ["hemi", "sphere"])]
    pub normalization: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a pose from a JSON fixture and print it as CSV.
    Localize {
        /// Fixture file; the bundled noiseless one when omitted.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Sweep one scenario and write reflections.csv and feasibility.csv.
    Map,
    /// Run end-to-end trials and write trials.csv.
    Simulate,
    /// Reproduce one figure's table (needs --figure).
    Sweep,
    /// Max-min time shares for a list of rates, printed as CSV.
    Allocate {
        /// Comma-separated rates in bps/Hz.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        rates: Vec<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Localize { .. } => "localize",
            Command::Map => "map",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Allocate { .. } => "allocate",
        }
    }
}

fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, rec| writeln!(buf, "{}: {}", rec.level().as_str().to_lowercase(), rec.args()))
        .try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: code={} {}", e.code(), e);
            e.exit_code()
        }
    }
}

/// Configuration file contents with the command-line overrides applied.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.display().to_string();
    }
    if let Some(m) = &cli.method {
        cfg.localization.method = m.clone();
    }
    if cli.raw_prop3 {
        cfg.sensing.raw_prop3 = true;
    }
    if let Some(n) = &cli.normalization {
        cfg.mmwave.normalization = n.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn io(context: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { context: context.display().to_string(), source }
}

fn csv_bytes(header: &str, rows: &[Vec<String>]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows).expect("writing to memory");
    buf
}

fn save(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), RunError> {
    let p = write_file(dir, name, bytes).map_err(io(dir))?;
    info!("wrote {}", p.display());
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<(), RunError> {
    let cfg = effective_config(cli)?;
    let dir = PathBuf::from(&cfg.out_dir);
    let command = cli.command.name();
    match &cli.command {
        Command::Sweep => {
            let name = cli
                .figure
                .as_deref()
                .ok_or_else(|| RunError::usage("cli.missing_figure", "sweep needs --figure {4b|5|6|7|8}"))?;
            let figure = Figure::parse(name).expect("clap restricts the figure names");
            let pool = run::pool(cli.threads)?;
            info!("figure {}: {} trials per point, seed {}", figure.name(), cfg.trials, cfg.seed);
            let out = run::sweep(&cfg, figure, &pool)?;
            let stem = format!("figure{}", figure.name());
            save(&dir, &format!("{stem}.csv"), &table_csv(&out.table))?;
            let meta = Meta::new(command, Some(figure.name()), &cfg, out.table.rows.len());
            save(&dir, &format!("{stem}.meta.json"), meta.to_json().as_bytes())?;
        }
        Command::Simulate => {
            let pool = run::pool(cli.threads)?;
            let rows = run::simulate(&cfg, &pool)?;
            save(&dir, "trials.csv", &csv_bytes(run::TRIALS_HEADER, &rows))?;
            save(&dir, "trials.meta.json", Meta::new(command, None, &cfg, rows.len()).to_json().as_bytes())?;
        }
        Command::Map => {
            let out = run::map(&cfg)?;
            save(&dir, "reflections.csv", &csv_bytes(run::REFLECTIONS_HEADER, &out.reflection_rows()))?;
            let rows = out.feasibility_rows();
            save(&dir, "feasibility.csv", &csv_bytes(run::FEASIBILITY_HEADER, &rows))?;
            save(&dir, "map.meta.json", Meta::new(command, None, &cfg, rows.len()).to_json().as_bytes())?;
            info!("sensed links agree with exact geometry on {:.2}% of decisions", 100.0 * out.agreement());
        }
        Command::Allocate { rates } => {
            if rates.is_empty() {
                return Err(RunError::usage("cli.rates", "allocate needs --rates r1,r2,..."));
            }
            let rows = run::allocate(rates)?;
            print_stdout(&csv_bytes(run::ALLOCATION_HEADER, &rows))?;
        }
        Command::Localize { fixture } => {
            let fx = match fixture {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| RunError::usage("cli.fixture", format!("cannot read {}: {e}", p.display())))?;
                    Fixture::parse(&text).map_err(|m| RunError::usage("cli.fixture", m))?
                }
                None => Fixture::parse(BUNDLED).expect("bundled fixture parses"),
            };
            let method = cfg.method()?;
            let est = run::localize(&cfg, &fx, method)?;
            if let (Some(r), Some(n)) = (fx.truth_position(), fx.truth_orientation()) {
                info!(
                    "position error {:e} m, orientation error {:e} rad",
                    (est.position - r).norm(),
                    est.orientation.cross(&n).norm().atan2(est.orientation.dot(&n))
                );
            }
            print_stdout(&csv_bytes(run::POSE_HEADER, &[run::pose_row(&est)]))?;
        }
    }
    Ok(())
}

fn print_stdout(bytes: &[u8]) -> Result<(), RunError> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes).and_then(|_| out.flush()).map_err(io(Path::new("stdout")))
}
