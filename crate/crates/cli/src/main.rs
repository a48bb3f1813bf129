//! `dynperc`: run one experiment and write its results as CSV or JSON.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use commands::RunError;
use config::{Command, ConfigError, ExperimentConfig};

/// Seeded experiments on dynamical percolation driven by exclusion
/// processes. Every key can also come from a `key = value` config file;
/// flags override the file.
#[derive(Parser, Debug)]
#[command(name = "dynperc", version)]
struct Cli {
    /// arm, correlate, integrate, spectral-exact, spectral-mc, duality, scan,
    /// structure-check, jp-check or constants
    command: Option<String>,
    /// Config file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the full configuration and exit
    #[arg(long)]
    print_config: bool,
    /// triangular or bond
    #[arg(long)]
    model: Option<String>,
    /// alpha:<a>, log:<a>, nn or iid
    #[arg(long)]
    kernel: Option<String>,
    /// Number of arms
    #[arg(long)]
    k: Option<String>,
    /// plane, half or quarter
    #[arg(long)]
    geometry: Option<String>,
    /// Half-plane side: lower, upper, left or right
    #[arg(long)]
    side: Option<String>,
    /// Colour of the first arm: open or closed
    #[arg(long)]
    first: Option<String>,
    /// Inner radius
    #[arg(long)]
    r: Option<String>,
    /// Outer radius or window half-width (comma-separated list)
    #[arg(long = "R")]
    big_r: Option<String>,
    /// Box half-widths for the clustering profile (comma-separated)
    #[arg(long)]
    r0: Option<String>,
    /// Torus side (0: smallest torus holding the window)
    #[arg(long = "L")]
    l: Option<String>,
    /// Times (comma-separated)
    #[arg(long)]
    t: Option<String>,
    /// Smallest time of the geometric grid, a power of 1/2
    #[arg(long = "t-min", alias = "t_min")]
    t_min: Option<String>,
    /// Time horizon of a scan
    #[arg(long = "T")]
    t_max: Option<String>,
    /// Exponents of the weighted integrals (comma-separated)
    #[arg(long)]
    gamma: Option<String>,
    /// Blocks per unit time for N_m
    #[arg(long)]
    m: Option<String>,
    /// Named Boolean function (majority3, and2, parity2, dictator,
    /// crossing:<n>, hex:<n>, onearm:<R>)
    #[arg(long)]
    function: Option<String>,
    /// spectral-mc quantity: profile or fourarm
    #[arg(long)]
    quantity: Option<String>,
    /// Cells as a:b pairs (comma-separated)
    #[arg(long, allow_hyphen_values = true)]
    cells: Option<String>,
    /// Monte Carlo samples
    #[arg(long)]
    samples: Option<String>,
    /// Number of instances, structures or trajectories
    #[arg(long)]
    instances: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (default: DYNPERC_THREADS, else all cores)
    #[arg(long)]
    threads: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Output file (default: standard output)
    #[arg(long)]
    out: Option<String>,
    /// Input curve for integrate
    #[arg(long)]
    input: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("model", &self.model),
            ("kernel", &self.kernel),
            ("k", &self.k),
            ("geometry", &self.geometry),
            ("side", &self.side),
            ("first", &self.first),
            ("r", &self.r),
            ("R", &self.big_r),
            ("r0", &self.r0),
            ("L", &self.l),
            ("t", &self.t),
            ("t_min", &self.t_min),
            ("T", &self.t_max),
            ("gamma", &self.gamma),
            ("m", &self.m),
            ("function", &self.function),
            ("quantity", &self.quantity),
            ("cells", &self.cells),
            ("samples", &self.samples),
            ("instances", &self.instances),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("format", &self.format),
            ("out", &self.out),
            ("input", &self.input),
        ]
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let command = cli
        .command
        .as_deref()
        .map(|c| c.parse::<Command>().map_err(|m| ConfigError { field: "command".into(), line: None, message: m }))
        .transpose()?;
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
                field: "config".into(),
                line: None,
                message: format!("{}: {e}", path.display()),
            })?;
            ExperimentConfig::parse(&text, command)?
        }
        None => ExperimentConfig::new(command.ok_or_else(|| ConfigError {
            field: "command".into(),
            line: None,
            message: "missing".into(),
        })?),
    };
    for (key, value) in cli.flags() {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn set_threads(cfg: &ExperimentConfig) -> Result<(), RunError> {
    let from_env = match std::env::var("DYNPERC_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError {
            field: "DYNPERC_THREADS".into(),
            line: None,
            message: format!("`{v}` is not a positive integer"),
        })?),
        Err(_) => None,
    };
    if let Some(n) = cfg.threads.or(from_env) {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn main_inner(cli: &Cli) -> Result<(), RunError> {
    let cfg = build_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    cfg.validate()?;
    set_threads(&cfg)?;
    let start = Instant::now();
    let report = commands::run(&cfg)?;
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(&cfg, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            report.write(&cfg, &mut w)?;
            w.flush()?;
        }
    }
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        // reader went away (e.g. piped into head)
        Err(RunError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dynperc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
