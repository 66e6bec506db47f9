//! Command-line harness: `wf`, `flow`, `propagate` and `verify`.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 low-confidence result.

pub mod commands;
pub mod config;
pub mod symbol;

use std::ffi::OsString;
use std::path::PathBuf;

use anisowave::propagators::Engine;
use anisowave::AnisotropyIndex;
use clap::{Args, CommandFactory, Parser, Subcommand};

use config::{Command, GridKind, PartialConfig, PartialGrid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_LOW_CONFIDENCE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "anisowave", version, about = "Anisotropic Gabor wave front experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Detect a wave front set; writes estimate.json, decay.csv and stft.pgm.
    Wf(Flags),
    /// Integrate a Hamilton flow; writes trajectory.csv.
    Flow(Flags),
    /// Evolve a datum and archive the run.
    Propagate(Flags),
    /// Evolve a datum and compare detected and flow-predicted wave front sets.
    Verify(Flags),
}

fn parse_sigma(s: &str) -> Result<AnisotropyIndex, String> {
    s.parse().map_err(|e: anisowave::Error| e.to_string())
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: anisowave::Error| e.to_string())
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected X,XI")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok([p(a)?, p(b)?])
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Canonical datum, e.g. gaussian:1, delta:0, constant, chirp:0.5,2, hermite:3, plane_wave:3.
    #[arg(long, value_name = "TAG:PARAMS")]
    datum: Option<String>,
    /// Anisotropy index, "k/m" or decimal.
    #[arg(long, value_parser = parse_sigma)]
    sigma: Option<AnisotropyIndex>,
    /// Grid points (power of two, at least 16).
    #[arg(long)]
    n: Option<usize>,
    /// Grid length for --grid fixed.
    #[arg(long)]
    length: Option<f64>,
    /// Grid family.
    #[arg(long, value_enum)]
    grid: Option<GridKind>,
    /// Gaussian window width; defaults to max(1, 4·dx).
    #[arg(long)]
    window_width: Option<f64>,
    /// Fitted decay order below which a ray is singular.
    #[arg(long)]
    threshold: Option<f64>,
    /// Evolution time.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Crank–Nicolson steps; for `flow`, the RK4 step is |t|/steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Propagation engine: airy, harmonic or cn.
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    /// Hamiltonian, e.g. harmonic:0.5, airy:0,0,1:1, quadratic:1,0,1, radial_power:1,1,2.
    #[arg(long, value_name = "TAG:PARAMS")]
    symbol: Option<String>,
    /// Initial phase-space point for `flow`.
    #[arg(long, value_name = "X,XI", value_parser = parse_pair, allow_hyphen_values = true)]
    z0: Option<[f64; 2]>,
    /// Also check that the flow commutes with anisotropic scaling (`flow` only).
    #[arg(long)]
    check_commutation: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// JSON experiment config; flags override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for randomized sampling.
    #[arg(long)]
    seed: Option<u64>,
}

impl Flags {
    fn partial(&self) -> PartialConfig {
        let flow_step = match (self.steps, self.t) {
            (Some(k), Some(t)) if t != 0.0 => Some(t.abs() / k as f64),
            _ => None,
        };
        PartialConfig {
            seed: self.seed,
            grid: PartialGrid { kind: self.grid, n: self.n, length: self.length, center: None },
            datum: self.datum.clone(),
            sigma: self.sigma,
            window_width: self.window_width,
            threshold: self.threshold,
            symbol: self.symbol.clone(),
            engine: self.engine,
            t: self.t,
            steps: self.steps,
            flow_step,
            z0: self.z0,
            check_commutation: self.check_commutation.then_some(true),
            ..PartialConfig::default()
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            if e.render().to_string().contains("Usage:") {
                return EXIT_INPUT;
            }
            let mut cmd = Cli::command();
            cmd.build();
            let sub = args.iter().skip(1).filter_map(|a| a.to_str()).find(|a| !a.starts_with('-'));
            let usage = match sub.and_then(|s| cmd.find_subcommand_mut(s)) {
                Some(sc) => sc.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("\n{usage}");
            return EXIT_INPUT;
        }
    };
    let (command, flags) = match &cli.command {
        Sub::Wf(f) => (Command::Wf, f),
        Sub::Flow(f) => (Command::Flow, f),
        Sub::Propagate(f) => (Command::Propagate, f),
        Sub::Verify(f) => (Command::Verify, f),
    };
    let resolved = (|| {
        let base = match &flags.config {
            Some(p) => PartialConfig::load(p)?,
            None => PartialConfig::default(),
        };
        base.overlay(&flags.partial()).resolve(command)
    })();
    let (cfg, notes) = match resolved {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_INPUT;
        }
    };
    for n in notes {
        eprintln!("note: {n}");
    }
    match commands::execute(&cfg, flags.out.as_deref()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}
