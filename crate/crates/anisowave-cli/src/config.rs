//! Experiment configuration: a partial file plus flag overrides resolve to
//! an [`ExperimentConfig`] with every default written out.

use std::path::Path;

use anisowave::propagators::Engine;
use anisowave::signal::{make_grid, CanonicalDatum, Grid};
use anisowave::{AnisotropyIndex, WindowSpec};
use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use crate::symbol::parse_symbol;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Wf,
    Flow,
    Propagate,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// `n` points on `[center − length/2, center + length/2)`.
    Fixed,
    /// `length = √(2πn)`: space and frequency steps agree.
    SelfDual,
    /// `length = (2^σ π n)^{1/(1+σ)}`.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub kind: GridKind,
    pub n: usize,
    pub length: f64,
    pub center: f64,
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub command: Command,
    pub seed: u64,
    pub grid: GridConfig,
    pub datum: String,
    pub sigma: AnisotropyIndex,
    pub window_width: f64,
    pub threshold: f64,
    pub symbol: String,
    pub engine: Engine,
    pub t: f64,
    /// Crank–Nicolson steps.
    pub steps: usize,
    /// RK4 step of the Hamilton flow.
    pub flow_step: f64,
    pub z0: [f64; 2],
    pub check_commutation: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialGrid {
    pub kind: Option<GridKind>,
    pub n: Option<usize>,
    pub length: Option<f64>,
    pub center: Option<f64>,
}

/// What a config file or the flags may set; `None` means "use the default".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub schema_version: Option<u32>,
    pub command: Option<Command>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: PartialGrid,
    pub datum: Option<String>,
    pub sigma: Option<AnisotropyIndex>,
    pub window_width: Option<f64>,
    pub threshold: Option<f64>,
    pub symbol: Option<String>,
    pub engine: Option<Engine>,
    pub t: Option<f64>,
    pub steps: Option<usize>,
    pub flow_step: Option<f64>,
    pub z0: Option<[f64; 2]>,
    pub check_commutation: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl PartialConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: PartialConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        match cfg.schema_version {
            Some(SCHEMA_VERSION) => Ok(cfg),
            Some(v) => bail!("config schema_version {v} is not supported (expected {SCHEMA_VERSION})"),
            None => bail!("config {} has no schema_version", path.display()),
        }
    }

    /// Fields set in `top` win.
    pub fn overlay(mut self, top: &PartialConfig) -> Self {
        overlay!(self, top; schema_version, command, seed, datum, sigma, window_width, threshold,
                 symbol, engine, t, steps, flow_step, z0, check_commutation);
        let (g, tg) = (&mut self.grid, &top.grid);
        overlay!(g, tg; kind, n, length, center);
        self
    }

    pub fn resolve(&self, command: Command) -> Result<(ExperimentConfig, Vec<String>)> {
        let mut notes = Vec::new();
        if let Some(c) = self.command {
            ensure!(c == command, "config is for '{}', not '{}'", name(c), name(command));
        }
        let sigma = self.sigma.unwrap_or_else(AnisotropyIndex::one);
        let kind = self.grid.kind.unwrap_or(GridKind::Fixed);
        let n = self.grid.n.unwrap_or(1024);
        let center = self.grid.center.unwrap_or(0.0);
        let length = match kind {
            GridKind::Fixed => self.grid.length.unwrap_or(40.0),
            GridKind::SelfDual => Grid::self_dual(n)?.length(),
            GridKind::Balanced => Grid::balanced(n, sigma.sigma())?.length(),
        };
        if kind != GridKind::Fixed && self.grid.length.is_some_and(|l| (l - length).abs() > 1e-9 * length) {
            notes.push(format!("--length ignored: {} grid has length {length}", name_grid(kind)));
        }
        let grid = make_grid(n, length, center)?;

        let window_width = match self.window_width {
            Some(w) => w,
            None => {
                let w = (4.0 * grid.dx).max(1.0);
                if w > 1.0 {
                    notes.push(format!("window width raised to 4·dx = {w} on this grid"));
                }
                w
            }
        };
        WindowSpec::new(window_width)?.samples(&grid)?;

        let needs_datum = command != Command::Flow;
        let datum = match (&self.datum, needs_datum) {
            (Some(d), _) => d.clone(),
            (None, true) => bail!("--datum is required for '{}'", name(command)),
            (None, false) => String::new(),
        };
        if needs_datum {
            datum.parse::<CanonicalDatum>()?;
        }

        let engine = self.engine.unwrap_or(Engine::Airy);
        let symbol = self.symbol.clone().unwrap_or_else(|| match (command, engine) {
            (Command::Flow, _) | (_, Engine::Harmonic | Engine::Cn) => "harmonic:0.5".into(),
            (_, Engine::Airy) => "airy:0,0,1:1".into(),
        });
        parse_symbol(&symbol)?;

        let threshold = self.threshold.unwrap_or(6.0);
        ensure!(threshold.is_finite() && threshold > 0.0, "threshold must be positive, got {threshold}");
        let t = self.t.unwrap_or(0.5);
        ensure!(t.is_finite(), "t must be finite");
        let steps = self.steps.unwrap_or(400);
        ensure!(steps > 0, "steps must be positive");
        let flow_step = self.flow_step.unwrap_or(1e-3);
        ensure!(flow_step.is_finite() && flow_step > 0.0, "flow step must be positive");
        let z0 = self.z0.unwrap_or([1.0, 0.0]);
        ensure!(z0.iter().all(|v| v.is_finite()), "z0 must be finite");

        let cfg = ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            command,
            seed: self.seed.unwrap_or(0),
            grid: GridConfig { kind, n, length, center },
            datum,
            sigma,
            window_width,
            threshold,
            symbol,
            engine,
            t,
            steps,
            flow_step,
            z0,
            check_commutation: self.check_commutation.unwrap_or(false),
        };
        Ok((cfg, notes))
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<Grid> {
        Ok(make_grid(self.grid.n, self.grid.length, self.grid.center)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is plain data")
    }

    /// Back to the partial form; resolving it again gives `self`.
    pub fn to_partial(&self) -> PartialConfig {
        serde_json::from_value(self.to_json()).expect("every resolved field is a partial field")
    }
}

pub fn name(c: Command) -> &'static str {
    match c {
        Command::Wf => "wf",
        Command::Flow => "flow",
        Command::Propagate => "propagate",
        Command::Verify => "verify",
    }
}

fn name_grid(k: GridKind) -> &'static str {
    match k {
        GridKind::Fixed => "fixed",
        GridKind::SelfDual => "self-dual",
        GridKind::Balanced => "balanced",
    }
}
