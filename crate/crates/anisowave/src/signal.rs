//! Uniform periodic grids, sampled signals, the canonical test corpus and
//! the signal file format.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fft::{dft_centered, idft_centered};
use crate::{Error, Result, C64};

/// Uniform grid `x_i = x0 + i·dx`, `i < n`, with the DFT-dual frequency grid
/// `ξ_k = (k − n/2)·2π/(n·dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub x0: f64,
    pub dx: f64,
}

pub fn make_grid(n: usize, length: f64, center: f64) -> Result<Grid> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::Grid(format!("length must be positive, got {length}")));
    }
    Grid::new(n, center - length / 2.0, length / n as f64)
}

impl Grid {
    pub fn new(n: usize, x0: f64, dx: f64) -> Result<Grid> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("n = {n} is not a power of two >= 16")));
        }
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() {
            return Err(Error::Grid(format!("bad spacing dx = {dx} or origin x0 = {x0}")));
        }
        Ok(Grid { n, x0, dx })
    }

    /// Centered grid whose frequency grid coincides with its space grid
    /// (`L = √(2πn)`); the Fourier transform maps it onto itself.
    pub fn self_dual(n: usize) -> Result<Grid> {
        make_grid(n, (2.0 * PI * n as f64).sqrt(), 0.0)
    }

    /// Centered grid on which the ray `λ ↦ (λ, λ^σ)` leaves the space range
    /// and the Nyquist band at the same λ.
    pub fn balanced(n: usize, sigma: f64) -> Result<Grid> {
        let length = (2f64.powf(sigma) * PI * n as f64).powf(1.0 / (1.0 + sigma));
        make_grid(n, length, 0.0)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dx)
    }

    pub fn xi(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dxi()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.xi(k)).collect()
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn center(&self) -> f64 {
        self.x0 + self.length() / 2.0
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dx
    }

    /// Grid carrying the Fourier transform of signals on `self`.
    pub fn dual(&self) -> Grid {
        let dxi = self.dxi();
        Grid { n: self.n, x0: -((self.n / 2) as f64) * dxi, dx: dxi }
    }

    /// Index of the node nearest to `x`, if `x` lies in `[x0, x0 + L)`.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        if !(x >= self.x0 && x < self.x0 + self.length()) {
            return None;
        }
        let i = ((x - self.x0) / self.dx).round() as usize;
        Some(i.min(self.n - 1))
    }

    /// Periodic representative of `x` in `[x0, x0 + L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.length();
        (x - self.x0).rem_euclid(l) + self.x0
    }

    /// Equal up to roundoff in `x0` and `dx`, so a self-dual grid matches its dual.
    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        let tol = 1e-12 * self.dx.max(other.dx);
        if self.n == other.n && (self.dx - other.dx).abs() <= tol && (self.x0 - other.x0).abs() <= tol * self.n as f64 {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub grid: Grid,
    pub samples: Vec<C64>,
}

impl Signal {
    pub fn new(grid: Grid, samples: Vec<C64>) -> Result<Signal> {
        if samples.len() != grid.n {
            return Err(Error::Shape { expected: grid.n, got: samples.len() });
        }
        if let Some(i) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(Signal { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Signal {
        Signal { grid, samples: vec![C64::new(0.0, 0.0); grid.n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Signal {
        Signal { grid, samples: grid.xs().into_iter().map(f).collect() }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `⟨u, v⟩ = dx·Σ u_i·conj(v_i)`.
    pub fn inner(&self, other: &Signal) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let s: C64 = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.dx)
    }

    pub fn scaled(&self, c: C64) -> Signal {
        Signal { grid: self.grid, samples: self.samples.iter().map(|z| z * c).collect() }
    }

    pub fn axpy(&self, a: C64, other: &Signal) -> Result<Signal> {
        self.grid.check_same(&other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(u, v)| u + a * v).collect();
        Ok(Signal { grid: self.grid, samples })
    }

    /// Relative L² distance `‖self − other‖ / ‖other‖`.
    pub fn rel_distance(&self, other: &Signal) -> Result<f64> {
        let d = self.axpy(C64::new(-1.0, 0.0), other)?;
        Ok(d.l2_norm() / other.l2_norm())
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.samples.iter().all(|z| z.im.abs() <= tol * scale.max(f64::MIN_POSITIVE))
    }

    /// Unitary centered DFT of the samples (frequency index k ↔ ξ_k).
    pub fn dft(&self) -> Vec<C64> {
        dft_centered(&self.samples)
    }

    /// Continuous-limit Fourier transform `(2π)^{-1/2}∫u e^{-ixξ}`, sampled
    /// on [`Grid::dual`].
    pub fn fourier_transform(&self) -> Signal {
        let g = self.grid;
        let dual = g.dual();
        let scale = g.dx * (g.n as f64).sqrt() / (2.0 * PI).sqrt();
        let big = dft_centered(&self.samples);
        let samples = big.iter().enumerate().map(|(k, &v)| v * C64::from_polar(scale, -g.x0 * g.xi(k))).collect();
        Signal { grid: dual, samples }
    }

    /// Inverse of [`Signal::fourier_transform`]; `target` is the space grid
    /// whose dual is `self.grid`.
    pub fn inverse_fourier_transform(&self, target: &Grid) -> Result<Signal> {
        let d = target.dual();
        let close = d.n == self.grid.n
            && (d.dx - self.grid.dx).abs() <= 1e-12 * d.dx
            && (d.x0 - self.grid.x0).abs() <= 1e-12 * d.x0.abs();
        if !close {
            return Err(Error::GridMismatch);
        }
        let g = *target;
        let scale = g.dx * (g.n as f64).sqrt() / (2.0 * PI).sqrt();
        let big: Vec<C64> =
            self.samples.iter().enumerate().map(|(k, &v)| v * C64::from_polar(1.0 / scale, g.x0 * g.xi(k))).collect();
        Ok(Signal { grid: g, samples: idft_centered(&big) })
    }

    /// Fraction of the L² mass in the outer 5% strips on each side.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let n = self.grid.n;
        let strip = ((n as f64) * 0.05).ceil() as usize;
        let total: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = self.samples[..strip].iter().chain(&self.samples[n - strip..]).map(|z| z.norm_sqr()).sum();
        edge / total
    }
}

/// Non-fatal conditions detected while synthesizing a datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Warning {
    /// Instantaneous chirp frequency exceeds the grid's Nyquist frequency.
    ChirpNyquist { max_frequency: f64, nyquist: f64 },
    /// Periodic model is unreliable: mass near the grid boundary.
    BoundaryMass { fraction: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ChirpNyquist { max_frequency, nyquist } => {
                write!(f, "chirp frequency {max_frequency:.4} exceeds Nyquist {nyquist:.4}")
            }
            Warning::BoundaryMass { fraction } => {
                write!(f, "boundary strips carry {fraction:.3e} of the mass; periodic wrap affects results")
            }
        }
    }
}

pub const BOUNDARY_MASS_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum CanonicalDatum {
    Gaussian { width: f64 },
    Delta { center: f64 },
    Constant,
    Chirp { c: f64, degree: u32 },
    Hermite { order: u32 },
    PlaneWave { xi: f64 },
}

impl fmt::Display for CanonicalDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonicalDatum::Gaussian { width } => write!(f, "gaussian:{width}"),
            CanonicalDatum::Delta { center } => write!(f, "delta:{center}"),
            CanonicalDatum::Constant => write!(f, "constant"),
            CanonicalDatum::Chirp { c, degree } => write!(f, "chirp:{c},{degree}"),
            CanonicalDatum::Hermite { order } => write!(f, "hermite:{order}"),
            CanonicalDatum::PlaneWave { xi } => write!(f, "plane_wave:{xi}"),
        }
    }
}

impl FromStr for CanonicalDatum {
    type Err = Error;

    /// Parses `TAG[:P1[,P2]]`, e.g. `gaussian:1`, `chirp:0.5,2`, `constant`.
    fn from_str(s: &str) -> Result<Self> {
        let (tag, params) = match s.split_once(':') {
            Some((t, p)) => (t.trim(), p.split(',').map(str::trim).collect::<Vec<_>>()),
            None => (s.trim(), Vec::new()),
        };
        let bad = || Error::Datum(format!("cannot parse datum '{s}'"));
        let num = |i: usize| -> Result<f64> { params.get(i).ok_or_else(bad)?.parse::<f64>().map_err(|_| bad()) };
        let int = |i: usize| -> Result<u32> { params.get(i).ok_or_else(bad)?.parse::<u32>().map_err(|_| bad()) };
        let d = match tag {
            "gaussian" => CanonicalDatum::Gaussian { width: if params.is_empty() { 1.0 } else { num(0)? } },
            "delta" => CanonicalDatum::Delta { center: if params.is_empty() { 0.0 } else { num(0)? } },
            "constant" => CanonicalDatum::Constant,
            "chirp" => CanonicalDatum::Chirp { c: num(0)?, degree: if params.len() > 1 { int(1)? } else { 2 } },
            "hermite" => CanonicalDatum::Hermite { order: int(0)? },
            "plane_wave" => CanonicalDatum::PlaneWave { xi: num(0)? },
            _ => return Err(Error::Datum(format!("unknown datum tag '{tag}'"))),
        };
        d.validate()?;
        Ok(d)
    }
}

impl CanonicalDatum {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CanonicalDatum::Gaussian { width } if !(width > 0.0 && width.is_finite()) => {
                Err(Error::Datum(format!("gaussian width must be positive, got {width}")))
            }
            CanonicalDatum::Chirp { degree, .. } if degree < 2 => {
                Err(Error::Datum(format!("chirp degree must be >= 2, got {degree}")))
            }
            CanonicalDatum::Chirp { c, .. } if !c.is_finite() => Err(Error::Datum("chirp c not finite".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesized {
    pub signal: Signal,
    pub warnings: Vec<Warning>,
}

fn normalize(samples: &mut [C64], dx: f64) {
    let norm = (dx * samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    samples.iter_mut().for_each(|z| *z /= norm);
}

/// L²-normalized Hermite function `h_k(x)`, by the stable three-term
/// recurrence.
pub fn hermite_function(k: u32, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-x * x / 2.0).exp();
    for j in 0..k {
        let j = j as f64;
        let next = (2.0 / (j + 1.0)).sqrt() * x * cur - (j / (j + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn synthesize(datum: &CanonicalDatum, grid: &Grid) -> Result<Synthesized> {
    datum.validate()?;
    let g = *grid;
    let mut warnings = Vec::new();
    let samples: Vec<C64> = match *datum {
        CanonicalDatum::Gaussian { width } => {
            let mut s: Vec<C64> =
                g.xs().iter().map(|&x| C64::new((-x * x / (2.0 * width * width)).exp(), 0.0)).collect();
            normalize(&mut s, g.dx);
            s
        }
        CanonicalDatum::Delta { center } => {
            let i = g.nearest(center).ok_or_else(|| {
                Error::Datum(format!("delta center {center} outside [{}, {})", g.x0, g.x0 + g.length()))
            })?;
            let mut s = vec![C64::new(0.0, 0.0); g.n];
            s[i] = C64::new(1.0 / g.dx, 0.0);
            s
        }
        CanonicalDatum::Constant => vec![C64::new(1.0, 0.0); g.n],
        CanonicalDatum::Chirp { c, degree } => {
            let m = degree as i32;
            let max_frequency = g.xs().iter().map(|&x| (c * m as f64 * x.powi(m - 1)).abs()).fold(0.0, f64::max);
            if max_frequency > g.nyquist() {
                warnings.push(Warning::ChirpNyquist { max_frequency, nyquist: g.nyquist() });
            }
            g.xs().iter().map(|&x| C64::from_polar(1.0, c * x.powi(m))).collect()
        }
        CanonicalDatum::Hermite { order } => {
            let mut s: Vec<C64> = g.xs().iter().map(|&x| C64::new(hermite_function(order, x), 0.0)).collect();
            normalize(&mut s, g.dx);
            s
        }
        CanonicalDatum::PlaneWave { xi } => {
            if !(xi.abs() < g.nyquist()) {
                return Err(Error::Datum(format!("plane wave frequency {xi} outside Nyquist band {}", g.nyquist())));
            }
            g.xs().iter().map(|&x| C64::from_polar(1.0, xi * x)).collect()
        }
    };
    let signal = Signal::new(g, samples)?;
    let fraction = signal.boundary_mass_fraction();
    if fraction > BOUNDARY_MASS_LIMIT {
        warnings.push(Warning::BoundaryMass { fraction });
    }
    Ok(Synthesized { signal, warnings })
}

#[derive(Deserialize)]
struct SignalFile {
    n: usize,
    x0: f64,
    dx: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn push_floats(out: &mut String, xs: impl Iterator<Item = f64>) {
    out.push('[');
    for (i, x) in xs.enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("{x:.16e}"));
    }
    out.push(']');
}

/// Serializes with 17 significant digits, enough for a bit-exact round trip.
pub fn signal_to_json(s: &Signal) -> String {
    let mut out = format!("{{\"n\":{},\"x0\":{:.16e},\"dx\":{:.16e},\"re\":", s.grid.n, s.grid.x0, s.grid.dx);
    push_floats(&mut out, s.samples.iter().map(|z| z.re));
    out.push_str(",\"im\":");
    push_floats(&mut out, s.samples.iter().map(|z| z.im));
    out.push_str("}\n");
    out
}

pub fn signal_from_json(text: &str) -> Result<Signal> {
    let f: SignalFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let grid = Grid::new(f.n, f.x0, f.dx)?;
    if f.re.len() != f.n || f.im.len() != f.n {
        return Err(Error::Format(format!("expected {} samples, got re {} / im {}", f.n, f.re.len(), f.im.len())));
    }
    let samples = f.re.iter().zip(&f.im).map(|(&a, &b)| C64::new(a, b)).collect();
    Signal::new(grid, samples)
}

pub fn save_signal(s: &Signal, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, signal_to_json(s))?;
    Ok(())
}

pub fn load_signal(path: impl AsRef<Path>) -> Result<Signal> {
    signal_from_json(&std::fs::read_to_string(path)?)
}
