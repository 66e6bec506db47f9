//! Discrete STFT and its adjoint, cross-Wigner distribution, modulation
//! norms and localization operators.
//!
//! Phase-space arrays are `n × n`, row `j` ↔ space shift `x_j`, column `k` ↔
//! frequency `ξ_k`. All transforms carry the continuous-limit scale so that
//! values approximate `V_φu(x, ξ) = (2π)^{-1/2} ∫ u(y) φ(y − x) e^{-iyξ} dy`.

mod export;
mod wigner;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fft::{sign, Plan};
use crate::geometry::{theta_weight, AnisotropyIndex, PhasePoint};
use crate::parallel::{for_each_chunk, map_indexed};
use crate::signal::{Grid, Signal};
use crate::sum::pairwise;
use crate::{Error, Result, C64};

pub use export::{write_modulus_csv, write_pgm};
pub use wigner::wigner;

pub const MAX_PHASE_GRID: usize = 4096;

/// Gaussian analysis window, unit L² norm on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub width: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { width: 1.0 }
    }
}

impl WindowSpec {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Invalid(format!("window width must be positive, got {width}")));
        }
        Ok(WindowSpec { width })
    }

    /// `φ(m·dx)` for `m < n`, lags wrapped into `[−L/2, L/2)`.
    pub fn samples(&self, grid: &Grid) -> Result<Vec<f64>> {
        let min = 4.0 * grid.dx;
        if self.width < min {
            return Err(Error::WindowAliasing { width: self.width, min });
        }
        let n = grid.n;
        let mut phi: Vec<f64> = (0..n)
            .map(|m| {
                let y = if m < n / 2 { m as f64 } else { m as f64 - n as f64 } * grid.dx;
                (-y * y / (2.0 * self.width * self.width)).exp()
            })
            .collect();
        let norm = (grid.dx * phi.iter().map(|v| v * v).sum::<f64>()).sqrt();
        phi.iter_mut().for_each(|v| *v /= norm);
        Ok(phi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridMatrix {
    pub grid: Grid,
    /// Row-major `n × n`.
    pub values: Vec<C64>,
    /// Factor applied to the unitary row DFTs: `dx·√n/√(2π)`.
    pub scale: f64,
}

impl PhaseGridMatrix {
    pub fn zeros(grid: Grid) -> Self {
        PhaseGridMatrix { grid, values: vec![C64::new(0.0, 0.0); grid.n * grid.n], scale: continuum_scale(&grid) }
    }

    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.values[j * self.grid.n + k]
    }

    pub fn row(&self, j: usize) -> &[C64] {
        let n = self.grid.n;
        &self.values[j * n..(j + 1) * n]
    }

    /// `dx·dξ·Σ V·conj(W)`.
    pub fn inner(&self, other: &PhaseGridMatrix) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.dx * self.grid.dxi())
    }

    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|z| z.norm_sqr()).collect();
        (pairwise(&sq) * self.grid.dx * self.grid.dxi()).sqrt()
    }

    pub fn modulus(&self) -> ModulusField {
        let values: Vec<f64> = self.values.iter().map(|z| z.norm()).collect();
        let max = values.iter().cloned().fold(0.0, f64::max);
        ModulusField { grid: self.grid, values, max }
    }
}

fn continuum_scale(g: &Grid) -> f64 {
    g.dx * (g.n as f64).sqrt() / (2.0 * PI).sqrt()
}

/// Real field on the phase-space layout (weights, localization symbols).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Self {
        let n = grid.n;
        let mut values = vec![0.0; n * n];
        for_each_chunk(&mut values, n, |j, row| {
            let x = grid.x(j);
            for (k, v) in row.iter_mut().enumerate() {
                *v = f(x, grid.xi(k));
            }
        });
        RealField { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        RealField { grid, values: vec![c; grid.n * grid.n] }
    }
}

/// `|V_φu|` on the phase grid, with bilinear lookup at off-grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub max: f64,
}

impl ModulusField {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.grid.n + k]
    }

    /// Bilinear interpolation of the modulus at `(x, ξ)`, clamped to the grid.
    pub fn interp(&self, x: f64, xi: f64) -> f64 {
        let g = &self.grid;
        let n = g.n;
        let fi = ((x - g.x0) / g.dx).clamp(0.0, (n - 1) as f64);
        let fk = (xi / g.dxi() + (n / 2) as f64).clamp(0.0, (n - 1) as f64);
        let (i, k) = (fi.floor() as usize, fk.floor() as usize);
        let (a, b) = (fi - i as f64, fk - k as f64);
        let (i1, k1) = ((i + 1).min(n - 1), (k + 1).min(n - 1));
        (1.0 - a) * (1.0 - b) * self.get(i, k)
            + a * (1.0 - b) * self.get(i1, k)
            + (1.0 - a) * b * self.get(i, k1)
            + a * b * self.get(i1, k1)
    }
}

pub fn stft(u: &Signal, w: &WindowSpec) -> Result<PhaseGridMatrix> {
    let g = u.grid;
    let n = g.n;
    if n > MAX_PHASE_GRID {
        return Err(Error::Grid(format!("phase grid limited to n <= {MAX_PHASE_GRID}, got {n}")));
    }
    let phi = w.samples(&g)?;
    let plan = Plan::new(n);
    let c = g.dx / (2.0 * PI).sqrt();
    let phase: Vec<C64> = (0..n).map(|k| C64::from_polar(c, -g.x0 * g.xi(k))).collect();
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    for_each_chunk(&mut values, n, |j, row| {
        for (i, r) in row.iter_mut().enumerate() {
            *r = u.samples[i] * (phi[(i + n - j) % n] * sign(i));
        }
        plan.fwd.process(row);
        row.iter_mut().zip(&phase).for_each(|(r, p)| *r *= p);
    });
    Ok(PhaseGridMatrix { grid: g, values, scale: continuum_scale(&g) })
}

/// Adjoint of [`stft`]; with a unit window it inverts it exactly.
pub fn istft(v: &PhaseGridMatrix, w: &WindowSpec) -> Result<Signal> {
    let g = v.grid;
    let n = g.n;
    if v.values.len() != n * n {
        return Err(Error::Shape { expected: n * n, got: v.values.len() });
    }
    let phi = w.samples(&g)?;
    let plan = Plan::new(n);
    let phase: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, g.x0 * g.xi(k))).collect();
    let mut rows = v.values.clone();
    for_each_chunk(&mut rows, n, |_, row| {
        row.iter_mut().zip(&phase).for_each(|(r, p)| *r *= p);
        plan.inv.process(row);
        row.iter_mut().enumerate().for_each(|(i, r)| *r *= sign(i));
    });
    let c = g.dx * g.dxi() / (2.0 * PI).sqrt();
    let samples = map_indexed(n, |i| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            acc += rows[j * n + i] * phi[(i + n - j) % n];
        }
        acc * c
    });
    Signal::new(g, samples)
}

/// `‖u‖_{M_{σ,s}} ≈ (∬ |V_φu|² θ_σ^{2s})^{1/2}`. Returns `+∞` when the
/// weighted quadrature overflows.
pub fn modulation_norm(u: &Signal, a: AnisotropyIndex, s: f64, w: &WindowSpec) -> Result<f64> {
    let v = stft(u, w)?;
    let g = u.grid;
    let n = g.n;
    let rows: Vec<Vec<f64>> = map_indexed(n, |j| {
        let x = g.x(j);
        (0..n)
            .map(|k| {
                let th = theta_weight(&PhasePoint::d1(x, g.xi(k)), a);
                v.get(j, k).norm_sqr() * th.powf(2.0 * s)
            })
            .collect()
    });
    let terms: Vec<f64> = rows.into_iter().flatten().collect();
    if terms.iter().any(|t| !t.is_finite()) {
        return Ok(f64::INFINITY);
    }
    let total = pairwise(&terms) * g.dx * g.dxi();
    Ok(if total.is_finite() { total.sqrt() } else { f64::INFINITY })
}

/// `A_a u = V_φ*(a · V_φ u)`.
pub fn localization_apply(a: &RealField, u: &Signal, w: &WindowSpec) -> Result<Signal> {
    a.grid.check_same(&u.grid)?;
    let n = u.grid.n;
    if a.values.len() != n * n {
        return Err(Error::Shape { expected: n * n, got: a.values.len() });
    }
    let mut v = stft(u, w)?;
    v.values.iter_mut().zip(&a.values).for_each(|(z, &m)| *z *= m);
    istft(&v, w)
}
