//! Solution operators for `∂_t u + i a^w(x, D) u = 0`: the exact Airy
//! multiplier, the harmonic oscillator, and Crank–Nicolson on the dense Weyl
//! matrix; plus the end-to-end propagation check against the Hamilton flow.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::fft::{dft_centered, idft_centered};
use crate::flow::{flow_of_direction, FlowOracle};
use crate::geometry::{AnisotropyIndex, PhasePoint};
use crate::parallel::map_indexed;
use crate::signal::{signal_to_json, Grid, Signal, BOUNDARY_MASS_LIMIT};
use crate::symbols::{quantize, SymbolDescriptor};
use crate::transforms::{modulation_norm, WindowSpec};
use crate::wavefront::{angular_hausdorff, estimate_wavefront, RayPlan};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirySpec {
    /// `p_coeffs[k]` multiplies `ξ^k`.
    pub p_coeffs: Vec<f64>,
    pub v: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl AirySpec {
    pub fn new(p_coeffs: Vec<f64>, v: f64) -> Result<Self> {
        let s = AirySpec { p_coeffs, v };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree() < 2 || self.p_coeffs.last() == Some(&0.0) {
            return Err(Error::Invalid("Airy polynomial needs degree >= 2 with a nonzero leading coefficient".into()));
        }
        if self.v == 0.0 || !self.v.is_finite() {
            return Err(Error::Invalid("Airy drift v must be nonzero".into()));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.p_coeffs.len().saturating_sub(1)
    }

    /// `1/(m − 1)`: the index for which the principal flow moves singularities.
    pub fn sigma_principal(&self) -> f64 {
        1.0 / (self.degree() as f64 - 1.0)
    }

    pub fn symbol(&self) -> SymbolDescriptor {
        SymbolDescriptor::PolyXiPlusVx { p_coeffs: self.p_coeffs.clone(), v: self.v }
    }

    /// Principal part `p_m ξ^m`.
    pub fn principal(&self) -> SymbolDescriptor {
        let mut c = vec![0.0; self.p_coeffs.len()];
        c[self.degree()] = self.p_coeffs[self.degree()];
        SymbolDescriptor::PolyXiPlusVx { p_coeffs: c, v: 0.0 }
    }

    /// Coefficients of the primitive `q` with `q' = p`, `q(0) = 0`.
    fn primitive(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.p_coeffs.iter().enumerate().map(|(k, c)| c / (k + 1) as f64)).collect()
    }

    /// Coefficients in `ξ` of `v^{-1}(q(ξ − s) − q(ξ))`, `s = t·v`, expanded
    /// exactly so the leading powers cancel symbolically.
    fn phase_coeffs(&self, t: f64) -> Vec<f64> {
        let q = self.primitive();
        let s = t * self.v;
        let deg = q.len() - 1;
        (0..deg)
            .map(|i| (i + 1..=deg).map(|j| q[j] * binomial(j, i) * (-s).powi((j - i) as i32)).sum::<f64>() / self.v)
            .collect()
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// `φ_t(ξ) = v^{-1}(q(ξ − tv) − q(ξ))`.
pub fn airy_phase(spec: &AirySpec, t: f64, xi: f64) -> f64 {
    horner(&spec.phase_coeffs(t), xi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub signal: Signal,
    pub warnings: Vec<String>,
}

/// `𝒦_t u = M_{−tv} ℱ^{-1}(e^{iφ_t} û)`.
pub fn airy_propagate(u0: &Signal, spec: &AirySpec, t: f64) -> Result<Propagated> {
    spec.validate()?;
    let g = u0.grid;
    if (t * spec.v).abs() >= g.length() / 2.0 {
        return Err(Error::Invalid(format!("|t·v| = {} exceeds half the domain", (t * spec.v).abs())));
    }
    let c = spec.phase_coeffs(t);
    let mut big = dft_centered(&u0.samples);
    let mut warnings = Vec::new();
    // Group displacement φ_t'(ξ) of the frequencies that carry mass.
    let peak = big.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dc: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
    let reach =
        (0..g.n).filter(|&k| big[k].norm() > 1e-10 * peak).map(|k| horner(&dc, g.xi(k)).abs()).fold(0.0, f64::max);
    if reach > g.length() / 2.0 {
        warnings.push(format!("phase gradient moves mass by {reach:.3}, more than half the domain; output aliases"));
    }
    big.iter_mut().enumerate().for_each(|(k, z)| *z *= C64::from_polar(1.0, horner(&c, g.xi(k))));
    let mut out = idft_centered(&big);
    let tv = t * spec.v;
    out.iter_mut().enumerate().for_each(|(i, z)| *z *= C64::from_polar(1.0, -tv * g.x(i)));
    Ok(Propagated { signal: Signal::new(g, out)?, warnings })
}

/// `ℱ𝒦_tℱ^{-1}`: `f ↦ e^{−iφ_{−t}(x)} f(x + tv)`, with the shift snapped to
/// the grid and applied circularly.
pub fn fourier_side_propagate(f0: &Signal, spec: &AirySpec, t: f64) -> Result<Signal> {
    spec.validate()?;
    let g = f0.grid;
    let shift = t * spec.v;
    if shift.abs() >= g.length() / 2.0 {
        return Err(Error::Invalid(format!("shift {shift} exceeds the safe margin {}", g.length() / 2.0)));
    }
    let s = (shift / g.dx).round() as isize;
    let n = g.n as isize;
    let c = spec.phase_coeffs(-t);
    let samples = (0..g.n)
        .map(|i| {
            let src = (i as isize + s).rem_euclid(n) as usize;
            f0.samples[src] * C64::from_polar(1.0, -horner(&c, g.x(i)))
        })
        .collect();
    Signal::new(g, samples)
}

/// Real symmetric matrix of `c(x² + ξ²)^w` on the grid: `c·diag(x²)` plus
/// the circulant Fourier multiplier `c·ξ²`.
pub fn harmonic_matrix(grid: &Grid, c: f64) -> DMatrix<f64> {
    let n = grid.n;
    let mult: Vec<C64> = (0..n).map(|k| C64::new(c * grid.xi(k).powi(2), 0.0)).collect();
    // Column 0 of the multiplier is its impulse response.
    let mut impulse = vec![C64::new(0.0, 0.0); n];
    impulse[0] = C64::new(1.0, 0.0);
    let spec: Vec<C64> = dft_centered(&impulse).iter().zip(&mult).map(|(a, m)| a * m).collect();
    let col = idft_centered(&spec);
    DMatrix::from_fn(n, n, |i, j| {
        let d = (i + n - j) % n;
        col[d].re + if i == j { c * grid.x(i).powi(2) } else { 0.0 }
    })
}

/// Exact `e^{−itH}` for `H = (c(x² + ξ²))^w` via one symmetric eigen
/// decomposition, reusable across times.
pub struct HarmonicEngine {
    pub grid: Grid,
    pub c: f64,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

pub const MAX_HARMONIC: usize = 1024;

impl HarmonicEngine {
    pub fn new(grid: Grid, c: f64) -> Result<Self> {
        if grid.n > MAX_HARMONIC {
            return Err(Error::Grid(format!("harmonic engine limited to n <= {MAX_HARMONIC}")));
        }
        let eigen = SymmetricEigen::new(harmonic_matrix(&grid, c));
        Ok(HarmonicEngine { grid, c, eigen })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigen.eigenvalues
    }

    pub fn apply(&self, u: &Signal, t: f64) -> Result<Signal> {
        self.grid.check_same(&u.grid)?;
        if t == 0.0 {
            return Ok(u.clone());
        }
        let q = &self.eigen.eigenvectors;
        let n = self.grid.n;
        let coef: Vec<C64> = map_indexed(n, |k| {
            let col = q.column(k);
            let proj: C64 = (0..n).map(|i| u.samples[i] * col[i]).sum();
            proj * C64::from_polar(1.0, -t * self.eigen.eigenvalues[k])
        });
        let samples = map_indexed(n, |i| (0..n).map(|k| coef[k] * q[(i, k)]).sum::<C64>());
        Signal::new(self.grid, samples)
    }
}

/// `e^{−itH}u`, `H = (c(x² + ξ²))^w`: rotation of phase space by angle `2ct`.
pub fn harmonic_propagate(u0: &Signal, c: f64, t: f64) -> Result<Signal> {
    HarmonicEngine::new(u0.grid, c)?.apply(u0, t)
}

/// Mehler kernel of `e^{−itH}`, `H = c(x² + D²)`, at rotation angle
/// `θ = 2ct ∉ πℤ`: `(2πi sin θ)^{-1/2} exp(i((x² + y²)cos θ − 2xy)/(2 sin θ))`.
pub fn mehler_kernel(c: f64, t: f64, x: f64, y: f64) -> C64 {
    let th = 2.0 * c * t;
    let (s, co) = (th.sin(), th.cos());
    let pre = C64::new(0.0, 2.0 * PI * s).powf(-0.5);
    pre * C64::from_polar(1.0, ((x * x + y * y) * co - 2.0 * x * y) / (2.0 * s))
}

/// Quadrature of the Mehler kernel; only trustworthy for smooth, well
/// localized data (the kernel oscillates faster than the grid resolves far
/// from the origin).
pub fn mehler_apply(u0: &Signal, c: f64, t: f64) -> Result<Signal> {
    let g = u0.grid;
    let th = 2.0 * c * t;
    if (th / PI - (th / PI).round()).abs() < 1e-3 {
        return Err(Error::Invalid("Mehler kernel is singular at multiples of π".into()));
    }
    let samples =
        map_indexed(g.n, |i| (0..g.n).map(|j| mehler_kernel(c, t, g.x(i), g.x(j)) * u0.samples[j]).sum::<C64>() * g.dx);
    Signal::new(g, samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedNorm {
    pub sigma: AnisotropyIndex,
    pub s: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub t: f64,
    pub state: Signal,
    pub norms: Vec<TrackedNorm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRun {
    /// Time of every step, starting at 0.
    pub times: Vec<f64>,
    /// Discrete L² norm after every step, aligned with `times`.
    pub l2_norms: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    pub hermitian_defect: f64,
    pub warnings: Vec<String>,
}

impl EvolutionRun {
    pub fn final_state(&self) -> &Signal {
        &self.checkpoints.last().expect("final checkpoint always recorded").state
    }

    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.l2_norms[0];
        self.l2_norms.iter().map(|n| (n - n0).abs() / n0).fold(0.0, f64::max)
    }

    /// CSV `step,t,l2_norm[,M_{σ,s} columns]`; modulation norms only on checkpoint rows.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("step,t,l2_norm");
        let tracks: Vec<(AnisotropyIndex, f64)> =
            self.checkpoints.first().map(|c| c.norms.iter().map(|n| (n.sigma, n.s)).collect()).unwrap_or_default();
        for (a, s) in &tracks {
            out.push_str(&format!(",M[{a};{s}]"));
        }
        out.push('\n');
        for (i, (t, l2)) in self.times.iter().zip(&self.l2_norms).enumerate() {
            out.push_str(&format!("{i},{t:.17e},{l2:.17e}"));
            let cp = self.checkpoints.iter().find(|c| c.step == i);
            for k in 0..tracks.len() {
                match cp {
                    Some(c) => out.push_str(&format!(",{:.17e}", c.norms[k].value)),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnOptions {
    pub steps: usize,
    /// `(σ, s)` pairs whose modulation norm is recorded at checkpoints.
    pub track: Vec<(AnisotropyIndex, f64)>,
    /// Checkpoint every this many steps; the first and last steps always are.
    pub checkpoint_every: Option<usize>,
    pub window: WindowSpec,
}

impl CnOptions {
    pub fn steps(steps: usize) -> Self {
        CnOptions { steps, track: Vec::new(), checkpoint_every: None, window: WindowSpec::default() }
    }
}

fn spectral_edge_fraction(u: &Signal) -> f64 {
    let big = u.dft();
    let n = big.len();
    let strip = ((n as f64) * 0.05).ceil() as usize;
    let total: f64 = big.iter().map(|z| z.norm_sqr()).sum();
    let edge: f64 = big[..strip].iter().chain(&big[n - strip..]).map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

/// Crank–Nicolson for `∂_t u + i A u = 0`, `A = quantize(s)`:
/// `(I + i(h/2)A) u_{k+1} = (I − i(h/2)A) u_k`. The factorization is done
/// once and folded into the Cayley matrix, so each step is one mat-vec.
pub fn cn_evolve(s: &SymbolDescriptor, u0: &Signal, t_final: f64, opts: &CnOptions) -> Result<EvolutionRun> {
    if opts.steps == 0 {
        return Err(Error::Invalid("need at least one step".into()));
    }
    let g = u0.grid;
    let q = quantize(s, &g)?;
    let n = g.n;
    let h = t_final / opts.steps as f64;
    let ih2 = C64::new(0.0, h / 2.0);
    let eye = DMatrix::<C64>::identity(n, n);
    let plus = &eye + &q.matrix * ih2;
    let minus = &eye - &q.matrix * ih2;
    let lu = plus.clone().lu();
    let cayley = lu.solve(&minus).ok_or_else(|| {
        let norm1 = (0..n).map(|j| plus.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        Error::Factorization { condition: if norm1 > 0.0 { f64::INFINITY } else { 0.0 } }
    })?;

    let track = |state: &Signal| -> Result<Vec<TrackedNorm>> {
        opts.track
            .iter()
            .map(|&(a, sv)| Ok(TrackedNorm { sigma: a, s: sv, value: modulation_norm(state, a, sv, &opts.window)? }))
            .collect()
    };
    let every = opts.checkpoint_every.unwrap_or(opts.steps).max(1);
    let mut times = vec![0.0];
    let mut l2_norms = vec![u0.l2_norm()];
    let mut checkpoints = vec![Checkpoint { step: 0, t: 0.0, state: u0.clone(), norms: track(u0)? }];
    let mut v = DVector::from_vec(u0.samples.clone());
    for k in 1..=opts.steps {
        v = &cayley * v;
        let t = if k == opts.steps { t_final } else { k as f64 * h };
        let state = Signal::new(g, v.as_slice().to_vec())?;
        times.push(t);
        l2_norms.push(state.l2_norm());
        if k % every == 0 || k == opts.steps {
            checkpoints.push(Checkpoint { step: k, t, norms: track(&state)?, state });
        }
    }
    let mut warnings = Vec::new();
    let last = &checkpoints.last().expect("final checkpoint").state;
    let edge = last.boundary_mass_fraction();
    if edge > BOUNDARY_MASS_LIMIT {
        warnings.push(format!("final state has {edge:.2e} of its mass in the boundary strips"));
    }
    let spec_edge = spectral_edge_fraction(last);
    if spec_edge > BOUNDARY_MASS_LIMIT {
        warnings.push(format!("final state has {spec_edge:.2e} of its energy near Nyquist"));
    }
    Ok(EvolutionRun { times, l2_norms, checkpoints, hermitian_defect: q.hermitian_defect, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Airy,
    Harmonic,
    Cn,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Airy => "airy",
            Engine::Harmonic => "harmonic",
            Engine::Cn => "cn",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "airy" => Ok(Engine::Airy),
            "harmonic" => Ok(Engine::Harmonic),
            "cn" => Ok(Engine::Cn),
            _ => Err(Error::Invalid(format!("unknown engine '{s}' (expected airy, harmonic or cn)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub window: WindowSpec,
    pub plan: RayPlan,
    pub cn_steps: usize,
    pub flow_step: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { window: WindowSpec::default(), plan: RayPlan::default(), cn_steps: 400, flow_step: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub engine: Engine,
    pub t: f64,
    pub sigma: AnisotropyIndex,
    pub initial_deg: Vec<f64>,
    pub predicted_deg: Vec<f64>,
    pub detected_deg: Vec<f64>,
    pub hausdorff_deg: f64,
    pub low_confidence: bool,
    pub flow_aborts: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub report: PropagationReport,
    pub evolved: Signal,
    /// `(t, ‖u(t)‖)` rows from the engine.
    pub norms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Evolved {
    pub state: Signal,
    /// `(t, ‖u(t)‖)` rows from the engine.
    pub norms: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// Evolves `u0` under `s` to time `t`; `steps` is used by Crank–Nicolson only.
pub fn evolve_with_engine(u0: &Signal, s: &SymbolDescriptor, t: f64, engine: Engine, steps: usize) -> Result<Evolved> {
    match engine {
        Engine::Airy => {
            let SymbolDescriptor::PolyXiPlusVx { p_coeffs, v } = s else {
                return Err(Error::Invalid("airy engine needs a poly_xi_plus_vx symbol".into()));
            };
            let out = airy_propagate(u0, &AirySpec::new(p_coeffs.clone(), *v)?, t)?;
            let norms = vec![(0.0, u0.l2_norm()), (t, out.signal.l2_norm())];
            Ok(Evolved { state: out.signal, norms, warnings: out.warnings })
        }
        Engine::Harmonic => {
            let SymbolDescriptor::Quadratic { a } = s else {
                return Err(Error::Invalid("harmonic engine needs a quadratic symbol".into()));
            };
            if a[0][1] != 0.0 || a[1][0] != 0.0 || a[0][0] != a[1][1] {
                return Err(Error::Invalid("harmonic engine needs c(x² + ξ²)".into()));
            }
            let out = harmonic_propagate(u0, a[0][0], t)?;
            let norms = vec![(0.0, u0.l2_norm()), (t, out.l2_norm())];
            Ok(Evolved { state: out, norms, warnings: Vec::new() })
        }
        Engine::Cn => {
            let run = cn_evolve(s, u0, t, &CnOptions::steps(steps))?;
            let norms = run.times.iter().cloned().zip(run.l2_norms.iter().cloned()).collect();
            Ok(Evolved { state: run.final_state().clone(), norms, warnings: run.warnings })
        }
    }
}

fn zero_symbol() -> SymbolDescriptor {
    SymbolDescriptor::Quadratic { a: [[0.0; 2]; 2] }
}

fn same_index(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn trimmed_degree(p: &[f64]) -> usize {
    p.iter().rposition(|&c| c != 0.0).unwrap_or(0)
}

/// Part of `s` of order `1 + σ` in the σ-anisotropic calculus; terms of lower
/// order are dropped, so the result can be the zero symbol. Symbols with a
/// term of higher order, or none of the supported shapes, are rejected.
pub fn principal_part(s: &SymbolDescriptor, a: AnisotropyIndex) -> Result<SymbolDescriptor> {
    let sigma = a.sigma();
    let out_of_class = || Err(Error::Anisotropy(format!("symbol has terms of order above 1 + σ for σ = {sigma}")));
    match s {
        // p_m ξ^m has order mσ, v·x has order 1.
        SymbolDescriptor::PolyXiPlusVx { p_coeffs, .. } => {
            let m = trimmed_degree(p_coeffs);
            let order = m as f64 * sigma;
            if m > 1 && same_index(order, 1.0 + sigma) {
                let mut c = vec![0.0; m + 1];
                c[m] = p_coeffs[m];
                Ok(SymbolDescriptor::PolyXiPlusVx { p_coeffs: c, v: 0.0 })
            } else if m <= 1 || order < 1.0 + sigma {
                Ok(zero_symbol())
            } else {
                out_of_class()
            }
        }
        // p_m x^m has order m, v·ξ has order σ.
        SymbolDescriptor::PolyXPlusVxi { p_coeffs, .. } => {
            let m = trimmed_degree(p_coeffs);
            if same_index(m as f64, 1.0 + sigma) {
                let mut c = vec![0.0; m + 1];
                c[m] = p_coeffs[m];
                Ok(SymbolDescriptor::PolyXPlusVxi { p_coeffs: c, v: 0.0 })
            } else if (m as f64) < 1.0 + sigma {
                Ok(zero_symbol())
            } else {
                out_of_class()
            }
        }
        SymbolDescriptor::Quadratic { a: q } => {
            if q.iter().flatten().all(|&c| c == 0.0) {
                Ok(zero_symbol())
            } else if same_index(sigma, 1.0) {
                Ok(s.clone())
            } else {
                out_of_class()
            }
        }
        SymbolDescriptor::RadialPower { k, m, .. } => {
            if same_index(sigma, *k as f64 / *m as f64) {
                Ok(s.clone())
            } else {
                Err(Error::Anisotropy(format!("radial_power({k}, {m}) is homogeneous only for σ = {k}/{m}")))
            }
        }
        SymbolDescriptor::Shifted { base, .. } => principal_part(base, a),
        SymbolDescriptor::Decaying { .. } => Ok(zero_symbol()),
        SymbolDescriptor::NonSmoothPower { .. } => {
            Err(Error::Anisotropy("non-smooth symbols are outside the classes the flow check covers".into()))
        }
        SymbolDescriptor::Sum { terms } => {
            let parts: Vec<SymbolDescriptor> = terms
                .iter()
                .map(|t| principal_part(t, a))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|p| *p != zero_symbol())
                .collect();
            Ok(match parts.len() {
                0 => zero_symbol(),
                1 => parts.into_iter().next().unwrap(),
                _ => SymbolDescriptor::Sum { terms: parts },
            })
        }
    }
}

/// Detects `WF_g^σ(u₀)`, pushes it through the flow of `principal`, evolves
/// `u₀` under `s` with `engine`, detects again, and compares.
pub fn verify_propagation(
    u0: &Signal,
    s: &SymbolDescriptor,
    principal: &SymbolDescriptor,
    a: AnisotropyIndex,
    t: f64,
    engine: Engine,
    opts: &VerifyOptions,
) -> Result<VerifyOutcome> {
    let initial = estimate_wavefront(u0, a, &opts.window, &opts.plan)?;
    let oracle = FlowOracle::new(principal.clone()).with_step(opts.flow_step);
    let pushed: Vec<Result<PhasePoint>> = {
        let set = initial.singular_set();
        map_indexed(set.len(), |i| flow_of_direction(&oracle, a, &set[i], t))
    };
    let flow_aborts = pushed.iter().filter(|r| r.is_err()).count();
    let predicted: Vec<f64> = pushed.into_iter().filter_map(|r| r.ok()).map(|p| p.angle_deg()).collect();
    let Evolved { state: evolved, norms, warnings } = evolve_with_engine(u0, s, t, engine, opts.cn_steps)?;
    let detected = estimate_wavefront(&evolved, a, &opts.window, &opts.plan)?;
    let report = PropagationReport {
        engine,
        t,
        sigma: a,
        hausdorff_deg: angular_hausdorff(&predicted, &detected.singular_angles_deg),
        initial_deg: initial.singular_angles_deg,
        predicted_deg: predicted,
        detected_deg: detected.singular_angles_deg,
        low_confidence: initial.low_confidence || detected.low_confidence,
        flow_aborts,
        warnings,
    };
    Ok(VerifyOutcome { report, evolved, norms })
}

/// Files of one experiment run.
pub struct RunArchive {
    pub config: serde_json::Value,
    pub states: Vec<(String, Signal)>,
    pub diagnostics_csv: String,
    pub report: serde_json::Value,
}

/// Writes `config.json`, `states/*.json`, `diagnostics.csv` and
/// `report.json` into a sibling temporary directory, then renames it into
/// place so readers never see a partial run.
pub fn write_run_archive(dir: impl AsRef<Path>, archive: &RunArchive) -> Result<()> {
    let dir = dir.as_ref();
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent)?;
    let name = dir.file_name().ok_or_else(|| Error::Invalid("archive path has no name".into()))?;
    let tmp = parent.join(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp)?;
    }
    std::fs::create_dir_all(tmp.join("states"))?;
    let write = |rel: &str, body: &str| -> Result<()> {
        let mut f = std::fs::File::create(tmp.join(rel))?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
        Ok(())
    };
    write("config.json", &(serde_json::to_string_pretty(&archive.config)? + "\n"))?;
    for (label, s) in &archive.states {
        write(&format!("states/{label}.json"), &signal_to_json(s))?;
    }
    write("diagnostics.csv", &archive.diagnostics_csv)?;
    write("report.json", &(serde_json::to_string_pretty(&archive.report)? + "\n"))?;
    if dir.exists() {
        std::fs::remove_dir_all(dir)?;
    }
    std::fs::rename(&tmp, dir)?;
    Ok(())
}
