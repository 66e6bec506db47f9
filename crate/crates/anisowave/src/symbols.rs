//! Closed family of phase-space symbols with exact gradients, homogeneity
//! certificates, dense Weyl quantization on a grid, Poisson brackets and
//! flow-transported symbols.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fft::{sign, Plan};
use crate::flow::{flow_endpoint, FlowOracle};
use crate::geometry::{aniso_scale, ramp, ramp_deriv, AnisotropyIndex, PhasePoint};
use crate::parallel::{for_each_chunk, map_indexed};
use crate::signal::Grid;
use crate::transforms::RealField;
use crate::{Error, Result, C64};

pub const MAX_QUANTIZE: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SymbolDescriptor {
    /// `Σ_j p(ξ_j) + v·Σ_j x_j`; `p_coeffs[k]` multiplies `ξ^k`.
    PolyXiPlusVx {
        p_coeffs: Vec<f64>,
        v: f64,
    },
    /// `Σ_j p(x_j) − v·Σ_j ξ_j`.
    PolyXPlusVxi {
        p_coeffs: Vec<f64>,
        v: f64,
    },
    /// `c·ψ_δ(z)·(|x|^{2k} + |ξ|^{2m})^{(1/k + 1/m)/2}`, homogeneous of
    /// order `1 + k/m` for the index `k/m` outside `B_δ`.
    RadialPower {
        c: f64,
        k: u32,
        m: u32,
        delta: f64,
    },
    /// `a00·|x|² + 2·a01·⟨x, ξ⟩ + a11·|ξ|²`.
    Quadratic {
        a: [[f64; 2]; 2],
    },
    /// `base + i·imag_const`.
    Shifted {
        base: Box<SymbolDescriptor>,
        imag_const: f64,
    },
    /// `ψ_δ(z)·(c1·|x|^{2k/(2k−1)} + c2·|ξ|^{2k})`: anisotropically
    /// homogeneous but not smooth at `x = 0` away from the cutoff ball, so
    /// outside the symbol classes the propagation results need.
    NonSmoothPower {
        c1: f64,
        c2: f64,
        k: u32,
        delta: f64,
        non_smooth_warning: bool,
    },
    /// `c·(1 + |x|^{2k} + |ξ|^{2m})^{−power/2}`: smooth decaying lower-order term.
    Decaying {
        c: f64,
        k: u32,
        m: u32,
        power: f64,
    },
    Sum {
        terms: Vec<SymbolDescriptor>,
    },
}

fn poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn poly_deriv(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl SymbolDescriptor {
    pub fn harmonic(c: f64) -> Self {
        SymbolDescriptor::Quadratic { a: [[c, 0.0], [0.0, c]] }
    }

    pub fn airy(p_coeffs: Vec<f64>, v: f64) -> Self {
        SymbolDescriptor::PolyXiPlusVx { p_coeffs, v }
    }

    pub fn radial_power(c: f64, k: u32, m: u32, delta: f64) -> Self {
        SymbolDescriptor::RadialPower { c, k, m, delta }
    }

    /// Always carries the non-smoothness flag.
    pub fn non_smooth_power(c1: f64, c2: f64, k: u32, delta: f64) -> Self {
        SymbolDescriptor::NonSmoothPower { c1, c2, k, delta, non_smooth_warning: true }
    }

    pub fn shifted(self, imag_const: f64) -> Self {
        SymbolDescriptor::Shifted { base: Box::new(self), imag_const }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        match self {
            SymbolDescriptor::PolyXiPlusVx { p_coeffs, .. } | SymbolDescriptor::PolyXPlusVxi { p_coeffs, .. } => {
                if p_coeffs.len() < 2 || p_coeffs.iter().skip(1).all(|&c| c == 0.0) {
                    return bad("polynomial must have degree >= 1".into());
                }
            }
            SymbolDescriptor::RadialPower { k, m, delta, .. } => {
                if *k == 0 || *m == 0 || !(*delta > 0.0) {
                    return bad(format!("radial_power needs k, m >= 1 and δ > 0, got {k}, {m}, {delta}"));
                }
            }
            SymbolDescriptor::NonSmoothPower { k, delta, .. } => {
                if *k == 0 || !(*delta > 0.0) {
                    return bad("non-smooth power needs k >= 1 and δ > 0".into());
                }
            }
            SymbolDescriptor::Decaying { k, m, power, .. } => {
                if *k == 0 || *m == 0 || !(*power >= 0.0) {
                    return bad("decaying term needs k, m >= 1 and power >= 0".into());
                }
            }
            SymbolDescriptor::Shifted { base, .. } => base.validate()?,
            SymbolDescriptor::Sum { terms } => {
                for t in terms {
                    t.validate()?;
                }
            }
            SymbolDescriptor::Quadratic { .. } => {}
        }
        Ok(())
    }

    pub fn non_smooth_warning(&self) -> bool {
        match self {
            SymbolDescriptor::NonSmoothPower { non_smooth_warning, .. } => *non_smooth_warning,
            SymbolDescriptor::Shifted { base, .. } => base.non_smooth_warning(),
            SymbolDescriptor::Sum { terms } => terms.iter().any(|t| t.non_smooth_warning()),
            _ => false,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            SymbolDescriptor::Shifted { base, imag_const } => *imag_const == 0.0 && base.is_real(),
            SymbolDescriptor::Sum { terms } => terms.iter().all(|t| t.is_real()),
            _ => true,
        }
    }

    /// Complex conjugate symbol `ā`.
    pub fn conj(&self) -> SymbolDescriptor {
        match self {
            SymbolDescriptor::Shifted { base, imag_const } => {
                SymbolDescriptor::Shifted { base: Box::new(base.conj()), imag_const: -imag_const }
            }
            SymbolDescriptor::Sum { terms } => {
                SymbolDescriptor::Sum { terms: terms.iter().map(|t| t.conj()).collect() }
            }
            other => other.clone(),
        }
    }

    /// Radius of the ball on which the symbol vanishes identically.
    fn dead_radius(&self) -> Option<f64> {
        match self {
            SymbolDescriptor::RadialPower { delta, .. } | SymbolDescriptor::NonSmoothPower { delta, .. } => {
                Some(delta / 2.0)
            }
            _ => None,
        }
    }

    pub fn cutoff_delta(&self) -> Option<f64> {
        match self {
            SymbolDescriptor::RadialPower { delta, .. } | SymbolDescriptor::NonSmoothPower { delta, .. } => {
                Some(*delta)
            }
            SymbolDescriptor::Shifted { base, .. } => base.cutoff_delta(),
            SymbolDescriptor::Sum { terms } => terms.iter().filter_map(|t| t.cutoff_delta()).reduce(f64::max),
            _ => None,
        }
    }
}

/// Exact value `a(z)`.
pub fn eval_symbol(s: &SymbolDescriptor, z: &PhasePoint) -> C64 {
    let re = |v: f64| C64::new(v, 0.0);
    match s {
        SymbolDescriptor::PolyXiPlusVx { p_coeffs, v } => {
            re(z.xi.iter().map(|&t| poly(p_coeffs, t)).sum::<f64>() + v * z.x.iter().sum::<f64>())
        }
        SymbolDescriptor::PolyXPlusVxi { p_coeffs, v } => {
            re(z.x.iter().map(|&t| poly(p_coeffs, t)).sum::<f64>() - v * z.xi.iter().sum::<f64>())
        }
        SymbolDescriptor::RadialPower { c, k, m, delta } => {
            let r2 = sq(&z.x) + sq(&z.xi);
            if r2 <= delta * delta / 4.0 {
                return re(0.0);
            }
            let base = sq(&z.x).powi(*k as i32) + sq(&z.xi).powi(*m as i32);
            let e = (1.0 / *k as f64 + 1.0 / *m as f64) / 2.0;
            re(c * ramp(r2, *delta) * base.powf(e))
        }
        SymbolDescriptor::Quadratic { a } => {
            re(a[0][0] * sq(&z.x) + 2.0 * a[0][1] * dot(&z.x, &z.xi) + a[1][1] * sq(&z.xi))
        }
        SymbolDescriptor::Shifted { base, imag_const } => eval_symbol(base, z) + C64::new(0.0, *imag_const),
        SymbolDescriptor::NonSmoothPower { c1, c2, k, delta, .. } => {
            let r2 = sq(&z.x) + sq(&z.xi);
            if r2 <= delta * delta / 4.0 {
                return re(0.0);
            }
            let p = 2.0 * *k as f64 / (2.0 * *k as f64 - 1.0);
            re(ramp(r2, *delta) * (c1 * sq(&z.x).sqrt().powf(p) + c2 * sq(&z.xi).powi(*k as i32)))
        }
        SymbolDescriptor::Decaying { c, k, m, power } => {
            let w = 1.0 + sq(&z.x).powi(*k as i32) + sq(&z.xi).powi(*m as i32);
            re(c * w.powf(-power / 2.0))
        }
        SymbolDescriptor::Sum { terms } => terms.iter().map(|t| eval_symbol(t, z)).sum(),
    }
}

/// Exact gradient `(∇_x a, ∇_ξ a)` of the real part. Inside the dead ball of
/// a cutoff symbol the gradient is exactly zero.
pub fn eval_gradient(s: &SymbolDescriptor, z: &PhasePoint) -> PhasePoint {
    let d = z.dim();
    let zero = || PhasePoint { x: vec![0.0; d], xi: vec![0.0; d] };
    match s {
        SymbolDescriptor::PolyXiPlusVx { p_coeffs, v } => {
            PhasePoint { x: vec![*v; d], xi: z.xi.iter().map(|&t| poly_deriv(p_coeffs, t)).collect() }
        }
        SymbolDescriptor::PolyXPlusVxi { p_coeffs, v } => {
            PhasePoint { x: z.x.iter().map(|&t| poly_deriv(p_coeffs, t)).collect(), xi: vec![-*v; d] }
        }
        SymbolDescriptor::RadialPower { c, k, m, delta } => {
            let r2 = sq(&z.x) + sq(&z.xi);
            if s.dead_radius().is_some_and(|r| r2 <= r * r) {
                return zero();
            }
            let (x2, xi2) = (sq(&z.x), sq(&z.xi));
            let (k, m) = (*k as i32, *m as i32);
            let base = x2.powi(k) + xi2.powi(m);
            let e = (1.0 / k as f64 + 1.0 / m as f64) / 2.0;
            let f = base.powf(e);
            let df = e * base.powf(e - 1.0);
            let (psi, dpsi) = (ramp(r2, *delta), ramp_deriv(r2, *delta));
            // ∂|x|^{2k}/∂x = 2k|x|^{2k−2}x.
            let gx = 2.0 * k as f64 * x2.powi(k - 1);
            let gxi = 2.0 * m as f64 * xi2.powi(m - 1);
            PhasePoint {
                x: z.x.iter().map(|&t| c * (psi * df * gx * t + f * dpsi * 2.0 * t)).collect(),
                xi: z.xi.iter().map(|&t| c * (psi * df * gxi * t + f * dpsi * 2.0 * t)).collect(),
            }
        }
        SymbolDescriptor::Quadratic { a } => PhasePoint {
            x: (0..d).map(|i| 2.0 * a[0][0] * z.x[i] + 2.0 * a[0][1] * z.xi[i]).collect(),
            xi: (0..d).map(|i| 2.0 * a[0][1] * z.x[i] + 2.0 * a[1][1] * z.xi[i]).collect(),
        },
        SymbolDescriptor::Shifted { base, .. } => eval_gradient(base, z),
        SymbolDescriptor::NonSmoothPower { c1, c2, k, delta, .. } => {
            let r2 = sq(&z.x) + sq(&z.xi);
            if s.dead_radius().is_some_and(|r| r2 <= r * r) {
                return zero();
            }
            let kk = *k as i32;
            let p = 2.0 * kk as f64 / (2.0 * kk as f64 - 1.0);
            let (nx, xi2) = (sq(&z.x).sqrt(), sq(&z.xi));
            let f = c1 * nx.powf(p) + c2 * xi2.powi(kk);
            let (psi, dpsi) = (ramp(r2, *delta), ramp_deriv(r2, *delta));
            let gx = if nx > 0.0 { c1 * p * nx.powf(p - 2.0) } else { 0.0 };
            let gxi = c2 * 2.0 * kk as f64 * xi2.powi(kk - 1);
            PhasePoint {
                x: z.x.iter().map(|&t| psi * gx * t + f * dpsi * 2.0 * t).collect(),
                xi: z.xi.iter().map(|&t| psi * gxi * t + f * dpsi * 2.0 * t).collect(),
            }
        }
        SymbolDescriptor::Decaying { c, k, m, power } => {
            let (k, m) = (*k as i32, *m as i32);
            let (x2, xi2) = (sq(&z.x), sq(&z.xi));
            let w = 1.0 + x2.powi(k) + xi2.powi(m);
            let dw = c * (-power / 2.0) * w.powf(-power / 2.0 - 1.0);
            PhasePoint {
                x: z.x.iter().map(|&t| dw * 2.0 * k as f64 * x2.powi(k - 1) * t).collect(),
                xi: z.xi.iter().map(|&t| dw * 2.0 * m as f64 * xi2.powi(m - 1) * t).collect(),
            }
        }
        SymbolDescriptor::Sum { terms } => {
            terms.iter().map(|t| eval_gradient(t, z)).fold(zero(), |acc, g| acc.axpy(1.0, &g))
        }
    }
}

/// `{f, g} = ⟨∇_ξ f, ∇_x g⟩ − ⟨∇_x f, ∇_ξ g⟩`.
pub fn poisson_bracket(f: &SymbolDescriptor, g: &SymbolDescriptor, z: &PhasePoint) -> f64 {
    let (df, dg) = (eval_gradient(f, z), eval_gradient(g, z));
    dot(&df.xi, &dg.x) - dot(&df.x, &dg.xi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub order: f64,
    pub samples: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `a(Λ_σ(λ)z) = λ^order a(z)` for random `z` on the circle of radius
/// `max(1, δ)` and `λ ∈ [1, 100]` (1-D phase space).
pub fn check_homogeneity(
    s: &SymbolDescriptor,
    a: AnisotropyIndex,
    order: f64,
    samples: usize,
    seed: u64,
) -> HomogeneityReport {
    let tolerance = 1e-10;
    let radius = s.cutoff_delta().map_or(1.0, |d| d.max(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples.max(1) {
        let t = rng.random_range(0.0..2.0 * PI);
        let lambda = rng.random_range(1.0..100.0);
        let z = PhasePoint::d1(radius * t.cos(), radius * t.sin());
        let scaled = aniso_scale(&z, lambda, a).expect("λ >= 1");
        let lhs = eval_symbol(s, &scaled);
        let rhs = eval_symbol(s, &z) * lambda.powf(order);
        let err = (lhs - rhs).norm() / rhs.norm().max(lhs.norm()).max(f64::MIN_POSITIVE);
        worst = worst.max(err);
    }
    HomogeneityReport { order, samples: samples.max(1), max_rel_error: worst, tolerance, pass: worst <= tolerance }
}

/// Symbol values on the phase-grid layout (row = x_j, column = ξ_k).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolField {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl SymbolField {
    pub fn sample(s: &SymbolDescriptor, grid: Grid) -> Self {
        Self::from_fn(grid, |x, xi| eval_symbol(s, &PhasePoint::d1(x, xi)))
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> C64 + Sync + Send) -> Self {
        let n = grid.n;
        let mut values = vec![C64::new(0.0, 0.0); n * n];
        for_each_chunk(&mut values, n, |j, row| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = f(grid.x(j), grid.xi(k));
            }
        });
        SymbolField { grid, values }
    }

    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.values[j * self.grid.n + k]
    }

    /// Bilinear interpolation, clamped to the grid box.
    pub fn interp(&self, x: f64, xi: f64) -> C64 {
        let g = &self.grid;
        let n = g.n;
        let fi = ((x - g.x0) / g.dx).clamp(0.0, (n - 1) as f64);
        let fk = (xi / g.dxi() + (n / 2) as f64).clamp(0.0, (n - 1) as f64);
        let (i, k) = (fi.floor() as usize, fk.floor() as usize);
        let (a, b) = (fi - i as f64, fk - k as f64);
        let (i1, k1) = ((i + 1).min(n - 1), (k + 1).min(n - 1));
        self.get(i, k) * ((1.0 - a) * (1.0 - b))
            + self.get(i1, k) * (a * (1.0 - b))
            + self.get(i, k1) * ((1.0 - a) * b)
            + self.get(i1, k1) * (a * b)
    }

    pub fn real_part(&self) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|z| z.re).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct Quantized {
    pub matrix: DMatrix<C64>,
    /// Largest entry removed by Hermitian symmetrization.
    pub hermitian_defect: f64,
}

/// Raw Weyl quadrature `M_ij = n^{-1} Σ_ℓ a(mid_ij, ξ_ℓ) e^{iξ_ℓ d_ij dx}`
/// with `d_ij = i − j` wrapped into `[−n/2, n/2)` and `mid_ij = x_j + d_ij dx/2`
/// on the half grid. Only `2n` distinct midpoints occur, so the symbol is
/// sampled `2n × n` times and each midpoint costs one FFT.
fn raw_weyl(grid: &Grid, a: &(dyn Fn(f64, f64) -> f64 + Sync)) -> Result<DMatrix<C64>> {
    let n = grid.n;
    let plan = Plan::new(n);
    let kernels: Vec<Result<Vec<C64>>> = map_indexed(2 * n, |p| {
        let mid = grid.x0 + p as f64 * grid.dx / 2.0;
        let mut row: Vec<C64> = (0..n).map(|l| C64::new(a(mid, grid.xi(l)), 0.0)).collect();
        if row.iter().any(|z| !z.re.is_finite()) {
            return Err(Error::NonFinite(format!("symbol at x = {mid}")));
        }
        plan.inv.process(&mut row);
        // Entry d (mod n) now holds Σ_ℓ a·e^{2πiℓd/n}; fold in (−1)^d / n.
        row.iter_mut().enumerate().for_each(|(d, z)| *z *= sign(d) / n as f64);
        Ok(row)
    });
    let kernels: Vec<Vec<C64>> = kernels.into_iter().collect::<Result<_>>()?;
    let h = (n / 2) as isize;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = (i as isize - j as isize + h).rem_euclid(n as isize) - h;
        let p = (2 * j as isize + d).rem_euclid(2 * n as isize) as usize;
        kernels[p][d.rem_euclid(n as isize) as usize]
    });
    Ok(m)
}

fn hermitify(m: DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let adj = m.adjoint();
    let defect = (&m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max) / 2.0;
    ((m + adj) * C64::new(0.5, 0.0), defect)
}

/// Weyl quantization of a symbol given by its real and imaginary parts. Each
/// part is Hermitian-symmetrized separately, so `quantize(ā) = quantize(a)*`
/// holds exactly.
pub fn quantize_fn(
    grid: &Grid,
    re: &(dyn Fn(f64, f64) -> f64 + Sync),
    im: Option<&(dyn Fn(f64, f64) -> f64 + Sync)>,
) -> Result<Quantized> {
    if grid.n > MAX_QUANTIZE {
        return Err(Error::Grid(format!("dense quantization limited to n <= {MAX_QUANTIZE}, got {}", grid.n)));
    }
    let (mut m, mut defect) = hermitify(raw_weyl(grid, re)?);
    if let Some(im) = im {
        let (mi, di) = hermitify(raw_weyl(grid, im)?);
        m += mi * C64::new(0.0, 1.0);
        defect = defect.max(di);
    }
    Ok(Quantized { matrix: m, hermitian_defect: defect })
}

pub fn quantize(s: &SymbolDescriptor, grid: &Grid) -> Result<Quantized> {
    s.validate()?;
    let re = |x: f64, xi: f64| eval_symbol(s, &PhasePoint::d1(x, xi)).re;
    let im = |x: f64, xi: f64| eval_symbol(s, &PhasePoint::d1(x, xi)).im;
    quantize_fn(grid, &re, (!s.is_real()).then_some(&im as &(dyn Fn(f64, f64) -> f64 + Sync)))
}

/// Quantizes a sampled symbol; half-grid midpoints are averaged from the
/// neighboring rows, with periodic wrap.
pub fn quantize_field(field: &SymbolField) -> Result<Quantized> {
    let g = field.grid;
    let n = g.n;
    let at = |x: f64, xi: f64, part: fn(C64) -> f64| {
        let fi = (g.wrap(x) - g.x0) / g.dx;
        let i = fi.floor() as usize % n;
        let t = fi - fi.floor();
        let k = ((xi / g.dxi()).round() as isize + (n / 2) as isize).clamp(0, n as isize - 1) as usize;
        (1.0 - t) * part(field.get(i, k)) + t * part(field.get((i + 1) % n, k))
    };
    let re = |x: f64, xi: f64| at(x, xi, |z| z.re);
    let im = |x: f64, xi: f64| at(x, xi, |z| z.im);
    let complex = field.values.iter().any(|z| z.im != 0.0);
    quantize_fn(&g, &re, complex.then_some(&im as &(dyn Fn(f64, f64) -> f64 + Sync)))
}

/// Largest singular value of `m` by 50 steps of power iteration on `m*m`.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    let n = m.ncols();
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 + (i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
    let mut est = 0.0;
    for _ in 0..50 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v /= C64::new(norm, 0.0);
        let w = m * &v;
        est = w.norm();
        v = m.adjoint() * w;
    }
    est
}

/// `‖quantize(a)* − quantize(a)‖`: the departure of `a^w` from
/// self-adjointness, which by `(a^w)* = (ā)^w` equals `2‖(Im a)^w‖`.
pub fn adjoint_defect(s: &SymbolDescriptor, grid: &Grid) -> Result<f64> {
    let q = quantize(s, grid)?.matrix;
    Ok(operator_norm(&(q.adjoint() - &q)))
}

/// `‖quantize(a)* − quantize(ā)‖`, zero for every symbol up to round-off.
pub fn adjoint_relation_defect(s: &SymbolDescriptor, grid: &Grid) -> Result<f64> {
    let q = quantize(s, grid)?.matrix;
    let qc = quantize(&s.conj(), grid)?.matrix;
    Ok(operator_norm(&(q.adjoint() - qc)))
}

/// Source for [`transport_symbol`].
#[derive(Debug, Clone)]
pub enum SymbolSource {
    Descriptor(SymbolDescriptor),
    Field(SymbolField),
}

impl SymbolSource {
    fn eval(&self, z: &PhasePoint) -> C64 {
        match self {
            SymbolSource::Descriptor(s) => eval_symbol(s, z),
            SymbolSource::Field(f) => f.interp(z.x[0], z.xi[0]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportedField {
    pub field: SymbolField,
    /// Nodes `(j, k)` where the backward flow aborted; their value is 0.
    pub failed: Vec<(usize, usize)>,
    pub flow_calls: usize,
}

/// Samples `ψ_δ(z)·q₀(χ_{−t}(z))` on the phase grid. Nodes inside `B_{δ/2}`
/// are exact zeros and never touch the flow.
pub fn transport_symbol(
    q0: &SymbolSource,
    flow: &FlowOracle,
    t: f64,
    delta: f64,
    grid: Grid,
) -> Result<TransportedField> {
    if !(delta > 0.0) {
        return Err(Error::Invalid(format!("δ must be positive, got {delta}")));
    }
    let n = grid.n;
    // (row values, failed (row, col) cells, flow calls)
    type Row = (Vec<C64>, Vec<(usize, usize)>, usize);
    let rows: Vec<Row> = map_indexed(n, |j| {
        let mut vals = vec![C64::new(0.0, 0.0); n];
        let mut failed = Vec::new();
        let mut calls = 0;
        for (k, v) in vals.iter_mut().enumerate() {
            let z = PhasePoint::d1(grid.x(j), grid.xi(k));
            let r2 = z.norm().powi(2);
            if r2 <= delta * delta / 4.0 {
                continue;
            }
            let psi = ramp(r2, delta);
            if t == 0.0 {
                *v = q0.eval(&z) * psi;
                continue;
            }
            calls += 1;
            match flow_endpoint(flow, &z, -t) {
                Ok(end) => *v = q0.eval(&end) * psi,
                Err(_) => failed.push((j, k)),
            }
        }
        (vals, failed, calls)
    });
    let mut values = Vec::with_capacity(n * n);
    let mut failed = Vec::new();
    let mut flow_calls = 0;
    for (v, f, c) in rows {
        values.extend(v);
        failed.extend(f);
        flow_calls += c;
    }
    Ok(TransportedField { field: SymbolField { grid, values }, failed, flow_calls })
}
