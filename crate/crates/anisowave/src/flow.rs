//! Hamilton flows `ẋ = ∇_ξ a, ξ̇ = −∇_x a` of descriptor symbols in any
//! dimension, by fixed-step RK4.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{aniso_scale, sphere_decompose, AnisotropyIndex, PhasePoint};
use crate::symbols::{eval_gradient, eval_symbol, SymbolDescriptor};
use crate::{Error, Result};

/// Trajectories closer than this to the origin abort.
pub const ORIGIN_BALL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOracle {
    pub symbol: SymbolDescriptor,
    pub step: f64,
}

impl FlowOracle {
    pub fn new(symbol: SymbolDescriptor) -> Self {
        FlowOracle { symbol, step: 1e-3 }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub energy: Vec<f64>,
}

impl FlowTrajectory {
    pub fn endpoint(&self) -> &PhasePoint {
        self.points.last().expect("trajectory has at least the initial point")
    }

    /// CSV `t,x…,xi…,energy`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let d = self.points[0].dim();
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let names = |p: &str| -> Vec<String> {
            if d == 1 {
                vec![p.to_string()]
            } else {
                (0..d).map(|i| format!("{p}{i}")).collect()
            }
        };
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain(names("x"))
            .chain(names("xi"))
            .chain(["energy".to_string()])
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for ((t, z), e) in self.times.iter().zip(&self.points).zip(&self.energy) {
            let cols: Vec<String> = std::iter::once(*t)
                .chain(z.x.iter().cloned())
                .chain(z.xi.iter().cloned())
                .chain([*e])
                .map(|v| format!("{v:.17e}"))
                .collect();
            writeln!(w, "{}", cols.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn in_dead_zone(s: &SymbolDescriptor, z: &PhasePoint) -> bool {
    match s {
        SymbolDescriptor::RadialPower { delta, .. } | SymbolDescriptor::NonSmoothPower { delta, .. } => {
            z.norm() <= delta / 2.0
        }
        SymbolDescriptor::Shifted { base, .. } => in_dead_zone(base, z),
        _ => false,
    }
}

fn rhs_unchecked(s: &SymbolDescriptor, z: &PhasePoint) -> PhasePoint {
    let g = eval_gradient(s, z);
    PhasePoint { x: g.xi, xi: g.x.iter().map(|v| -v).collect() }
}

/// `(∇_ξ a, −∇_x a)`.
pub fn hamilton_rhs(s: &SymbolDescriptor, z: &PhasePoint) -> Result<PhasePoint> {
    if in_dead_zone(s, z) {
        return Err(Error::Invalid("Hamilton field queried inside the cutoff dead zone".into()));
    }
    Ok(rhs_unchecked(s, z))
}

fn rk4_step(s: &SymbolDescriptor, z: &PhasePoint, h: f64) -> PhasePoint {
    let k1 = rhs_unchecked(s, z);
    let k2 = rhs_unchecked(s, &z.axpy(h / 2.0, &k1));
    let k3 = rhs_unchecked(s, &z.axpy(h / 2.0, &k2));
    let k4 = rhs_unchecked(s, &z.axpy(h, &k3));
    z.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4)
}

fn check_request(o: &FlowOracle, z0: &PhasePoint, t_final: f64) -> Result<()> {
    if !(o.step > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {}", o.step)));
    }
    if !t_final.is_finite() {
        return Err(Error::Invalid("final time must be finite".into()));
    }
    if z0.norm() < ORIGIN_BALL {
        return Err(Error::FlowAbort { t: 0.0, reason: "initial point at the origin".into() });
    }
    Ok(())
}

/// Runs the fixed-step RK4 loop, handing every accepted state to `visit`.
fn drive(o: &FlowOracle, z0: &PhasePoint, t_final: f64, mut visit: impl FnMut(f64, &PhasePoint)) -> Result<PhasePoint> {
    check_request(o, z0, t_final)?;
    let steps = (t_final.abs() / o.step).ceil() as usize;
    let mut z = z0.clone();
    if steps == 0 {
        return Ok(z);
    }
    let h = t_final / steps as f64;
    for i in 1..=steps {
        z = rk4_step(&o.symbol, &z, h);
        let t = if i == steps { t_final } else { i as f64 * h };
        if !z.is_finite() {
            return Err(Error::FlowAbort { t, reason: "non-finite state".into() });
        }
        if z.norm() < ORIGIN_BALL {
            return Err(Error::FlowAbort { t, reason: "entered the origin ball".into() });
        }
        visit(t, &z);
    }
    Ok(z)
}

/// Fixed-step RK4 from `z0` to `t_final` (either sign). The step is shrunk
/// so that an integer number of steps lands exactly on `t_final`.
pub fn integrate_flow(o: &FlowOracle, z0: &PhasePoint, t_final: f64) -> Result<FlowTrajectory> {
    check_request(o, z0, t_final)?;
    let energy = |z: &PhasePoint| eval_symbol(&o.symbol, z).re;
    let mut traj = FlowTrajectory { times: vec![0.0], points: vec![z0.clone()], energy: vec![energy(z0)] };
    drive(o, z0, t_final, |t, z| {
        traj.times.push(t);
        traj.energy.push(energy(z));
        traj.points.push(z.clone());
    })?;
    Ok(traj)
}

/// Endpoint of [`integrate_flow`] without keeping the path.
pub fn flow_endpoint(o: &FlowOracle, z0: &PhasePoint, t: f64) -> Result<PhasePoint> {
    drive(o, z0, t, |_, _| {})
}

/// Action of `χ_t` on σ-conic directions: flow the unit point, then keep
/// the sphere part of the endpoint.
pub fn flow_of_direction(o: &FlowOracle, a: AnisotropyIndex, dir: &PhasePoint, t: f64) -> Result<PhasePoint> {
    if t == 0.0 {
        return Ok(dir.clone());
    }
    let end = flow_endpoint(o, dir, t)?;
    Ok(sphere_decompose(&end, a)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    pub t: f64,
    pub lambdas: Vec<f64>,
    pub samples: usize,
    /// Largest of `|u_L − u_R|` and `|λ_L/λ_R − 1|` over the sphere
    /// decompositions of `χ_t(Λz)` and `Λχ_t(z)`.
    pub max_discrepancy: f64,
    pub aborts: usize,
}

impl CommutationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.aborts == 0 && self.max_discrepancy < tol
    }
}

pub const COMMUTATION_LAMBDAS: [f64; 3] = [0.5, 2.0, 8.0];

/// Compares `χ_t(Λ_σ(λ)z)` with `Λ_σ(λ)χ_t(z)` for random 1-D phase points.
/// For cutoff symbols the sample radius is raised so that every scaled
/// point has norm at least 1.
pub fn check_scaling_commutation(
    o: &FlowOracle,
    a: AnisotropyIndex,
    t: f64,
    samples: usize,
    seed: u64,
) -> CommutationReport {
    let sigma = a.sigma();
    let lambdas = COMMUTATION_LAMBDAS.to_vec();
    let radius = if o.symbol.cutoff_delta().is_some() {
        let shrink = lambdas.iter().map(|&l| l.min(l.powf(sigma))).fold(f64::INFINITY, f64::min);
        (1.0 / shrink).max(1.0)
    } else {
        1.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut aborts = 0;
    for _ in 0..samples.max(1) {
        let ang = rng.random_range(0.0..2.0 * PI);
        let z = PhasePoint::d1(radius * ang.cos(), radius * ang.sin());
        let base = match flow_endpoint(o, &z, t) {
            Ok(e) => e,
            Err(_) => {
                aborts += 1;
                continue;
            }
        };
        for &l in &lambdas {
            let lhs = aniso_scale(&z, l, a).and_then(|sz| flow_endpoint(o, &sz, t));
            let rhs = aniso_scale(&base, l, a);
            match (lhs, rhs) {
                (Ok(lhs), Ok(rhs)) => {
                    let (ll, ul) = sphere_decompose(&lhs, a).expect("nonzero endpoint");
                    let (lr, ur) = sphere_decompose(&rhs, a).expect("nonzero endpoint");
                    worst = worst.max(ul.distance(&ur)).max((ll / lr - 1.0).abs());
                }
                _ => aborts += 1,
            }
        }
    }
    CommutationReport { t, lambdas, samples: samples.max(1), max_discrepancy: worst, aborts }
}
