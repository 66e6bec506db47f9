//! Estimation of the anisotropic Gabor wave front set `WF_g^σ(u)` from the
//! decay of `|V_φu|` along the curves `λ ↦ (λx, λ^σ ξ)`.
//!
//! Each direction on the unit circle gets a geometric λ ladder. At every
//! rung the interpolated modulus is maximized over a few angular offsets
//! (the open neighborhood U), the ladder is cut where the query leaves the
//! trusted part of the grid or sinks below the numerical noise floor, and a
//! log-log least squares fit over the last rungs gives a decay order.
//! Slow, clean decay means singular.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{AnisotropyIndex, PhasePoint};
use crate::parallel::map_indexed;
use crate::signal::Signal;
use crate::transforms::{stft, ModulusField, WindowSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayPlan {
    pub n_directions: usize,
    pub lambda_min: f64,
    pub ratio: f64,
    pub max_rungs: usize,
    /// Half-width of the neighborhood U; every offset must lie strictly inside.
    pub neighborhood_half_width_deg: f64,
    pub offsets_deg: Vec<f64>,
    /// Queries must stay within this fraction of the half space range and of Nyquist.
    pub trust_fraction: f64,
    pub min_rungs: usize,
    /// The fit uses only the last `fit_rungs` retained rungs (the asymptotic tail).
    pub fit_rungs: usize,
    /// The ladder ends at the first rung below `noise_floor_rel · max|V|`.
    pub noise_floor_rel: f64,
    pub eps_floor: f64,
    pub threshold: f64,
    pub residual_max: f64,
    pub low_confidence_fraction: f64,
}

impl Default for RayPlan {
    fn default() -> Self {
        RayPlan {
            n_directions: 360,
            lambda_min: 1.0,
            ratio: 2f64.powf(1.0 / 16.0),
            max_rungs: 4096,
            neighborhood_half_width_deg: 2.0,
            offsets_deg: vec![-1.0, 0.0, 1.0],
            trust_fraction: 0.9,
            min_rungs: 12,
            fit_rungs: 12,
            noise_floor_rel: 1e-12,
            eps_floor: 1e-300,
            threshold: 6.0,
            residual_max: 1.0,
            low_confidence_fraction: 0.3,
        }
    }
}

impl RayPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("ray plan: {m}")));
        if self.n_directions == 0 {
            return bad("no directions");
        }
        if !(self.lambda_min > 0.0) || !(self.ratio > 1.0) {
            return bad("λ ladder must start positive and increase");
        }
        if self.offsets_deg.is_empty() || self.offsets_deg.iter().any(|o| !(o.abs() < self.neighborhood_half_width_deg))
        {
            return bad("offsets must lie strictly inside the neighborhood");
        }
        if !(self.trust_fraction > 0.0 && self.trust_fraction <= 1.0) {
            return bad("trust fraction must be in (0, 1]");
        }
        if self.min_rungs < 2 || self.fit_rungs < 2 || self.fit_rungs > self.min_rungs {
            return bad("need 2 <= fit_rungs <= min_rungs");
        }
        if !(self.noise_floor_rel >= 0.0) || !(self.threshold > 0.0) || !(self.residual_max > 0.0) {
            return bad("floor, threshold and residual gate must be positive");
        }
        Ok(())
    }

    pub fn angle_deg(&self, i: usize) -> f64 {
        360.0 * i as f64 / self.n_directions as f64
    }

    pub fn directions(&self) -> Vec<PhasePoint> {
        (0..self.n_directions).map(|i| PhasePoint::from_angle(self.angle_deg(i).to_radians())).collect()
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.lambda_min * self.ratio.powi(j as i32)
    }

    pub fn angular_step_deg(&self) -> f64 {
        360.0 / self.n_directions as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    Singular,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungSample {
    pub lambda: f64,
    pub value: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub direction: PhasePoint,
    pub angle_deg: f64,
    /// `−slope` of `log|V|` against `log λ`; absent with fewer than two rungs.
    pub fitted_order: Option<f64>,
    pub residual: Option<f64>,
    pub rungs_used: usize,
    pub verdict: Verdict,
    pub samples: Vec<RungSample>,
}

/// Least squares line through `(xs, ys)`: returns `(slope, rms residual)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

pub fn sample_ray(field: &ModulusField, dir: &PhasePoint, a: AnisotropyIndex, plan: &RayPlan) -> DecayProfile {
    let g = &field.grid;
    let sigma = a.sigma();
    let alpha = dir.xi[0].atan2(dir.x[0]);
    let x_lim = plan.trust_fraction * g.length() / 2.0;
    let xi_lim = plan.trust_fraction * g.nyquist();
    let centre = g.center();
    let floor = plan.noise_floor_rel * field.max;

    let mut samples = Vec::new();
    let mut below_floor = false;
    for j in 0..plan.max_rungs {
        let lambda = plan.lambda(j);
        let ls = lambda.powf(sigma);
        let mut best: Option<f64> = None;
        for o in &plan.offsets_deg {
            let t = alpha + o.to_radians();
            let (x, xi) = (lambda * t.cos(), ls * t.sin());
            if (x - centre).abs() > x_lim || xi.abs() > xi_lim {
                best = None;
                break;
            }
            let v = field.interp(x, xi);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        let Some(value) = best else { break };
        // Rungs past the first one under the floor only measure round-off.
        let retained = !below_floor;
        if retained && value <= floor {
            below_floor = true;
            samples.push(RungSample { lambda, value: floor, retained });
        } else {
            samples.push(RungSample { lambda, value, retained });
        }
    }

    let kept: Vec<&RungSample> = samples.iter().filter(|s| s.retained).collect();
    let rungs_used = kept.len();
    let (fitted_order, residual) = if rungs_used >= 2 {
        let tail = &kept[rungs_used.saturating_sub(plan.fit_rungs)..];
        let xs: Vec<f64> = tail.iter().map(|s| s.lambda.ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|s| (s.value + plan.eps_floor).ln()).collect();
        let (slope, res) = fit_line(&xs, &ys);
        (Some(-slope), Some(res))
    } else {
        (None, None)
    };
    let verdict = match (fitted_order, residual) {
        _ if rungs_used < plan.min_rungs => Verdict::Inconclusive,
        (Some(n), Some(r)) if n < plan.threshold && r < plan.residual_max => Verdict::Singular,
        _ => Verdict::Regular,
    };
    DecayProfile {
        direction: dir.clone(),
        angle_deg: alpha.to_degrees().rem_euclid(360.0),
        fitted_order,
        residual,
        rungs_used,
        verdict,
        samples,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFrontEstimate {
    pub sigma: AnisotropyIndex,
    pub threshold: f64,
    pub window_width: f64,
    pub profiles: Vec<DecayProfile>,
    pub singular_angles_deg: Vec<f64>,
    pub low_confidence: bool,
    /// For real input: whether the singular set is closed under `(x, ξ) ↦ (x, −ξ)`.
    pub reflection_consistent: Option<bool>,
}

impl WaveFrontEstimate {
    pub fn singular_set(&self) -> Vec<PhasePoint> {
        self.profiles.iter().filter(|p| p.verdict == Verdict::Singular).map(|p| p.direction.clone()).collect()
    }

    pub fn inconclusive_fraction(&self) -> f64 {
        let k = self.profiles.iter().filter(|p| p.verdict == Verdict::Inconclusive).count();
        k as f64 / self.profiles.len().max(1) as f64
    }

    /// Smallest fitted order over conclusive rays.
    pub fn min_order(&self) -> Option<f64> {
        self.profiles
            .iter()
            .filter(|p| p.verdict != Verdict::Inconclusive)
            .filter_map(|p| p.fitted_order)
            .reduce(f64::min)
    }

    pub fn to_summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            sigma: f64,
            threshold: f64,
            singular_angles_deg: &'a [f64],
            low_confidence: bool,
        }
        let s = Summary {
            sigma: self.sigma.sigma(),
            threshold: self.threshold,
            singular_angles_deg: &self.singular_angles_deg,
            low_confidence: self.low_confidence,
        };
        serde_json::to_string_pretty(&s).expect("summary is plain data")
    }

    pub fn write_summary(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_summary_json() + "\n")?;
        Ok(())
    }

    /// CSV `direction_angle_deg,lambda,value,retained`, one row per rung.
    pub fn write_profiles_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "direction_angle_deg,lambda,value,retained")?;
        for p in &self.profiles {
            for s in &p.samples {
                writeln!(w, "{},{:.17e},{:.17e},{}", p.angle_deg, s.lambda, s.value, s.retained)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs [`sample_ray`] over all plan directions on a precomputed modulus.
pub fn estimate_from_field(
    field: &ModulusField,
    a: AnisotropyIndex,
    w: &WindowSpec,
    plan: &RayPlan,
    real_input: bool,
) -> Result<WaveFrontEstimate> {
    plan.validate()?;
    let dirs = plan.directions();
    let profiles = map_indexed(dirs.len(), |i| sample_ray(field, &dirs[i], a, plan));
    let singular: Vec<usize> = (0..profiles.len()).filter(|&i| profiles[i].verdict == Verdict::Singular).collect();
    let nd = plan.n_directions;
    let reflection_consistent =
        real_input.then(|| singular.iter().all(|&i| profiles[(nd - i) % nd].verdict == Verdict::Singular));
    let mut est = WaveFrontEstimate {
        sigma: a,
        threshold: plan.threshold,
        window_width: w.width,
        singular_angles_deg: singular.iter().map(|&i| profiles[i].angle_deg).collect(),
        profiles,
        low_confidence: false,
        reflection_consistent,
    };
    est.low_confidence = est.inconclusive_fraction() > plan.low_confidence_fraction;
    Ok(est)
}

pub fn estimate_wavefront(u: &Signal, a: AnisotropyIndex, w: &WindowSpec, plan: &RayPlan) -> Result<WaveFrontEstimate> {
    plan.validate()?;
    let field = stft(u, w)?.modulus();
    estimate_from_field(&field, a, w, plan, u.is_real(0.0))
}

pub fn angular_distance_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Symmetric max-min circular distance between two angle sets, in degrees.
/// Two empty sets are at distance 0; one empty set is infinitely far.
pub fn angular_hausdorff(a: &[f64], b: &[f64]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let directed = |p: &[f64], q: &[f64]| {
        p.iter()
            .map(|&x| q.iter().map(|&y| angular_distance_deg(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCheckReport {
    /// Singular angles of `û` with index σ.
    pub fourier_side: Vec<f64>,
    /// Singular angles of `u` with index 1/σ, rotated by `𝒥`.
    pub mapped: Vec<f64>,
    pub hausdorff_deg: f64,
    pub low_confidence: bool,
}

/// Compares `WF_g^σ(û)` with `𝒥 WF_g^{1/σ}(u)`.
pub fn fourier_wavefront_check(
    u: &Signal,
    a: AnisotropyIndex,
    w: &WindowSpec,
    plan: &RayPlan,
) -> Result<FourierCheckReport> {
    let uhat = u.fourier_transform();
    let lhs = estimate_wavefront(&uhat, a, w, plan)?;
    let rhs = estimate_wavefront(u, a.inverse(), w, plan)?;
    // 𝒥 rotates the (x, ξ) plane by −90°.
    let mapped: Vec<f64> = rhs.singular_angles_deg.iter().map(|t| (t - 90.0).rem_euclid(360.0)).collect();
    Ok(FourierCheckReport {
        hausdorff_deg: angular_hausdorff(&lhs.singular_angles_deg, &mapped),
        fourier_side: lhs.singular_angles_deg,
        mapped,
        low_confidence: lhs.low_confidence || rhs.low_confidence,
    })
}
