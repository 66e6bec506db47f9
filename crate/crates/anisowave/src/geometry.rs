//! Anisotropic phase-space geometry: the weights θ_σ and w_{k,m}, the
//! scaling Λ_σ(λ)(x,ξ) = (λx, λ^σ ξ), σ-conic sphere decomposition and the
//! smooth cutoff ψ_δ.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Anisotropy parameter σ, either as a ratio `k/m` or as a raw positive real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnisotropyIndex {
    Rational { k: u32, m: u32 },
    Real(f64),
}

impl AnisotropyIndex {
    pub fn rational(k: u32, m: u32) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::Anisotropy(format!("k and m must be positive, got {k}/{m}")));
        }
        Ok(AnisotropyIndex::Rational { k, m })
    }

    pub fn real(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Anisotropy(format!("σ must be a positive real, got {sigma}")));
        }
        Ok(AnisotropyIndex::Real(sigma))
    }

    pub fn one() -> Self {
        AnisotropyIndex::Rational { k: 1, m: 1 }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            AnisotropyIndex::Rational { k, m } => k as f64 / m as f64,
            AnisotropyIndex::Real(s) => s,
        }
    }

    /// The index 1/σ.
    pub fn inverse(&self) -> Self {
        match *self {
            AnisotropyIndex::Rational { k, m } => AnisotropyIndex::Rational { k: m, m: k },
            AnisotropyIndex::Real(s) => AnisotropyIndex::Real(1.0 / s),
        }
    }
}

impl fmt::Display for AnisotropyIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnisotropyIndex::Rational { k, m } => write!(f, "{k}/{m}"),
            AnisotropyIndex::Real(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for AnisotropyIndex {
    type Err = Error;

    /// Accepts `"k/m"` or a decimal such as `"0.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((k, m)) = s.split_once('/') {
            let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| Error::Anisotropy(format!("bad ratio '{s}'")));
            return AnisotropyIndex::rational(parse(k)?, parse(m)?);
        }
        let v: f64 = s.parse().map_err(|_| Error::Anisotropy(format!("bad σ '{s}'")))?;
        AnisotropyIndex::real(v)
    }
}

impl Serialize for AnisotropyIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AnisotropyIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Repr::Number(v) => AnisotropyIndex::real(v).map_err(serde::de::Error::custom),
        }
    }
}

/// A point `(x, ξ)` of `T*ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        assert_eq!(x.len(), xi.len(), "x and ξ must have the same dimension");
        PhasePoint { x, xi }
    }

    pub fn d1(x: f64, xi: f64) -> Self {
        PhasePoint { x: vec![x], xi: vec![xi] }
    }

    /// Unit vector at `angle` radians in the (x, ξ) plane.
    pub fn from_angle(angle: f64) -> Self {
        PhasePoint::d1(angle.cos(), angle.sin())
    }

    /// Angle in degrees in `[0, 360)`; `d = 1` only.
    pub fn angle_deg(&self) -> f64 {
        self.xi[0].atan2(self.x[0]).to_degrees().rem_euclid(360.0)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn norm(&self) -> f64 {
        (norm(&self.x).powi(2) + norm(&self.xi).powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.xi).all(|v| v.is_finite())
    }

    pub fn axpy(&self, a: f64, other: &PhasePoint) -> PhasePoint {
        PhasePoint {
            x: self.x.iter().zip(&other.x).map(|(p, q)| p + a * q).collect(),
            xi: self.xi.iter().zip(&other.xi).map(|(p, q)| p + a * q).collect(),
        }
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        self.axpy(-1.0, other).norm()
    }
}

/// `θ_σ(x, ξ) = 1 + |x| + |ξ|^{1/σ}`.
pub fn theta_weight(z: &PhasePoint, a: AnisotropyIndex) -> f64 {
    1.0 + norm(&z.x) + norm(&z.xi).powf(1.0 / a.sigma())
}

/// `w_{k,m}(x, ξ) = (1 + |x|^{2k} + |ξ|^{2m})^{1/2}`; rational σ only.
pub fn wkm_weight(z: &PhasePoint, a: AnisotropyIndex) -> Result<f64> {
    match a {
        AnisotropyIndex::Rational { k, m } => {
            let x2 = norm(&z.x).powi(2);
            let xi2 = norm(&z.xi).powi(2);
            Ok((1.0 + x2.powi(k as i32) + xi2.powi(m as i32)).sqrt())
        }
        AnisotropyIndex::Real(_) => Err(Error::Anisotropy("w_{k,m} needs a rational index".into())),
    }
}

/// `Λ_σ(λ)(x, ξ) = (λx, λ^σ ξ)`.
pub fn aniso_scale(z: &PhasePoint, lambda: f64, a: AnisotropyIndex) -> Result<PhasePoint> {
    if !(lambda > 0.0) {
        return Err(Error::Invalid(format!("scaling factor must be positive, got {lambda}")));
    }
    let ls = lambda.powf(a.sigma());
    Ok(PhasePoint { x: z.x.iter().map(|v| v * lambda).collect(), xi: z.xi.iter().map(|v| v * ls).collect() })
}

/// Writes `z = Λ_σ(λ)u` with `u` on the Euclidean unit sphere.
pub fn sphere_decompose(z: &PhasePoint, a: AnisotropyIndex) -> Result<(f64, PhasePoint)> {
    let s = a.sigma();
    let p2 = norm(&z.x).powi(2);
    let q2 = norm(&z.xi).powi(2);
    if p2 == 0.0 && q2 == 0.0 {
        return Err(Error::Invalid("cannot decompose the origin".into()));
    }
    // g is strictly decreasing; g(lo) >= 0 >= g(hi).
    let g = |l: f64| p2 / (l * l) + q2 / l.powf(2.0 * s) - 1.0;
    let dg = |l: f64| -2.0 * p2 / (l * l * l) - 2.0 * s * q2 / l.powf(2.0 * s + 1.0);
    let big_m = p2.sqrt().max(q2.sqrt().powf(1.0 / s));
    let mut lo = big_m;
    let mut hi = big_m * 2f64.powf(0.5f64.max(0.5 / s));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut l = 0.5 * (lo + hi);
    for _ in 0..20 {
        let d = dg(l);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = l - g(l) / d;
        if !(next > 0.0) || !next.is_finite() {
            break;
        }
        l = next;
    }
    let ls = l.powf(s);
    Ok((l, PhasePoint { x: z.x.iter().map(|v| v / l).collect(), xi: z.xi.iter().map(|v| v / ls).collect() }))
}

/// Smooth ramp `χ(t)`: 0 for `t ≤ δ²/4`, 1 for `t ≥ δ²`.
///
/// Written as `1/(1 + e^{1/s_a − 1/s_b})` rather than `e^{−1/s_a}/(e^{−1/s_a} + e^{−1/s_b})`;
/// for small δ both exponentials underflow and the quotient form gives 0/0.
pub fn ramp(t: f64, delta: f64) -> f64 {
    let (sa, sb) = (t - delta * delta / 4.0, delta * delta - t);
    if sa <= 0.0 {
        0.0
    } else if sb <= 0.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / sa - 1.0 / sb).exp())
    }
}

pub fn ramp_deriv(t: f64, delta: f64) -> f64 {
    let (sa, sb) = (t - delta * delta / 4.0, delta * delta - t);
    let r = ramp(t, delta);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    r * (1.0 - r) * (1.0 / (sa * sa) + 1.0 / (sb * sb))
}

/// `ψ_δ(z) = χ(|z|²)`: vanishes on `B_{δ/2}`, equals 1 outside `B_δ`.
pub fn cutoff_psi(z: &PhasePoint, delta: f64) -> f64 {
    ramp(z.norm().powi(2), delta)
}

/// The symplectic rotation `𝒥(x, ξ) = (ξ, −x)`.
pub fn j_map(z: &PhasePoint) -> PhasePoint {
    PhasePoint { x: z.xi.clone(), xi: z.x.iter().map(|v| -v).collect() }
}
