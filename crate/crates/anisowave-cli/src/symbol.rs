//! `TAG:PARAMS` syntax for Hamiltonians on the command line.
//!
//! ```text
//! harmonic[:C]                  C(x² + ξ²), C = 1/2 by default
//! airy:P0,P1,…,Pm[:V]           p(ξ) + V·x, V = 1 by default
//! quadratic:A00,A01,A11         A00 x² + 2 A01 xξ + A11 ξ²
//! radial_power:C,K,M[,DELTA]    cut-off (x^{2K} + ξ^{2M})^{(1/K + 1/M)/2}, δ = 0.01 by default
//! non_smooth:C1,C2,K[,DELTA]
//! ```

use anisowave::symbols::SymbolDescriptor;
use anyhow::{bail, Context, Result};

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().with_context(|| format!("'{t}' is not a number"))).collect()
}

fn int(v: f64) -> Result<u32> {
    if v < 1.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        bail!("expected a positive integer, got {v}");
    }
    Ok(v as u32)
}

pub fn parse_symbol(spec: &str) -> Result<SymbolDescriptor> {
    let (tag, rest) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
    let s = match tag {
        "harmonic" => {
            let c = if rest.is_empty() { 0.5 } else { rest.parse().context("harmonic takes one coefficient")? };
            SymbolDescriptor::harmonic(c)
        }
        "airy" => {
            let (coeffs, v) = rest.split_once(':').unwrap_or((rest, "1"));
            let p = numbers(coeffs)?;
            let v: f64 = v.parse().context("bad velocity")?;
            SymbolDescriptor::airy(p, v)
        }
        "quadratic" => match numbers(rest)?[..] {
            [a, b, c] => SymbolDescriptor::Quadratic { a: [[a, b], [b, c]] },
            _ => bail!("quadratic takes A00,A01,A11"),
        },
        "radial_power" => match numbers(rest)?[..] {
            [c, k, m] => SymbolDescriptor::radial_power(c, int(k)?, int(m)?, 0.01),
            [c, k, m, d] => SymbolDescriptor::radial_power(c, int(k)?, int(m)?, d),
            _ => bail!("radial_power takes C,K,M[,DELTA]"),
        },
        "non_smooth" => match numbers(rest)?[..] {
            [c1, c2, k] => SymbolDescriptor::non_smooth_power(c1, c2, int(k)?, 0.01),
            [c1, c2, k, d] => SymbolDescriptor::non_smooth_power(c1, c2, int(k)?, d),
            _ => bail!("non_smooth takes C1,C2,K[,DELTA]"),
        },
        _ => bail!("unknown symbol '{tag}' (expected harmonic, airy, quadratic, radial_power or non_smooth)"),
    };
    s.validate()?;
    Ok(s)
}
