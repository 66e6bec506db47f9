use std::f64::consts::PI;

use crate::fft::{sign, Plan};
use crate::parallel::for_each_chunk;
use crate::signal::Signal;
use crate::transforms::PhaseGridMatrix;
use crate::{Result, C64};

/// Band-limited interpolation onto the half grid: `out[2i] = u[i]`.
fn upsample2(u: &[C64]) -> Vec<C64> {
    let n = u.len();
    let mut spec = u.to_vec();
    Plan::new(n).fwd.process(&mut spec);
    let mut big = vec![C64::new(0.0, 0.0); 2 * n];
    let h = n / 2;
    big[..h].copy_from_slice(&spec[..h]);
    big[2 * n - h + 1..].copy_from_slice(&spec[h + 1..]);
    // The Nyquist bin is shared between ±ξ_nyq.
    big[h] = spec[h] * 0.5;
    big[2 * n - h] = spec[h] * 0.5;
    Plan::new(2 * n).inv.process(&mut big);
    let s = 1.0 / n as f64;
    big.iter_mut().for_each(|z| *z *= s);
    big
}

/// Cross-Wigner distribution
/// `W(f,g)(x,ξ) = (2π)^{-1} ∫ f(x + y/2) conj(g(x − y/2)) e^{-iyξ} dy`,
/// normalized so that `∬ W(f,f) = ‖f‖²`. The half-grid samples come from
/// band-limited interpolation; the unpaired lag `±n/2` is averaged so that
/// `W(f,f)` is real.
pub fn wigner(f: &Signal, g: &Signal) -> Result<PhaseGridMatrix> {
    f.grid.check_same(&g.grid)?;
    let grid = f.grid;
    let n = grid.n;
    let f2 = upsample2(&f.samples);
    let g2 = upsample2(&g.samples);
    let plan = Plan::new(n);
    let c = grid.dx / (2.0 * PI);
    let two_n = 2 * n;
    let h = n / 2;
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    for_each_chunk(&mut values, n, |j, row| {
        let centre = 2 * j;
        let kern = |m: isize| {
            let p = (centre as isize + m).rem_euclid(two_n as isize) as usize;
            let q = (centre as isize - m).rem_euclid(two_n as isize) as usize;
            f2[p] * g2[q].conj()
        };
        for m in -(h as isize) + 1..h as isize {
            row[m.rem_euclid(n as isize) as usize] = kern(m) * sign(m.unsigned_abs());
        }
        row[h] = (kern(-(h as isize)) + kern(h as isize)) * 0.5 * sign(h);
        plan.fwd.process(row);
        row.iter_mut().for_each(|z| *z *= c);
    });
    Ok(PhaseGridMatrix { grid, values, scale: c })
}
