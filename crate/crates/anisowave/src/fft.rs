use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

pub(crate) struct Plan {
    pub fwd: Arc<dyn Fft<f64>>,
    pub inv: Arc<dyn Fft<f64>>,
}

impl Plan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plan { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }
}

/// Centered unitary DFT: `U_k = n^{-1/2} Σ_i u_i e^{-2πi·i·(k − n/2)/n}`.
pub(crate) fn dft_centered(u: &[C64]) -> Vec<C64> {
    let n = u.len();
    let plan = Plan::new(n);
    let mut buf: Vec<C64> = u.iter().enumerate().map(|(i, &v)| if i.is_multiple_of(2) { v } else { -v }).collect();
    plan.fwd.process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Inverse of [`dft_centered`].
pub(crate) fn idft_centered(big: &[C64]) -> Vec<C64> {
    let n = big.len();
    let plan = Plan::new(n);
    let mut buf = big.to_vec();
    plan.inv.process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().enumerate().for_each(|(i, v)| *v *= if i.is_multiple_of(2) { s } else { -s });
    buf
}

#[inline]
pub(crate) fn sign(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}
