/// Index-ascending pairwise summation; the split points depend only on the
/// length, so results are identical across runs and thread counts.
pub(crate) fn pairwise(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise(&xs[..mid]) + pairwise(&xs[mid..])
}
