/// Stabilized `log sum_i exp(f(i))` over `0..len`; `-inf` for an empty range.
pub(crate) fn logsumexp_by(len: usize, f: impl Fn(usize) -> f64) -> f64 {
    let max = (0..len).map(&f).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = (0..len).map(|i| (f(i) - max).exp()).sum();
    max + sum.ln()
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
