//! Sharp bounds on functionals of an unidentified coupling: rearrangement
//! bounds, subgroup treatment effects, proportion of winners, zero-one cost
//! transport, and worst-case expectations over a Wasserstein ball.

use ndarray::Array2;

use crate::discrete::solve_discrete_ot;
use crate::error::{domain, Error, Result};
use crate::measures::{CostMatrix, DiscreteMeasure, Sample1D};

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Rejects `lower > upper + 1e-12`.
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper + 1e-12) {
            return Err(domain(format!("interval endpoints out of order: [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modularity {
    Submodular,
    Supermodular,
}

/// Bounds on `E h(Y0, Y1)` over all couplings of two equal-size samples,
/// attained at the comonotone and antitone pairings.
pub fn rearrangement_bounds(
    h: impl Fn(f64, f64) -> f64,
    y0: &Sample1D,
    y1: &Sample1D,
    modularity: Modularity,
) -> Result<Interval> {
    let n = y0.len();
    if y1.len() != n {
        return Err(Error::Unsupported(format!("rearrangement bounds need equal sizes, got {n} and {}", y1.len())));
    }
    let (a, b) = (y0.values(), y1.values());
    let como = (0..n).map(|i| h(a[i], b[i])).sum::<f64>() / n as f64;
    let anti = (0..n).map(|i| h(a[i], b[n - 1 - i])).sum::<f64>() / n as f64;
    match modularity {
        Modularity::Submodular => Interval::new(como, anti),
        Modularity::Supermodular => Interval::new(anti, como),
    }
}

fn check_window(a: f64, b: f64) -> Result<()> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(domain(format!("need 0 <= a < b <= 1, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Sharp bounds on `E[Y1 - Y0 | a < U0 < b]` where `U0` is the rank in the
/// untreated distribution. The extreme couplings send the subgroup to the
/// bottom `[0, b-a]` or the top `[1-b+a, 1]` of the treated ranks.
pub fn kaji_subgroup_bounds(a: f64, b: f64, y0: &Sample1D, y1: &Sample1D) -> Result<Interval> {
    check_window(a, b)?;
    let w = b - a;
    let base = y0.quantile_integral(a, b)?;
    let lower = (y1.quantile_integral(0.0, w)? - base) / w;
    let upper = (y1.quantile_integral(1.0 - w, 1.0)? - base) / w;
    Interval::new(lower, upper)
}

/// Sharp lower bound on `P(Y1 > Y0 | a < U0 < b)`:
/// `max(0, sup_t [t - a - F1(Q0(t))]) / (b - a)` over `t` in `[a, b]`.
///
/// `Q0` is constant on each `((k-1)/n0, k/n0]`, where the objective grows
/// linearly, so the supremum is attained at `b` or at a grid point `k/n0`.
pub fn winners_lower_bound(a: f64, b: f64, y0: &Sample1D, y1: &Sample1D) -> Result<f64> {
    check_window(a, b)?;
    let n0 = y0.len();
    let objective = |t: f64| -> Result<f64> {
        let f1 = if t == 0.0 { 0.0 } else { y1.cdf(y0.quantile(t)?) };
        Ok(t - a - f1)
    };
    let mut best = objective(b)?.max(objective(a)?);
    let first = (a * n0 as f64).ceil() as usize;
    for k in first..=n0 {
        let t = k as f64 / n0 as f64;
        if t > b {
            break;
        }
        if t >= a {
            best = best.max(objective(t)?);
        }
    }
    Ok((best.max(0.0) / (b - a)).min(1.0))
}

/// Untreated rank pieces: `((lo, hi], Q0 on the piece, inside (a, b))`,
/// from the breakpoints `{k/n0} u {a, b}`.
fn rank_pieces(a: f64, b: f64, y0: &Sample1D) -> Vec<(f64, f64, f64, bool)> {
    let n0 = y0.len();
    let mut cuts: Vec<f64> = (0..=n0).map(|k| k as f64 / n0 as f64).chain([a, b]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let k = ((hi * n0 as f64).ceil() as usize).clamp(1, n0);
            let k = if (k - 1) as f64 / n0 as f64 >= hi { k - 1 } else { k };
            (lo, hi, y0.values()[k - 1], lo >= a && hi <= b)
        })
        .collect()
}

/// Lower bound on `P(event(y0, y1), a < U0 < b)` over couplings of the rank
/// `U0` with `Y1`, solved as a zero-one cost transport problem.
pub fn subgroup_event_lower_bound(
    a: f64,
    b: f64,
    y0: &Sample1D,
    y1: &Sample1D,
    event: impl Fn(f64, f64) -> bool,
) -> Result<f64> {
    check_window(a, b)?;
    let pieces = rank_pieces(a, b, y0);
    let mu = DiscreteMeasure::new(pieces.iter().map(|p| p.1 - p.0).collect())?;
    let nu = DiscreteMeasure::uniform(y1.len())?;
    let gamma = BinaryRelation::from_fn(pieces.len(), y1.len(), |(i, j)| {
        let (_, _, q0, inside) = pieces[i];
        inside && event(q0, y1.values()[j])
    });
    Ok(binary_cost_ot(&mu, &nu, &gamma, false)?.value)
}

/// Sharp upper bound on `P(Y1 > Y0 | a < U0 < b)`, as `b - a` minus the
/// smallest attainable mass of `{Y1 <= Y0}` on the subgroup, divided by
/// `b - a`.
pub fn winners_upper_bound(a: f64, b: f64, y0: &Sample1D, y1: &Sample1D) -> Result<f64> {
    let losers = subgroup_event_lower_bound(a, b, y0, y1, |q0, v1| v1 <= q0)?;
    Ok(((b - a - losers) / (b - a)).clamp(0.0, 1.0))
}

/// Zero-one relation `Gamma`; the transport cost is `1{(x, y) in Gamma}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRelation {
    gamma: Array2<bool>,
}

impl BinaryRelation {
    pub fn new(gamma: Array2<bool>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(domain("relation must be nonempty"));
        }
        Ok(Self { gamma })
    }

    /// From a 0/1 matrix; any other entry is a domain error.
    pub fn from_indicator(entries: &Array2<f64>) -> Result<Self> {
        if entries.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(domain("relation entries must be 0 or 1"));
        }
        Self::new(entries.mapv(|v| v == 1.0))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut((usize, usize)) -> bool) -> Self {
        Self { gamma: Array2::from_shape_fn((rows, cols), f) }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.gamma[(i, j)]
    }

    pub fn dim(&self) -> (usize, usize) {
        self.gamma.dim()
    }

    fn cost(&self) -> Result<CostMatrix> {
        CostMatrix::new(self.gamma.mapv(|g| if g { 1.0 } else { 0.0 }))
    }
}

/// Largest `M` for which the dual witness is found by enumeration.
pub const MAX_WITNESS_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryOtResult {
    /// `min_pi pi(Gamma)`, from the simplex.
    pub value: f64,
    /// A maximizing set `A` (0-based row indices), when requested.
    pub witness: Option<Vec<usize>>,
    /// `mu(A) - nu(A^Gamma)` at the witness.
    pub dual_value: Option<f64>,
}

/// `min_pi pi(Gamma)` together with, on request, a set `A` maximizing
/// `mu(A) - nu(A^Gamma)`, where `A^Gamma = {j : exists i in A, (i, j) not in Gamma}`.
/// The dual is found by enumerating all `2^M` sets; ties keep the set with
/// the smallest bitmask.
pub fn binary_cost_ot(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    rel: &BinaryRelation,
    witness: bool,
) -> Result<BinaryOtResult> {
    let (m, n) = rel.dim();
    if mu.len() != m || nu.len() != n {
        return Err(Error::ShapeMismatch(format!("relation is {m}x{n}, marginals have {} and {} atoms", mu.len(), nu.len())));
    }
    if witness && m > MAX_WITNESS_ROWS {
        return Err(Error::Resource(format!("witness enumeration over 2^{m} sets (limit 2^{MAX_WITNESS_ROWS})")));
    }
    let value = solve_discrete_ot(mu, nu, &rel.cost()?)?.value;
    if !witness {
        return Ok(BinaryOtResult { value, witness: None, dual_value: None });
    }
    let (mask, dual) = enumerate_dual(mu.weights(), nu.weights(), rel);
    let set = (0..m).filter(|i| mask >> i & 1 == 1).collect();
    Ok(BinaryOtResult { value, witness: Some(set), dual_value: Some(dual) })
}

fn enumerate_dual(mu: &[f64], nu: &[f64], rel: &BinaryRelation) -> (u64, f64) {
    let (m, n) = rel.dim();
    let words = n.div_ceil(64);
    // outside[i]: columns j with (i, j) not in Gamma
    let outside: Vec<Vec<u64>> = (0..m)
        .map(|i| {
            let mut bits = vec![0u64; words];
            for j in (0..n).filter(|&j| !rel.contains(i, j)) {
                bits[j / 64] |= 1 << (j % 64);
            }
            bits
        })
        .collect();
    let mut best = (0u64, 0.0);
    let mut reach = vec![0u64; words];
    for mask in 1u64..(1u64 << m) {
        reach.fill(0);
        let mut mass_a = 0.0;
        for i in (0..m).filter(|i| mask >> i & 1 == 1) {
            mass_a += mu[i];
            reach.iter_mut().zip(&outside[i]).for_each(|(r, o)| *r |= o);
        }
        let mass_b: f64 = (0..n).filter(|j| reach[j / 64] >> (j % 64) & 1 == 1).map(|j| nu[j]).sum();
        let v = mass_a - mass_b;
        if v > best.1 {
            best = (mask, v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroBound {
    /// `sup E_nu f` over the ball `W_delta(nu, mu) <= rho`.
    pub value: f64,
    /// The multiplier at which the dual is evaluated.
    pub lambda: f64,
}

/// Worst-case expectation of `f` over a transport-discrepancy ball around
/// `mu`, through its one-dimensional dual
/// `inf_{lambda >= 0} lambda rho + sum_k mu_k max_y (f(y) - lambda delta(y, k))`.
///
/// `delta[(y, k)]` is the discrepancy between candidate `y` and reference atom
/// `k`; both index the same finite support as `f`. Beyond
/// `lambda_max = (max f - min f) / min positive delta` every inner maximum sits
/// at `y = k`, so the convex dual is minimized by golden-section search on
/// `[0, lambda_max]`.
pub fn dro_expectation_bound(f: &[f64], delta: &CostMatrix, mu: &DiscreteMeasure, rho: f64) -> Result<DroBound> {
    let k = f.len();
    if delta.nrows() != k || delta.ncols() != k || mu.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "{k} values, {}x{} discrepancy, {} reference atoms",
            delta.nrows(),
            delta.ncols(),
            mu.len()
        )));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(domain(format!("rho must be nonnegative, got {rho}")));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(domain("f values must be finite"));
    }
    let view = delta.view();
    if view.iter().any(|&d| d < 0.0) || (0..k).any(|i| view[(i, i)] != 0.0) {
        return Err(domain("discrepancy must be nonnegative with a zero diagonal"));
    }

    let dual = |lambda: f64| -> f64 {
        let inner: f64 = (0..k)
            .map(|c| {
                let best = (0..k).map(|y| f[y] - lambda * view[(y, c)]).fold(f64::NEG_INFINITY, f64::max);
                mu.weights()[c] * best
            })
            .sum();
        lambda * rho + inner
    };

    let range = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - f.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_pos = view.iter().cloned().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    let lambda_max = if min_pos.is_finite() { range / min_pos } else { 0.0 };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, lambda_max);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (dual(x1), dual(x2));
    while hi - lo > 1e-9 * lambda_max.max(1.0) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = dual(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = dual(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let best = [(mid, dual(mid)), (0.0, dual(0.0)), (lambda_max, dual(lambda_max))]
        .into_iter()
        .fold((mid, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    Ok(DroBound { value: best.1, lambda: best.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> Sample1D {
        Sample1D::new(v.to_vec()).unwrap()
    }

    fn uniform_grid(n: usize, shift: f64) -> Sample1D {
        Sample1D::new((0..n).map(|i| (i as f64 + 0.5) / n as f64 + shift).collect()).unwrap()
    }

    #[test]
    fn rearrangement_examples() {
        let (y0, y1) = (s(&[1.0, 4.0, 2.0]), s(&[0.0, 3.0, 7.0]));
        let iv = rearrangement_bounds(|a, b| b - a, &y0, &y1, Modularity::Submodular).unwrap();
        assert_abs_diff_eq!(iv.lower, y1.mean() - y0.mean(), epsilon = 1e-12);
        assert_abs_diff_eq!(iv.upper, y1.mean() - y0.mean(), epsilon = 1e-12);

        let b01 = s(&[0.0, 1.0]);
        let iv = rearrangement_bounds(|a, b| a * b, &b01, &b01, Modularity::Supermodular).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 0.5));

        let iv = rearrangement_bounds(|a, b| (b - a).powi(2), &y0, &y0, Modularity::Submodular).unwrap();
        assert_eq!(iv.lower, 0.0);

        assert!(matches!(
            rearrangement_bounds(|a, b| a * b, &y0, &b01, Modularity::Supermodular),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn kaji_examples() {
        let (y0, y1) = (s(&[0.3, -1.0, 2.0, 0.0]), s(&[1.0, 5.0, -2.0]));
        let iv = kaji_subgroup_bounds(0.0, 1.0, &y0, &y1).unwrap();
        let ate = y1.mean() - y0.mean();
        assert!((iv.lower - ate).abs() < 1e-12 && (iv.upper - ate).abs() < 1e-12);

        let iv = kaji_subgroup_bounds(0.2, 0.5, &uniform_grid(10_000, 0.0), &uniform_grid(10_000, 1.0)).unwrap();
        assert!((iv.lower - 0.8).abs() < 1e-3 && (iv.upper - 1.5).abs() < 1e-3, "{iv:?}");

        assert!(kaji_subgroup_bounds(0.4, 0.4, &y0, &y1).is_err());
        assert!(kaji_subgroup_bounds(-0.1, 0.4, &y0, &y1).is_err());
    }

    #[test]
    fn winners_examples() {
        let y0 = uniform_grid(500, 0.0);
        assert_abs_diff_eq!(winners_lower_bound(0.0, 1.0, &y0, &uniform_grid(500, 2.0)).unwrap(), 1.0);
        assert_eq!(winners_lower_bound(0.0, 1.0, &y0, &y0).unwrap(), 0.0);
        assert_eq!(winners_lower_bound(0.3, 0.6, &y0, &y0).unwrap(), 0.0);
        assert!(winners_lower_bound(0.5, 0.2, &y0, &y0).is_err());
    }

    #[test]
    fn winners_upper_small_cases() {
        // identical marginals: the comonotone coupling makes everyone a tie, the
        // cyclic shift of ranks makes most of the subgroup winners
        let y = s(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(winners_upper_bound(0.0, 1.0, &y, &y).unwrap(), 0.75, epsilon = 1e-12);
        let up = s(&[11.0, 12.0, 13.0, 14.0]);
        assert_abs_diff_eq!(winners_upper_bound(0.25, 0.75, &y, &up).unwrap(), 1.0, epsilon = 1e-12);
        let down = s(&[-4.0, -3.0]);
        assert_abs_diff_eq!(winners_upper_bound(0.0, 0.5, &y, &down).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn binary_examples() {
        let (mu, nu) = (DiscreteMeasure::probability(vec![0.6, 0.4]).unwrap(), DiscreteMeasure::uniform(2).unwrap());
        let zeros = BinaryRelation::from_fn(2, 2, |_| false);
        let r = binary_cost_ot(&mu, &nu, &zeros, true).unwrap();
        assert_eq!((r.value, r.witness.clone().unwrap(), r.dual_value.unwrap()), (0.0, vec![], 0.0));

        let ones = BinaryRelation::from_fn(2, 2, |_| true);
        let r = binary_cost_ot(&mu, &nu, &ones, true).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
        assert_eq!(r.witness.unwrap(), vec![0, 1]);
        assert_abs_diff_eq!(r.dual_value.unwrap(), 1.0, epsilon = 1e-12);

        let corner = BinaryRelation::from_indicator(&array![[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let r = binary_cost_ot(&mu, &nu, &corner, true).unwrap();
        assert_abs_diff_eq!(r.value, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(r.dual_value.unwrap(), 0.1, epsilon = 1e-12);

        assert!(BinaryRelation::from_indicator(&array![[0.5]]).is_err());
        let wide = DiscreteMeasure::uniform(21).unwrap();
        let rel = BinaryRelation::from_fn(21, 21, |(i, j)| i == j);
        assert!(matches!(binary_cost_ot(&wide, &wide, &rel, true), Err(Error::Resource(_))));
        assert!(binary_cost_ot(&wide, &wide, &rel, false).is_ok());
    }

    #[test]
    fn dro_examples() {
        let f = [1.0, 3.0, -2.0, 0.5];
        let pts = [0.0f64, 1.0, 2.5, 4.0];
        let delta = CostMatrix::from_fn(4, 4, |(i, j)| (pts[i] - pts[j]).abs()).unwrap();
        let mu = DiscreteMeasure::probability(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mean: f64 = f.iter().zip(mu.weights()).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(dro_expectation_bound(&f, &delta, &mu, 0.0).unwrap().value, mean, epsilon = 1e-8);
        // moving every atom to y = 1 costs at most 3
        assert_abs_diff_eq!(dro_expectation_bound(&f, &delta, &mu, 5.0).unwrap().value, 3.0, epsilon = 1e-9);
        assert!(dro_expectation_bound(&f, &delta, &mu, -1.0).is_err());
        let bad = CostMatrix::from_fn(4, 4, |_| 1.0).unwrap();
        assert!(dro_expectation_bound(&f, &bad, &mu, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn rearrangement_hull_and_independence(
            a in prop::collection::vec(-5.0f64..5.0, 1..10),
            b in prop::collection::vec(-5.0f64..5.0, 10),
        ) {
            let n = a.len();
            let (y0, y1) = (s(&a), s(&b[..n]));
            let h = |x: f64, y: f64| (x - y).powi(2);
            let iv = rearrangement_bounds(h, &y0, &y1, Modularity::Submodular).unwrap();
            let all: Vec<f64> = a.iter().flat_map(|&x| b[..n].iter().map(move |&y| h(x, y))).collect();
            let (lo, hi) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| (l.min(v), u.max(v)));
            prop_assert!(iv.lower >= lo - 1e-12 && iv.upper <= hi + 1e-12);
            let indep = all.iter().sum::<f64>() / (n * n) as f64;
            prop_assert!(iv.contains(indep, 1e-9));
        }

        #[test]
        fn winners_bounds_are_ordered_probabilities(
            a0 in prop::collection::vec(-3.0f64..3.0, 1..15),
            a1 in prop::collection::vec(-3.0f64..3.0, 1..15),
            lo in 0.0f64..0.9,
            width in 0.05f64..1.0,
        ) {
            let hi = (lo + width).min(1.0);
            let (y0, y1) = (s(&a0), s(&a1));
            let l = winners_lower_bound(lo, hi, &y0, &y1).unwrap();
            let u = winners_upper_bound(lo, hi, &y0, &y1).unwrap();
            prop_assert!((0.0..=1.0).contains(&l) && (0.0..=1.0).contains(&u));
            prop_assert!(l <= u + 1e-9);
        }

        #[test]
        fn dro_is_monotone_in_radius(
            f in prop::collection::vec(-3.0f64..3.0, 4),
            pts in prop::collection::vec(0.0f64..5.0, 4),
            r1 in 0.0f64..2.0,
            dr in 0.0f64..2.0,
        ) {
            let delta = CostMatrix::from_fn(4, 4, |(i, j)| (pts[i] - pts[j]).abs()).unwrap();
            let mu = DiscreteMeasure::uniform(4).unwrap();
            let v1 = dro_expectation_bound(&f, &delta, &mu, r1).unwrap().value;
            let v2 = dro_expectation_bound(&f, &delta, &mu, r1 + dr).unwrap().value;
            prop_assert!(v2 >= v1 - 1e-8);
            let max_f = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(v2 <= max_f + 1e-8);
        }
    }
}
