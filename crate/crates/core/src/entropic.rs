//! Entropic and unbalanced optimal transport by log-domain Sinkhorn.
//!
//! Plans are parameterized by potentials,
//! `pi_ij = mu_i nu_j exp((phi_i + psi_j - C_ij) / eps)`, and every update is
//! a stabilized log-sum-exp, so small `eps` does not overflow.

use ndarray::Array2;

use crate::error::{domain, Error, Result};
use crate::measures::{CostMatrix, DiscreteMeasure};
use crate::util::logsumexp_by;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EntropicSolution {
    pub plan: Array2<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub eps: f64,
    pub iterations: usize,
    /// Balanced: L-infinity marginal violation of `plan`. Unbalanced: L-infinity
    /// residual of the first-order conditions, see [`unbalanced_sinkhorn`].
    pub marginal_error: f64,
    pub converged: bool,
    /// `marginal_error` after each iteration.
    pub history: Vec<f64>,
}

fn check_inputs(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostMatrix, eps: f64, tol: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain(format!("eps must be positive, got {eps}")));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tol must be positive, got {tol}")));
    }
    if !mu.is_strictly_positive() || !nu.is_strictly_positive() {
        return Err(domain("entropic solvers need strictly positive marginal weights"));
    }
    if cost.nrows() != mu.len() || cost.ncols() != nu.len() {
        return Err(Error::ShapeMismatch(format!(
            "cost is {}x{}, marginals have {} and {} atoms",
            cost.nrows(),
            cost.ncols(),
            mu.len(),
            nu.len()
        )));
    }
    Ok(())
}

/// Log-domain kernel state shared by the balanced and unbalanced solvers.
struct Kernel<'a> {
    log_mu: Vec<f64>,
    log_nu: Vec<f64>,
    cost: &'a CostMatrix,
    eps: f64,
}

impl<'a> Kernel<'a> {
    fn new(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &'a CostMatrix, eps: f64) -> Self {
        Self {
            log_mu: mu.weights().iter().map(|w| w.ln()).collect(),
            log_nu: nu.weights().iter().map(|w| w.ln()).collect(),
            cost,
            eps,
        }
    }

    /// `ln sum_j nu_j exp((psi_j - C_ij)/eps)`
    fn row_lse(&self, i: usize, psi: &[f64]) -> f64 {
        logsumexp_by(psi.len(), |j| self.log_nu[j] + (psi[j] - self.cost[(i, j)]) / self.eps)
    }

    /// `ln sum_i mu_i exp((phi_i - C_ij)/eps)`
    fn col_lse(&self, j: usize, phi: &[f64]) -> f64 {
        logsumexp_by(phi.len(), |i| self.log_mu[i] + (phi[i] - self.cost[(i, j)]) / self.eps)
    }

    fn log_plan(&self, i: usize, j: usize, phi: &[f64], psi: &[f64]) -> f64 {
        self.log_mu[i] + self.log_nu[j] + (phi[i] + psi[j] - self.cost[(i, j)]) / self.eps
    }

    fn plan(&self, phi: &[f64], psi: &[f64]) -> Array2<f64> {
        Array2::from_shape_fn((phi.len(), psi.len()), |(i, j)| self.log_plan(i, j, phi, psi).exp())
    }

    /// Log row and column masses of the current plan.
    fn log_marginals(&self, phi: &[f64], psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let rows = (0..phi.len()).map(|i| self.log_mu[i] + phi[i] / self.eps + self.row_lse(i, psi)).collect();
        let cols = (0..psi.len()).map(|j| self.log_nu[j] + psi[j] / self.eps + self.col_lse(j, phi)).collect();
        (rows, cols)
    }
}

fn marginal_violation(plan: &Array2<f64>, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let rows = plan.rows().into_iter().zip(mu.weights()).map(|(r, w)| (r.sum() - w).abs());
    let cols = plan.columns().into_iter().zip(nu.weights()).map(|(c, w)| (c.sum() - w).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Sets `phi_0 = 0` by moving a constant from `phi` to `psi`.
fn normalize_gauge(phi: &mut [f64], psi: &mut [f64]) {
    let t = phi[0];
    phi.iter_mut().for_each(|p| *p -= t);
    psi.iter_mut().for_each(|p| *p += t);
}

/// Entropic OT: alternates the exact `phi` and `psi` marginal-fitting
/// updates until the plan's L-infinity marginal violation drops below `tol`.
/// Hitting `max_iter` is not an error; the solution comes back with
/// `converged = false`.
pub fn sinkhorn(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    check_inputs(mu, nu, cost, eps, tol)?;
    let k = Kernel::new(mu, nu, cost, eps);
    let (m, n) = (mu.len(), nu.len());
    let mut phi = vec![0.0; m];
    let mut psi = vec![0.0; n];
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..max_iter {
        for i in 0..m {
            phi[i] = -eps * k.row_lse(i, &psi);
        }
        for j in 0..n {
            psi[j] = -eps * k.col_lse(j, &phi);
        }
        let err = marginal_violation(&k.plan(&phi, &psi), mu, nu);
        history.push(err);
        if err < tol {
            converged = true;
            break;
        }
    }

    normalize_gauge(&mut phi, &mut psi);
    let plan = k.plan(&phi, &psi);
    let marginal_error = marginal_violation(&plan, mu, nu);
    Ok(EntropicSolution { plan, phi, psi, eps, iterations: history.len(), marginal_error, converged, history })
}

/// Returns `(transport_cost, primal_objective)` where the objective adds
/// `eps * H(pi | mu x nu)` to the transport cost. The log-density of the plan
/// is read off the potentials, so underflowed entries contribute exactly 0.
pub fn eot_value(sol: &EntropicSolution, cost: &CostMatrix) -> (f64, f64) {
    let mut transport = 0.0;
    let mut entropy = 0.0;
    for ((i, j), &p) in sol.plan.indexed_iter() {
        transport += p * cost[(i, j)];
        if p > 0.0 {
            entropy += p * (sol.phi[i] + sol.psi[j] - cost[(i, j)]) / sol.eps;
        }
    }
    (transport, transport + sol.eps * entropy)
}

/// Dual objective `sum mu phi + sum nu psi - eps sum mu nu exp(...) + eps`.
///
/// The trailing `+ eps` shifts the dual so that it equals the primal at the
/// optimum under the convention without a `-1` in the exponent.
pub fn eot_dual(sol: &EntropicSolution, mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostMatrix) -> f64 {
    let k = Kernel::new(mu, nu, cost, sol.eps);
    let lin: f64 = mu.weights().iter().zip(&sol.phi).map(|(w, p)| w * p).sum::<f64>()
        + nu.weights().iter().zip(&sol.psi).map(|(w, p)| w * p).sum::<f64>();
    let mass: f64 = (0..mu.len())
        .flat_map(|i| (0..nu.len()).map(move |j| (i, j)))
        .map(|(i, j)| k.log_plan(i, j, &sol.phi, &sol.psi).exp())
        .sum();
    lin - sol.eps * mass + sol.eps
}

/// Unbalanced entropic OT with generalized relative-entropy penalties
/// `KL(p|q) = sum p ln(p/q) - p + q` on both marginals:
///
/// `min_pi sum pi C + eps KL(pi | mu x nu) + lam_mu KL(pi_x | mu) + lam_nu KL(pi_y | nu)`.
///
/// Each sweep applies the damped updates
/// `phi_i <- lam_mu/(lam_mu+eps) * (-eps ln sum_j nu_j exp((psi_j - C_ij)/eps))`
/// and the mirror update for `psi`, followed by an exact dual ascent step
/// along the gauge direction `(phi + t, psi - t)`. Only the penalty terms
/// depend on `t`, and for large penalties the plain alternation moves along
/// that direction very slowly.
///
/// `marginal_error` is the L-infinity residual of the first-order conditions
/// `ln(r_i/mu_i) + phi_i/lam_mu = 0` and `ln(c_j/nu_j) + psi_j/lam_nu = 0`,
/// where `r`, `c` are the plan's row and column masses.
#[allow(clippy::too_many_arguments)]
pub fn unbalanced_sinkhorn(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    eps: f64,
    lam_mu: f64,
    lam_nu: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    check_inputs(mu, nu, cost, eps, tol)?;
    if !(lam_mu > 0.0 && lam_nu > 0.0) || !lam_mu.is_finite() || !lam_nu.is_finite() {
        return Err(domain(format!("marginal penalties must be positive, got {lam_mu} and {lam_nu}")));
    }
    let k = Kernel::new(mu, nu, cost, eps);
    let (m, n) = (mu.len(), nu.len());
    let damp_mu = lam_mu / (lam_mu + eps);
    let damp_nu = lam_nu / (lam_nu + eps);
    let mut phi = vec![0.0; m];
    let mut psi = vec![0.0; n];
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..max_iter {
        for i in 0..m {
            phi[i] = -damp_mu * eps * k.row_lse(i, &psi);
        }
        for j in 0..n {
            psi[j] = -damp_nu * eps * k.col_lse(j, &phi);
        }
        let log_a = logsumexp_by(m, |i| k.log_mu[i] - phi[i] / lam_mu);
        let log_b = logsumexp_by(n, |j| k.log_nu[j] - psi[j] / lam_nu);
        let t = (log_a - log_b) / (1.0 / lam_mu + 1.0 / lam_nu);
        phi.iter_mut().for_each(|p| *p += t);
        psi.iter_mut().for_each(|p| *p -= t);

        let err = foc_residual(&k, &phi, &psi, lam_mu, lam_nu);
        history.push(err);
        if err < tol {
            converged = true;
            break;
        }
    }

    let plan = k.plan(&phi, &psi);
    let marginal_error = foc_residual(&k, &phi, &psi, lam_mu, lam_nu);
    Ok(EntropicSolution { plan, phi, psi, eps, iterations: history.len(), marginal_error, converged, history })
}

fn foc_residual(k: &Kernel<'_>, phi: &[f64], psi: &[f64], lam_mu: f64, lam_nu: f64) -> f64 {
    let (rows, cols) = k.log_marginals(phi, psi);
    let r = rows.iter().enumerate().map(|(i, lr)| (lr - k.log_mu[i] + phi[i] / lam_mu).abs());
    let c = cols.iter().enumerate().map(|(j, lc)| (lc - k.log_nu[j] + psi[j] / lam_nu).abs());
    r.chain(c).fold(0.0, f64::max)
}

fn gen_kl(p: f64, q: f64) -> f64 {
    if p > 0.0 {
        p * (p / q).ln() - p + q
    } else {
        q
    }
}

/// Primal objective of the unbalanced problem at an arbitrary nonnegative plan.
pub fn uot_objective(
    plan: &Array2<f64>,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    eps: f64,
    lam_mu: f64,
    lam_nu: f64,
) -> f64 {
    let mut value = 0.0;
    for ((i, j), &p) in plan.indexed_iter() {
        value += p * cost[(i, j)] + eps * gen_kl(p, mu.weights()[i] * nu.weights()[j]);
    }
    for (r, &w) in plan.rows().into_iter().zip(mu.weights()) {
        value += lam_mu * gen_kl(r.sum(), w);
    }
    for (c, &w) in plan.columns().into_iter().zip(nu.weights()) {
        value += lam_nu * gen_kl(c.sum(), w);
    }
    value
}

/// Dual objective of the unbalanced problem at the solution's potentials.
pub fn uot_dual(
    sol: &EntropicSolution,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    lam_mu: f64,
    lam_nu: f64,
) -> f64 {
    let a: f64 = mu.weights().iter().zip(&sol.phi).map(|(w, p)| w * (1.0 - (-p / lam_mu).exp())).sum();
    let b: f64 = nu.weights().iter().zip(&sol.psi).map(|(w, p)| w * (1.0 - (-p / lam_nu).exp())).sum();
    let mut mass = 0.0;
    for (i, &wi) in mu.weights().iter().enumerate() {
        for (j, &wj) in nu.weights().iter().enumerate() {
            mass += wi * wj * ((sol.phi[i] + sol.psi[j] - cost[(i, j)]) / sol.eps).exp_m1();
        }
    }
    lam_mu * a + lam_nu * b - sol.eps * mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::solve_discrete_ot;
    use ndarray::array;
    use proptest::prelude::*;

    fn prob(w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::probability(w.to_vec()).unwrap()
    }

    fn max_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    fn random_instance(seed: u64, m: usize, n: usize) -> (DiscreteMeasure, DiscreteMeasure, CostMatrix) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut w = |k: usize| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let (a, b) = (w(m), w(n));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let c = Array2::from_shape_fn((m, n), |_| rng.random_range(0.0..1.0));
        (DiscreteMeasure::new(a).unwrap(), DiscreteMeasure::new(b).unwrap(), CostMatrix::new(c).unwrap())
    }

    #[test]
    fn zero_cost_gives_independent_coupling() {
        let (mu, nu) = (prob(&[0.2, 0.3, 0.5]), prob(&[0.6, 0.4]));
        let c = CostMatrix::new(Array2::zeros((3, 2))).unwrap();
        for eps in [0.01, 1.0, 100.0] {
            let s = sinkhorn(&mu, &nu, &c, eps, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            let outer = Array2::from_shape_fn((3, 2), |(i, j)| mu.weights()[i] * nu.weights()[j]);
            assert!(max_diff(&s.plan, &outer) < 1e-15);
            let (tc, obj) = eot_value(&s, &c);
            assert_eq!(tc, 0.0);
            assert!(obj.abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two_limits() {
        let half = prob(&[0.5, 0.5]);
        let c = CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let s = sinkhorn(&half, &half, &c, 1e6, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(s.converged);
        assert!(max_diff(&s.plan, &Array2::from_elem((2, 2), 0.25)) < 1e-6);
        assert!((eot_value(&s, &c).0 - 0.5).abs() < 1e-6);

        let s = sinkhorn(&half, &half, &c, 0.01, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let lp = solve_discrete_ot(&half, &half, &c).unwrap();
        assert!(max_diff(&s.plan, &lp.plan.mass().to_owned()) < 1e-4);
        assert!(eot_value(&s, &c).0 - lp.value <= 0.01 * 4f64.ln());
    }

    #[test]
    fn rejects_bad_parameters() {
        let half = prob(&[0.5, 0.5]);
        let c = CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(sinkhorn(&half, &half, &c, 0.0, 1e-9, 10).is_err());
        assert!(sinkhorn(&half, &half, &c, 1.0, -1.0, 10).is_err());
        let zero = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
        assert!(sinkhorn(&zero, &half, &c, 1.0, 1e-9, 10).is_err());
        assert!(unbalanced_sinkhorn(&half, &half, &c, 1.0, 0.0, 1.0, 1e-9, 10).is_err());
    }

    #[test]
    fn iteration_cap_is_reported_not_raised() {
        let (mu, nu, c) = random_instance(3, 4, 4);
        let s = sinkhorn(&mu, &nu, &c, 0.01, 1e-15, 2).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 2);
    }

    #[test]
    fn unbalanced_scalar_case() {
        let one = prob(&[1.0]);
        for (cst, eps, lm, ln) in [(1.0, 0.1, 1.0, 2.0), (3.0, 1e-3, 0.5, 0.5), (-2.0, 1.0, 4.0, 1.0)] {
            let c = CostMatrix::new(array![[cst]]).unwrap();
            let s = unbalanced_sinkhorn(&one, &one, &c, eps, lm, ln, 1e-12, 10_000).unwrap();
            assert!(s.converged);
            // scalar first-order condition c + (eps + lam_mu + lam_nu) ln m = 0
            let expected = (-cst / (eps + lm + ln)).exp();
            assert!((s.plan[(0, 0)] - expected).abs() < 1e-10 * expected.max(1.0));
        }
    }

    #[test]
    fn unbalanced_zero_cost_keeps_marginals() {
        let (mu, nu) = (prob(&[0.25, 0.75]), prob(&[0.25, 0.75]));
        let c = CostMatrix::new(Array2::zeros((2, 2))).unwrap();
        let s = unbalanced_sinkhorn(&mu, &nu, &c, 0.5, 1.0, 1.0, 1e-12, 10_000).unwrap();
        let outer = Array2::from_shape_fn((2, 2), |(i, j)| mu.weights()[i] * nu.weights()[j]);
        assert!(max_diff(&s.plan, &outer) < 1e-12);
    }

    #[test]
    fn unbalanced_strong_duality_and_local_optimality() {
        let (mu, nu, c) = random_instance(11, 3, 4);
        let (eps, lm, ln) = (0.2, 0.7, 1.5);
        let s = unbalanced_sinkhorn(&mu, &nu, &c, eps, lm, ln, 1e-12, 10_000).unwrap();
        assert!(s.converged);
        let primal = uot_objective(&s.plan, &mu, &nu, &c, eps, lm, ln);
        let dual = uot_dual(&s, &mu, &nu, &c, lm, ln);
        assert!((primal - dual).abs() < 1e-10, "primal {primal} dual {dual}");
        for (ij, scale) in [((0, 0), 1.01), ((1, 2), 0.99), ((2, 3), 1.05)] {
            let mut p = s.plan.clone();
            p[ij] *= scale;
            assert!(uot_objective(&p, &mu, &nu, &c, eps, lm, ln) > primal);
        }
    }

    #[test]
    fn unbalanced_balanced_limit() {
        for seed in 0..20 {
            let (mu, nu, c) = random_instance(seed, 4, 4);
            let b = sinkhorn(&mu, &nu, &c, 0.1, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            let u = unbalanced_sinkhorn(&mu, &nu, &c, 0.1, 1e6, 1e6, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            assert!(u.converged);
            assert!(max_diff(&b.plan, &u.plan) < 1e-5, "seed {seed}: {}", max_diff(&b.plan, &u.plan));
        }
    }

    #[test]
    fn primal_equals_dual_at_convergence() {
        let (mu, nu, c) = random_instance(5, 5, 3);
        let s = sinkhorn(&mu, &nu, &c, 0.05, 1e-12, DEFAULT_MAX_ITER).unwrap();
        let (_, primal) = eot_value(&s, &c);
        assert!((primal - eot_dual(&s, &mu, &nu, &c)).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn solution_invariants(seed in 0u64..10_000, m in 1usize..6, n in 1usize..6, eps in 0.02f64..2.0) {
            let (mu, nu, c) = random_instance(seed, m, n);
            let s = sinkhorn(&mu, &nu, &c, eps, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            prop_assert!(s.converged);
            prop_assert!(s.marginal_error < DEFAULT_TOL);
            prop_assert!(s.plan.iter().all(|&p| p > 0.0));
            prop_assert_eq!(s.phi[0], 0.0);
            for ((i, j), &p) in s.plan.indexed_iter() {
                let model = mu.weights()[i] * nu.weights()[j] * ((s.phi[i] + s.psi[j] - c[(i, j)]) / eps).exp();
                prop_assert!((p - model).abs() <= 1e-9 * model);
            }
            // marginal error of the alternating projections never increases
            prop_assert!(s.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-16));
        }

        #[test]
        fn gauge_shift_leaves_plan_unchanged(seed in 0u64..10_000, t in -50.0f64..50.0) {
            let (mu, nu, c) = random_instance(seed, 3, 4);
            let s = sinkhorn(&mu, &nu, &c, 0.3, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            let k = Kernel::new(&mu, &nu, &c, 0.3);
            let phi: Vec<f64> = s.phi.iter().map(|p| p + t).collect();
            let psi: Vec<f64> = s.psi.iter().map(|p| p - t).collect();
            prop_assert!(max_diff(&k.plan(&phi, &psi), &s.plan) < 1e-12);
        }
    }
}
