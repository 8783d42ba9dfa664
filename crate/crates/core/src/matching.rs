//! Matching markets with logit heterogeneity: equilibrium flows, surplus
//! identification, parametric estimation and sparse cost recovery.
//!
//! Flows and singles follow the parameterization
//! `pi_xy = exp(Phi_xy - a_x - b_y)`, `pi_x0 = exp(-2 a_x)`, `pi_0y = exp(-2 b_y)`,
//! so with `u = exp(-a)`, `v = exp(-b)` the margins read
//! `mu_x = u_x^2 + u_x sum_y exp(Phi_xy) v_y` and symmetrically for `nu`.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, ArrayView2, ArrayView3};

use crate::error::{domain, Error, Result};
use crate::measures::{CostMatrix, DiscreteMeasure};
use crate::util::{logsumexp_by, max_abs_diff};

/// Exponents above this are refused rather than overflowing to infinity.
pub const EXP_CAP: f64 = 700.0;

fn capped_exp(x: f64) -> Result<f64> {
    if x > EXP_CAP {
        return Err(Error::Overflow(x));
    }
    Ok(x.exp())
}

/// Observed (or equilibrium) matching: flows `pi_xy`, singles `pi_x0`, `pi_0y`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingTable {
    flows: Array2<f64>,
    singles_x: Vec<f64>,
    singles_y: Vec<f64>,
}

impl MatchingTable {
    pub fn new(flows: Array2<f64>, singles_x: Vec<f64>, singles_y: Vec<f64>) -> Result<Self> {
        let (nx, ny) = flows.dim();
        if nx == 0 || ny == 0 {
            return Err(domain("matching table must be nonempty"));
        }
        if singles_x.len() != nx || singles_y.len() != ny {
            return Err(Error::ShapeMismatch(format!(
                "{nx}x{ny} flows with {} and {} singles",
                singles_x.len(),
                singles_y.len()
            )));
        }
        if flows.iter().chain(&singles_x).chain(&singles_y).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(domain("matching table entries must be finite and strictly positive"));
        }
        Ok(Self { flows, singles_x, singles_y })
    }

    pub fn flows(&self) -> ArrayView2<'_, f64> {
        self.flows.view()
    }

    pub fn singles_x(&self) -> &[f64] {
        &self.singles_x
    }

    pub fn singles_y(&self) -> &[f64] {
        &self.singles_y
    }

    pub fn dim(&self) -> (usize, usize) {
        self.flows.dim()
    }

    /// `mu_x = pi_x0 + sum_y pi_xy`
    pub fn mu(&self) -> Vec<f64> {
        self.flows.rows().into_iter().zip(&self.singles_x).map(|(r, s)| s + r.sum()).collect()
    }

    /// `nu_y = pi_0y + sum_x pi_xy`
    pub fn nu(&self) -> Vec<f64> {
        self.flows.columns().into_iter().zip(&self.singles_y).map(|(c, s)| s + c.sum()).collect()
    }
}

/// Surplus basis `phi_xyk`; `Phi_xy(lambda) = sum_k phi_xyk lambda_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurplusBasis {
    basis: Array3<f64>,
}

impl SurplusBasis {
    pub fn new(basis: Array3<f64>) -> Result<Self> {
        let (nx, ny, k) = basis.dim();
        if nx == 0 || ny == 0 || k == 0 {
            return Err(domain("surplus basis must be nonempty"));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(domain("surplus basis entries must be finite"));
        }
        Ok(Self { basis })
    }

    pub fn view(&self) -> ArrayView3<'_, f64> {
        self.basis.view()
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.basis.dim()
    }

    pub fn n_params(&self) -> usize {
        self.basis.dim().2
    }

    pub fn surplus(&self, lambda: &[f64]) -> Array2<f64> {
        let (nx, ny, _) = self.basis.dim();
        Array2::from_shape_fn((nx, ny), |(x, y)| {
            self.basis.slice(ndarray::s![x, y, ..]).iter().zip(lambda).map(|(p, l)| p * l).sum()
        })
    }

    /// `sum_xy w_xy phi_xyk` for each `k`.
    pub fn moments(&self, weights: ArrayView2<'_, f64>) -> Vec<f64> {
        (0..self.n_params())
            .map(|k| self.basis.slice(ndarray::s![.., .., k]).iter().zip(weights.iter()).map(|(p, w)| p * w).sum())
            .collect()
    }

    fn check_table(&self, (nx, ny): (usize, usize)) -> Result<()> {
        let (bx, by, _) = self.basis.dim();
        if (bx, by) != (nx, ny) {
            return Err(Error::ShapeMismatch(format!("basis is {bx}x{by}, table is {nx}x{ny}")));
        }
        Ok(())
    }

    fn check_params(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n_params() {
            return Err(Error::ShapeMismatch(format!("{} parameters for a basis of size {}", lambda.len(), self.n_params())));
        }
        Ok(())
    }
}

/// Equilibrium of the logit matching market.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub table: MatchingTable,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// L-infinity margin residual.
    pub residual: f64,
}

/// Alternates the closed-form margin solutions
/// `u_x = 2 mu_x / (s_x + sqrt(s_x^2 + 4 mu_x))`, `s_x = sum_y exp(Phi_xy) v_y`,
/// and the mirror update for `v`, until both margins hold within `tol`.
/// The root is written in the form that does not cancel when `s_x` is large.
pub fn cs_equilibrium(
    phi: &CostMatrix,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tol: f64,
    max_iter: usize,
) -> Result<Equilibrium> {
    let (nx, ny) = (phi.nrows(), phi.ncols());
    if mu.len() != nx || nu.len() != ny {
        return Err(Error::ShapeMismatch(format!("surplus is {nx}x{ny}, margins have {} and {}", mu.len(), nu.len())));
    }
    if !mu.is_strictly_positive() || !nu.is_strictly_positive() {
        return Err(domain("margins must be strictly positive"));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tol must be positive, got {tol}")));
    }
    let kernel = phi.view().mapv(capped_exp).into_iter().collect::<Result<Vec<_>>>()?;
    let kernel = Array2::from_shape_vec((nx, ny), kernel).expect("shape preserved");
    let (m, n) = (mu.weights(), nu.weights());
    let root = |mass: f64, s: f64| 2.0 * mass / (s + (s * s + 4.0 * mass).sqrt());

    let mut u: Vec<f64> = m.iter().map(|w| w.sqrt()).collect();
    let mut v: Vec<f64> = n.iter().map(|w| w.sqrt()).collect();
    let residual = |u: &[f64], v: &[f64]| -> f64 {
        let rx = (0..nx).map(|x| (u[x] * u[x] + u[x] * (0..ny).map(|y| kernel[(x, y)] * v[y]).sum::<f64>() - m[x]).abs());
        let ry = (0..ny).map(|y| (v[y] * v[y] + v[y] * (0..nx).map(|x| kernel[(x, y)] * u[x]).sum::<f64>() - n[y]).abs());
        rx.chain(ry).fold(0.0, f64::max)
    };
    let mut iterations = 0;
    let mut res = residual(&u, &v);
    while res >= tol && iterations < max_iter {
        for x in 0..nx {
            let s: f64 = (0..ny).map(|y| kernel[(x, y)] * v[y]).sum();
            u[x] = root(m[x], s);
        }
        for y in 0..ny {
            let s: f64 = (0..nx).map(|x| kernel[(x, y)] * u[x]).sum();
            v[y] = root(n[y], s);
        }
        iterations += 1;
        res = residual(&u, &v);
    }
    let flows = Array2::from_shape_fn((nx, ny), |(x, y)| kernel[(x, y)] * u[x] * v[y]);
    // flows may underflow to zero under very negative surplus, so skip validation
    let table = MatchingTable { flows, singles_x: u.iter().map(|t| t * t).collect(), singles_y: v.iter().map(|t| t * t).collect() };
    Ok(Equilibrium {
        table,
        a: u.iter().map(|t| -t.ln()).collect(),
        b: v.iter().map(|t| -t.ln()).collect(),
        converged: res < tol,
        iterations,
        residual: res,
    })
}

/// Equilibrium at the margins implied by a table.
fn equilibrium_for(phi: &CostMatrix, table: &MatchingTable, tol: f64, max_iter: usize) -> Result<Equilibrium> {
    let mu = DiscreteMeasure::new(table.mu())?;
    let nu = DiscreteMeasure::new(table.nu())?;
    cs_equilibrium(phi, &mu, &nu, tol, max_iter)
}

/// `Phi_xy = ln pi_xy - (ln pi_x0 + ln pi_0y) / 2`, which inverts
/// [`cs_equilibrium`].
pub fn cs_identify(table: &MatchingTable) -> Result<CostMatrix> {
    let (nx, ny) = table.dim();
    CostMatrix::from_fn(nx, ny, |(x, y)| {
        table.flows[(x, y)].ln() - 0.5 * table.singles_x[x].ln() - 0.5 * table.singles_y[y].ln()
    })
}

/// `(lambda, a, b)` for the Poisson parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonParams {
    pub lambda: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

fn check_params(theta: &PoissonParams, table: &MatchingTable, basis: &SurplusBasis) -> Result<()> {
    basis.check_table(table.dim())?;
    basis.check_params(&theta.lambda)?;
    let (nx, ny) = table.dim();
    if theta.a.len() != nx || theta.b.len() != ny {
        return Err(Error::ShapeMismatch(format!("{} and {} fixed effects for a {nx}x{ny} table", theta.a.len(), theta.b.len())));
    }
    Ok(())
}

/// Model flows `exp(Phi - a - b)` and singles `exp(-2a)`, `exp(-2b)`.
fn model(theta: &PoissonParams, basis: &SurplusBasis) -> Result<(Array2<f64>, Vec<f64>, Vec<f64>)> {
    let phi = basis.surplus(&theta.lambda);
    let mut flows = Array2::zeros(phi.dim());
    for ((x, y), f) in flows.indexed_iter_mut() {
        *f = capped_exp(phi[(x, y)] - theta.a[x] - theta.b[y])?;
    }
    let sx = theta.a.iter().map(|a| capped_exp(-2.0 * a)).collect::<Result<_>>()?;
    let sy = theta.b.iter().map(|b| capped_exp(-2.0 * b)).collect::<Result<_>>()?;
    Ok((flows, sx, sy))
}

/// Weighted Poisson log-likelihood: weight 1 on matched cells and 1/2 on
/// singles,
///
/// `l = sum pi_xy (Phi_xy - a_x - b_y) - sum exp(Phi - a - b)
///      - sum pi_x0 a_x - sum pi_0y b_y - (1/2) sum exp(-2a) - (1/2) sum exp(-2b)`.
///
/// The singles observations enter through the `- pi_x0 a_x` and
/// `- pi_0y b_y` terms; with them, the first-order conditions in `a` and `b`
/// are exactly the equilibrium margins.
pub fn poisson_loglik(theta: &PoissonParams, table: &MatchingTable, basis: &SurplusBasis) -> Result<f64> {
    check_params(theta, table, basis)?;
    let phi = basis.surplus(&theta.lambda);
    let (flows, sx, sy) = model(theta, basis)?;
    let mut l = 0.0;
    for ((x, y), &p) in table.flows.indexed_iter() {
        l += p * (phi[(x, y)] - theta.a[x] - theta.b[y]) - flows[(x, y)];
    }
    for x in 0..theta.a.len() {
        l -= table.singles_x[x] * theta.a[x] + 0.5 * sx[x];
    }
    for y in 0..theta.b.len() {
        l -= table.singles_y[y] * theta.b[y] + 0.5 * sy[y];
    }
    Ok(l)
}

/// Gradient of [`poisson_loglik`] in `(lambda, a, b)`.
pub fn poisson_gradient(theta: &PoissonParams, table: &MatchingTable, basis: &SurplusBasis) -> Result<PoissonParams> {
    check_params(theta, table, basis)?;
    let (flows, sx, sy) = model(theta, basis)?;
    let resid = &table.flows - &flows;
    let lambda = basis.moments(resid.view());
    let mu = table.mu();
    let nu = table.nu();
    let a = (0..mu.len()).map(|x| flows.row(x).sum() + sx[x] - mu[x]).collect();
    let b = (0..nu.len()).map(|y| flows.column(y).sum() + sy[y] - nu[y]).collect();
    Ok(PoissonParams { lambda, a, b })
}

/// Output of [`moment_matching`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentFit {
    pub lambda: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub iterations: usize,
    /// Predicted minus observed moments at `lambda`.
    pub moment_residual: Vec<f64>,
    /// Outer objective at each accepted iterate.
    pub objective_history: Vec<f64>,
}

const INNER_TOL: f64 = 1e-13;
const INNER_MAX_ITER: usize = 100_000;

/// Outer objective `E*(Phi(lambda)) - sum_k m_k lambda_k` with its gradient
/// `predicted - observed` moments, at the inner equilibrium.
struct MomentObjective<'a> {
    table: &'a MatchingTable,
    basis: &'a SurplusBasis,
    observed: Vec<f64>,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

struct MomentEval {
    value: f64,
    grad: Vec<f64>,
    eq: Equilibrium,
}

impl MomentObjective<'_> {
    fn eval(&self, lambda: &[f64]) -> Result<MomentEval> {
        let phi = CostMatrix::new(self.basis.surplus(lambda))?;
        let eq = equilibrium_for(&phi, self.table, INNER_TOL, INNER_MAX_ITER)?;
        // E* at its minimizing (a, b)
        let mut value: f64 = self.mu.iter().zip(&eq.a).map(|(m, a)| m * a).sum::<f64>()
            + self.nu.iter().zip(&eq.b).map(|(n, b)| n * b).sum::<f64>()
            + eq.table.flows.sum()
            + 0.5 * eq.table.singles_x.iter().sum::<f64>()
            + 0.5 * eq.table.singles_y.iter().sum::<f64>();
        value -= self.observed.iter().zip(lambda).map(|(m, l)| m * l).sum::<f64>();
        let predicted = self.basis.moments(eq.table.flows.view());
        let grad = predicted.iter().zip(&self.observed).map(|(p, o)| p - o).collect();
        Ok(MomentEval { value, grad, eq })
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Moment-matching estimator: finds `lambda` at which equilibrium moments
/// `sum pi^lambda_xy phi_xyk` equal the observed ones within `tol`.
///
/// Nested scheme: each outer evaluation solves the equilibrium at
/// `Phi(lambda)`; the outer convex objective has gradient equal to the moment
/// residual and is minimized by gradient descent with Barzilai-Borwein trial
/// steps and an Armijo backtracking safeguard.
pub fn moment_matching(table: &MatchingTable, basis: &SurplusBasis, tol: f64, max_iter: usize) -> Result<MomentFit> {
    basis.check_table(table.dim())?;
    if !(tol > 0.0) {
        return Err(domain(format!("tol must be positive, got {tol}")));
    }
    check_rank(basis)?;
    let obj = MomentObjective {
        table,
        basis,
        observed: basis.moments(table.flows.view()),
        mu: table.mu(),
        nu: table.nu(),
    };
    let k = basis.n_params();
    let mut lambda = vec![0.0; k];
    let mut cur = obj.eval(&lambda)?;
    let mut history = vec![cur.value];
    let mut step = 1.0;
    let mut iterations = 0;
    while inf_norm(&cur.grad) > tol {
        if iterations == max_iter {
            return Err(Error::NonIdentification(inf_norm(&cur.grad)));
        }
        iterations += 1;
        let g2: f64 = cur.grad.iter().map(|g| g * g).sum();
        let mut t = step;
        let (next_lambda, next) = loop {
            let trial: Vec<f64> = lambda.iter().zip(&cur.grad).map(|(l, g)| l - t * g).collect();
            match obj.eval(&trial) {
                Ok(e) if e.value <= cur.value - 1e-4 * t * g2 => break (trial, e),
                // a rejected trial and an overflowing one are both too long
                Ok(_) | Err(Error::Overflow(_)) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
            if t < 1e-20 {
                return Err(Error::NonIdentification(inf_norm(&cur.grad)));
            }
        };
        // Barzilai-Borwein length for the next trial step
        let s: Vec<f64> = next_lambda.iter().zip(&lambda).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy > 0.0 { (ss / sy).min(1e6) } else { t * 2.0 };
        lambda = next_lambda;
        cur = next;
        history.push(cur.value);
    }
    Ok(MomentFit {
        lambda,
        a: cur.eq.a,
        b: cur.eq.b,
        iterations,
        moment_residual: cur.grad,
        objective_history: history,
    })
}

/// Rejects bases whose `XY x K` design matrix has dependent columns: the
/// moment map is then not injective and `lambda` is not identified.
fn check_rank(basis: &SurplusBasis) -> Result<()> {
    let (nx, ny, k) = basis.dim();
    let view = basis.view();
    let design = DMatrix::from_fn(nx * ny, k, |r, c| view[(r / ny, r % ny, c)]);
    let sv = design.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if k > nx * ny || smin <= 1e-10 * smax.max(f64::MIN_POSITIVE) {
        return Err(Error::NonIdentification(smin));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SistaOptions {
    /// Lasso weight on `|beta|_1`.
    pub l1: f64,
    /// Proximal step; `None` uses `1 / max_k sum_xy phi_xyk^2`.
    pub step: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub beta0: Option<Vec<f64>>,
}

impl Default for SistaOptions {
    fn default() -> Self {
        Self { l1: 0.0, step: None, tol: 1e-10, max_iter: 100_000, beta0: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SistaResult {
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Composite objective `-F + l1 |beta|_1` after each iteration.
    pub objective_history: Vec<f64>,
    /// L-infinity violation of the margins at return.
    pub marginal_error: f64,
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// State of the Sinkhorn/proximal-gradient alternation for cost
/// `c(x, y; beta) = -Phi_xy(beta)` and plan `exp((phi_x + psi_y - c_xy)/eps)`.
struct Sista<'a> {
    pi_hat: &'a Array2<f64>,
    mu: &'a [f64],
    nu: &'a [f64],
    basis: &'a SurplusBasis,
    eps: f64,
    l1: f64,
}

impl Sista<'_> {
    fn exponent(&self, surplus: &Array2<f64>, phi: &[f64], psi: &[f64], x: usize, y: usize) -> f64 {
        (phi[x] + psi[y] + surplus[(x, y)]) / self.eps
    }

    /// `-F + l1 |beta|_1` with `F = sum pi_hat z - sum exp(z)`, `z = (phi + psi - c)/eps`.
    fn composite(&self, beta: &[f64], phi: &[f64], psi: &[f64]) -> f64 {
        let surplus = self.basis.surplus(beta);
        let mut f = 0.0;
        for ((x, y), &p) in self.pi_hat.indexed_iter() {
            let z = self.exponent(&surplus, phi, psi, x, y);
            f += p * z - z.exp();
        }
        -f + self.l1 * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn sinkhorn_sweep(&self, beta: &[f64], phi: &mut [f64], psi: &mut [f64]) {
        let surplus = self.basis.surplus(beta);
        let eps = self.eps;
        for x in 0..phi.len() {
            phi[x] = eps * self.mu[x].ln() - eps * logsumexp_by(psi.len(), |y| (psi[y] + surplus[(x, y)]) / eps);
        }
        for y in 0..psi.len() {
            psi[y] = eps * self.nu[y].ln() - eps * logsumexp_by(phi.len(), |x| (phi[x] + surplus[(x, y)]) / eps);
        }
    }

    fn plan(&self, beta: &[f64], phi: &[f64], psi: &[f64]) -> Array2<f64> {
        let surplus = self.basis.surplus(beta);
        Array2::from_shape_fn(self.pi_hat.dim(), |(x, y)| self.exponent(&surplus, phi, psi, x, y).exp())
    }

    /// Gradient of `-F` in `beta`: `sum (pi^beta - pi_hat) phi_xyk / eps`.
    fn gradient(&self, beta: &[f64], phi: &[f64], psi: &[f64]) -> Vec<f64> {
        let diff = self.plan(beta, phi, psi) - self.pi_hat;
        self.basis.moments(diff.view()).into_iter().map(|g| g / self.eps).collect()
    }

    fn marginal_error(&self, beta: &[f64], phi: &[f64], psi: &[f64]) -> f64 {
        let plan = self.plan(beta, phi, psi);
        let r: Vec<f64> = plan.rows().into_iter().map(|r| r.sum()).collect();
        let c: Vec<f64> = plan.columns().into_iter().map(|c| c.sum()).collect();
        max_abs_diff(&r, self.mu).max(max_abs_diff(&c, self.nu))
    }
}

/// Sparse recovery of a parametric transport cost from an observed plan.
///
/// Each iteration runs one exact Sinkhorn sweep on the potentials at the
/// current `beta`, then a proximal-gradient step
/// `beta <- soft(beta - step * grad(-F), l1 * step)`. If the step raises the
/// composite objective it is halved and retried, and the halved step is kept.
/// Stops once both the parameter change and the margin violation fall below
/// `tol`.
pub fn sista(
    pi_hat: &Array2<f64>,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    basis: &SurplusBasis,
    eps: f64,
    opts: &SistaOptions,
) -> Result<SistaResult> {
    basis.check_table(pi_hat.dim())?;
    let (nx, ny) = pi_hat.dim();
    if mu.len() != nx || nu.len() != ny {
        return Err(Error::ShapeMismatch(format!("{nx}x{ny} plan, margins of length {} and {}", mu.len(), nu.len())));
    }
    if pi_hat.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(domain("observed plan must be strictly positive"));
    }
    let rows: Vec<f64> = pi_hat.rows().into_iter().map(|r| r.sum()).collect();
    let cols: Vec<f64> = pi_hat.columns().into_iter().map(|c| c.sum()).collect();
    if max_abs_diff(&rows, mu.weights()).max(max_abs_diff(&cols, nu.weights())) > 1e-8 {
        return Err(domain("observed plan does not have the given margins"));
    }
    if !(eps > 0.0) {
        return Err(domain(format!("eps must be positive, got {eps}")));
    }
    if !(opts.l1 >= 0.0) {
        return Err(domain(format!("l1 must be nonnegative, got {}", opts.l1)));
    }
    if !(opts.tol > 0.0) {
        return Err(domain(format!("tol must be positive, got {}", opts.tol)));
    }
    let mut step = match opts.step {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(domain(format!("step must be positive, got {s}"))),
        None => {
            let view = basis.view();
            let lip = (0..basis.n_params())
                .map(|k| view.slice(ndarray::s![.., .., k]).iter().map(|p| p * p).sum::<f64>())
                .fold(0.0, f64::max);
            if lip > 0.0 {
                1.0 / lip
            } else {
                1.0
            }
        }
    };
    let mut beta = opts.beta0.clone().unwrap_or_else(|| vec![0.0; basis.n_params()]);
    basis.check_params(&beta)?;

    let state = Sista { pi_hat, mu: mu.weights(), nu: nu.weights(), basis, eps, l1: opts.l1 };
    let mut phi = vec![0.0; nx];
    let mut psi = vec![0.0; ny];
    let mut history = Vec::new();
    let mut rises = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        state.sinkhorn_sweep(&beta, &mut phi, &mut psi);
        let before = state.composite(&beta, &phi, &psi);
        let grad = state.gradient(&beta, &phi, &psi);
        let (next, after) = loop {
            let trial: Vec<f64> =
                beta.iter().zip(&grad).map(|(b, g)| soft_threshold(b - step * g, opts.l1 * step)).collect();
            let value = state.composite(&trial, &phi, &psi);
            if value <= before + 1e-12 * before.abs().max(1.0) {
                break (trial, value);
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::StepSize(iterations));
            }
        };
        if let Some(&last) = history.last() {
            if after > last + 1e-12 * f64::max(1.0, f64::abs(last)) {
                rises += 1;
                if rises == 2 {
                    return Err(Error::StepSize(iterations));
                }
            } else {
                rises = 0;
            }
        }
        history.push(after);
        let change = max_abs_diff(&next, &beta);
        beta = next;
        if change < opts.tol && state.marginal_error(&beta, &phi, &psi) < opts.tol {
            converged = true;
            break;
        }
    }
    let marginal_error = state.marginal_error(&beta, &phi, &psi);
    Ok(SistaResult { beta, phi, psi, iterations, converged, objective_history: history, marginal_error })
}
