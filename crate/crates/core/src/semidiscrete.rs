//! Semi-discrete transport from the uniform law on `[0,1]^d` to a finitely
//! supported target, and empirical vector ranks on Halton sets.
//!
//! The uniform source is represented by the midpoints of a regular grid, so
//! cell masses are grid-point counts. The semi-dual
//! `G(psi) = int min_j (|x - y_j|^2 - psi_j) dx + sum_j psi_j q_j`
//! is concave with gradient `q_j - mass_j(psi)`, and is maximized by gradient
//! ascent with a halving line search.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::discrete::{extract_assignment, solve_discrete_ot};
use crate::error::{domain, Error, Result};
use crate::halton::{halton, HaltonSet};
use crate::measures::{CostMatrix, DiscreteMeasure};

/// Largest number of grid points a solve may allocate work for.
pub const MAX_GRID_POINTS: usize = 10_000_000;

/// Default grid resolution per axis for `d = 1, 2, 3`.
pub fn default_grid_res(d: usize) -> usize {
    match d {
        1 => 512,
        2 => 256,
        _ => 64,
    }
}

/// Power diagram: sites `y_j` with weights `psi_j` and target masses `q_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreDiagram {
    sites: Array2<f64>,
    weights: Vec<f64>,
    target_masses: Vec<f64>,
    /// Grid-estimated cell masses at `weights`, if the diagram was solved.
    pub cell_masses: Option<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    /// Semi-dual value at each accepted iterate.
    pub objective_history: Vec<f64>,
}

impl LaguerreDiagram {
    /// Weights are shifted so the last one is zero; cells do not depend on a
    /// common shift.
    pub fn new(sites: Array2<f64>, weights: Vec<f64>, target_masses: Vec<f64>) -> Result<Self> {
        let k = sites.nrows();
        if k == 0 || sites.ncols() == 0 {
            return Err(domain("diagram needs at least one site of dimension >= 1"));
        }
        if weights.len() != k || target_masses.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "{k} sites, {} weights, {} target masses",
                weights.len(),
                target_masses.len()
            )));
        }
        if sites.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(domain("sites and weights must be finite"));
        }
        DiscreteMeasure::probability(target_masses.clone())?;
        let last = weights[k - 1];
        let weights = weights.into_iter().map(|w| w - last).collect();
        Ok(Self {
            sites,
            weights,
            target_masses,
            cell_masses: None,
            converged: false,
            iterations: 0,
            objective_history: Vec::new(),
        })
    }

    pub fn sites(&self) -> ArrayView2<'_, f64> {
        self.sites.view()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target_masses(&self) -> &[f64] {
        &self.target_masses
    }

    pub fn dim(&self) -> usize {
        self.sites.ncols()
    }

    pub fn len(&self) -> usize {
        self.sites.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.nrows() == 0
    }
}

/// `(argmin_j |x - y_j|^2 - psi_j, min value)`, ties to the lowest index.
fn power_argmin(x: &[f64], sites: ArrayView2<'_, f64>, psi: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, y) in sites.rows().into_iter().enumerate() {
        let v = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() - psi[j];
        if v < best.1 {
            best = (j, v);
        }
    }
    best
}

/// Index of the Laguerre cell containing `x`.
pub fn laguerre_assign(x: &[f64], diag: &LaguerreDiagram) -> usize {
    power_argmin(x, diag.sites.view(), &diag.weights).0
}

/// Midpoint grid on `[0,1]^d`, stored row-major.
struct Grid {
    points: Vec<f64>,
    d: usize,
}

impl Grid {
    fn new(res: usize, d: usize) -> Result<Self> {
        let count = res.checked_pow(d as u32).filter(|&c| c <= MAX_GRID_POINTS).ok_or_else(|| {
            Error::Resource(format!("grid {res}^{d} exceeds {MAX_GRID_POINTS} points"))
        })?;
        let axis: Vec<f64> = (0..res).map(|k| (k as f64 + 0.5) / res as f64).collect();
        let mut points = Vec::with_capacity(count * d);
        for idx in 0..count {
            let mut rest = idx;
            for _ in 0..d {
                points.push(axis[rest % res]);
                rest /= res;
            }
        }
        Ok(Self { points, d })
    }

    fn len(&self) -> usize {
        self.points.len() / self.d
    }

    /// Semi-dual value and cell masses at `psi`.
    fn evaluate(&self, sites: ArrayView2<'_, f64>, psi: &[f64], q: &[f64]) -> (f64, Vec<f64>) {
        let mut counts = vec![0usize; psi.len()];
        let mut integral = 0.0;
        for x in self.points.chunks_exact(self.d) {
            let (j, v) = power_argmin(x, sites, psi);
            counts[j] += 1;
            integral += v;
        }
        let n = self.len() as f64;
        let linear: f64 = psi.iter().zip(q).map(|(p, w)| p * w).sum();
        (integral / n + linear, counts.into_iter().map(|c| c as f64 / n).collect())
    }
}

/// Solves for Laguerre weights whose grid cell masses match `nu`'s weights
/// within `tol` in L-infinity. Running out of iterations returns the last
/// iterate with `converged = false`.
pub fn semidiscrete_solve(
    nu: &DiscreteMeasure,
    d: usize,
    grid_res: usize,
    tol: f64,
    max_iter: usize,
) -> Result<LaguerreDiagram> {
    if d == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    if d > 3 {
        return Err(Error::Unsupported(format!("semi-discrete solve in dimension {d} (supported 1..=3)")));
    }
    if grid_res == 0 {
        return Err(domain("grid resolution must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tol must be positive, got {tol}")));
    }
    let sites = nu.points().ok_or_else(|| domain("target measure needs support points"))?;
    if sites.ncols() != d {
        return Err(Error::ShapeMismatch(format!("points have dimension {}, expected {d}", sites.ncols())));
    }
    if !nu.is_strictly_positive() {
        return Err(domain("target weights must be strictly positive"));
    }
    let q = DiscreteMeasure::probability(nu.weights().to_vec())?;
    let q = q.weights();
    let grid = Grid::new(grid_res, d)?;
    let k = q.len();

    let mut psi = vec![0.0; k];
    let (mut value, mut mass) = grid.evaluate(sites, &psi, q);
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        if crate::util::max_abs_diff(&mass, q) <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let grad: Vec<f64> = q.iter().zip(&mass).map(|(a, b)| a - b).collect();
        let mut step = 1.0;
        let accepted = loop {
            let last = grad[k - 1] * step;
            let trial: Vec<f64> = psi.iter().zip(&grad).map(|(p, g)| p + step * g - last).collect();
            let (v, m) = grid.evaluate(sites, &trial, q);
            if v >= value {
                break Some((trial, v, m));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((trial, v, m)) = accepted else { break };
        psi = trial;
        value = v;
        mass = m;
        history.push(value);
    }
    if !converged {
        converged = crate::util::max_abs_diff(&mass, q) <= tol;
    }

    let mut diag = LaguerreDiagram::new(sites.to_owned(), psi, q.to_vec())?;
    diag.cell_masses = Some(mass);
    diag.converged = converged;
    diag.iterations = iterations;
    diag.objective_history = history;
    Ok(diag)
}

/// The site whose Laguerre cell contains `u`.
pub fn vector_quantile<'a>(diag: &'a LaguerreDiagram, u: &[f64]) -> Result<ArrayView1<'a, f64>> {
    if u.len() != diag.dim() {
        return Err(Error::ShapeMismatch(format!("point of dimension {}, diagram of dimension {}", u.len(), diag.dim())));
    }
    if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(domain("vector quantile level must lie in [0,1]^d"));
    }
    Ok(diag.sites.row(laguerre_assign(u, diag)))
}

/// Empirical vector ranks: observation `i` is assigned Halton point
/// `permutation[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankAssignment {
    pub permutation: Vec<usize>,
    pub halton: HaltonSet,
}

impl RankAssignment {
    /// Rank of observation `i`.
    pub fn rank(&self, i: usize) -> ArrayView1<'_, f64> {
        self.halton.point(self.permutation[i])
    }
}

/// Quadratic-cost optimal assignment of the sample to `halton(n, d)`.
///
/// If ties leave the simplex at a split plan, costs are perturbed by
/// `1e-12 (i N + j)` and the problem is re-solved.
pub fn vector_rank(sample: ArrayView2<'_, f64>) -> Result<RankAssignment> {
    let (n, d) = sample.dim();
    if n == 0 {
        return Err(domain("vector ranks need at least one observation"));
    }
    let grid = halton(n, d)?;
    let uniform = DiscreteMeasure::uniform(n)?;
    let cost = CostMatrix::squared_euclidean(sample, grid.points())?;
    let plan = solve_discrete_ot(&uniform, &uniform, &cost)?.plan;
    let permutation = match extract_assignment(&plan) {
        Ok(p) => p,
        Err(Error::NonAssignment(_)) => {
            let base = cost.view();
            let nudged = CostMatrix::from_fn(n, n, |(i, j)| base[(i, j)] + 1e-12 * (i * n + j) as f64)?;
            extract_assignment(&solve_discrete_ot(&uniform, &uniform, &nudged)?.plan)?
        }
        Err(e) => return Err(e),
    };
    Ok(RankAssignment { permutation, halton: grid })
}
