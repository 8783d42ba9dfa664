//! Closed-form transport: quantile couplings on the line, Gaussian maps,
//! sliced distances and 1D barycenters.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::linalg::{spd_inv_sqrt, spd_sqrt, GaussianMeasure};
use crate::measures::Sample1D;

/// Walks the merged breakpoint grid `{k/n} u {l/m}` of two empirical
/// quantile functions and calls `f(mass, x, y)` once per piece, with `mass`
/// in units of `1/(n m)`.
fn merged_grid(x: &Sample1D, y: &Sample1D, mut f: impl FnMut(usize, f64, f64)) {
    let (xs, ys) = (x.values(), y.values());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    // each x atom holds m units, each y atom n units
    let (mut rx, mut ry) = (m, n);
    while i < n && j < m {
        let k = rx.min(ry);
        f(k, xs[i], ys[j]);
        rx -= k;
        ry -= k;
        if rx == 0 {
            i += 1;
            rx = m;
        }
        if ry == 0 {
            j += 1;
            ry = n;
        }
    }
}

/// `int_0^1 c(Q_x(t), Q_y(t)) dt`, the optimal cost for a submodular `c`.
///
/// The integral is a finite sum over the merged breakpoint grid, so the value
/// is exact for empirical measures of any sizes. The comonotone coupling is
/// only optimal for submodular costs; passing `submodular = false` is an
/// error rather than a silently wrong number.
pub fn ot_value_1d(x: &Sample1D, y: &Sample1D, cost: impl Fn(f64, f64) -> f64, submodular: bool) -> Result<f64> {
    if !submodular {
        return Err(Error::Unsupported("the quantile formula needs a submodular cost".into()));
    }
    let mut total = 0.0;
    merged_grid(x, y, |k, a, b| total += k as f64 * cost(a, b));
    Ok(total / (x.len() as f64 * y.len() as f64))
}

/// Wasserstein-`p` distance between two empirical measures on the line.
pub fn wasserstein_1d(x: &Sample1D, y: &Sample1D, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(domain(format!("p must be a finite number >= 1, got {p}")));
    }
    let v = ot_value_1d(x, y, |a, b| (a - b).abs().powf(p), true)?;
    Ok(v.powf(1.0 / p))
}

/// `x -> shift + linear x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub shift: DVector<f64>,
    pub linear: DMatrix<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.shift + &self.linear * x
    }
}

fn check_same_dim(g1: &GaussianMeasure, g2: &GaussianMeasure) -> Result<()> {
    if g1.dim() != g2.dim() {
        return Err(Error::ShapeMismatch(format!("Gaussians of dimension {} and {}", g1.dim(), g2.dim())));
    }
    Ok(())
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// `(S1^{1/2} S2 S1^{1/2})^{1/2}` and `S1^{1/2}`.
fn cross_root(g1: &GaussianMeasure, g2: &GaussianMeasure) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let s1_half = spd_sqrt(g1.cov())?;
    let inner = symmetrize(&s1_half * g2.cov() * &s1_half);
    Ok((spd_sqrt(&inner)?, s1_half))
}

/// Optimal map between Gaussians for quadratic cost:
/// `A = S1^{-1/2} (S1^{1/2} S2 S1^{1/2})^{1/2} S1^{-1/2}`, `b = m2 - A m1`.
pub fn gaussian_ot_map(g1: &GaussianMeasure, g2: &GaussianMeasure) -> Result<AffineMap> {
    check_same_dim(g1, g2)?;
    let inv_half = spd_inv_sqrt(g1.cov())?;
    let (root, _) = cross_root(g1, g2)?;
    let linear = symmetrize(&inv_half * root * &inv_half);
    let shift = g2.mean() - &linear * g1.mean();
    Ok(AffineMap { shift, linear })
}

/// `W_2` between Gaussians. The trace term can round to a tiny negative
/// number when the covariances coincide; it is clamped at zero.
pub fn gaussian_w2(g1: &GaussianMeasure, g2: &GaussianMeasure) -> Result<f64> {
    check_same_dim(g1, g2)?;
    let (root, _) = cross_root(g1, g2)?;
    let mean_term = (g1.mean() - g2.mean()).norm_squared();
    let trace = g1.cov().trace() + g2.cov().trace() - 2.0 * root.trace();
    Ok((mean_term + trace).max(0.0).sqrt())
}

/// Uniform directions on the unit sphere in `R^d` from a seeded stream.
pub fn sphere_directions(d: usize, n_dir: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_dir)
        .map(|_| loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                break v.into_iter().map(|a| a / norm).collect();
            }
        })
        .collect()
}

fn project(x: ArrayView2<'_, f64>, dir: &[f64]) -> Result<Sample1D> {
    Sample1D::new(x.rows().into_iter().map(|r| r.iter().zip(dir).map(|(a, b)| a * b).sum()).collect())
}

/// Monte Carlo sliced Wasserstein distance: the `p`-mean of 1D distances
/// between projections on `n_dir` random directions. Directions are drawn
/// serially from `seed`, so the value is reproducible for a fixed seed.
pub fn sliced_wasserstein(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, p: f64, n_dir: usize, seed: u64) -> Result<f64> {
    let d = x.ncols();
    if d == 0 {
        return Err(domain("points must have dimension at least 1"));
    }
    if y.ncols() != d {
        return Err(Error::ShapeMismatch(format!("point dimensions {} and {}", d, y.ncols())));
    }
    if n_dir == 0 {
        return Err(domain("n_dir must be at least 1"));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(domain(format!("p must be a finite number >= 1, got {p}")));
    }
    let mut total = 0.0;
    for dir in sphere_directions(d, n_dir, seed) {
        let (px, py) = (project(x, &dir)?, project(y, &dir)?);
        total += ot_value_1d(&px, &py, |a, b| (a - b).abs().powf(p), true)?;
    }
    Ok((total / n_dir as f64).powf(1.0 / p))
}

/// `W_2` barycenter of equal-size empirical measures: its `i`-th order
/// statistic is the weighted average of the inputs' `i`-th order statistics.
pub fn barycenter_1d(samples: &[Sample1D], weights: &[f64]) -> Result<Sample1D> {
    if samples.is_empty() {
        return Err(domain("barycenter needs at least one sample"));
    }
    if weights.len() != samples.len() {
        return Err(Error::ShapeMismatch(format!("{} samples, {} weights", samples.len(), weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(domain("barycenter weights must be nonnegative"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > crate::measures::MASS_TOL {
        return Err(Error::NotProbability { sum, tol: crate::measures::MASS_TOL });
    }
    let n = samples[0].len();
    if samples.iter().any(|s| s.len() != n) {
        return Err(Error::Unsupported("barycenter of samples with different sizes".into()));
    }
    let values = (0..n).map(|i| samples.iter().zip(weights).map(|(s, w)| w * s.values()[i]).sum()).collect();
    Sample1D::new(values)
}
