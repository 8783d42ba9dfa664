//! Finitely supported measures, cost matrices and scalar samples.

use std::ops::Index;

use ndarray::{Array2, ArrayView2};

use crate::error::{domain, Error, Result};

/// Absolute tolerance on total mass for probability vectors.
pub const MASS_TOL: f64 = 1e-10;

/// A finitely supported nonnegative measure, optionally with coordinates
/// for each atom (one row of `points` per weight).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    points: Option<Array2<f64>>,
}

impl DiscreteMeasure {
    /// Builds a nonnegative measure. Total mass is unconstrained.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(domain("measure needs at least one atom"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(domain(format!("weights must be finite and nonnegative, got {w}")));
        }
        Ok(Self { weights, points: None })
    }

    /// Builds a probability vector; fails if the weights do not sum to one
    /// within [`MASS_TOL`]. Weights are never renormalized.
    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(weights)?;
        let sum = m.total_mass();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::NotProbability { sum, tol: MASS_TOL });
        }
        Ok(m)
    }

    /// The uniform probability on `n` atoms.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("measure needs at least one atom"));
        }
        Ok(Self { weights: vec![1.0 / n as f64; n], points: None })
    }

    /// Attaches coordinates, one row per atom.
    pub fn with_points(mut self, points: Array2<f64>) -> Result<Self> {
        if points.nrows() != self.weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} points for {} weights",
                points.nrows(),
                self.weights.len()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(domain("point coordinates must be finite"));
        }
        self.points = Some(points);
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> Option<ArrayView2<'_, f64>> {
        self.points.as_ref().map(|p| p.view())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True if every atom carries strictly positive mass.
    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }
}

/// Dense matrix of finite transport costs, rows indexed by origins.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(Array2<f64>);

impl CostMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(domain("cost matrix must be nonempty"));
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
            return Err(domain(format!("cost entries must be finite, got {v}")));
        }
        Ok(Self(entries))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut((usize, usize)) -> f64) -> Result<Self> {
        Self::new(Array2::from_shape_fn((rows, cols), f))
    }

    /// Squared Euclidean costs between the rows of `x` and the rows of `y`.
    pub fn squared_euclidean(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "point dimensions {} and {} differ",
                x.ncols(),
                y.ncols()
            )));
        }
        Self::from_fn(x.nrows(), y.nrows(), |(i, j)| {
            x.row(i).iter().zip(y.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
        })
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Largest absolute entry, used to scale pivot tolerances.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for CostMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// A scalar sample kept in nondecreasing order. It represents the empirical
/// distribution putting mass `1/n` on each value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample1D {
    values: Vec<f64>,
}

impl Sample1D {
    /// Sorts `values`; NaN and empty input are rejected.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(domain("sample must contain at least one value"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(domain("sample contains NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Sorted values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Generalized inverse `Q(t) = inf{y : F(y) >= t}`, i.e. the
    /// `ceil(t n)`-th order statistic.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(domain(format!("quantile level must lie in (0, 1], got {t}")));
        }
        let n = self.len();
        let x = t * n as f64;
        // t = k/n rounds to k +/- ulp; snap so that Q(k/n) is the k-th value
        let r = x.round();
        let k = if (x - r).abs() <= 1e-12 * n as f64 { r } else { x.ceil() };
        let k = (k as usize).clamp(1, n);
        Ok(self.values[k - 1])
    }

    /// Right-continuous empirical CDF `#{values <= y} / n`.
    pub fn cdf(&self, y: f64) -> f64 {
        self.values.partition_point(|&v| v <= y) as f64 / self.len() as f64
    }

    /// Exact integral of the empirical quantile function over `[lo, hi]`.
    pub fn quantile_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(domain(format!("need 0 <= lo <= hi <= 1, got [{lo}, {hi}]")));
        }
        let n = self.len() as f64;
        let (a, b) = (lo * n, hi * n);
        let first = (a.floor() as usize).min(self.len() - 1);
        let last = (b.ceil() as usize).min(self.len());
        let mut acc = 0.0;
        for k in first..last {
            let overlap = b.min((k + 1) as f64) - a.max(k as f64);
            if overlap > 0.0 {
                acc += self.values[k] * overlap;
            }
        }
        Ok(acc / n)
    }
}
