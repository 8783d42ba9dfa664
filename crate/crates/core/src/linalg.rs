//! Symmetric matrix roots and Gaussian measures.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, Error, Result};

/// Relative eigenvalue tolerance: eigenvalues down to `-EIG_TOL * lambda_max`
/// are treated as rounding noise and clamped to zero.
pub const EIG_TOL: f64 = 1e-12;

fn check_symmetric(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(domain("matrix entries must be finite"));
    }
    let scale = a.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return Err(domain(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Eigen-decomposition with PSD check; returns clamped eigenvalues.
fn psd_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if lmin < -EIG_TOL * lmax || (lmax <= 0.0 && lmin < 0.0) {
        return Err(Error::NotPsd(lmin));
    }
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    Ok((vals, eig.eigenvectors))
}

fn spectral(vecs: &DMatrix<f64>, vals: &DVector<f64>) -> DMatrix<f64> {
    let b = vecs * DMatrix::from_diagonal(vals) * vecs.transpose();
    (&b + b.transpose()) * 0.5
}

/// Symmetric PSD square root. Negative eigenvalues within tolerance are
/// clamped to zero before taking the root.
pub fn spd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(a, 1e-10)?;
    let (vals, vecs) = psd_eigen(a)?;
    Ok(spectral(&vecs, &vals.map(f64::sqrt)))
}

/// Inverse square root of a strictly positive definite matrix.
pub fn spd_inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(a, 1e-10)?;
    let (vals, vecs) = psd_eigen(a)?;
    let lmax = vals.max();
    let lmin = vals.min();
    if lmin <= EIG_TOL * lmax || lmax <= 0.0 {
        return Err(Error::NotInvertible(lmin));
    }
    Ok(spectral(&vecs, &vals.map(|v| 1.0 / v.sqrt())))
}

/// A Gaussian measure `N(mean, cov)` on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(domain("Gaussian dimension must be at least 1"));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "mean of length {} with {}x{} covariance",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(domain("mean entries must be finite"));
        }
        check_symmetric(&cov, 1e-12)?;
        psd_eigen(&cov)?;
        Ok(Self { mean, cov })
    }

    /// Convenience constructor from row-major slices.
    pub fn from_slices(mean: &[f64], cov: &[f64]) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d * d {
            return Err(Error::ShapeMismatch(format!("covariance needs {} entries, got {}", d * d, cov.len())));
        }
        Self::new(DVector::from_column_slice(mean), DMatrix::from_row_slice(d, d, cov))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}
