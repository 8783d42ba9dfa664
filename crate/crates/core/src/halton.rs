//! Halton low-discrepancy point sets on the unit cube.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{domain, Error, Result};

const PRIMES: [u64; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

/// Largest supported dimension (one prime base per coordinate).
pub const MAX_DIM: usize = PRIMES.len();

/// Radical inverse of `index` in `base`: the base-`b` digits of `index`
/// mirrored about the radix point.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    acc
}

/// The first `n` Halton points in `[0,1]^d`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct HaltonSet {
    points: Array2<f64>,
}

impl HaltonSet {
    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn into_points(self) -> Array2<f64> {
        self.points
    }
}

/// Point `i` (1-based, the origin at index 0 is skipped) has coordinate `k`
/// equal to the radical inverse of `i` in the `k`-th prime base.
pub fn halton(n: usize, d: usize) -> Result<HaltonSet> {
    if n == 0 {
        return Err(domain("Halton set needs n >= 1"));
    }
    if d == 0 || d > MAX_DIM {
        return Err(Error::Unsupported(format!("Halton dimension {d} (supported 1..={MAX_DIM})")));
    }
    let points = Array2::from_shape_fn((n, d), |(i, k)| radical_inverse(i as u64 + 1, PRIMES[k]));
    Ok(HaltonSet { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_prefix() {
        let h = halton(3, 1).unwrap();
        assert_eq!(h.points().column(0).to_vec(), vec![0.5, 0.25, 0.75]);
    }

    #[test]
    fn two_and_three_dimensions() {
        let h = halton(2, 2).unwrap();
        assert_eq!(h.point(0)[0], 0.5);
        assert_abs_diff_eq!(h.point(0)[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(h.point(1)[0], 0.25);
        assert_abs_diff_eq!(h.point(1)[1], 2.0 / 3.0, epsilon = 1e-15);

        let h = halton(1, 3).unwrap();
        assert_eq!(h.point(0)[0], 0.5);
        assert_abs_diff_eq!(h.point(0)[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.point(0)[2], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(matches!(halton(4, 21), Err(Error::Unsupported(_))));
        assert!(halton(0, 2).is_err());
        assert!(halton(4, 20).is_ok());
    }

    proptest! {
        #[test]
        fn prefix_stable_interior_and_distinct(n in 1usize..200, d in 1usize..=6) {
            let a = halton(n, d).unwrap();
            let b = halton(n + 1, d).unwrap();
            let prefix = b.points().slice(ndarray::s![..n, ..]).to_owned();
            prop_assert_eq!(a.points(), prefix.view());
            prop_assert!(a.points().iter().all(|&v| v > 0.0 && v < 1.0));
            // the first coordinate alone is injective (base-2 van der Corput)
            let mut first: Vec<f64> = a.points().column(0).to_vec();
            first.sort_by(f64::total_cmp);
            prop_assert!(first.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
