//! Brute-force reference solvers used only by the test suites.
#![allow(dead_code)]

use std::collections::HashMap;

use ndarray::Array2;

/// Minimum of `sum X_ij C_ij / total` over nonnegative integer matrices `X`
/// with row sums `rows` and column sums `cols`.
///
/// With integer margins every vertex of the transportation polytope is
/// integral, so this exhaustive search returns the LP optimum for the
/// marginals `rows / total`, `cols / total`.
pub fn transport_lp_integer(rows: &[u32], cols: &[u32], cost: &Array2<f64>) -> f64 {
    let total: u32 = rows.iter().sum();
    assert_eq!(total, cols.iter().sum::<u32>());
    let mut memo = HashMap::new();
    best_from_row(0, cols.to_vec(), rows, cost, &mut memo) / total as f64
}

fn best_from_row(i: usize, caps: Vec<u32>, rows: &[u32], cost: &Array2<f64>, memo: &mut HashMap<(usize, Vec<u32>), f64>) -> f64 {
    if i == rows.len() {
        return if caps.iter().all(|&c| c == 0) { 0.0 } else { f64::INFINITY };
    }
    if let Some(&v) = memo.get(&(i, caps.clone())) {
        return v;
    }
    let mut best = f64::INFINITY;
    let mut alloc = vec![0u32; caps.len()];
    fill_row(i, 0, rows[i], &caps, &mut alloc, rows, cost, memo, &mut best);
    memo.insert((i, caps), best);
    best
}

#[allow(clippy::too_many_arguments)]
fn fill_row(
    i: usize,
    j: usize,
    left: u32,
    caps: &[u32],
    alloc: &mut Vec<u32>,
    rows: &[u32],
    cost: &Array2<f64>,
    memo: &mut HashMap<(usize, Vec<u32>), f64>,
    best: &mut f64,
) {
    let n = caps.len();
    if j == n - 1 {
        if left > caps[j] {
            return;
        }
        alloc[j] = left;
        let here: f64 = (0..n).map(|k| alloc[k] as f64 * cost[(i, k)]).sum();
        let rest: Vec<u32> = caps.iter().zip(alloc.iter()).map(|(c, a)| c - a).collect();
        let v = here + best_from_row(i + 1, rest, rows, cost, memo);
        if v < *best {
            *best = v;
        }
        return;
    }
    for a in 0..=left.min(caps[j]) {
        alloc[j] = a;
        fill_row(i, j + 1, left - a, caps, alloc, rows, cost, memo, best);
    }
}

/// Maximum of `c . x` over `{x >= 0 : A x = b}` by enumerating every basis
/// of `A.len()` columns. `None` when the polytope has no vertex.
pub fn lp_max_vertices(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    let mut best: Option<f64> = None;
    let mut cols: Vec<usize> = (0..m).collect();
    loop {
        if let Some(x) = solve_square(a, b, &cols) {
            if x.iter().all(|&v| v >= -1e-10) {
                let v: f64 = cols.iter().zip(&x).map(|(&j, xj)| c[j] * xj).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        // next combination in lexicographic order
        let mut k = m;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if cols[k] < n - m + k {
                break;
            }
        }
        cols[k] += 1;
        for t in k + 1..m {
            cols[t] = cols[t - 1] + 1;
        }
    }
}

fn solve_square(a: &[Vec<f64>], b: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let m = cols.len();
    let mut t: Vec<Vec<f64>> = (0..m).map(|r| cols.iter().map(|&j| a[r][j]).chain([b[r]]).collect()).collect();
    for p in 0..m {
        let piv = (p..m).max_by(|&r, &s| t[r][p].abs().total_cmp(&t[s][p].abs()))?;
        if t[piv][p].abs() < 1e-12 {
            return None;
        }
        t.swap(p, piv);
        for r in 0..m {
            if r != p {
                let f = t[r][p] / t[p][p];
                for k in p..=m {
                    t[r][k] -= f * t[p][k];
                }
            }
        }
    }
    Some((0..m).map(|r| t[r][m] / t[r][r]).collect())
}

/// `max_A mu(A) - nu(A^Gamma)` over all row subsets `A`, with
/// `A^Gamma = {j : (i, j) not in Gamma for some i in A}`.
pub fn binary_dual_exhaustive(mu: &[f64], nu: &[f64], gamma: &Array2<bool>) -> f64 {
    let m = mu.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << m) {
        let members: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let mass_a: f64 = members.iter().map(|&i| mu[i]).sum();
        let mass_b: f64 = (0..nu.len()).filter(|&j| members.iter().any(|&i| !gamma[(i, j)])).map(|j| nu[j]).sum();
        best = best.max(mass_a - mass_b);
    }
    best
}

/// `max sum_k,y pi_ky f_y` over plans moving reference mass `mu_k` to
/// candidates `y` with total discrepancy `sum pi_ky delta[(y, k)] <= rho`.
pub fn dro_primal_vertices(f: &[f64], delta: &Array2<f64>, mu: &[f64], rho: f64) -> f64 {
    let k = f.len();
    let nvar = k * k + 1;
    let mut a = vec![vec![0.0; nvar]; k + 1];
    let mut c = vec![0.0; nvar];
    for src in 0..k {
        for y in 0..k {
            let v = src * k + y;
            a[src][v] = 1.0;
            a[k][v] = delta[(y, src)];
            c[v] = f[y];
        }
    }
    a[k][k * k] = 1.0;
    let mut b = mu.to_vec();
    b.push(rho);
    lp_max_vertices(&a, &b, &c).expect("staying put is feasible")
}
