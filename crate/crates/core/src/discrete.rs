//! Exact discrete optimal transport by the network simplex method.
//!
//! The solver starts from the north-west corner plan, recovers complementary
//! potentials by propagating `phi_i + psi_j = C_ij` along the spanning tree of
//! basic cells, and pivots on violated dual constraints until the potentials
//! are feasible. At that point plan and potentials certify each other.
//!
//! Pivoting follows a Bland-type rule: the entering cell is the
//! lexicographically smallest violated cell and the leaving cell is the
//! smallest-mass cell on the cycle, ties broken lexicographically. Zero-mass
//! basic cells are kept so the basis is always a spanning tree.

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView2};

use crate::error::{domain, Error, Result};
use crate::measures::{CostMatrix, DiscreteMeasure, MASS_TOL};

/// Tolerance for dual feasibility and complementary slackness checks.
pub const CERT_TOL: f64 = 1e-9;

/// A coupling together with a spanning-tree basis of the bipartite graph
/// on `M + N` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    mass: Array2<f64>,
    basis: Vec<(usize, usize)>,
}

impl TransportPlan {
    /// Validates that `basis` is a spanning tree with `M + N - 1` cells and
    /// that it covers the support of `mass`.
    pub fn new(mass: Array2<f64>, mut basis: Vec<(usize, usize)>) -> Result<Self> {
        let (m, n) = mass.dim();
        if m == 0 || n == 0 {
            return Err(domain("plan must be nonempty"));
        }
        if mass.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(domain("plan entries must be finite and nonnegative"));
        }
        if basis.len() != m + n - 1 {
            return Err(domain(format!("basis has {} cells, expected {}", basis.len(), m + n - 1)));
        }
        let mut uf = UnionFind::new(m + n);
        for &(i, j) in &basis {
            if i >= m || j >= n {
                return Err(domain(format!("basis cell ({i}, {j}) out of range")));
            }
            if !uf.union(i, m + j) {
                return Err(domain("basis contains a cycle or a repeated cell"));
            }
        }
        basis.sort_unstable();
        for ((i, j), &v) in mass.indexed_iter() {
            if v > 0.0 && basis.binary_search(&(i, j)).is_err() {
                return Err(domain(format!("positive mass at non-basic cell ({i}, {j})")));
            }
        }
        Ok(Self { mass, basis })
    }

    pub fn mass(&self) -> ArrayView2<'_, f64> {
        self.mass.view()
    }

    /// Basic cells in lexicographic order.
    pub fn basis(&self) -> &[(usize, usize)] {
        &self.basis
    }

    pub fn nrows(&self) -> usize {
        self.mass.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.mass.ncols()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.rows().into_iter().map(|r| r.sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.mass.columns().into_iter().map(|c| c.sum()).collect()
    }

    /// Number of cells carrying positive mass.
    pub fn support_size(&self) -> usize {
        self.mass.iter().filter(|&&v| v > 0.0).count()
    }

    /// Total cost `sum_ij pi_ij C_ij`.
    pub fn cost(&self, cost: &CostMatrix) -> f64 {
        self.mass.indexed_iter().map(|(ij, &p)| p * cost[ij]).sum()
    }

    pub fn into_mass(self) -> Array2<f64> {
        self.mass
    }
}

/// Kantorovich potentials `(phi, psi)` for origins and destinations.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl DualPotentials {
    /// Dual objective `sum mu phi + sum nu psi`.
    pub fn value(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let a: f64 = mu.weights().iter().zip(&self.phi).map(|(w, p)| w * p).sum();
        let b: f64 = nu.weights().iter().zip(&self.psi).map(|(w, p)| w * p).sum();
        a + b
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexOptions {
    /// Pivot cap; `None` uses `1000 + 50 M N`.
    pub max_iter: Option<usize>,
}

/// Output of [`solve_discrete_ot`].
#[derive(Debug, Clone)]
pub struct OtSolution {
    pub plan: TransportPlan,
    pub potentials: DualPotentials,
    /// Primal value `sum pi C`.
    pub value: f64,
    /// Number of pivots performed.
    pub iterations: usize,
}

fn check_marginals(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    let (left, right) = (mu.total_mass(), nu.total_mass());
    if (left - right).abs() > MASS_TOL {
        return Err(Error::Infeasible { left, right });
    }
    Ok(())
}

/// North-west corner rule. Produces exactly `M + N - 1` basic cells; when a
/// row and a column are exhausted together only the row index advances
/// (unless it is the last row), which leaves a zero-mass basic cell.
pub fn northwest_corner(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportPlan> {
    check_marginals(mu, nu)?;
    let (m, n) = (mu.len(), nu.len());
    let mut mass = Array2::zeros((m, n));
    let mut basis = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    let mut row_cap = mu.weights()[0];
    let mut col_cap = nu.weights()[0];
    loop {
        let x = row_cap.min(col_cap);
        mass[(i, j)] = x;
        basis.push((i, j));
        row_cap -= x;
        col_cap -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        let advance_row = if i == m - 1 {
            false
        } else if j == n - 1 {
            true
        } else {
            row_cap <= col_cap
        };
        if advance_row {
            i += 1;
            row_cap = mu.weights()[i];
        } else {
            j += 1;
            col_cap = nu.weights()[j];
        }
    }
    TransportPlan::new(mass, basis)
}

/// Solves `min_pi sum pi_ij C_ij` over couplings of `mu` and `nu`.
pub fn solve_discrete_ot(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostMatrix) -> Result<OtSolution> {
    solve_discrete_ot_with(mu, nu, cost, &SimplexOptions::default())
}

pub fn solve_discrete_ot_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    opts: &SimplexOptions,
) -> Result<OtSolution> {
    let (m, n) = (mu.len(), nu.len());
    if cost.nrows() != m || cost.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "cost is {}x{}, marginals have {} and {} atoms",
            cost.nrows(),
            cost.ncols(),
            m,
            n
        )));
    }
    let start = northwest_corner(mu, nu)?;
    let max_iter = opts.max_iter.unwrap_or(1000 + 50 * m * n);
    let mut tree = SpanningTree::new(start, cost);
    let tol = 1e-12 * cost.max_abs().max(1.0);

    let mut iterations = 0;
    loop {
        tree.propagate_potentials();
        let Some(entering) = tree.first_violation(tol) else { break };
        if iterations == max_iter {
            return Err(Error::SolverStall(iterations));
        }
        tree.pivot(entering);
        iterations += 1;
    }

    let SpanningTree { mass, phi, psi, .. } = tree;
    let basis = mass_basis(&tree.in_basis);
    let plan = TransportPlan { mass, basis };
    let value = plan.cost(cost);
    Ok(OtSolution { plan, potentials: DualPotentials { phi, psi }, value, iterations })
}

fn mass_basis(in_basis: &Array2<bool>) -> Vec<(usize, usize)> {
    in_basis.indexed_iter().filter(|(_, &b)| b).map(|(ij, _)| ij).collect()
}

/// Simplex state: plan, basic cells and the tree adjacency over nodes
/// `0..M` (origins) and `M..M+N` (destinations).
struct SpanningTree<'a> {
    cost: &'a CostMatrix,
    mass: Array2<f64>,
    in_basis: Array2<bool>,
    adj: Vec<Vec<usize>>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    parent: Vec<usize>,
    depth: Vec<usize>,
}

impl<'a> SpanningTree<'a> {
    fn new(plan: TransportPlan, cost: &'a CostMatrix) -> Self {
        let (m, n) = plan.mass.dim();
        let mut in_basis = Array2::from_elem((m, n), false);
        let mut adj = vec![Vec::new(); m + n];
        for &(i, j) in &plan.basis {
            in_basis[(i, j)] = true;
            adj[i].push(m + j);
            adj[m + j].push(i);
        }
        Self {
            cost,
            mass: plan.mass,
            in_basis,
            adj,
            phi: vec![0.0; m],
            psi: vec![0.0; n],
            parent: vec![usize::MAX; m + n],
            depth: vec![0; m + n],
        }
    }

    fn rows(&self) -> usize {
        self.phi.len()
    }

    /// Breadth-first traversal from origin 0 with `phi_0 = 0`, setting each
    /// newly reached potential from the binding constraint of its tree edge.
    fn propagate_potentials(&mut self) {
        let m = self.rows();
        self.parent.fill(usize::MAX);
        self.parent[0] = 0;
        self.depth[0] = 0;
        self.phi[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for k in 0..self.adj[u].len() {
                let v = self.adj[u][k];
                if self.parent[v] != usize::MAX {
                    continue;
                }
                self.parent[v] = u;
                self.depth[v] = self.depth[u] + 1;
                if u < m {
                    self.psi[v - m] = self.cost[(u, v - m)] - self.phi[u];
                } else {
                    self.phi[v] = self.cost[(v, u - m)] - self.psi[u - m];
                }
                queue.push_back(v);
            }
        }
    }

    fn first_violation(&self, tol: f64) -> Option<(usize, usize)> {
        let (m, n) = self.mass.dim();
        (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| !self.in_basis[(i, j)] && self.phi[i] + self.psi[j] - self.cost[(i, j)] > tol)
    }

    /// Tree path between two nodes, as a node sequence from `a` to `b`.
    fn tree_path(&self, a: usize, b: usize) -> Vec<usize> {
        let (mut x, mut y) = (a, b);
        let mut from_a = vec![x];
        let mut from_b = vec![y];
        while self.depth[x] > self.depth[y] {
            x = self.parent[x];
            from_a.push(x);
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y];
            from_b.push(y);
        }
        while x != y {
            x = self.parent[x];
            y = self.parent[y];
            from_a.push(x);
            from_b.push(y);
        }
        from_b.pop();
        from_a.extend(from_b.into_iter().rev());
        from_a
    }

    fn cell(&self, u: usize, v: usize) -> (usize, usize) {
        let m = self.rows();
        if u < m {
            (u, v - m)
        } else {
            (v, u - m)
        }
    }

    /// Adds `entering` to the basis, pushes the largest feasible amount of
    /// mass around the cycle it closes and drops the blocking cell.
    fn pivot(&mut self, entering: (usize, usize)) {
        let m = self.rows();
        let (i, j) = entering;
        // cycle: origin i -> destination j, then the tree path back to i.
        // Tree edges alternate -, +, -, ... starting next to j.
        let path = self.tree_path(m + j, i);
        let cells: Vec<(usize, usize)> = path.windows(2).map(|w| self.cell(w[0], w[1])).collect();

        let mut leaving = cells[0];
        for &c in cells.iter().step_by(2) {
            let (cm, lm) = (self.mass[c], self.mass[leaving]);
            if cm < lm || (cm == lm && c < leaving) {
                leaving = c;
            }
        }
        let theta = self.mass[leaving];
        if theta > 0.0 {
            for (k, &c) in cells.iter().enumerate() {
                if k % 2 == 0 {
                    self.mass[c] = (self.mass[c] - theta).max(0.0);
                } else {
                    self.mass[c] += theta;
                }
            }
            self.mass[entering] = theta;
        }
        self.mass[leaving] = 0.0;

        let (li, lj) = leaving;
        self.in_basis[leaving] = false;
        self.adj[li].retain(|&v| v != m + lj);
        self.adj[m + lj].retain(|&v| v != li);
        self.in_basis[entering] = true;
        self.adj[i].push(m + j);
        self.adj[m + j].push(i);
    }
}

/// True iff the potentials are dual feasible and complementary to the plan,
/// both within [`CERT_TOL`].
pub fn verify_optimality(plan: &TransportPlan, pot: &DualPotentials, cost: &CostMatrix) -> Result<bool> {
    let (m, n) = plan.mass.dim();
    if cost.nrows() != m || cost.ncols() != n || pot.phi.len() != m || pot.psi.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "plan {}x{}, cost {}x{}, potentials {} and {}",
            m,
            n,
            cost.nrows(),
            cost.ncols(),
            pot.phi.len(),
            pot.psi.len()
        )));
    }
    for ((i, j), &p) in plan.mass.indexed_iter() {
        let slack = cost[(i, j)] - pot.phi[i] - pot.psi[j];
        if slack < -CERT_TOL || (p > 0.0 && slack > CERT_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Reads the permutation off a deterministic plan: `sigma[i] = j` iff
/// `pi_ij > 0`. Entries below `1e-12` count as zero.
pub fn extract_assignment(plan: &TransportPlan) -> Result<Vec<usize>> {
    let (m, n) = plan.mass.dim();
    if m != n {
        return Err(Error::NonAssignment(format!("plan is {m}x{n}, not square")));
    }
    let target = 1.0 / n as f64;
    let mut sigma = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (i, row) in plan.mass.rows().into_iter().enumerate() {
        let mut positive = row.indexed_iter().filter(|(_, &v)| v > 1e-12);
        let Some((j, &v)) = positive.next() else {
            return Err(Error::NonAssignment(format!("row {i} carries no mass")));
        };
        if positive.next().is_some() {
            return Err(Error::NonAssignment(format!("row {i} is split")));
        }
        if (v - target).abs() > CERT_TOL {
            return Err(Error::NonAssignment(format!("cell ({i}, {j}) has mass {v}, expected {target}")));
        }
        if std::mem::replace(&mut taken[j], true) {
            return Err(Error::NonAssignment(format!("column {j} receives two rows")));
        }
        sigma[i] = j;
    }
    Ok(sigma)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn prob(w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::probability(w.to_vec()).unwrap()
    }

    fn cost(c: Array2<f64>) -> CostMatrix {
        CostMatrix::new(c).unwrap()
    }

    #[test]
    fn northwest_corner_examples() {
        let p = northwest_corner(&prob(&[1.0]), &prob(&[1.0])).unwrap();
        assert_eq!(p.mass(), array![[1.0]]);
        assert!(p.basis().is_empty() == false && p.basis().len() == 1);

        let p = northwest_corner(&prob(&[0.7, 0.3]), &prob(&[0.4, 0.6])).unwrap();
        let expected = array![[0.4, 0.3], [0.0, 0.3]];
        for (a, b) in p.mass().iter().zip(expected.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert_eq!(p.basis(), &[(0, 0), (0, 1), (1, 1)]);

        let p = northwest_corner(&prob(&[0.5, 0.5]), &prob(&[0.25, 0.25, 0.5])).unwrap();
        assert_eq!(p.mass(), array![[0.25, 0.25, 0.0], [0.0, 0.0, 0.5]]);
        // the simultaneous exhaustion at (0, 1) advances the row: (1, 1) is a zero basic cell
        assert_eq!(p.basis(), &[(0, 0), (0, 1), (1, 1), (1, 2)]);
    }

    #[test]
    fn northwest_corner_rejects_mass_mismatch() {
        let mu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.5, 0.6]).unwrap();
        assert!(matches!(northwest_corner(&mu, &nu), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn solve_examples() {
        let half = prob(&[0.5, 0.5]);
        let s = solve_discrete_ot(&half, &half, &cost(array![[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_eq!(s.plan.mass(), array![[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!(s.value, 0.0);

        let c = cost(array![[1.0, 3.0], [2.0, 1.0]]);
        let s = solve_discrete_ot(&half, &half, &c).unwrap();
        assert_eq!(s.plan.mass(), array![[0.5, 0.0], [0.0, 0.5]]);
        assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.potentials.value(&half, &half), 1.0, epsilon = 1e-12);
        assert!(verify_optimality(&s.plan, &s.potentials, &c).unwrap());

        let x = array![[1.0], [2.0]];
        let c = CostMatrix::squared_euclidean(x.view(), x.view()).unwrap();
        let s = solve_discrete_ot(&half, &half, &c).unwrap();
        assert_eq!(s.plan.mass(), array![[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn solve_rejects_bad_inputs() {
        let half = prob(&[0.5, 0.5]);
        let c = cost(array![[0.0, 1.0, 2.0], [1.0, 0.0, 2.0]]);
        assert!(matches!(solve_discrete_ot(&half, &half, &c), Err(Error::ShapeMismatch(_))));
        let opts = SimplexOptions { max_iter: Some(0) };
        let c = cost(array![[1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(solve_discrete_ot_with(&half, &half, &c, &opts), Err(Error::SolverStall(0))));
    }

    #[test]
    fn verify_examples() {
        let c = cost(array![[0.0, 1.0], [1.0, 0.0]]);
        let zero = DualPotentials { phi: vec![0.0; 2], psi: vec![0.0; 2] };
        let diag = TransportPlan::new(array![[0.5, 0.0], [0.0, 0.5]], vec![(0, 0), (0, 1), (1, 1)]).unwrap();
        assert!(verify_optimality(&diag, &zero, &c).unwrap());
        let anti = TransportPlan::new(array![[0.0, 0.5], [0.5, 0.0]], vec![(0, 0), (0, 1), (1, 0)]).unwrap();
        assert!(!verify_optimality(&anti, &zero, &c).unwrap());
        let short = DualPotentials { phi: vec![0.0], psi: vec![0.0; 2] };
        assert!(matches!(verify_optimality(&diag, &short, &c), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn assignment_examples() {
        let diag = TransportPlan::new(array![[0.5, 0.0], [0.0, 0.5]], vec![(0, 0), (0, 1), (1, 1)]).unwrap();
        assert_eq!(extract_assignment(&diag).unwrap(), vec![0, 1]);
        let anti = TransportPlan::new(array![[0.0, 0.5], [0.5, 0.0]], vec![(0, 0), (0, 1), (1, 0)]).unwrap();
        assert_eq!(extract_assignment(&anti).unwrap(), vec![1, 0]);
        let split = TransportPlan::new(array![[0.5, 0.0], [0.25, 0.25]], vec![(0, 0), (1, 0), (1, 1)]).unwrap();
        assert!(matches!(extract_assignment(&split), Err(Error::NonAssignment(_))));
    }

    #[test]
    fn plan_rejects_invalid_basis() {
        let m = array![[0.5, 0.0], [0.0, 0.5]];
        assert!(TransportPlan::new(m.clone(), vec![(0, 0), (1, 1)]).is_err());
        assert!(TransportPlan::new(m.clone(), vec![(0, 0), (0, 0), (1, 1)]).is_err());
        assert!(TransportPlan::new(m, vec![(0, 0), (0, 1), (1, 0)]).is_err());
    }

    fn rational_measure(raw: &[u32]) -> DiscreteMeasure {
        let total: u32 = raw.iter().sum();
        DiscreteMeasure::new(raw.iter().map(|&k| k as f64 / total as f64).collect()).unwrap()
    }

    fn instance() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<f64>)> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(m, n)| {
            (
                prop::collection::vec(1u32..10, m),
                prop::collection::vec(1u32..10, n),
                prop::collection::vec(0.0f64..1.0, m * n),
            )
        })
    }

    proptest! {
        #[test]
        fn certified_and_tree_shaped((a, b, c) in instance()) {
            let (mu, nu) = (rational_measure(&a), rational_measure(&b));
            prop_assume!((mu.total_mass() - nu.total_mass()).abs() < 1e-12);
            let c = CostMatrix::new(Array2::from_shape_vec((a.len(), b.len()), c).unwrap()).unwrap();
            let s = solve_discrete_ot(&mu, &nu, &c).unwrap();
            prop_assert!(verify_optimality(&s.plan, &s.potentials, &c).unwrap());
            prop_assert!((s.value - s.potentials.value(&mu, &nu)).abs() < 1e-9);
            prop_assert!(s.plan.support_size() <= a.len() + b.len() - 1);
            prop_assert_eq!(s.plan.basis().len(), a.len() + b.len() - 1);
            prop_assert!(TransportPlan::new(s.plan.mass().to_owned(), s.plan.basis().to_vec()).is_ok());
            prop_assert!(crate::util::max_abs_diff(&s.plan.row_sums(), mu.weights()) < 1e-9);
            prop_assert!(crate::util::max_abs_diff(&s.plan.col_sums(), nu.weights()) < 1e-9);
            prop_assert_eq!(s.potentials.phi[0], 0.0);
        }

        #[test]
        fn plan_invariant_to_additive_cost_shifts(
            (a, b, c) in instance(),
            shift in prop::collection::vec(-5.0f64..5.0, 12),
        ) {
            let (mu, nu) = (rational_measure(&a), rational_measure(&b));
            let (m, n) = (a.len(), b.len());
            let base = Array2::from_shape_vec((m, n), c).unwrap();
            let shifted = Array2::from_shape_fn((m, n), |(i, j)| base[(i, j)] + shift[i] + shift[6 + j]);
            let s0 = solve_discrete_ot(&mu, &nu, &CostMatrix::new(base.clone()).unwrap()).unwrap();
            let c1 = CostMatrix::new(shifted).unwrap();
            let s1 = solve_discrete_ot(&mu, &nu, &c1).unwrap();
            // the optimal plan may not be unique; its cost under the original costs is
            let v0 = s0.value;
            let v1: f64 = s1.plan.mass().indexed_iter().map(|(ij, p)| p * base[ij]).sum();
            prop_assert!((v0 - v1).abs() < 1e-9);
            let offset: f64 = (0..m).map(|i| mu.weights()[i] * shift[i]).sum::<f64>()
                + (0..n).map(|j| nu.weights()[j] * shift[6 + j]).sum::<f64>();
            prop_assert!((s1.value - v0 - offset).abs() < 1e-9);
        }

        #[test]
        fn monotone_support_on_the_line(
            xs in prop::collection::vec(-10.0f64..10.0, 1..7),
            ys in prop::collection::vec(-10.0f64..10.0, 1..7),
            a in prop::collection::vec(1u32..10, 7),
            b in prop::collection::vec(1u32..10, 7),
        ) {
            let mu = rational_measure(&a[..xs.len()]);
            let nu = rational_measure(&b[..ys.len()]);
            // strictly submodular: squared distance
            let c = CostMatrix::from_fn(xs.len(), ys.len(), |(i, j)| (xs[i] - ys[j]).powi(2)).unwrap();
            let s = solve_discrete_ot(&mu, &nu, &c).unwrap();
            let support: Vec<(usize, usize)> =
                s.plan.mass().indexed_iter().filter(|(_, &p)| p > 1e-12).map(|(ij, _)| ij).collect();
            for &(i, j) in &support {
                for &(k, l) in &support {
                    prop_assert!((xs[i] - xs[k]) * (ys[j] - ys[l]) >= -1e-12);
                }
            }
        }
    }
}
