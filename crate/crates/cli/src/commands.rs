use ndarray::{Array2, ArrayView2};
use otecon::bounds::{
    binary_cost_ot, dro_expectation_bound, kaji_subgroup_bounds, rearrangement_bounds, winners_lower_bound,
    winners_upper_bound, BinaryRelation, MAX_WITNESS_ROWS,
};
use otecon::closed_form::{gaussian_ot_map, gaussian_w2, sliced_wasserstein, wasserstein_1d};
use otecon::discrete::{solve_discrete_ot_with, SimplexOptions};
use otecon::entropic::{self, eot_dual, eot_value, sinkhorn, unbalanced_sinkhorn, uot_dual, uot_objective};
use otecon::matching::{cs_equilibrium, cs_identify, moment_matching, sista, SistaOptions};
use otecon::semidiscrete::{default_grid_res, semidiscrete_solve, vector_rank};
use otecon::{CostMatrix, DiscreteMeasure, Modularity};
use serde_json::{json, Value};

use crate::{input, CliError, Command, OtArgs, Report};

fn rows(m: ArrayView2<'_, f64>) -> Value {
    json!(m.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

fn done(result: Value, diagnostics: Value) -> Result<Report, CliError> {
    Ok(Report { result, diagnostics, converged: true })
}

fn problem(a: &OtArgs) -> Result<(DiscreteMeasure, DiscreteMeasure, CostMatrix), CliError> {
    let mu = input::measure(&a.mu)?;
    let nu = input::measure(&a.nu)?;
    let cost = match (&a.cost, mu.points(), nu.points()) {
        (Some(path), _, _) => CostMatrix::new(input::matrix(path)?)?,
        (None, Some(x), Some(y)) => CostMatrix::squared_euclidean(x, y)?,
        _ => return Err(CliError::Input("--cost is required unless both measures list support points".into())),
    };
    if cost.nrows() != mu.len() || cost.ncols() != nu.len() {
        return Err(CliError::Input(format!(
            "cost is {}x{}, measures have {} and {} atoms",
            cost.nrows(),
            cost.ncols(),
            mu.len(),
            nu.len()
        )));
    }
    Ok((mu, nu, cost))
}

pub fn dispatch(cmd: &Command, max_iter: Option<usize>) -> Result<Report, CliError> {
    let cap = |default: usize| max_iter.unwrap_or(default);
    match cmd {
        Command::Ot(a) => {
            let (mu, nu, cost) = problem(a)?;
            let sol = solve_discrete_ot_with(&mu, &nu, &cost, &SimplexOptions { max_iter })?;
            let dual = sol.potentials.value(&mu, &nu);
            done(
                json!({
                    "value": sol.value,
                    "dual_value": dual,
                    "plan": rows(sol.plan.mass()),
                    "phi": sol.potentials.phi,
                    "psi": sol.potentials.psi,
                }),
                json!({ "iterations": sol.iterations, "duality_gap": (sol.value - dual).abs() }),
            )
        }
        Command::Sinkhorn(a) => {
            let (mu, nu, cost) = problem(&a.problem)?;
            let sol = sinkhorn(&mu, &nu, &cost, a.eps, a.tol, cap(entropic::DEFAULT_MAX_ITER))?;
            let (transport, primal) = eot_value(&sol, &cost);
            Ok(Report {
                result: json!({
                    "transport_cost": transport,
                    "primal": primal,
                    "dual": eot_dual(&sol, &mu, &nu, &cost),
                    "plan": rows(sol.plan.view()),
                    "phi": sol.phi,
                    "psi": sol.psi,
                }),
                diagnostics: json!({ "iterations": sol.iterations, "marginal_error": sol.marginal_error }),
                converged: sol.converged,
            })
        }
        Command::Uot(a) => {
            let (mu, nu, cost) = problem(&a.entropic.problem)?;
            let e = &a.entropic;
            let sol =
                unbalanced_sinkhorn(&mu, &nu, &cost, e.eps, a.lam_mu, a.lam_nu, e.tol, cap(entropic::DEFAULT_MAX_ITER))?;
            Ok(Report {
                result: json!({
                    "objective": uot_objective(&sol.plan, &mu, &nu, &cost, e.eps, a.lam_mu, a.lam_nu),
                    "dual": uot_dual(&sol, &mu, &nu, &cost, a.lam_mu, a.lam_nu),
                    "mass": sol.plan.sum(),
                    "plan": rows(sol.plan.view()),
                    "phi": sol.phi,
                    "psi": sol.psi,
                }),
                diagnostics: json!({ "iterations": sol.iterations, "marginal_error": sol.marginal_error }),
                converged: sol.converged,
            })
        }
        Command::W1d(a) => {
            let value = wasserstein_1d(&input::sample(&a.x)?, &input::sample(&a.y)?, a.p)?;
            done(json!({ "value": value }), json!({}))
        }
        Command::GaussianW2(a) => {
            let (g1, g2) = (input::gaussian(&a.g1)?, input::gaussian(&a.g2)?);
            let value = gaussian_w2(&g1, &g2)?;
            let map = gaussian_ot_map(&g1, &g2)?;
            let linear: Vec<Vec<f64>> = map.linear.row_iter().map(|r| r.iter().copied().collect()).collect();
            done(
                json!({
                    "value": value,
                    "map": { "shift": map.shift.as_slice(), "linear": linear },
                }),
                json!({}),
            )
        }
        Command::Sliced(a) => {
            let (x, y) = (input::matrix(&a.x)?, input::matrix(&a.y)?);
            let value = sliced_wasserstein(x.view(), y.view(), a.p, a.n_dir, a.seed)?;
            done(json!({ "value": value }), json!({ "n_dir": a.n_dir, "seed": a.seed }))
        }
        Command::Semidiscrete(a) => {
            let nu = input::measure(&a.nu)?;
            let d = nu.points().map_or(0, |p| p.ncols());
            if d == 0 {
                return Err(CliError::Input("--nu needs site coordinates after the weight column".into()));
            }
            let res = a.grid_res.unwrap_or_else(|| default_grid_res(d));
            let diag = semidiscrete_solve(&nu, d, res, a.tol, cap(10_000))?;
            let masses = diag.cell_masses.clone().unwrap_or_default();
            let err = masses.iter().zip(diag.target_masses()).map(|(m, q)| (m - q).abs()).fold(0.0, f64::max);
            Ok(Report {
                result: json!({
                    "weights": diag.weights(),
                    "cell_masses": masses,
                    "sites": rows(diag.sites()),
                }),
                diagnostics: json!({ "iterations": diag.iterations, "grid_res": res, "mass_error": err }),
                converged: diag.converged,
            })
        }
        Command::Ranks(a) => {
            let sample = input::matrix(&a.sample)?;
            let ranks = vector_rank(sample.view())?;
            let assigned = Array2::from_shape_fn(sample.dim(), |(i, k)| ranks.rank(i)[k]);
            done(json!({ "permutation": ranks.permutation, "ranks": rows(assigned.view()) }), json!({}))
        }
        Command::BoundsTe(a) => {
            use crate::Functional::*;
            let (y0, y1) = (input::sample(&a.y0)?, input::sample(&a.y1)?);
            let iv = match a.h {
                Effect => rearrangement_bounds(|u, v| v - u, &y0, &y1, Modularity::Supermodular)?,
                Product => rearrangement_bounds(|u, v| u * v, &y0, &y1, Modularity::Supermodular)?,
                SquaredDiff => rearrangement_bounds(|u, v| (v - u).powi(2), &y0, &y1, Modularity::Submodular)?,
                AbsDiff => rearrangement_bounds(|u, v| (v - u).abs(), &y0, &y1, Modularity::Submodular)?,
            };
            done(json!({ "lower": iv.lower, "upper": iv.upper }), json!({}))
        }
        Command::BoundsSubgroup(a) => {
            let iv = kaji_subgroup_bounds(a.a, a.b, &input::sample(&a.y0)?, &input::sample(&a.y1)?)?;
            done(json!({ "lower": iv.lower, "upper": iv.upper }), json!({}))
        }
        Command::BoundsWinners(a) => {
            let (y0, y1) = (input::sample(&a.y0)?, input::sample(&a.y1)?);
            let lower = winners_lower_bound(a.a, a.b, &y0, &y1)?;
            let upper = winners_upper_bound(a.a, a.b, &y0, &y1)?;
            done(json!({ "lower": lower, "upper": upper }), json!({}))
        }
        Command::BinaryOt(a) => {
            let (mu, nu) = (input::measure(&a.mu)?, input::measure(&a.nu)?);
            let rel = BinaryRelation::from_indicator(&input::matrix(&a.gamma)?)?;
            let witness = mu.len() <= MAX_WITNESS_ROWS;
            let res = binary_cost_ot(&mu, &nu, &rel, witness)?;
            done(
                json!({ "value": res.value, "witness": res.witness, "dual_value": res.dual_value }),
                json!({ "witness_searched": witness }),
            )
        }
        Command::Dro(a) => {
            let f = input::values(&a.f)?;
            let delta = CostMatrix::new(input::matrix(&a.delta)?)?;
            let mu = input::measure(&a.mu)?;
            let b = dro_expectation_bound(&f, &delta, &mu, a.rho)?;
            done(json!({ "value": b.value, "lambda": b.lambda }), json!({}))
        }
        Command::MatchIdentify(a) => {
            let phi = cs_identify(&input::table(&a.table)?)?;
            done(json!({ "Phi": rows(phi.view()) }), json!({}))
        }
        Command::MatchEquilibrium(a) => {
            let phi = CostMatrix::new(input::matrix(&a.phi)?)?;
            let (mu, nu) = (input::measure(&a.mu)?, input::measure(&a.nu)?);
            let eq = cs_equilibrium(&phi, &mu, &nu, a.tol, cap(100_000))?;
            Ok(Report {
                result: json!({
                    "flows": rows(eq.table.flows()),
                    "singles_x": eq.table.singles_x(),
                    "singles_y": eq.table.singles_y(),
                    "a": eq.a,
                    "b": eq.b,
                }),
                diagnostics: json!({ "iterations": eq.iterations, "residual": eq.residual }),
                converged: eq.converged,
            })
        }
        Command::MatchFit(a) => {
            let table = input::table(&a.table)?;
            let (nx, ny) = table.dim();
            let basis = input::basis(&a.basis, nx, ny)?;
            let fit = moment_matching(&table, &basis, a.tol, cap(10_000))?;
            done(
                json!({ "lambda": fit.lambda, "a": fit.a, "b": fit.b }),
                json!({ "iterations": fit.iterations, "moment_residual": fit.moment_residual }),
            )
        }
        Command::MatchSista(a) => {
            let plan = input::matrix(&a.plan)?;
            let (nx, ny) = plan.dim();
            let basis = input::basis(&a.basis, nx, ny)?;
            let mu = DiscreteMeasure::new(plan.rows().into_iter().map(|r| r.sum()).collect())?;
            let nu = DiscreteMeasure::new(plan.columns().into_iter().map(|c| c.sum()).collect())?;
            let opts = SistaOptions { l1: a.l1, step: a.step, tol: a.tol, max_iter: cap(100_000), beta0: None };
            let r = sista(&plan, &mu, &nu, &basis, a.eps, &opts)?;
            Ok(Report {
                result: json!({ "beta": r.beta, "phi": r.phi, "psi": r.psi }),
                diagnostics: json!({
                    "iterations": r.iterations,
                    "marginal_error": r.marginal_error,
                    "objective": r.objective_history.last(),
                }),
                converged: r.converged,
            })
        }
    }
}
