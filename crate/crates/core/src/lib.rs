//! # otecon
//!
//! Optimal transport for econometrics: exact and entropic discrete solvers,
//! closed forms on the line and between Gaussians, semi-discrete transport
//! and multivariate ranks, sharp bounds for treatment effects, and inverse
//! optimal transport estimators for matching markets.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`measures`], [`halton`], [`linalg`] | measures, samples, Halton sets, matrix roots |
//! | [`discrete`] | network simplex with dual certificates |
//! | [`entropic`] | log-domain Sinkhorn, unbalanced Sinkhorn |
//! | [`closed_form`] | 1D formulas, Gaussian maps, sliced distance, 1D barycenters |
//! | [`semidiscrete`] | Laguerre cells, vector quantiles, vector ranks |
//! | [`bounds`] | rearrangement, subgroup, winners, binary-cost and DRO bounds |
//! | [`matching`] | Choo-Siow equilibrium, moment matching, Poisson likelihood, SISTA |
//!
//! Every solver returns the quantities needed to check its own answer:
//! potentials alongside plans, marginal residuals alongside iterates.

pub mod bounds;
pub mod closed_form;
pub mod discrete;
pub mod entropic;
pub mod error;
pub mod halton;
pub mod linalg;
pub mod matching;
pub mod measures;
pub mod semidiscrete;

mod util;

pub use bounds::{Interval, Modularity};
pub use discrete::{DualPotentials, TransportPlan};
pub use entropic::EntropicSolution;
pub use error::{Error, Result};
pub use halton::{halton, HaltonSet};
pub use linalg::{spd_sqrt, GaussianMeasure};
pub use matching::{MatchingTable, SurplusBasis};
pub use measures::{CostMatrix, DiscreteMeasure, Sample1D};
pub use semidiscrete::{LaguerreDiagram, RankAssignment};

/// Library version, echoed in CLI output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
