//! Degrees of belief for basic action theories with noisy sensors and
//! effectors.
//!
//! A [`Theory`](model::Theory) declares real-valued fluents with an
//! initial density, and actions with preconditions, successor-state
//! effects, effector noise, and sensing likelihoods. Given an agent-visible
//! [`History`](history::History) and a query formula, the
//! [`belief`] engine computes the normalized weight of the situations where
//! the query holds, by regressing everything to the initial situation and
//! integrating over initial fluent values and unobserved effector outcomes.
//! The [`oracle`] module holds independent filters used to cross-check it.

// `!(x > 0.0)` is used on purpose so that NaN takes the failing branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod dsl;
pub mod history;
pub mod model;
pub mod oracle;
pub mod regression;

pub use belief::{
    bel, bel_grid, posterior_density, posterior_density_grid, weight, BeliefError, BeliefProblem, BeliefResult,
    DensityGrid, QuadratureConfig,
};
pub use dsl::{check_theory, format_theory, parse_formula, parse_query, parse_theory, Diagnostic};
pub use history::{ActionEvent, History};
pub use model::{density_pdf, eval_expr, eval_formula, Density, Expr, Formula, Theory, Valuation};
pub use regression::{progress_valuation, regress_history, regress_step, GroundAction};
