//! Degrees of belief.
//!
//! The weight of a candidate initial situation and sequence of effector
//! outcomes is the initial density, times the effector-noise density of
//! each outcome, times the likelihood of each sensor reading, and zero as
//! soon as a precondition fails. The belief in `φ` after a history is the
//! integral of the weight over the situations where `φ` holds, divided by
//! the integral of the weight (`γ`).
//!
//! [`bel`] regresses everything to the initial situation and integrates
//! with nested adaptive Simpson. [`bel_grid`] runs a sequential grid
//! filter over the same semantics for problems with too many variables.

mod compile;
mod grid;
mod quad;

use std::fmt::Write as _;
use std::io;

use thiserror::Error;

use crate::history::{History, HistoryError};
use crate::model::{density_pdf, eval_formula, Density, EvalError, Expr, Formula, Theory, Valuation};
use crate::regression::{progress_valuation, regress_expr_history, GroundAction, RegressionError};
use compile::{affine, compile, parameters, Affine, AxisKind, Integrand};
use quad::{integrate, Field};

pub use grid::{bel_grid, posterior_density_grid, DEFAULT_CELLS};

/// Below this `γ` a history is treated as impossible.
pub const GAMMA_MIN: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute tolerance per integral.
    pub abs_tol: f64,
    /// Refinement stops once this many integrand evaluations were spent.
    pub max_evaluations: u64,
    /// Largest dimension handled by the tensor rule.
    pub max_dimension: usize,
    /// Panels per axis before adaptive refinement.
    pub initial_panels: usize,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-8,
            max_evaluations: 1 << 20,
            max_dimension: 4,
            initial_panels: 8,
            max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("history has zero weight (impossible history, gamma = {gamma:e})")]
    ImpossibleHistory { gamma: f64 },
    #[error("problem has {dimension} integration variables; the tensor rule handles at most {max}")]
    Capacity { dimension: usize, max: usize },
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("`{0}` is not a fluent of the theory")]
    UnknownFluent(String),
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("expected {expected} effector outcome(s), got {got}")]
    Latents { expected: usize, got: usize },
    #[error("no density for `{fluent}`: {reason}")]
    NoDensity { fluent: String, reason: String },
    #[error("density grid points must be finite and ascending")]
    BadGrid,
}

/// One unobserved effector outcome, one per noisy physical action.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVar {
    /// Integration symbol, `latent#k` for the k-th event (1-based).
    pub symbol: String,
    pub event: usize,
    pub action: String,
    pub intended: Vec<f64>,
    /// Noise density with the intended arguments substituted.
    pub density: Density,
}

/// A belief query: theory, agent-visible history, and a formula over the
/// fluents of the final situation.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefProblem {
    pub theory: Theory,
    pub history: History,
    pub query: Formula,
    /// Multiplies every weight (a scaled initial density).
    pub prior_scale: f64,
}

impl BeliefProblem {
    pub fn new(theory: Theory, history: History, query: Formula) -> Result<Self, BeliefError> {
        history.validate(&theory)?;
        if let Some(n) = query.names().into_iter().find(|n| theory.fluent(n).is_none()) {
            return Err(BeliefError::UnknownFluent(n));
        }
        Ok(BeliefProblem {
            theory,
            history,
            query,
            prior_scale: 1.0,
        })
    }

    pub fn with_query(&self, query: Formula) -> Result<Self, BeliefError> {
        let mut p = BeliefProblem::new(self.theory.clone(), self.history.clone(), query)?;
        p.prior_scale = self.prior_scale;
        Ok(p)
    }

    pub fn with_prior_scale(mut self, c: f64) -> Self {
        self.prior_scale = c;
        self
    }

    /// `(fluent, initial density)` in declaration order.
    pub fn init_vars(&self) -> impl Iterator<Item = (String, Density)> + '_ {
        self.theory.fluents.iter().map(|f| (f.name.clone(), f.init.clone()))
    }

    pub fn latent_vars(&self) -> Vec<LatentVar> {
        self.history
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                let decl = self.theory.action(&e.action)?;
                let noise = decl.noise.as_ref().filter(|_| decl.has_latent())?;
                Some(LatentVar {
                    symbol: format!("{}#{}", noise.latent, i + 1),
                    event: i,
                    action: e.action.clone(),
                    intended: e.args.clone(),
                    density: noise.density.substitute(&parameters(decl, &e.args)),
                })
            })
            .collect()
    }

    pub fn dimension(&self) -> usize {
        self.theory.fluents.len() + self.latent_vars().len()
    }

    /// The history with symbolic outcomes for its latent variables.
    pub fn ground_actions(&self) -> Vec<GroundAction> {
        let latents = self.latent_vars();
        self.history
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let y = latents
                    .iter()
                    .find(|l| l.event == i)
                    .map(|l| Expr::Var(l.symbol.clone()));
                GroundAction::from_event(e, y)
            })
            .collect()
    }

    /// The unnormalized weight by forward simulation. `latents` are the
    /// outcomes of the noisy actions, in history order.
    pub fn weight(&self, v0: &Valuation, latents: &[f64]) -> Result<f64, BeliefError> {
        Ok(self.prior_scale * weight(v0, latents, &self.history, &self.theory)?)
    }
}

/// The weight of initial valuation `v0` and effector outcomes `latents`
/// after `hist`, computed forward through the effects.
pub fn weight(v0: &Valuation, latents: &[f64], hist: &History, t: &Theory) -> Result<f64, BeliefError> {
    hist.validate(t)?;
    let expected = hist
        .iter()
        .filter(|e| t.action(&e.action).is_some_and(|d| d.has_latent()))
        .count();
    if expected != latents.len() {
        return Err(BeliefError::Latents {
            expected,
            got: latents.len(),
        });
    }
    let empty = Valuation::new();
    let mut w = 1.0;
    let mut state = Valuation::new();
    for f in &t.fluents {
        let v = v0.get(&f.name).ok_or_else(|| EvalError::Unbound(f.name.clone()))?;
        w *= density_pdf(&f.init, v, &empty)?;
        state.set(f.name.clone(), v);
    }
    let mut outcomes = latents.iter();
    for e in hist.iter() {
        let decl = t.action(&e.action).expect("validated history");
        let params = parameters(decl, &e.args);
        if !eval_formula(&decl.poss.substitute(&params), &state)? {
            return Ok(0.0);
        }
        let mut ga = GroundAction::from_event(e, None);
        if let (Some(s), Some(z)) = (&decl.sensing, e.reading) {
            w *= density_pdf(&s.likelihood.substitute(&params), z, &state)?;
        } else if decl.has_latent() {
            let y = *outcomes.next().expect("counted above");
            let noise = decl.noise.as_ref().expect("has latent");
            w *= density_pdf(&noise.density.substitute(&params), y, &empty)?;
            ga = ga.with_outcome(y);
        }
        state = progress_valuation(&state, &ga, t)?;
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefResult {
    pub belief: f64,
    pub gamma: f64,
    pub estimated_abs_error: f64,
    pub dimension: usize,
    pub evaluations: u64,
    pub warnings: Vec<String>,
}

impl Field for Integrand {
    fn dim(&self) -> usize {
        self.vars.len()
    }
    fn axis(&self, k: usize) -> &AxisKind {
        &self.vars[k].axis
    }
    fn eval(&mut self, x: &[f64]) -> [f64; 2] {
        Integrand::eval(self, x)
    }
    fn kinks(&self) -> &[Affine] {
        &self.kinks
    }
}

/// Tolerance of the first quadrature pass; later passes tighten it
/// tenfold down to the configured tolerance while the budget lasts.
const COARSEST_TOL: f64 = 1e-4;

fn scaled(cfg: &QuadratureConfig, scale: f64) -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: cfg.abs_tol * scale,
        ..cfg.clone()
    }
}

/// Belief by regression and quadrature.
pub fn bel(problem: &BeliefProblem, cfg: &QuadratureConfig) -> Result<BeliefResult, BeliefError> {
    let dimension = problem.dimension();
    if dimension > cfg.max_dimension {
        return Err(BeliefError::Capacity {
            dimension,
            max: cfg.max_dimension,
        });
    }
    let mut f = compile(problem)?;
    let cfg = scaled(cfg, problem.prior_scale);
    let out = integrate(&mut f, &cfg, COARSEST_TOL * problem.prior_scale);
    let (est, evaluations) = (out.est, out.evaluations);
    let gamma = est.v[0];
    if !(gamma >= GAMMA_MIN) {
        return Err(BeliefError::ImpossibleHistory { gamma });
    }
    let belief = (est.v[1] / gamma).clamp(0.0, 1.0);
    Ok(BeliefResult {
        belief,
        gamma,
        estimated_abs_error: est.e * (1.0 + belief) / gamma,
        dimension,
        evaluations,
        warnings: f.warnings,
    })
}

/// Tabulated posterior density of one fluent.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub fluent: String,
    pub points: Vec<f64>,
    pub densities: Vec<f64>,
}

impl DensityGrid {
    /// Trapezoid rule over the grid.
    pub fn integral(&self) -> f64 {
        self.points
            .windows(2)
            .zip(self.densities.windows(2))
            .map(|(p, d)| 0.5 * (p[1] - p[0]) * (d[0] + d[1]))
            .sum()
    }

    /// `point,density` rows, 17 significant digits, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,density\n");
        for (p, d) in self.points.iter().zip(&self.densities) {
            writeln!(out, "{p:.16e},{d:.16e}").expect("writing to a string");
        }
        out
    }

    pub fn write_csv(&self, w: &mut impl io::Write) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub(crate) fn check_grid(points: &[f64]) -> Result<(), BeliefError> {
    if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[0] > w[1]) {
        return Err(BeliefError::BadGrid);
    }
    Ok(())
}

/// The integrand with one continuous variable solved from the final
/// value of a fluent: `x_p = (point - c0 - Σ c_j x_j) / c_p`, times the
/// Jacobian `1 / |c_p|`.
struct Pinned<'a> {
    base: &'a Integrand,
    p: usize,
    /// `x_p` minus `point / c_p`, as a function of the other coordinates.
    solve: Affine,
    offset: f64,
    cp: f64,
    axes: Vec<AxisKind>,
    kinks: Vec<Affine>,
    full: Vec<f64>,
}

impl<'a> Pinned<'a> {
    fn new(base: &'a Integrand, p: usize, target: &Affine) -> Self {
        let cp = target.coefs[p];
        let solve = Affine {
            constant: -target.constant / cp,
            coefs: target
                .coefs
                .iter()
                .enumerate()
                .map(|(j, c)| if j == p { 0.0 } else { -c / cp })
                .collect(),
        };
        let axes = base
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != p)
            .map(|(_, v)| v.axis.clone())
            .collect();
        let full = vec![0.0; base.vars.len()];
        Pinned {
            base,
            p,
            solve,
            offset: 0.0,
            cp,
            axes,
            kinks: Vec::new(),
            full,
        }
    }

    fn set_point(&mut self, point: f64) {
        self.offset = point / self.cp;
        let (p, shift) = (self.p, self.solve.constant + self.offset);
        self.kinks = self
            .base
            .kinks
            .iter()
            .map(|a| {
                let ap = a.coefs[p];
                Affine {
                    constant: a.constant + ap * shift,
                    coefs: (0..a.coefs.len())
                        .filter(|j| *j != p)
                        .map(|j| a.coefs[j] + ap * self.solve.coefs[j])
                        .collect(),
                }
            })
            .filter(|a| a.coefs.iter().any(|c| *c != 0.0))
            .collect();
    }
}

impl Field for Pinned<'_> {
    fn dim(&self) -> usize {
        self.axes.len()
    }
    fn axis(&self, k: usize) -> &AxisKind {
        &self.axes[k]
    }
    fn eval(&mut self, x: &[f64]) -> [f64; 2] {
        let p = self.p;
        self.full[..p].copy_from_slice(&x[..p]);
        self.full[p + 1..].copy_from_slice(&x[p..]);
        self.full[p] = 0.0;
        self.full[p] = self.solve.eval(&self.full) + self.offset;
        let [w, q] = self.base.eval(&self.full);
        let j = 1.0 / self.cp.abs();
        [w * j, q * j]
    }
    fn kinks(&self) -> &[Affine] {
        &self.kinks
    }
}

/// Posterior density of `fluent` after `hist` at each of `points`
/// (ascending), by quadrature over every variable but one.
///
/// The fluent's final value must be affine in some continuous variable;
/// that variable is solved for and the rest are integrated out.
pub fn posterior_density(
    t: &Theory,
    hist: &History,
    fluent: &str,
    points: &[f64],
    cfg: &QuadratureConfig,
) -> Result<DensityGrid, BeliefError> {
    check_grid(points)?;
    if t.fluent(fluent).is_none() {
        return Err(BeliefError::UnknownFluent(fluent.to_string()));
    }
    let problem = BeliefProblem::new(t.clone(), hist.clone(), Formula::True)?;
    let gamma = bel(&problem, cfg)?.gamma;
    let base = compile(&problem)?;
    let final_value = regress_expr_history(&Expr::var(fluent), &problem.ground_actions(), t)?;
    let lw = compile::Lowering {
        index: base.vars.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect(),
        continuous: base.vars.iter().map(|v| v.is_continuous()).collect(),
        warnings: Vec::new(),
    };
    let no_density = |reason: &str| BeliefError::NoDensity {
        fluent: fluent.to_string(),
        reason: reason.to_string(),
    };
    let target = affine(&lw.expr(&final_value)?, base.vars.len())
        .ok_or_else(|| no_density("its final value is not affine in the integration variables"))?;
    let p = (0..base.vars.len())
        .find(|i| target.coefs[*i] != 0.0 && base.vars[*i].is_continuous())
        .ok_or_else(|| no_density("its final value does not depend on a continuous variable"))?;
    let mut pinned = Pinned::new(&base, p, &target);
    let mut densities = Vec::with_capacity(points.len());
    for &x in points {
        pinned.set_point(x);
        let est = integrate(&mut pinned, cfg, COARSEST_TOL).est;
        densities.push((est.v[0] / gamma).max(0.0));
    }
    Ok(DensityGrid {
        fluent: fluent.to_string(),
        points: points.to_vec(),
        densities,
    })
}
