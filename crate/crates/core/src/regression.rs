//! Regression of formulas through successor-state axioms, and its dual,
//! progression of valuations.
//!
//! Regressing `φ` through action `a` replaces every fluent in `φ` by the
//! right-hand side of its successor-state axiom with the action's intended
//! arguments and actual outcome substituted. The result holds before `a`
//! exactly when `φ` holds after it. Sensing actions change no fluent, so
//! they regress to the identity. Preconditions are not part of regression;
//! the belief engine zeroes the weight of situations where they fail.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::history::ActionEvent;
use crate::model::{eval_expr, ActionDecl, Density, EvalError, Expr, Formula, Theory, Valuation};

/// An action with everything needed to apply it: intended arguments, the
/// actual effector outcome (a number, or a symbol left for integration),
/// and the reading of a sensing action.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundAction {
    pub action: String,
    pub args: Vec<f64>,
    pub latent: Option<Expr>,
    pub reading: Option<f64>,
}

impl GroundAction {
    pub fn new(action: impl Into<String>, args: Vec<f64>) -> Self {
        GroundAction {
            action: action.into(),
            args,
            latent: None,
            reading: None,
        }
    }

    pub fn with_outcome(mut self, y: f64) -> Self {
        self.latent = Some(Expr::Const(y));
        self
    }

    pub fn with_symbolic_outcome(mut self, symbol: impl Into<String>) -> Self {
        self.latent = Some(Expr::Var(symbol.into()));
        self
    }

    pub fn with_reading(mut self, z: f64) -> Self {
        self.reading = Some(z);
        self
    }

    pub fn from_event(e: &ActionEvent, latent: Option<Expr>) -> Self {
        GroundAction {
            action: e.action.clone(),
            args: e.args.clone(),
            latent,
            reading: e.reading,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressionError {
    #[error("undeclared action `{0}`")]
    UndeclaredAction(String),
    #[error("`{action}` takes {expected} argument(s), got {got}")]
    Arity {
        action: String,
        expected: usize,
        got: usize,
    },
    #[error("noisy action `{0}` needs an actual outcome")]
    MissingOutcome(String),
    #[error("`{0}` has no effector noise but was given an outcome")]
    UnexpectedOutcome(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn declaration<'t>(a: &GroundAction, t: &'t Theory) -> Result<&'t ActionDecl, RegressionError> {
    let decl = t
        .action(&a.action)
        .ok_or_else(|| RegressionError::UndeclaredAction(a.action.clone()))?;
    if decl.params.len() != a.args.len() {
        return Err(RegressionError::Arity {
            action: a.action.clone(),
            expected: decl.params.len(),
            got: a.args.len(),
        });
    }
    Ok(decl)
}

/// Parameter bindings plus the latent outcome, as expressions.
pub(crate) fn bindings(decl: &ActionDecl, a: &GroundAction) -> Result<BTreeMap<String, Expr>, RegressionError> {
    let mut map: BTreeMap<String, Expr> = decl
        .params
        .iter()
        .cloned()
        .zip(a.args.iter().map(|v| Expr::Const(*v)))
        .collect();
    match (&decl.noise, &a.latent) {
        (Some(n), Some(y)) => {
            map.insert(n.latent.clone(), y.clone());
        }
        (Some(n), None) => match &n.density {
            Density::Point(e) => {
                let y = e.substitute(&map);
                map.insert(n.latent.clone(), y);
            }
            _ => return Err(RegressionError::MissingOutcome(a.action.clone())),
        },
        (None, Some(_)) => return Err(RegressionError::UnexpectedOutcome(a.action.clone())),
        (None, None) => {}
    }
    Ok(map)
}

/// Fluent ↦ successor-state right-hand side under `a`.
fn effect_map(a: &GroundAction, t: &Theory) -> Result<BTreeMap<String, Expr>, RegressionError> {
    let decl = declaration(a, t)?;
    if decl.is_sensing() {
        return Ok(BTreeMap::new());
    }
    let binds = bindings(decl, a)?;
    Ok(decl
        .effects
        .iter()
        .map(|(f, rhs)| (f.clone(), rhs.substitute(&binds)))
        .collect())
}

pub fn regress_step(phi: &Formula, a: &GroundAction, t: &Theory) -> Result<Formula, RegressionError> {
    let map = effect_map(a, t)?;
    Ok(if map.is_empty() {
        phi.clone()
    } else {
        phi.substitute(&map)
    })
}

pub fn regress_expr_step(e: &Expr, a: &GroundAction, t: &Theory) -> Result<Expr, RegressionError> {
    let map = effect_map(a, t)?;
    Ok(if map.is_empty() { e.clone() } else { e.substitute(&map) })
}

/// Regresses from the situation after the whole history back to the
/// initial situation (last action first).
pub fn regress_history(phi: &Formula, hist: &[GroundAction], t: &Theory) -> Result<Formula, RegressionError> {
    hist.iter()
        .rev()
        .try_fold(phi.clone(), |acc, a| regress_step(&acc, a, t))
}

pub fn regress_expr_history(e: &Expr, hist: &[GroundAction], t: &Theory) -> Result<Expr, RegressionError> {
    hist.iter()
        .rev()
        .try_fold(e.clone(), |acc, a| regress_expr_step(&acc, a, t))
}

/// Applies `a`'s effects to `v`. Symbols other than fluents (for example
/// a symbolic outcome) must be bound in `v`; they are carried through.
pub fn progress_valuation(v: &Valuation, a: &GroundAction, t: &Theory) -> Result<Valuation, RegressionError> {
    let decl = declaration(a, t)?;
    if decl.is_sensing() {
        return Ok(v.clone());
    }
    let binds = bindings(decl, a)?;
    let mut scope = v.clone();
    for (name, e) in &binds {
        scope.set(name.clone(), eval_expr(e, v)?);
    }
    let mut next = v.clone();
    for (fluent, rhs) in &decl.effects {
        next.set(fluent.clone(), eval_expr(rhs, &scope)?);
    }
    Ok(next)
}

pub fn progress_history(v: &Valuation, hist: &[GroundAction], t: &Theory) -> Result<Valuation, RegressionError> {
    hist.iter().try_fold(v.clone(), |acc, a| progress_valuation(&acc, a, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_formula, parse_theory};
    use crate::model::{eval_formula, CmpOp};

    fn robot() -> Theory {
        parse_theory(include_str!("../theories/robot1d.bat")).unwrap()
    }

    fn fwd(y: f64) -> GroundAction {
        GroundAction::new("fwd", vec![2.0]).with_outcome(y)
    }

    #[test]
    fn regress_step_examples() {
        let t = robot();
        let phi = parse_formula("h <= 5").unwrap();
        assert_eq!(
            regress_step(&phi, &fwd(2.0), &t).unwrap(),
            parse_formula("h - 2 <= 5").unwrap()
        );
        assert_eq!(regress_step(&Formula::True, &fwd(2.0), &t).unwrap(), Formula::True);
        let sonar = GroundAction::new("sonar", vec![]).with_reading(4.2);
        assert_eq!(regress_step(&phi, &sonar, &t).unwrap(), phi);
        assert_eq!(
            regress_step(&phi, &GroundAction::new("jump", vec![]), &t),
            Err(RegressionError::UndeclaredAction("jump".into()))
        );
        assert_eq!(
            regress_step(&phi, &GroundAction::new("fwd", vec![2.0]), &t),
            Err(RegressionError::MissingOutcome("fwd".into()))
        );
    }

    #[test]
    fn regress_history_examples() {
        let t = robot();
        let phi = parse_formula("h <= 5").unwrap();
        let r = regress_history(&phi, &[fwd(1.0), fwd(2.0)], &t).unwrap();
        assert_eq!(r, parse_formula("h - 1 - 2 <= 5").unwrap());
        assert_eq!(regress_history(&phi, &[], &t).unwrap(), phi);

        let symbolic = GroundAction::new("fwd", vec![2.0]).with_symbolic_outcome("y#1");
        let r = regress_history(&phi, &[symbolic], &t).unwrap();
        assert!(r.names().contains("y#1"));
        assert_eq!(
            r,
            Formula::cmp(Expr::sub(Expr::var("h"), Expr::var("y#1")), CmpOp::Le, Expr::Const(5.0))
        );
    }

    #[test]
    fn progress_examples() {
        let t = robot();
        let v = Valuation::new().with("h", 9.0);
        assert_eq!(progress_valuation(&v, &fwd(2.0), &t).unwrap().get("h"), Some(7.0));
        let sonar = GroundAction::new("sonar", vec![]).with_reading(1.0);
        assert_eq!(progress_valuation(&v, &sonar, &t).unwrap(), v);
        assert_eq!(
            progress_history(&v, &[fwd(1.0), fwd(2.0)], &t).unwrap().get("h"),
            Some(6.0)
        );
    }

    #[test]
    fn point_mass_effector_needs_no_outcome() {
        let src = include_str!("../theories/robot1d.bat").replace("gaussian(mean = x, stddev = 1.0)", "point(x)");
        let t = parse_theory(&src).unwrap();
        let a = GroundAction::new("fwd", vec![2.0]);
        let phi = parse_formula("h <= 5").unwrap();
        assert_eq!(
            regress_step(&phi, &a, &t).unwrap(),
            parse_formula("h - 2 <= 5").unwrap()
        );
        let v = Valuation::new().with("h", 9.0);
        assert_eq!(progress_valuation(&v, &a, &t).unwrap().get("h"), Some(7.0));
    }

    #[test]
    fn duality_on_a_fixed_case() {
        let t = robot();
        let hist = [
            fwd(0.5),
            GroundAction::new("sonar", vec![]).with_reading(3.0),
            fwd(-1.25),
        ];
        let phi = parse_formula("not (h * h - 3 > 2 * h) or h = 4").unwrap();
        for h0 in [-3.0, 0.0, 2.5, 4.75, 5.0, 11.0] {
            let v = Valuation::new().with("h", h0);
            let lhs = eval_formula(&regress_history(&phi, &hist, &t).unwrap(), &v).unwrap();
            let rhs = eval_formula(&phi, &progress_history(&v, &hist, &t).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "h0 = {h0}");
        }
    }
}
