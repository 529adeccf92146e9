//! Values, expressions, formulas, densities, and the action theory itself.
//!
//! Everything here is immutable after construction. Names are plain strings;
//! a name may refer to a fluent, an action parameter, an effector latent, or
//! (inside the belief engine) an integration variable.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    Unbound(String),
}

/// Arithmetic over real constants and named symbols.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    /// Collects every symbol name mentioned by the expression.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    pub(crate) fn collect_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(a) => a.collect_names(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Replaces symbols according to `map`, simultaneously. Literal-only
    /// subexpressions of the result are folded.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(n) => map.get(n).cloned().unwrap_or_else(|| Expr::Var(n.clone())),
            Expr::Neg(a) => fold(Expr::neg(a.substitute(map))),
            Expr::Add(a, b) => fold(Expr::add(a.substitute(map), b.substitute(map))),
            Expr::Sub(a, b) => fold(Expr::sub(a.substitute(map), b.substitute(map))),
            Expr::Mul(a, b) => fold(Expr::mul(a.substitute(map), b.substitute(map))),
        }
    }
}

/// Folds one node whose children are all literals. Non-finite results are
/// left unfolded so that printing never has to spell out infinities.
pub(crate) fn fold(e: Expr) -> Expr {
    let folded = match &e {
        Expr::Neg(a) => match **a {
            Expr::Const(x) => Some(-x),
            _ => None,
        },
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => match (&**a, &**b) {
            (Expr::Const(x), Expr::Const(y)) => Some(match e {
                Expr::Add(..) => x + y,
                Expr::Sub(..) => x - y,
                _ => x * y,
            }),
            _ => None,
        },
        _ => None,
    };
    match folded {
        Some(v) if v.is_finite() => Expr::Const(v),
        _ => e,
    }
}

/// Total map from fluent (or other symbol) names to reals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Valuation(BTreeMap<String, f64>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn remove(&mut self, name: &str) -> Option<f64> {
        self.0.remove(name)
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Valuation(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

pub fn eval_expr(e: &Expr, v: &Valuation) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Const(c) => *c,
        Expr::Var(n) => v.get(n).ok_or_else(|| EvalError::Unbound(n.clone()))?,
        Expr::Neg(a) => -eval_expr(a, v)?,
        Expr::Add(a, b) => eval_expr(a, v)? + eval_expr(b, v)?,
        Expr::Sub(a, b) => eval_expr(a, v)? - eval_expr(b, v)?,
        Expr::Mul(a, b) => eval_expr(a, v)? * eval_expr(b, v)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Quantifier-free query over fluents.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Cmp(Expr, CmpOp, Expr),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn cmp(lhs: Expr, op: CmpOp, rhs: Expr) -> Formula {
        Formula::Cmp(lhs, op, rhs)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(a, _, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Formula::Not(a) => a.collect_names(out),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False => 1,
            Formula::Cmp(a, _, b) => 1 + a.size() + b.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
            Formula::Not(a) => 1 + a.size(),
        }
    }

    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Cmp(a, op, b) => Formula::Cmp(a.substitute(map), *op, b.substitute(map)),
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Formula::Not(a) => Formula::not(a.substitute(map)),
        }
    }

    /// Visits every comparison in the formula.
    pub fn comparisons(&self) -> Vec<(&Expr, CmpOp, &Expr)> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                Formula::True | Formula::False => {}
                Formula::Cmp(a, op, b) => out.push((a, *op, b)),
                Formula::And(a, b) | Formula::Or(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Formula::Not(a) => stack.push(a),
            }
        }
        out
    }
}

pub fn eval_formula(f: &Formula, v: &Valuation) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Cmp(a, op, b) => op.apply(eval_expr(a, v)?, eval_expr(b, v)?),
        // both sides are evaluated so unbound names are reported regardless of short-circuiting
        Formula::And(a, b) => {
            let (x, y) = (eval_formula(a, v)?, eval_formula(b, v)?);
            x && y
        }
        Formula::Or(a, b) => {
            let (x, y) = (eval_formula(a, v)?, eval_formula(b, v)?);
            x || y
        }
        Formula::Not(a) => !eval_formula(a, v)?,
    })
}

/// Error models and priors.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: Expr,
        stddev: f64,
    },
    Discrete(Vec<(f64, f64)>),
    /// Deterministic limit; never integrated numerically.
    Point(Expr),
}

/// Where a density puts its mass, with parameters already evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// Integrate over `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Sum over `(value, mass)` atoms.
    Atoms(Vec<(f64, f64)>),
}

/// Gaussian tails beyond this many standard deviations are dropped.
pub const GAUSSIAN_TRUNCATION: f64 = 8.0;

impl Density {
    pub fn names(&self) -> BTreeSet<String> {
        match self {
            Density::Gaussian { mean, .. } => mean.names(),
            Density::Point(e) => e.names(),
            _ => BTreeSet::new(),
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Density::Point(_))
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Density::Uniform { .. } | Density::Gaussian { .. })
    }

    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Density {
        match self {
            Density::Gaussian { mean, stddev } => Density::Gaussian {
                mean: mean.substitute(map),
                stddev: *stddev,
            },
            Density::Point(e) => Density::Point(e.substitute(map)),
            other => other.clone(),
        }
    }

    pub fn support(&self, v: &Valuation) -> Result<Support, EvalError> {
        Ok(match self {
            Density::Uniform { lo, hi } => Support::Interval { lo: *lo, hi: *hi },
            Density::Gaussian { mean, stddev } => {
                let m = eval_expr(mean, v)?;
                Support::Interval {
                    lo: m - GAUSSIAN_TRUNCATION * stddev,
                    hi: m + GAUSSIAN_TRUNCATION * stddev,
                }
            }
            Density::Discrete(table) => Support::Atoms(table.clone()),
            Density::Point(e) => Support::Atoms(vec![(eval_expr(e, v)?, 1.0)]),
        })
    }
}

pub fn gaussian_pdf(x: f64, mean: f64, stddev: f64) -> f64 {
    let z = (x - mean) / stddev;
    (-0.5 * z * z).exp() / (stddev * (2.0 * PI).sqrt())
}

/// Density (continuous) or mass (discrete, point) of `d` at `point`.
pub fn density_pdf(d: &Density, point: f64, v: &Valuation) -> Result<f64, EvalError> {
    Ok(match d {
        Density::Uniform { lo, hi } => {
            if *lo <= point && point <= *hi {
                1.0 / (hi - lo)
            } else {
                0.0
            }
        }
        Density::Gaussian { mean, stddev } => gaussian_pdf(point, eval_expr(mean, v)?, *stddev),
        Density::Discrete(table) => table
            .iter()
            .filter(|(value, _)| *value == point)
            .map(|(_, mass)| mass)
            .sum(),
        Density::Point(e) => {
            if eval_expr(e, v)? == point {
                1.0
            } else {
                0.0
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fluent {
    pub name: String,
    pub init: Density,
}

/// A physical action's actual outcome `latent` drawn from `density`, which
/// may mention the intended parameters only.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectorNoise {
    pub latent: String,
    pub density: Density,
}

/// A sensing action's reading and its likelihood given the current fluents.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensing {
    pub reading: String,
    pub likelihood: Density,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDecl {
    pub name: String,
    pub params: Vec<String>,
    pub noise: Option<EffectorNoise>,
    pub sensing: Option<Sensing>,
    pub poss: Formula,
    /// Successor-state right-hand sides; fluents not listed persist.
    pub effects: BTreeMap<String, Expr>,
}

impl ActionDecl {
    pub fn is_sensing(&self) -> bool {
        self.sensing.is_some()
    }

    /// Physical action whose outcome must be integrated over.
    pub fn has_latent(&self) -> bool {
        self.noise.as_ref().is_some_and(|n| !n.density.is_point())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theory {
    pub name: String,
    pub fluents: Vec<Fluent>,
    pub actions: BTreeMap<String, ActionDecl>,
}

impl Theory {
    pub fn fluent(&self, name: &str) -> Option<&Fluent> {
        self.fluents.iter().find(|f| f.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionDecl> {
        self.actions.get(name)
    }

    pub fn fluent_names(&self) -> impl Iterator<Item = &str> {
        self.fluents.iter().map(|f| f.name.as_str())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::dsl::write_expr(f, self)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::dsl::write_formula(f, self)
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::dsl::write_density(f, self)
    }
}
