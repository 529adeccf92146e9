//! Lowers a belief problem to an integrand over numbered variables.
//!
//! Every quantity the weight depends on (preconditions, likelihood
//! parameters, the query) is regressed to the initial situation once, so
//! the integrand is a plain function of the initial fluent values and the
//! latent effector outcomes.

use std::collections::BTreeMap;

use super::{BeliefError, BeliefProblem};
use crate::model::ActionDecl;
use crate::model::{CmpOp, Density, Expr, Formula, Support};
use crate::regression::{regress_expr_history, regress_history};

/// Intended arguments as constants. Preconditions and likelihoods never see
/// the latent outcome.
pub(crate) fn parameters(decl: &ActionDecl, args: &[f64]) -> BTreeMap<String, Expr> {
    decl.params
        .iter()
        .cloned()
        .zip(args.iter().map(|v| Expr::Const(*v)))
        .collect()
}

#[derive(Debug, Clone)]
pub(crate) enum CExpr {
    Const(f64),
    Var(usize),
    Neg(Box<CExpr>),
    Add(Box<CExpr>, Box<CExpr>),
    Sub(Box<CExpr>, Box<CExpr>),
    Mul(Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    #[inline]
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        match self {
            CExpr::Const(c) => *c,
            CExpr::Var(i) => x[*i],
            CExpr::Neg(a) => -a.eval(x),
            CExpr::Add(a, b) => a.eval(x) + b.eval(x),
            CExpr::Sub(a, b) => a.eval(x) - b.eval(x),
            CExpr::Mul(a, b) => a.eval(x) * b.eval(x),
        }
    }

    fn mentions(&self, pred: &impl Fn(usize) -> bool) -> bool {
        match self {
            CExpr::Const(_) => false,
            CExpr::Var(i) => pred(*i),
            CExpr::Neg(a) => a.mentions(pred),
            CExpr::Add(a, b) | CExpr::Sub(a, b) | CExpr::Mul(a, b) => a.mentions(pred) || b.mentions(pred),
        }
    }
}

/// `constant + Σ coefs[i] · x[i]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Affine {
    pub constant: f64,
    pub coefs: Vec<f64>,
}

impl Affine {
    fn constant(c: f64, n: usize) -> Self {
        Affine {
            constant: c,
            coefs: vec![0.0; n],
        }
    }

    fn is_constant(&self) -> bool {
        self.coefs.iter().all(|c| *c == 0.0)
    }

    fn combine(mut self, other: &Affine, sign: f64) -> Self {
        self.constant += sign * other.constant;
        for (a, b) in self.coefs.iter_mut().zip(&other.coefs) {
            *a += sign * b;
        }
        self
    }

    fn scale(mut self, k: f64) -> Self {
        self.constant *= k;
        for c in &mut self.coefs {
            *c *= k;
        }
        self
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coefs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

pub(crate) fn affine(e: &CExpr, n: usize) -> Option<Affine> {
    Some(match e {
        CExpr::Const(c) => Affine::constant(*c, n),
        CExpr::Var(i) => {
            let mut a = Affine::constant(0.0, n);
            a.coefs[*i] = 1.0;
            a
        }
        CExpr::Neg(a) => affine(a, n)?.scale(-1.0),
        CExpr::Add(a, b) => affine(a, n)?.combine(&affine(b, n)?, 1.0),
        CExpr::Sub(a, b) => affine(a, n)?.combine(&affine(b, n)?, -1.0),
        CExpr::Mul(a, b) => {
            let (a, b) = (affine(a, n)?, affine(b, n)?);
            if a.is_constant() {
                b.scale(a.constant)
            } else if b.is_constant() {
                a.scale(b.constant)
            } else {
                return None;
            }
        }
    })
}

#[derive(Debug, Clone)]
pub(crate) enum CFormula {
    Const(bool),
    Cmp(CExpr, CmpOp, CExpr),
    And(Box<CFormula>, Box<CFormula>),
    Or(Box<CFormula>, Box<CFormula>),
    Not(Box<CFormula>),
}

impl CFormula {
    #[inline]
    pub(crate) fn eval(&self, x: &[f64]) -> bool {
        match self {
            CFormula::Const(b) => *b,
            CFormula::Cmp(a, op, b) => op.apply(a.eval(x), b.eval(x)),
            CFormula::And(a, b) => a.eval(x) && b.eval(x),
            CFormula::Or(a, b) => a.eval(x) || b.eval(x),
            CFormula::Not(a) => !a.eval(x),
        }
    }

    fn comparisons<'a>(&'a self, out: &mut Vec<(&'a CExpr, &'a CExpr)>) {
        match self {
            CFormula::Const(_) => {}
            CFormula::Cmp(a, _, b) => out.push((a, b)),
            CFormula::And(a, b) | CFormula::Or(a, b) => {
                a.comparisons(out);
                b.comparisons(out);
            }
            CFormula::Not(a) => a.comparisons(out),
        }
    }
}

/// One multiplicative term of the weight.
#[derive(Debug, Clone)]
pub(crate) enum Factor {
    Gaussian { at: CExpr, mean: CExpr, stddev: f64 },
    Uniform { at: CExpr, lo: f64, hi: f64 },
    Atoms { at: CExpr, table: Vec<(f64, f64)> },
    Point { at: CExpr, value: CExpr },
    Indicator(CFormula),
}

impl Factor {
    #[inline]
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Factor::Gaussian { at, mean, stddev } => crate::model::gaussian_pdf(at.eval(x), mean.eval(x), *stddev),
            Factor::Uniform { at, lo, hi } => {
                let v = at.eval(x);
                if *lo <= v && v <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Factor::Atoms { at, table } => {
                let v = at.eval(x);
                table.iter().filter(|(a, _)| *a == v).map(|(_, m)| m).sum()
            }
            Factor::Point { at, value } => {
                if at.eval(x) == value.eval(x) {
                    1.0
                } else {
                    0.0
                }
            }
            Factor::Indicator(f) => {
                if f.eval(x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum AxisKind {
    Interval { lo: f64, hi: f64 },
    Atoms(Vec<f64>),
}

/// Integration variable in integration order (atoms first).
#[derive(Debug, Clone)]
pub(crate) struct Var {
    pub name: String,
    pub axis: AxisKind,
    pub density: Density,
}

impl Var {
    pub(crate) fn is_continuous(&self) -> bool {
        matches!(self.axis, AxisKind::Interval { .. })
    }
}

/// The weight as a product of factors, plus the query indicator.
#[derive(Debug, Clone)]
pub(crate) struct Integrand {
    pub vars: Vec<Var>,
    pub factors: Vec<Factor>,
    pub query: CFormula,
    pub scale: f64,
    /// Affine functions whose sign changes make the integrand jump.
    pub kinks: Vec<Affine>,
    pub warnings: Vec<String>,
}

impl Integrand {
    /// `(weight, weight · [query])` at `x`.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64]) -> [f64; 2] {
        let mut w = self.scale;
        for f in &self.factors {
            w *= f.eval(x);
            if w == 0.0 {
                return [0.0, 0.0];
            }
        }
        [w, if self.query.eval(x) { w } else { 0.0 }]
    }
}

/// Maps named quantities to variable slots. `continuous[i]` marks slots
/// whose single values carry no probability mass.
pub(crate) struct Lowering {
    pub index: BTreeMap<String, usize>,
    pub continuous: Vec<bool>,
    pub warnings: Vec<String>,
}

impl Lowering {
    pub(crate) fn expr(&self, e: &Expr) -> Result<CExpr, BeliefError> {
        Ok(match e {
            Expr::Const(c) => CExpr::Const(*c),
            Expr::Var(n) => CExpr::Var(*self.index.get(n).ok_or_else(|| BeliefError::UnboundSymbol(n.clone()))?),
            Expr::Neg(a) => CExpr::Neg(Box::new(self.expr(a)?)),
            Expr::Add(a, b) => CExpr::Add(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Sub(a, b) => CExpr::Sub(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Mul(a, b) => CExpr::Mul(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
        })
    }

    /// True when the value of `e` moves with some continuous slot, so that
    /// any single value of it has probability zero.
    pub(crate) fn varies(&self, e: &CExpr) -> bool {
        match affine(e, self.continuous.len()) {
            Some(a) => a.coefs.iter().zip(&self.continuous).any(|(c, cont)| *c != 0.0 && *cont),
            None => e.mentions(&|i| self.continuous[i]),
        }
    }

    pub(crate) fn formula(&mut self, f: &Formula, context: &str) -> Result<CFormula, BeliefError> {
        Ok(match f {
            Formula::True => CFormula::Const(true),
            Formula::False => CFormula::Const(false),
            Formula::Cmp(a, op, b) => {
                let (ca, cb) = (self.expr(a)?, self.expr(b)?);
                if *op == CmpOp::Eq && self.varies(&CExpr::Sub(Box::new(ca.clone()), Box::new(cb.clone()))) {
                    self.warnings.push(format!(
                        "equality `{a} = {b}` in {context} ranges over a continuous quantity; it has probability zero"
                    ));
                    return Ok(CFormula::Const(false));
                }
                CFormula::Cmp(ca, *op, cb)
            }
            Formula::And(a, b) => {
                CFormula::And(Box::new(self.formula(a, context)?), Box::new(self.formula(b, context)?))
            }
            Formula::Or(a, b) => CFormula::Or(Box::new(self.formula(a, context)?), Box::new(self.formula(b, context)?)),
            Formula::Not(a) => CFormula::Not(Box::new(self.formula(a, context)?)),
        })
    }

    /// Density `d` evaluated at `at`; parameters of `d` are lowered too.
    pub(crate) fn density(&mut self, d: &Density, at: CExpr, context: &str) -> Result<Factor, BeliefError> {
        Ok(match d {
            Density::Uniform { lo, hi } => Factor::Uniform { at, lo: *lo, hi: *hi },
            Density::Gaussian { mean, stddev } => Factor::Gaussian {
                at,
                mean: self.expr(mean)?,
                stddev: *stddev,
            },
            Density::Discrete(table) => {
                if self.varies(&at) {
                    self.warnings.push(format!(
                        "discrete density in {context} is evaluated at a continuous quantity"
                    ));
                    Factor::Indicator(CFormula::Const(false))
                } else {
                    Factor::Atoms {
                        at,
                        table: table.clone(),
                    }
                }
            }
            Density::Point(value) => {
                let value = self.expr(value)?;
                if self.varies(&CExpr::Sub(Box::new(at.clone()), Box::new(value.clone()))) {
                    self.warnings.push(format!(
                        "point density in {context} is evaluated at a continuous quantity"
                    ));
                    Factor::Indicator(CFormula::Const(false))
                } else {
                    Factor::Point { at, value }
                }
            }
        })
    }
}

pub(crate) fn axis_of(d: &Density) -> AxisKind {
    match d
        .support(&Default::default())
        .expect("variable densities have constant parameters")
    {
        Support::Interval { lo, hi } => AxisKind::Interval { lo, hi },
        Support::Atoms(table) => {
            let mut values: Vec<f64> = table.iter().map(|(v, _)| *v).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            AxisKind::Atoms(values)
        }
    }
}

pub(crate) fn compile(problem: &BeliefProblem) -> Result<Integrand, BeliefError> {
    let t = &problem.theory;
    let mut vars: Vec<Var> = problem
        .init_vars()
        .chain(problem.latent_vars().into_iter().map(|l| (l.symbol, l.density)))
        .map(|(name, density)| Var {
            name,
            axis: axis_of(&density),
            density,
        })
        .collect();
    // stable: atoms first, then continuous, each in declaration order
    vars.sort_by_key(|v| v.is_continuous());
    let mut lw = Lowering {
        index: vars.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect(),
        continuous: vars.iter().map(Var::is_continuous).collect(),
        warnings: Vec::new(),
    };

    let mut factors = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        factors.push(lw.density(&v.density, CExpr::Var(i), "a prior")?);
    }

    let ground = problem.ground_actions();
    for (i, (event, ga)) in problem.history.iter().zip(&ground).enumerate() {
        let decl = t.action(&event.action).expect("validated history");
        let prefix = &ground[..i];
        let binds = parameters(decl, &ga.args);
        let poss = regress_history(&decl.poss.substitute(&binds), prefix, t)?;
        if poss != Formula::True {
            let context = format!("the precondition of `{}` (event {})", event.action, i + 1);
            factors.push(Factor::Indicator(lw.formula(&poss, &context)?));
        }
        if let (Some(s), Some(z)) = (&decl.sensing, event.reading) {
            let lik = match s.likelihood.substitute(&binds) {
                Density::Gaussian { mean, stddev } => Density::Gaussian {
                    mean: regress_expr_history(&mean, prefix, t)?,
                    stddev,
                },
                Density::Point(e) => Density::Point(regress_expr_history(&e, prefix, t)?),
                other => other,
            };
            let context = format!("the likelihood of `{}` (event {})", event.action, i + 1);
            factors.push(lw.density(&lik, CExpr::Const(z), &context)?);
        }
    }

    let query = regress_history(&problem.query, &ground, t)?;
    let query = lw.formula(&query, "the query")?;

    let n = vars.len();
    let mut kinks = Vec::new();
    let mut push_kink = |a: Option<Affine>| {
        if let Some(a) = a {
            if !a.is_constant() && !kinks.contains(&a) {
                kinks.push(a);
            }
        }
    };
    let mut cmps = Vec::new();
    query.comparisons(&mut cmps);
    for f in &factors {
        match f {
            Factor::Indicator(c) => c.comparisons(&mut cmps),
            Factor::Uniform { at, lo, hi } => {
                let at = affine(at, n);
                push_kink(at.clone().map(|a| a.combine(&Affine::constant(*lo, n), -1.0)));
                push_kink(at.map(|a| a.combine(&Affine::constant(*hi, n), -1.0)));
            }
            _ => {}
        }
    }
    for (a, b) in cmps {
        push_kink(affine(a, n).zip(affine(b, n)).map(|(a, b)| a.combine(&b, -1.0)));
    }

    let warnings = lw.warnings;
    Ok(Integrand {
        vars,
        factors,
        query,
        scale: problem.prior_scale,
        kinks,
        warnings,
    })
}
