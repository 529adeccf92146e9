//! Static checks and lowering from the spanned syntax tree to the model.

use std::collections::{BTreeMap, BTreeSet};

use super::diag::{codes, Diagnostic, SourceSpan};
use super::syntax::*;
use crate::model::{fold, ActionDecl, Density, EffectorNoise, Expr, Fluent, Formula, Sensing, Theory};

/// Tolerance for a discrete table's total mass.
pub const TABLE_MASS_TOLERANCE: f64 = 1e-9;

struct Scope<'a> {
    names: BTreeSet<&'a str>,
    what: &'static str,
    open: bool,
}

impl<'a> Scope<'a> {
    fn new(what: &'static str) -> Self {
        Scope {
            names: BTreeSet::new(),
            what,
            open: false,
        }
    }

    fn with(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        self.names.extend(names);
        self
    }
}

#[derive(Default)]
pub(crate) struct Lowerer {
    pub diags: Vec<Diagnostic>,
}

impl Lowerer {
    fn error(&mut self, code: &'static str, span: SourceSpan, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn expr(&mut self, e: &SExpr, scope: &Scope) -> Expr {
        match &e.kind {
            ExprKind::Num(v) => Expr::Const(*v),
            ExprKind::Name(n) => {
                if !scope.open && !scope.names.contains(n.as_str()) {
                    self.error(
                        codes::UNKNOWN_NAME,
                        e.span,
                        format!("unknown name `{n}` in {}", scope.what),
                    );
                }
                Expr::Var(n.clone())
            }
            ExprKind::Neg(a) => fold(Expr::neg(self.expr(a, scope))),
            ExprKind::Bin(op, a, b) => {
                let (a, b) = (self.expr(a, scope), self.expr(b, scope));
                fold(match op {
                    BinOp::Add => Expr::add(a, b),
                    BinOp::Sub => Expr::sub(a, b),
                    BinOp::Mul => Expr::mul(a, b),
                })
            }
        }
    }

    fn formula(&mut self, f: &SFormula, scope: &Scope) -> Formula {
        match &f.kind {
            FormulaKind::True => Formula::True,
            FormulaKind::False => Formula::False,
            FormulaKind::Cmp(a, op, b) => Formula::cmp(self.expr(a, scope), *op, self.expr(b, scope)),
            FormulaKind::And(a, b) => Formula::and(self.formula(a, scope), self.formula(b, scope)),
            FormulaKind::Or(a, b) => Formula::or(self.formula(a, scope), self.formula(b, scope)),
            FormulaKind::Not(a) => Formula::not(self.formula(a, scope)),
        }
    }

    fn constant(&mut self, e: &SExpr, code: &'static str, what: &str) -> Option<f64> {
        let before = self.diags.len();
        let lowered = self.expr(e, &Scope::new("a constant"));
        // names are reported once, as a non-constant parameter
        self.diags.truncate(before);
        match lowered {
            Expr::Const(v) => Some(v),
            _ => {
                self.error(code, e.span, format!("{what} must be a constant"));
                None
            }
        }
    }

    fn density(&mut self, d: &SDensity, scope: &Scope) -> Option<Density> {
        match &d.kind {
            DensityKind::Uniform(lo, hi) => {
                let lo_v = self.constant(lo, codes::BAD_DENSITY, "uniform lower bound");
                let hi_v = self.constant(hi, codes::BAD_DENSITY, "uniform upper bound");
                let (lo, hi) = (lo_v?, hi_v?);
                if lo < hi {
                    Some(Density::Uniform { lo, hi })
                } else {
                    self.error(
                        codes::BAD_DENSITY,
                        d.span,
                        format!("empty uniform interval [{lo}, {hi}]"),
                    );
                    None
                }
            }
            DensityKind::Gaussian { mean, stddev } => {
                let mean = self.expr(mean, scope);
                let sd = match self.constant(stddev, codes::BAD_STDDEV, "stddev") {
                    Some(v) if v > 0.0 => Some(v),
                    Some(v) => {
                        self.error(
                            codes::BAD_STDDEV,
                            stddev.span,
                            format!("stddev must be positive, found {v}"),
                        );
                        None
                    }
                    None => None,
                };
                Some(Density::Gaussian { mean, stddev: sd? })
            }
            DensityKind::Discrete(rows) => {
                let mut table = Vec::with_capacity(rows.len());
                let mut ok = true;
                for (value, mass) in rows {
                    let v = self.constant(value, codes::BAD_DENSITY, "discrete value");
                    let m = self.constant(mass, codes::TABLE_NOT_NORMALIZED, "discrete mass");
                    match (v, m) {
                        (Some(_), Some(m)) if m < 0.0 => {
                            self.error(codes::TABLE_NOT_NORMALIZED, mass.span, format!("negative mass {m}"));
                            ok = false;
                        }
                        (Some(v), Some(m)) => table.push((v, m)),
                        _ => ok = false,
                    }
                }
                if !ok {
                    return None;
                }
                let total: f64 = table.iter().map(|(_, m)| m).sum();
                if (total - 1.0).abs() > TABLE_MASS_TOLERANCE {
                    self.error(
                        codes::TABLE_NOT_NORMALIZED,
                        d.span,
                        format!("discrete masses sum to {total}, expected 1"),
                    );
                    return None;
                }
                Some(Density::Discrete(table))
            }
            DensityKind::Point(e) => Some(Density::Point(self.expr(e, scope))),
        }
    }

    pub(crate) fn theory(&mut self, st: &STheory) -> Option<Theory> {
        let mut fluent_names: BTreeMap<&str, SourceSpan> = BTreeMap::new();
        for f in &st.fluents {
            if f.ty.name != "real" {
                self.error(
                    codes::BAD_TYPE,
                    f.ty.span,
                    format!("unsupported type `{}`; fluents are `real`", f.ty.name),
                );
            }
            if fluent_names.insert(&f.name.name, f.name.span).is_some() {
                self.error(
                    codes::DUPLICATE,
                    f.name.span,
                    format!("fluent `{}` declared twice", f.name.name),
                );
            }
        }

        let mut inits: BTreeMap<&str, Density> = BTreeMap::new();
        let mut seen_init = BTreeSet::new();
        for init in &st.inits {
            let name = init.fluent.name.as_str();
            if !fluent_names.contains_key(name) {
                self.error(
                    codes::UNKNOWN_NAME,
                    init.fluent.span,
                    format!("init for undeclared fluent `{name}`"),
                );
                continue;
            }
            if !seen_init.insert(name) {
                self.error(
                    codes::DUPLICATE,
                    init.span,
                    format!("fluent `{name}` has two initial densities"),
                );
                continue;
            }
            if let Some(d) = self.density(&init.density, &Scope::new("an initial density")) {
                inits.insert(name, d);
            }
        }
        for f in &st.fluents {
            if !seen_init.contains(f.name.name.as_str()) {
                self.error(
                    codes::BAD_DENSITY,
                    f.name.span,
                    format!("fluent `{}` has no `init` line", f.name.name),
                );
            }
        }

        let mut actions = BTreeMap::new();
        let mut seen_actions = BTreeSet::new();
        for a in &st.actions {
            if !seen_actions.insert(a.name.name.as_str()) {
                self.error(
                    codes::DUPLICATE,
                    a.name.span,
                    format!("action `{}` declared twice", a.name.name),
                );
                continue;
            }
            if let Some(decl) = self.action(a, &fluent_names) {
                actions.insert(decl.name.clone(), decl);
            }
        }

        if self.diags.iter().any(Diagnostic::is_error) {
            return None;
        }
        let fluents = st
            .fluents
            .iter()
            .map(|f| Fluent {
                name: f.name.name.clone(),
                init: inits[f.name.name.as_str()].clone(),
            })
            .collect();
        Some(Theory {
            name: st.name.name.clone(),
            fluents,
            actions,
        })
    }

    fn action(&mut self, a: &SAction, fluents: &BTreeMap<&str, SourceSpan>) -> Option<ActionDecl> {
        let errors_before = self.diags.iter().filter(|d| d.is_error()).count();
        let mut params: Vec<&str> = Vec::new();
        for (p, ty) in &a.params {
            if ty.name != "real" {
                self.error(
                    codes::BAD_TYPE,
                    ty.span,
                    format!("unsupported type `{}`; parameters are `real`", ty.name),
                );
            }
            if params.contains(&p.name.as_str()) || fluents.contains_key(p.name.as_str()) {
                self.error(
                    codes::DUPLICATE,
                    p.span,
                    format!("parameter `{}` clashes with another name", p.name),
                );
            }
            params.push(&p.name);
        }
        if let Some(z) = &a.senses {
            if params.contains(&z.name.as_str()) || fluents.contains_key(z.name.as_str()) {
                self.error(
                    codes::DUPLICATE,
                    z.span,
                    format!("reading `{}` clashes with another name", z.name),
                );
            }
        }

        let mut noisy: Option<(&Ident, &SDensity, SourceSpan)> = None;
        let mut poss: Option<&SFormula> = None;
        let mut likelihood: Option<(&SDensity, SourceSpan)> = None;
        let mut effects: Vec<(&Ident, &SExpr, SourceSpan)> = Vec::new();
        for item in &a.items {
            let dup = match item {
                SItem::Noisy { latent, density, span } => noisy.replace((latent, density, *span)).is_some(),
                SItem::Poss { formula, .. } => poss.replace(formula).is_some(),
                SItem::Likelihood { density, span } => likelihood.replace((density, *span)).is_some(),
                SItem::Effect { fluent, expr, span } => {
                    let dup = effects.iter().any(|(f, _, _)| f.name == fluent.name);
                    effects.push((fluent, expr, *span));
                    dup
                }
            };
            if dup {
                self.error(codes::DUPLICATE, item.span(), "repeated item in action body");
            }
        }

        if let (Some((_, _, span)), Some(_)) = (&noisy, &a.senses) {
            self.error(
                codes::BOTH_NOISE_KINDS,
                *span,
                format!("action `{}` has both effector noise and a sensed reading", a.name.name),
            );
        }
        if a.senses.is_some() {
            for (_, _, span) in &effects {
                self.error(codes::BAD_SENSING, *span, "sensing actions cannot change fluents");
            }
            if likelihood.is_none() {
                self.error(
                    codes::BAD_SENSING,
                    a.name.span,
                    "sensing action needs a `likelihood` line",
                );
            }
        } else if let Some((_, span)) = likelihood {
            self.error(
                codes::BAD_SENSING,
                span,
                "`likelihood` requires `senses <reading>` on the action",
            );
        }

        let fluent_scope = || fluents.keys().copied();
        let noise = noisy.and_then(|(latent, density, _)| {
            if params.contains(&latent.name.as_str()) || fluents.contains_key(latent.name.as_str()) {
                self.error(
                    codes::DUPLICATE,
                    latent.span,
                    format!("latent `{}` clashes with another name", latent.name),
                );
            }
            let scope = Scope::new("effector noise (intended parameters only)").with(params.iter().copied());
            self.density(density, &scope).map(|d| EffectorNoise {
                latent: latent.name.clone(),
                density: d,
            })
        });

        let poss_scope = Scope::new("a precondition")
            .with(fluent_scope())
            .with(params.iter().copied());
        let poss = poss.map(|f| self.formula(f, &poss_scope)).unwrap_or(Formula::True);

        let sensing = match (&a.senses, likelihood) {
            (Some(z), Some((d, _))) => {
                let scope = Scope::new("a likelihood")
                    .with(fluent_scope())
                    .with(params.iter().copied());
                self.density(d, &scope).map(|d| Sensing {
                    reading: z.name.clone(),
                    likelihood: d,
                })
            }
            _ => None,
        };

        let latent_name = noisy.map(|(l, _, _)| l.name.as_str());
        let effect_scope = Scope::new("an effect")
            .with(fluent_scope())
            .with(params.iter().copied())
            .with(latent_name);
        let mut lowered_effects = BTreeMap::new();
        for (fluent, expr, span) in &effects {
            if !fluents.contains_key(fluent.name.as_str()) {
                self.error(
                    codes::UNKNOWN_NAME,
                    fluent.span,
                    format!("effect on undeclared fluent `{}`", fluent.name),
                );
                continue;
            }
            let e = self.expr(expr, &effect_scope);
            if e == Expr::Var(fluent.name.clone()) {
                self.diags.push(Diagnostic::warning(
                    codes::SELF_ASSIGNMENT,
                    *span,
                    format!(
                        "effect leaves `{}` unchanged; unlisted fluents already persist",
                        fluent.name
                    ),
                ));
            }
            lowered_effects.insert(fluent.name.clone(), e);
        }
        if let Some((latent, _, span)) = noisy {
            let used = lowered_effects
                .values()
                .any(|e: &Expr| e.names().contains(&latent.name));
            if !used {
                self.diags.push(Diagnostic::warning(
                    codes::UNUSED_LATENT,
                    span,
                    format!("latent `{}` is not used by any effect", latent.name),
                ));
            }
        }

        let errors_after = self.diags.iter().filter(|d| d.is_error()).count();
        if errors_after > errors_before {
            return None;
        }
        Some(ActionDecl {
            name: a.name.name.clone(),
            params: params.iter().map(|s| s.to_string()).collect(),
            noise,
            sensing,
            poss,
            effects: lowered_effects,
        })
    }

    pub(crate) fn query(&mut self, f: &SFormula, fluents: &[&str]) -> Formula {
        let scope = Scope::new("a query").with(fluents.iter().copied());
        self.formula(f, &scope)
    }

    pub(crate) fn unchecked_formula(&mut self, f: &SFormula) -> Formula {
        self.formula(
            f,
            &Scope {
                names: BTreeSet::new(),
                what: "a formula",
                open: true,
            },
        )
    }
}
