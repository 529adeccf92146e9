//! Surface syntax tree. Every node carries the span it was parsed from.

use super::diag::SourceSpan;
use crate::model::CmpOp;

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Name(String),
    Neg(Box<SExpr>),
    Bin(BinOp, Box<SExpr>, Box<SExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SExpr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FormulaKind {
    True,
    False,
    Cmp(SExpr, CmpOp, SExpr),
    And(Box<SFormula>, Box<SFormula>),
    Or(Box<SFormula>, Box<SFormula>),
    Not(Box<SFormula>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SFormula {
    pub kind: FormulaKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    Uniform(SExpr, SExpr),
    Gaussian { mean: SExpr, stddev: SExpr },
    Discrete(Vec<(SExpr, SExpr)>),
    Point(SExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SDensity {
    pub kind: DensityKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SFluent {
    pub name: Ident,
    pub ty: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SInit {
    pub fluent: Ident,
    pub density: SDensity,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SItem {
    Noisy {
        latent: Ident,
        density: SDensity,
        span: SourceSpan,
    },
    Poss {
        formula: SFormula,
        span: SourceSpan,
    },
    Effect {
        fluent: Ident,
        expr: SExpr,
        span: SourceSpan,
    },
    Likelihood {
        density: SDensity,
        span: SourceSpan,
    },
}

impl SItem {
    pub fn span(&self) -> SourceSpan {
        match self {
            SItem::Noisy { span, .. }
            | SItem::Poss { span, .. }
            | SItem::Effect { span, .. }
            | SItem::Likelihood { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SAction {
    pub name: Ident,
    pub params: Vec<(Ident, Ident)>,
    pub senses: Option<Ident>,
    pub items: Vec<SItem>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct STheory {
    pub name: Ident,
    pub fluents: Vec<SFluent>,
    pub inits: Vec<SInit>,
    pub actions: Vec<SAction>,
}
