//! Recursive-descent parser producing the spanned syntax tree.
//!
//! Formulas and expressions share one precedence ladder so that a leading
//! `(` never needs backtracking: a parenthesised group is parsed once and
//! classified afterwards as either an expression or a formula.

use super::diag::{codes, Diagnostic, SourceSpan};
use super::lexer::{lex, Tok, Token};
use super::syntax::*;
use crate::model::CmpOp;

const KEYWORDS: &[&str] = &[
    "theory",
    "fluent",
    "init",
    "action",
    "noisy",
    "poss",
    "effect",
    "likelihood",
    "senses",
    "true",
    "false",
    "and",
    "or",
    "not",
];

const MAX_DEPTH: usize = 200;

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

type PResult<T> = Result<T, Diagnostic>;

/// A number with the span it was read from.
pub(crate) type Spanned = (f64, SourceSpan);

enum Node {
    Expr(SExpr),
    Formula(SFormula),
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            depth: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, what: &str) -> Diagnostic {
        let t = self.peek();
        Diagnostic::error(
            codes::SYNTAX,
            t.span,
            format!("expected {what}, found {}", t.tok.describe()),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        if self.at(&tok) {
            Ok(self.bump().span)
        } else {
            let what = match &tok {
                Tok::Newline => "end of line".to_string(),
                other => other.describe(),
            };
            Err(self.unexpected(&what))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<SourceSpan> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> PResult<Ident> {
        match &self.peek().tok {
            Tok::Ident(s) if !is_keyword(s) => {
                let name = s.clone();
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn skip_newlines(&mut self) {
        while self.at(&Tok::Newline) {
            self.bump();
        }
    }

    fn end_statement(&mut self) -> PResult<()> {
        match self.peek().tok {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof | Tok::RBrace => Ok(()),
            _ => Err(self.unexpected("end of line")),
        }
    }

    pub(crate) fn expect_eof(&mut self) -> PResult<()> {
        self.skip_newlines();
        if self.at(&Tok::Eof) {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(Diagnostic::error(
                codes::SYNTAX,
                self.peek().span,
                "expression nested too deeply",
            ));
        }
        Ok(())
    }

    pub(crate) fn theory(&mut self) -> PResult<STheory> {
        self.skip_newlines();
        self.expect_kw("theory")?;
        let name = self.ident("theory name")?;
        self.end_statement()?;
        let mut th = STheory {
            name,
            fluents: vec![],
            inits: vec![],
            actions: vec![],
        };
        loop {
            self.skip_newlines();
            if self.at(&Tok::Eof) {
                break;
            }
            if self.at_kw("fluent") {
                self.bump();
                let name = self.ident("fluent name")?;
                self.expect(Tok::Colon)?;
                let ty = self.ident("type name")?;
                th.fluents.push(SFluent { name, ty });
            } else if self.at_kw("init") {
                let start = self.bump().span;
                let fluent = self.ident("fluent name")?;
                self.expect(Tok::Tilde)?;
                let density = self.density()?;
                let span = start.join(density.span);
                th.inits.push(SInit { fluent, density, span });
            } else if self.at_kw("action") {
                th.actions.push(self.action()?);
            } else {
                return Err(self.unexpected("`fluent`, `init`, or `action`"));
            }
            self.end_statement()?;
        }
        Ok(th)
    }

    fn action(&mut self) -> PResult<SAction> {
        let start = self.expect_kw("action")?;
        let name = self.ident("action name")?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                let p = self.ident("parameter name")?;
                let ty = if self.eat(&Tok::Colon) {
                    self.ident("type name")?
                } else {
                    Ident {
                        name: "real".into(),
                        span: p.span,
                    }
                };
                params.push((p, ty));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let senses = if self.at_kw("senses") {
            self.bump();
            Some(self.ident("reading name")?)
        } else {
            None
        };
        self.expect(Tok::LBrace)?;
        let mut items = Vec::new();
        loop {
            self.skip_newlines();
            if self.at(&Tok::RBrace) {
                break;
            }
            items.push(self.item()?);
            self.end_statement()?;
        }
        let end = self.expect(Tok::RBrace)?;
        Ok(SAction {
            name,
            params,
            senses,
            items,
            span: start.join(end),
        })
    }

    fn item(&mut self) -> PResult<SItem> {
        let start = self.peek().span;
        if self.at_kw("noisy") {
            self.bump();
            let latent = self.ident("latent name")?;
            self.expect(Tok::Tilde)?;
            let density = self.density()?;
            let span = start.join(density.span);
            Ok(SItem::Noisy { latent, density, span })
        } else if self.at_kw("poss") {
            self.bump();
            let formula = self.formula()?;
            let span = start.join(formula.span);
            Ok(SItem::Poss { formula, span })
        } else if self.at_kw("effect") {
            self.bump();
            let fluent = self.ident("fluent name")?;
            self.expect(Tok::Assign)?;
            let expr = self.expr()?;
            let span = start.join(expr.span);
            Ok(SItem::Effect { fluent, expr, span })
        } else if self.at_kw("likelihood") {
            self.bump();
            let density = self.density()?;
            let span = start.join(density.span);
            Ok(SItem::Likelihood { density, span })
        } else {
            Err(self.unexpected("`noisy`, `poss`, `effect`, `likelihood`, or `}`"))
        }
    }

    fn density(&mut self) -> PResult<SDensity> {
        let kind_tok = self.peek().clone();
        let kind = match &kind_tok.tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.unexpected("density (`uniform`, `gaussian`, `discrete`, or `point`)")),
        };
        let start = kind_tok.span;
        let kind = match kind.as_str() {
            "uniform" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let lo = self.expr()?;
                self.expect(Tok::Comma)?;
                let hi = self.expr()?;
                DensityKind::Uniform(lo, hi)
            }
            "gaussian" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut mean = None;
                let mut stddev = None;
                loop {
                    let key = self.peek().clone();
                    let slot = match &key.tok {
                        Tok::Ident(s) if s == "mean" => &mut mean,
                        Tok::Ident(s) if s == "stddev" => &mut stddev,
                        _ => return Err(self.unexpected("`mean` or `stddev`")),
                    };
                    if slot.is_some() {
                        return Err(Diagnostic::error(codes::SYNTAX, key.span, "argument given twice"));
                    }
                    self.bump();
                    self.expect(Tok::Eq)?;
                    let value = self.expr()?;
                    match &key.tok {
                        Tok::Ident(s) if s == "mean" => mean = Some(value),
                        _ => stddev = Some(value),
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                match (mean, stddev) {
                    (Some(mean), Some(stddev)) => DensityKind::Gaussian { mean, stddev },
                    _ => {
                        return Err(Diagnostic::error(
                            codes::SYNTAX,
                            start.join(self.peek().span),
                            "gaussian needs both `mean` and `stddev`",
                        ))
                    }
                }
            }
            "discrete" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut table = Vec::new();
                loop {
                    let value = self.expr()?;
                    self.expect(Tok::Colon)?;
                    let mass = self.expr()?;
                    table.push((value, mass));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                DensityKind::Discrete(table)
            }
            "point" => {
                self.bump();
                self.expect(Tok::LParen)?;
                DensityKind::Point(self.expr()?)
            }
            _ => return Err(self.unexpected("density (`uniform`, `gaussian`, `discrete`, or `point`)")),
        };
        let end = self.expect(Tok::RParen)?;
        Ok(SDensity {
            kind,
            span: start.join(end),
        })
    }

    pub(crate) fn formula(&mut self) -> PResult<SFormula> {
        match self.or_level()? {
            Node::Formula(f) => Ok(f),
            Node::Expr(e) => Err(Diagnostic::error(
                codes::SYNTAX,
                e.span,
                "expected a condition (comparison, `true`, or `false`), found an expression",
            )),
        }
    }

    pub(crate) fn expr(&mut self) -> PResult<SExpr> {
        match self.additive()? {
            Node::Expr(e) => Ok(e),
            Node::Formula(f) => Err(Diagnostic::error(
                codes::SYNTAX,
                f.span,
                "expected an expression, found a condition",
            )),
        }
    }

    fn want_formula(node: Node, op: &str) -> PResult<SFormula> {
        match node {
            Node::Formula(f) => Ok(f),
            Node::Expr(e) => Err(Diagnostic::error(
                codes::SYNTAX,
                e.span,
                format!("operand of `{op}` must be a condition"),
            )),
        }
    }

    fn want_expr(node: Node, op: &str) -> PResult<SExpr> {
        match node {
            Node::Expr(e) => Ok(e),
            Node::Formula(f) => Err(Diagnostic::error(
                codes::SYNTAX,
                f.span,
                format!("operand of `{op}` must be an expression"),
            )),
        }
    }

    fn or_level(&mut self) -> PResult<Node> {
        let mut left = self.and_level()?;
        while self.at(&Tok::OrOr) || self.at_kw("or") {
            self.bump();
            let l = Self::want_formula(left, "or")?;
            let r = Self::want_formula(self.and_level()?, "or")?;
            let span = l.span.join(r.span);
            left = Node::Formula(SFormula {
                kind: FormulaKind::Or(Box::new(l), Box::new(r)),
                span,
            });
        }
        Ok(left)
    }

    fn and_level(&mut self) -> PResult<Node> {
        let mut left = self.not_level()?;
        while self.at(&Tok::AndAnd) || self.at_kw("and") {
            self.bump();
            let l = Self::want_formula(left, "and")?;
            let r = Self::want_formula(self.not_level()?, "and")?;
            let span = l.span.join(r.span);
            left = Node::Formula(SFormula {
                kind: FormulaKind::And(Box::new(l), Box::new(r)),
                span,
            });
        }
        Ok(left)
    }

    fn not_level(&mut self) -> PResult<Node> {
        if self.at(&Tok::Bang) || self.at_kw("not") {
            self.enter()?;
            let start = self.bump().span;
            let inner = Self::want_formula(self.not_level()?, "not")?;
            self.depth -= 1;
            let span = start.join(inner.span);
            return Ok(Node::Formula(SFormula {
                kind: FormulaKind::Not(Box::new(inner)),
                span,
            }));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Node> {
        let left = self.additive()?;
        let op = match self.peek().tok {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Eq => CmpOp::Eq,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            _ => return Ok(left),
        };
        let op_span = self.bump().span;
        let l = Self::want_expr(left, op.symbol())?;
        let r = match self.additive()? {
            Node::Expr(e) => e,
            Node::Formula(f) => {
                return Err(Diagnostic::error(
                    codes::SYNTAX,
                    f.span,
                    format!("operand of `{}` must be an expression", op.symbol()),
                ))
            }
        };
        if matches!(self.peek().tok, Tok::Lt | Tok::Le | Tok::Eq | Tok::Ge | Tok::Gt) {
            return Err(Diagnostic::error(
                codes::SYNTAX,
                self.peek().span,
                "comparisons cannot be chained",
            ));
        }
        let span = l.span.join(r.span).join(op_span);
        Ok(Node::Formula(SFormula {
            kind: FormulaKind::Cmp(l, op, r),
            span,
        }))
    }

    fn additive(&mut self) -> PResult<Node> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(left),
            };
            let sym = if op == BinOp::Add { "+" } else { "-" };
            self.bump();
            let l = Self::want_expr(left, sym)?;
            let r = Self::want_expr(self.multiplicative()?, sym)?;
            let span = l.span.join(r.span);
            left = Node::Expr(SExpr {
                kind: ExprKind::Bin(op, Box::new(l), Box::new(r)),
                span,
            });
        }
    }

    fn multiplicative(&mut self) -> PResult<Node> {
        let mut left = self.unary()?;
        while self.at(&Tok::Star) {
            self.bump();
            let l = Self::want_expr(left, "*")?;
            let r = Self::want_expr(self.unary()?, "*")?;
            let span = l.span.join(r.span);
            left = Node::Expr(SExpr {
                kind: ExprKind::Bin(BinOp::Mul, Box::new(l), Box::new(r)),
                span,
            });
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Node> {
        if self.at(&Tok::Minus) {
            self.enter()?;
            let start = self.bump().span;
            let inner = Self::want_expr(self.unary()?, "-")?;
            self.depth -= 1;
            let span = start.join(inner.span);
            return Ok(Node::Expr(SExpr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            }));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Node> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(v) => {
                self.bump();
                Ok(Node::Expr(SExpr {
                    kind: ExprKind::Num(*v),
                    span: t.span,
                }))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                let kind = if s == "true" {
                    FormulaKind::True
                } else {
                    FormulaKind::False
                };
                Ok(Node::Formula(SFormula { kind, span: t.span }))
            }
            Tok::Ident(s) if !is_keyword(s) => {
                self.bump();
                Ok(Node::Expr(SExpr {
                    kind: ExprKind::Name(s.clone()),
                    span: t.span,
                }))
            }
            Tok::LParen => {
                self.enter()?;
                self.bump();
                let inner = self.or_level()?;
                let end = self.expect(Tok::RParen)?;
                self.depth -= 1;
                let span = t.span.join(end);
                Ok(match inner {
                    Node::Expr(e) => Node::Expr(SExpr { span, ..e }),
                    Node::Formula(f) => Node::Formula(SFormula { span, ..f }),
                })
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    /// `name(args)` or `name(args)=reading`, used by the history syntax.
    pub(crate) fn event(&mut self) -> PResult<(Ident, Vec<Spanned>, Option<Spanned>)> {
        let name = self.ident("action name")?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.signed_number()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let reading = if self.eat(&Tok::Eq) {
            Some(self.signed_number()?)
        } else {
            None
        };
        Ok((name, args, reading))
    }

    fn signed_number(&mut self) -> PResult<(f64, SourceSpan)> {
        let start = self.peek().span;
        let neg = self.eat(&Tok::Minus);
        match self.peek().tok {
            Tok::Number(v) => {
                let end = self.bump().span;
                Ok((if neg { -v } else { v }, start.join(end)))
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    /// Consumes separators between history events; returns false at end of input.
    pub(crate) fn event_separator(&mut self) -> PResult<bool> {
        self.skip_newlines();
        if self.at(&Tok::Eof) {
            return Ok(false);
        }
        if self.eat(&Tok::Semi) {
            self.skip_newlines();
            // trailing separator
            return Ok(!self.at(&Tok::Eof));
        }
        Err(self.unexpected("`;` or end of input"))
    }

    pub(crate) fn at_eof(&mut self) -> bool {
        self.skip_newlines();
        self.at(&Tok::Eof)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn formula(src: &str) -> PResult<SFormula> {
        let mut p = Parser::new(src)?;
        let f = p.formula()?;
        p.expect_eof()?;
        Ok(f)
    }

    #[test]
    fn parenthesised_groups_are_classified_after_parsing() {
        assert!(matches!(formula("(h - 1) <= 5").unwrap().kind, FormulaKind::Cmp(..)));
        assert!(matches!(
            formula("(h <= 5) and (h >= 1)").unwrap().kind,
            FormulaKind::And(..)
        ));
        assert!(matches!(formula("((h)) <= 5").unwrap().kind, FormulaKind::Cmp(..)));
        assert!(matches!(
            formula("not (h <= 5) or false").unwrap().kind,
            FormulaKind::Or(..)
        ));
    }

    #[test]
    fn rejects_mixed_kinds() {
        assert!(formula("h + 1").is_err());
        assert!(formula("(h <= 5) + 1 <= 2").is_err());
        assert!(formula("h <= 5 <= 6").is_err());
        assert!(formula("not h").is_err());
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = format!("{}h{} <= 1", "(".repeat(10_000), ")".repeat(10_000));
        let err = formula(&src).unwrap_err();
        assert_eq!(err.code, codes::SYNTAX);
        let src = format!("{}h <= 1", "-".repeat(10_000));
        assert!(formula(&src).is_err());
    }
}
