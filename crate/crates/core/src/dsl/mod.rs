//! The `.bat` theory format.
//!
//! ```text
//! theory robot1d
//! fluent h : real            # distance to the wall
//! init h ~ uniform(2.0, 12.0)
//! action fwd(x: real) {
//!   noisy y ~ gaussian(mean = x, stddev = 1.0)
//!   poss   true
//!   effect h := h - y
//! }
//! action sonar() senses z {
//!   poss       h >= 0
//!   likelihood gaussian(mean = h, stddev = 1.0)
//! }
//! ```
//!
//! Statements are line-oriented; newlines inside parentheses are ignored.
//! Densities are `uniform(lo, hi)`, `gaussian(mean = e, stddev = c)`,
//! `discrete(v: m, ...)` and `point(e)`. Conditions use `<`, `<=`, `=`,
//! `>=`, `>` joined by `and`, `or`, `not` (or `&&`, `||`, `!`).

mod diag;
mod format;
mod lexer;
mod lower;
mod parser;
mod syntax;

pub use diag::{codes, Diagnostic, Severity, SourceSpan};
pub use format::{format_theory, write_density, write_expr, write_formula};
pub use lower::TABLE_MASS_TOLERANCE;
pub(crate) use parser::Parser;

use crate::model::{Formula, Theory};

/// Parses and validates a theory. Warnings are dropped; use
/// [`check_theory`] to see them.
pub fn parse_theory(text: &str) -> Result<Theory, Vec<Diagnostic>> {
    match check_theory(text) {
        (Some(t), _) => Ok(t),
        (None, diags) => Err(diags),
    }
}

/// Parses and validates, returning every diagnostic (errors and warnings).
/// The theory is present iff there are no errors.
pub fn check_theory(text: &str) -> (Option<Theory>, Vec<Diagnostic>) {
    let st = match Parser::new(text).and_then(|mut p| p.theory()) {
        Ok(st) => st,
        Err(d) => return (None, vec![d]),
    };
    let mut lowerer = lower::Lowerer::default();
    let theory = lowerer.theory(&st);
    (theory, lowerer.diags)
}

/// Like [`check_theory`] for raw bytes; invalid UTF-8 is a syntax error at
/// the first bad byte.
pub fn check_theory_bytes(bytes: &[u8]) -> (Option<Theory>, Vec<Diagnostic>) {
    match std::str::from_utf8(bytes) {
        Ok(text) => check_theory(text),
        Err(e) => {
            let start = e.valid_up_to();
            let prefix = &bytes[..start];
            let line = prefix.iter().filter(|b| **b == b'\n').count() + 1;
            let line_start = prefix.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1);
            // prefix is valid UTF-8 by construction
            let column = std::str::from_utf8(&prefix[line_start..]).map_or(1, |s| s.chars().count() + 1);
            let end = (start + e.error_len().unwrap_or(1)).min(bytes.len());
            let span = SourceSpan {
                start,
                end,
                line,
                column,
            };
            (
                None,
                vec![Diagnostic::error(codes::SYNTAX, span, "input is not valid UTF-8")],
            )
        }
    }
}

/// Parses a condition without resolving names.
pub fn parse_formula(text: &str) -> Result<Formula, Diagnostic> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(lower::Lowerer::default().unchecked_formula(&f))
}

/// Parses a query over `theory`'s fluents.
pub fn parse_query(text: &str, theory: &Theory) -> Result<Formula, Vec<Diagnostic>> {
    let mut p = Parser::new(text).map_err(|d| vec![d])?;
    let f = p.formula().map_err(|d| vec![d])?;
    p.expect_eof().map_err(|d| vec![d])?;
    let fluents: Vec<&str> = theory.fluent_names().collect();
    let mut lowerer = lower::Lowerer::default();
    let q = lowerer.query(&f, &fluents);
    if lowerer.diags.is_empty() {
        Ok(q)
    } else {
        Err(lowerer.diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    pub(crate) const ROBOT1D: &str = include_str!("../../theories/robot1d.bat");

    fn codes_of(src: &str) -> Vec<&'static str> {
        check_theory(src)
            .1
            .into_iter()
            .filter(|d| d.is_error())
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn parses_robot1d() {
        let t = parse_theory(ROBOT1D).unwrap();
        assert_eq!(t.name, "robot1d");
        assert_eq!(t.fluents.len(), 1);
        assert_eq!(t.fluents[0].init, Density::Uniform { lo: 2.0, hi: 12.0 });
        assert_eq!(t.actions.len(), 2);
        let fwd = t.action("fwd").unwrap();
        assert_eq!(fwd.params, vec!["x"]);
        let noise = fwd.noise.as_ref().unwrap();
        assert_eq!(noise.latent, "y");
        assert_eq!(
            noise.density,
            Density::Gaussian {
                mean: Expr::var("x"),
                stddev: 1.0
            }
        );
        assert_eq!(fwd.effects["h"], Expr::sub(Expr::var("h"), Expr::var("y")));
        let sonar = t.action("sonar").unwrap();
        assert!(sonar.is_sensing());
        assert_eq!(sonar.poss, Formula::cmp(Expr::var("h"), CmpOp::Ge, Expr::Const(0.0)));
        assert_eq!(check_theory(ROBOT1D).1, vec![]);
    }

    #[test]
    fn effect_on_undeclared_fluent() {
        let src = ROBOT1D.replace("effect h := h - y", "effect g := h - y");
        let (t, diags) = check_theory(&src);
        assert!(t.is_none());
        let d = diags.iter().find(|d| d.code == codes::UNKNOWN_NAME).unwrap();
        assert_eq!(&src[d.span.start..d.span.end], "g");
        assert_eq!((d.span.line, d.span.column), (7, 10));
    }

    #[test]
    fn negative_stddev() {
        let src = ROBOT1D.replace("gaussian(mean = h, stddev = 1.0)", "gaussian(mean=h, stddev=-1)");
        let diags = parse_theory(&src).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::BAD_STDDEV);
        assert_eq!(&src[diags[0].span.start..diags[0].span.end], "-1");
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            codes_of("theory t\nfluent h : real\ninit h ~ uniform(0 1)\n"),
            vec![codes::SYNTAX]
        );
        assert_eq!(
            codes_of("theory t\nfluent h : real\ninit h ~ discrete(0: 0.5, 1: 0.4)\n"),
            vec![codes::TABLE_NOT_NORMALIZED]
        );
        assert_eq!(
            codes_of(
                "theory t\nfluent h : real\ninit h ~ uniform(0, 1)\n\
                 action a(x) senses z {\n noisy y ~ gaussian(mean = x, stddev = 1)\n likelihood uniform(0, 1)\n}\n"
            ),
            vec![codes::BOTH_NOISE_KINDS]
        );
        assert_eq!(
            codes_of("theory t\nfluent h : real\nfluent h : real\ninit h ~ uniform(0, 1)\n"),
            vec![codes::DUPLICATE]
        );
        assert_eq!(codes_of("theory t\nfluent h : real\n"), vec![codes::BAD_DENSITY]);
        assert_eq!(
            codes_of("theory t\nfluent h : real\ninit h ~ uniform(1, 1)\n"),
            vec![codes::BAD_DENSITY]
        );
        assert_eq!(
            codes_of("theory t\nfluent h : real\ninit h ~ uniform(0, 1)\naction s() senses z {\n effect h := 1\n likelihood uniform(0, 1)\n}\n"),
            vec![codes::BAD_SENSING]
        );
        assert_eq!(
            codes_of("theory t\nfluent h : int\ninit h ~ uniform(0, 1)\n"),
            vec![codes::BAD_TYPE]
        );
        assert_eq!(
            codes_of("theory t\nfluent h : real\ninit h ~ gaussian(mean = h, stddev = 1)\n"),
            vec![codes::UNKNOWN_NAME]
        );
        assert_eq!(
            codes_of("theory t\nfluent h : real\ninit h ~ uniform(0, 1)\naction a(x) {\n noisy y ~ gaussian(mean = h, stddev = 1)\n effect h := y\n}\n"),
            vec![codes::UNKNOWN_NAME]
        );
    }

    #[test]
    fn warnings_do_not_block() {
        let src = "theory t\nfluent h : real\ninit h ~ uniform(0, 1)\naction a(x) {\n noisy y ~ gaussian(mean = x, stddev = 1)\n effect h := h\n}\n";
        let (t, diags) = check_theory(src);
        assert!(t.is_some());
        let mut got: Vec<_> = diags.iter().map(|d| (d.severity, d.code)).collect();
        got.sort();
        assert_eq!(
            got,
            vec![
                (Severity::Warning, codes::UNUSED_LATENT),
                (Severity::Warning, codes::SELF_ASSIGNMENT)
            ]
        );
    }

    #[test]
    fn canonical_format() {
        let t = parse_theory(ROBOT1D).unwrap();
        let text = format_theory(&t);
        assert_eq!(
            text,
            "theory robot1d\nfluent h : real\ninit h ~ uniform(2, 12)\n\n\
             action fwd(x: real) {\n  noisy y ~ gaussian(mean = x, stddev = 1)\n  poss true\n  effect h := h - y\n}\n\n\
             action sonar() senses z {\n  poss h >= 0\n  likelihood gaussian(mean = h, stddev = 1)\n}\n"
        );
        assert_eq!(parse_theory(&text).unwrap(), t);
        assert_eq!(format_theory(&parse_theory(&text).unwrap()), text);
    }

    #[test]
    fn actions_are_sorted_on_output() {
        let src = "theory t\nfluent h : real\ninit h ~ uniform(0, 1)\naction zed() {\n}\naction alpha() {\n}\n";
        let text = format_theory(&parse_theory(src).unwrap());
        assert!(text.find("alpha").unwrap() < text.find("zed").unwrap());
    }

    #[test]
    fn zero_actions() {
        let t = parse_theory("theory t\nfluent h : real\ninit h ~ point(3)\n").unwrap();
        assert_eq!(format_theory(&t), "theory t\nfluent h : real\ninit h ~ point(3)\n");
    }

    #[test]
    fn precedence_survives_printing() {
        for src in [
            "h - (y - 1)",
            "-(h * 2) + 3 * -h",
            "h * (h + 1) - --h",
            "(h - 1) * (2 - h)",
        ] {
            let phi = parse_formula(&format!("{src} <= 0")).unwrap();
            let again = parse_formula(&phi.to_string()).unwrap();
            assert_eq!(phi, again, "{src}");
        }
        let phi = parse_formula("not (a <= 1 or b > 2) and (c = 3 or true)").unwrap();
        assert_eq!(parse_formula(&phi.to_string()).unwrap(), phi);
    }

    #[test]
    fn query_names_are_checked() {
        let t = parse_theory(ROBOT1D).unwrap();
        assert!(parse_query("h <= 7", &t).is_ok());
        let err = parse_query("h + g <= 7", &t).unwrap_err();
        assert_eq!(err[0].code, codes::UNKNOWN_NAME);
        assert_eq!(err[0].span.start, 4);
    }

    #[test]
    fn invalid_utf8_has_a_span() {
        let (t, diags) = check_theory_bytes(b"theory t\nfl\xffuent");
        assert!(t.is_none());
        assert_eq!(diags[0].span.start, 11);
        assert_eq!((diags[0].span.line, diags[0].span.column), (2, 3));
    }
}
