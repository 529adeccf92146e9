use std::fmt::{self, Write};

use crate::model::{Density, Expr, Formula, Theory};

fn number(f: &mut impl Write, v: f64) -> fmt::Result {
    // Display prints the shortest string that parses back to the same f64
    write!(f, "{v}")
}

fn expr_prec(f: &mut impl Write, e: &Expr, min: u8) -> fmt::Result {
    let prec = match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Const(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
        Expr::Const(_) | Expr::Var(_) => 4,
    };
    let paren = prec < min;
    if paren {
        f.write_char('(')?;
    }
    match e {
        Expr::Const(v) => number(f, *v)?,
        Expr::Var(n) => f.write_str(n)?,
        Expr::Neg(a) => {
            f.write_char('-')?;
            expr_prec(f, a, 3)?;
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            expr_prec(f, a, 1)?;
            f.write_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " })?;
            expr_prec(f, b, 2)?;
        }
        Expr::Mul(a, b) => {
            expr_prec(f, a, 2)?;
            f.write_str(" * ")?;
            expr_prec(f, b, 3)?;
        }
    }
    if paren {
        f.write_char(')')?;
    }
    Ok(())
}

pub fn write_expr(f: &mut impl Write, e: &Expr) -> fmt::Result {
    expr_prec(f, e, 0)
}

fn formula_prec(f: &mut impl Write, phi: &Formula, min: u8) -> fmt::Result {
    let prec = match phi {
        Formula::Or(..) => 1,
        Formula::And(..) => 2,
        Formula::Not(_) => 3,
        _ => 4,
    };
    let paren = prec < min;
    if paren {
        f.write_char('(')?;
    }
    match phi {
        Formula::True => f.write_str("true")?,
        Formula::False => f.write_str("false")?,
        Formula::Cmp(a, op, b) => {
            write_expr(f, a)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, b)?;
        }
        Formula::Or(a, b) => {
            formula_prec(f, a, 1)?;
            f.write_str(" or ")?;
            formula_prec(f, b, 2)?;
        }
        Formula::And(a, b) => {
            formula_prec(f, a, 2)?;
            f.write_str(" and ")?;
            formula_prec(f, b, 3)?;
        }
        Formula::Not(a) => {
            f.write_str("not ")?;
            // `not (h <= 1)` reads better than `not h <= 1`
            formula_prec(f, a, if matches!(**a, Formula::Cmp(..)) { 5 } else { 3 })?;
        }
    }
    if paren {
        f.write_char(')')?;
    }
    Ok(())
}

pub fn write_formula(f: &mut impl Write, phi: &Formula) -> fmt::Result {
    formula_prec(f, phi, 0)
}

pub fn write_density(f: &mut impl Write, d: &Density) -> fmt::Result {
    match d {
        Density::Uniform { lo, hi } => {
            f.write_str("uniform(")?;
            number(f, *lo)?;
            f.write_str(", ")?;
            number(f, *hi)?;
        }
        Density::Gaussian { mean, stddev } => {
            f.write_str("gaussian(mean = ")?;
            write_expr(f, mean)?;
            f.write_str(", stddev = ")?;
            number(f, *stddev)?;
        }
        Density::Discrete(table) => {
            f.write_str("discrete(")?;
            for (i, (v, m)) in table.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                number(f, *v)?;
                f.write_str(": ")?;
                number(f, *m)?;
            }
        }
        Density::Point(e) => {
            f.write_str("point(")?;
            write_expr(f, e)?;
        }
    }
    f.write_char(')')
}

/// Canonical text: fluents in declaration order, actions sorted by name,
/// items in the fixed order noisy / poss / effects / likelihood.
pub fn format_theory(t: &Theory) -> String {
    let mut out = String::new();
    // writing to a String cannot fail
    let _ = write_theory(&mut out, t);
    out
}

fn write_theory(out: &mut String, t: &Theory) -> fmt::Result {
    writeln!(out, "theory {}", t.name)?;
    for fl in &t.fluents {
        writeln!(out, "fluent {} : real", fl.name)?;
    }
    for fl in &t.fluents {
        write!(out, "init {} ~ ", fl.name)?;
        write_density(out, &fl.init)?;
        out.push('\n');
    }
    for a in t.actions.values() {
        out.push('\n');
        let params: Vec<String> = a.params.iter().map(|p| format!("{p}: real")).collect();
        write!(out, "action {}({})", a.name, params.join(", "))?;
        if let Some(s) = &a.sensing {
            write!(out, " senses {}", s.reading)?;
        }
        out.push_str(" {\n");
        if let Some(n) = &a.noise {
            write!(out, "  noisy {} ~ ", n.latent)?;
            write_density(out, &n.density)?;
            out.push('\n');
        }
        out.push_str("  poss ");
        write_formula(out, &a.poss)?;
        out.push('\n');
        for (fluent, e) in &a.effects {
            write!(out, "  effect {fluent} := ")?;
            write_expr(out, e)?;
            out.push('\n');
        }
        if let Some(s) = &a.sensing {
            out.push_str("  likelihood ");
            write_density(out, &s.likelihood)?;
            out.push('\n');
        }
        out.push_str("}\n");
    }
    Ok(())
}
