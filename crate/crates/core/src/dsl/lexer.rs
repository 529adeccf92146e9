use super::diag::{codes, Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Assign, // :=
    Tilde,
    Eq, // = or ==
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Semi,
    Bang,
    AndAnd,
    OrOr,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Assign => ":=",
            Tok::Tilde => "~",
            Tok::Eq => "=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Semi => ";",
            Tok::Bang => "not",
            Tok::AndAnd => "and",
            Tok::OrOr => "or",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Splits `src` into tokens. Newlines inside parentheses are dropped so that
/// long argument lists may wrap; `#` starts a comment running to end of line.
pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    let mut line = 1;
    let mut line_start = 0;
    let mut depth = 0usize;

    let span_at = |start: usize, end: usize, line: usize, line_start: usize| SourceSpan {
        start,
        end,
        line,
        column: src[line_start..start].chars().count() + 1,
    };

    while let Some(&(i, c)) = chars.peek() {
        let single = |tok: Tok| Token {
            tok,
            span: span_at(i, i + c.len_utf8(), line, line_start),
        };
        match c {
            '\n' => {
                chars.next();
                if depth == 0 {
                    out.push(single(Tok::Newline));
                }
                line += 1;
                line_start = i + 1;
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = i;
                while let Some(&(j, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        end = j + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(src[i..end].to_string()),
                    span: span_at(i, end, line, line_start),
                });
            }
            c if c.is_ascii_digit() || c == '.' => {
                let end = scan_number(src, i);
                for _ in src[i..end].chars() {
                    chars.next();
                }
                let span = span_at(i, end, line, line_start);
                let text = &src[i..end];
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push(Token {
                        tok: Tok::Number(v),
                        span,
                    }),
                    Ok(_) => {
                        return Err(Diagnostic::error(
                            codes::SYNTAX,
                            span,
                            format!("number `{text}` is out of range"),
                        ))
                    }
                    Err(_) => {
                        return Err(Diagnostic::error(
                            codes::SYNTAX,
                            span,
                            format!("malformed number `{text}`"),
                        ))
                    }
                }
            }
            _ => {
                chars.next();
                let next = chars.peek().map(|&(_, c)| c);
                let (tok, len) = match (c, next) {
                    (':', Some('=')) => (Tok::Assign, 2),
                    ('=', Some('=')) => (Tok::Eq, 2),
                    ('<', Some('=')) => (Tok::Le, 2),
                    ('>', Some('=')) => (Tok::Ge, 2),
                    ('&', Some('&')) => (Tok::AndAnd, 2),
                    ('|', Some('|')) => (Tok::OrOr, 2),
                    ('(', _) => (Tok::LParen, 1),
                    (')', _) => (Tok::RParen, 1),
                    ('{', _) => (Tok::LBrace, 1),
                    ('}', _) => (Tok::RBrace, 1),
                    (',', _) => (Tok::Comma, 1),
                    (':', _) => (Tok::Colon, 1),
                    ('~', _) => (Tok::Tilde, 1),
                    ('=', _) => (Tok::Eq, 1),
                    ('<', _) => (Tok::Lt, 1),
                    ('>', _) => (Tok::Gt, 1),
                    ('+', _) => (Tok::Plus, 1),
                    ('-', _) | ('−', _) => (Tok::Minus, 1),
                    ('*', _) | ('×', _) => (Tok::Star, 1),
                    (';', _) => (Tok::Semi, 1),
                    ('!', _) | ('¬', _) => (Tok::Bang, 1),
                    ('≤', _) => (Tok::Le, 1),
                    ('≥', _) => (Tok::Ge, 1),
                    ('∧', _) => (Tok::AndAnd, 1),
                    ('∨', _) => (Tok::OrOr, 1),
                    _ => {
                        return Err(Diagnostic::error(
                            codes::SYNTAX,
                            span_at(i, i + c.len_utf8(), line, line_start),
                            format!("unexpected character {c:?}"),
                        ))
                    }
                };
                let mut end = i + c.len_utf8();
                if len == 2 {
                    let (j, c2) = chars.next().expect("peeked");
                    end = j + c2.len_utf8();
                }
                match tok {
                    Tok::LParen => depth += 1,
                    Tok::RParen => depth = depth.saturating_sub(1),
                    _ => {}
                }
                out.push(Token {
                    tok,
                    span: span_at(i, end, line, line_start),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span_at(src.len(), src.len(), line, line_start),
    });
    Ok(out)
}

fn scan_number(src: &str, start: usize) -> usize {
    let bytes = src.as_bytes();
    let mut i = start;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_numbers() {
        assert_eq!(
            toks("h := h - 2.5e1 # tail"),
            vec![
                Tok::Ident("h".into()),
                Tok::Assign,
                Tok::Ident("h".into()),
                Tok::Minus,
                Tok::Number(25.0),
                Tok::Eof
            ]
        );
        assert_eq!(toks("a ≤ b ≥ c"), toks("a <= b >= c"));
    }

    #[test]
    fn newlines_inside_parens_are_dropped() {
        assert_eq!(toks("f(1,\n2)\n"), toks("f(1, 2)\n"));
        assert!(toks("a\nb").contains(&Tok::Newline));
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let t = lex("ab\n  cd").unwrap();
        assert_eq!(
            t[2].span,
            SourceSpan {
                start: 5,
                end: 7,
                line: 2,
                column: 3
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(lex("a $ b").unwrap_err().span.start, 2);
        assert!(lex("1e999").is_err());
        assert!(lex(".").is_err());
    }
}
