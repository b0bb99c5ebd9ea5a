use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Unsigned decimal literal as written.
    Number(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest symbols first so that `<+>` wins over `<`.
const SYMBOLS: &[&str] = &[
    "<+>", "<*>", "<-", "->", "=>", "::", "(", ")", "[", "]", "{", "}", ",", ";", ":", ".", "=", "+", "*", "/", "-",
];

pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col };
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            col += (i - start) as u32;
            out.push(Token { tok: Tok::Ident(text[start..i].to_string()), span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            col += (i - start) as u32;
            out.push(Token { tok: Tok::Number(text[start..i].to_string()), span });
            continue;
        }
        match SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len() as u32;
                out.push(Token { tok: Tok::Sym(sym), span });
            }
            None => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    span,
                    expected: vec!["a token".to_string()],
                    found: format!("character {ch:?}"),
                });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = lex("x <+> 1.5 // note\r\n  y <- z;").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("x".into()),
                Tok::Sym("<+>"),
                Tok::Number("1.5".into()),
                Tok::Ident("y".into()),
                Tok::Sym("<-"),
                Tok::Ident("z".into()),
                Tok::Sym(";"),
                Tok::Eof
            ]
        );
        assert_eq!((toks[3].span.line, toks[3].span.col), (2, 3));
    }

    #[test]
    fn rejects_unknown_characters() {
        let err = lex("x @ y").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 3));
    }
}
