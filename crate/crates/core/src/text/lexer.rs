use std::fmt;

use serde::{Deserialize, Serialize};

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub fn new(file: &str, line: usize, column: usize) -> Self {
        SourceSpan {
            file: file.to_string(),
            line: line.max(1),
            column: column.max(1),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

// Longest first.
const PUNCTS: &[&str] = &[
    ":=", "..", "<>", "!=", "<=", ">=", "->", ";", ":", ",", "(", ")", "{", "}", "=", "<", ">", "-",
];

/// Splits text into identifiers, integers and punctuation; skips `//` and `/* */` comments.
pub fn tokenize(text: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start = SourceSpan::new(file, line, col);
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return Err(ParseError::syntax(start, "unterminated comment"));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let span = SourceSpan::new(file, line, col);
        if c.is_alphabetic() || c == '_' {
            let start = i;
            let mut n = 0;
            while start + n < chars.len() && (chars[start + n].is_alphanumeric() || chars[start + n] == '_') {
                n += 1;
            }
            let word: String = chars[start..start + n].iter().collect();
            advance(&mut i, &mut line, &mut col, n);
            out.push(Token {
                tok: Tok::Ident(word),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut n = 0;
            while start + n < chars.len() && chars[start + n].is_ascii_digit() {
                n += 1;
            }
            let digits: String = chars[start..start + n].iter().collect();
            let value = digits
                .parse::<i64>()
                .map_err(|_| ParseError::syntax(span.clone(), format!("integer `{digits}` out of range")))?;
            advance(&mut i, &mut line, &mut col, n);
            out.push(Token {
                tok: Tok::Int(value),
                span,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
            return Err(ParseError::syntax(span, format!("unexpected character `{c}`")));
        };
        advance(&mut i, &mut line, &mut col, p.len());
        out.push(Token {
            tok: Tok::Punct(p),
            span,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(file, line, col),
    });
    Ok(out)
}

/// Cursor over a token stream with the usual expect/eat helpers.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    pub fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::syntax(self.span(), format!("expected {wanted}, found {}", self.peek()))
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<SourceSpan, ParseError> {
        if self.at_keyword(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<SourceSpan, ParseError> {
        if self.at_punct(p) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    /// An identifier that is not one of `reserved`.
    pub fn expect_ident(&mut self, reserved: &[&str]) -> Result<(String, SourceSpan), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !reserved.contains(&s.as_str()) => {
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    pub fn expect_int(&mut self) -> Result<(i64, SourceSpan), ParseError> {
        let negative = self.at_punct("-");
        let span = self.span();
        if negative {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok((if negative { -i } else { i }, span))
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }
}
