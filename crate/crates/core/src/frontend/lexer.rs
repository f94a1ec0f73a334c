use super::span::Span;
use super::ParseError;
use crate::float::{parse_hex_float, Precision};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Integer literal magnitude; `long` when suffixed with `L`.
    Int { value: u64, long: bool },
    /// Float literal, already rounded to its precision.
    Float { bits: u64, prec: Precision },
    At,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Dot,
    Assign,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int { .. } => "integer literal".into(),
            Tok::Float { .. } => "float literal".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::At => "@",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::Assign => "=",
            Tok::Arrow => "=>",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer { src, bytes: src.as_bytes(), pos: 0, line: 1, col: 1 }.run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer<'_> {
    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let (start, line, col) = (self.pos, self.line, self.col);
            let Some(&c) = self.bytes.get(self.pos) else {
                out.push(Token { tok: Tok::Eof, span: Span::new(start, start, line, col) });
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == b'_' {
                while self.peek().is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_') {
                    self.bump();
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            } else if c.is_ascii_digit() {
                self.number(start, line, col)?
            } else {
                self.bump();
                let two = |lx: &mut Self, next: u8, yes: Tok, no: Tok| {
                    if lx.peek() == Some(next) {
                        lx.bump();
                        yes
                    } else {
                        no
                    }
                };
                match c {
                    b'@' => Tok::At,
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b'{' => Tok::LBrace,
                    b'}' => Tok::RBrace,
                    b'[' => Tok::LBracket,
                    b']' => Tok::RBracket,
                    b',' => Tok::Comma,
                    b':' => Tok::Colon,
                    b';' => Tok::Semi,
                    b'.' => Tok::Dot,
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'/' => Tok::Slash,
                    b'%' => Tok::Percent,
                    b'<' => two(&mut self, b'=', Tok::Le, Tok::Lt),
                    b'>' => two(&mut self, b'=', Tok::Ge, Tok::Gt),
                    b'!' => two(&mut self, b'=', Tok::NotEq, Tok::Bang),
                    b'=' => match self.peek() {
                        Some(b'=') => {
                            self.bump();
                            Tok::EqEq
                        }
                        Some(b'>') => {
                            self.bump();
                            Tok::Arrow
                        }
                        _ => Tok::Assign,
                    },
                    b'&' if self.peek() == Some(b'&') => {
                        self.bump();
                        Tok::AndAnd
                    }
                    b'|' if self.peek() == Some(b'|') => {
                        self.bump();
                        Tok::OrOr
                    }
                    _ => {
                        let ch = self.src[start..].chars().next().unwrap_or('?');
                        return Err(ParseError::new(
                            Span::new(start, start + ch.len_utf8(), line, col),
                            format!("unexpected character `{ch}`"),
                            vec![],
                        ));
                    }
                }
            };
            out.push(Token { tok, span: Span::new(start, self.pos, line, col) });
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.bytes.get(self.pos + k).copied()
    }

    fn bump(&mut self) {
        if let Some(&b) = self.bytes.get(self.pos) {
            self.pos += 1;
            if b == b'\n' {
                self.line += 1;
                self.col = 1;
            } else if b & 0xC0 != 0x80 {
                self.col += 1;
            }
        }
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => self.bump(),
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while self.peek().is_some_and(|b| b != b'\n') {
                        self.bump();
                    }
                }
                Some(b'/') if self.peek_at(1) == Some(b'*') => {
                    let (start, line, col) = (self.pos, self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match self.peek() {
                            None => {
                                return Err(ParseError::new(
                                    Span::new(start, self.pos, line, col),
                                    "unterminated block comment".into(),
                                    vec!["`*/`".into()],
                                ))
                            }
                            Some(b'*') if self.peek_at(1) == Some(b'/') => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            _ => self.bump(),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self, start: usize, line: u32, col: u32) -> Result<Tok, ParseError> {
        let err = |lx: &Self, msg: String| ParseError::new(Span::new(start, lx.pos, line, col), msg, vec![]);
        if self.peek() == Some(b'0') && matches!(self.peek_at(1), Some(b'x' | b'X')) {
            self.bump();
            self.bump();
            let mut is_float = false;
            while let Some(b) = self.peek() {
                if b.is_ascii_hexdigit() || b == b'.' {
                    is_float |= b == b'.';
                    self.bump();
                } else if b == b'p' || b == b'P' {
                    is_float = true;
                    self.bump();
                    if matches!(self.peek(), Some(b'+' | b'-')) {
                        self.bump();
                    }
                    while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                        self.bump();
                    }
                    break;
                } else {
                    break;
                }
            }
            let text = &self.src[start..self.pos];
            if is_float {
                let prec = self.float_suffix();
                return parse_hex_float(text, prec)
                    .map(|bits| Tok::Float { bits, prec })
                    .ok_or_else(|| err(self, format!("malformed hex float literal `{text}`")));
            }
            let long = self.long_suffix();
            return u64::from_str_radix(&text[2..], 16)
                .map(|value| Tok::Int { value, long })
                .map_err(|_| err(self, format!("malformed hex literal `{text}`")));
        }

        let mut is_float = false;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some(b'.') && self.peek_at(1).is_some_and(|b| b.is_ascii_digit()) {
            is_float = true;
            self.bump();
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = (self.pos, self.line, self.col);
            self.bump();
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.bump();
            }
            if self.peek().is_some_and(|b| b.is_ascii_digit()) {
                is_float = true;
                while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                (self.pos, self.line, self.col) = save;
            }
        }
        let text = self.src[start..self.pos].to_string();
        if matches!(self.peek(), Some(b'f' | b'F' | b'd' | b'D')) && !self.ident_continues_at(1) {
            is_float = true;
        }
        if is_float {
            let prec = self.float_suffix();
            let bits = match prec {
                Precision::F64 => text.parse::<f64>().map(f64::to_bits).ok(),
                Precision::F32 => text.parse::<f32>().map(|x| u64::from(x.to_bits())).ok(),
            };
            return bits
                .map(|bits| Tok::Float { bits, prec })
                .ok_or_else(|| err(self, format!("malformed float literal `{text}`")));
        }
        let long = self.long_suffix();
        text.parse::<u64>()
            .map(|value| Tok::Int { value, long })
            .map_err(|_| err(self, format!("integer literal `{text}` is too large")))
    }

    fn ident_continues_at(&self, k: usize) -> bool {
        self.peek_at(k).is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
    }

    fn float_suffix(&mut self) -> Precision {
        match self.peek() {
            Some(b'f' | b'F') if !self.ident_continues_at(1) => {
                self.bump();
                Precision::F32
            }
            Some(b'd' | b'D') if !self.ident_continues_at(1) => {
                self.bump();
                Precision::F64
            }
            _ => Precision::F64,
        }
    }

    fn long_suffix(&mut self) -> bool {
        if matches!(self.peek(), Some(b'L' | b'l')) && !self.ident_continues_at(1) {
            self.bump();
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers() {
        assert_eq!(toks("1")[0], Tok::Int { value: 1, long: false });
        assert_eq!(toks("7L")[0], Tok::Int { value: 7, long: true });
        assert_eq!(toks("1.5")[0], Tok::Float { bits: 1.5f64.to_bits(), prec: Precision::F64 });
        assert_eq!(toks("1.5f")[0], Tok::Float { bits: u64::from(1.5f32.to_bits()), prec: Precision::F32 });
        assert_eq!(toks("1e308")[0], Tok::Float { bits: 1e308f64.to_bits(), prec: Precision::F64 });
        assert_eq!(toks("0x1p-2")[0], Tok::Float { bits: 0.25f64.to_bits(), prec: Precision::F64 });
        assert_eq!(toks("0xffL")[0], Tok::Int { value: 255, long: true });
        // `1.toFloat` is a method call on an integer literal
        assert_eq!(toks("1.toFloat")[..3], [Tok::Int { value: 1, long: false }, Tok::Dot, Tok::Ident("toFloat".into())]);
    }

    #[test]
    fn operators_and_positions() {
        let ts = tokenize("a <= b\n  && !c => d").unwrap();
        let kinds: Vec<_> = ts.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("a".into()),
                Tok::Le,
                Tok::Ident("b".into()),
                Tok::AndAnd,
                Tok::Bang,
                Tok::Ident("c".into()),
                Tok::Arrow,
                Tok::Ident("d".into()),
                Tok::Eof
            ]
        );
        assert_eq!((ts[3].span.line, ts[3].span.col), (2, 3));
    }

    #[test]
    fn comments_and_errors() {
        assert_eq!(toks("// hi\n/* x */ y"), vec![Tok::Ident("y".into()), Tok::Eof]);
        assert!(tokenize("/* open").is_err());
        let e = tokenize("a # b").unwrap_err();
        assert_eq!((e.span.line, e.span.col), (1, 3));
    }
}
