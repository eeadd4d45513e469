use beepl_core::{PrimTy, Span};

use crate::diag::Diagnostic;

pub const KEYWORDS: &[&str] = &[
    "let", "in", "if", "then", "else", "match", "with", "for", "Up", "Down", "fun", "extern",
    "struct", "option", "ref", "some", "none", "pnone", "psome", "true", "false", "not", "unit",
    "bytes", "bool", "char", "int", "uint", "long", "ulong", "int8", "uint8", "int16", "uint16",
    "int32", "uint32", "int64", "uint64",
];

/// Identifiers with this prefix are reserved for generated code.
pub const RESERVED_PREFIX: &str = "__bpl_";

const PUNCTS: &[&str] = &[
    "...", ":=", "=>", "==", "!=", "<=", ">=", "<<", ">>", "&&", "||", "(", ")", "{", "}", "[", "]",
    ",", ";", ":", "=", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", ".",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokKind {
    Keyword,
    Ident,
    /// Magnitude and optional type suffix.
    Int(u64, Option<PrimTy>),
    Str(String),
    Punct,
    /// The `#section` attribute marker.
    Section,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is_kw(&self, k: &str) -> bool {
        self.kind == TokKind::Keyword && self.lexeme == k
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokKind::Punct && self.lexeme == p
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

fn suffix_ty(s: &str) -> Option<Option<PrimTy>> {
    Some(match s {
        "" => None,
        "L" | "l" => Some(PrimTy::LONG),
        "u" | "U" => Some(PrimTy::UINT),
        "ul" | "UL" | "uL" | "Ul" => Some(PrimTy::ULONG),
        "i8" => Some(PrimTy::I8),
        "u8" => Some(PrimTy::U8),
        "i16" => Some(PrimTy::I16),
        "u16" => Some(PrimTy::U16),
        "i32" => Some(PrimTy::INT),
        "u32" => Some(PrimTy::UINT),
        "i64" => Some(PrimTy::LONG),
        "u64" => Some(PrimTy::ULONG),
        _ => return None,
    })
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span { start: self.pos, end: self.pos, line: self.line, col: self.col }
    }

    fn finish(&self, mut sp: Span) -> Span {
        sp.end = self.pos;
        sp
    }

    fn skip_trivia(&mut self) -> Result<(), Diagnostic> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let sp = self.here();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek_at(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                return Err(Diagnostic::error("LexError", "unterminated block comment", self.finish(sp)))
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self) -> Result<Token, Diagnostic> {
        let sp = self.here();
        let start = self.pos;
        let hex = self.peek() == Some('0') && matches!(self.peek_at(1), Some('x') | Some('X'));
        let mag = if hex {
            self.bump();
            self.bump();
            let ds = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                self.bump();
            }
            let digits = &self.src[ds..self.pos];
            if digits.is_empty() {
                return Err(Diagnostic::error("LexError", "hex literal without digits", self.finish(sp)));
            }
            u64::from_str_radix(digits, 16)
        } else {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
            self.src[start..self.pos].parse::<u64>()
        };
        let ss = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.bump();
        }
        let suffix = &self.src[ss..self.pos];
        let span = self.finish(sp);
        let mag = mag.map_err(|_| Diagnostic::error("LexError", "integer literal exceeds 64 bits", span))?;
        let ty = suffix_ty(suffix)
            .ok_or_else(|| Diagnostic::error("LexError", format!("unknown literal suffix `{suffix}`"), span))?;
        Ok(Token { kind: TokKind::Int(mag, ty), lexeme: self.src[start..self.pos].to_string(), span })
    }

    fn string(&mut self) -> Result<Token, Diagnostic> {
        let sp = self.here();
        let start = self.pos;
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('0') => out.push('\0'),
                    Some('\\') => out.push('\\'),
                    Some('"') => out.push('"'),
                    _ => return Err(Diagnostic::error("LexError", "invalid escape in string", self.finish(sp))),
                },
                Some('\n') | None => {
                    return Err(Diagnostic::error("LexError", "unterminated string literal", self.finish(sp)))
                }
                Some(c) => out.push(c),
            }
        }
        Ok(Token { kind: TokKind::Str(out), lexeme: self.src[start..self.pos].to_string(), span: self.finish(sp) })
    }

    fn next_token(&mut self) -> Result<Option<Token>, Diagnostic> {
        self.skip_trivia()?;
        let sp = self.here();
        let Some(c) = self.peek() else { return Ok(None) };
        if c.is_ascii_digit() {
            return self.number().map(Some);
        }
        if c == '"' {
            return self.string().map(Some);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                self.bump();
            }
            while self.peek() == Some('\'') {
                self.bump();
            }
            let text = &self.src[start..self.pos];
            let span = self.finish(sp);
            if text.starts_with(RESERVED_PREFIX) {
                return Err(Diagnostic::error("LexError", format!("identifier `{text}` uses a reserved prefix"), span));
            }
            let kind = if KEYWORDS.contains(&text) { TokKind::Keyword } else { TokKind::Ident };
            return Ok(Some(Token { kind, lexeme: text.to_string(), span }));
        }
        if c == '#' {
            let rest = &self.src[self.pos..];
            if rest.starts_with("#section") {
                for _ in 0.."#section".len() {
                    self.bump();
                }
                return Ok(Some(Token { kind: TokKind::Section, lexeme: "#section".into(), span: self.finish(sp) }));
            }
        }
        if c == '\u{2026}' {
            self.bump();
            return Ok(Some(Token { kind: TokKind::Punct, lexeme: "...".into(), span: self.finish(sp) }));
        }
        let rest = &self.src[self.pos..];
        if let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            for _ in 0..p.len() {
                self.bump();
            }
            return Ok(Some(Token { kind: TokKind::Punct, lexeme: p.to_string(), span: self.finish(sp) }));
        }
        self.bump();
        Err(Diagnostic::error("LexError", format!("illegal character `{}`", c.escape_default()), self.finish(sp)))
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    while let Some(t) = lx.next_token()? {
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.lexeme)).collect()
    }

    #[test]
    fn let_tokens() {
        let kw = |s: &str| (TokKind::Keyword, s.to_string());
        let id = |s: &str| (TokKind::Ident, s.to_string());
        let p = |s: &str| (TokKind::Punct, s.to_string());
        assert_eq!(
            kinds("let x : int = 2 in x"),
            vec![kw("let"), id("x"), p(":"), kw("int"), p("="), (TokKind::Int(2, None), "2".into()), kw("in"), id("x")]
        );
    }

    #[test]
    fn empty_and_comments() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  // only a comment\n /* and a block */ ").unwrap().is_empty());
    }

    #[test]
    fn wide_hex_literal() {
        let t = tokenize("0x100000000").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].kind, TokKind::Int(4294967296, None));
    }

    #[test]
    fn suffixes_primes_sections() {
        let t = tokenize("5L 7u8 p' #section \"xdp\" ... \u{2026}").unwrap();
        assert_eq!(t[0].kind, TokKind::Int(5, Some(PrimTy::LONG)));
        assert_eq!(t[1].kind, TokKind::Int(7, Some(PrimTy::U8)));
        assert_eq!(t[2].lexeme, "p'");
        assert_eq!(t[3].kind, TokKind::Section);
        assert_eq!(t[4].kind, TokKind::Str("xdp".into()));
        assert!(t[5].is_punct("...") && t[6].is_punct("..."));
    }

    #[test]
    fn errors_carry_spans() {
        let e = tokenize("let x = $").unwrap_err();
        assert_eq!(e.code, "LexError");
        assert_eq!((e.span.line, e.span.col), (1, 9));
        let e = tokenize("\"abc").unwrap_err();
        assert!(e.message.contains("unterminated"));
        assert!(tokenize("__bpl_x").is_err());
        assert!(tokenize("99999999999999999999").is_err());
    }

    #[test]
    fn spans_are_disjoint_and_ordered() {
        let t = tokenize("fun f() : int { 1 + x }").unwrap();
        for w in t.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
        }
    }
}
