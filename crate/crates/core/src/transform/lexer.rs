//! Tokens shared by the predicate and expression grammars.
//!
//! Field names are bare identifiers (letters, digits, `_`, `.`, `$`, not
//! starting with a digit) or backtick-quoted for anything else.

use super::TransformError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Field(String),
    Num(f64),
    Str(String),
    And,
    Or,
    Not,
    In,
    True,
    False,
    Null,
    Op(&'static str),
}

pub(crate) struct Lexed {
    pub toks: Vec<(Tok, usize)>,
    pub len: usize,
}

const OPS: [&str; 15] = ["==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "(", ")", "[", "]", ","];

pub(crate) fn lex(src: &str, err: fn(usize, String) -> TransformError) -> Result<Lexed, TransformError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == b'`' {
            let end = src[i + 1..]
                .find('`')
                .ok_or_else(|| err(start, "unterminated `quoted` field".into()))?;
            toks.push((Tok::Field(src[i + 1..i + 1 + end].to_string()), start));
            i += end + 2;
        } else if c == b'"' || c == b'\'' {
            let mut out = String::new();
            let mut j = i + 1;
            loop {
                let Some(ch) = src[j..].chars().next() else {
                    return Err(err(start, "unterminated string".into()));
                };
                j += ch.len_utf8();
                if ch as u32 == c as u32 {
                    break;
                }
                if ch == '\\' {
                    let Some(esc) = src[j..].chars().next() else {
                        return Err(err(start, "unterminated string".into()));
                    };
                    j += esc.len_utf8();
                    out.push(esc);
                } else {
                    out.push(ch);
                }
            }
            toks.push((Tok::Str(out), start));
            i = j;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                j += 1;
            }
            if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                let mut k = j + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let v = src[i..j]
                .parse::<f64>()
                .map_err(|_| err(start, format!("bad number `{}`", &src[i..j])))?;
            toks.push((Tok::Num(v), start));
            i = j;
        } else if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || matches!(bytes[j], b'_' | b'.' | b'$')) {
                j += 1;
            }
            let word = &src[i..j];
            let tok = match word {
                "and" => Tok::And,
                "or" => Tok::Or,
                "not" => Tok::Not,
                "in" => Tok::In,
                "true" => Tok::True,
                "false" => Tok::False,
                "null" => Tok::Null,
                _ => Tok::Field(word.to_string()),
            };
            toks.push((tok, start));
            i = j;
        } else if let Some(op) = OPS.iter().find(|op| src[i..].starts_with(**op)) {
            toks.push((Tok::Op(op), start));
            i += op.len();
        } else {
            let ch = src[i..].chars().next().unwrap();
            return Err(err(start, format!("unexpected character `{ch}`")));
        }
    }
    Ok(Lexed { toks, len: src.len() })
}

pub(crate) struct Cursor<'a> {
    lexed: &'a Lexed,
    pos: usize,
    err: fn(usize, String) -> TransformError,
}

impl<'a> Cursor<'a> {
    pub fn new(lexed: &'a Lexed, err: fn(usize, String) -> TransformError) -> Self {
        Self { lexed, pos: 0, err }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.lexed.toks.get(self.pos).map(|t| &t.0)
    }

    pub fn offset(&self) -> usize {
        self.lexed.toks.get(self.pos).map_or(self.lexed.len, |t| t.1)
    }

    pub fn next(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), TransformError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    pub fn error(&self, message: String) -> TransformError {
        (self.err)(self.offset(), message)
    }

    pub fn finish(&self) -> Result<(), TransformError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(format!("unexpected trailing token {t:?}"))),
        }
    }
}
