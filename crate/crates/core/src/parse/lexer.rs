use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;

use crate::error::{Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Num(BigRational),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Dot,
    Bar,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Assign,
    Implies,
    And,
    Or,
    Not,
    Exists,
    Eof,
}

impl TokKind {
    pub fn describe(&self) -> String {
        match self {
            TokKind::Num(q) => format!("number `{q}`"),
            TokKind::Ident(s) => format!("`{s}`"),
            TokKind::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            TokKind::LParen => "(",
            TokKind::RParen => ")",
            TokKind::LBracket => "[",
            TokKind::RBracket => "]",
            TokKind::LBrace => "{",
            TokKind::RBrace => "}",
            TokKind::Comma => ",",
            TokKind::Semi => ";",
            TokKind::Colon => ":",
            TokKind::Dot => ".",
            TokKind::Bar => "|",
            TokKind::Plus => "+",
            TokKind::Minus => "-",
            TokKind::Star => "*",
            TokKind::Slash => "/",
            TokKind::Caret => "^",
            TokKind::Eq => "=",
            TokKind::Ne => "!=",
            TokKind::Lt => "<",
            TokKind::Le => "<=",
            TokKind::Gt => ">",
            TokKind::Ge => ">=",
            TokKind::Assign => ":=",
            TokKind::Implies => "=>",
            TokKind::And => "and",
            TokKind::Or => "or",
            TokKind::Not => "not",
            TokKind::Exists => "exists",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tok {
    pub kind: TokKind,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len())
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }
}

fn digits(c: &mut Cursor<'_>) -> String {
    let mut s = String::new();
    while let Some(d) = c.peek() {
        if d.is_ascii_digit() {
            s.push(d);
            c.bump();
        } else {
            break;
        }
    }
    s
}

fn parse_int(s: &str) -> BigInt {
    s.parse::<BigInt>().unwrap_or_else(|_| BigInt::zero())
}

/// Lexes one numeric literal: `12`, `0.25`, `1e-3`, or the rational form
/// `1/3` (digits, slash, digits, no spaces, not followed by `^`).
fn number(c: &mut Cursor<'_>) -> BigRational {
    let int = digits(c);
    let mut value = BigRational::from_integer(parse_int(&int));
    if c.peek() == Some('.') && c.peek2().is_some_and(|d| d.is_ascii_digit()) {
        c.bump();
        let frac = digits(c);
        let scale = num::pow(BigInt::from(10), frac.len());
        value += BigRational::new(parse_int(&frac), scale);
    }
    if matches!(c.peek(), Some('e' | 'E')) {
        let mut it = c.chars.clone();
        it.next();
        let mut sign_ok = false;
        if let Some((_, n)) = it.next() {
            if n.is_ascii_digit() {
                sign_ok = true;
            } else if n == '-' || n == '+' {
                sign_ok = it.next().is_some_and(|(_, d)| d.is_ascii_digit());
            }
        }
        if sign_ok {
            c.bump();
            let mut neg = false;
            if let Some(s @ ('-' | '+')) = c.peek() {
                neg = s == '-';
                c.bump();
            }
            let e: usize = digits(c).parse().unwrap_or(0);
            let p = BigRational::from_integer(num::pow(BigInt::from(10), e));
            value = if neg { value / p } else { value * p };
        }
    }
    if value.is_integer() && c.peek() == Some('/') {
        let mut it = c.chars.clone();
        it.next();
        let mut den = String::new();
        for (_, d) in it.by_ref() {
            if d.is_ascii_digit() {
                den.push(d);
            } else {
                // only a literal when nothing binds tighter afterwards
                if d == '^' || d == '.' || d.is_alphabetic() || d == '_' {
                    den.clear();
                }
                break;
            }
        }
        if !den.is_empty() {
            let d = parse_int(&den);
            if !d.is_zero() {
                c.bump();
                for _ in 0..den.len() {
                    c.bump();
                }
                value /= BigRational::from_integer(d);
            }
        }
    }
    value
}

pub fn lex(src: &str) -> Result<Vec<Tok>, Diagnostic> {
    let mut c = Cursor {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        while let Some(ch) = c.peek() {
            if ch.is_whitespace() {
                c.bump();
            } else if ch == '#' || (ch == '/' && c.peek2() == Some('/')) {
                while let Some(ch) = c.peek() {
                    if ch == '\n' {
                        break;
                    }
                    c.bump();
                }
            } else {
                break;
            }
        }
        let pos = c.pos();
        let Some(ch) = c.peek() else {
            out.push(Tok {
                kind: TokKind::Eof,
                pos,
            });
            return Ok(out);
        };
        let kind = if ch.is_ascii_digit() {
            TokKind::Num(number(&mut c))
        } else if ch.is_alphabetic() || ch == '_' {
            let start = c.offset();
            while let Some(d) = c.peek() {
                if d.is_alphanumeric() || d == '_' || d == '\'' {
                    c.bump();
                } else {
                    break;
                }
            }
            let end = c.offset();
            let word = &src[start..end];
            match word {
                "and" => TokKind::And,
                "or" => TokKind::Or,
                "not" => TokKind::Not,
                "exists" => TokKind::Exists,
                _ => TokKind::Ident(word.to_string()),
            }
        } else {
            c.bump();
            let next = c.peek();
            let mut two = |k: TokKind| {
                c.bump();
                k
            };
            match (ch, next) {
                ('<', Some('=')) => two(TokKind::Le),
                ('>', Some('=')) => two(TokKind::Ge),
                ('!', Some('=')) => two(TokKind::Ne),
                ('=', Some('>')) => two(TokKind::Implies),
                ('=', Some('=')) => two(TokKind::Eq),
                (':', Some('=')) => two(TokKind::Assign),
                ('&', Some('&')) => two(TokKind::And),
                ('|', Some('|')) => two(TokKind::Or),
                ('-', Some('>')) => two(TokKind::Implies),
                ('(', _) => TokKind::LParen,
                (')', _) => TokKind::RParen,
                ('[', _) => TokKind::LBracket,
                (']', _) => TokKind::RBracket,
                ('{', _) => TokKind::LBrace,
                ('}', _) => TokKind::RBrace,
                (',', _) => TokKind::Comma,
                (';', _) => TokKind::Semi,
                (':', _) => TokKind::Colon,
                ('.', _) => TokKind::Dot,
                ('|', _) => TokKind::Bar,
                ('+', _) => TokKind::Plus,
                ('-' | '−', _) => TokKind::Minus,
                ('*' | '×' | '·', _) => TokKind::Star,
                ('/' | '÷', _) => TokKind::Slash,
                ('^', _) => TokKind::Caret,
                ('=', _) => TokKind::Eq,
                ('<', _) => TokKind::Lt,
                ('>', _) => TokKind::Gt,
                ('≤', _) => TokKind::Le,
                ('≥', _) => TokKind::Ge,
                ('≠', _) => TokKind::Ne,
                ('∧', _) => TokKind::And,
                ('∨', _) => TokKind::Or,
                ('¬' | '!', _) => TokKind::Not,
                ('∃', _) => TokKind::Exists,
                ('⊃' | '→', _) => TokKind::Implies,
                (other, _) => {
                    return Err(Diagnostic::error(
                        Some(pos),
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        out.push(Tok { kind, pos });
    }
}
