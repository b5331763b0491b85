use num::{BigInt, Zero};
use thiserror::Error;

use super::canonical::{Expr, Func, Rat};
use super::coords::CoordinateSystem;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => {
                write!(f, "syntax error at offset {}: {}", self.position, msg)
            }
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier `{}` at offset {}", name, self.position)
            }
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Num(Rat),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

fn syntax(msg: impl Into<String>, position: usize) -> ParseError {
    ParseError { kind: ParseErrorKind::Syntax(msg.into()), position }
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            if lx.pos >= lx.src.len() {
                return Ok(out);
            }
            let start = lx.pos;
            let c = lx.src[lx.pos];
            let tok = match c {
                b'+' => {
                    lx.pos += 1;
                    Tok::Plus
                }
                b'-' => {
                    lx.pos += 1;
                    Tok::Minus
                }
                b'*' => {
                    lx.pos += 1;
                    Tok::Star
                }
                b'/' => {
                    lx.pos += 1;
                    Tok::Slash
                }
                b'^' => {
                    lx.pos += 1;
                    Tok::Caret
                }
                b'(' => {
                    lx.pos += 1;
                    Tok::LParen
                }
                b')' => {
                    lx.pos += 1;
                    Tok::RParen
                }
                b'0'..=b'9' => lx.number(start)?,
                c if c.is_ascii_alphabetic() || c == b'_' => lx.ident(start),
                other => {
                    return Err(syntax(format!("unexpected character `{}`", other as char), start))
                }
            };
            out.push((tok, start));
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let mut frac_digits = 0usize;
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let frac_start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac_digits = self.pos - frac_start;
            if frac_digits == 0 {
                return Err(syntax("expected digits after decimal point", self.pos));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let digits: String = text.chars().filter(|c| *c != '.').collect();
        let numer: BigInt = digits
            .parse()
            .map_err(|_| syntax("invalid numeric literal", start))?;
        let denom = num::pow::pow(BigInt::from(10), frac_digits);
        Ok(Tok::Num(Rat::new(numer, denom)))
    }

    fn ident(&mut self, start: usize) -> Tok {
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Tok::Ident(std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string())
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    coords: &'a CoordinateSystem,
    end: usize,
}

/// Parses an expression over the given chart.
///
/// Grammar: `+ - * /` with standard precedence, `^` binding tighter and
/// right-associatively with rational literal exponents, unary minus,
/// parentheses, `name(expr)` function calls (`sin`, `cos`, `exp`, `ln`,
/// `sqrt`, `atan`), integer, decimal and quotient literals, and the chart's
/// coordinate names as variables.
pub fn parse(src: &str, coords: &CoordinateSystem) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(src)?;
    let mut p = Parser { toks, idx: 0, coords, end: src.len() };
    let e = p.expr()?;
    if let Some((_, pos)) = p.peek() {
        return Err(syntax("unexpected trailing input", pos));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<(&Tok, usize)> {
        self.toks.get(self.idx).map(|(t, p)| (t, *p))
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|(_, p)| p).unwrap_or(self.end)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.next() {
            Some((Tok::RParen, _)) => Ok(()),
            Some((_, pos)) => Err(syntax("expected `)`", pos)),
            None => Err(syntax("expected `)`", self.end)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.next();
                    acc = acc + self.term()?;
                }
                Tok::Minus => {
                    self.next();
                    acc = acc - self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        while let Some((tok, pos)) = self.peek() {
            match tok {
                Tok::Star => {
                    self.next();
                    acc = acc * self.unary()?;
                }
                Tok::Slash => {
                    self.next();
                    let rhs = self.unary()?;
                    if rhs.as_rational().map_or(false, |r| r.is_zero()) {
                        return Err(syntax("division by zero", pos));
                    }
                    acc = acc / rhs;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.next();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some((Tok::Caret, _)) = self.peek() {
            self.next();
            let exp_pos = self.here();
            let exp = self.unary()?;
            let r = exp.as_rational().ok_or_else(|| {
                syntax("exponent must be a rational literal", exp_pos)
            })?;
            return Ok(base.pow_rat(&r));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.next() {
            Some((Tok::Num(r), _)) => Ok(Expr::num(r)),
            Some((Tok::LParen, _)) => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Some((Tok::Ident(name), pos)) => {
                if let Some((Tok::LParen, _)) = self.peek() {
                    self.next();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return match name.as_str() {
                        "sin" => Ok(Expr::fun(Func::Sin, arg)),
                        "cos" => Ok(Expr::fun(Func::Cos, arg)),
                        "exp" => Ok(Expr::fun(Func::Exp, arg)),
                        "ln" => Ok(Expr::fun(Func::Ln, arg)),
                        "atan" => Ok(Expr::fun(Func::Atan, arg)),
                        "sqrt" => Ok(arg.sqrt()),
                        _ => Err(ParseError {
                            kind: ParseErrorKind::UnknownIdentifier(name),
                            position: pos,
                        }),
                    };
                }
                match self.coords.index_of(&name) {
                    Some(id) => Ok(Expr::var(id)),
                    None => Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name),
                        position: pos,
                    }),
                }
            }
            Some((_, pos)) => Err(syntax("expected a value", pos)),
            None => Err(syntax("unexpected end of input", self.end)),
        }
    }
}
