use num_complex::Complex64;

use super::{FuncError, FuncExpr, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src: text.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            let start = lx.pos;
            let Some(&b) = lx.src.get(lx.pos) else {
                out.push((Tok::End, start));
                return Ok(out);
            };
            let tok = if b.is_ascii_digit() || b == b'.' {
                lx.number()?
            } else if b.is_ascii_alphabetic() {
                let s = lx.take_while(|c| c.is_ascii_alphanumeric() || c == b'_');
                Tok::Ident(s.to_string())
            } else if b"+-*/^()".contains(&b) {
                lx.pos += 1;
                Tok::Sym(b as char)
            } else {
                return Err(FuncError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", b as char),
                });
            };
            out.push((tok, start));
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|&b| pred(b)) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default()
    }

    fn number(&mut self) -> Result<Tok> {
        let start = self.pos;
        self.take_while(|b| b.is_ascii_digit());
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            self.take_while(|b| b.is_ascii_digit());
        }
        // exponent only when `e` is followed by a digit or a signed digit
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let next = self.src.get(self.pos + 1).copied();
            let after = self.src.get(self.pos + 2).copied();
            let signed = matches!(next, Some(b'+' | b'-')) && after.is_some_and(|b| b.is_ascii_digit());
            if next.is_some_and(|b| b.is_ascii_digit()) || signed {
                self.pos += if signed { 2 } else { 1 };
                self.take_while(|b| b.is_ascii_digit());
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let value: f64 = text.parse().map_err(|_| FuncError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        let imag = self.src.get(self.pos) == Some(&b'i')
            && !self.src.get(self.pos + 1).is_some_and(|b| b.is_ascii_alphanumeric());
        if imag {
            self.pos += 1;
            Ok(Tok::Imag(value))
        } else {
            Ok(Tok::Num(value))
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn offset(&self) -> usize {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(FuncError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<FuncExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = FuncExpr::add(lhs, self.term()?);
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = FuncExpr::add(lhs, FuncExpr::neg(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<FuncExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = FuncExpr::mul(lhs, self.unary()?);
                }
                Tok::Sym('/') => {
                    let (_, at) = self.bump();
                    let rhs = self.unary()?;
                    lhs = divide(lhs, rhs, at)?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<FuncExpr> {
        match self.peek() {
            Tok::Sym('-') => {
                self.bump();
                Ok(FuncExpr::neg(self.unary()?))
            }
            Tok::Sym('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<FuncExpr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let violation = |message: &str| FuncError::EntiretyViolation { offset: at, message: message.into() };
        match self.bump().0 {
            Tok::Num(k) if k.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&k) => {
                Ok(FuncExpr::pow(base, k as u32))
            }
            Tok::Num(_) => Err(violation("exponent must be a non-negative integer")),
            Tok::Sym('-') => Err(violation("negative exponent")),
            _ => Err(FuncError::Syntax { offset: at, message: "expected integer exponent".into() }),
        }
    }

    fn atom(&mut self) -> Result<FuncExpr> {
        let at = self.offset();
        match self.bump().0 {
            Tok::Num(v) => Ok(FuncExpr::Constant(Complex64::new(v, 0.0))),
            Tok::Imag(v) => Ok(FuncExpr::Constant(Complex64::new(0.0, v))),
            Tok::Ident(name) => match name.as_str() {
                "z" => Ok(FuncExpr::Variable),
                "i" => Ok(FuncExpr::Constant(Complex64::new(0.0, 1.0))),
                "exp" => {
                    self.expect('(')?;
                    let inner = self.expr()?;
                    self.expect(')')?;
                    Ok(FuncExpr::exp(inner))
                }
                other => Err(FuncError::Syntax { offset: at, message: format!("unknown identifier `{other}`") }),
            },
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::End => Err(FuncError::Syntax { offset: at, message: "unexpected end of input".into() }),
            Tok::Sym(c) => Err(FuncError::Syntax { offset: at, message: format!("unexpected `{c}`") }),
        }
    }
}

/// Division is only admitted by a constant divisor, which keeps the result entire.
fn divide(num: FuncExpr, den: FuncExpr, at: usize) -> Result<FuncExpr> {
    if !den.is_constant() {
        return Err(FuncError::EntiretyViolation {
            offset: at,
            message: "division by an expression in z".into(),
        });
    }
    let d = den.eval(Complex64::new(0.0, 0.0))?;
    if d == Complex64::new(0.0, 0.0) {
        return Err(FuncError::EntiretyViolation { offset: at, message: "division by zero".into() });
    }
    Ok(FuncExpr::scale(d.inv(), num))
}

/// Parses the ASCII expression grammar into a normalized tree.
pub fn parse_expr(text: &str) -> Result<FuncExpr> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, idx: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("trailing input");
    }
    Ok(e.normalize())
}
