//! Tiny arithmetic expression grammar for motility declarations.
//!
//! Supports `+ - * / ^`, `exp(..)`, `ln(..)`, numeric literals and the single
//! variable `s`. Exponentiation is right-associative and binds tighter than
//! unary minus, so `-s^2` parses as `-(s^2)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
}

impl Expr {
    /// Parse an expression in the variable `s`.
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }

    /// Evaluate at `s`. Returns a domain error on non-finite results
    /// (division by zero, ln of a nonpositive value, ...).
    pub fn eval<T: Scalar>(&self, s: T) -> Result<T> {
        let v = self.eval_raw(s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("expression not finite at s = {s}")))
        }
    }

    fn eval_raw<T: Scalar>(&self, s: T) -> T {
        match self {
            Expr::Num(c) => T::of(*c),
            Expr::Var => s,
            Expr::Neg(a) => -a.eval_raw(s),
            Expr::Add(a, b) => a.eval_raw(s) + b.eval_raw(s),
            Expr::Sub(a, b) => a.eval_raw(s) - b.eval_raw(s),
            Expr::Mul(a, b) => a.eval_raw(s) * b.eval_raw(s),
            Expr::Div(a, b) => a.eval_raw(s) / b.eval_raw(s),
            Expr::Pow(a, b) => a.eval_raw(s).powf(b.eval_raw(s)),
            Expr::Exp(a) => a.eval_raw(s).exp(),
            Expr::Ln(a) => a.eval_raw(s).ln(),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> Error {
        Error::Expr {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right-associative; allow a signed exponent like s^-2
            let exponent = self.unary()?;
            Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.eat(b'(');
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.err("expected a number, 's', a function call or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_digit() || c == b'.')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        // exponent suffix like 1e-3
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
                self.pos += 1;
            }
            if self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark; // 'e' starts an identifier, not an exponent
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| Error::Expr {
            offset: start,
            message: format!("bad numeric literal '{text}'"),
        })?;
        self.skip_ws();
        Ok(Expr::Num(value))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_alphanumeric() || c == b'_')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string();
        self.skip_ws();
        match name.as_str() {
            "s" => Ok(Expr::Var),
            "exp" | "ln" => {
                if !self.eat(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(match name.as_str() {
                    "exp" => Expr::Exp(Box::new(arg)),
                    _ => Expr::Ln(Box::new(arg)),
                })
            }
            _ => Err(Error::Expr {
                offset: start,
                message: format!("unknown identifier '{name}' (grammar knows 's', 'exp', 'ln')"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eval(src: &str, s: f64) -> f64 {
        Expr::parse(src).unwrap().eval(s).unwrap()
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_relative_eq!(eval("1 + 2*3", 0.0), 7.0);
        assert_relative_eq!(eval("(1 + 2)*3", 0.0), 9.0);
        assert_relative_eq!(eval("2^3^2", 0.0), 512.0); // right-assoc
        assert_relative_eq!(eval("-s^2", 3.0), -9.0);
        assert_relative_eq!(eval("s^-2", 2.0), 0.25);
        assert_relative_eq!(eval("6/3/2", 0.0), 1.0); // left-assoc
    }

    #[test]
    fn functions_and_literals() {
        assert_relative_eq!(eval("exp(ln(s))", 2.5), 2.5, max_relative = 1e-15);
        assert_relative_eq!(eval("1e-3 + 2.5e2", 0.0), 250.001);
        assert_relative_eq!(eval("s*(1+s)", 3.0), 12.0);
        assert_relative_eq!(eval("s^0.5", 9.0), 3.0);
    }

    #[test]
    fn f32_instantiation() {
        let e = Expr::parse("s^2 + 1").unwrap();
        assert_eq!(e.eval(3.0f32).unwrap(), 10.0f32);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("s +").is_err());
        assert!(Expr::parse("cos(s)").is_err());
        assert!(Expr::parse("(s").is_err());
        assert!(Expr::parse("s t").is_err());
        // evaluation outside the domain surfaces as a domain error
        let e = Expr::parse("ln(s)").unwrap();
        assert!(e.eval(0.0f64).is_err());
        let e = Expr::parse("1/s").unwrap();
        assert!(e.eval(0.0f64).is_err());
    }
}
