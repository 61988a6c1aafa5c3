//! Recursive-descent reader for the text rendering of [`Polynomial`].
//!
//! Grammar: sums and differences of products of factors; a factor is a
//! number, a variable name or a parenthesized expression, optionally raised
//! to a nonnegative integer power with `^`. Input size, nesting, exponents and
//! intermediate degrees are capped so hostile input cannot blow up memory.

use std::sync::Arc;

use super::{Polynomial, VariableSpace};
use crate::error::{CoreError, Result};

const MAX_INPUT: usize = 1 << 16;
const MAX_DEPTH: usize = 64;
const MAX_EXPONENT: u32 = 64;
const MAX_DEGREE: u32 = 64;
const MAX_TERMS: usize = 100_000;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
    space: &'a Arc<VariableSpace>,
}

pub fn parse_polynomial(space: &Arc<VariableSpace>, text: &str) -> Result<Polynomial> {
    if text.len() > MAX_INPUT {
        return Err(CoreError::Parse {
            pos: MAX_INPUT,
            msg: "input too long".into(),
        });
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        depth: 0,
        space,
    };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(out)
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> CoreError {
        CoreError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn guard(&self, p: Polynomial) -> Result<Polynomial> {
        if p.degree() > MAX_DEGREE || p.num_terms() > MAX_TERMS {
            return Err(self.err("expression too large"));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<Polynomial> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = self.guard(acc.add(&t)?)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = self.guard(acc.sub(&t)?)?;
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let f = self.factor()?;
            if acc.degree() + f.degree() > MAX_DEGREE
                || acc.num_terms().saturating_mul(f.num_terms()) > MAX_TERMS
            {
                return Err(self.err("expression too large"));
            }
            acc = self.guard(acc.mul(&f)?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                self.depth += 1;
                if self.depth > MAX_DEPTH {
                    return Err(self.err("nesting too deep"));
                }
                let f = self.factor()?;
                self.depth -= 1;
                Ok(f.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            _ => {
                let base = self.atom()?;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    let k = self.exponent()?;
                    if base.degree().saturating_mul(k) > MAX_DEGREE {
                        return Err(self.err("expression too large"));
                    }
                    let mut out = Polynomial::constant(self.space, 1.0);
                    for _ in 0..k {
                        if out.num_terms().saturating_mul(base.num_terms()) > MAX_TERMS {
                            return Err(self.err("expression too large"));
                        }
                        out = self.guard(out.mul(&base)?)?;
                    }
                    Ok(out)
                } else {
                    Ok(base)
                }
            }
        }
    }

    fn exponent(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match text.parse::<u32>() {
            Ok(k) if k <= MAX_EXPONENT => Ok(k),
            _ => Err(self.err("exponent too large")),
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii name");
                match self.space.var(name) {
                    Some(v) => Ok(Polynomial::var(self.space, v)),
                    None => Err(CoreError::UnknownVariable(name.to_string())),
                }
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Polynomial> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if before == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let v: f64 = text.parse().map_err(|_| CoreError::Parse {
            pos: start,
            msg: format!("bad number `{text}`"),
        })?;
        if !v.is_finite() {
            return Err(CoreError::Parse {
                pos: start,
                msg: "number out of range".into(),
            });
        }
        Ok(Polynomial::constant(self.space, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_of_rendering() {
        let s = VariableSpace::new(2, 1, true).unwrap();
        for text in [
            "2*x1^2 + 0.5*x1*x2",
            "1 - x1^2 - x2^2",
            "-3 + 1e-20*t*x1 + 0.1*u^3",
            "0",
            "-x1",
        ] {
            let p = parse_polynomial(&s, text).unwrap();
            let back = parse_polynomial(&s, &p.to_string()).unwrap();
            assert_eq!(p, back, "{text} -> {p}");
        }
    }

    #[test]
    fn operator_precedence() {
        let s = VariableSpace::new(1, 1, false).unwrap();
        let p = parse_polynomial(&s, "-x1^2 + 2*(x1 + 1)^2").unwrap();
        assert_eq!(p, parse_polynomial(&s, "x1^2 + 4*x1 + 2").unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        let s = VariableSpace::new(1, 1, false).unwrap();
        for text in ["", "x1 +", "y", "x1^", "x1^100", "(x1", "x1)", "1e999", "(x1+u)^40*(x1+u)^40", "2 3"] {
            assert!(parse_polynomial(&s, text).is_err(), "accepted {text:?}");
        }
        let deep = "(".repeat(200) + "x1" + &")".repeat(200);
        assert!(parse_polynomial(&s, &deep).is_err());
    }
}
