//! Real constants for hom images: decimals, `pi`, `tau`, `e`, `sqrt(..)`,
//! `+ - * /`, unary minus and parentheses.

use crate::CliError;

pub fn eval(src: &str) -> Result<f64, CliError> {
    let mut p = Parser {
        s: src.as_bytes(),
        i: 0,
    };
    let v = p.sum()?;
    p.skip_ws();
    if p.i != p.s.len() {
        return Err(p.err("trailing input"));
    }
    if !v.is_finite() {
        return Err(CliError::Invalid(format!("{src:?} is not finite")));
    }
    Ok(v)
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> CliError {
        CliError::Invalid(format!(
            "expression {:?}: {msg} at offset {}",
            String::from_utf8_lossy(self.s),
            self.i
        ))
    }

    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }

    fn sum(&mut self) -> Result<f64, CliError> {
        let mut v = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let r = self.product()?;
            v = if c == b'+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn product(&mut self) -> Result<f64, CliError> {
        let mut v = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.i += 1;
            let r = self.unary()?;
            v = if c == b'*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<f64, CliError> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<f64, CliError> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let v = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.i += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.i;
                while self.i < self.s.len() && self.s[self.i].is_ascii_alphanumeric() {
                    self.i += 1;
                }
                match &self.s[start..self.i] {
                    b"pi" => Ok(std::f64::consts::PI),
                    b"tau" => Ok((1.0 + 5f64.sqrt()) / 2.0),
                    b"e" => Ok(std::f64::consts::E),
                    b"sqrt" => {
                        if self.peek() != Some(b'(') {
                            return Err(self.err("expected '(' after sqrt"));
                        }
                        let v = self.atom()?;
                        if v < 0.0 {
                            return Err(self.err("sqrt of a negative number"));
                        }
                        Ok(v.sqrt())
                    }
                    _ => {
                        self.i = start;
                        Err(self.err("unknown name"))
                    }
                }
            }
            _ => Err(self.err("expected a number")),
        }
    }

    fn number(&mut self) -> Result<f64, CliError> {
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
            self.i += 1;
        }
        if self.i < self.s.len() && matches!(self.s[self.i], b'e' | b'E') {
            let mark = self.i;
            self.i += 1;
            if self.i < self.s.len() && matches!(self.s[self.i], b'+' | b'-') {
                self.i += 1;
            }
            let digits = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            if self.i == digits {
                // `2e` is 2 followed by the name e, which is not a product
                self.i = mark;
            }
        }
        std::str::from_utf8(&self.s[start..self.i])
            .unwrap()
            .parse()
            .map_err(|_| self.err("malformed number"))
    }
}
