//! ASCII polynomial grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := '(' expr ')' | 'X' | 'Y'<uint> | <uint>
//! ```
//!
//! Integer literals are reduced mod p; `Y` indices are 1-based. Whitespace
//! is insignificant. The `Display` impls for `Poly` and `MPoly` emit this
//! grammar, and parsing what they print returns the original value.

use crate::error::{Error, Result};
use crate::mpoly::MPoly;
use crate::poly::Poly;

/// Parse a multivariate polynomial, inferring the variable count from the
/// largest Y-index that occurs (minimum `min_nvars`).
pub fn parse_mpoly(p: u64, input: &str, min_nvars: usize) -> Result<MPoly> {
    let nvars = max_y_index(input)?.max(min_nvars);
    let mut parser = Parser {
        p,
        nvars,
        chars: input.as_bytes(),
        pos: 0,
    };
    parser.skip_ws();
    let value = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.chars.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(value)
}

/// Parse a univariate polynomial in X (no Y variables allowed).
pub fn parse_poly(p: u64, input: &str) -> Result<Poly> {
    let m = parse_mpoly(p, input, 0)?;
    m.as_coefficient().ok_or(Error::Parse {
        what: "polynomial",
        detail: "Y variables are not allowed here".to_string(),
    })
}

fn max_y_index(input: &str) -> Result<usize> {
    let bytes = input.as_bytes();
    let mut max = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'Y' {
            let start = i + 1;
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end == start {
                return Err(Error::Parse {
                    what: "polynomial",
                    detail: "Y must be followed by a 1-based index".to_string(),
                });
            }
            let idx: usize = std::str::from_utf8(&bytes[start..end])
                .unwrap()
                .parse()
                .map_err(|_| Error::Parse {
                    what: "polynomial",
                    detail: "variable index overflow".to_string(),
                })?;
            max = max.max(idx);
            i = end;
        } else {
            i += 1;
        }
    }
    Ok(max)
}

struct Parser<'a> {
    p: u64,
    nvars: usize,
    chars: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, detail: &str) -> Error {
        Error::Parse {
            what: "polynomial",
            detail: format!("{detail} at byte {}", self.pos),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<MPoly> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MPoly> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
                self.skip_ws();
                acc = acc.mul(&self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<MPoly> {
        let base = self.base()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let e = self.uint()?;
            if e > u32::MAX as u64 {
                return Err(self.error("exponent overflow"));
            }
            Ok(base.pow(e as u32))
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<MPoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'X') => {
                self.pos += 1;
                Ok(MPoly::from_poly(Poly::x(self.p), self.nvars))
            }
            Some(b'Y') => {
                self.pos += 1;
                let idx = self.uint()? as usize;
                if idx == 0 || idx > self.nvars {
                    return Err(self.error("variable index out of range"));
                }
                Ok(MPoly::variable(self.p, idx - 1, self.nvars))
            }
            Some(c) if c.is_ascii_digit() => {
                let v = self.uint()?;
                Ok(MPoly::constant(self.p, v % self.p, self.nvars))
            }
            _ => Err(self.error("expected '(', 'X', 'Y<i>' or an integer")),
        }
    }

    fn uint(&mut self) -> Result<u64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an integer"));
        }
        std::str::from_utf8(&self.chars[start..self.pos])
            .unwrap()
            .parse::<u64>()
            .map_err(|_| self.error("integer overflow"))
    }
}
