//! Expression DSL for polynomial defining functions.
//!
//! Grammar (EBNF):
//! ```text
//! expr    ::= term (("+" | "-") term)*
//! term    ::= factor ("*" factor)*
//! factor  ::= "-" factor | atom ("^" nat)?
//! atom    ::= literal | var | "(" expr ")"
//! literal ::= nat ("/" nat)? | "i"
//! var     ::= ("z" | "c") nat | "u"
//! nat     ::= [0-9]+
//! ```
//! Variables are `z1..zn`, their formal conjugates `c1..cn`, and the real
//! transversal coordinate `u`; `i` is the imaginary unit; `/` occurs only
//! inside rational literals.  Whitespace is insignificant.  The parser
//! produces an exact sparse polynomial over the Gaussian rationals in the
//! slot order `z1..zn, c1..cn, u`; every error carries the byte position it
//! was detected at.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::multiindex::Multiindex;
use crate::rational::GaussianRational;

/// Sparse exact polynomial: monomial exponents over `z1..zn, c1..cn, u`
/// mapped to nonzero coefficients.
pub type PolyMap = BTreeMap<Multiindex, GaussianRational>;

/// Parses `text` as a polynomial in `z1..zn, c1..cn, u`.
pub fn parse_polynomial(text: &str, n: usize) -> Result<PolyMap> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        n,
    };
    p.skip_ws();
    let poly = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(poly)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    n: usize,
}

fn nvars(n: usize) -> usize {
    2 * n + 1
}

fn poly_const(n: usize, c: GaussianRational) -> PolyMap {
    let mut m = BTreeMap::new();
    if !c.is_zero() {
        m.insert(Multiindex::zero(nvars(n)), c);
    }
    m
}

fn poly_add(n: usize, a: &PolyMap, b: &PolyMap) -> PolyMap {
    let _ = n;
    let mut out = a.clone();
    for (mi, c) in b {
        let entry = out.entry(mi.clone()).or_insert_with(GaussianRational::zero);
        *entry = &*entry + c;
        if entry.is_zero() {
            out.remove(mi);
        }
    }
    out
}

fn poly_neg(a: &PolyMap) -> PolyMap {
    a.iter().map(|(mi, c)| (mi.clone(), -c.clone())).collect()
}

fn poly_mul(a: &PolyMap, b: &PolyMap) -> PolyMap {
    let mut out: PolyMap = BTreeMap::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let mi = ma.plus(mb);
            let c = ca * cb;
            let entry = out.entry(mi.clone()).or_insert_with(GaussianRational::zero);
            *entry = &*entry + &c;
            if entry.is_zero() {
                out.remove(&mi);
            }
        }
    }
    out
}

fn poly_pow(n: usize, a: &PolyMap, e: u32) -> PolyMap {
    let mut out = poly_const(n, GaussianRational::one());
    for _ in 0..e {
        out = poly_mul(&out, a);
    }
    out
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<PolyMap> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                acc = poly_add(self.n, &acc, &rhs);
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                acc = poly_add(self.n, &acc, &poly_neg(&rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<PolyMap> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            let rhs = self.factor()?;
            acc = poly_mul(&acc, &rhs);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<PolyMap> {
        if self.eat(b'-') {
            let inner = self.factor()?;
            return Ok(poly_neg(&inner));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.nat()?;
            let e: u32 = e
                .try_into()
                .map_err(|_| self.err("exponent too large"))?;
            self.skip_ws();
            return Ok(poly_pow(self.n, &base, e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<PolyMap> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            Some(b'i') => {
                self.pos += 1;
                self.skip_ws();
                Ok(poly_const(self.n, GaussianRational::i()))
            }
            Some(b'u') => {
                self.pos += 1;
                self.skip_ws();
                let mut m = BTreeMap::new();
                m.insert(
                    Multiindex::unit(nvars(self.n), 2 * self.n),
                    GaussianRational::one(),
                );
                Ok(m)
            }
            Some(v @ (b'z' | b'c')) => {
                self.pos += 1;
                let k = self.nat()?;
                self.skip_ws();
                if k == 0 || k > self.n as u64 {
                    return Err(self.err(&format!(
                        "variable index {k} out of range 1..={}",
                        self.n
                    )));
                }
                let slot = if v == b'z' {
                    k as usize - 1
                } else {
                    self.n + k as usize - 1
                };
                let mut m = BTreeMap::new();
                m.insert(
                    Multiindex::unit(nvars(self.n), slot),
                    GaussianRational::one(),
                );
                Ok(m)
            }
            Some(d) if d.is_ascii_digit() => {
                let num = self.nat()?;
                let num = BigInt::from(num);
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    let den = self.nat()?;
                    if den == 0 {
                        return Err(self.err("zero denominator"));
                    }
                    self.skip_ws();
                    let r = BigRational::new(num, BigInt::from(den));
                    Ok(poly_const(self.n, GaussianRational::from_rational(r)))
                } else {
                    self.skip_ws();
                    let r = BigRational::from_integer(num);
                    Ok(poly_const(self.n, GaussianRational::from_rational(r)))
                }
            }
            Some(_) => Err(self.err("expected a literal, variable, or `(`")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn nat(&mut self) -> Result<u64> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos]).expect("digits are ascii");
        s.parse::<u64>().map_err(|_| Error::Parse {
            pos: start,
            msg: "number too large".to_string(),
        })
    }
}
