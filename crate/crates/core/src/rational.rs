//! Gaussian rational numbers: exact elements of Q(i).
//!
//! A [`GaussianRational`] is a pair of arbitrary-precision rationals
//! `re + im*i`.  Both parts are kept reduced with positive denominators by
//! `num_rational::BigRational`, so structural equality is semantic equality.
//! The canonical textual form is `p/q`, `p/q*i`, or `p/q+r/s*i` (with `-`
//! folding into the parts, `i` for a unit imaginary part, and denominator 1
//! omitted); `parse` accepts exactly the strings `to_string` produces, plus
//! surrounding whitespace.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussianRational {
    re: Rat,
    im: Rat,
}

impl GaussianRational {
    pub fn new(re: Rat, im: Rat) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        Self::new(Rat::zero(), Rat::zero())
    }

    pub fn one() -> Self {
        Self::new(Rat::one(), Rat::zero())
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::new(Rat::zero(), Rat::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(Rat::from_integer(BigInt::from(n)), Rat::zero())
    }

    /// `n/d` as a real Gaussian rational.  `d` must be nonzero.
    pub fn from_ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Self::new(
            Rat::new(BigInt::from(n), BigInt::from(d)),
            Rat::zero(),
        )
    }

    /// A purely real value from an arbitrary-precision rational.
    pub fn from_rational(re: Rat) -> Self {
        Self::new(re, Rat::zero())
    }

    /// `(nr/dr) + (ni/di)*i`.
    pub fn from_parts(nr: i64, dr: i64, ni: i64, di: i64) -> Self {
        assert!(dr != 0 && di != 0, "zero denominator");
        Self::new(
            Rat::new(BigInt::from(nr), BigInt::from(dr)),
            Rat::new(BigInt::from(ni), BigInt::from(di)),
        )
    }

    pub fn re(&self) -> &Rat {
        &self.re
    }

    pub fn im(&self) -> &Rat {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    /// Squared modulus `re^2 + im^2` (a nonnegative rational).
    pub fn norm_sqr(&self) -> Rat {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::NotAUnit);
        }
        let n = self.norm_sqr();
        Ok(Self::new(&self.re / &n, -(&self.im / &n)))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.inv()?)
    }

    /// Integer power (exponent >= 0).
    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Parses the canonical textual form (see module docs).
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::Parse {
                pos: 0,
                msg: "empty Gaussian rational".into(),
            });
        }
        // Split an optional trailing imaginary part at the last top-level +/-
        // that is not the leading sign.
        let bytes = t.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && bytes[k - 1] != b'/' && bytes[k - 1] != b'*'
            {
                split = Some(k);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(k) if t.ends_with('i') => (&t[..k], &t[k..]),
            _ if t.ends_with('i') => ("", t),
            _ => (t, ""),
        };
        let re = if re_str.is_empty() {
            Rat::zero()
        } else {
            parse_rat(re_str)?
        };
        let im = if im_str.is_empty() {
            Rat::zero()
        } else {
            let body = im_str.strip_suffix('i').unwrap();
            let body = body.strip_suffix('*').unwrap_or(body);
            match body {
                "" | "+" => Rat::one(),
                "-" => -Rat::one(),
                other => parse_rat(other)?,
            }
        };
        Ok(Self::new(re, im))
    }
}

fn parse_rat(s: &str) -> Result<Rat> {
    s.parse::<Rat>().map_err(|e| Error::Parse {
        pos: 0,
        msg: format!("bad rational `{s}`: {e}"),
    })
}

fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let im_mag = {
            let a = self.im.abs();
            if a.is_one() {
                "i".to_string()
            } else {
                format!("{}*i", fmt_rat(&a))
            }
        };
        if self.im.is_zero() {
            write!(f, "{}", fmt_rat(&self.re))
        } else if self.re.is_zero() {
            if self.im.is_negative() {
                write!(f, "-{im_mag}")
            } else {
                write!(f, "{im_mag}")
            }
        } else if self.im.is_negative() {
            write!(f, "{}-{im_mag}", fmt_rat(&self.re))
        } else {
            write!(f, "{}+{im_mag}", fmt_rat(&self.re))
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, |$a:ident, $b:ident| $body:expr) => {
        impl<'a, 'b> $trait<&'b GaussianRational> for &'a GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: &'b GaussianRational) -> GaussianRational {
                let $a = self;
                let $b = rhs;
                $body
            }
        }
        impl $trait<GaussianRational> for GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: GaussianRational) -> GaussianRational {
                $trait::$method(&self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| GaussianRational::new(
    &a.re + &b.re,
    &a.im + &b.im
));
binop!(Sub, sub, |a, b| GaussianRational::new(
    &a.re - &b.re,
    &a.im - &b.im
));
binop!(Mul, mul, |a, b| GaussianRational::new(
    &a.re * &b.re - &a.im * &b.im,
    &a.re * &b.im + &a.im * &b.re
));

impl<'a, 'b> Div<&'b GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    /// Panics on division by zero; use `checked_div` where zero is possible.
    fn div(self, rhs: &'b GaussianRational) -> GaussianRational {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}
