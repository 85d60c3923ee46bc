//! Truncated multivariate formal power series over the Gaussian rationals.
//!
//! A [`TruncatedSeries`] is an element of the quotient ring
//! `Q(i)[[x_1..x_r]] / (total degree > cap)`: a sparse map from multi-indices
//! to coefficients together with the ordered variable list and the truncation
//! cap.  All ring operations are exact in the quotient; no rounding occurs
//! anywhere.  Invariants maintained by every constructor and operation:
//!
//! * no zero coefficients are stored;
//! * every stored index has length `vars.len()` and total degree `<= cap`;
//! * indices iterate in graded-lex order (printing and serialization are
//!   therefore deterministic).
//!
//! Derivatives lower the cap by one — a truncation to total degree `T`
//! determines its derivative only to degree `T - 1`, and the cap field tracks
//! exactly what is still trustworthy.  Binary operations require identical
//! variable lists and caps and report an alignment error otherwise; use
//! [`TruncatedSeries::truncate_to`] to align deliberately.

use crate::error::{Error, Result};
use crate::multiindex::Multiindex;
use crate::rational::GaussianRational;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// An ordered, shared list of variable names.
#[derive(Debug, Clone)]
pub struct VarSet(Arc<Vec<String>>);

impl VarSet {
    pub fn new(names: Vec<String>) -> Self {
        VarSet(Arc::new(names))
    }

    pub fn of(names: &[&str]) -> Self {
        VarSet::new(names.iter().map(|s| s.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn name(&self, k: usize) -> &str {
        &self.0[k]
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    fn joined(&self) -> String {
        self.0.join(",")
    }
}

impl PartialEq for VarSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for VarSet {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    vars: VarSet,
    cap: u32,
    coeffs: BTreeMap<Multiindex, GaussianRational>,
}

impl TruncatedSeries {
    // ----- constructors -----

    pub fn zero(vars: VarSet, cap: u32) -> Self {
        TruncatedSeries {
            vars,
            cap,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(vars: VarSet, cap: u32, c: GaussianRational) -> Self {
        let mut s = Self::zero(vars, cap);
        if !c.is_zero() {
            let z = Multiindex::zero(s.vars.len());
            s.coeffs.insert(z, c);
        }
        s
    }

    pub fn one(vars: VarSet, cap: u32) -> Self {
        Self::constant(vars, cap, GaussianRational::one())
    }

    /// The coordinate series for the named variable.
    pub fn variable(vars: VarSet, cap: u32, name: &str) -> Result<Self> {
        let k = vars
            .index_of(name)
            .ok_or_else(|| Error::UnknownVar(name.to_string()))?;
        Self::variable_at(vars, cap, k)
    }

    /// The coordinate series for variable slot `k`.
    pub fn variable_at(vars: VarSet, cap: u32, k: usize) -> Result<Self> {
        if cap < 1 {
            return Err(Error::CapExhausted(
                "cap 0 cannot represent a coordinate function".into(),
            ));
        }
        let mi = Multiindex::unit(vars.len(), k);
        let mut s = Self::zero(vars, cap);
        s.coeffs.insert(mi, GaussianRational::one());
        Ok(s)
    }

    /// Builds a series from raw terms, dropping zeros and everything above cap.
    pub fn from_terms(
        vars: VarSet,
        cap: u32,
        terms: impl IntoIterator<Item = (Multiindex, GaussianRational)>,
    ) -> Result<Self> {
        let mut s = Self::zero(vars, cap);
        for (mi, c) in terms {
            if mi.len() != s.vars.len() {
                return Err(Error::WrongArity {
                    expected: s.vars.len(),
                    got: mi.len(),
                });
            }
            if mi.degree() > cap || c.is_zero() {
                continue;
            }
            s.add_assign_term(mi, c);
        }
        Ok(s)
    }

    // ----- accessors -----

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Multiindex, &GaussianRational)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, mi: &Multiindex) -> GaussianRational {
        self.coeffs
            .get(mi)
            .cloned()
            .unwrap_or_else(GaussianRational::zero)
    }

    pub fn constant_term(&self) -> GaussianRational {
        self.coefficient(&Multiindex::zero(self.vars.len()))
    }

    /// Degree of the lowest nonzero term, or `None` for the zero series.
    pub fn valuation(&self) -> Option<u32> {
        self.coeffs.keys().map(|m| m.degree()).min()
    }

    /// Degree of the highest stored term, or `None` for the zero series.
    pub fn max_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|m| m.degree()).max()
    }

    /// True when every stored coefficient of total degree `<= order` is zero.
    /// `order` must not exceed the cap (beyond it nothing is known).
    pub fn vanishes_to(&self, order: u32) -> Result<bool> {
        if order > self.cap {
            return Err(Error::CapExhausted(format!(
                "vanishing requested to order {order} but cap is {}",
                self.cap
            )));
        }
        Ok(self.coeffs.keys().all(|m| m.degree() > order))
    }

    // ----- shape management -----

    pub(crate) fn check_aligned(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::VarMismatch {
                left: self.vars.joined(),
                right: other.vars.joined(),
            });
        }
        if self.cap != other.cap {
            return Err(Error::CapMismatch {
                left: self.cap,
                right: other.cap,
            });
        }
        Ok(())
    }

    /// Lowers the cap, dropping terms above it.  Raising the cap is refused:
    /// the dropped tail is not recoverable.
    pub fn truncate_to(&self, cap: u32) -> Result<Self> {
        if cap > self.cap {
            return Err(Error::CapExhausted(format!(
                "cannot raise cap from {} to {cap}",
                self.cap
            )));
        }
        let mut out = Self::zero(self.vars.clone(), cap);
        for (mi, c) in &self.coeffs {
            if mi.degree() <= cap {
                out.coeffs.insert(mi.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Reinterprets the series over equally many differently-named variables.
    pub fn rename_vars(&self, vars: VarSet) -> Result<Self> {
        if vars.len() != self.vars.len() {
            return Err(Error::WrongArity {
                expected: self.vars.len(),
                got: vars.len(),
            });
        }
        Ok(TruncatedSeries {
            vars,
            cap: self.cap,
            coeffs: self.coeffs.clone(),
        })
    }

    /// Embeds into a larger variable set: old slot `i` becomes target slot
    /// `positions[i]`.  Positions must be distinct and in range.
    pub fn map_vars(&self, target: VarSet, positions: &[usize]) -> Result<Self> {
        if positions.len() != self.vars.len() {
            return Err(Error::WrongArity {
                expected: self.vars.len(),
                got: positions.len(),
            });
        }
        let mut seen = vec![false; target.len()];
        for &p in positions {
            if p >= target.len() || seen[p] {
                return Err(Error::Internal(
                    "map_vars positions must be distinct and in range".into(),
                ));
            }
            seen[p] = true;
        }
        let mut out = Self::zero(target, self.cap);
        for (mi, c) in &self.coeffs {
            let mut e = vec![0u32; out.vars.len()];
            for (i, &p) in positions.iter().enumerate() {
                e[p] = mi.get(i);
            }
            out.coeffs.insert(Multiindex::new(e), c.clone());
        }
        Ok(out)
    }

    // ----- ring operations -----

    fn add_assign_term(&mut self, mi: Multiindex, c: GaussianRational) {
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(mi) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = &*o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        let mut out = self.clone();
        for (mi, c) in &other.coeffs {
            out.add_assign_term(mi.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        let mut out = self.clone();
        for (mi, c) in &other.coeffs {
            out.add_assign_term(mi.clone(), -c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = -&*c;
        }
        out
    }

    pub fn scale(&self, k: &GaussianRational) -> Self {
        if k.is_zero() {
            return Self::zero(self.vars.clone(), self.cap);
        }
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = &*c * k;
        }
        out
    }

    /// Exact Cauchy product in the quotient ring.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        let mut out = Self::zero(self.vars.clone(), self.cap);
        for (ma, ca) in &self.coeffs {
            let da = ma.degree();
            if da > self.cap {
                continue;
            }
            for (mb, cb) in &other.coeffs {
                if da + mb.degree() > self.cap {
                    continue;
                }
                out.add_assign_term(ma.plus(mb), ca * cb);
            }
        }
        Ok(out)
    }

    /// Multiplies by a single monomial term (cheaper than a full `mul`).
    pub fn mul_term(&self, mi: &Multiindex, c: &GaussianRational) -> Result<Self> {
        if mi.len() != self.vars.len() {
            return Err(Error::WrongArity {
                expected: self.vars.len(),
                got: mi.len(),
            });
        }
        let mut out = Self::zero(self.vars.clone(), self.cap);
        if c.is_zero() {
            return Ok(out);
        }
        let d = mi.degree();
        for (ma, ca) in &self.coeffs {
            if ma.degree() + d <= self.cap {
                out.coeffs.insert(ma.plus(mi), ca * c);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::one(self.vars.clone(), self.cap);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Partial derivative; the result's cap drops by one.
    pub fn partial_derivative(&self, var: &str) -> Result<Self> {
        let k = self
            .vars
            .index_of(var)
            .ok_or_else(|| Error::UnknownVar(var.to_string()))?;
        self.partial_derivative_at(k)
    }

    pub fn partial_derivative_at(&self, k: usize) -> Result<Self> {
        if k >= self.vars.len() {
            return Err(Error::UnknownVar(format!("slot {k}")));
        }
        let cap = self.cap.checked_sub(1).ok_or_else(|| {
            Error::CapExhausted("derivative of a cap-0 truncation is unknown".into())
        })?;
        let mut out = Self::zero(self.vars.clone(), cap);
        for (mi, c) in &self.coeffs {
            if let Some(lower) = mi.minus_unit(k) {
                if lower.degree() <= cap {
                    let e = GaussianRational::from_int(i64::from(mi.get(k)));
                    out.coeffs.insert(lower, c * &e);
                }
            }
        }
        Ok(out)
    }

    /// Iterated partial derivative along a multi-index over this var set.
    pub fn derive_multi(&self, delta: &Multiindex) -> Result<Self> {
        if delta.len() != self.vars.len() {
            return Err(Error::WrongArity {
                expected: self.vars.len(),
                got: delta.len(),
            });
        }
        let mut out = self.clone();
        for k in 0..delta.len() {
            for _ in 0..delta.get(k) {
                out = out.partial_derivative_at(k)?;
            }
        }
        Ok(out)
    }

    /// Composition: replaces variable `i` by `values[i]`.  All values must
    /// share one variable set and cap; the result lives there, capped at the
    /// minimum of the host cap and the value cap.
    ///
    /// A value with nonzero constant term is rejected when the host still has
    /// terms involving that variable on its cap boundary: the dropped tail of
    /// the host could then contribute at low degrees, so the composed
    /// truncation would not be trustworthy.  Nilpotent values (zero constant
    /// term) are always safe.
    pub fn substitute(&self, values: &[TruncatedSeries]) -> Result<TruncatedSeries> {
        if values.len() != self.vars.len() || values.is_empty() {
            return Err(Error::WrongArity {
                expected: self.vars.len(),
                got: values.len(),
            });
        }
        for v in &values[1..] {
            values[0].check_aligned(v)?;
        }
        for (i, v) in values.iter().enumerate() {
            if !v.constant_term().is_zero() && self.boundary_involves(i) {
                return Err(Error::NonNilpotentSubstitution {
                    var: self.vars.name(i).to_string(),
                });
            }
        }
        let out_cap = self.cap.min(values[0].cap);
        let out_vars = values[0].vars.clone();
        let vals: Vec<TruncatedSeries> = values
            .iter()
            .map(|v| v.truncate_to(out_cap))
            .collect::<Result<_>>()?;
        // valuation 0 for non-nilpotent values, so their powers still reach
        // low degrees and high-degree host monomials cannot be skipped.
        let valuations: Vec<u32> = vals.iter().map(|v| v.valuation().unwrap_or(out_cap + 1)).collect();
        let mut powers: Vec<Vec<TruncatedSeries>> = vals
            .iter()
            .map(|v| vec![TruncatedSeries::one(out_vars.clone(), out_cap), v.clone()])
            .collect();
        let power = |i: usize, e: u32, powers: &mut Vec<Vec<TruncatedSeries>>| -> Result<TruncatedSeries> {
            while powers[i].len() <= e as usize {
                let last = powers[i].last().unwrap().clone();
                let next = last.mul(&vals[i])?;
                powers[i].push(next);
            }
            Ok(powers[i][e as usize].clone())
        };
        let mut acc = TruncatedSeries::zero(out_vars.clone(), out_cap);
        for (mi, c) in &self.coeffs {
            let min_deg: u64 = (0..mi.len())
                .map(|i| u64::from(mi.get(i)) * u64::from(valuations[i]))
                .sum();
            if min_deg > u64::from(out_cap) {
                continue;
            }
            let mut term = TruncatedSeries::one(out_vars.clone(), out_cap);
            for i in 0..mi.len() {
                let e = mi.get(i);
                if e > 0 {
                    term = term.mul(&power(i, e, &mut powers)?)?;
                }
            }
            acc = acc.add(&term.scale(c))?;
        }
        Ok(acc)
    }

    fn boundary_involves(&self, slot: usize) -> bool {
        self.coeffs
            .keys()
            .any(|mi| mi.degree() == self.cap && mi.get(slot) > 0)
    }

    // ----- evaluation -----

    /// Evaluates the stored truncating polynomial at an exact point.
    ///
    /// This is polynomial evaluation of the truncation, not of the underlying
    /// analytic germ; it is exact for the germ whenever the series is known to
    /// be polynomial-complete, and always exact for certifying that an
    /// identically-zero truncation evaluates to zero.
    pub fn eval(&self, point: &[GaussianRational]) -> Result<GaussianRational> {
        if point.len() != self.vars.len() {
            return Err(Error::WrongArity {
                expected: self.vars.len(),
                got: point.len(),
            });
        }
        let mut acc = GaussianRational::zero();
        for (mi, c) in &self.coeffs {
            let mut term = c.clone();
            for i in 0..mi.len() {
                let e = mi.get(i);
                if e > 0 {
                    term = &term * &point[i].pow(e);
                }
            }
            acc = &acc + &term;
        }
        Ok(acc)
    }

    /// Folds one variable to an exact constant (polynomial semantics, as in
    /// [`TruncatedSeries::eval`]); the variable remains in the list with
    /// exponent zero everywhere.
    pub fn partial_eval(&self, var: &str, value: &GaussianRational) -> Result<Self> {
        let k = self
            .vars
            .index_of(var)
            .ok_or_else(|| Error::UnknownVar(var.to_string()))?;
        let mut out = Self::zero(self.vars.clone(), self.cap);
        for (mi, c) in &self.coeffs {
            let e = mi.get(k);
            let mut folded = mi.clone();
            let scaled = if e == 0 {
                c.clone()
            } else {
                let mut exps = mi.exponents().to_vec();
                exps[k] = 0;
                folded = Multiindex::new(exps);
                c * &value.pow(e)
            };
            out.add_assign_term(folded, scaled);
        }
        Ok(out)
    }

    /// Sets the listed variables to zero.  This is a graded ring morphism, so
    /// the result is the exact truncation of the restricted germ.
    pub fn restrict_zero(&self, vars: &[&str]) -> Result<Self> {
        let mut slots = Vec::with_capacity(vars.len());
        for v in vars {
            slots.push(
                self.vars
                    .index_of(v)
                    .ok_or_else(|| Error::UnknownVar(v.to_string()))?,
            );
        }
        let mut out = Self::zero(self.vars.clone(), self.cap);
        for (mi, c) in &self.coeffs {
            if slots.iter().all(|&k| mi.get(k) == 0) {
                out.coeffs.insert(mi.clone(), c.clone());
            }
        }
        Ok(out)
    }

    // ----- units -----

    /// Multiplicative inverse of a unit (nonzero constant term), by Newton
    /// iteration `x <- x(2 - s x)`; the number of correct orders doubles each
    /// round, so `ceil(log2(cap+1)) + 1` rounds suffice.
    pub fn invert_unit(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::NotAUnit);
        }
        let mut x = Self::constant(self.vars.clone(), self.cap, c0.inv()?);
        let two = Self::constant(
            self.vars.clone(),
            self.cap,
            GaussianRational::from_int(2),
        );
        let mut correct: u64 = 1;
        while correct <= u64::from(self.cap) {
            let sx = self.mul(&x)?;
            x = x.mul(&two.sub(&sx)?)?;
            correct *= 2;
        }
        Ok(x)
    }

    /// Conjugates every coefficient (variables untouched).
    pub fn conjugate_coeffs(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.conj();
        }
        out
    }
}

impl fmt::Display for TruncatedSeries {
    /// Canonical form: graded-lex term order, `*` between coefficient and
    /// variables, `^` for powers, complex coefficients parenthesized.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (mi, c) in &self.coeffs {
            let cs = c.to_string();
            let needs_parens = cs[1..].contains('+') || cs[1..].contains('-');
            // Fold a plain leading minus into the separator.
            let (sep, body) = if !needs_parens && cs.starts_with('-') {
                ("-", cs[1..].to_string())
            } else {
                ("+", cs)
            };
            if first {
                if sep == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sep} ")?;
            }
            first = false;
            let mono: Vec<String> = (0..mi.len())
                .filter(|&i| mi.get(i) > 0)
                .map(|i| {
                    let e = mi.get(i);
                    if e == 1 {
                        self.vars.name(i).to_string()
                    } else {
                        format!("{}^{}", self.vars.name(i), e)
                    }
                })
                .collect();
            if mono.is_empty() {
                if needs_parens {
                    write!(f, "({body})")?;
                } else {
                    write!(f, "{body}")?;
                }
            } else if needs_parens {
                write!(f, "({body})*{}", mono.join("*"))?;
            } else if body == "1" {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{body}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::GaussianRational as G;

    fn vs(names: &[&str]) -> VarSet {
        VarSet::of(names)
    }

    fn poly(vars: &VarSet, cap: u32, terms: &[(&[u32], G)]) -> TruncatedSeries {
        TruncatedSeries::from_terms(
            vars.clone(),
            cap,
            terms
                .iter()
                .map(|(e, c)| (Multiindex::new(e.to_vec()), c.clone())),
        )
        .unwrap()
    }

    #[test]
    fn product_truncates_at_cap() {
        let v = vs(&["z"]);
        let a = poly(&v, 2, &[(&[0], G::one()), (&[1], G::one()), (&[2], G::one())]);
        let b = poly(&v, 2, &[(&[0], G::one()), (&[1], G::one())]);
        let p = a.mul(&b).unwrap();
        let want = poly(
            &v,
            2,
            &[(&[0], G::one()), (&[1], G::from_int(2)), (&[2], G::from_int(2))],
        );
        assert_eq!(p, want);
    }

    #[test]
    fn derivative_drops_cap() {
        let v = vs(&["z"]);
        let one_plus_z = poly(&v, 3, &[(&[0], G::one()), (&[1], G::one())]);
        let cubed = one_plus_z.pow(3).unwrap();
        let d = cubed.partial_derivative("z").unwrap();
        assert_eq!(d.cap(), 2);
        let want = poly(
            &v,
            2,
            &[(&[0], G::from_int(3)), (&[1], G::from_int(6)), (&[2], G::from_int(3))],
        );
        assert_eq!(d, want);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let v = vs(&["z", "w"]);
        let c = TruncatedSeries::constant(v, 4, G::from_ratio(5, 3));
        assert!(c.partial_derivative("w").unwrap().is_zero());
    }

    #[test]
    fn substitution_composes() {
        let vz = vs(&["z"]);
        let vy = vs(&["y"]);
        // z^2 with z -> y + y^2 at cap 3 gives y^2 + 2 y^3.
        let host = poly(&vz, 3, &[(&[2], G::one())]);
        let val = poly(&vy, 3, &[(&[1], G::one()), (&[2], G::one())]);
        let got = host.substitute(&[val]).unwrap();
        let want = poly(&vy, 3, &[(&[2], G::one()), (&[3], G::from_int(2))]);
        assert_eq!(got, want);
    }

    #[test]
    fn substitution_of_zero_extracts_constant_term() {
        let vz = vs(&["z"]);
        let host = poly(&vz, 4, &[(&[0], G::from_int(7)), (&[1], G::one())]);
        let zero = TruncatedSeries::zero(vs(&["w"]), 4);
        let got = host.substitute(&[zero]).unwrap();
        assert_eq!(got.constant_term(), G::from_int(7));
        assert_eq!(got.num_terms(), 1);
    }

    #[test]
    fn substitution_into_polynomial_below_cap() {
        let vz = vs(&["z"]);
        let vw = vs(&["w"]);
        let host = poly(&vz, 4, &[(&[0], G::one()), (&[1], G::one())]);
        let val = poly(&vw, 4, &[(&[2], G::one())]);
        let got = host.substitute(&[val]).unwrap();
        let want = poly(&vw, 4, &[(&[0], G::one()), (&[2], G::one())]);
        assert_eq!(got, want);
    }

    #[test]
    fn non_nilpotent_substitution_is_rejected_on_the_boundary() {
        let vz = vs(&["z"]);
        let vw = vs(&["w"]);
        // z^2 sits on the cap-2 boundary, so z -> 1 + w is refused.
        let host = poly(&vz, 2, &[(&[2], G::one())]);
        let val = poly(&vw, 2, &[(&[0], G::one()), (&[1], G::one())]);
        match host.substitute(&[val]) {
            Err(Error::NonNilpotentSubstitution { var }) => assert_eq!(var, "z"),
            other => panic!("expected NonNilpotentSubstitution, got {other:?}"),
        }
    }

    #[test]
    fn invert_geometric() {
        let v = vs(&["z"]);
        let s = poly(&v, 3, &[(&[0], G::one()), (&[1], -G::one())]);
        let inv = s.invert_unit().unwrap();
        let want = poly(
            &v,
            3,
            &[(&[0], G::one()), (&[1], G::one()), (&[2], G::one()), (&[3], G::one())],
        );
        assert_eq!(inv, want);
        assert!(s.mul(&inv).unwrap().sub(&TruncatedSeries::one(v, 3)).unwrap().is_zero());
    }

    #[test]
    fn invert_complex_unit() {
        let v = vs(&["u"]);
        let s = poly(&v, 2, &[(&[0], G::one()), (&[1], G::i())]);
        let inv = s.invert_unit().unwrap();
        let want = poly(
            &v,
            2,
            &[(&[0], G::one()), (&[1], -G::i()), (&[2], -G::one())],
        );
        assert_eq!(inv, want);
    }

    #[test]
    fn invert_non_unit_fails() {
        let v = vs(&["z"]);
        let s = poly(&v, 3, &[(&[1], G::one())]);
        assert_eq!(s.invert_unit(), Err(Error::NotAUnit));
    }

    #[test]
    fn alignment_errors() {
        let a = TruncatedSeries::one(vs(&["z"]), 3);
        let b = TruncatedSeries::one(vs(&["w"]), 3);
        assert!(matches!(a.mul(&b), Err(Error::VarMismatch { .. })));
        let c = TruncatedSeries::one(vs(&["z"]), 2);
        assert!(matches!(a.add(&c), Err(Error::CapMismatch { .. })));
    }

    #[test]
    fn restrict_zero_is_exact() {
        let v = vs(&["z", "w"]);
        let s = poly(
            &v,
            3,
            &[(&[0, 0], G::from_int(4)), (&[1, 0], G::one()), (&[1, 2], G::one())],
        );
        let r = s.restrict_zero(&["w"]).unwrap();
        let want = poly(&v, 3, &[(&[0, 0], G::from_int(4)), (&[1, 0], G::one())]);
        assert_eq!(r, want);
    }

    #[test]
    fn display_is_canonical() {
        let v = vs(&["z1", "u"]);
        let s = poly(
            &v,
            3,
            &[
                (&[0, 0], G::from_ratio(1, 2)),
                (&[2, 1], G::from_parts(0, 1, -1, 1)),
                (&[1, 0], G::from_parts(1, 2, 3, 4)),
            ],
        );
        assert_eq!(s.to_string(), "1/2 + (1/2+3/4*i)*z1 - i*z1^2*u");
    }
}
