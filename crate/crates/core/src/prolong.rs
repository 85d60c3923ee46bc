//! Jet-space bookkeeping: jet variables and monomials, the universal
//! prolongation polynomials, and their evaluation on a concrete system.
//!
//! Every solution of `w_{z_iz_j} = Φ_ij` has all higher derivatives
//! determined by the 2-jet: applying the total-derivative operator
//! `D_k = ∂_{z_k} + ξ_k ∂_w + Σ_l Φ_lk ∂_{ξ_l}` repeatedly produces, for
//! each multiindex α with |α| ≥ 2, a universal polynomial `Q_α` in the
//! first-jet variables ξ and formal jet symbols `∂^β Φ_ij` whose value on a
//! concrete system is the prolonged derivative `w^{(α)}` as a function of
//! `(z, w, ξ)`.  The polynomials are universal: they never look at the
//! system, only at n, and their total degree is at most `|α| − 1` counting
//! every ξ-factor and every Φ-jet factor once.
//!
//! For non-integrable formal systems the value of `w^{(α)}` depends on the
//! order in which the directions of α are applied; we fix the nondecreasing
//! order, and the order-dependence is exactly the integrability residual of
//! the system.

use std::collections::BTreeMap;
use std::fmt;

use crate::assoc_pde::PdeSystem;
use crate::error::{Error, Result};
use crate::multiindex::{multiindices_in_degree_range, Multiindex};
use crate::rational::GaussianRational;
use crate::series::TruncatedSeries;

/// A jet coordinate `w^{(β)}`, β over the z-variables with |β| ≥ 1.
pub type JetVariable = Multiindex;

/// A monomial in jet variables: a multiset of factors with multiplicities.
///
/// Plain degree counts factors; weighted degree counts each factor with the
/// order |β| of its derivative.  The ordering is graded: by weighted degree,
/// then plain degree, then the factor map — so the constant monomial sorts
/// first in any enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetMonomial {
    n: usize,
    factors: BTreeMap<JetVariable, u32>,
}

impl JetMonomial {
    pub fn one(n: usize) -> Self {
        JetMonomial {
            n,
            factors: BTreeMap::new(),
        }
    }

    pub fn from_factors<I>(n: usize, factors: I) -> Self
    where
        I: IntoIterator<Item = (JetVariable, u32)>,
    {
        let mut out = JetMonomial::one(n);
        for (v, e) in factors {
            if e > 0 {
                *out.factors.entry(v).or_insert(0) += e;
            }
        }
        out
    }

    /// Single jet variable `w^{(β)}`.
    pub fn variable(beta: JetVariable) -> Self {
        let n = beta.len();
        JetMonomial::from_factors(n, [(beta, 1)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factors(&self) -> impl Iterator<Item = (&JetVariable, u32)> {
        self.factors.iter().map(|(v, &e)| (v, e))
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn plain_degree(&self) -> u32 {
        self.factors.values().sum()
    }

    pub fn weighted_degree(&self) -> u32 {
        self.factors.iter().map(|(v, &e)| v.degree() * e).sum()
    }

    pub fn times(&self, beta: &JetVariable) -> Self {
        let mut out = self.clone();
        *out.factors.entry(beta.clone()).or_insert(0) += 1;
        out
    }

    /// Highest derivative order among the factors (0 for the constant).
    pub fn max_jet_order(&self) -> u32 {
        self.factors.keys().map(Multiindex::degree).max().unwrap_or(0)
    }
}

impl PartialOrd for JetMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for JetMonomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.weighted_degree(), self.plain_degree())
            .cmp(&(other.weighted_degree(), other.plain_degree()))
            .then_with(|| self.factors.cmp(&other.factors))
    }
}

impl fmt::Display for JetMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (v, e) in &self.factors {
            if !first {
                write!(f, "·")?;
            }
            first = false;
            if self.n == 1 && v.degree() <= 4 {
                write!(f, "w{}", "′".repeat(v.degree() as usize))?;
            } else {
                write!(f, "w^{v}")?;
            }
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// All jet monomials in variables `1 ≤ |β| ≤ k+1` with weighted degree
/// ≤ `weighted_cap` and plain degree ≤ `degree_cap`, in the graded order of
/// [`JetMonomial`]; the constant monomial sits at index 0.
pub fn enumerate_monomials(
    n: usize,
    k: u32,
    weighted_cap: u32,
    degree_cap: u32,
) -> Vec<JetMonomial> {
    let variables = multiindices_in_degree_range(n, 1, k + 1);
    let mut result = vec![JetMonomial::one(n)];
    for beta in &variables {
        let mut extended = Vec::new();
        for mono in &result {
            let mut current = mono.clone();
            loop {
                current = current.times(beta);
                if current.weighted_degree() > weighted_cap
                    || current.plain_degree() > degree_cap
                {
                    break;
                }
                extended.push(current.clone());
            }
        }
        result.extend(extended);
    }
    result.sort();
    result
}

/// A formal symbol in a prolongation polynomial: either a first-jet
/// variable ξ_l or a jet `∂^β Φ_ij` of a system entry (β over the 2n+1 jet
/// directions, i ≤ j canonically).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum JetSymbol {
    Xi(usize),
    Phi {
        i: usize,
        j: usize,
        beta: Multiindex,
    },
}

impl JetSymbol {
    fn phi(i: usize, j: usize, beta: Multiindex) -> Self {
        JetSymbol::Phi {
            i: i.min(j),
            j: i.max(j),
            beta,
        }
    }
}

impl fmt::Display for JetSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JetSymbol::Xi(l) => write!(f, "xi{}", l + 1),
            JetSymbol::Phi { i, j, beta } => {
                if beta.degree() == 0 {
                    write!(f, "Phi{}{}", i + 1, j + 1)
                } else {
                    write!(f, "Phi{}{}^{beta}", i + 1, j + 1)
                }
            }
        }
    }
}

type SymbolMonomial = BTreeMap<JetSymbol, u32>;

/// A polynomial in [`JetSymbol`]s with exact coefficients — the universal
/// prolongation polynomials live here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetPoly {
    n: usize,
    terms: BTreeMap<SymbolMonomial, GaussianRational>,
}

impl JetPoly {
    pub fn zero(n: usize) -> Self {
        JetPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn symbol(n: usize, s: JetSymbol) -> Self {
        let mut mono = SymbolMonomial::new();
        mono.insert(s, 1);
        let mut terms = BTreeMap::new();
        terms.insert(mono, GaussianRational::one());
        JetPoly { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SymbolMonomial, &GaussianRational)> {
        self.terms.iter()
    }

    /// Total degree, counting every ξ-factor and every Φ-jet factor once.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.values().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, mono: SymbolMonomial, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Occupied(mut slot) => {
                let sum = &*slot.get() + &c;
                if sum.is_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
        }
    }

    pub fn add(&self, other: &JetPoly) -> JetPoly {
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.add_term(mono.clone(), c.clone());
        }
        out
    }

    pub fn mul(&self, other: &JetPoly) -> JetPoly {
        let mut out = JetPoly::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut mono = ma.clone();
                for (s, e) in mb {
                    *mono.entry(s.clone()).or_insert(0) += e;
                }
                out.add_term(mono, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &GaussianRational) -> JetPoly {
        let mut out = JetPoly::zero(self.n);
        for (mono, v) in &self.terms {
            out.add_term(mono.clone(), v * c);
        }
        out
    }

    /// The total derivative `D_k` acting symbolically: ξ_l becomes Φ_lk, and
    /// a Φ-jet picks up its z_k-, w- and ξ-direction continuations.
    pub fn total_derivative(&self, k: usize) -> JetPoly {
        let n = self.n;
        let mut out = JetPoly::zero(n);
        for (mono, coeff) in &self.terms {
            for (symbol, &mult) in mono {
                // Product rule: differentiate `symbol` once, keep the rest.
                let mut rest = mono.clone();
                if mult == 1 {
                    rest.remove(symbol);
                } else {
                    rest.insert(symbol.clone(), mult - 1);
                }
                let rest_poly = JetPoly {
                    n,
                    terms: BTreeMap::from([(
                        rest,
                        coeff * &GaussianRational::from_int(mult as i64),
                    )]),
                };
                let derived = match symbol {
                    JetSymbol::Xi(l) => {
                        JetPoly::symbol(n, JetSymbol::phi(*l, k, Multiindex::zero(2 * n + 1)))
                    }
                    JetSymbol::Phi { i, j, beta } => {
                        let mut d = JetPoly::symbol(
                            n,
                            JetSymbol::phi(*i, *j, beta.plus_unit(k)),
                        );
                        let w_term = JetPoly::symbol(n, JetSymbol::Xi(k)).mul(
                            &JetPoly::symbol(n, JetSymbol::phi(*i, *j, beta.plus_unit(n))),
                        );
                        d = d.add(&w_term);
                        for l in 0..n {
                            let phi_lk = JetPoly::symbol(
                                n,
                                JetSymbol::phi(l, k, Multiindex::zero(2 * n + 1)),
                            );
                            let xi_dir = JetPoly::symbol(
                                n,
                                JetSymbol::phi(*i, *j, beta.plus_unit(n + 1 + l)),
                            );
                            d = d.add(&phi_lk.mul(&xi_dir));
                        }
                        d
                    }
                };
                out = out.add(&rest_poly.mul(&derived));
            }
        }
        out
    }

    /// Deepest Φ-jet order |β| appearing in the polynomial.
    pub fn max_phi_jet_order(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|m| m.keys())
            .map(|s| match s {
                JetSymbol::Xi(_) => 0,
                JetSymbol::Phi { beta, .. } => beta.degree(),
            })
            .max()
            .unwrap_or(0)
    }
}

/// The universal polynomials `Q_α` for `2 ≤ |α| ≤ k+1`, built by applying
/// total derivatives in nondecreasing index order.
#[derive(Debug, Clone)]
pub struct ProlongationTable {
    n: usize,
    entries: BTreeMap<Multiindex, JetPoly>,
}

impl ProlongationTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self, alpha: &Multiindex) -> Result<&JetPoly> {
        self.entries.get(alpha).ok_or_else(|| {
            Error::BadSpec(format!("prolongation table has no entry for {alpha}"))
        })
    }

    pub fn max_order(&self) -> u32 {
        self.entries.keys().map(Multiindex::degree).max().unwrap_or(0)
    }
}

/// Builds `Q_α` for all `2 ≤ |α| ≤ k+1`: the |α| = 2 entries are the bare
/// symbols Φ_ij, and each higher entry differentiates the one below it in
/// its largest direction, so the full index sequence is nondecreasing.
pub fn build_prolongation(n: usize, k: u32) -> ProlongationTable {
    let mut entries: BTreeMap<Multiindex, JetPoly> = BTreeMap::new();
    for alpha in multiindices_in_degree_range(n, 2, k + 1) {
        let seq = alpha.slot_sequence();
        let poly = if seq.len() == 2 {
            JetPoly::symbol(n, JetSymbol::phi(seq[0], seq[1], Multiindex::zero(2 * n + 1)))
        } else {
            let last = alpha.max_nonzero_slot().expect("degree ≥ 2");
            let below = alpha.minus_unit(last).expect("slot is nonzero");
            entries
                .get(&below)
                .expect("built in increasing degree order")
                .total_derivative(last)
        };
        entries.insert(alpha, poly);
    }
    ProlongationTable { n, entries }
}

/// Evaluates a prolongation polynomial on a concrete system: ξ_l becomes the
/// jet variable, `∂^β Φ_ij` the derived entry series, all at a uniform cap.
pub fn evaluate_jet_poly(
    poly: &JetPoly,
    sys: &PdeSystem,
    cap: u32,
) -> Result<TruncatedSeries> {
    let n = sys.n();
    let vars = sys.vars().clone();
    let mut acc = TruncatedSeries::zero(vars.clone(), cap);
    for (mono, coeff) in poly.terms() {
        let mut term = TruncatedSeries::constant(vars.clone(), cap, coeff.clone());
        for (symbol, &mult) in mono {
            let factor = match symbol {
                JetSymbol::Xi(l) => TruncatedSeries::variable_at(vars.clone(), cap, n + 1 + l)?,
                JetSymbol::Phi { i, j, beta } => {
                    let derived = sys.phi(*i, *j).derive_multi(beta)?;
                    if derived.cap() < cap {
                        return Err(Error::CapExhausted(format!(
                            "system cap {} cannot supply jet {beta} at output cap {cap}",
                            sys.cap()
                        )));
                    }
                    derived.truncate_to(cap)?
                }
            };
            term = term.mul(&factor.pow(mult)?)?;
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Substitutes the prolonged jets into a monomial: `w^{(β)}` becomes ξ_β for
/// |β| = 1 and the evaluated `Q_β` for |β| ≥ 2; the result is the series in
/// `(z, w, ξ)` giving the monomial's value along solutions through each jet.
pub fn substitute_prolongation(
    mono: &JetMonomial,
    table: &ProlongationTable,
    sys: &PdeSystem,
) -> Result<TruncatedSeries> {
    let n = sys.n();
    let vars = sys.vars().clone();
    // Deepest Φ-jet needed: |β| − 2 for each prolonged factor.
    let depth = mono
        .factors()
        .map(|(v, _)| v.degree().saturating_sub(2))
        .max()
        .unwrap_or(0);
    let cap = sys.cap().checked_sub(depth).ok_or_else(|| {
        Error::CapExhausted(format!(
            "system cap {} too small for monomial {mono}",
            sys.cap()
        ))
    })?;
    let mut acc = TruncatedSeries::one(vars.clone(), cap);
    for (beta, mult) in mono.factors() {
        let factor = if beta.degree() == 1 {
            let l = beta.max_nonzero_slot().expect("degree 1");
            TruncatedSeries::variable_at(vars.clone(), cap, n + 1 + l)?
        } else {
            evaluate_jet_poly(table.q(beta)?, sys, cap)?
        };
        acc = acc.mul(&factor.pow(mult)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assoc_pde::{derive_pde, pde_vars};
    use crate::hypersurface::{real_to_complex, RealDefining};
    use crate::series::VarSet;

    fn formal_scalar(text_coeffs: &[(Vec<u32>, GaussianRational)], cap: u32) -> PdeSystem {
        let phi = TruncatedSeries::from_terms(
            pde_vars(1),
            cap,
            text_coeffs
                .iter()
                .map(|(e, c)| (Multiindex::new(e.clone()), c.clone())),
        )
        .unwrap();
        PdeSystem::scalar(phi).unwrap()
    }

    #[test]
    fn order_two_entries_are_bare_symbols() {
        let table = build_prolongation(2, 2);
        let q20 = table.q(&Multiindex::new(vec![2, 0])).unwrap();
        assert_eq!(
            q20,
            &JetPoly::symbol(2, JetSymbol::phi(0, 0, Multiindex::zero(5)))
        );
        let q11 = table.q(&Multiindex::new(vec![1, 1])).unwrap();
        assert_eq!(
            q11,
            &JetPoly::symbol(2, JetSymbol::phi(0, 1, Multiindex::zero(5)))
        );
    }

    #[test]
    fn scalar_third_prolongation_closed_form() {
        // Q_(3) = Φ_z + ξΦ_w + Φ_ξΦ.
        let table = build_prolongation(1, 2);
        let q3 = table.q(&Multiindex::new(vec![3])).unwrap();
        let phi0 = JetSymbol::phi(0, 0, Multiindex::zero(3));
        let want = JetPoly::symbol(1, JetSymbol::phi(0, 0, Multiindex::new(vec![1, 0, 0])))
            .add(
                &JetPoly::symbol(1, JetSymbol::Xi(0)).mul(&JetPoly::symbol(
                    1,
                    JetSymbol::phi(0, 0, Multiindex::new(vec![0, 1, 0])),
                )),
            )
            .add(
                &JetPoly::symbol(1, phi0).mul(&JetPoly::symbol(
                    1,
                    JetSymbol::phi(0, 0, Multiindex::new(vec![0, 0, 1])),
                )),
            );
        assert_eq!(q3, &want);
    }

    #[test]
    fn degree_bound_holds() {
        for n in 1..=3usize {
            let table = build_prolongation(n, 4);
            for alpha in multiindices_in_degree_range(n, 2, 5) {
                let q = table.q(&alpha).unwrap();
                assert!(
                    q.degree() <= alpha.degree() - 1,
                    "deg Q_{alpha} = {} > {}",
                    q.degree(),
                    alpha.degree() - 1
                );
            }
        }
    }

    #[test]
    fn table_is_total_derivative_coherent() {
        let table = build_prolongation(2, 3);
        for alpha in multiindices_in_degree_range(2, 2, 3) {
            let last = alpha.max_nonzero_slot().unwrap();
            for k in last..2 {
                let bigger = alpha.plus_unit(k);
                if bigger.degree() <= 4 {
                    assert_eq!(
                        table.q(&bigger).unwrap(),
                        &table.q(&alpha).unwrap().total_derivative(k)
                    );
                }
            }
        }
    }

    #[test]
    fn enumerate_monomials_matches_counts() {
        let pq = enumerate_monomials(1, 2, 6, 3);
        assert_eq!(pq.len(), 16);
        assert!(pq[0].is_constant());
        // Strictly graded: weighted degrees nondecreasing.
        for pair in pq.windows(2) {
            assert!(pair[0].weighted_degree() <= pair[1].weighted_degree());
        }
        let tiny = enumerate_monomials(1, 0, 1, 1);
        assert_eq!(tiny.len(), 2);
        assert!(tiny[0].is_constant());
        assert_eq!(tiny[1], JetMonomial::variable(Multiindex::new(vec![1])));
        // Jet-variable counts: C(l+n−1, n−1) variables of each order l.
        let vars3 = multiindices_in_degree_range(2, 3, 3);
        assert_eq!(vars3.len(), 4);
    }

    #[test]
    fn flat_system_kills_higher_jets() {
        let h = RealDefining::parse("z1*c1", 1).unwrap();
        let r = real_to_complex(&h, 8).unwrap();
        let (sys, _) = derive_pde(&r).unwrap();
        let table = build_prolongation(1, 3);
        let w2 = JetMonomial::variable(Multiindex::new(vec![2]));
        assert!(substitute_prolongation(&w2, &table, &sys).unwrap().is_zero());
        let w1sq = JetMonomial::from_factors(1, [(Multiindex::new(vec![1]), 2)]);
        let xi_sq = TruncatedSeries::variable_at(pde_vars(1), sys.cap(), 2)
            .unwrap()
            .pow(2)
            .unwrap();
        assert_eq!(substitute_prolongation(&w1sq, &table, &sys).unwrap(), xi_sq);
        let w3 = JetMonomial::variable(Multiindex::new(vec![3]));
        assert!(substitute_prolongation(&w3, &table, &sys).unwrap().is_zero());
    }

    #[test]
    fn minus_i_xi_squared_third_jet() {
        // Φ = −iξ² exactly: w‴ substitutes to Φ_ξΦ = (−2iξ)(−iξ²) = −2ξ³.
        let sys = formal_scalar(&[(vec![0, 0, 2], -GaussianRational::i())], 6);
        let table = build_prolongation(1, 2);
        let w3 = JetMonomial::variable(Multiindex::new(vec![3]));
        let got = substitute_prolongation(&w3, &table, &sys).unwrap();
        let want = TruncatedSeries::from_terms(
            pde_vars(1),
            got.cap(),
            [(Multiindex::new(vec![0, 0, 3]), GaussianRational::from_int(-2))],
        )
        .unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn formal_xi1_system_has_xi111_equal_xi1() {
        let vars = pde_vars(2);
        let zero = TruncatedSeries::zero(vars.clone(), 5);
        let xi1 = TruncatedSeries::variable_at(vars.clone(), 5, 3).unwrap();
        let sys = PdeSystem::from_entries(
            2,
            vec![vec![xi1.clone(), zero.clone()], vec![zero.clone(), zero]],
        )
        .unwrap();
        let table = build_prolongation(2, 2);
        let w111 = JetMonomial::variable(Multiindex::new(vec![3, 0]));
        let got = substitute_prolongation(&w111, &table, &sys).unwrap();
        assert_eq!(got, xi1.truncate_to(got.cap()).unwrap());
    }

    /// The fundamental soundness check: substituted prolonged jets, evaluated
    /// along Segre graphs, equal the literal derivatives of those graphs.
    #[test]
    fn prolonged_jets_match_segre_graph_derivatives() {
        let cases: [(&str, usize); 2] = [
            ("z1*c1 + z1^2*c1^2", 1),
            ("z1*c1 + z2*c2 + z1^2*c1^2", 2),
        ];
        for (text, n) in cases {
            let h = RealDefining::parse(text, n).unwrap();
            let r = real_to_complex(&h, 9).unwrap();
            let (sys, _) = derive_pde(&r).unwrap();
            let table = build_prolongation(n, 3);
            let cvars: &VarSet = r.rho().vars();
            let cap = sys.cap() - 2;
            let mut values = Vec::new();
            for k in 0..n {
                values.push(TruncatedSeries::variable_at(cvars.clone(), cap, k).unwrap());
            }
            values.push(r.rho().truncate_to(cap).unwrap());
            for l in 0..n {
                values.push(
                    r.rho()
                        .partial_derivative_at(l)
                        .unwrap()
                        .truncate_to(cap)
                        .unwrap(),
                );
            }
            for alpha in multiindices_in_degree_range(n, 3, 4) {
                let mono = JetMonomial::variable(alpha.clone());
                let substituted = substitute_prolongation(&mono, &table, &sys).unwrap();
                let along =
                    substituted.truncate_to(cap.min(substituted.cap())).unwrap();
                let along = along.substitute(&values[..]).unwrap();
                // Literal ∂^α_z of the Segre graph w = ρ(z, a, b).
                let mut full = vec![0u32; 2 * n + 1];
                full[..n].copy_from_slice(alpha.exponents());
                let literal = r
                    .rho()
                    .derive_multi(&Multiindex::new(full))
                    .unwrap()
                    .truncate_to(along.cap())
                    .unwrap();
                assert_eq!(along, literal, "{text}: jet {alpha}");
            }
        }
    }
}
