//! The associated second-order PDE system of a Levi-nondegenerate germ.
//!
//! Solving `{ρ_{z_i}(z, a, b) = ξ⁰_i + ξ_i, ρ(z, a, b) = w}` for `(a, b)`
//! gives holomorphic functions `A_1..A_n, B` of the jet coordinates
//! `(z, w, ξ)`; the Segre graphs through a point with 1-jet ξ are exactly
//! the solutions of `w_{z_i z_j} = Φ_ij(z, w, w′)` with
//! `Φ_ij = ρ_{z_i z_j}(z, A, B)`.  Here `ξ⁰` is the 1-jet of the central
//! Segre graph at the origin (computed from ρ, zero for normalized germs),
//! and the ξ-variables measure the offset from it, so every series in this
//! module is a germ at the origin of jet space.
//!
//! Jets of Φ are taken two independent ways: directly (differentiating the
//! stored series) and through the chain-rule recursion that differentiates
//! the defining identities and solves for the top `A/B`-jets with the same
//! bordered matrix at every stage.  The two routes share nothing past ρ
//! itself, so their forced agreement is a deep self-check of the whole
//! construction.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hypersurface::ComplexDefining;
use crate::linalg::solve_series_system;
use crate::multiindex::Multiindex;
use crate::rational::GaussianRational;
use crate::series::{TruncatedSeries, VarSet};
use crate::solve::solve_implicit;

/// Jet-space variable set `z1..zn, w, xi1..xin`.
pub fn pde_vars(n: usize) -> VarSet {
    let mut names = Vec::with_capacity(2 * n + 1);
    for i in 1..=n {
        names.push(format!("z{i}"));
    }
    names.push("w".to_string());
    for i in 1..=n {
        names.push(format!("xi{i}"));
    }
    VarSet::new(names)
}

/// A complete second-order system `w_{z_iz_j} = Φ_ij(z, w, ξ)`.
#[derive(Debug, Clone)]
pub struct PdeSystem {
    n: usize,
    /// Symmetric n×n matrix of series over [`pde_vars`], uniform cap.
    phi: Vec<Vec<TruncatedSeries>>,
    /// 1-jet of the central Segre graph; the ξ-variables are offsets from it.
    xi0: Vec<GaussianRational>,
}

impl PdeSystem {
    /// Builds a formal system from explicit entries (used for hand-built and
    /// randomized trial systems; genuine germs go through [`derive_pde`]).
    pub fn from_entries(n: usize, phi: Vec<Vec<TruncatedSeries>>) -> Result<Self> {
        if phi.len() != n || phi.iter().any(|row| row.len() != n) {
            return Err(Error::NonSquare {
                rows: phi.len(),
                cols: phi.first().map_or(0, Vec::len),
            });
        }
        let vars = pde_vars(n);
        let cap = phi
            .first()
            .and_then(|r| r.first())
            .map(TruncatedSeries::cap)
            .ok_or_else(|| Error::BadSpec("empty system".into()))?;
        for row in &phi {
            for s in row {
                if s.vars() != &vars {
                    return Err(Error::VarMismatch {
                        left: vars.names().join(","),
                        right: s.vars().names().join(","),
                    });
                }
                if s.cap() != cap {
                    return Err(Error::CapMismatch {
                        left: cap,
                        right: s.cap(),
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                if phi[i][j] != phi[j][i] {
                    return Err(Error::BadSpec(format!(
                        "system entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(PdeSystem {
            n,
            phi,
            xi0: vec![GaussianRational::zero(); n],
        })
    }

    /// Convenience for n = 1 formal systems: a single entry Φ(z, w, ξ).
    pub fn scalar(phi: TruncatedSeries) -> Result<Self> {
        Self::from_entries(1, vec![vec![phi]])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> u32 {
        self.phi[0][0].cap()
    }

    pub fn vars(&self) -> &VarSet {
        self.phi[0][0].vars()
    }

    pub fn phi(&self, i: usize, j: usize) -> &TruncatedSeries {
        &self.phi[i][j]
    }

    pub fn entries(&self) -> &[Vec<TruncatedSeries>] {
        &self.phi
    }

    /// ξ⁰, the base 1-jet at the expansion point `(0, 0, ξ⁰)`.
    pub fn base_jet(&self) -> &[GaussianRational] {
        &self.xi0
    }
}

/// The inverse jet parametrization `(A_1..A_n, B)` of the Segre family.
#[derive(Debug, Clone)]
pub struct InverseMap {
    a: Vec<TruncatedSeries>,
    b: TruncatedSeries,
}

impl InverseMap {
    pub fn a(&self, l: usize) -> &TruncatedSeries {
        &self.a[l]
    }

    pub fn b(&self) -> &TruncatedSeries {
        &self.b
    }

    pub fn cap(&self) -> u32 {
        self.b.cap()
    }
}

/// Derives the associated PDE system of `r` at the origin.
///
/// Requires `cap ≥ 3` on ρ (the system entries lose two orders to the
/// second derivatives) and a Levi-nondegenerate origin.
pub fn derive_pde(r: &ComplexDefining) -> Result<(PdeSystem, InverseMap)> {
    let n = r.n();
    let cap = r.cap();
    if cap < 3 {
        return Err(Error::CapExhausted(format!(
            "associated system needs ρ at cap ≥ 3, have {cap}"
        )));
    }
    let origin = vec![GaussianRational::zero(); 2 * n + 1];
    let levi = crate::hypersurface::levi_determinant(r, &origin)?;
    if levi.is_zero() {
        return Err(Error::LeviDegenerate {
            det: levi.to_string(),
        });
    }
    // ξ⁰_i = ρ_{z_i}(0,0,0).
    let xi0: Vec<GaussianRational> = (0..n)
        .map(|i| r.rho().coefficient(&Multiindex::unit(2 * n + 1, i)))
        .collect();
    // Solve variables: z1..zn, w, xi1..xin (params), then a1..an, b.
    let mut names: Vec<String> = pde_vars(n).names().to_vec();
    for i in 1..=n {
        names.push(format!("a{i}"));
    }
    names.push("b".to_string());
    let solve_vars = VarSet::new(names);
    let solve_cap = cap - 1;
    // ρ and its z-derivatives, re-homed over the solve variables.
    let rho_positions: Vec<usize> = (0..n)
        .chain(2 * n + 1..3 * n + 1)
        .chain([3 * n + 1])
        .collect();
    let mut equations = Vec::with_capacity(n + 1);
    for i in 0..n {
        let rho_zi = r
            .rho()
            .partial_derivative_at(i)?
            .map_vars(solve_vars.clone(), &rho_positions)?;
        let xi_var = TruncatedSeries::variable_at(solve_vars.clone(), cap - 1, n + 1 + i)?;
        let xi0_const =
            TruncatedSeries::constant(solve_vars.clone(), cap - 1, xi0[i].clone());
        equations.push(rho_zi.sub(&xi_var)?.sub(&xi0_const)?);
    }
    let rho_home = r
        .rho()
        .map_vars(solve_vars.clone(), &rho_positions)?
        .truncate_to(solve_cap)?;
    let w_var = TruncatedSeries::variable_at(solve_vars.clone(), solve_cap, n)?;
    equations.push(rho_home.sub(&w_var)?);
    let solved = solve_implicit(&equations, 2 * n + 1, solve_cap)?;
    let jet_vars = pde_vars(n);
    let a: Vec<TruncatedSeries> = solved[..n]
        .iter()
        .map(|s| s.rename_vars(jet_vars.clone()))
        .collect::<Result<_>>()?;
    let b = solved[n].rename_vars(jet_vars.clone())?;
    let inverse = InverseMap { a, b };
    // Φ_ij = ρ_{z_i z_j}(z, A, B).
    let mut compose_values: Vec<TruncatedSeries> = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        compose_values.push(TruncatedSeries::variable_at(jet_vars.clone(), solve_cap, k)?);
    }
    compose_values.extend(inverse.a.iter().cloned());
    compose_values.push(inverse.b.clone());
    let mut phi = vec![vec![TruncatedSeries::zero(jet_vars.clone(), cap - 2); n]; n];
    for i in 0..n {
        for j in i..n {
            let rho_zizj = r
                .rho()
                .partial_derivative_at(i)?
                .partial_derivative_at(j)?;
            let entry = rho_zizj.substitute(&compose_values)?;
            phi[i][j] = entry.clone();
            phi[j][i] = entry;
        }
    }
    // Verify both defining identities of the inverse map before handing the
    // system out.
    let residuals = inverse_residuals(r, &inverse)?;
    for res in &residuals {
        if !res.is_zero() {
            return Err(Error::ResidualNonzero(format!(
                "inverse jet map fails its defining identity: {res}"
            )));
        }
    }
    Ok((PdeSystem { n, phi, xi0 }, inverse))
}

/// Residuals of `ρ_{z_i}(z, A, B) − ξ⁰_i − ξ_i` and `ρ(z, A, B) − w` over
/// the jet variables; all identically zero for a valid inverse map.
pub fn inverse_residuals(r: &ComplexDefining, inv: &InverseMap) -> Result<Vec<TruncatedSeries>> {
    let n = r.n();
    let jet_vars = inv.b.vars().clone();
    let jet_cap = inv.cap();
    let mut values: Vec<TruncatedSeries> = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        values.push(TruncatedSeries::variable_at(jet_vars.clone(), jet_cap, k)?);
    }
    for l in 0..n {
        values.push(inv.a[l].clone());
    }
    values.push(inv.b.clone());
    let mut residuals = Vec::with_capacity(n + 1);
    for i in 0..n {
        let xi0_i = r.rho().coefficient(&Multiindex::unit(2 * n + 1, i));
        let lhs = r.rho().partial_derivative_at(i)?.substitute(&values)?;
        let xi_var = TruncatedSeries::variable_at(jet_vars.clone(), lhs.cap(), n + 1 + i)?;
        let c = TruncatedSeries::constant(jet_vars.clone(), lhs.cap(), xi0_i);
        residuals.push(lhs.sub(&xi_var)?.sub(&c)?);
    }
    let lhs = r.rho().substitute(&values)?;
    let w_var = TruncatedSeries::variable_at(jet_vars.clone(), lhs.cap(), n)?;
    residuals.push(lhs.sub(&w_var)?);
    Ok(residuals)
}

/// Residuals of the biholomorphic consistency `(z, A, B)(z, ρ, ρ_z − ξ⁰)
/// = (z, a, b)` as series in `(z, a, b)`.
pub fn inverse_consistency(
    r: &ComplexDefining,
    inv: &InverseMap,
) -> Result<Vec<TruncatedSeries>> {
    let n = r.n();
    let cvars = r.rho().vars().clone();
    let cap = inv.cap().min(r.cap() - 1);
    let mut values: Vec<TruncatedSeries> = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        values.push(TruncatedSeries::variable_at(cvars.clone(), cap, k)?);
    }
    values.push(r.rho().truncate_to(cap)?);
    for l in 0..n {
        let xi0_l = r.rho().coefficient(&Multiindex::unit(2 * n + 1, l));
        let c = TruncatedSeries::constant(cvars.clone(), cap, xi0_l);
        values.push(r.rho().partial_derivative_at(l)?.truncate_to(cap)?.sub(&c)?);
    }
    let mut residuals = Vec::with_capacity(n + 1);
    for l in 0..n {
        let composed = inv.a[l].truncate_to(cap)?.substitute(&values)?;
        let a_var = TruncatedSeries::variable_at(cvars.clone(), composed.cap(), n + l)?;
        residuals.push(composed.sub(&a_var)?);
    }
    let composed = inv.b.truncate_to(cap)?.substitute(&values)?;
    let b_var = TruncatedSeries::variable_at(cvars.clone(), composed.cap(), 2 * n)?;
    residuals.push(composed.sub(&b_var)?);
    Ok(residuals)
}

/// Residuals of the Segre-solution property: as series in `(z, a, b)`,
/// `ρ_{z_iz_j}(z, a, b) − Φ_ij(z, ρ, ρ_z − ξ⁰) ≡ 0` — every Segre graph
/// solves the derived system.
pub fn segre_solution_residuals(
    r: &ComplexDefining,
    sys: &PdeSystem,
) -> Result<Vec<TruncatedSeries>> {
    let n = r.n();
    let cvars = r.rho().vars().clone();
    let cap = sys.cap().min(r.cap().saturating_sub(2));
    let mut values: Vec<TruncatedSeries> = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        values.push(TruncatedSeries::variable_at(cvars.clone(), cap, k)?);
    }
    values.push(r.rho().truncate_to(cap)?);
    for l in 0..n {
        let xi0_l = r.rho().coefficient(&Multiindex::unit(2 * n + 1, l));
        let c = TruncatedSeries::constant(cvars.clone(), cap, xi0_l);
        values.push(r.rho().partial_derivative_at(l)?.truncate_to(cap)?.sub(&c)?);
    }
    let mut residuals = Vec::new();
    for i in 0..n {
        for j in i..n {
            let lhs = r
                .rho()
                .partial_derivative_at(i)?
                .partial_derivative_at(j)?
                .truncate_to(cap)?;
            let rhs = sys.phi(i, j).truncate_to(cap)?.substitute(&values)?;
            residuals.push(lhs.sub(&rhs)?);
        }
    }
    Ok(residuals)
}

/// The total-derivative operator `D_k = ∂_{z_k} + ξ_k ∂_w + Σ_l Φ_lk ∂_{ξ_l}`
/// applied to a series over the jet variables; the cap drops by one.
pub fn total_derivative(sys: &PdeSystem, s: &TruncatedSeries, k: usize) -> Result<TruncatedSeries> {
    let n = sys.n();
    let vars = s.vars().clone();
    let out_cap = s.cap().checked_sub(1).ok_or_else(|| {
        Error::CapExhausted("total derivative of a cap-0 truncation is unknown".into())
    })?;
    let mut out = s.partial_derivative_at(k)?;
    let xi_k = TruncatedSeries::variable_at(vars, out_cap, n + 1 + k)?;
    out = out.add(&s.partial_derivative_at(n)?.mul(&xi_k)?)?;
    for l in 0..n {
        let phi_lk = sys.phi(l, k).truncate_to(out_cap)?;
        out = out.add(&s.partial_derivative_at(n + 1 + l)?.mul(&phi_lk)?)?;
    }
    Ok(out)
}

/// Order-independence defect of the prolonged third jets: for every index
/// multiset `{i,j,k}`, `ξ_ijk` computed as `D_k Φ_ij` must not depend on the
/// split into a pair and a direction.  Returns the largest residual (most
/// terms after truncation to `order`); identically zero for systems derived
/// from genuine hypersurfaces, nonzero for generic formal systems.
pub fn integrability_residual(sys: &PdeSystem, order: u32) -> Result<TruncatedSeries> {
    let n = sys.n();
    let cap = order.min(sys.cap().saturating_sub(1));
    let mut worst = TruncatedSeries::zero(sys.vars().clone(), cap);
    if n == 1 {
        return Ok(worst);
    }
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                // All distinct (pair, direction) splits of the multiset.
                let mut splits: Vec<(usize, usize, usize)> =
                    vec![(i, j, k), (i, k, j), (j, k, i)];
                splits.dedup();
                let jets: Vec<TruncatedSeries> = splits
                    .iter()
                    .map(|&(p, q, d)| {
                        total_derivative(sys, sys.phi(p, q), d)?.truncate_to(cap)
                    })
                    .collect::<Result<_>>()?;
                for x in 1..jets.len() {
                    let diff = jets[0].sub(&jets[x])?;
                    if diff.num_terms() > worst.num_terms() {
                        worst = diff;
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Direct jet of a system entry: `∂^δ Φ_ij` over the jet variables.
pub fn phi_jet(
    sys: &PdeSystem,
    i: usize,
    j: usize,
    delta: &Multiindex,
) -> Result<TruncatedSeries> {
    sys.phi(i, j).derive_multi(delta)
}

// ----- chain-rule (Cramer) recomputation of Φ-jets -----
//
// Expressions are sums of products of three leaf kinds:
//   CRho(γ):   the composed ρ-jet  ρ^{(γ)}(z, A, B), γ over (z, a, b) slots;
//   AJet(l,δ): ∂^δ A_l,  δ over the jet variables;
//   BJet(δ):   ∂^δ B.
// Differentiation in a jet direction is symbolic (chain rule on CRho, index
// raising on AJet/BJet); evaluation substitutes concrete series, where the
// A/B-jets are solved stage by stage from the differentiated defining
// identities — at each stage the top jets appear linearly through the same
// matrix whose determinant is the Levi determinant at the base point.

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Leaf {
    CRho(Multiindex),
    AJet(usize, Multiindex),
    BJet(Multiindex),
}

type Expr = BTreeMap<Vec<Leaf>, GaussianRational>;

fn expr_add_term(e: &mut Expr, leaves: Vec<Leaf>, c: GaussianRational) {
    if c.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match e.entry(leaves) {
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

fn leaf_derivative(leaf: &Leaf, d: usize, n: usize) -> Vec<(Vec<Leaf>, GaussianRational)> {
    let one = GaussianRational::one();
    match leaf {
        Leaf::CRho(gamma) => {
            let mut out = Vec::new();
            if d < n {
                // Direction z_d also hits the explicit z-slot of ρ.
                out.push((vec![Leaf::CRho(gamma.plus_unit(d))], one.clone()));
            }
            let e_d = Multiindex::unit(2 * n + 1, d);
            for l in 0..n {
                out.push((
                    vec![
                        Leaf::CRho(gamma.plus_unit(n + l)),
                        Leaf::AJet(l, e_d.clone()),
                    ],
                    one.clone(),
                ));
            }
            out.push((vec![Leaf::CRho(gamma.plus_unit(2 * n)), Leaf::BJet(e_d)], one));
            out
        }
        Leaf::AJet(l, delta) => vec![(vec![Leaf::AJet(*l, delta.plus_unit(d))], one)],
        Leaf::BJet(delta) => vec![(vec![Leaf::BJet(delta.plus_unit(d))], one)],
    }
}

fn expr_derivative(e: &Expr, d: usize, n: usize) -> Expr {
    let mut out = Expr::new();
    for (leaves, coeff) in e {
        for pos in 0..leaves.len() {
            for (dleaves, dc) in leaf_derivative(&leaves[pos], d, n) {
                let mut product: Vec<Leaf> = leaves[..pos].to_vec();
                product.extend(dleaves);
                product.extend_from_slice(&leaves[pos + 1..]);
                product.sort();
                expr_add_term(&mut out, product, coeff * &dc);
            }
        }
    }
    out
}

struct CramerContext<'a> {
    r: &'a ComplexDefining,
    inv: &'a InverseMap,
    n: usize,
    /// Solved A/B-jets by δ; order-0 entries seed the table with A_l and B.
    a_jets: BTreeMap<Multiindex, Vec<TruncatedSeries>>,
    b_jets: BTreeMap<Multiindex, TruncatedSeries>,
    /// Composed ρ-jets by γ, cached.
    crho: BTreeMap<Multiindex, TruncatedSeries>,
    /// Highest jet order solved so far.
    solved_order: u32,
}

impl<'a> CramerContext<'a> {
    fn new(r: &'a ComplexDefining, inv: &'a InverseMap) -> Self {
        let n = r.n();
        let zero_delta = Multiindex::zero(2 * n + 1);
        let mut a_jets = BTreeMap::new();
        a_jets.insert(zero_delta.clone(), inv.a.clone());
        let mut b_jets = BTreeMap::new();
        b_jets.insert(zero_delta, inv.b().clone());
        CramerContext {
            r,
            inv,
            n,
            a_jets,
            b_jets,
            crho: BTreeMap::new(),
            solved_order: 0,
        }
    }

    fn jet_cap(&self) -> u32 {
        self.inv.cap()
    }

    fn crho(&mut self, gamma: &Multiindex) -> Result<TruncatedSeries> {
        if let Some(s) = self.crho.get(gamma) {
            return Ok(s.clone());
        }
        let n = self.n;
        let jet_vars = self.inv.b().vars().clone();
        let derived = self.r.rho().derive_multi(gamma)?;
        let cap = derived.cap().min(self.jet_cap());
        let mut values: Vec<TruncatedSeries> = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            values.push(TruncatedSeries::variable_at(jet_vars.clone(), self.jet_cap(), k)?);
        }
        for l in 0..n {
            values.push(self.inv.a[l].clone());
        }
        values.push(self.inv.b().clone());
        let composed = derived.truncate_to(cap.min(derived.cap()))?.substitute(&values)?;
        self.crho.insert(gamma.clone(), composed.clone());
        Ok(composed)
    }

    /// Evaluates an expression, treating every leaf as known.  Fails if an
    /// A/B-jet has not been solved yet.
    fn eval(&mut self, e: &Expr, cap: u32) -> Result<TruncatedSeries> {
        let jet_vars = self.inv.b().vars().clone();
        let mut acc = TruncatedSeries::zero(jet_vars.clone(), cap);
        for (leaves, coeff) in e {
            let mut term = TruncatedSeries::constant(jet_vars.clone(), cap, coeff.clone());
            for leaf in leaves {
                let factor = match leaf {
                    Leaf::CRho(g) => self.crho(g)?,
                    Leaf::AJet(l, d) => self
                        .a_jets
                        .get(d)
                        .map(|v| v[*l].clone())
                        .ok_or_else(|| Error::Internal(format!("unsolved A-jet {d}")))?,
                    Leaf::BJet(d) => self
                        .b_jets
                        .get(d)
                        .cloned()
                        .ok_or_else(|| Error::Internal(format!("unsolved B-jet {d}")))?,
                };
                term = term.mul(&factor.truncate_to(cap.min(factor.cap()))?.rename_vars(jet_vars.clone())?)?;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Solves all A/B-jets of the next order from the differentiated
    /// defining identities.
    fn solve_next_order(&mut self) -> Result<()> {
        let n = self.n;
        let order = self.solved_order + 1;
        let jet_vars = self.inv.b().vars().clone();
        let stage_cap = self
            .jet_cap()
            .checked_sub(order)
            .ok_or_else(|| Error::CapExhausted("jet order exceeds inverse-map cap".into()))?;
        // The bordered matrix: rows are the identities (z_i-derivatives then
        // the base), columns the unknown top jets (A_1..A_n, B).
        let mut matrix = vec![vec![TruncatedSeries::zero(jet_vars.clone(), stage_cap); n + 1]; n + 1];
        for i in 0..n {
            let base = Multiindex::unit(2 * n + 1, i);
            for l in 0..n {
                let s = self.crho(&base.plus_unit(n + l))?;
                matrix[i][l] = s.truncate_to(stage_cap.min(s.cap()))?;
            }
            let s = self.crho(&base.plus_unit(2 * n))?;
            matrix[i][n] = s.truncate_to(stage_cap.min(s.cap()))?;
        }
        for l in 0..n {
            let s = self.crho(&Multiindex::unit(2 * n + 1, n + l))?;
            matrix[n][l] = s.truncate_to(stage_cap.min(s.cap()))?;
        }
        let s = self.crho(&Multiindex::unit(2 * n + 1, 2 * n))?;
        matrix[n][n] = s.truncate_to(stage_cap.min(s.cap()))?;

        for delta in crate::multiindex::multiindices_of_degree(2 * n + 1, order) {
            // Differentiate the identities symbolically along δ.
            let mut idents: Vec<Expr> = Vec::with_capacity(n + 1);
            for i in 0..n {
                let mut e = Expr::new();
                expr_add_term(
                    &mut e,
                    vec![Leaf::CRho(Multiindex::unit(2 * n + 1, i))],
                    GaussianRational::one(),
                );
                idents.push(e);
            }
            let mut base = Expr::new();
            expr_add_term(
                &mut base,
                vec![Leaf::CRho(Multiindex::zero(2 * n + 1))],
                GaussianRational::one(),
            );
            idents.push(base);
            for d in delta.slot_sequence() {
                idents = idents.iter().map(|e| expr_derivative(e, d, n)).collect();
            }
            // Split each identity into the top-jet part (linear, coefficient
            // matrix as above) and the already-known rest.
            let mut rhs: Vec<TruncatedSeries> = Vec::with_capacity(n + 1);
            for (row, ident) in idents.iter().enumerate() {
                let mut known = Expr::new();
                for (leaves, coeff) in ident {
                    let is_top = leaves.iter().any(|leaf| match leaf {
                        Leaf::AJet(_, d) | Leaf::BJet(d) => d == &delta,
                        Leaf::CRho(_) => false,
                    });
                    if !is_top {
                        expr_add_term(&mut known, leaves.clone(), coeff.clone());
                    }
                }
                let mut value = self.eval(&known, stage_cap)?.neg();
                // ∂^δ of the right-hand sides (ξ⁰_i + ξ_i or w): nonzero only
                // at first order.
                if order == 1 {
                    let d = delta.max_nonzero_slot().expect("order ≥ 1");
                    let hits = if row < n { d == n + 1 + row } else { d == n };
                    if hits {
                        let one =
                            TruncatedSeries::constant(jet_vars.clone(), stage_cap, GaussianRational::one());
                        value = value.add(&one)?;
                    }
                }
                rhs.push(value);
            }
            let solution = solve_series_system(&matrix, &rhs)?;
            self.a_jets.insert(delta.clone(), solution[..n].to_vec());
            self.b_jets.insert(delta.clone(), solution[n].clone());
        }
        self.solved_order = order;
        Ok(())
    }
}

/// Recomputes `∂^δ Φ_ij` through the chain-rule recursion: symbolic
/// differentiation of `ρ_{z_iz_j}(z, A, B)` with all A/B-jets solved from
/// the differentiated defining identities.  Shares only ρ and the order-0
/// inverse map with [`phi_jet`]; the two must agree exactly.
pub fn phi_jet_cramer(
    r: &ComplexDefining,
    inv: &InverseMap,
    i: usize,
    j: usize,
    delta: &Multiindex,
) -> Result<TruncatedSeries> {
    let n = r.n();
    let mut ctx = CramerContext::new(r, inv);
    while ctx.solved_order < delta.degree() {
        ctx.solve_next_order()?;
    }
    let mut expr = Expr::new();
    expr_add_term(
        &mut expr,
        vec![Leaf::CRho(
            Multiindex::unit(2 * n + 1, i).plus_unit(j),
        )],
        GaussianRational::one(),
    );
    for d in delta.slot_sequence() {
        expr = expr_derivative(&expr, d, n);
    }
    let cap = ctx
        .jet_cap()
        .checked_sub(1 + delta.degree())
        .ok_or_else(|| Error::CapExhausted("jet order exceeds cap".into()))?;
    ctx.eval(&expr, cap)
}

/// Direct Φ-jet with the mandatory low-order cross-check: for `|δ| ≤ 3` the
/// chain-rule recomputation must agree with direct differentiation on their
/// common cap.
pub fn phi_jet_verified(
    r: &ComplexDefining,
    sys: &PdeSystem,
    inv: &InverseMap,
    i: usize,
    j: usize,
    delta: &Multiindex,
) -> Result<TruncatedSeries> {
    let direct = phi_jet(sys, i, j, delta)?;
    if delta.degree() <= 3 {
        let recomputed = phi_jet_cramer(r, inv, i, j, delta)?;
        let common = direct.cap().min(recomputed.cap());
        if direct.truncate_to(common)? != recomputed.truncate_to(common)? {
            return Err(Error::Internal(format!(
                "jet cross-check failed for ∂^{delta} Φ_{}{}",
                i + 1,
                j + 1
            )));
        }
    }
    Ok(direct)
}
