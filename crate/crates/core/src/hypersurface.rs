//! Real and complex defining functions of hypersurface germs.
//!
//! A germ is given as `v = φ(z, z̄, u)` with `w = u + iv`; we store φ as an
//! exact polynomial over the slots `z1..zn, c1..cn, u`, where `c_j` stands
//! for the formal conjugate `z̄_j` (conjugation only ever acts on
//! coefficients, never on variables).  Construction checks two invariants
//! rather than assuming them: reality (the coefficient of `z^α c^β u^k`
//! equals the conjugate of the coefficient of `z^β c^α u^k`) and
//! normalization (no constant or linear part, so the germ passes through the
//! origin with standard tangent).
//!
//! The complex defining function `ρ(z, a, b)` satisfies `w = ρ(z, z̄, w̄)` on
//! the germ and is obtained by eliminating `u` from `b = u − iφ(z, a, u)`;
//! every solve here goes through the implicit-function layer, so all series
//! are exact images of the true germs in the truncation quotient.


use crate::error::{Error, Result};
use crate::multiindex::Multiindex;
use crate::parser::{self, PolyMap};
use crate::rational::GaussianRational;
use crate::series::{TruncatedSeries, VarSet};
use crate::solve::solve_implicit;

/// Variable set `z1..zn, c1..cn, u` for real defining functions.
pub fn real_vars(n: usize) -> VarSet {
    let mut names = Vec::with_capacity(2 * n + 1);
    for i in 1..=n {
        names.push(format!("z{i}"));
    }
    for i in 1..=n {
        names.push(format!("c{i}"));
    }
    names.push("u".to_string());
    VarSet::new(names)
}

/// Variable set `z1..zn, a1..an, b` for complex defining functions.
pub fn complex_vars(n: usize) -> VarSet {
    let mut names = Vec::with_capacity(2 * n + 1);
    for i in 1..=n {
        names.push(format!("z{i}"));
    }
    for i in 1..=n {
        names.push(format!("a{i}"));
    }
    names.push("b".to_string());
    VarSet::new(names)
}

/// A real-analytic hypersurface germ `v = φ(z, z̄, u)` through the origin.
///
/// The exact polynomial is kept as the source of truth; truncations at any
/// cap are rendered on demand, which keeps cap choices local to each
/// pipeline stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealDefining {
    n: usize,
    poly: PolyMap,
}

impl RealDefining {
    /// Wraps an exact polynomial over `z1..zn, c1..cn, u`, verifying the
    /// reality and normalization invariants.
    pub fn new(n: usize, poly: PolyMap) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadSpec("CR dimension n must be at least 1".into()));
        }
        let nv = 2 * n + 1;
        let vars = real_vars(n);
        for (mi, c) in &poly {
            if mi.len() != nv {
                return Err(Error::WrongArity {
                    expected: nv,
                    got: mi.len(),
                });
            }
            if c.is_zero() {
                return Err(Error::Internal("polynomial stores a zero coefficient".into()));
            }
            if mi.degree() == 0 {
                return Err(Error::NotNormalized(format!(
                    "constant term {c} present; translate the germ to the origin"
                )));
            }
            if mi.degree() == 1 {
                return Err(Error::NotNormalized(format!(
                    "linear term {c}*{} present; renormalize the tangent plane",
                    monomial_name(&vars, mi)
                )));
            }
            // Reality: coeff(z^α c^β u^k) must equal conj(coeff(z^β c^α u^k)).
            let partner_mi = swap_blocks(mi, n);
            let partner = poly
                .get(&partner_mi)
                .cloned()
                .unwrap_or_else(GaussianRational::zero);
            if partner != c.conj() {
                return Err(Error::RealityViolation {
                    monomial: monomial_name(&vars, mi),
                    coeff: c.to_string(),
                    partner: partner.to_string(),
                });
            }
        }
        Ok(RealDefining { n, poly })
    }

    /// Parses the DSL text and validates the invariants.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        Self::new(n, parser::parse_polynomial(text, n)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn poly(&self) -> &PolyMap {
        &self.poly
    }

    /// Total degree of the defining polynomial (0 when φ = 0).
    pub fn degree(&self) -> u32 {
        self.poly.keys().map(Multiindex::degree).max().unwrap_or(0)
    }

    /// The base point (the origin after normalization), in `z,c,u` slots.
    pub fn base(&self) -> Vec<GaussianRational> {
        vec![GaussianRational::zero(); 2 * self.n + 1]
    }

    /// Exact truncation of φ at `cap` (drops monomials of higher degree,
    /// which is the quotient-ring image of the polynomial).
    pub fn phi_series(&self, cap: u32) -> TruncatedSeries {
        TruncatedSeries::from_terms(
            real_vars(self.n),
            cap,
            self.poly
                .iter()
                .filter(|(mi, _)| mi.degree() <= cap)
                .map(|(mi, c)| (mi.clone(), c.clone())),
        )
        .expect("filtered terms respect the cap")
    }
}

fn swap_blocks(mi: &Multiindex, n: usize) -> Multiindex {
    let mut e = mi.exponents().to_vec();
    for i in 0..n {
        e.swap(i, n + i);
    }
    Multiindex::new(e)
}

fn monomial_name(vars: &VarSet, mi: &Multiindex) -> String {
    let mut parts = Vec::new();
    for i in 0..mi.len() {
        match mi.get(i) {
            0 => {}
            1 => parts.push(vars.name(i).to_string()),
            e => parts.push(format!("{}^{e}", vars.name(i))),
        }
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

/// The complex defining function `ρ(z, a, b)` of a germ, truncated at its
/// construction cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexDefining {
    n: usize,
    rho: TruncatedSeries,
}

impl ComplexDefining {
    /// Wraps a raw series over `z1..zn, a1..an, b` (used for hand-built
    /// examples; pipeline code goes through [`real_to_complex`]).
    pub fn from_series(n: usize, rho: TruncatedSeries) -> Result<Self> {
        if rho.vars() != &complex_vars(n) {
            return Err(Error::VarMismatch {
                left: complex_vars(n).names().join(","),
                right: rho.vars().names().join(","),
            });
        }
        Ok(ComplexDefining { n, rho })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> &TruncatedSeries {
        &self.rho
    }

    pub fn cap(&self) -> u32 {
        self.rho.cap()
    }
}

/// Eliminates `u` from `b = u − iφ(z, a, u)` and returns
/// `ρ = b + 2iφ(z, a, u(z, a, b))`, exact at `cap`.
pub fn real_to_complex(h: &RealDefining, cap: u32) -> Result<ComplexDefining> {
    let n = h.n();
    let phi = h.phi_series(cap);
    // Solve u − iφ(z, c, u) − b = 0 for u(z, c, b): variables z, c, b, u with
    // the unknown last.
    let mut names: Vec<String> = real_vars(n).names().to_vec();
    names.pop();
    names.push("b".to_string());
    names.push("u".to_string());
    let solve_vars = VarSet::new(names);
    let positions: Vec<usize> = (0..2 * n).chain([2 * n + 1]).collect();
    let phi_in_solve = phi.map_vars(solve_vars.clone(), &positions)?;
    let u_var = TruncatedSeries::variable_at(solve_vars.clone(), cap, 2 * n + 1)?;
    let b_var = TruncatedSeries::variable_at(solve_vars.clone(), cap, 2 * n)?;
    let minus_i = -GaussianRational::i();
    let equation = u_var.add(&phi_in_solve.scale(&minus_i))?.sub(&b_var)?;
    let solved = solve_implicit(&[equation], 2 * n + 1, cap)?;
    // u∘ lives over (z, c, b); reinterpret as (z, a, b).
    let target = complex_vars(n);
    let u_round = solved[0].rename_vars(target.clone())?;
    // ρ = b + 2iφ(z, a, u∘).
    let mut values: Vec<TruncatedSeries> = Vec::with_capacity(2 * n + 1);
    for i in 0..2 * n {
        values.push(TruncatedSeries::variable_at(target.clone(), cap, i)?);
    }
    values.push(u_round);
    let phi_composed = phi.substitute(&values)?;
    let two_i = &GaussianRational::i() + &GaussianRational::i();
    let b_target = TruncatedSeries::variable_at(target, cap, 2 * n)?;
    let rho = b_target.add(&phi_composed.scale(&two_i))?;
    Ok(ComplexDefining { n, rho })
}

/// The determinant of the `(n+1)×(n+1)` Jacobian of the Segre system
/// `{ρ_{z_1}, …, ρ_{z_n}, ρ}` with respect to `(a_1..a_n, b)` at an exact
/// point — the matrix whose invertibility gates the derivation of the
/// associated PDE system.  For the sphere at the origin this is `2i`.
pub fn levi_determinant(
    r: &ComplexDefining,
    at: &[GaussianRational],
) -> Result<GaussianRational> {
    let n = r.n();
    if at.len() != 2 * n + 1 {
        return Err(Error::WrongArity {
            expected: 2 * n + 1,
            got: at.len(),
        });
    }
    let mut m = vec![vec![GaussianRational::zero(); n + 1]; n + 1];
    for i in 0..n {
        let rho_zi = r.rho().partial_derivative_at(i)?;
        for j in 0..n {
            m[i][j] = rho_zi.partial_derivative_at(n + j)?.eval(at)?;
        }
        m[i][n] = rho_zi.partial_derivative_at(2 * n)?.eval(at)?;
    }
    for j in 0..n {
        m[n][j] = r.rho().partial_derivative_at(n + j)?.eval(at)?;
    }
    m[n][n] = r.rho().partial_derivative_at(2 * n)?.eval(at)?;
    crate::linalg::det_exact(&m)
}

/// Residual of the reality identity `ρ(z, a, ρ̄(a, z, b)) = b`, where
/// `ρ̄(a, z, b)` is ρ with conjugated coefficients and the z/a blocks
/// swapped.  Identically zero for the complexification of a real germ.
pub fn reality_residual(r: &ComplexDefining) -> Result<TruncatedSeries> {
    let n = r.n();
    let vars = r.rho().vars().clone();
    let cap = r.cap();
    // ρ̄(a, z, b): conjugate coefficients, then swap the z- and a-blocks.
    let mut positions: Vec<usize> = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        positions.push(n + i);
    }
    for i in 0..n {
        positions.push(i);
    }
    positions.push(2 * n);
    let rho_bar = r
        .rho()
        .conjugate_coeffs()
        .map_vars(vars.clone(), &positions)?;
    let mut values: Vec<TruncatedSeries> = Vec::with_capacity(2 * n + 1);
    for i in 0..2 * n {
        values.push(TruncatedSeries::variable_at(vars.clone(), cap, i)?);
    }
    values.push(rho_bar);
    let composed = r.rho().substitute(&values)?;
    let b_var = TruncatedSeries::variable_at(vars, cap, 2 * n)?;
    composed.sub(&b_var)
}

/// Recovers φ from ρ by solving `u + iv − ρ(z, c, u − iv) = 0` for
/// `v(z, c, u)`; the result reproduces the input of [`real_to_complex`]
/// exactly up to `cap`.
pub fn recover_phi(r: &ComplexDefining, cap: u32) -> Result<TruncatedSeries> {
    let n = r.n();
    if cap > r.cap() {
        return Err(Error::CapExhausted(format!(
            "round trip at cap {cap} needs ρ at cap ≥ {cap}, have {}",
            r.cap()
        )));
    }
    // Variables z, c, u, v with the unknown v last.
    let mut names: Vec<String> = real_vars(n).names().to_vec();
    names.push("v".to_string());
    let solve_vars = VarSet::new(names);
    let u_var = TruncatedSeries::variable_at(solve_vars.clone(), cap, 2 * n)?;
    let v_var = TruncatedSeries::variable_at(solve_vars.clone(), cap, 2 * n + 1)?;
    let i_unit = GaussianRational::i();
    // ρ(z, c, u − iv): z_k ↦ z_k, a_k ↦ c_k, b ↦ u − iv.
    let mut values: Vec<TruncatedSeries> = Vec::with_capacity(2 * n + 1);
    for k in 0..2 * n {
        values.push(TruncatedSeries::variable_at(solve_vars.clone(), cap, k)?);
    }
    values.push(u_var.sub(&v_var.scale(&i_unit))?);
    let rho_composed = r.rho().truncate_to(cap)?.substitute(&values)?;
    let equation = u_var.add(&v_var.scale(&i_unit))?.sub(&rho_composed)?;
    let solved = solve_implicit(&[equation], 2 * n + 1, cap)?;
    solved[0].rename_vars(real_vars(n))
}

/// A transversal holomorphic embedding witness into the hyperquadric
/// `Im W = −Σ_{j≤l}|Z_j|² + Σ_{j>l}|Z_j|²` of signature `l` in `C^{m+1}`:
/// polynomial components `f_1, …, f_m, g` in `(z_1..z_n, w)`, all vanishing
/// at the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingCertificate {
    m: usize,
    signature_l: usize,
    /// `f_1..f_m` followed by `g`, each over slots `z1..zn, w`.
    maps: Vec<PolyMap>,
}

impl EmbeddingCertificate {
    pub fn new(m: usize, signature_l: usize, maps: Vec<PolyMap>) -> Result<Self> {
        if maps.len() != m + 1 {
            return Err(Error::BadCertificate(format!(
                "expected {} components (f_1..f_{m}, g), got {}",
                m + 1,
                maps.len()
            )));
        }
        if signature_l > m {
            return Err(Error::BadCertificate(format!(
                "signature {signature_l} exceeds target dimension {m}"
            )));
        }
        for map in &maps {
            if let Some(mi) = map.keys().next() {
                if map.contains_key(&Multiindex::zero(mi.len())) {
                    return Err(Error::BadCertificate(
                        "components must vanish at the base point".into(),
                    ));
                }
            }
        }
        Ok(EmbeddingCertificate {
            m,
            signature_l,
            maps,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn signature_l(&self) -> usize {
        self.signature_l
    }

    /// Sign of the `j`-th square (0-based), per the hyperquadric signature.
    fn sign(&self, j: usize) -> GaussianRational {
        if j < self.signature_l {
            GaussianRational::from_int(-1)
        } else {
            GaussianRational::one()
        }
    }

    /// Renders component `j` (0-based; `j = m` is `g`) as a series over
    /// `vars` at `cap`, with `z`-slots at `z_positions` and `w` replaced by
    /// `w_value`; coefficients conjugated first when `conjugated`.
    fn component_series(
        &self,
        j: usize,
        n: usize,
        conjugated: bool,
        z_values: &[TruncatedSeries],
        w_value: &TruncatedSeries,
    ) -> Result<TruncatedSeries> {
        let cap = w_value.cap();
        let zw_vars = {
            let mut names: Vec<String> = (1..=n).map(|i| format!("z{i}")).collect();
            names.push("w".to_string());
            VarSet::new(names)
        };
        let mut series = TruncatedSeries::from_terms(
            zw_vars,
            cap,
            self.maps[j]
                .iter()
                .filter(|(mi, _)| mi.degree() <= cap)
                .map(|(mi, c)| (mi.clone(), c.clone())),
        )?;
        if conjugated {
            series = series.conjugate_coeffs();
        }
        let mut values: Vec<TruncatedSeries> = z_values.to_vec();
        values.push(w_value.clone());
        series.substitute(&values)
    }
}

/// Checks the defining relation of the target hyperquadric on the germ:
/// substitutes `w = u + iφ`, `w̄ = u − iφ` and tests that
/// `(g − ḡ) − 2i·Σ_j ε_j f_j f̄_j` vanishes as a series in `(z, c, u)` up to
/// total order `order`.  Monotone in `order`: once it fails it fails for
/// every higher order.
pub fn verify_certificate(
    h: &RealDefining,
    cert: &EmbeddingCertificate,
    order: u32,
) -> Result<bool> {
    Ok(certificate_residual(h, cert, order)?.is_zero())
}

/// The residual series behind [`verify_certificate`] (useful for reporting
/// which coefficient breaks).
pub fn certificate_residual(
    h: &RealDefining,
    cert: &EmbeddingCertificate,
    order: u32,
) -> Result<TruncatedSeries> {
    let n = h.n();
    for map in &cert.maps {
        for mi in map.keys() {
            if mi.len() != n + 1 {
                return Err(Error::BadCertificate(format!(
                    "component has {} variable slots, germ needs {}",
                    mi.len(),
                    n + 1
                )));
            }
        }
    }
    let vars = real_vars(n);
    let cap = order;
    let phi = h.phi_series(cap);
    let u_var = TruncatedSeries::variable_at(vars.clone(), cap, 2 * n)?;
    let i_unit = GaussianRational::i();
    let w_plus = u_var.add(&phi.scale(&i_unit))?;
    let w_minus = u_var.sub(&phi.scale(&i_unit))?;
    let z_slots: Vec<TruncatedSeries> = (0..n)
        .map(|k| TruncatedSeries::variable_at(vars.clone(), cap, k))
        .collect::<Result<_>>()?;
    let c_slots: Vec<TruncatedSeries> = (0..n)
        .map(|k| TruncatedSeries::variable_at(vars.clone(), cap, n + k))
        .collect::<Result<_>>()?;
    let g_plus = cert.component_series(cert.m, n, false, &z_slots, &w_plus)?;
    let g_minus = cert.component_series(cert.m, n, true, &c_slots, &w_minus)?;
    let mut residual = g_plus.sub(&g_minus)?;
    let two_i = &i_unit + &i_unit;
    for j in 0..cert.m {
        let f_plus = cert.component_series(j, n, false, &z_slots, &w_plus)?;
        let f_minus = cert.component_series(j, n, true, &c_slots, &w_minus)?;
        let square = f_plus.mul(&f_minus)?.scale(&(&two_i * &cert.sign(j)));
        residual = residual.sub(&square)?;
    }
    Ok(residual)
}

/// The polarized certificate relation along the Segre family: as a series in
/// `(z, a, b)`,
/// `g(z, ρ) − 2i·Σ_j ε_j f̄_j(a, b)·f_j(z, ρ) − ḡ(a, b) ≡ 0`.
/// For each frozen Segre parameter `(a, b)` this exhibits an exact constant
/// linear relation among the certificate components along that Segre graph.
pub fn certificate_segre_relation(
    r: &ComplexDefining,
    cert: &EmbeddingCertificate,
) -> Result<TruncatedSeries> {
    let n = r.n();
    let vars = r.rho().vars().clone();
    let cap = r.cap();
    let z_slots: Vec<TruncatedSeries> = (0..n)
        .map(|k| TruncatedSeries::variable_at(vars.clone(), cap, k))
        .collect::<Result<_>>()?;
    let a_slots: Vec<TruncatedSeries> = (0..n)
        .map(|k| TruncatedSeries::variable_at(vars.clone(), cap, n + k))
        .collect::<Result<_>>()?;
    let b_var = TruncatedSeries::variable_at(vars.clone(), cap, 2 * n)?;
    let g_here = cert.component_series(cert.m, n, false, &z_slots, r.rho())?;
    let g_bar = cert.component_series(cert.m, n, true, &a_slots, &b_var)?;
    let mut residual = g_here.sub(&g_bar)?;
    let two_i = &GaussianRational::i() + &GaussianRational::i();
    for j in 0..cert.m {
        let f_here = cert.component_series(j, n, false, &z_slots, r.rho())?;
        let f_bar = cert.component_series(j, n, true, &a_slots, &b_var)?;
        let term = f_here.mul(&f_bar)?.scale(&(&two_i * &cert.sign(j)));
        residual = residual.sub(&term)?;
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere() -> RealDefining {
        RealDefining::parse("z1*c1", 1).unwrap()
    }

    #[test]
    fn reality_violation_is_caught() {
        let err = RealDefining::parse("z1*c1 + i*z1^2", 1).unwrap_err();
        assert!(matches!(err, Error::RealityViolation { .. }), "{err}");
        // Conjugate-symmetric completion is accepted.
        RealDefining::parse("z1*c1 + i*z1^2 - i*c1^2", 1).unwrap();
    }

    #[test]
    fn normalization_is_enforced() {
        assert!(matches!(
            RealDefining::parse("1 + z1*c1", 1),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            RealDefining::parse("u + z1*c1", 1),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn sphere_rho_is_exact() {
        let r = real_to_complex(&sphere(), 6).unwrap();
        // ρ = b + 2i z a: u drops out because φ is u-independent.
        let vars = complex_vars(1);
        let want = TruncatedSeries::from_terms(
            vars,
            6,
            [
                (
                    Multiindex::new(vec![0, 0, 1]),
                    GaussianRational::one(),
                ),
                (
                    Multiindex::new(vec![1, 1, 0]),
                    &GaussianRational::i() + &GaussianRational::i(),
                ),
            ],
        )
        .unwrap();
        assert_eq!(r.rho(), &want);
    }

    #[test]
    fn u_dependent_phi_round_trips() {
        // φ with genuine u-dependence exercises the reversion.
        let h = RealDefining::parse("z1*c1 + 1/2*z1*c1*u + z1^2*c1^2", 1).unwrap();
        let r = real_to_complex(&h, 8).unwrap();
        let back = recover_phi(&r, 8).unwrap();
        assert_eq!(back, h.phi_series(8));
    }

    #[test]
    fn levi_determinants_match_hand_values() {
        let r = real_to_complex(&sphere(), 4).unwrap();
        let at = vec![GaussianRational::zero(); 3];
        let two_i = &GaussianRational::i() + &GaussianRational::i();
        assert_eq!(levi_determinant(&r, &at).unwrap(), two_i);

        // Levi-flat ρ = b.
        let flat = ComplexDefining::from_series(
            1,
            TruncatedSeries::variable_at(complex_vars(1), 4, 2).unwrap(),
        )
        .unwrap();
        assert!(levi_determinant(&flat, &at).unwrap().is_zero());

        let abs4 = RealDefining::parse("z1*c1 + z1^2*c1^2", 1).unwrap();
        let r4 = real_to_complex(&abs4, 4).unwrap();
        assert_eq!(levi_determinant(&r4, &at).unwrap(), two_i);
    }

    #[test]
    fn reality_residual_vanishes() {
        for text in ["z1*c1", "z1*c1 + z1^2*c1^2", "z1*c1 + 1/3*z1*c1*u"] {
            let h = RealDefining::parse(text, 1).unwrap();
            let r = real_to_complex(&h, 7).unwrap();
            let res = reality_residual(&r).unwrap();
            assert!(res.is_zero(), "{text}: {res}");
        }
    }

    #[test]
    fn sphere_certificate_verifies() {
        let mut f = PolyMap::new();
        f.insert(Multiindex::new(vec![1, 0]), GaussianRational::one());
        let mut g = PolyMap::new();
        g.insert(Multiindex::new(vec![0, 1]), GaussianRational::one());
        let cert = EmbeddingCertificate::new(1, 0, vec![f, g]).unwrap();
        assert!(verify_certificate(&sphere(), &cert, 10).unwrap());
        // The same certificate fails on a different germ.
        let abs4 = RealDefining::parse("z1*c1 + z1^2*c1^2", 1).unwrap();
        assert!(!verify_certificate(&abs4, &cert, 10).unwrap());
    }

    #[test]
    fn segre_relation_vanishes_for_sphere() {
        let mut f = PolyMap::new();
        f.insert(Multiindex::new(vec![1, 0]), GaussianRational::one());
        let mut g = PolyMap::new();
        g.insert(Multiindex::new(vec![0, 1]), GaussianRational::one());
        let cert = EmbeddingCertificate::new(1, 0, vec![f, g]).unwrap();
        let r = real_to_complex(&sphere(), 6).unwrap();
        assert!(certificate_segre_relation(&r, &cert).unwrap().is_zero());
    }
}
