//! Vanishing-determinant operators detecting hyperquadric-type jet relations
//! of an associated PDE system.
//!
//! For source dimension `n` and a layer index `m ≥ n`, every solution of the
//! associated system that lies on an `m`-dimensional hyperquadric satisfies a
//! polynomial relation among jet monomials of bounded weight.  The relation is
//! indexed by an admissible tuple of derivative multi-indices `α¹, …, α^{m+1}`
//! with `αⁱ = εⁱ` for `i ≤ n` and `1 ≤ |αⁱ| ≤ i − (n − 1)` beyond, and its
//! monomial pool is every jet monomial of weighted degree ≤ `d = Σ|αⁱ|` and
//! plain degree ≤ `m + 1` in the jet variables `w^{(β)}`, `1 ≤ |β| ≤ k + 1`,
//! `k = m − n + 1`.  Linear dependence of the substituted monomials along all
//! solutions is equivalent to the identical vanishing of a generalized
//! Wronskian: the `(s+1) × (s+1)` determinant whose first row is the
//! substituted monomial vector and whose remaining rows are ξ-derivatives
//! `∂^{γʲ}_ξ` of it, `1 ≤ |γʲ| ≤ j`.
//!
//! Soundness contract maintained here:
//! - every matrix entry is the exact truncation image of the corresponding
//!   jet function of the system, built through the prolongation table;
//! - the determinant series of such a matrix is the exact truncation image of
//!   the true determinant germ, so a zero determinant series certifies
//!   vanishing to the reported order and any nonzero coefficient is an exact
//!   witness;
//! - point-mode determinants evaluate entries first and take an exact
//!   determinant, which equals the determinant germ's value only when every
//!   entry is a polynomial fully captured below its cap — verdicts therefore
//!   never claim a nonzero witness from point mode on truncated systems.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::assoc_pde::{derive_pde, pde_vars, PdeSystem};
use crate::error::{Error, Result};
use crate::hypersurface::{real_to_complex, RealDefining};
use crate::linalg::{det_exact, det_series, eval_matrix};
use crate::multiindex::{multiindices_of_degree, Multiindex};
use crate::prolong::{build_prolongation, enumerate_monomials, substitute_prolongation, JetMonomial};
use crate::rational::GaussianRational;
use crate::series::TruncatedSeries;

/// Format version accepted by [`GammaTable::parse`].
pub const GAMMA_TABLE_VERSION: u64 = 1;

/// Largest matrix size for which the pipeline computes a full determinant
/// series; beyond it only the zero-row/zero-column shortcut produces series
/// data.
pub const MAX_SERIES_DET_SIZE: usize = 16;

/// Candidate budget used when the pipeline has to search derivative
/// multi-indices at runtime.
const PIPELINE_SEARCH_BUDGET: usize = 2000;

// ---------------------------------------------------------------------------
// Admissible derivative tuples
// ---------------------------------------------------------------------------

/// Enumerates every admissible tuple `(α¹, …, α^{m+1})` for the given layer:
/// `αⁱ = εⁱ` for `i ≤ n`, then `1 ≤ |αⁱ| ≤ i − (n − 1)` with all entries
/// distinct, extended position by position in graded-lex order.
pub fn enumerate_alpha_choices(n: usize, m: usize) -> Result<Vec<Vec<Multiindex>>> {
    if n == 0 || m < n {
        return Err(Error::BadSpec(format!(
            "derivative tuples require m ≥ n ≥ 1, got n = {n}, m = {m}"
        )));
    }
    let prefix: Vec<Multiindex> = (0..n).map(|i| Multiindex::unit(n, i)).collect();
    let mut tuples = vec![prefix];
    for pos in n..=m {
        // 0-based position `pos` is the 1-based index i = pos + 1, whose
        // degree bound is i − (n − 1) = pos + 2 − n.
        let max_deg = (pos + 2 - n) as u32;
        let mut extended = Vec::new();
        for tuple in &tuples {
            for deg in 1..=max_deg {
                for alpha in multiindices_of_degree(n, deg) {
                    if tuple.contains(&alpha) {
                        continue;
                    }
                    let mut next = tuple.clone();
                    next.push(alpha);
                    extended.push(next);
                }
            }
        }
        tuples = extended;
    }
    Ok(tuples)
}

// ---------------------------------------------------------------------------
// Monomial bases
// ---------------------------------------------------------------------------

/// The pinned 16-monomial basis used for the `(n, m) = (1, 2)` layer, in the
/// classical row order: `w‴(w′)^j` (j ≤ 2), `(w′)^j` (j ≤ 6), `w″(w′)^j`
/// (j ≤ 3), `(w″)²(w′)^j` (j ≤ 1).  It has the same cardinality as the
/// generic weighted box for that layer but exchanges four monomials for the
/// pure `w′`-powers the bordered-determinant derivation produces.
pub fn pq_basis() -> Vec<JetMonomial> {
    let w1 = Multiindex::new(vec![1]);
    let w2 = Multiindex::new(vec![2]);
    let w3 = Multiindex::new(vec![3]);
    let mut basis = Vec::with_capacity(16);
    for j in 0..=2 {
        basis.push(JetMonomial::from_factors(1, [(w3.clone(), 1), (w1.clone(), j)]));
    }
    for j in 0..=6 {
        basis.push(JetMonomial::from_factors(1, [(w1.clone(), j)]));
    }
    for j in 0..=3 {
        basis.push(JetMonomial::from_factors(1, [(w2.clone(), 1), (w1.clone(), j)]));
    }
    for j in 0..=1 {
        basis.push(JetMonomial::from_factors(1, [(w2.clone(), 2), (w1.clone(), j)]));
    }
    basis
}

/// The monomial basis for layer `(n, m)` with weighted cap `d`: the pinned
/// classical list for `(1, 2)`, otherwise the generic weighted box.
pub fn layer_basis(n: usize, m: usize, d: u32) -> Vec<JetMonomial> {
    if n == 1 && m == 2 && d == 6 {
        pq_basis()
    } else {
        let k = (m - n + 1) as u32;
        enumerate_monomials(n, k, d, (m + 1) as u32)
    }
}

// ---------------------------------------------------------------------------
// Operator specification
// ---------------------------------------------------------------------------

/// A fully pinned determinant operator: layer `(n, m)`, admissible derivative
/// tuple, monomial basis, and the `s` derivative multi-indices `γʲ` for the
/// Wronskian rows.
#[derive(Debug, Clone)]
pub struct ObstructionSpec {
    n: usize,
    m: usize,
    alphas: Vec<Multiindex>,
    basis: Vec<JetMonomial>,
    gammas: Vec<Multiindex>,
}

impl ObstructionSpec {
    /// Validates and assembles a spec.  Requirements: `m ≥ n ≥ 1`; `m + 1`
    /// distinct derivative indices over `n` slots with `αⁱ = εⁱ` for `i ≤ n`
    /// and `1 ≤ |αⁱ| ≤ i − (n − 1)` after; a basis containing the constant
    /// monomial, each member within the layer's jet-order and weighted-degree
    /// bounds; and exactly `s = |basis| − 1` distinct `γʲ` with
    /// `1 ≤ |γʲ| ≤ j`.
    pub fn new(
        n: usize,
        m: usize,
        alphas: Vec<Multiindex>,
        basis: Vec<JetMonomial>,
        gammas: Vec<Multiindex>,
    ) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::BadSpec(format!(
                "layer requires m ≥ n ≥ 1, got n = {n}, m = {m}"
            )));
        }
        if alphas.len() != m + 1 {
            return Err(Error::BadSpec(format!(
                "expected {} derivative indices, got {}",
                m + 1,
                alphas.len()
            )));
        }
        for (p, alpha) in alphas.iter().enumerate() {
            if alpha.len() != n {
                return Err(Error::BadSpec(format!(
                    "derivative index {alpha} has {} slots, expected {n}",
                    alpha.len()
                )));
            }
            if p < n {
                if *alpha != Multiindex::unit(n, p) {
                    return Err(Error::BadSpec(format!(
                        "derivative index at position {} must be the unit ε_{}, got {alpha}",
                        p + 1,
                        p + 1
                    )));
                }
            } else {
                let bound = (p + 2 - n) as u32;
                if alpha.degree() == 0 || alpha.degree() > bound {
                    return Err(Error::BadSpec(format!(
                        "derivative index {alpha} at position {} must have degree in 1..={bound}",
                        p + 1
                    )));
                }
            }
        }
        if alphas.iter().collect::<BTreeSet<_>>().len() != alphas.len() {
            return Err(Error::BadSpec("derivative indices must be distinct".into()));
        }
        let k = (m - n + 1) as u32;
        let d: u32 = alphas.iter().map(|a| a.degree()).sum();
        if basis.is_empty() {
            return Err(Error::BadSpec("monomial basis is empty".into()));
        }
        if !basis.iter().any(|mono| mono.is_constant()) {
            return Err(Error::BadSpec(
                "monomial basis must contain the constant monomial".into(),
            ));
        }
        for mono in &basis {
            if mono.n() != n {
                return Err(Error::BadSpec(format!(
                    "basis monomial {mono} is over {} variables, expected {n}",
                    mono.n()
                )));
            }
            if mono.max_jet_order() > k + 1 {
                return Err(Error::BadSpec(format!(
                    "basis monomial {mono} uses jets beyond order {}",
                    k + 1
                )));
            }
            if mono.weighted_degree() > d {
                return Err(Error::BadSpec(format!(
                    "basis monomial {mono} exceeds the weighted cap {d}"
                )));
            }
        }
        if basis.iter().collect::<BTreeSet<_>>().len() != basis.len() {
            return Err(Error::BadSpec("basis monomials must be distinct".into()));
        }
        let s = basis.len() - 1;
        if gammas.len() != s {
            return Err(Error::BadSpec(format!(
                "expected {s} row derivative indices, got {}",
                gammas.len()
            )));
        }
        for (j, gamma) in gammas.iter().enumerate() {
            if gamma.len() != n {
                return Err(Error::BadSpec(format!(
                    "row derivative index {gamma} has {} slots, expected {n}",
                    gamma.len()
                )));
            }
            let deg = gamma.degree();
            if deg == 0 || deg as usize > j + 1 {
                return Err(Error::BadSpec(format!(
                    "row derivative index {gamma} at position {} must have degree in 1..={}",
                    j + 1,
                    j + 1
                )));
            }
        }
        if gammas.iter().collect::<BTreeSet<_>>().len() != gammas.len() {
            return Err(Error::BadSpec(
                "row derivative indices must be distinct".into(),
            ));
        }
        Ok(ObstructionSpec {
            n,
            m,
            alphas,
            basis,
            gammas,
        })
    }

    /// Builds the spec for one admissible tuple of a layer, taking the basis
    /// from [`layer_basis`] and the row derivatives from the table.
    pub fn for_layer(
        n: usize,
        m: usize,
        alphas: Vec<Multiindex>,
        table: &GammaTable,
    ) -> Result<Self> {
        if alphas.len() != m + 1 {
            return Err(Error::BadSpec(format!(
                "expected {} derivative indices, got {}",
                m + 1,
                alphas.len()
            )));
        }
        let d: u32 = alphas.iter().map(|a| a.degree()).sum();
        let basis = layer_basis(n, m, d);
        let gammas = table
            .lookup(n, m, d)
            .ok_or_else(|| {
                Error::GammaTable(format!("no entry for n = {n}, m = {m}, d = {d}"))
            })?
            .to_vec();
        if gammas.len() != basis.len() - 1 {
            return Err(Error::GammaTable(format!(
                "entry (n = {n}, m = {m}, d = {d}) lists {} row derivatives but the basis has {} monomials",
                gammas.len(),
                basis.len()
            )));
        }
        ObstructionSpec::new(n, m, alphas, basis, gammas)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Jet-order offset `k = m − n + 1`; basis jets go up to order `k + 1`.
    pub fn k(&self) -> u32 {
        (self.m - self.n + 1) as u32
    }

    /// Weighted degree cap `d = Σ |αⁱ|`.
    pub fn d(&self) -> u32 {
        self.alphas.iter().map(|a| a.degree()).sum()
    }

    /// Number of derivative rows; the matrix is `(s + 1) × (s + 1)`.
    pub fn s(&self) -> usize {
        self.basis.len() - 1
    }

    pub fn alphas(&self) -> &[Multiindex] {
        &self.alphas
    }

    pub fn basis(&self) -> &[JetMonomial] {
        &self.basis
    }

    pub fn gammas(&self) -> &[Multiindex] {
        &self.gammas
    }

    pub fn max_gamma_degree(&self) -> u32 {
        self.gammas.iter().map(|g| g.degree()).max().unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// Matrix construction
// ---------------------------------------------------------------------------

/// Lifts an `n`-slot ξ-derivative index into the `2n + 1` system variables
/// `(z, w, ξ)`.
fn xi_multiindex(n: usize, gamma: &Multiindex) -> Multiindex {
    let mut exps = vec![0u32; 2 * n + 1];
    for l in 0..n {
        exps[n + 1 + l] = gamma.get(l);
    }
    Multiindex::new(exps)
}

fn row0_with_params(
    n: usize,
    k: u32,
    basis: &[JetMonomial],
    sys: &PdeSystem,
) -> Result<Vec<TruncatedSeries>> {
    if sys.n() != n {
        return Err(Error::BadSpec(format!(
            "system has n = {}, spec has n = {n}",
            sys.n()
        )));
    }
    let target = sys.cap().checked_sub(k.saturating_sub(1)).ok_or_else(|| {
        Error::CapExhausted(format!(
            "system cap {} cannot host jets of depth {}",
            sys.cap(),
            k - 1
        ))
    })?;
    let table = build_prolongation(n, k);
    basis
        .iter()
        .map(|mono| substitute_prolongation(mono, &table, sys)?.truncate_to(target))
        .collect()
}

/// The substituted basis row: each monomial with `w^{(β)}` replaced by ξ for
/// `|β| = 1` and by the prolonged jet polynomial's value for `|β| ≥ 2`, all
/// truncated to the uniform cap `sys.cap() − (k − 1)`.
pub fn build_row0(spec: &ObstructionSpec, sys: &PdeSystem) -> Result<Vec<TruncatedSeries>> {
    row0_with_params(spec.n, spec.k(), &spec.basis, sys)
}

/// A generalized-Wronskian matrix over the system variables `(z, w, ξ)` with
/// a uniform truncation cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionMatrix {
    rows: Vec<Vec<TruncatedSeries>>,
}

impl ObstructionMatrix {
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn cap(&self) -> u32 {
        self.rows[0][0].cap()
    }

    pub fn rows(&self) -> &[Vec<TruncatedSeries>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> &TruncatedSeries {
        &self.rows[i][j]
    }

    /// True when some row or some column vanishes identically (to the cap),
    /// which forces the determinant series to vanish identically as well.
    pub fn has_zero_line(&self) -> bool {
        let size = self.size();
        self.rows.iter().any(|row| row.iter().all(|e| e.is_zero()))
            || (0..size).any(|j| self.rows.iter().all(|row| row[j].is_zero()))
    }
}

/// Builds the full `(s+1) × (s+1)` matrix: the substituted row followed by
/// its ξ-derivatives `∂^{γʲ}_ξ`, every entry truncated to the uniform cap
/// `sys.cap() − (k − 1) − max |γʲ|`.
pub fn build_matrix(spec: &ObstructionSpec, sys: &PdeSystem) -> Result<ObstructionMatrix> {
    let row0 = build_row0(spec, sys)?;
    let base_cap = row0[0].cap();
    let max_gamma = spec.max_gamma_degree();
    let uniform = base_cap.checked_sub(max_gamma).ok_or_else(|| {
        Error::CapExhausted(format!(
            "row cap {base_cap} cannot host ξ-derivatives of order {max_gamma}"
        ))
    })?;
    let mut rows = Vec::with_capacity(spec.s() + 1);
    rows.push(
        row0.iter()
            .map(|e| e.truncate_to(uniform))
            .collect::<Result<Vec<_>>>()?,
    );
    for gamma in &spec.gammas {
        let full = xi_multiindex(spec.n, gamma);
        rows.push(
            row0.iter()
                .map(|e| e.derive_multi(&full)?.truncate_to(uniform))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(ObstructionMatrix { rows })
}

/// Closed-form construction of the `(1, 2)` matrix from the scalar entry Φ:
/// the substituted monomials are written directly as series expressions in
/// `Φ`, `E = Φ_z + ξΦ_w + Φ_ξΦ` and powers of ξ, and the derivative rows as
/// repeated `∂_ξ`.  Independent of the prolongation table, so it serves as a
/// cross-check of the generic builder.
pub fn pq_matrix_closed_form(sys: &PdeSystem) -> Result<ObstructionMatrix> {
    let row0 = pq_row_closed_form(sys)?;
    let base_cap = row0[0].cap();
    let uniform = base_cap.checked_sub(15).ok_or_else(|| {
        Error::CapExhausted(format!(
            "row cap {base_cap} cannot host 15 ξ-derivative rows"
        ))
    })?;
    let mut rows = Vec::with_capacity(16);
    rows.push(
        row0.iter()
            .map(|e| e.truncate_to(uniform))
            .collect::<Result<Vec<_>>>()?,
    );
    let mut current = row0;
    for _ in 1..16 {
        current = current
            .iter()
            .map(|e| e.partial_derivative_at(2))
            .collect::<Result<Vec<_>>>()?;
        rows.push(
            current
                .iter()
                .map(|e| e.truncate_to(uniform))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(ObstructionMatrix { rows })
}

/// The substituted `(1, 2)` basis row in closed form, at cap `sys.cap() − 1`.
pub fn pq_row_closed_form(sys: &PdeSystem) -> Result<Vec<TruncatedSeries>> {
    if sys.n() != 1 {
        return Err(Error::BadSpec(
            "the closed-form row is specific to n = 1".into(),
        ));
    }
    let cap = sys.cap().checked_sub(1).ok_or_else(|| {
        Error::CapExhausted("system cap 0 cannot host the third jet".into())
    })?;
    let phi_full = sys.phi(0, 0);
    let phi = phi_full.truncate_to(cap)?;
    let vars = sys.vars().clone();
    let xi = TruncatedSeries::variable_at(vars, cap, 2)?;
    let e = phi_full
        .partial_derivative_at(0)?
        .add(&xi.mul(&phi_full.partial_derivative_at(1)?)?)?
        .add(&phi_full.partial_derivative_at(2)?.mul(&phi)?)?;
    let mut row = Vec::with_capacity(16);
    for j in 0..=2 {
        row.push(e.mul(&xi.pow(j)?)?);
    }
    for j in 0..=6 {
        row.push(xi.pow(j)?);
    }
    for j in 0..=3 {
        row.push(phi.mul(&xi.pow(j)?)?);
    }
    for j in 0..=1 {
        row.push(phi.pow(2)?.mul(&xi.pow(j)?)?);
    }
    Ok(row)
}

// ---------------------------------------------------------------------------
// Determinants
// ---------------------------------------------------------------------------

/// Determinant of the matrix as a truncated series; a zero row or column
/// short-circuits to the exact zero series.
pub fn matrix_det_series(matrix: &ObstructionMatrix) -> Result<TruncatedSeries> {
    if matrix.has_zero_line() {
        let model = matrix.entry(0, 0);
        return Ok(TruncatedSeries::zero(model.vars().clone(), model.cap()));
    }
    det_series(matrix.rows())
}

/// Determinant value at one point: entries are evaluated exactly, then an
/// exact determinant is taken.  This equals the determinant germ's value only
/// when every entry is a polynomial fully captured below the cap.
pub fn matrix_det_at(
    matrix: &ObstructionMatrix,
    point: &[GaussianRational],
) -> Result<GaussianRational> {
    let values = eval_matrix(matrix.rows(), point)?;
    det_exact(&values)
}

/// How determinant data is requested from [`det_operator`].
#[derive(Debug, Clone)]
pub enum DetMode {
    /// Exact entry evaluation at the given `(z, w, ξ)` points.
    Point(Vec<Vec<GaussianRational>>),
    /// Determinant series truncated to the given order.
    Series(u32),
    /// Both point values and the series.
    Both(Vec<Vec<GaussianRational>>, u32),
}

/// Determinant data produced by [`det_operator`].
#[derive(Debug, Clone)]
pub struct DetData {
    pub size: usize,
    pub matrix_cap: u32,
    pub point_values: Vec<(Vec<GaussianRational>, GaussianRational)>,
    pub series: Option<TruncatedSeries>,
}

/// Builds the matrix for the spec and extracts determinant data in the
/// requested mode.
pub fn det_operator(spec: &ObstructionSpec, sys: &PdeSystem, mode: &DetMode) -> Result<DetData> {
    let matrix = build_matrix(spec, sys)?;
    let mut data = DetData {
        size: matrix.size(),
        matrix_cap: matrix.cap(),
        point_values: Vec::new(),
        series: None,
    };
    let eval_points = |points: &Vec<Vec<GaussianRational>>| -> Result<Vec<(Vec<GaussianRational>, GaussianRational)>> {
        points
            .iter()
            .map(|p| Ok((p.clone(), matrix_det_at(&matrix, p)?)))
            .collect()
    };
    match mode {
        DetMode::Point(points) => {
            data.point_values = eval_points(points)?;
        }
        DetMode::Series(order) => {
            let det = matrix_det_series(&matrix)?;
            data.series = Some(det.truncate_to((*order).min(det.cap()))?);
        }
        DetMode::Both(points, order) => {
            data.point_values = eval_points(points)?;
            let det = matrix_det_series(&matrix)?;
            data.series = Some(det.truncate_to((*order).min(det.cap()))?);
        }
    }
    Ok(data)
}

// ---------------------------------------------------------------------------
// Row-derivative search
// ---------------------------------------------------------------------------

/// Reduces `row` against the pivot rows (sorted by leading column) and, if a
/// nonzero remainder survives, inserts it as a new pivot.  Returns whether the
/// rank grew.
fn rank_insert(
    pivots: &mut Vec<(usize, Vec<GaussianRational>)>,
    mut row: Vec<GaussianRational>,
) -> bool {
    for (col, pivot) in pivots.iter() {
        if !row[*col].is_zero() {
            let factor = row[*col].checked_div(&pivot[*col]).expect("pivot is nonzero");
            for (r, p) in row.iter_mut().zip(pivot.iter()) {
                *r = &*r - &(&factor * p);
            }
        }
    }
    let Some(lead) = row.iter().position(|v| !v.is_zero()) else {
        return false;
    };
    let at = pivots.partition_point(|(c, _)| *c < lead);
    pivots.insert(at, (lead, row));
    true
}

/// Searches for `s` row-derivative indices making the Wronskian matrix of the
/// trial system attain full rank at a seeded random point.  Candidates are
/// tried in graded-lex order; a candidate is kept exactly when it enlarges
/// the row span at the point, which by the greedy exchange property finds a
/// valid sequence whenever one exists among the candidates tried.  Budget
/// exhaustion (or running out of candidates satisfying the degree constraint
/// `|γʲ| ≤ j`) reports [`Error::GammaSearchExhausted`]; that is evidence, not
/// proof, that no sequence exists.
pub fn search_gammas(
    n: usize,
    m: usize,
    basis: &[JetMonomial],
    sys: &PdeSystem,
    budget: usize,
    seed: u64,
) -> Result<Vec<Multiindex>> {
    if m < n || n == 0 {
        return Err(Error::BadSpec(format!(
            "search requires m ≥ n ≥ 1, got n = {n}, m = {m}"
        )));
    }
    let k = (m - n + 1) as u32;
    let row0 = row0_with_params(n, k, basis, sys)?;
    let base_cap = row0[0].cap();
    let s = basis.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point: Vec<GaussianRational> = (0..2 * n + 1)
        .map(|_| {
            GaussianRational::from_parts(
                rng.gen_range(-9..=9),
                rng.gen_range(1..=5),
                rng.gen_range(-9..=9),
                rng.gen_range(1..=5),
            )
        })
        .collect();
    let mut pivots: Vec<(usize, Vec<GaussianRational>)> = Vec::new();
    let row0_values: Vec<GaussianRational> = row0
        .iter()
        .map(|e| e.eval(&point))
        .collect::<Result<_>>()?;
    rank_insert(&mut pivots, row0_values);
    let mut picked: Vec<Multiindex> = Vec::new();
    let mut tried = 0usize;
    let max_deg = (s as u32).min(base_cap);
    'degrees: for deg in 1..=max_deg {
        if picked.len() == s {
            break;
        }
        if deg as usize > picked.len() + 1 {
            // Every remaining candidate would violate |γʲ| ≤ j.
            return Err(Error::GammaSearchExhausted { tried });
        }
        for gamma in multiindices_of_degree(n, deg) {
            if picked.len() == s {
                break 'degrees;
            }
            if tried >= budget {
                return Err(Error::GammaSearchExhausted { tried });
            }
            tried += 1;
            let full = xi_multiindex(n, &gamma);
            let row: Vec<GaussianRational> = row0
                .iter()
                .map(|e| e.derive_multi(&full)?.eval(&point))
                .collect::<Result<_>>()?;
            if rank_insert(&mut pivots, row) {
                picked.push(gamma);
            }
        }
    }
    if picked.len() == s && pivots.len() == s + 1 {
        Ok(picked)
    } else {
        Err(Error::GammaSearchExhausted { tried })
    }
}

// ---------------------------------------------------------------------------
// Row-derivative table
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct RawGammaTable {
    version: u64,
    entries: Vec<RawGammaEntry>,
}

#[derive(Debug, Deserialize)]
struct RawGammaEntry {
    n: usize,
    m: usize,
    d: u32,
    gammas: Vec<Vec<u32>>,
}

/// Versioned store of known-good row-derivative sequences, keyed by
/// `(n, m, d)`.
#[derive(Debug, Clone)]
pub struct GammaTable {
    entries: BTreeMap<(usize, usize, u32), Vec<Multiindex>>,
}

impl GammaTable {
    /// Parses and validates the JSON representation: version match, `m ≥ n ≥
    /// 1`, `n`-slot entries, degree window `1 ≤ |γʲ| ≤ j`, distinctness, and
    /// no duplicate keys.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawGammaTable = serde_json::from_str(text)
            .map_err(|e| Error::GammaTable(format!("malformed JSON: {e}")))?;
        if raw.version != GAMMA_TABLE_VERSION {
            return Err(Error::GammaTable(format!(
                "version {} unsupported (expected {GAMMA_TABLE_VERSION})",
                raw.version
            )));
        }
        let mut entries = BTreeMap::new();
        for entry in raw.entries {
            if entry.n == 0 || entry.m < entry.n {
                return Err(Error::GammaTable(format!(
                    "entry requires m ≥ n ≥ 1, got n = {}, m = {}",
                    entry.n, entry.m
                )));
            }
            let mut gammas = Vec::with_capacity(entry.gammas.len());
            for (j, exps) in entry.gammas.into_iter().enumerate() {
                if exps.len() != entry.n {
                    return Err(Error::GammaTable(format!(
                        "entry (n = {}, m = {}, d = {}): row {} has {} slots",
                        entry.n,
                        entry.m,
                        entry.d,
                        j + 1,
                        exps.len()
                    )));
                }
                let gamma = Multiindex::new(exps);
                let deg = gamma.degree();
                if deg == 0 || deg as usize > j + 1 {
                    return Err(Error::GammaTable(format!(
                        "entry (n = {}, m = {}, d = {}): row {} derivative {gamma} must have degree in 1..={}",
                        entry.n,
                        entry.m,
                        entry.d,
                        j + 1,
                        j + 1
                    )));
                }
                gammas.push(gamma);
            }
            if gammas.iter().collect::<BTreeSet<_>>().len() != gammas.len() {
                return Err(Error::GammaTable(format!(
                    "entry (n = {}, m = {}, d = {}) repeats a derivative",
                    entry.n, entry.m, entry.d
                )));
            }
            if entries
                .insert((entry.n, entry.m, entry.d), gammas)
                .is_some()
            {
                return Err(Error::GammaTable(format!(
                    "duplicate entry for n = {}, m = {}, d = {}",
                    entry.n, entry.m, entry.d
                )));
            }
        }
        Ok(GammaTable { entries })
    }

    pub fn lookup(&self, n: usize, m: usize, d: u32) -> Option<&[Multiindex]> {
        self.entries.get(&(n, m, d)).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The raw JSON text of the table shipped with the crate, for fingerprinting
/// and inspection.
pub fn default_gamma_table_text() -> &'static str {
    include_str!("../data/gamma_table.json")
}

/// The table shipped with the crate.
pub fn default_gamma_table() -> Result<GammaTable> {
    GammaTable::parse(default_gamma_table_text())
}

// ---------------------------------------------------------------------------
// Random trial systems and sample points
// ---------------------------------------------------------------------------

fn random_coefficient(rng: &mut ChaCha8Rng) -> GaussianRational {
    if rng.gen_range(0..4) == 0 {
        return GaussianRational::zero();
    }
    GaussianRational::from_parts(
        rng.gen_range(-4..=4),
        rng.gen_range(1..=3),
        rng.gen_range(-4..=4),
        rng.gen_range(1..=3),
    )
}

/// A symmetric formal system whose entries are random polynomials of degree
/// ≤ `xi_degree` in ξ with coefficients that are random polynomials of degree
/// ≤ `zw_degree` in `(z, w)`.  Used for row-derivative searches and for
/// exercising the operator on polynomially captured input.
pub fn random_trial_system(
    n: usize,
    cap: u32,
    xi_degree: u32,
    zw_degree: u32,
    seed: u64,
) -> Result<PdeSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = pde_vars(n);
    let mut entries: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(n);
    for _ in 0..n {
        entries.push(vec![TruncatedSeries::zero(vars.clone(), cap); n]);
    }
    for i in 0..n {
        for j in i..n {
            let mut terms = Vec::new();
            for xd in 0..=xi_degree {
                for xi_part in multiindices_of_degree(n, xd) {
                    for zd in 0..=zw_degree {
                        for zw_part in multiindices_of_degree(n + 1, zd) {
                            let mut exps = vec![0u32; 2 * n + 1];
                            for l in 0..n + 1 {
                                exps[l] = zw_part.get(l);
                            }
                            for l in 0..n {
                                exps[n + 1 + l] = xi_part.get(l);
                            }
                            terms.push((Multiindex::new(exps), random_coefficient(&mut rng)));
                        }
                    }
                }
            }
            let entry = TruncatedSeries::from_terms(vars.clone(), cap, terms)?;
            entries[i][j] = entry.clone();
            entries[j][i] = entry;
        }
    }
    PdeSystem::from_entries(n, entries)
}

/// Seeded sample points with numerators and denominators bounded by 97.
pub fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<GaussianRational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    GaussianRational::from_parts(
                        rng.gen_range(-97..=97),
                        rng.gen_range(1..=97),
                        rng.gen_range(-97..=97),
                        rng.gen_range(1..=97),
                    )
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

/// Outcome of the embeddability test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conclusion {
    /// Some determinant factor vanishes to the requested order and at every
    /// sample point, so the product operator shows no obstruction.
    ObstructionSatisfied,
    /// Every determinant factor carries an exact nonzero witness, so the
    /// product operator is nonzero and embeddability is excluded.
    Obstructed,
    /// Neither pattern is established by the computed data.
    Inconclusive,
}

/// How a factor's point values were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSemantics {
    /// Values of the determinant series; exact images of the truncated
    /// determinant.
    SeriesEvaluation,
    /// Exact determinants of entrywise-evaluated truncations; heuristic for
    /// truncated systems, never used as a nonzero witness.
    EntryEvaluation,
}

/// Data for one determinant factor of one layer.
#[derive(Debug, Clone)]
pub struct FactorReport {
    pub m: usize,
    pub alphas: Vec<Multiindex>,
    pub d: u32,
    pub size: usize,
    pub gammas: Option<Vec<Multiindex>>,
    /// Order to which the determinant series was computed, when it was.
    pub series_order: Option<u32>,
    /// Lowest order with a nonzero coefficient, `None` when the series
    /// vanishes to `series_order` (or was not computed).
    pub first_nonzero_order: Option<u32>,
    pub point_semantics: Option<PointSemantics>,
    pub point_values: Vec<GaussianRational>,
    /// Series vanishes to the requested order and at every sample point.
    pub zero_evidence: bool,
    /// An exact nonzero coefficient of the determinant was found.
    pub nonzero_witness: bool,
}

/// All factors of one layer index `m`.
#[derive(Debug, Clone)]
pub struct LayerReport {
    pub m: usize,
    pub factors: Vec<FactorReport>,
}

/// Full record of a pipeline run.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub n: usize,
    pub target_n: usize,
    pub order: u32,
    pub samples: usize,
    pub seed: u64,
    /// With `N < 2n` every holomorphic embedding into a hyperquadric of
    /// dimension `N` is automatically transversal, so the vanishing test is
    /// the full embeddability criterion in that range.
    pub transversality_automatic: bool,
    pub points: Vec<Vec<GaussianRational>>,
    pub layers: Vec<LayerReport>,
    pub conclusion: Conclusion,
}

struct FactorPlan {
    m: usize,
    alphas: Vec<Multiindex>,
    d: u32,
    basis: Vec<JetMonomial>,
    gammas: Option<Vec<Multiindex>>,
}

fn evaluate_factor(
    spec: &ObstructionSpec,
    sys: &PdeSystem,
    order: u32,
    points: &[Vec<GaussianRational>],
) -> Result<FactorReport> {
    let matrix = build_matrix(spec, sys)?;
    let size = matrix.size();
    let series = if size <= MAX_SERIES_DET_SIZE {
        Some(matrix_det_series(&matrix)?)
    } else if matrix.has_zero_line() {
        let model = matrix.entry(0, 0);
        Some(TruncatedSeries::zero(model.vars().clone(), model.cap()))
    } else {
        None
    };
    let series = series
        .map(|det| det.truncate_to(order.min(det.cap())))
        .transpose()?;
    let report = match series {
        Some(det) => {
            let values: Vec<GaussianRational> = points
                .iter()
                .map(|p| det.eval(p))
                .collect::<Result<_>>()?;
            let zero = det.is_zero() && values.iter().all(|v| v.is_zero());
            FactorReport {
                m: spec.m(),
                alphas: spec.alphas().to_vec(),
                d: spec.d(),
                size,
                gammas: Some(spec.gammas().to_vec()),
                series_order: Some(det.cap()),
                first_nonzero_order: det.valuation(),
                point_semantics: Some(PointSemantics::SeriesEvaluation),
                point_values: values,
                zero_evidence: zero,
                nonzero_witness: !det.is_zero(),
            }
        }
        None => {
            let values: Vec<GaussianRational> = points
                .iter()
                .map(|p| matrix_det_at(&matrix, p))
                .collect::<Result<_>>()?;
            FactorReport {
                m: spec.m(),
                alphas: spec.alphas().to_vec(),
                d: spec.d(),
                size,
                gammas: Some(spec.gammas().to_vec()),
                series_order: None,
                first_nonzero_order: None,
                point_semantics: Some(PointSemantics::EntryEvaluation),
                point_values: values,
                zero_evidence: false,
                nonzero_witness: false,
            }
        }
    };
    Ok(report)
}

/// Runs the whole test for embeddability into hyperquadrics of dimension
/// `target_n`: derives the associated system from the defining function at a
/// cap sufficient for every layer `n ≤ m ≤ target_n`, evaluates every
/// determinant factor, and aggregates.  The operator is a product over all
/// factors, so one vanishing factor satisfies the test, while excluding
/// embeddability needs an exact nonzero witness in every factor.
pub fn full_pipeline(
    h: &RealDefining,
    target_n: usize,
    order: u32,
    samples: usize,
    seed: u64,
) -> Result<Verdict> {
    let n = h.n();
    if target_n < n {
        return Err(Error::BadSpec(format!(
            "target dimension {target_n} is below the source dimension {n}"
        )));
    }
    let table = default_gamma_table()?;
    let mut plans: Vec<FactorPlan> = Vec::new();
    let mut syscap = 3u32;
    for m in n..=target_n {
        let k = (m - n + 1) as u32;
        for alphas in enumerate_alpha_choices(n, m)? {
            let d: u32 = alphas.iter().map(|a| a.degree()).sum();
            let basis = layer_basis(n, m, d);
            let s = basis.len() - 1;
            let gammas = match table.lookup(n, m, d) {
                Some(g) if g.len() == s => Some(g.to_vec()),
                Some(g) => {
                    return Err(Error::GammaTable(format!(
                        "entry (n = {n}, m = {m}, d = {d}) lists {} row derivatives but the basis has {} monomials",
                        g.len(),
                        s + 1
                    )))
                }
                None => {
                    let trial_cap = (s as u32 + 2).min(24);
                    let trial_degree = if n == 1 { 8 } else { 4 };
                    let trial =
                        random_trial_system(n, trial_cap, trial_degree, 0, seed ^ (m as u64))?;
                    search_gammas(n, m, &basis, &trial, PIPELINE_SEARCH_BUDGET, seed).ok()
                }
            };
            if let Some(g) = &gammas {
                let max_gamma = g.iter().map(|x| x.degree()).max().unwrap_or(0);
                syscap = syscap.max(order + max_gamma + (k - 1));
            }
            plans.push(FactorPlan {
                m,
                alphas,
                d,
                basis,
                gammas,
            });
        }
    }
    let r = real_to_complex(h, syscap + 2)?;
    let (sys, _) = derive_pde(&r)?;
    let points = sample_points(2 * n + 1, samples, seed);
    let mut layers: Vec<LayerReport> = Vec::new();
    for plan in plans {
        let factor = match plan.gammas {
            Some(g) => {
                let spec =
                    ObstructionSpec::new(n, plan.m, plan.alphas.clone(), plan.basis, g)?;
                evaluate_factor(&spec, &sys, order, &points)?
            }
            None => FactorReport {
                m: plan.m,
                alphas: plan.alphas,
                d: plan.d,
                size: plan.basis.len(),
                gammas: None,
                series_order: None,
                first_nonzero_order: None,
                point_semantics: None,
                point_values: Vec::new(),
                zero_evidence: false,
                nonzero_witness: false,
            },
        };
        match layers.last_mut() {
            Some(layer) if layer.m == factor.m => layer.factors.push(factor),
            _ => layers.push(LayerReport {
                m: factor.m,
                factors: vec![factor],
            }),
        }
    }
    let all_factors: Vec<&FactorReport> = layers.iter().flat_map(|l| l.factors.iter()).collect();
    let conclusion = if all_factors.iter().any(|f| f.zero_evidence) {
        Conclusion::ObstructionSatisfied
    } else if !all_factors.is_empty() && all_factors.iter().all(|f| f.nonzero_witness) {
        Conclusion::Obstructed
    } else {
        Conclusion::Inconclusive
    };
    Ok(Verdict {
        n,
        target_n,
        order,
        samples,
        seed,
        transversality_automatic: target_n < 2 * n,
        points,
        layers,
        conclusion,
    })
}

/// Canonical JSON form of a verdict: keys in sorted order, every rational as
/// its exact display string, multi-indices as exponent arrays.  The same
/// input always serializes to the same bytes.
pub fn verdict_to_json(v: &Verdict) -> serde_json::Value {
    let mi_json = |mi: &Multiindex| serde_json::json!(mi.exponents());
    let point_json = |p: &[GaussianRational]| {
        serde_json::json!(p.iter().map(|c| c.to_string()).collect::<Vec<_>>())
    };
    let conclusion = match v.conclusion {
        Conclusion::ObstructionSatisfied => "OBSTRUCTION_SATISFIED",
        Conclusion::Obstructed => "OBSTRUCTED",
        Conclusion::Inconclusive => "INCONCLUSIVE",
    };
    let layers: Vec<serde_json::Value> = v
        .layers
        .iter()
        .map(|layer| {
            let factors: Vec<serde_json::Value> = layer
                .factors
                .iter()
                .map(|f| {
                    serde_json::json!({
                        "alphas": f.alphas.iter().map(&mi_json).collect::<Vec<_>>(),
                        "d": f.d,
                        "first_nonzero_order": f.first_nonzero_order,
                        "gammas": f.gammas.as_ref().map(|gs| {
                            gs.iter().map(&mi_json).collect::<Vec<_>>()
                        }),
                        "m": f.m,
                        "nonzero_witness": f.nonzero_witness,
                        "point_semantics": f.point_semantics.map(|s| match s {
                            PointSemantics::SeriesEvaluation => "series-evaluation",
                            PointSemantics::EntryEvaluation => "entry-evaluation",
                        }),
                        "point_values": f.point_values.iter()
                            .map(|c| c.to_string())
                            .collect::<Vec<_>>(),
                        "series_order": f.series_order,
                        "size": f.size,
                        "zero_evidence": f.zero_evidence,
                    })
                })
                .collect();
            serde_json::json!({ "factors": factors, "m": layer.m })
        })
        .collect();
    serde_json::json!({
        "conclusion": conclusion,
        "layers": layers,
        "n": v.n,
        "order": v.order,
        "points": v.points.iter().map(|p| point_json(p)).collect::<Vec<_>>(),
        "samples": v.samples,
        "seed": v.seed,
        "target_n": v.target_n,
        "transversality_automatic": v.transversality_automatic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus;
    use crate::hypersurface::RealDefining;

    fn mi(exps: &[u32]) -> Multiindex {
        Multiindex::new(exps.to_vec())
    }

    fn pq_spec() -> ObstructionSpec {
        let table = default_gamma_table().unwrap();
        ObstructionSpec::for_layer(1, 2, vec![mi(&[1]), mi(&[2]), mi(&[3])], &table).unwrap()
    }

    fn layer_1_1_spec() -> ObstructionSpec {
        let table = default_gamma_table().unwrap();
        ObstructionSpec::for_layer(1, 1, vec![mi(&[1]), mi(&[2])], &table).unwrap()
    }

    fn system_for(phi_text: &str, n: usize, rho_cap: u32) -> PdeSystem {
        let h = RealDefining::parse(phi_text, n).unwrap();
        let r = real_to_complex(&h, rho_cap).unwrap();
        derive_pde(&r).unwrap().0
    }

    #[test]
    fn alpha_choices_are_forced_for_n1_and_enumerate_for_n2() {
        assert_eq!(
            enumerate_alpha_choices(1, 1).unwrap(),
            vec![vec![mi(&[1]), mi(&[2])]]
        );
        assert_eq!(
            enumerate_alpha_choices(1, 2).unwrap(),
            vec![vec![mi(&[1]), mi(&[2]), mi(&[3])]]
        );
        assert_eq!(
            enumerate_alpha_choices(1, 3).unwrap(),
            vec![vec![mi(&[1]), mi(&[2]), mi(&[3]), mi(&[4])]]
        );
        let n2 = enumerate_alpha_choices(2, 2).unwrap();
        assert_eq!(
            n2,
            vec![
                vec![mi(&[1, 0]), mi(&[0, 1]), mi(&[0, 2])],
                vec![mi(&[1, 0]), mi(&[0, 1]), mi(&[1, 1])],
                vec![mi(&[1, 0]), mi(&[0, 1]), mi(&[2, 0])],
            ]
        );
        assert!(enumerate_alpha_choices(2, 1).is_err());
    }

    #[test]
    fn pinned_basis_and_weighted_box_share_twelve_monomials() {
        let pinned = pq_basis();
        assert_eq!(pinned.len(), 16);
        // Constant monomial sits at index 3 in the classical row order.
        assert!(pinned[3].is_constant());
        let boxed = enumerate_monomials(1, 2, 6, 3);
        assert_eq!(boxed.len(), 16);
        let shared = pinned.iter().filter(|m| boxed.contains(m)).count();
        assert_eq!(shared, 12);
        // The box holds w″³ (weight 6, degree 3); the pinned list trades it
        // and three similar monomials for pure powers of w′.
        let w2_cubed = JetMonomial::from_factors(1, [(mi(&[2]), 3)]);
        assert!(boxed.contains(&w2_cubed));
        assert!(!pinned.contains(&w2_cubed));
        let w1_sixth = JetMonomial::from_factors(1, [(mi(&[1]), 6)]);
        assert!(pinned.contains(&w1_sixth));
        assert!(!boxed.contains(&w1_sixth));
    }

    #[test]
    fn spec_validation_rejects_malformed_input() {
        let table = default_gamma_table().unwrap();
        // Wrong tuple length.
        assert!(matches!(
            ObstructionSpec::for_layer(1, 2, vec![mi(&[1]), mi(&[2])], &table),
            Err(Error::BadSpec(_))
        ));
        // First index must be the unit.
        assert!(matches!(
            ObstructionSpec::for_layer(1, 1, vec![mi(&[2]), mi(&[1])], &table),
            Err(Error::BadSpec(_))
        ));
        // Row derivative degrees must respect |γʲ| ≤ j.
        let bad_gammas = vec![mi(&[2]), mi(&[1]), mi(&[3]), mi(&[4])];
        assert!(matches!(
            ObstructionSpec::new(
                1,
                1,
                vec![mi(&[1]), mi(&[2])],
                layer_basis(1, 1, 3),
                bad_gammas
            ),
            Err(Error::BadSpec(_))
        ));
        // The (1, 1) layer basis is {1, w′, w″, (w′)², w′w″}.
        assert_eq!(layer_basis(1, 1, 3).len(), 5);
    }

    #[test]
    fn sphere_row_is_the_pinned_vector_and_determinant_vanishes() {
        let sys = system_for("z1*c1", 1, 20);
        let spec = pq_spec();
        let row0 = build_row0(&spec, &sys).unwrap();
        let cap = row0[0].cap();
        let vars = row0[0].vars().clone();
        let xi = TruncatedSeries::variable_at(vars, cap, 2).unwrap();
        for (j, entry) in row0.iter().enumerate() {
            match j {
                3..=9 => assert_eq!(entry, &xi.pow((j - 3) as u32).unwrap(), "entry {j}"),
                _ => assert!(entry.is_zero(), "entry {j} should vanish"),
            }
        }
        let matrix = build_matrix(&spec, &sys).unwrap();
        assert!(matrix.has_zero_line());
        let det = matrix_det_series(&matrix).unwrap();
        assert!(det.is_zero());
        for p in sample_points(3, 4, 5) {
            assert!(matrix_det_at(&matrix, &p).unwrap().is_zero());
        }
    }

    #[test]
    fn closed_form_matrix_matches_generic_builder() {
        // w-independent germ: cheap two-variable series even at high cap.
        let sys = system_for("z1*c1 + 2*z1^2*c1^2", 1, 22);
        let generic = build_matrix(&pq_spec(), &sys).unwrap();
        let explicit = pq_matrix_closed_form(&sys).unwrap();
        assert_eq!(generic.size(), explicit.size());
        assert_eq!(generic.cap(), explicit.cap());
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(generic.entry(i, j), explicit.entry(i, j), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn closed_form_row_matches_generic_builder_on_u_dependent_germ() {
        let sys = system_for("z1*c1 + z1^2*c1^2 + 1/2*z1*c1*u", 1, 10);
        let spec = pq_spec();
        let generic = build_row0(&spec, &sys).unwrap();
        let explicit = pq_row_closed_form(&sys).unwrap();
        for (j, (g, e)) in generic.iter().zip(explicit.iter()).enumerate() {
            assert_eq!(g, e, "row entry {j}");
        }
    }

    #[test]
    fn cubic_xi_systems_kill_high_rows_and_the_determinant() {
        let sys = random_trial_system(1, 18, 3, 2, 33).unwrap();
        let spec = pq_spec();
        let matrix = build_matrix(&spec, &sys).unwrap();
        // Entries have ξ-degree ≤ 7, so rows 8..15 vanish identically.
        for i in 8..16 {
            for j in 0..16 {
                assert!(matrix.entry(i, j).is_zero(), "entry ({i},{j})");
            }
        }
        let det = matrix_det_series(&matrix).unwrap();
        assert!(det.is_zero());
        for p in sample_points(3, 3, 17) {
            assert!(matrix_det_at(&matrix, &p).unwrap().is_zero());
        }
    }

    #[test]
    fn degree_eight_system_has_nonzero_determinant_witness() {
        let sys = random_trial_system(1, 20, 8, 0, 7).unwrap();
        let spec = pq_spec();
        let matrix = build_matrix(&spec, &sys).unwrap();
        let det = matrix_det_series(&matrix).unwrap();
        assert!(!det.is_zero());
        // Entry evaluation at the origin picks out exactly the constant term
        // of the determinant series.
        let origin = vec![GaussianRational::zero(); 3];
        let at_origin = matrix_det_at(&matrix, &origin).unwrap();
        assert_eq!(at_origin, det.constant_term());
        assert!(!at_origin.is_zero());
    }

    #[test]
    fn point_and_series_determinants_agree_on_polynomial_systems() {
        // Φ = ξ³ exactly: every matrix entry is a polynomial far below the
        // cap, so entry evaluation and series evaluation must agree exactly.
        let vars = pde_vars(1);
        let phi = TruncatedSeries::from_terms(
            vars,
            45,
            [(mi(&[0, 0, 3]), GaussianRational::one())],
        )
        .unwrap();
        let sys = PdeSystem::scalar(phi).unwrap();
        let matrix = build_matrix(&pq_spec(), &sys).unwrap();
        let det = matrix_det_series(&matrix).unwrap();
        for p in sample_points(3, 5, 23) {
            let direct = matrix_det_at(&matrix, &p).unwrap();
            let via_series = det.eval(&p).unwrap();
            assert_eq!(direct, via_series);
        }
    }

    #[test]
    fn point_determinants_are_translation_covariant() {
        // Φ a small polynomial in (z, w, ξ); shifting the base point in
        // (z, w) must shift determinant values correspondingly.
        let vars = pde_vars(1);
        let cap = 30;
        let terms = [
            (mi(&[0, 0, 2]), GaussianRational::one()),
            (mi(&[1, 1, 1]), GaussianRational::from_parts(1, 1, 0, 1)),
            (mi(&[2, 0, 0]), GaussianRational::from_parts(-1, 3, 0, 1)),
        ];
        let phi = TruncatedSeries::from_terms(vars.clone(), cap, terms.clone()).unwrap();
        let z0 = GaussianRational::from_parts(1, 2, 0, 1);
        let w0 = GaussianRational::from_parts(-1, 3, 0, 1);
        // Shift each monomial z^a w^b ξ^g by binomial expansion.
        let mut shifted_terms: Vec<(Multiindex, GaussianRational)> = Vec::new();
        for (mono, c) in &terms {
            let (a, b, g) = (mono.get(0), mono.get(1), mono.get(2));
            for p in 0..=a {
                for q in 0..=b {
                    let mut coeff = c.clone();
                    for _ in 0..(a - p) {
                        coeff = &coeff * &z0;
                    }
                    for _ in 0..(b - q) {
                        coeff = &coeff * &w0;
                    }
                    let binom = |top: u32, bot: u32| -> i64 {
                        let mut acc = 1i64;
                        for t in 0..bot {
                            acc = acc * (top - t) as i64 / (t + 1) as i64;
                        }
                        acc
                    };
                    coeff = &coeff
                        * &GaussianRational::from_parts(binom(a, p) * binom(b, q), 1, 0, 1);
                    shifted_terms.push((mi(&[p, q, g]), coeff));
                }
            }
        }
        let phi_shifted = TruncatedSeries::from_terms(vars, cap, shifted_terms).unwrap();
        let spec = layer_1_1_spec();
        let matrix = build_matrix(&spec, &sys_of(phi)).unwrap();
        let matrix_shifted = build_matrix(&spec, &sys_of(phi_shifted)).unwrap();
        for p in sample_points(3, 5, 41) {
            let shifted_point = vec![&p[0] + &z0, &p[1] + &w0, p[2].clone()];
            let lhs = matrix_det_at(&matrix_shifted, &p).unwrap();
            let rhs = matrix_det_at(&matrix, &shifted_point).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    fn sys_of(phi: TruncatedSeries) -> PdeSystem {
        PdeSystem::scalar(phi).unwrap()
    }

    #[test]
    fn gamma_search_recovers_consecutive_derivatives() {
        let sys = random_trial_system(1, 20, 8, 0, 7).unwrap();
        let found = search_gammas(1, 2, &pq_basis(), &sys, 500, 9).unwrap();
        let expected: Vec<Multiindex> = (1..=15).map(|j| mi(&[j])).collect();
        assert_eq!(found, expected);
    }

    #[test]
    fn gamma_search_exhausts_on_the_flat_sphere() {
        let sys = system_for("z1*c1", 1, 20);
        let err = search_gammas(1, 2, &pq_basis(), &sys, 500, 9).unwrap_err();
        assert!(matches!(err, Error::GammaSearchExhausted { .. }));
    }

    /// Regenerates the shipped `(2, 2, 4)` table entry.  Run with
    /// `--ignored --nocapture` and paste the printed JSON into
    /// `data/gamma_table.json` if the layer parameters ever change.
    #[test]
    #[ignore]
    fn print_gamma_search_for_the_two_variable_quadric_layer() {
        let basis = layer_basis(2, 2, 4);
        let sys = random_trial_system(2, 10, 4, 0, 4242).unwrap();
        let found = search_gammas(2, 2, &basis, &sys, 400, 4242).unwrap();
        let rows: Vec<String> = found
            .iter()
            .map(|g| format!("[{}, {}]", g.get(0), g.get(1)))
            .collect();
        println!(
            "{{\"n\": 2, \"m\": 2, \"d\": 4, \"gammas\": [{}]}}",
            rows.join(", ")
        );
    }

    #[test]
    fn two_variable_quadric_layer_table_entry_certifies_independent_rows() {
        // A nonzero point value of the truncated determinant certifies that
        // the true rows are independent: a linear relation among the exact
        // row functions would survive truncation and force every point value
        // to zero.
        assert_eq!(layer_basis(2, 2, 4).len(), 34);
        let table = default_gamma_table().unwrap();
        let mut last = None;
        for alphas in enumerate_alpha_choices(2, 2).unwrap() {
            // Every admissible tuple of this layer has total degree 4, so
            // they share one basis and one table entry.
            let spec = ObstructionSpec::for_layer(2, 2, alphas, &table).unwrap();
            assert_eq!(spec.d(), 4);
            assert_eq!(spec.s(), 33);
            last = Some(spec);
        }
        let spec = last.expect("layer has admissible tuples");
        let sys = random_trial_system(2, 10, 4, 0, 4242).unwrap();
        let matrix = build_matrix(&spec, &sys).unwrap();
        let point = &sample_points(5, 1, 4242)[0];
        assert!(!matrix_det_at(&matrix, point).unwrap().is_zero());
    }

    #[test]
    fn default_table_validates_and_rejects_corruption() {
        let table = default_gamma_table().unwrap();
        assert_eq!(table.lookup(1, 1, 3).unwrap().len(), 4);
        assert_eq!(table.lookup(1, 2, 6).unwrap().len(), 15);
        assert_eq!(table.lookup(2, 2, 4).unwrap().len(), 33);
        assert!(table.lookup(9, 9, 9).is_none());
        assert!(matches!(
            GammaTable::parse("not json"),
            Err(Error::GammaTable(_))
        ));
        assert!(matches!(
            GammaTable::parse(r#"{"version": 2, "entries": []}"#),
            Err(Error::GammaTable(_))
        ));
        // Degree window violation: |γ¹| = 2.
        let bad = r#"{"version": 1, "entries": [{"n": 1, "m": 1, "d": 3, "gammas": [[2], [1], [3], [4]]}]}"#;
        assert!(matches!(GammaTable::parse(bad), Err(Error::GammaTable(_))));
    }

    #[test]
    fn pipeline_satisfied_on_the_sphere_for_both_layers() {
        let h = RealDefining::parse("z1*c1", 1).unwrap();
        let verdict = full_pipeline(&h, 2, 3, 5, 11).unwrap();
        assert_eq!(verdict.conclusion, Conclusion::ObstructionSatisfied);
        assert_eq!(verdict.layers.len(), 2);
        assert!(!verdict.transversality_automatic);
        for layer in &verdict.layers {
            for factor in &layer.factors {
                assert!(factor.zero_evidence, "layer {} factor", layer.m);
                assert!(!factor.nonzero_witness);
                assert_eq!(factor.point_semantics, Some(PointSemantics::SeriesEvaluation));
            }
        }
        let single = full_pipeline(&h, 1, 3, 5, 11).unwrap();
        assert_eq!(single.conclusion, Conclusion::ObstructionSatisfied);
        assert_eq!(single.layers.len(), 1);
        assert!(single.transversality_automatic);
    }

    #[test]
    fn pipeline_clears_the_three_term_germ_at_codimension_two() {
        // |z|² + |z|⁴ + |z|⁶ sums three independent squares, one more than a
        // two-dimensional quadric offers, yet its quadric-layer determinant
        // vanishes identically to this order: vanishing is a necessary test,
        // so passing it never certifies an embedding.  The sphere layer still
        // rejects the germ with an exact witness.
        let abs246 = corpus()
            .into_iter()
            .find(|m| m.name == "abs246")
            .expect("corpus has abs246");
        let verdict = full_pipeline(&abs246.germ, 2, 6, 4, 13).unwrap();
        assert_eq!(verdict.conclusion, Conclusion::ObstructionSatisfied);
        let m1 = &verdict.layers[0];
        assert!(m1.factors.iter().all(|f| f.nonzero_witness));
        let m2 = &verdict.layers[1];
        assert!(m2.factors.iter().all(|f| f.zero_evidence));
        assert!(m2.factors.iter().all(|f| f.first_nonzero_order.is_none()));
    }

    #[test]
    fn pipeline_obstructs_nonspherical_germs_at_the_sphere_target() {
        // With target dimension equal to the source dimension the only layer
        // is the sphere test itself, so any germ with a nonzero sphere-layer
        // determinant is excluded outright.
        for name in ["abs4", "abs246"] {
            let member = corpus()
                .into_iter()
                .find(|m| m.name == name)
                .expect("corpus member");
            let verdict = full_pipeline(&member.germ, 1, 4, 3, 13).unwrap();
            assert_eq!(verdict.conclusion, Conclusion::Obstructed, "{name}");
            assert!(verdict.transversality_automatic);
            assert_eq!(verdict.layers.len(), 1);
            for factor in &verdict.layers[0].factors {
                assert!(factor.nonzero_witness, "{name}");
                assert!(factor.first_nonzero_order.is_some());
            }
        }
    }

    #[test]
    fn ode_solutions_reproduce_the_formal_system_exactly() {
        use crate::hypersurface::{complex_vars, ComplexDefining};
        // Solve w″ = Φ₀(w′) with w(0) = a, w′(0) = b by Picard iteration,
        // then push the resulting two-parameter solution family through the
        // generic derivation.  Formal implicit-function uniqueness forces the
        // derived right-hand side to equal Φ₀ on the nose, which pins the
        // whole determinant machinery: a system built from a solution family
        // and the formal system it came from give literally equal matrices.
        let cap = 22u32;
        let cvars = complex_vars(1);
        let z = TruncatedSeries::variable_at(cvars.clone(), cap, 0).unwrap();
        let a = TruncatedSeries::variable_at(cvars.clone(), cap, 1).unwrap();
        let b = TruncatedSeries::variable_at(cvars.clone(), cap, 2).unwrap();
        let linear = a.add(&b.mul(&z).unwrap()).unwrap();
        let phi0 = |s: &TruncatedSeries| s.pow(4).unwrap();
        let double_integral_z = |s: &TruncatedSeries| {
            let terms: Vec<(Multiindex, GaussianRational)> = s
                .terms()
                .map(|(mi, c)| {
                    let i = mi.get(0);
                    let lifted = mi.plus_unit(0).plus_unit(0);
                    let denom =
                        GaussianRational::from_parts(((i + 1) * (i + 2)) as i64, 1, 0, 1);
                    (lifted, c.checked_div(&denom).unwrap())
                })
                .collect();
            TruncatedSeries::from_terms(s.vars().clone(), cap, terms).unwrap()
        };
        let mut rho = linear.clone();
        for _ in 0..cap {
            let rhs = phi0(&rho.partial_derivative_at(0).unwrap());
            rho = linear.add(&double_integral_z(&rhs)).unwrap();
        }
        // Residual check: ρ_zz − Φ₀(ρ_z) must vanish (cap drops by 2).
        let resid = rho
            .partial_derivative_at(0)
            .unwrap()
            .partial_derivative_at(0)
            .unwrap()
            .sub(
                &phi0(&rho.partial_derivative_at(0).unwrap())
                    .truncate_to(cap - 2)
                    .unwrap(),
            )
            .unwrap();
        assert!(resid.is_zero(), "Picard iterate does not solve the equation");
        let r = ComplexDefining::from_series(1, rho).unwrap();
        let (sys, _) = derive_pde(&r).unwrap();
        let xi4 = TruncatedSeries::variable_at(sys.vars().clone(), sys.cap(), 2)
            .unwrap()
            .pow(4)
            .unwrap();
        assert_eq!(sys.phi(0, 0), &xi4);
        let det = matrix_det_series(&build_matrix(&pq_spec(), &sys).unwrap()).unwrap();
        let formal = PdeSystem::scalar(xi4).unwrap();
        let fdet = matrix_det_series(&build_matrix(&pq_spec(), &formal).unwrap()).unwrap();
        assert_eq!(det, fdet);
    }

    #[test]
    fn pipeline_satisfied_on_a_scaled_quartic_perturbation() {
        // |z|² + 2|z|⁴ = |z|² + |√2 z²|² embeds linearly after rescaling, so
        // its quadric-layer factor vanishes even though the germ is not
        // spherical.
        let h = RealDefining::parse("z1*c1 + 2*z1^2*c1^2", 1).unwrap();
        let verdict = full_pipeline(&h, 2, 4, 3, 13).unwrap();
        assert_eq!(verdict.conclusion, Conclusion::ObstructionSatisfied);
        assert!(verdict.layers[0].factors.iter().all(|f| f.nonzero_witness));
        assert!(verdict.layers[1].factors.iter().all(|f| f.zero_evidence));
    }

    #[test]
    fn pipeline_satisfied_on_an_embeddable_quartic_germ() {
        let abs4 = corpus()
            .into_iter()
            .find(|m| m.name == "abs4")
            .expect("corpus has abs4");
        let verdict = full_pipeline(&abs4.germ, 2, 4, 3, 19).unwrap();
        assert_eq!(verdict.conclusion, Conclusion::ObstructionSatisfied);
        // The sphere layer must reject it (abs4 is not spherical)…
        let m1 = &verdict.layers[0];
        assert!(m1.factors.iter().all(|f| f.nonzero_witness));
        // …while the quadric layer's factor vanishes.
        let m2 = &verdict.layers[1];
        assert!(m2.factors.iter().all(|f| f.zero_evidence));
    }
}
