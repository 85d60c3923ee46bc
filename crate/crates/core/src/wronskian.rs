//! Span profiles and linear-dependence extraction for families of series
//! under first-order derivations.
//!
//! A [`VectorFamily`] packages `N` components `h_1, …, h_N` (truncated series
//! over one chart) together with `n` derivations `Λ_1, …, Λ_n` whose
//! coefficient rows are independent at the base point.  For a derivative word
//! `Λ^α = Λ_1^{α_1} ∘ ⋯ ∘ Λ_n^{α_n}` the span
//! `E_l(q) = Span{Λ^α H(q) : 1 ≤ |α| ≤ l}` is computed exactly at rational
//! points; its dimension sequence is nondecreasing in `l`.
//!
//! When the sequence stalls — `dim E_l(q) = dim E_{l+1}(q) = m < N` at a
//! generic point — the components' derivatives satisfy a linear relation with
//! *constant* coefficients, and [`extract_dependence`] recovers one by the
//! determinant-ratio construction: pick `m` derivative rows and `m` columns
//! with a nonvanishing minor, form the ratio `c_{i}` of bordered minors for
//! each selected column, and assemble `λ` from the `c_i`.  Sampled points
//! only guide the rank detection; every returned `λ` is certified by checking
//! `Σ_i λ_i Λ_j h_i ≡ 0` as series, for all `j`, before return.  A true
//! dependence of the underlying germs survives truncation exactly (truncation
//! is linear), so the certificate is sound at any cap.  Verification failure
//! signals rank misdetection at a non-generic point and triggers resampling
//! at fresh seeded points.
//!
//! [`bordered_vanishing_implies_zero`] is the finale of that argument as an
//! executable fact: for a nonsingular `s × s` matrix `B`, all `s` bordered
//! determinants `det(b_{i_1}, …, b_{i_{s−1}}, a)` vanish exactly when
//! `a = 0`; the routine computes both sides and asserts the equivalence.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{det_exact, rank_exact};
use crate::multiindex::{multiindices_of_degree, Multiindex};
use crate::rational::GaussianRational;
use crate::series::TruncatedSeries;

/// A first-order derivation `Λ = Σ_v a_v(x) ∂/∂x_v` with series coefficients.
#[derive(Debug, Clone)]
pub struct Derivation {
    coeffs: Vec<TruncatedSeries>,
}

impl Derivation {
    /// One coefficient per chart variable, all over the same variable set and
    /// cap.
    pub fn new(coeffs: Vec<TruncatedSeries>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::WrongArity {
                expected: 1,
                got: 0,
            });
        };
        if coeffs.len() != first.vars().len() {
            return Err(Error::WrongArity {
                expected: first.vars().len(),
                got: coeffs.len(),
            });
        }
        for c in &coeffs[1..] {
            first.check_aligned(c)?;
        }
        Ok(Derivation { coeffs })
    }

    /// The coordinate derivation `∂/∂x_k`.
    pub fn coordinate(vars: crate::series::VarSet, cap: u32, k: usize) -> Result<Self> {
        if k >= vars.len() {
            return Err(Error::UnknownVar(format!("slot {k}")));
        }
        let coeffs = (0..vars.len())
            .map(|v| {
                if v == k {
                    TruncatedSeries::one(vars.clone(), cap)
                } else {
                    TruncatedSeries::zero(vars.clone(), cap)
                }
            })
            .collect();
        Ok(Derivation { coeffs })
    }

    pub fn coeffs(&self) -> &[TruncatedSeries] {
        &self.coeffs
    }

    pub fn cap(&self) -> u32 {
        self.coeffs[0].cap()
    }

    /// Applies the derivation; the result is capped at
    /// `min(h.cap() − 1, coefficient cap)`.
    pub fn apply(&self, h: &TruncatedSeries) -> Result<TruncatedSeries> {
        if h.cap() == 0 {
            return Err(Error::CapExhausted(
                "cannot derive a series of cap 0".into(),
            ));
        }
        let target = (h.cap() - 1).min(self.cap());
        let mut acc = TruncatedSeries::zero(h.vars().clone(), target);
        for (v, coeff) in self.coeffs.iter().enumerate() {
            let dh = h.partial_derivative_at(v)?.truncate_to(target)?;
            acc = acc.add(&coeff.truncate_to(target)?.mul(&dh)?)?;
        }
        Ok(acc)
    }

    /// The row of coefficient values at the origin.
    fn base_row(&self) -> Vec<GaussianRational> {
        self.coeffs.iter().map(|c| c.constant_term()).collect()
    }
}

/// A family `H = (h_1, …, h_N)` of series on one chart together with the
/// derivations `Λ_1, …, Λ_n` spanning the directions along which it is
/// differentiated.  The chart may have more variables than there are
/// derivations (a curve or surface carried inside a larger jet chart).
#[derive(Debug, Clone)]
pub struct VectorFamily {
    components: Vec<TruncatedSeries>,
    derivations: Vec<Derivation>,
}

impl VectorFamily {
    /// Validates alignment and base-point independence of the derivations:
    /// the matrix of coefficient values at the origin must have full row
    /// rank, so the `Λ_j` span `n` genuinely distinct directions there.
    pub fn new(
        components: Vec<TruncatedSeries>,
        derivations: Vec<Derivation>,
    ) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::WrongArity {
                expected: 1,
                got: 0,
            });
        };
        for c in &components[1..] {
            first.check_aligned(c)?;
        }
        if derivations.is_empty() {
            return Err(Error::WrongArity {
                expected: 1,
                got: 0,
            });
        }
        if derivations.len() > first.vars().len() {
            return Err(Error::WrongArity {
                expected: first.vars().len(),
                got: derivations.len(),
            });
        }
        for d in &derivations {
            if d.coeffs[0].vars() != first.vars() {
                return Err(Error::VarMismatch {
                    left: d.coeffs[0].vars().names().join(", "),
                    right: first.vars().names().join(", "),
                });
            }
        }
        let base: Vec<Vec<GaussianRational>> =
            derivations.iter().map(|d| d.base_row()).collect();
        if rank_exact(&base) != derivations.len() {
            return Err(Error::BadSpec(
                "derivations are linearly dependent at the base point".into(),
            ));
        }
        Ok(VectorFamily {
            components,
            derivations,
        })
    }

    /// Number of derivations (the dimension along which spans are taken).
    pub fn n(&self) -> usize {
        self.derivations.len()
    }

    /// Number of components `N`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn derivations(&self) -> &[Derivation] {
        &self.derivations
    }

    /// All derivative words `Λ^α H` for `1 ≤ |α| ≤ max_level`, in graded
    /// order.  `Λ^α` peels the leftmost slot outermost, matching
    /// `Λ_1^{α_1} ∘ ⋯ ∘ Λ_n^{α_n}`; each level costs one unit of cap.
    fn jets(&self, max_level: u32) -> Result<Vec<(Multiindex, Vec<TruncatedSeries>)>> {
        let n = self.n();
        let mut out: Vec<(Multiindex, Vec<TruncatedSeries>)> = Vec::new();
        for level in 1..=max_level {
            for alpha in multiindices_of_degree(n, level) {
                let j = (0..n)
                    .find(|&t| alpha.get(t) > 0)
                    .expect("degree ≥ 1 index has a nonzero slot");
                let row: Vec<TruncatedSeries> = if level == 1 {
                    self.components
                        .iter()
                        .map(|h| self.derivations[j].apply(h))
                        .collect::<Result<_>>()?
                } else {
                    let parent = Multiindex::new(
                        (0..n)
                            .map(|t| alpha.get(t) - u32::from(t == j))
                            .collect(),
                    );
                    let parent_row = &out
                        .iter()
                        .find(|(a, _)| *a == parent)
                        .expect("parents precede children in graded order")
                        .1;
                    parent_row
                        .iter()
                        .map(|h| self.derivations[j].apply(h))
                        .collect::<Result<_>>()?
                };
                out.push((alpha, row));
            }
        }
        Ok(out)
    }
}

/// The dimensions `dim E_l(q)` for `l = 1..=L` at one sample point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanProfile {
    dims: Vec<usize>,
}

impl SpanProfile {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// The first level `l` with `dim E_l = dim E_{l+1}`, together with that
    /// common dimension, if the profile reaches such a plateau.
    pub fn stabilization(&self) -> Option<(u32, usize)> {
        self.dims
            .windows(2)
            .position(|w| w[0] == w[1])
            .map(|i| (i as u32 + 1, self.dims[i]))
    }
}

/// Exact span dimensions of the derivative families `{Λ^α H(q) : |α| ≤ l}`
/// for `l = 1..=levels` at the rational point `q`.
pub fn span_dims(
    fam: &VectorFamily,
    q: &[GaussianRational],
    levels: u32,
) -> Result<SpanProfile> {
    let jets = fam.jets(levels)?;
    let values = jet_values(&jets, q)?;
    Ok(profile_of(&jets, &values, levels))
}

fn jet_values(
    jets: &[(Multiindex, Vec<TruncatedSeries>)],
    q: &[GaussianRational],
) -> Result<Vec<Vec<GaussianRational>>> {
    jets.iter()
        .map(|(_, row)| row.iter().map(|h| h.eval(q)).collect())
        .collect()
}

fn profile_of(
    jets: &[(Multiindex, Vec<TruncatedSeries>)],
    values: &[Vec<GaussianRational>],
    levels: u32,
) -> SpanProfile {
    let mut dims = Vec::with_capacity(levels as usize);
    let mut rows: Vec<Vec<GaussianRational>> = Vec::new();
    for l in 1..=levels {
        for (i, (alpha, _)) in jets.iter().enumerate() {
            if alpha.degree() == l {
                rows.push(values[i].clone());
            }
        }
        dims.push(rank_exact(&rows));
    }
    SpanProfile { dims }
}

enum Attempt {
    /// A certified dependence vector, first nonzero entry scaled to one.
    Found(Vec<GaussianRational>),
    /// The derivative values span all of `C^N` at this point, which rules out
    /// any constant dependence: such a `λ` would confine every `Λ^α H` to the
    /// hyperplane `λ^⊥` at every point.
    SpansFill,
    /// No plateau `dim E_l = dim E_{l+1}` within the level budget.
    NoStabilization,
    /// Ratio construction succeeded numerically but the series identity
    /// failed — the sampled point misreported a rank.
    VerificationFailed,
}

fn attempt_at(
    fam: &VectorFamily,
    jets: &[(Multiindex, Vec<TruncatedSeries>)],
    q: &[GaussianRational],
    levels: u32,
) -> Result<Attempt> {
    let values = jet_values(jets, q)?;
    let profile = profile_of(jets, &values, levels);
    let Some((level, m)) = profile.stabilization() else {
        return Ok(Attempt::NoStabilization);
    };
    let big_n = fam.len();
    if m == big_n {
        return Ok(Attempt::SpansFill);
    }
    // Greedily pick m independent derivative rows with |α| ≤ level (graded
    // order, so degree-one rows come first when they are independent), then m
    // independent columns; both minors are taken at q.
    let mut row_ids: Vec<usize> = Vec::new();
    for (i, (alpha, _)) in jets.iter().enumerate() {
        if row_ids.len() == m {
            break;
        }
        if alpha.degree() > level {
            break;
        }
        let mut cand: Vec<Vec<GaussianRational>> =
            row_ids.iter().map(|&r| values[r].clone()).collect();
        cand.push(values[i].clone());
        if rank_exact(&cand) == cand.len() {
            row_ids.push(i);
        }
    }
    if row_ids.len() != m {
        return Ok(Attempt::VerificationFailed);
    }
    let mut cols: Vec<usize> = Vec::new();
    for j in 0..big_n {
        if cols.len() == m {
            break;
        }
        let cand: Vec<Vec<GaussianRational>> = row_ids
            .iter()
            .map(|&r| {
                cols.iter()
                    .chain(std::iter::once(&j))
                    .map(|&c| values[r][c].clone())
                    .collect()
            })
            .collect();
        let cand = transpose(cand);
        if rank_exact(&cand) == cand.len() {
            cols.push(j);
        }
    }
    if cols.len() != m {
        return Ok(Attempt::VerificationFailed);
    }
    let p = (0..big_n)
        .find(|j| !cols.contains(j))
        .expect("m < N leaves a free column");
    // Determinant-ratio constants: remove one selected column at a time; the
    // numerator borders the remaining ones with column p, the denominator
    // restores the removed column in the last slot.
    let minor = |kept: &[usize], last: usize| -> Result<GaussianRational> {
        let rows: Vec<Vec<GaussianRational>> = row_ids
            .iter()
            .map(|&r| {
                kept.iter()
                    .chain(std::iter::once(&last))
                    .map(|&c| values[r][c].clone())
                    .collect()
            })
            .collect();
        det_exact(&rows)
    };
    let mut lambda = vec![GaussianRational::zero(); big_n];
    for i0 in 0..m {
        let kept: Vec<usize> = cols
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != i0)
            .map(|(_, &c)| c)
            .collect();
        let den = minor(&kept, cols[i0])?;
        if den.is_zero() {
            return Ok(Attempt::VerificationFailed);
        }
        let num = minor(&kept, p)?;
        lambda[cols[i0]] = num.checked_div(&den)?;
    }
    lambda[p] = -GaussianRational::one();
    // Certify before returning: Σ λ_i Λ_j h_i must vanish identically at the
    // working cap for every derivation.
    for d in fam.derivations() {
        let mut acc: Option<TruncatedSeries> = None;
        for (i, h) in fam.components().iter().enumerate() {
            if lambda[i].is_zero() {
                continue;
            }
            let term = d.apply(h)?.scale(&lambda[i]);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        if let Some(a) = acc {
            if !a.is_zero() {
                return Ok(Attempt::VerificationFailed);
            }
        }
    }
    let first = lambda
        .iter()
        .find(|v| !v.is_zero())
        .expect("lambda has the entry −1 at column p")
        .clone();
    let inv = first.inv()?;
    for v in &mut lambda {
        *v = &*v * &inv;
    }
    Ok(Attempt::Found(lambda))
}

fn transpose(m: Vec<Vec<GaussianRational>>) -> Vec<Vec<GaussianRational>> {
    if m.is_empty() {
        return m;
    }
    let cols = m[0].len();
    (0..cols)
        .map(|c| m.iter().map(|row| row[c].clone()).collect())
        .collect()
}

/// Extracts a constant dependence `λ ≠ 0` with `Σ_i λ_i Λ_j h_i ≡ 0` for all
/// `j`, or returns `None` when the derivative values provably span all of
/// `C^N`.  Rank detection runs at `q` first and at three fresh seeded points
/// if `q` misreports; the span plateau is searched for `l < levels`.  The
/// returned vector is normalized to have first nonzero entry `1` and is
/// always certified against the series before return.
pub fn extract_dependence(
    fam: &VectorFamily,
    q: &[GaussianRational],
    levels: u32,
    seed: u64,
) -> Result<Option<Vec<GaussianRational>>> {
    if levels < 2 {
        return Err(Error::NoDependence(
            "plateau detection needs at least two levels".into(),
        ));
    }
    let jets = fam.jets(levels)?;
    let dim = fam.components()[0].vars().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<GaussianRational>> = vec![q.to_vec()];
    for _ in 0..3 {
        points.push(
            (0..dim)
                .map(|_| {
                    GaussianRational::from_parts(
                        rng.gen_range(-9..=9),
                        rng.gen_range(1..=5),
                        rng.gen_range(-9..=9),
                        rng.gen_range(1..=5),
                    )
                })
                .collect(),
        );
    }
    let mut saw_no_stabilization = false;
    let mut failures = 0usize;
    for point in &points {
        match attempt_at(fam, &jets, point, levels)? {
            Attempt::Found(lambda) => return Ok(Some(lambda)),
            Attempt::SpansFill => return Ok(None),
            Attempt::NoStabilization => saw_no_stabilization = true,
            Attempt::VerificationFailed => failures += 1,
        }
    }
    if saw_no_stabilization {
        return Err(Error::NoDependence(format!(
            "span dimensions never plateaued within {levels} levels"
        )));
    }
    Err(Error::Internal(format!(
        "dependence certificate failed at {failures} sample points; every \
         sampled point misreported the span rank"
    )))
}

/// For a nonsingular `s × s` matrix `B` (given by rows, columns `b_i`) and a
/// vector `a`: returns whether all `s` bordered determinants
/// `det(b_{i_1}, …, b_{i_{s−1}}, a)` vanish.  That happens exactly when
/// `a = 0` — each vanishing border confines `a` to the span of `s − 1`
/// columns, and the intersection of those spans is trivial — and the routine
/// computes both sides and asserts their equivalence.
pub fn bordered_vanishing_implies_zero(
    b: &[Vec<GaussianRational>],
    a: &[GaussianRational],
) -> Result<bool> {
    let s = b.len();
    if s == 0 || b.iter().any(|row| row.len() != s) {
        return Err(Error::NonSquare {
            rows: s,
            cols: b.first().map_or(0, |r| r.len()),
        });
    }
    if a.len() != s {
        return Err(Error::WrongArity {
            expected: s,
            got: a.len(),
        });
    }
    if det_exact(b)?.is_zero() {
        return Err(Error::SingularMatrix);
    }
    let mut all_vanish = true;
    for skip in 0..s {
        let bordered: Vec<Vec<GaussianRational>> = (0..s)
            .map(|r| {
                let mut row: Vec<GaussianRational> = (0..s)
                    .filter(|&c| c != skip)
                    .map(|c| b[r][c].clone())
                    .collect();
                row.push(a[r].clone());
                row
            })
            .collect();
        if !det_exact(&bordered)?.is_zero() {
            all_vanish = false;
            break;
        }
    }
    let a_zero = a.iter().all(|v| v.is_zero());
    assert_eq!(
        all_vanish, a_zero,
        "bordered determinants and the zero vector must decide together"
    );
    Ok(all_vanish)
}
