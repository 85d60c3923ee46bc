//! Closed-form order and size bounds for the determinant factors.
//!
//! Every quantity here is an exact big integer: the multi-index count
//! `C(l+n−1, n−1)`, the prolongation budget `p(m, n)`, the weighted-degree
//! cap `(m+1)(m+2)/2`, the coefficient-count bound `s(m, n)`, the per-layer
//! order bound `ν(n, m) = 2 + (m − n) + s(m, n)`, and the aggregate
//! `μ(n, N) = ν(n, N)`.  The aggregate equals the maximum of `ν(n, m)` over
//! `n ≤ m ≤ N` because `ν` is monotone in `m`; [`mu_of`] recomputes that
//! maximum and checks the equality rather than assuming it.
//!
//! These are a priori bounds on how much jet data the vanishing test can
//! consume; the actually constructed layers stay well under them (their
//! basis sizes are compared against `s` in the tests).  For the smallest
//! interesting target, `(n, N) = (1, 2)`, the assembled operator is far
//! sharper than the generic bound: its order is exactly 18, reported
//! alongside `μ` by [`sharp_mu`].

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc = acc * BigUint::from(n - k + i) / BigUint::from(i);
    }
    acc
}

/// Number of distinct multi-indices `β` over `n` slots with `|β| = l`:
/// `C(l + n − 1, n − 1)`.
pub fn count_multiindices(l: u64, n: u64) -> BigUint {
    if n == 0 {
        return if l == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binomial(l + n - 1, n - 1)
}

fn check_layer(m: u64, n: u64) -> Result<()> {
    if n == 0 || m < n {
        return Err(Error::BadSpec(format!(
            "bounds require m ≥ n ≥ 1, got n = {n}, m = {m}"
        )));
    }
    Ok(())
}

/// Jet-prolongation budget `p(m, n) = n + n(n+1)/2 · C(m, n)`.
pub fn p_of(m: u64, n: u64) -> Result<BigUint> {
    check_layer(m, n)?;
    let triangle = BigUint::from(n) * BigUint::from(n + 1) / BigUint::from(2u32);
    Ok(BigUint::from(n) + triangle * binomial(m, n))
}

/// Weighted-degree cap `(m + 1)(m + 2) / 2` for the layer-`m` monomial pool.
pub fn weighted_cap(m: u64) -> u64 {
    (m + 1) * (m + 2) / 2
}

/// Bound `C(weighted_cap(m) + p, p)` on the number of coefficient functions
/// of a layer-`m` relation.
pub fn s_bound(m: u64, n: u64) -> Result<BigUint> {
    let p = p_of(m, n)?;
    let p64 = u64::try_from(&p).map_err(|_| {
        Error::BadSpec(format!("p(m = {m}, n = {n}) exceeds the supported range"))
    })?;
    Ok(binomial(weighted_cap(m) + p64, p64))
}

/// Per-layer order bound `ν(n, m) = 2 + (m − n) + s(m, n)`.
pub fn nu_of(n: u64, m: u64) -> Result<BigUint> {
    check_layer(m, n)?;
    Ok(BigUint::from(2 + (m - n)) + s_bound(m, n)?)
}

/// Aggregate order bound `μ(n, N) = ν(n, N)`, recomputed as the maximum of
/// `ν(n, m)` over `n ≤ m ≤ N` and checked against the closed form.
pub fn mu_of(n: u64, target_n: u64) -> Result<BigUint> {
    check_layer(target_n, n)?;
    let closed = nu_of(n, target_n)?;
    let max = (n..=target_n)
        .map(|m| nu_of(n, m))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .expect("range n..=N is nonempty");
    if max != closed {
        return Err(Error::Internal(format!(
            "ν is not maximal at m = N for n = {n}, N = {target_n}"
        )));
    }
    Ok(closed)
}

/// The sharp order known for specific small targets, when one is available:
/// the assembled `(n, N) = (1, 2)` operator has order exactly 18.
pub fn sharp_mu(n: u64, target_n: u64) -> Option<u64> {
    if (n, target_n) == (1, 2) {
        Some(18)
    } else {
        None
    }
}

/// All bound quantities for one target `(n, N)`, evaluated at the top layer
/// `m = N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub n: u64,
    pub target_n: u64,
    pub p: BigUint,
    pub weighted_cap: u64,
    pub s_bound: BigUint,
    pub nu: BigUint,
    pub mu: BigUint,
    pub sharp_mu: Option<u64>,
}

impl BoundReport {
    pub fn for_target(n: u64, target_n: u64) -> Result<Self> {
        let report = BoundReport {
            n,
            target_n,
            p: p_of(target_n, n)?,
            weighted_cap: weighted_cap(target_n),
            s_bound: s_bound(target_n, n)?,
            nu: nu_of(n, target_n)?,
            mu: mu_of(n, target_n)?,
            sharp_mu: sharp_mu(n, target_n),
        };
        debug_assert_eq!(
            report.nu,
            BigUint::from(2 + (target_n - n)) + report.s_bound.clone()
        );
        debug_assert_eq!(report.mu, report.nu);
        Ok(report)
    }
}
