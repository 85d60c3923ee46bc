//! Formal implicit-function solving at the origin.
//!
//! Given a square system `F(p, u) = 0` of truncated series in the variables
//! `p_1..p_r, u_1..u_k` (parameters first, unknowns last) with `F(0, 0) = 0`
//! and `∂F/∂u` invertible at the origin, there is a unique formal solution
//! `u(p)` with `u(0) = 0`.  [`solve_implicit`] computes its truncation by
//! determining homogeneous components order by order: the degree-`d` part of
//! the residual after substituting the partial solution is linear in the
//! unknown degree-`d` coefficients through the constant Jacobian, so each
//! order is a batch of exact rational linear solves.  The result is the exact
//! image of the true solution germ in the quotient ring — uniqueness of the
//! formal solution means no other series can agree with the residual
//! identity to the same order.

use crate::error::{Error, Result};
use crate::linalg::invert_exact;
use crate::rational::GaussianRational;
use crate::series::{TruncatedSeries, VarSet};

/// Solves `F(p, u) = 0` for `u(p)` with `u(0) = 0`.
///
/// The equations share a variable set whose first `num_params` entries are
/// the parameters; the remaining variables are the unknowns, one equation
/// per unknown.  Solutions are returned over a fresh variable set holding
/// just the parameter names, truncated at `out_cap` (which must not exceed
/// the equations' cap).
pub fn solve_implicit(
    equations: &[TruncatedSeries],
    num_params: usize,
    out_cap: u32,
) -> Result<Vec<TruncatedSeries>> {
    let k = equations.len();
    let Some(first) = equations.first() else {
        return Ok(Vec::new());
    };
    let all_vars = first.vars().clone();
    let eq_cap = first.cap();
    for eq in equations {
        if eq.vars() != &all_vars {
            return Err(Error::VarMismatch {
                left: all_vars.names().join(","),
                right: eq.vars().names().join(","),
            });
        }
        if eq.cap() != eq_cap {
            return Err(Error::CapMismatch {
                left: eq_cap,
                right: eq.cap(),
            });
        }
    }
    if num_params + k != all_vars.len() {
        return Err(Error::WrongArity {
            expected: all_vars.len(),
            got: num_params + k,
        });
    }
    if out_cap > eq_cap {
        return Err(Error::CapExhausted(format!(
            "requested solution order {out_cap} exceeds equation cap {eq_cap}"
        )));
    }
    for eq in equations {
        if !eq.constant_term().is_zero() {
            return Err(Error::ResidualNonzero(format!(
                "equation does not vanish at the origin (constant term {})",
                eq.constant_term()
            )));
        }
    }
    // Constant Jacobian with respect to the unknowns.
    let mut jac = vec![vec![GaussianRational::zero(); k]; k];
    for (i, eq) in equations.iter().enumerate() {
        for j in 0..k {
            jac[i][j] =
                eq.coefficient(&crate::multiindex::Multiindex::unit(all_vars.len(), num_params + j));
        }
    }
    let jac_inv = invert_exact(&jac).map_err(|_| Error::SingularJacobian {
        det: crate::linalg::det_exact(&jac)
            .map(|d| d.to_string())
            .unwrap_or_else(|_| "?".into()),
    })?;

    let param_names: Vec<&str> = (0..num_params)
        .map(|i| all_vars.name(i))
        .collect();
    let param_vars = VarSet::of(&param_names);
    let mut solution: Vec<TruncatedSeries> = vec![TruncatedSeries::zero(param_vars.clone(), out_cap); k];

    for d in 1..=out_cap {
        // Residual of the partial solution, exact through degree d.
        let host: Vec<TruncatedSeries> = equations
            .iter()
            .map(|eq| eq.truncate_to(d))
            .collect::<Result<_>>()?;
        let mut values: Vec<TruncatedSeries> = (0..num_params)
            .map(|i| TruncatedSeries::variable_at(param_vars.clone(), d, i))
            .collect::<Result<_>>()?;
        for s in &solution {
            values.push(s.truncate_to(d)?);
        }
        let residual: Vec<TruncatedSeries> = host
            .iter()
            .map(|eq| eq.substitute(&values))
            .collect::<Result<_>>()?;
        // Correct the degree-d coefficients: J0 x_d = -[residual]_d, solved
        // monomial by monomial over the exact scalars.
        let mut corrections: Vec<Vec<(crate::multiindex::Multiindex, GaussianRational)>> =
            vec![Vec::new(); k];
        let mut monomials = std::collections::BTreeSet::new();
        for r in &residual {
            for (mi, _) in r.terms() {
                if mi.degree() == d {
                    monomials.insert(mi.clone());
                }
            }
        }
        for mi in monomials {
            let rhs: Vec<GaussianRational> =
                residual.iter().map(|r| r.coefficient(&mi)).collect();
            for (i, corr) in corrections.iter_mut().enumerate() {
                let mut c = GaussianRational::zero();
                for (j, rj) in rhs.iter().enumerate() {
                    c = &c + &(&jac_inv[i][j] * rj);
                }
                if !c.is_zero() {
                    corr.push((mi.clone(), -c));
                }
            }
        }
        for (s, corr) in solution.iter_mut().zip(corrections) {
            let delta = TruncatedSeries::from_terms(param_vars.clone(), out_cap, corr)?;
            *s = s.add(&delta)?;
        }
    }
    Ok(solution)
}

/// Substitutes a candidate solution back into the equations and returns the
/// residuals (each should be identically zero in the quotient ring).
pub fn implicit_residual(
    equations: &[TruncatedSeries],
    num_params: usize,
    solution: &[TruncatedSeries],
) -> Result<Vec<TruncatedSeries>> {
    let Some(first) = equations.first() else {
        return Ok(Vec::new());
    };
    let all_vars = first.vars();
    let k = all_vars.len() - num_params;
    if solution.len() != k {
        return Err(Error::WrongArity {
            expected: k,
            got: solution.len(),
        });
    }
    let Some(sol_first) = solution.first() else {
        return equations.iter().map(|eq| eq.truncate_to(eq.cap().min(first.cap()))).collect();
    };
    let param_vars = sol_first.vars().clone();
    let cap = sol_first.cap().min(first.cap());
    let mut values: Vec<TruncatedSeries> = (0..num_params)
        .map(|i| TruncatedSeries::variable_at(param_vars.clone(), cap, i))
        .collect::<Result<_>>()?;
    for s in solution {
        values.push(s.truncate_to(cap)?);
    }
    equations
        .iter()
        .map(|eq| eq.truncate_to(cap)?.substitute(&values))
        .collect()
}
