//! Exact determinants, ranks, and linear solving.
//!
//! Two worlds live here.  Over [`GaussianRational`] numbers we use
//! fraction-free Bareiss elimination ([`det_exact`]) and full-pivot
//! elimination for ranks.  Over [`TruncatedSeries`] the ring is a quotient
//! with nilpotents, so determinants use cofactor expansion for small sizes,
//! unit-pivot elimination when a pivot with nonzero constant term exists at
//! every step (row operations preserve determinants in any commutative ring),
//! and the division-free Berkowitz algorithm as a fallback.  Every path is
//! exact in its ring; a series determinant is the exact image of the true
//! determinant in the truncation quotient.

use crate::error::{Error, Result};
use crate::rational::GaussianRational;
use crate::series::TruncatedSeries;

fn check_square<T>(m: &[Vec<T>]) -> Result<usize> {
    let n = m.len();
    for row in m {
        if row.len() != n {
            return Err(Error::NonSquare {
                rows: n,
                cols: row.len(),
            });
        }
    }
    Ok(n)
}

/// Determinant of an exact rational matrix by fraction-free (Bareiss)
/// elimination with row pivoting.
pub fn det_exact(m: &[Vec<GaussianRational>]) -> Result<GaussianRational> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(GaussianRational::one());
    }
    let mut a: Vec<Vec<GaussianRational>> = m.to_vec();
    let mut sign = false;
    let mut prev = GaussianRational::one();
    for k in 0..n - 1 {
        let pivot_row = (k..n).find(|&r| !a[r][k].is_zero());
        let Some(r) = pivot_row else {
            return Ok(GaussianRational::zero());
        };
        if r != k {
            a.swap(r, k);
            sign = !sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&a[k][k] * &a[i][j]) - &(&a[i][k] * &a[k][j]);
                a[i][j] = num.checked_div(&prev)?;
            }
            a[i][k] = GaussianRational::zero();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    Ok(if sign { -d } else { d })
}

/// Rank of an exact rational matrix (not necessarily square).
pub fn rank_exact(m: &[Vec<GaussianRational>]) -> usize {
    if m.is_empty() || m[0].is_empty() {
        return 0;
    }
    let rows = m.len();
    let cols = m[0].len();
    let mut a: Vec<Vec<GaussianRational>> = m.to_vec();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].inv().expect("pivot is nonzero");
        for r in row + 1..rows {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            for c in col..cols {
                let delta = &factor * &a[row][c];
                a[r][c] = &a[r][c] - &delta;
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}

/// Inverse of an exact rational matrix by Gauss-Jordan elimination.
pub fn invert_exact(m: &[Vec<GaussianRational>]) -> Result<Vec<Vec<GaussianRational>>> {
    let n = check_square(m)?;
    let mut a: Vec<Vec<GaussianRational>> = m.to_vec();
    let mut inv: Vec<Vec<GaussianRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        GaussianRational::one()
                    } else {
                        GaussianRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else {
            return Err(Error::SingularJacobian {
                det: GaussianRational::zero().to_string(),
            });
        };
        a.swap(k, p);
        inv.swap(k, p);
        let scale = a[k][k].inv()?;
        for j in 0..n {
            a[k][j] = &a[k][j] * &scale;
            inv[k][j] = &inv[k][j] * &scale;
        }
        for i in 0..n {
            if i == k || a[i][k].is_zero() {
                continue;
            }
            let factor = a[i][k].clone();
            for j in 0..n {
                let da = &factor * &a[k][j];
                a[i][j] = &a[i][j] - &da;
                let di = &factor * &inv[k][j];
                inv[i][j] = &inv[i][j] - &di;
            }
        }
    }
    Ok(inv)
}

/// Evaluates every entry of a series matrix at an exact point.
pub fn eval_matrix(
    m: &[Vec<TruncatedSeries>],
    point: &[GaussianRational],
) -> Result<Vec<Vec<GaussianRational>>> {
    m.iter()
        .map(|row| row.iter().map(|s| s.eval(point)).collect())
        .collect()
}

fn check_uniform(m: &[Vec<TruncatedSeries>]) -> Result<()> {
    let mut it = m.iter().flatten();
    let Some(first) = it.next() else {
        return Ok(());
    };
    for s in it {
        if s.vars() != first.vars() {
            return Err(Error::VarMismatch {
                left: first.vars().names().join(","),
                right: s.vars().names().join(","),
            });
        }
        if s.cap() != first.cap() {
            return Err(Error::CapMismatch {
                left: first.cap(),
                right: s.cap(),
            });
        }
    }
    Ok(())
}

/// Determinant of a series matrix with uniform variable set and cap.
///
/// Sizes up to 6 expand by cofactors; larger matrices use unit-pivot
/// elimination, falling back to Berkowitz when no unit pivot exists.
pub fn det_series(m: &[Vec<TruncatedSeries>]) -> Result<TruncatedSeries> {
    let n = check_square(m)?;
    check_uniform(m)?;
    if n == 0 {
        return Err(Error::NonSquare { rows: 0, cols: 0 });
    }
    if n <= 6 {
        return det_series_cofactor(m);
    }
    det_series_eliminate(m)
}

fn det_series_cofactor(m: &[Vec<TruncatedSeries>]) -> Result<TruncatedSeries> {
    let n = m.len();
    let vars = m[0][0].vars().clone();
    let cap = m[0][0].cap();
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    // Expand along the column with the most zero entries.
    let (col, _) = (0..n)
        .map(|c| (c, (0..n).filter(|&r| m[r][c].is_zero()).count()))
        .max_by_key(|&(c, z)| (z, usize::MAX - c))
        .unwrap();
    let mut acc = TruncatedSeries::zero(vars, cap);
    for r in 0..n {
        if m[r][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<TruncatedSeries>> = (0..n)
            .filter(|&i| i != r)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != col)
                    .map(|j| m[i][j].clone())
                    .collect()
            })
            .collect();
        let sub = det_series_cofactor(&minor)?;
        let signed = if (r + col) % 2 == 0 {
            m[r][col].mul(&sub)?
        } else {
            m[r][col].neg().mul(&sub)?
        };
        acc = acc.add(&signed)?;
    }
    Ok(acc)
}

fn det_series_eliminate(m: &[Vec<TruncatedSeries>]) -> Result<TruncatedSeries> {
    let n = m.len();
    let vars = m[0][0].vars().clone();
    let cap = m[0][0].cap();
    let mut a: Vec<Vec<TruncatedSeries>> = m.to_vec();
    let mut sign = false;
    let mut det = TruncatedSeries::one(vars.clone(), cap);
    for k in 0..n {
        // Unit pivot: any remaining entry with a nonzero constant term.
        let mut pivot = None;
        'search: for r in k..n {
            for c in k..n {
                if !a[r][c].constant_term().is_zero() {
                    pivot = Some((r, c));
                    break 'search;
                }
            }
        }
        let Some((pr, pc)) = pivot else {
            if a.iter().take(n).skip(k).all(|row| row[k..].iter().all(|s| s.is_zero())) {
                return Ok(TruncatedSeries::zero(vars, cap));
            }
            // Nilpotent-only remainder: the eliminated part is block upper
            // triangular with unit pivots, so the determinant splits as the
            // pivot product times the residual block, finished division-free.
            let block: Vec<Vec<TruncatedSeries>> = (k..n)
                .map(|r| (k..n).map(|c| a[r][c].clone()).collect())
                .collect();
            let rest = det_series_berkowitz(&block)?;
            let det = det.mul(&rest)?;
            return Ok(if sign { det.neg() } else { det });
        };
        if pr != k {
            a.swap(pr, k);
            sign = !sign;
        }
        if pc != k {
            for row in a.iter_mut() {
                row.swap(pc, k);
            }
            sign = !sign;
        }
        det = det.mul(&a[k][k])?;
        let inv = a[k][k].invert_unit()?;
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let factor = a[i][k].mul(&inv)?;
            for j in k..n {
                let delta = factor.mul(&a[k][j])?;
                a[i][j] = a[i][j].sub(&delta)?;
            }
        }
    }
    Ok(if sign { det.neg() } else { det })
}

/// Division-free determinant via the Berkowitz recursion on principal
/// submatrices; valid over any commutative ring, O(n^4) multiplications.
fn det_series_berkowitz(m: &[Vec<TruncatedSeries>]) -> Result<TruncatedSeries> {
    let n = m.len();
    let vars = m[0][0].vars().clone();
    let cap = m[0][0].cap();
    let one = TruncatedSeries::one(vars.clone(), cap);
    // p holds the characteristic polynomial coefficients (monic first) of the
    // leading principal submatrix processed so far.
    let mut p: Vec<TruncatedSeries> = vec![one.clone()];
    for r in 1..=n {
        let a_diag = m[r - 1][r - 1].clone();
        // Toeplitz column: [1, -a, -(R C), -(R M C), ...]
        let mut t: Vec<TruncatedSeries> = Vec::with_capacity(r + 1);
        t.push(one.clone());
        t.push(a_diag.neg());
        if r >= 2 {
            let row: Vec<&TruncatedSeries> = (0..r - 1).map(|j| &m[r - 1][j]).collect();
            let mut v: Vec<TruncatedSeries> = (0..r - 1).map(|i| m[i][r - 1].clone()).collect();
            for _ in 2..=r {
                let mut dot = TruncatedSeries::zero(vars.clone(), cap);
                for (rj, vj) in row.iter().zip(&v) {
                    dot = dot.add(&rj.mul(vj)?)?;
                }
                t.push(dot.neg());
                // v <- M v for the next power.
                let mut next = Vec::with_capacity(r - 1);
                for i in 0..r - 1 {
                    let mut s = TruncatedSeries::zero(vars.clone(), cap);
                    for (j, vj) in v.iter().enumerate() {
                        s = s.add(&m[i][j].mul(vj)?)?;
                    }
                    next.push(s);
                }
                v = next;
            }
        }
        // p <- T p  (lower-triangular Toeplitz product).
        let mut next_p: Vec<TruncatedSeries> = Vec::with_capacity(r + 1);
        for i in 0..=r {
            let mut s = TruncatedSeries::zero(vars.clone(), cap);
            for (j, pj) in p.iter().enumerate() {
                if i >= j && i - j < t.len() {
                    s = s.add(&t[i - j].mul(pj)?)?;
                }
            }
            next_p.push(s);
        }
        p = next_p;
    }
    let last = p.pop().expect("char poly has n+1 coefficients");
    Ok(if n % 2 == 1 { last.neg() } else { last })
}

/// Solves `A x = b` over the series ring.  The constant-term matrix of `A`
/// must be invertible; unit pivots then exist at every elimination step and
/// each division is by a unit, so the solution is exact in the quotient ring.
pub fn solve_series_system(
    a: &[Vec<TruncatedSeries>],
    b: &[TruncatedSeries],
) -> Result<Vec<TruncatedSeries>> {
    let n = check_square(a)?;
    if b.len() != n {
        return Err(Error::WrongArity {
            expected: n,
            got: b.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    check_uniform(a)?;
    let const_mat: Vec<Vec<GaussianRational>> = a
        .iter()
        .map(|row| row.iter().map(|s| s.constant_term()).collect())
        .collect();
    let cdet = det_exact(&const_mat)?;
    if cdet.is_zero() {
        return Err(Error::SingularJacobian {
            det: cdet.to_string(),
        });
    }
    let mut mat = a.to_vec();
    let mut rhs = b.to_vec();
    // Column permutation: perm[k] = original unknown sitting in column k.
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pivot = None;
        'search: for r in k..n {
            for c in k..n {
                if !mat[r][c].constant_term().is_zero() {
                    pivot = Some((r, c));
                    break 'search;
                }
            }
        }
        let (pr, pc) = pivot.ok_or_else(|| {
            Error::Internal("invertible constant matrix must yield a unit pivot".into())
        })?;
        mat.swap(pr, k);
        rhs.swap(pr, k);
        if pc != k {
            for row in mat.iter_mut() {
                row.swap(pc, k);
            }
            perm.swap(pc, k);
        }
        let inv = mat[k][k].invert_unit()?;
        for i in k + 1..n {
            if mat[i][k].is_zero() {
                continue;
            }
            let factor = mat[i][k].mul(&inv)?;
            for j in k..n {
                let delta = factor.mul(&mat[k][j])?;
                mat[i][j] = mat[i][j].sub(&delta)?;
            }
            let delta = factor.mul(&rhs[k])?;
            rhs[i] = rhs[i].sub(&delta)?;
        }
    }
    // Back substitution.
    let vars = a[0][0].vars().clone();
    let cap = a[0][0].cap();
    let mut x = vec![TruncatedSeries::zero(vars, cap); n];
    for k in (0..n).rev() {
        let mut s = rhs[k].clone();
        for j in k + 1..n {
            let delta = mat[k][j].mul(&x[j])?;
            s = s.sub(&delta)?;
        }
        x[k] = s.mul(&mat[k][k].invert_unit()?)?;
    }
    // Undo the column permutation.
    let mut out = x.clone();
    for (k, &orig) in perm.iter().enumerate() {
        out[orig] = x[k].clone();
    }
    Ok(out)
}
