//! Dense primal simplex with Bland's rule for `max c·x, Ax <= b, x >= 0`
//! with `b >= 0` (the origin is feasible, so no phase one is needed).
//!
//! Generic over [`LpField`], so the same code runs in floating point and in
//! exact rational arithmetic.

use crate::error::{Error, Result};
use crate::scalar::LpField;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub objective: S,
    pub pivots: usize,
}

/// Solves `max c·x` subject to `A x <= b`, `x >= 0`.
///
/// `a` is row-major with one row per constraint. Every `b_i` must be
/// nonnegative.
pub fn maximize<S: LpField>(a: &[Vec<S>], b: &[S], c: &[S]) -> Result<LpSolution<S>> {
    let rows = a.len();
    let vars = c.len();
    if b.len() != rows || a.iter().any(|row| row.len() != vars) {
        return Err(Error::Shape(format!(
            "constraint matrix is not {rows}x{vars} or rhs length differs"
        )));
    }
    if b.iter().any(|bi| *bi < S::zero()) {
        return Err(Error::Precondition("right-hand side must be nonnegative".into()));
    }

    // columns: structural vars, slacks, rhs
    let width = vars + rows + 1;
    let rhs = width - 1;
    let mut tab: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(i, (row, bi))| {
            let mut t = Vec::with_capacity(width);
            t.extend(row.iter().cloned());
            t.extend((0..rows).map(|j| if i == j { S::one() } else { S::zero() }));
            t.push(bi.clone());
            t
        })
        .collect();
    // reduced costs of the maximisation written as z - c
    let mut obj: Vec<S> = c.iter().map(|ci| -ci.clone()).collect();
    obj.extend((0..=rows).map(|_| S::zero()));
    let mut basis: Vec<usize> = (vars..vars + rows).collect();

    let mut pivots = 0;
    // Bland: lowest-index improving column
    while let Some(enter) = (0..rhs).find(|&j| obj[j].is_negative_tol()) {
        // ratio test, ties broken by lowest basic variable index
        let mut leave: Option<(usize, S)> = None;
        for (i, row) in tab.iter().enumerate() {
            if !row[enter].is_positive_tol() {
                continue;
            }
            let ratio = row[rhs].clone() / row[enter].clone();
            leave = match leave {
                None => Some((i, ratio)),
                Some((li, lr)) => {
                    if ratio < lr || (ratio == lr && basis[i] < basis[li]) {
                        Some((i, ratio))
                    } else {
                        Some((li, lr))
                    }
                }
            };
        }
        let Some((pr, _)) = leave else {
            return Err(Error::Domain("linear program is unbounded".into()));
        };

        let pivot = tab[pr][enter].clone();
        for v in tab[pr].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        let pivot_row = tab[pr].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let factor = row[enter].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - factor.clone() * p.clone();
            }
        }
        let factor = obj[enter].clone();
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            *v = v.clone() - factor.clone() * p.clone();
        }
        basis[pr] = enter;
        pivots += 1;
    }

    let mut x = vec![S::zero(); vars];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < vars {
            let v = tab[i][rhs].clone();
            x[bv] = if v < S::zero() { S::zero() } else { v };
        }
    }
    let objective = x.iter().zip(c).fold(S::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    Ok(LpSolution { x, objective, pivots })
}
