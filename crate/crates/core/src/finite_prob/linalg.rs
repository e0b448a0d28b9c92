//! Small dense linear algebra over [`Scalar`]: row reduction and
//! minimum-norm solutions of consistent systems.

use super::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormSolution<S> {
    pub x: Vec<S>,
    /// Basis of the null space of the coefficient matrix.
    pub null_basis: Vec<Vec<S>>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("linear system is inconsistent (residual {residual:e} after elimination)")]
    Inconsistent { residual: f64 },
    #[error("matrix has {rows} rows but right-hand side has {rhs} entries")]
    ShapeMismatch { rows: usize, rhs: usize },
}

struct Reduced<S> {
    rows: Vec<Vec<S>>,
    pivots: Vec<usize>,
}

/// Reduced row echelon form of `[a | b]`. Rows past `pivots.len()` are zero
/// on the coefficient side.
fn rref<S: Scalar>(a: &[Vec<S>], b: &[S], n_cols: usize) -> Reduced<S> {
    let mut rows: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.resize(n_cols, S::zero());
            r.push(rhs.clone());
            r
        })
        .collect();
    let m = rows.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n_cols {
        if r == m {
            break;
        }
        let best = (r..m)
            .filter(|&i| !rows[i][col].is_negligible())
            .max_by(|&i, &j| {
                rows[i][col]
                    .abs()
                    .partial_cmp(&rows[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(p) = best else { continue };
        rows.swap(r, p);
        let inv = S::one() / rows[r][col].clone();
        for v in rows[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for i in 0..m {
            if i == r || rows[i][col].is_zero() {
                continue;
            }
            let factor = rows[i][col].clone();
            for j in col..=n_cols {
                let delta = factor.clone() * rows[r][j].clone();
                rows[i][j] = rows[i][j].clone() - delta;
            }
        }
        pivots.push(col);
        r += 1;
    }
    Reduced { rows, pivots }
}

/// Solves a square nonsingular system by Gauss-Jordan elimination.
fn solve_square<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Vec<S> {
    let n = a.len();
    let red = rref(a, b, n);
    debug_assert_eq!(red.pivots.len(), n, "square system expected to be nonsingular");
    let mut x = vec![S::zero(); n];
    for (i, &col) in red.pivots.iter().enumerate() {
        x[col] = red.rows[i][n].clone();
    }
    x
}

/// Minimum Euclidean norm solution of `a x = b`, or an error when the
/// system has no solution. `a` is `m x n_cols`.
pub fn min_norm_solve<S: Scalar>(
    a: &[Vec<S>],
    b: &[S],
    n_cols: usize,
) -> Result<MinNormSolution<S>, LinalgError> {
    if a.len() != b.len() {
        return Err(LinalgError::ShapeMismatch { rows: a.len(), rhs: b.len() });
    }
    let red = rref(a, b, n_cols);
    let rank = red.pivots.len();
    if let Some(bad) = red.rows[rank..]
        .iter()
        .map(|row| &row[n_cols])
        .find(|v| !v.is_negligible())
    {
        return Err(LinalgError::Inconsistent { residual: bad.to_f64().abs() });
    }

    // The reduced rows span the row space; the minimum-norm solution lives
    // there, x = R^T y with (R R^T) y = c.
    let basis: Vec<&[S]> = red.rows[..rank].iter().map(|r| &r[..n_cols]).collect();
    let rhs: Vec<S> = red.rows[..rank].iter().map(|r| r[n_cols].clone()).collect();
    let gram: Vec<Vec<S>> = basis
        .iter()
        .map(|ri| basis.iter().map(|rj| dot(ri, rj)).collect())
        .collect();
    let y = if rank == 0 { Vec::new() } else { solve_square(&gram, &rhs) };
    let mut x = vec![S::zero(); n_cols];
    for (row, yi) in basis.iter().zip(&y) {
        for (xj, rij) in x.iter_mut().zip(row.iter()) {
            *xj = xj.clone() + rij.clone() * yi.clone();
        }
    }

    let mut null_basis = Vec::new();
    for free in (0..n_cols).filter(|c| !red.pivots.contains(c)) {
        let mut v = vec![S::zero(); n_cols];
        v[free] = S::one();
        for (i, &pc) in red.pivots.iter().enumerate() {
            v[pc] = -red.rows[i][free].clone();
        }
        null_basis.push(v);
    }
    Ok(MinNormSolution { x, null_basis, rank })
}

/// `a x`.
pub fn mat_vec<S: Scalar>(a: &[Vec<S>], x: &[S]) -> Vec<S> {
    a.iter().map(|row| dot(row, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_prob::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn unique_solution_is_recovered() {
        let a = vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]];
        let b = vec![q(3, 1), q(5, 1)];
        let sol = min_norm_solve(&a, &b, 2).unwrap();
        assert_eq!(sol.x, vec![q(4, 5), q(7, 5)]);
        assert!(sol.null_basis.is_empty());
    }

    #[test]
    fn underdetermined_system_returns_minimum_norm() {
        // x + y = 2 -> minimum-norm point (1, 1), null direction (-1, 1).
        let a = vec![vec![q(1, 1), q(1, 1)]];
        let sol = min_norm_solve(&a, &[q(2, 1)], 2).unwrap();
        assert_eq!(sol.x, vec![q(1, 1), q(1, 1)]);
        assert_eq!(sol.null_basis, vec![vec![q(-1, 1), q(1, 1)]]);
        assert_eq!(sol.rank, 1);
    }

    #[test]
    fn inconsistent_system_is_rejected() {
        let a = vec![vec![q(1, 1), q(1, 1)], vec![q(2, 1), q(2, 1)]];
        let err = min_norm_solve(&a, &[q(1, 1), q(3, 1)], 2).unwrap_err();
        assert!(matches!(err, LinalgError::Inconsistent { .. }));
    }

    #[test]
    fn zero_matrix_with_zero_rhs_gives_zero() {
        let a = vec![vec![0.0, 0.0]];
        let sol = min_norm_solve(&a, &[0.0], 2).unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0]);
        assert_eq!(sol.null_basis.len(), 2);
    }
}
