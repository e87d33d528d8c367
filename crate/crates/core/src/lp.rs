//! A dense simplex solver for small packing-form linear programs
//! `max cᵀy  s.t.  A y <= b, y >= 0` with `b >= 0`, returning both the
//! primal optimum and the dual certificate `min bᵀu  s.t.  Aᵀu >= c, u >= 0`.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
}

/// Solves the packing LP with Bland's rule (no cycling). `a` is row-major
/// with one row per constraint.
pub fn solve_packing_lp(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let k = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != k) {
        return Err(Error::param("lp", "dimension mismatch"));
    }
    if b.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::param("lp", "right-hand side must be finite and non-negative"));
    }
    // columns: k structural, m slack, then the right-hand side
    let width = k + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..k].copy_from_slice(&a[i]);
        t[i][k + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..k {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (k..k + m).collect();
    let max_iter = 50 * (k + m + 1).pow(2);
    for _ in 0..max_iter {
        let Some(enter) = (0..k + m).find(|&j| t[m][j] < -PIVOT_EPS) else {
            let mut primal = vec![0.0; k];
            for (i, &v) in basis.iter().enumerate() {
                if v < k {
                    primal[v] = t[i][width - 1];
                }
            }
            let dual = (0..m).map(|i| t[m][k + i]).collect();
            return Ok(LpSolution {
                primal,
                dual,
                objective: t[m][width - 1],
            });
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][enter] > PIVOT_EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - PIVOT_EPS
                            || (ratio <= best + PIVOT_EPS && basis[i] < basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::Infeasible("linear program is unbounded".into()));
        };
        let p = t[row][enter];
        for v in t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = t[row].clone();
        for (i, r) in t.iter_mut().enumerate() {
            if i != row && r[enter] != 0.0 {
                let f = r[enter];
                for (x, y) in r.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
        basis[row] = enter;
    }
    Err(Error::Verification("simplex iteration limit reached".into()))
}

/// Checks primal and dual feasibility and equal objectives within `tol`.
pub fn certify(a: &[Vec<f64>], b: &[f64], c: &[f64], sol: &LpSolution, tol: f64) -> bool {
    let primal_ok = sol.primal.iter().all(|&y| y >= -tol)
        && a.iter().zip(b).all(|(row, &bi)| {
            row.iter().zip(&sol.primal).map(|(x, y)| x * y).sum::<f64>() <= bi + tol
        });
    let dual_ok = sol.dual.iter().all(|&u| u >= -tol)
        && (0..c.len()).all(|j| {
            a.iter().zip(&sol.dual).map(|(row, u)| row[j] * u).sum::<f64>() >= c[j] - tol
        });
    let p: f64 = c.iter().zip(&sol.primal).map(|(x, y)| x * y).sum();
    let d: f64 = b.iter().zip(&sol.dual).map(|(x, y)| x * y).sum();
    primal_ok && dual_ok && (p - d).abs() <= tol && (p - sol.objective).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let b = [4.0, 12.0, 18.0];
        let c = [3.0, 5.0];
        let s = solve_packing_lp(&a, &b, &c).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.primal[0] - 2.0).abs() < 1e-12 && (s.primal[1] - 6.0).abs() < 1e-12);
        assert!((s.dual[1] - 1.5).abs() < 1e-12 && (s.dual[2] - 1.0).abs() < 1e-12);
        assert!(certify(&a, &b, &c, &s, 1e-12));
    }

    #[test]
    fn unbounded_and_degenerate() {
        let a = vec![vec![1.0, -1.0]];
        assert!(solve_packing_lp(&a, &[1.0], &[0.0, 1.0]).is_err());
        // degenerate vertex at the origin
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0]];
        let s = solve_packing_lp(&a, &[2.0, 0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(certify(&a, &[2.0, 0.0, 0.0], &[1.0, 1.0], &s, 1e-12));
    }
}
