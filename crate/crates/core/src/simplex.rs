//! Dense two-phase simplex for the small equality-constrained programs of
//! the dispersion computation: minimise c'x subject to A x = b, x >= 0.
//!
//! Problems here have at most a few dozen variables and ~d^2 rows, so a
//! plain dense tableau with Bland's rule (deterministic, cycle-free) is the
//! right tool.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("infeasible: phase-1 residual {residual:e}")]
    Infeasible { residual: f64 },

    #[error("objective unbounded below")]
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub objective: f64,
    pub solution: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-11;

struct Tableau {
    /// rows x (cols + 1); last column is the RHS.
    rows: Vec<Vec<f64>>,
    /// objective row (reduced costs, last entry = -objective value).
    obj: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x /= piv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (x, p) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule: entering = lowest-index improving column; leaving =
    /// lowest-index basic variable among the minimum-ratio rows.
    fn run(&mut self, allowed_cols: usize) -> Result<(), LpError> {
        loop {
            let mut entering = None;
            for c in 0..allowed_cols {
                if self.obj[c] < -PIVOT_TOL {
                    entering = Some(c);
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rows[r][self.ncols] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_TOL
                                || (ratio < lratio + PIVOT_TOL
                                    && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c);
        }
    }
}

/// Minimise c'x subject to A x = b, x >= 0.
pub fn solve_min(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    feas_tol: f64,
) -> Result<LpResult, LpError> {
    let m = a.len();
    let n = c.len();
    let total = n + m; // structural + artificial
    let mut rows = Vec::with_capacity(m);
    for (i, arow) in a.iter().enumerate() {
        debug_assert_eq!(arow.len(), n);
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; total + 1];
        for (j, &v) in arow.iter().enumerate() {
            row[j] = flip * v;
        }
        row[n + i] = 1.0;
        row[total] = flip * b[i];
        rows.push(row);
    }
    let basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimise the sum of artificials.
    let mut obj = vec![0.0; total + 1];
    for row in &rows {
        for (o, &v) in obj.iter_mut().zip(row.iter()) {
            *o -= v;
        }
    }
    for j in n..total {
        obj[j] = 0.0;
    }
    let mut t = Tableau {
        rows,
        obj,
        basis,
        ncols: total,
    };
    t.run(n)?;
    let residual = -t.obj[total];
    if residual > feas_tol {
        return Err(LpError::Infeasible { residual });
    }

    // Remove artificials from the basis (pivot out or drop redundant rows).
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            let mut pivoted = false;
            for cidx in 0..n {
                if t.rows[r][cidx].abs() > 1e-9 {
                    t.pivot(r, cidx);
                    pivoted = true;
                    break;
                }
            }
            if !pivoted {
                t.rows.remove(r);
                t.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }

    // Phase 2: real objective expressed in the current basis.
    let mut obj = vec![0.0; total + 1];
    obj[..n].copy_from_slice(c);
    for (r, &bv) in t.basis.iter().enumerate() {
        let f = obj[bv];
        if f != 0.0 {
            let row = t.rows[r].clone();
            for (o, &v) in obj.iter_mut().zip(row.iter()) {
                *o -= f * v;
            }
        }
    }
    t.obj = obj;
    t.run(n)?;

    let mut solution = vec![0.0; n];
    for (r, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            solution[bv] = t.rows[r][total];
        }
    }
    let objective = c.iter().zip(&solution).map(|(ci, xi)| ci * xi).sum();
    Ok(LpResult {
        objective,
        solution,
    })
}

/// Maximise c'x subject to A x = b, x >= 0.
pub fn solve_max(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    feas_tol: f64,
) -> Result<LpResult, LpError> {
    let neg: Vec<f64> = c.iter().map(|x| -x).collect();
    let mut res = solve_min(&neg, a, b, feas_tol)?;
    res.objective = -res.objective;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;
    use rand::Rng;

    #[test]
    fn simple_transport() {
        // min x0 + 2 x1 s.t. x0 + x1 = 1
        let res = solve_min(&[1.0, 2.0], &[vec![1.0, 1.0]], &[1.0], 1e-9).unwrap();
        assert!((res.objective - 1.0).abs() < 1e-12);
        assert!((res.solution[0] - 1.0).abs() < 1e-12);
        let mx = solve_max(&[1.0, 2.0], &[vec![1.0, 1.0]], &[1.0], 1e-9).unwrap();
        assert!((mx.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        // x0 + x1 = 1 and x0 + x1 = 2 cannot both hold
        let res = solve_min(
            &[1.0, 1.0],
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            &[1.0, 2.0],
            1e-9,
        );
        assert!(matches!(res, Err(LpError::Infeasible { .. })));
    }

    #[test]
    fn tolerates_redundant_rows() {
        // duplicated constraint row
        let res = solve_min(
            &[3.0, 1.0, 2.0],
            &[vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]],
            &[1.0, 2.0],
            1e-9,
        )
        .unwrap();
        assert!((res.objective - 1.0).abs() < 1e-12);
    }

    /// Oracle: enumerate all basis subsets and keep the best feasible vertex.
    fn brute_force_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
        let m = a.len();
        let n = c.len();
        let mut best: Option<f64> = None;
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            // solve the m x m system on columns idx
            let mut mat = vec![vec![0.0; m]; m];
            for (r, arow) in a.iter().enumerate() {
                for (k, &j) in idx.iter().enumerate() {
                    mat[r][k] = arow[j];
                }
            }
            let mut rhs = b.to_vec();
            if let Some(x) = gauss_solve(&mut mat, &mut rhs) {
                if x.iter().all(|&v| v >= -1e-9) {
                    let obj: f64 = idx.iter().zip(&x).map(|(&j, &v)| c[j] * v).sum();
                    best = Some(match best {
                        None => obj,
                        Some(cur) => cur.min(obj),
                    });
                }
            }
            // next combination
            let mut i = m;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if idx[i] + (m - i) < n {
                    idx[i] += 1;
                    for k in i + 1..m {
                        idx[k] = idx[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn gauss_solve(mat: &mut [Vec<f64>], rhs: &mut [f64]) -> Option<Vec<f64>> {
        let m = mat.len();
        for col in 0..m {
            let piv = (col..m).max_by(|&i, &j| {
                mat[i][col].abs().partial_cmp(&mat[j][col].abs()).unwrap()
            })?;
            if mat[piv][col].abs() < 1e-11 {
                return None;
            }
            mat.swap(col, piv);
            rhs.swap(col, piv);
            for r in 0..m {
                if r != col {
                    let f = mat[r][col] / mat[col][col];
                    for k in col..m {
                        mat[r][k] -= f * mat[col][k];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
        Some((0..m).map(|i| rhs[i] / mat[i][i]).collect())
    }

    #[test]
    fn matches_vertex_enumeration_on_random_instances() {
        let mut r = rng(400);
        let mut solved = 0;
        for _ in 0..100 {
            let m = r.gen_range(1..=3usize);
            let n = r.gen_range(m + 1..=6usize);
            let c: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
            let a: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect())
                .collect();
            // build b from a random nonnegative point so the LP is feasible
            let x0: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
            let b: Vec<f64> = a
                .iter()
                .map(|row| row.iter().zip(&x0).map(|(aij, xj)| aij * xj).sum())
                .collect();
            let got = match solve_min(&c, &a, &b, 1e-9) {
                Ok(res) => res,
                Err(LpError::Unbounded) => continue,
                Err(e) => panic!("unexpected: {e}"),
            };
            let oracle = brute_force_min(&c, &a, &b).expect("feasible by construction");
            assert!(
                (got.objective - oracle).abs() < 1e-7,
                "simplex {} vs vertex enumeration {}",
                got.objective,
                oracle
            );
            // verify feasibility of the returned point
            for (row, &bi) in a.iter().zip(&b) {
                let ax: f64 = row.iter().zip(&got.solution).map(|(v, x)| v * x).sum();
                assert!((ax - bi).abs() < 1e-8);
            }
            assert!(got.solution.iter().all(|&x| x >= -1e-9));
            solved += 1;
        }
        assert!(solved > 50, "too few solvable instances: {solved}");
    }
}
