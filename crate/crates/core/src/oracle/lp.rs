//! Small dense linear programs.
//!
//! Problems are stated as
//!
//! ```text
//! minimise  c·x
//! subject to A_eq x  = b_eq
//!            A_ge x >= b_ge
//!            x >= 0
//! ```
//!
//! [`simplex_solve`] is a two-phase tableau simplex with Bland's rule.
//! [`revised_simplex_solve`] is an unrelated implementation (revised simplex on
//! an explicitly factorised basis) kept for cross-checking.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_ITERATIONS: usize = 50_000;
/// Consecutive degenerate pivots before the entering rule falls back to Bland's.
const BLAND_AFTER: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded (column {0})")]
    Unbounded(usize),
    #[error("simplex stopped after {0} iterations")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

fn check_shape(c: &[f64], a: &[Vec<f64>], b: &[f64], what: &str) -> Result<(), LpError> {
    if a.len() != b.len() {
        return Err(LpError::Malformed(format!(
            "{what}: {} rows but {} right-hand sides",
            a.len(),
            b.len()
        )));
    }
    if let Some(row) = a.iter().find(|r| r.len() != c.len()) {
        return Err(LpError::Malformed(format!(
            "{what}: row has {} entries, expected {}",
            row.len(),
            c.len()
        )));
    }
    Ok(())
}

struct Tableau {
    /// rows x (cols + 1); the last column holds the right-hand side.
    t: Vec<Vec<f64>>,
    /// Reduced-cost row, same width.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    iterations: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let piv = self.t[r][c];
        for j in 0..w {
            self.t[r][j] /= piv;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * prow[j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Dantzig's rule on the current objective row over the allowed columns,
    /// switching to Bland's rule after a run of degenerate pivots so that the
    /// method cannot cycle.
    fn optimise(&mut self, allowed: usize) -> Result<(), LpError> {
        let mut degenerate_run = 0;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(LpError::IterationLimit(self.iterations));
            }
            let entering = if degenerate_run >= BLAND_AFTER {
                (0..allowed).find(|&j| self.obj[j] < -PIVOT_EPS)
            } else {
                (0..allowed)
                    .filter(|&j| self.obj[j] < -PIVOT_EPS)
                    .min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let rhs = self.cols;
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[rhs] / row[c];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, ratio)) => {
                    degenerate_run = if ratio <= 1e-14 { degenerate_run + 1 } else { 0 };
                    self.pivot(r, c)
                }
                None => return Err(LpError::Unbounded(c)),
            }
        }
    }
}

pub fn simplex_solve(
    c: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    a_ge: &[Vec<f64>],
    b_ge: &[f64],
) -> Result<LpSolution, LpError> {
    check_shape(c, a_eq, b_eq, "equalities")?;
    check_shape(c, a_ge, b_ge, "inequalities")?;
    let n = c.len();
    let n_ge = a_ge.len();
    let m = a_eq.len() + n_ge;
    // Columns: originals | surplus (one per >= row) | artificials (one per row).
    let n_struct = n + n_ge;
    let cols = n_struct + m;
    let rhs = cols;

    let mut t = vec![vec![0.0; cols + 1]; m];
    for (i, (row, &b)) in a_eq.iter().zip(b_eq).enumerate() {
        t[i][..n].copy_from_slice(row);
        t[i][rhs] = b;
    }
    for (k, (row, &b)) in a_ge.iter().zip(b_ge).enumerate() {
        let i = a_eq.len() + k;
        t[i][..n].copy_from_slice(row);
        t[i][n + k] = -1.0;
        t[i][rhs] = b;
    }
    for (i, row) in t.iter_mut().enumerate() {
        if row[rhs] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[n_struct + i] = 1.0;
    }

    // Phase one: minimise the sum of artificials.
    let mut obj = vec![0.0; cols + 1];
    for row in &t {
        for j in 0..n_struct {
            obj[j] -= row[j];
        }
        obj[rhs] -= row[rhs];
    }
    let mut tab = Tableau {
        t,
        obj,
        basis: (n_struct..cols).collect(),
        cols,
        iterations: 0,
    };
    tab.optimise(n_struct)?;
    let infeas = -tab.obj[rhs];
    let scale = 1.0 + b_eq.iter().chain(b_ge).fold(0.0_f64, |a, b| a.max(b.abs()));
    if infeas > FEAS_EPS * scale {
        return Err(LpError::Infeasible(infeas));
    }

    // Drive remaining artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= n_struct {
            if let Some(j) = (0..n_struct).find(|&j| tab.t[r][j].abs() > 1e-9) {
                tab.pivot(r, j);
            }
        }
    }

    // Phase two on the original objective.
    let mut obj = vec![0.0; cols + 1];
    obj[..n].copy_from_slice(c);
    for (r, &bj) in tab.basis.iter().enumerate() {
        let f = obj[bj];
        if f != 0.0 {
            for j in 0..=cols {
                obj[j] -= f * tab.t[r][j];
            }
        }
    }
    tab.obj = obj;
    tab.optimise(n_struct)?;

    let mut x = vec![0.0; n];
    for (r, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.t[r][rhs].max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        x,
        objective,
        iterations: tab.iterations,
    })
}

/// Largest constraint violation of `x` (equalities, inequalities and sign).
pub fn max_residual(x: &[f64], a_eq: &[Vec<f64>], b_eq: &[f64], a_ge: &[Vec<f64>], b_ge: &[f64]) -> f64 {
    let dot = |row: &Vec<f64>| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let eq = a_eq
        .iter()
        .zip(b_eq)
        .map(|(r, &b)| (dot(r) - b).abs())
        .fold(0.0, f64::max);
    let ge = a_ge
        .iter()
        .zip(b_ge)
        .map(|(r, &b)| (b - dot(r)).max(0.0))
        .fold(0.0, f64::max);
    let sign = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
    eq.max(ge).max(sign)
}

/// Dense LU with partial pivoting, used by the revised simplex.
struct Lu {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<Vec<f64>>) -> Option<Self> {
        let n = a.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
            if a[p][k].abs() < 1e-13 {
                return None;
            }
            a.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for j in k + 1..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        Some(Self { lu: a, perm })
    }

    /// Solves `B x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.lu[i][j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.lu[i][j] * y[j];
            }
            y[i] /= self.lu[i][i];
        }
        y
    }

    /// Solves `B^T x = b`.
    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        // B = P^T L U, so B^T = U^T L^T P.
        let mut z = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                z[i] -= self.lu[j][i] * z[j];
            }
            z[i] /= self.lu[i][i];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                z[i] -= self.lu[j][i] * z[j];
            }
        }
        let mut x = vec![0.0; n];
        for (k, &pi) in self.perm.iter().enumerate() {
            x[pi] = z[k];
        }
        x
    }
}

/// Revised simplex with a freshly factorised basis at every iteration.
///
/// Slower than [`simplex_solve`]; meant for cross-checks on small problems.
pub fn revised_simplex_solve(
    c: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    a_ge: &[Vec<f64>],
    b_ge: &[f64],
) -> Result<LpSolution, LpError> {
    check_shape(c, a_eq, b_eq, "equalities")?;
    check_shape(c, a_ge, b_ge, "inequalities")?;
    let n = c.len();
    let n_ge = a_ge.len();
    let m = a_eq.len() + n_ge;
    let n_struct = n + n_ge;
    let total = n_struct + m;

    // Column-major constraint matrix with surplus and artificial columns.
    let mut cols = vec![vec![0.0; m]; total];
    let mut b = vec![0.0; m];
    for (i, (row, &bi)) in a_eq.iter().chain(a_ge).zip(b_eq.iter().chain(b_ge)).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            cols[j][i] = sign * row[j];
        }
        if i >= a_eq.len() {
            cols[n + i - a_eq.len()][i] = -sign;
        }
        cols[n_struct + i][i] = 1.0;
        b[i] = sign * bi;
    }

    let mut basis: Vec<usize> = (n_struct..total).collect();
    let mut iterations = 0;

    let run = |costs: &[f64], basis: &mut Vec<usize>, allowed: usize, iterations: &mut usize| -> Result<Vec<f64>, LpError> {
        loop {
            if *iterations >= MAX_ITERATIONS {
                return Err(LpError::IterationLimit(*iterations));
            }
            let bmat: Vec<Vec<f64>> = (0..m)
                .map(|i| basis.iter().map(|&j| cols[j][i]).collect())
                .collect();
            let lu = Lu::factor(bmat).ok_or_else(|| LpError::Malformed("singular basis".into()))?;
            let xb = lu.solve(&b);
            let cb: Vec<f64> = basis.iter().map(|&j| costs[j]).collect();
            let y = lu.solve_transpose(&cb);
            let entering = (0..allowed).filter(|j| !basis.contains(j)).find(|&j| {
                let rc = costs[j] - cols[j].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
                rc < -1e-10
            });
            let Some(e) = entering else {
                return Ok(xb);
            };
            let d = lu.solve(&cols[e]);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if d[i] > 1e-11 {
                    let ratio = xb[i] / d[i];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && basis[i] < basis[li]) => Some((i, ratio)),
                        keep => keep,
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded(e));
            };
            basis[r] = e;
            *iterations += 1;
        }
    };

    let mut phase1 = vec![0.0; total];
    for v in phase1.iter_mut().skip(n_struct) {
        *v = 1.0;
    }
    let xb = run(&phase1, &mut basis, n_struct, &mut iterations)?;
    let infeas: f64 = basis
        .iter()
        .zip(&xb)
        .filter(|(j, _)| **j >= n_struct)
        .map(|(_, v)| *v)
        .sum();
    let scale = 1.0 + b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if infeas > FEAS_EPS * scale {
        return Err(LpError::Infeasible(infeas));
    }

    let mut phase2 = vec![0.0; total];
    phase2[..n].copy_from_slice(c);
    // Zero-level artificials may stay basic; they cannot re-enter.
    let xb = run(&phase2, &mut basis, n_struct, &mut iterations)?;
    let mut x = vec![0.0; n];
    for (&j, &v) in basis.iter().zip(&xb) {
        if j < n {
            x[j] = v.max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, objective, iterations })
}
