//! Dense two-phase tableau simplex for the small minimax LPs of the sign
//! solvers. All structural variables are nonnegative; upper bounds arrive as
//! explicit rows. Dantzig pricing with a Bland fallback against cycling.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub num_vars: usize,
    /// minimized
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

const TOL: f64 = 1e-9;

pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    let n = problem.num_vars;
    let m = problem.rows.len();
    debug_assert!(problem.objective.len() == n);

    // normalize to b >= 0; Le with negated row becomes Ge (surplus + artificial)
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Le,
        Ge,
        Eq,
    }
    let mut kinds = Vec::with_capacity(m);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    for row in &problem.rows {
        debug_assert_eq!(row.coeffs.len(), n);
        let mut coeffs = row.coeffs.clone();
        let mut b = row.rhs;
        let mut kind = match row.rel {
            Rel::Le => Kind::Le,
            Rel::Eq => Kind::Eq,
        };
        if b < 0.0 {
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
            b = -b;
            kind = match kind {
                Kind::Le => Kind::Ge,
                Kind::Ge => Kind::Le,
                Kind::Eq => Kind::Eq,
            };
        }
        kinds.push(kind);
        rows.push(coeffs);
        rhs.push(b);
    }

    let num_slack = kinds.iter().filter(|k| **k != Kind::Eq).count();
    let num_art = kinds.iter().filter(|k| **k != Kind::Le).count();
    let total = n + num_slack + num_art;
    let rhs_col = total;

    let mut tab = vec![vec![0.0f64; total + 1]; m];
    let mut basis = vec![usize::MAX; m];
    let mut art_cols = Vec::with_capacity(num_art);
    let mut slack_idx = n;
    let mut art_idx = n + num_slack;
    for i in 0..m {
        tab[i][..n].copy_from_slice(&rows[i]);
        tab[i][rhs_col] = rhs[i];
        match kinds[i] {
            Kind::Le => {
                tab[i][slack_idx] = 1.0;
                basis[i] = slack_idx;
                slack_idx += 1;
            }
            Kind::Ge => {
                tab[i][slack_idx] = -1.0;
                slack_idx += 1;
                tab[i][art_idx] = 1.0;
                basis[i] = art_idx;
                art_cols.push(art_idx);
                art_idx += 1;
            }
            Kind::Eq => {
                tab[i][art_idx] = 1.0;
                basis[i] = art_idx;
                art_cols.push(art_idx);
                art_idx += 1;
            }
        }
    }

    // phase 1: minimize the artificial sum
    if num_art > 0 {
        let mut cost = vec![0.0f64; total + 1];
        for &c in &art_cols {
            cost[c] = 1.0;
        }
        // price out the initial artificial basis
        for i in 0..m {
            if art_cols.contains(&basis[i]) {
                for c in 0..=total {
                    cost[c] -= tab[i][c];
                }
            }
        }
        run_simplex(&mut tab, &mut cost, &mut basis, total, None)?;
        if -cost[rhs_col] > 1e-7 {
            return Err(Error::LpInfeasible);
        }
        // drive any artificial still basic (at zero) out of the basis
        for i in 0..m {
            if art_cols.contains(&basis[i]) {
                if let Some(col) = (0..n + num_slack).find(|&c| tab[i][c].abs() > TOL) {
                    pivot(&mut tab, &mut cost, &mut basis, i, col);
                }
            }
        }
    }

    // phase 2
    let mut cost = vec![0.0f64; total + 1];
    cost[..n].copy_from_slice(&problem.objective);
    for i in 0..m {
        if basis[i] < n && cost[basis[i]].abs() > 0.0 {
            let f = cost[basis[i]];
            for c in 0..=total {
                cost[c] -= f * tab[i][c];
            }
        }
    }
    let forbidden = art_cols;
    run_simplex(&mut tab, &mut cost, &mut basis, total, Some(&forbidden))?;

    let mut x = vec![0.0f64; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = tab[i][rhs_col];
        }
    }
    let value = problem
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();
    Ok(LpSolution { x, value })
}

fn run_simplex(
    tab: &mut [Vec<f64>],
    cost: &mut [f64],
    basis: &mut [usize],
    total: usize,
    forbidden: Option<&[usize]>,
) -> Result<()> {
    let m = tab.len();
    let rhs_col = total;
    let max_iters = 50_000usize;
    for iter in 0..max_iters {
        let bland = iter > max_iters / 2;
        let mut entering = None;
        if bland {
            for c in 0..total {
                if forbidden.is_some_and(|f| f.contains(&c)) {
                    continue;
                }
                if cost[c] < -TOL {
                    entering = Some(c);
                    break;
                }
            }
        } else {
            let mut best = -TOL;
            for c in 0..total {
                if forbidden.is_some_and(|f| f.contains(&c)) {
                    continue;
                }
                if cost[c] < best {
                    best = cost[c];
                    entering = Some(c);
                }
            }
        }
        let Some(col) = entering else {
            return Ok(());
        };
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let a = tab[i][col];
            if a > TOL {
                let ratio = tab[i][rhs_col] / a;
                if ratio < best_ratio - TOL
                    || (bland && (ratio - best_ratio).abs() <= TOL && leave.is_some_and(|l: usize| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(Error::LpInfeasible); // unbounded: cannot happen for our bounded LPs
        };
        pivot(tab, cost, basis, row, col);
    }
    Err(Error::BudgetExceeded("simplex iteration cap".into()))
}

fn pivot(tab: &mut [Vec<f64>], cost: &mut [f64], basis: &mut [usize], row: usize, col: usize) {
    let m = tab.len();
    let width = tab[0].len();
    let piv = tab[row][col];
    for c in 0..width {
        tab[row][c] /= piv;
    }
    for r in 0..m {
        if r != row && tab[r][col].abs() > 0.0 {
            let f = tab[r][col];
            for c in 0..width {
                tab[r][c] -= f * tab[row][c];
            }
        }
    }
    if cost[col].abs() > 0.0 {
        let f = cost[col];
        for c in 0..width {
            cost[c] -= f * tab[row][c];
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_two_var() {
        // min -x - y  s.t. x + y <= 1, x,y >= 0  -> value -1
        let p = LpProblem {
            num_vars: 2,
            objective: vec![-1.0, -1.0],
            rows: vec![LpRow {
                coeffs: vec![1.0, 1.0],
                rel: Rel::Le,
                rhs: 1.0,
            }],
        };
        let sol = solve(&p).unwrap();
        assert!((sol.value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_bounds() {
        // min x1 + 2 x2  s.t. x1 + x2 = 3, x1 <= 2, x2 <= 2 -> x = (2,1), value 4
        let p = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 2.0],
            rows: vec![
                LpRow {
                    coeffs: vec![1.0, 1.0],
                    rel: Rel::Eq,
                    rhs: 3.0,
                },
                LpRow {
                    coeffs: vec![1.0, 0.0],
                    rel: Rel::Le,
                    rhs: 2.0,
                },
                LpRow {
                    coeffs: vec![0.0, 1.0],
                    rel: Rel::Le,
                    rhs: 2.0,
                },
            ],
        };
        let sol = solve(&p).unwrap();
        assert!((sol.value - 4.0).abs() < 1e-9, "{}", sol.value);
        assert!((sol.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // x <= 1 and x = 3
        let p = LpProblem {
            num_vars: 1,
            objective: vec![0.0],
            rows: vec![
                LpRow {
                    coeffs: vec![1.0],
                    rel: Rel::Le,
                    rhs: 1.0,
                },
                LpRow {
                    coeffs: vec![1.0],
                    rel: Rel::Eq,
                    rhs: 3.0,
                },
            ],
        };
        assert!(matches!(solve(&p), Err(Error::LpInfeasible)));
    }

    #[test]
    fn negative_rhs_rows() {
        // min x  s.t. -x <= -2  (i.e. x >= 2) -> 2
        let p = LpProblem {
            num_vars: 1,
            objective: vec![1.0],
            rows: vec![LpRow {
                coeffs: vec![-1.0],
                rel: Rel::Le,
                rhs: -2.0,
            }],
        };
        let sol = solve(&p).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-9);
    }
}
