//! Dense two-phase tableau simplex.
//!
//! Entering columns follow Dantzig's rule until a run of degenerate pivots is
//! seen, after which Bland's smallest-index rule takes over for the rest of
//! the solve, so the method terminates on degenerate problems. Leaving rows
//! are chosen by the minimum-ratio test with ties going to the smallest basic
//! column index.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub values: Vec<S>,
    pub objective: S,
}

#[derive(Debug, Clone)]
struct Row<S> {
    coeffs: Vec<S>,
    relation: Relation,
    rhs: S,
}

/// A linear program over `num_vars` variables. Variables are nonnegative
/// unless marked free.
#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    sense: Sense,
    objective: Vec<S>,
    free: Vec<bool>,
    rows: Vec<Row<S>>,
}

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        Self {
            sense,
            objective: vec![S::zero(); num_vars],
            free: vec![false; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, coeffs: Vec<S>) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.objective = coeffs;
    }

    pub fn set_objective_coeff(&mut self, var: usize, c: S) {
        self.objective[var] = c;
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpSolution<S>, LpError> {
        let n = self.num_vars();
        // structural columns: one per variable, plus a negative part for free ones
        let mut pos_col = Vec::with_capacity(n);
        let mut neg_col = vec![None; n];
        let mut ncols = 0;
        for j in 0..n {
            pos_col.push(ncols);
            ncols += 1;
            if self.free[j] {
                neg_col[j] = Some(ncols);
                ncols += 1;
            }
        }
        let n_struct = ncols;

        // normalize rows to nonnegative rhs
        let rows: Vec<Row<S>> = self
            .rows
            .iter()
            .map(|r| {
                if r.rhs < S::zero() {
                    Row {
                        coeffs: r.coeffs.iter().map(|c| -c.clone()).collect(),
                        relation: match r.relation {
                            Relation::Le => Relation::Ge,
                            Relation::Ge => Relation::Le,
                            Relation::Eq => Relation::Eq,
                        },
                        rhs: -r.rhs.clone(),
                    }
                } else {
                    r.clone()
                }
            })
            .collect();
        let m = rows.len();
        let n_slack = rows
            .iter()
            .filter(|r| r.relation != Relation::Eq)
            .count();
        let n_art = rows
            .iter()
            .filter(|r| r.relation != Relation::Le)
            .count();
        let total = n_struct + n_slack + n_art;
        let rhs_col = total;

        let mut t = vec![vec![S::zero(); total + 1]; m + 1];
        let mut basis = vec![0usize; m];
        let mut next_slack = n_struct;
        let mut next_art = n_struct + n_slack;
        for (i, r) in rows.iter().enumerate() {
            for j in 0..n {
                t[i][pos_col[j]] = r.coeffs[j].clone();
                if let Some(nc) = neg_col[j] {
                    t[i][nc] = -r.coeffs[j].clone();
                }
            }
            t[i][rhs_col] = r.rhs.clone();
            match r.relation {
                Relation::Le => {
                    t[i][next_slack] = S::one();
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    t[i][next_slack] = -S::one();
                    next_slack += 1;
                    t[i][next_art] = S::one();
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    t[i][next_art] = S::one();
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        let art_start = n_struct + n_slack;
        let mut tab = Tableau {
            t,
            basis,
            rhs_col,
            excluded: vec![false; total],
        };

        if n_art > 0 {
            let mut cost = vec![S::zero(); total];
            for c in cost.iter_mut().skip(art_start) {
                *c = S::one();
            }
            tab.load_costs(&cost);
            tab.run()?;
            let scale = S::one()
                + rows
                    .iter()
                    .map(|r| r.rhs.clone())
                    .fold(S::zero(), |a, b| if b > a { b } else { a });
            if tab.objective() > S::tolerance() * scale * S::from_f64_lossy(10.0) {
                return Err(LpError::Infeasible);
            }
            tab.drive_out(art_start);
            for e in tab.excluded.iter_mut().skip(art_start) {
                *e = true;
            }
        }

        let mut cost = vec![S::zero(); total];
        for j in 0..n {
            let c = match self.sense {
                Sense::Minimize => self.objective[j].clone(),
                Sense::Maximize => -self.objective[j].clone(),
            };
            if let Some(nc) = neg_col[j] {
                cost[nc] = -c.clone();
            }
            cost[pos_col[j]] = c;
        }
        tab.load_costs(&cost);
        tab.run()?;

        let mut col_val = vec![S::zero(); total];
        for (i, &b) in tab.basis.iter().enumerate() {
            col_val[b] = tab.t[i][rhs_col].clone();
        }
        let values: Vec<S> = (0..n)
            .map(|j| {
                let p = col_val[pos_col[j]].clone();
                match neg_col[j] {
                    Some(nc) => p - col_val[nc].clone(),
                    None => p,
                }
            })
            .collect();
        let objective = values
            .iter()
            .zip(&self.objective)
            .fold(S::zero(), |acc, (x, c)| acc + x.clone() * c.clone());
        Ok(LpSolution { values, objective })
    }
}

struct Tableau<S> {
    /// constraint rows followed by the reduced-cost row
    t: Vec<Vec<S>>,
    basis: Vec<usize>,
    rhs_col: usize,
    excluded: Vec<bool>,
}

impl<S: Scalar> Tableau<S> {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn objective(&self) -> S {
        -self.t[self.m()][self.rhs_col].clone()
    }

    fn load_costs(&mut self, cost: &[S]) {
        let m = self.m();
        let mut d: Vec<S> = cost.to_vec();
        d.push(S::zero());
        for i in 0..m {
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for (k, dk) in d.iter_mut().enumerate() {
                *dk = dk.clone() - cb.clone() * self.t[i][k].clone();
            }
        }
        self.t[m] = d;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for x in self.t[r].iter_mut() {
            *x = x.clone() / p.clone();
        }
        self.t[r][c] = S::one();
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_zero() {
                continue;
            }
            for (x, pr) in row.iter_mut().zip(&pivot_row) {
                if pr.is_zero() {
                    continue;
                }
                let v = x.clone() - f.clone() * pr.clone();
                *x = if !S::is_exact() && v.is_negligible() {
                    S::zero()
                } else {
                    v
                };
            }
            row[c] = S::zero();
        }
        let m = self.basis.len();
        if self.t[r][self.rhs_col] < S::zero() {
            self.t[r][self.rhs_col] = S::zero();
        }
        for i in 0..m {
            if self.t[i][self.rhs_col] < S::zero() && self.t[i][self.rhs_col].is_negligible() {
                self.t[i][self.rhs_col] = S::zero();
            }
        }
        self.basis[r] = c;
    }

    fn run(&mut self) -> Result<(), LpError> {
        let m = self.m();
        let ncols = self.rhs_col;
        let limit = 20_000 + 100 * (m + ncols);
        let mut bland = false;
        let mut degenerate_run = 0usize;
        for _ in 0..limit {
            let d = &self.t[m];
            let mut entering: Option<usize> = None;
            for j in 0..ncols {
                if self.excluded[j] || !d[j].is_negative_tol() {
                    continue;
                }
                match entering {
                    None => {
                        entering = Some(j);
                        if bland {
                            break;
                        }
                    }
                    Some(e) if d[j] < d[e] => entering = Some(j),
                    _ => {}
                }
            }
            let Some(c) = entering else {
                return Ok(());
            };

            let mut leave: Option<(usize, S)> = None;
            for i in 0..m {
                let a = &self.t[i][c];
                if !a.is_positive_tol() {
                    continue;
                }
                let ratio = self.t[i][self.rhs_col].clone() / a.clone();
                match &leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        let better = ratio < lr.clone() - S::tolerance()
                            || ((ratio.clone() - lr.clone()).is_negligible()
                                && self.basis[i] < self.basis[*li]);
                        if better {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio.is_negligible() {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
        Err(LpError::IterationLimit)
    }

    /// Pivots basic artificial columns out of the basis; rows that cannot be
    /// pivoted are linearly redundant and are dropped.
    fn drive_out(&mut self, art_start: usize) {
        let mut i = 0;
        while i < self.m() {
            if self.basis[i] < art_start {
                i += 1;
                continue;
            }
            let mut best: Option<usize> = None;
            for j in 0..art_start {
                if self.t[i][j].is_negligible() {
                    continue;
                }
                if best.map_or(true, |b| self.t[i][j].abs() > self.t[i][b].abs()) {
                    best = Some(j);
                }
            }
            match best {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.t.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn textbook_max() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::<f64>::new(2, Sense::Maximize);
        lp.set_objective(vec![3.0, 5.0]);
        lp.add_constraint(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add_constraint(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add_constraint(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.values[0] - 2.0).abs() < 1e-12);
        assert!((s.values[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn free_variables_and_equalities_exact() {
        // min x s.t. x + t >= 1, x >= 0, x - t/2 >= 0, t free
        let mut lp = LinearProgram::new(2, Sense::Minimize);
        lp.set_free(0);
        lp.set_free(1);
        lp.set_objective(vec![r(1, 1), r(0, 1)]);
        lp.add_constraint(vec![r(1, 1), r(1, 1)], Relation::Ge, r(1, 1));
        lp.add_constraint(vec![r(1, 1), r(0, 1)], Relation::Ge, r(0, 1));
        lp.add_constraint(vec![r(1, 1), r(-1, 2)], Relation::Ge, r(0, 1));
        let s = lp.solve().unwrap();
        assert_eq!(s.objective, r(1, 3));
        assert_eq!(s.values, vec![r(1, 3), r(2, 3)]);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::<f64>::new(1, Sense::Minimize);
        lp.add_constraint(vec![1.0], Relation::Ge, 2.0);
        lp.add_constraint(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::<f64>::new(2, Sense::Maximize);
        lp.set_objective(vec![1.0, 0.0]);
        lp.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::<f64>::new(2, Sense::Maximize);
        lp.set_objective(vec![1.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_constraint(vec![2.0, 2.0], Relation::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, cycles under the textbook Dantzig rule.
        let mut lp = LinearProgram::<f64>::new(4, Sense::Minimize);
        lp.set_objective(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_constraint(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add_constraint(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add_constraint(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9);
    }
}
