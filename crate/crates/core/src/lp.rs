//! Dense two-phase simplex over exact rationals, with Bland's rule.
//!
//! Problems are `max c·x` subject to row constraints and `x ≥ 0`. Every
//! optimal answer carries dual prices and is checked for strong duality
//! before it is returned.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::rational::{one, to_compact_string, zero, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> Self {
        Constraint { coeffs, relation, rhs }
    }

    fn holds(&self, x: &[Rational]) -> bool {
        let lhs = dot(&self.coeffs, x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, expected {want}")]
    Dimension { row: usize, got: usize, want: usize },
    #[error("duality certificate failed; solver bug")]
    Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<Rational>, constraints: Vec<Constraint>) -> Result<Self, LpError> {
        let want = objective.len();
        for (row, c) in constraints.iter().enumerate() {
            if c.coeffs.len() != want {
                return Err(LpError::Dimension {
                    row,
                    got: c.coeffs.len(),
                    want,
                });
            }
        }
        Ok(LinearProgram { objective, constraints })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars() && x.iter().all(|v| !v.is_negative()) && self.constraints.iter().all(|c| c.holds(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value; zero unless optimal.
    pub value: Rational,
    pub point: Vec<Rational>,
    /// Basic columns of the final tableau (structural columns first, then
    /// one slack or surplus per inequality row).
    pub basis: Vec<usize>,
    /// One dual price per constraint row.
    pub duals: Vec<Rational>,
}

impl LpSolution {
    fn non_optimal(status: LpStatus, n: usize) -> Self {
        LpSolution {
            status,
            value: zero(),
            point: vec![zero(); n],
            basis: vec![],
            duals: vec![],
        }
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Tableau {
    /// `rows[r]` has `ncols + 1` entries; the last is the right-hand side.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let pv = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &pv;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, p) in row.iter_mut().zip(&prow) {
                *v -= &factor * p;
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost·x` over the current feasible basis, considering only
    /// columns for which `allowed` holds as entering candidates.
    fn optimize(&mut self, cost: &[Rational], allowed: &dyn Fn(usize) -> bool) -> Outcome {
        loop {
            // Reduced cost c_j - c_B·B⁻¹A_j; with Bland's rule pick the
            // lowest improving column.
            let entering = (0..self.ncols).filter(|&j| allowed(j) && !self.basis.contains(&j)).find(|&j| {
                let z: Rational = self.rows.iter().zip(&self.basis).map(|(row, &b)| &cost[b] * &row[j]).sum();
                cost[j] > z
            });
            let Some(c) = entering else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[self.ncols] / &row[c];
                    let better = match &leave {
                        None => true,
                        Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Outcome::Unbounded;
            };
            self.pivot(r, c);
        }
    }
}

/// Exact maximization. Infeasible and unbounded programs are reported
/// through [`LpSolution::status`].
pub fn solve_max(lp: &LinearProgram) -> LpSolution {
    try_solve_max(lp).expect("duality certificate holds")
}

/// As [`solve_max`] but surfaces certificate failures and malformed input.
pub fn try_solve_max(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let lp = LinearProgram::new(lp.objective.clone(), lp.constraints.clone())?;
    let n = lp.num_vars();
    let m = lp.constraints.len();

    // Normalize to nonnegative right-hand sides.
    let mut flipped = vec![false; m];
    let rows: Vec<(Vec<Rational>, Relation, Rational)> = lp
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.rhs.is_negative() {
                flipped[i] = true;
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|v| -v).collect(), rel, -&c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs.clone())
            }
        })
        .collect();

    // Columns: structural, one slack/surplus per inequality, one artificial
    // per row lacking a slack basis.
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let ncols = n + n_slack + n_art;
    let art_start = n + n_slack;
    let mut slack_of = vec![None; m];
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        ncols,
    };
    let (mut s, mut a) = (n, art_start);
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        let mut row = vec![zero(); ncols + 1];
        row[..n].clone_from_slice(coeffs);
        row[ncols] = rhs.clone();
        match rel {
            Relation::Le => {
                row[s] = one();
                slack_of[i] = Some(s);
                tab.basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                row[s] = -one();
                slack_of[i] = Some(s);
                s += 1;
                row[a] = one();
                tab.basis.push(a);
                a += 1;
            }
            Relation::Eq => {
                row[a] = one();
                tab.basis.push(a);
                a += 1;
            }
        }
        tab.rows.push(row);
    }

    // Phase 1: maximize minus the sum of artificials.
    if n_art > 0 {
        let cost1: Vec<Rational> = (0..ncols).map(|j| if j >= art_start { -one() } else { zero() }).collect();
        tab.optimize(&cost1, &|_| true);
        let infeas: Rational = tab
            .rows
            .iter()
            .zip(&tab.basis)
            .filter(|(_, &b)| b >= art_start)
            .map(|(r, _)| r[ncols].clone())
            .sum();
        if infeas.is_positive() {
            return Ok(LpSolution::non_optimal(LpStatus::Infeasible, n));
        }
        // Drive zero-level artificials out; rows that cannot pivot are redundant.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                match (0..art_start).find(|&j| !tab.rows[r][j].is_zero()) {
                    Some(c) => tab.pivot(r, c),
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    // Phase 2 on structural and slack columns only.
    let cost2: Vec<Rational> = (0..ncols).map(|j| if j < n { lp.objective[j].clone() } else { zero() }).collect();
    if let Outcome::Unbounded = tab.optimize(&cost2, &|j| j < art_start) {
        return Ok(LpSolution::non_optimal(LpStatus::Unbounded, n));
    }
    let mut point = vec![zero(); n];
    for (row, &b) in tab.rows.iter().zip(&tab.basis) {
        if b < n {
            point[b] = row[ncols].clone();
        }
    }
    let value = dot(&lp.objective, &point);
    let duals = dual_prices(&lp, &rows, &flipped, &slack_of, &tab.basis, n);
    let sol = LpSolution {
        status: LpStatus::Optimal,
        value,
        point,
        basis: tab.basis.clone(),
        duals,
    };
    if !lp.is_feasible(&sol.point) || !duality_holds(&lp, &sol) {
        return Err(LpError::Certificate);
    }
    Ok(sol)
}

/// Solves `B^T y = c_B` on the rows that survived phase 1.
fn dual_prices(
    lp: &LinearProgram,
    rows: &[(Vec<Rational>, Relation, Rational)],
    flipped: &[bool],
    slack_of: &[Option<usize>],
    basis: &[usize],
    n: usize,
) -> Vec<Rational> {
    let m = rows.len();
    // Column j of the normalized constraint matrix, restricted to all rows.
    let column = |j: usize| -> Vec<Rational> {
        (0..m)
            .map(|i| {
                if j < n {
                    rows[i].0[j].clone()
                } else if slack_of[i] == Some(j) {
                    if rows[i].1 == Relation::Le {
                        one()
                    } else {
                        -one()
                    }
                } else {
                    zero()
                }
            })
            .collect()
    };
    let cost = |j: usize| if j < n { lp.objective[j].clone() } else { zero() };
    // Unknowns: y over all m rows. Equations: y·A_b = c_b for basic b.
    // Redundant rows were dropped, so fewer equations than unknowns may
    // remain; the free unknowns are fixed at zero.
    let mut eqs: Vec<Vec<Rational>> = basis
        .iter()
        .map(|&b| {
            let mut e = column(b);
            e.push(cost(b));
            e
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..m {
        if r == eqs.len() {
            break;
        }
        let Some(pr) = (r..eqs.len()).find(|&i| !eqs[i][c].is_zero()) else {
            continue;
        };
        eqs.swap(r, pr);
        let pv = eqs[r][c].clone();
        for v in eqs[r].iter_mut() {
            *v /= &pv;
        }
        let prow = eqs[r].clone();
        for (i, e) in eqs.iter_mut().enumerate() {
            if i != r && !e[c].is_zero() {
                let f = e[c].clone();
                for (v, p) in e.iter_mut().zip(&prow) {
                    *v -= &f * p;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let mut y = vec![zero(); m];
    for (row, &c) in eqs.iter().zip(&pivot_cols) {
        y[c] = row[m].clone();
    }
    for (yi, &f) in y.iter_mut().zip(flipped) {
        if f {
            *yi = -yi.clone();
        }
    }
    y
}

/// Strong duality plus dual feasibility for `max c·x, x ≥ 0`.
fn duality_holds(lp: &LinearProgram, sol: &LpSolution) -> bool {
    let y = &sol.duals;
    let sign_ok = lp.constraints.iter().zip(y).all(|(c, yi)| match c.relation {
        Relation::Le => !yi.is_negative(),
        Relation::Ge => !yi.is_positive(),
        Relation::Eq => true,
    });
    let reduced_ok = (0..lp.num_vars()).all(|j| {
        let col: Rational = lp.constraints.iter().zip(y).map(|(c, yi)| &c.coeffs[j] * yi).sum();
        col >= lp.objective[j]
    });
    let dual_value: Rational = lp.constraints.iter().zip(y).map(|(c, yi)| &c.rhs * yi).sum();
    sign_ok && reduced_ok && dual_value == sol.value
}

/// Public check of the certificate stored in an optimal solution.
pub fn certificate_holds(lp: &LinearProgram, sol: &LpSolution) -> bool {
    sol.status == LpStatus::Optimal && lp.is_feasible(&sol.point) && duality_holds(lp, sol)
}

/// Result of a two-stage lexicographic solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexSolution {
    pub primary_value: Rational,
    pub solution: LpSolution,
}

/// Maximizes `primary`, then `secondary` among the primary maximizers.
pub fn lex_solve(primary: &[Rational], secondary: &[Rational], constraints: &[Constraint]) -> Result<LexSolution, LpError> {
    let stage1 = try_solve_max(&LinearProgram::new(primary.to_vec(), constraints.to_vec())?)?;
    if stage1.status != LpStatus::Optimal {
        return Ok(LexSolution {
            primary_value: zero(),
            solution: stage1,
        });
    }
    let mut pinned = constraints.to_vec();
    pinned.push(Constraint::new(primary.to_vec(), Relation::Eq, stage1.value.clone()));
    let stage2 = try_solve_max(&LinearProgram::new(secondary.to_vec(), pinned)?)?;
    Ok(LexSolution {
        primary_value: stage1.value,
        solution: stage2,
    })
}

impl fmt::Display for LinearProgram {
    /// Aligned text dump, one row per constraint.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells = |v: &[Rational]| v.iter().map(to_compact_string).collect::<Vec<_>>();
        let mut table: Vec<Vec<String>> = vec![];
        let mut head = vec!["max".to_string()];
        head.extend(cells(&self.objective));
        head.extend([String::new(), String::new()]);
        table.push(head);
        for c in &self.constraints {
            let mut row = vec![String::new()];
            row.extend(cells(&c.coeffs));
            row.push(
                match c.relation {
                    Relation::Le => "<=",
                    Relation::Eq => "=",
                    Relation::Ge => ">=",
                }
                .to_string(),
            );
            row.push(to_compact_string(&c.rhs));
            table.push(row);
        }
        let width = table.iter().flat_map(|r| r.iter().map(|s| s.len())).max().unwrap_or(1);
        for row in table {
            let line: Vec<String> = row.iter().map(|s| format!("{s:>width$}")).collect();
            writeln!(f, "{}", line.join(" ").trim_end())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn c(coeffs: &[Rational], relation: Relation, rhs: Rational) -> Constraint {
        Constraint::new(coeffs.to_vec(), relation, rhs)
    }

    #[test]
    fn single_bound() {
        let lp = LinearProgram::new(vec![one()], vec![c(&[one()], Relation::Le, rat(5, 3))]).unwrap();
        let s = solve_max(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.value, rat(5, 3));
        assert!(certificate_holds(&lp, &s));
    }

    #[test]
    fn infeasible_and_unbounded_are_statuses() {
        let lp = LinearProgram::new(
            vec![one()],
            vec![c(&[one()], Relation::Ge, int(2)), c(&[one()], Relation::Le, int(1))],
        )
        .unwrap();
        assert_eq!(solve_max(&lp).status, LpStatus::Infeasible);
        let lp = LinearProgram::new(vec![one(), zero()], vec![c(&[one(), -one()], Relation::Le, int(1))]).unwrap();
        assert_eq!(solve_max(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // max x + 2y, x + y = 1, x - y >= -1/2
        let lp = LinearProgram::new(
            vec![one(), int(2)],
            vec![
                c(&[one(), one()], Relation::Eq, one()),
                c(&[one(), -one()], Relation::Ge, rat(-1, 2)),
            ],
        )
        .unwrap();
        let s = solve_max(&lp);
        assert_eq!(s.value, rat(7, 4));
        assert_eq!(s.point, vec![rat(1, 4), rat(3, 4)]);
        assert!(certificate_holds(&lp, &s));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let lp = LinearProgram::new(
            vec![one(), one()],
            vec![
                c(&[one(), one()], Relation::Eq, one()),
                c(&[int(2), int(2)], Relation::Eq, int(2)),
                c(&[one(), zero()], Relation::Le, rat(1, 3)),
            ],
        )
        .unwrap();
        let s = solve_max(&lp);
        assert_eq!(s.value, one());
        assert!(certificate_holds(&lp, &s));
    }

    #[test]
    fn lexicographic_pin() {
        // Primary ties along x + y = 1; secondary prefers y.
        let cons = vec![c(&[one(), one()], Relation::Le, one())];
        let r = lex_solve(&[one(), one()], &[zero(), one()], &cons).unwrap();
        assert_eq!(r.primary_value, one());
        assert_eq!(r.solution.point, vec![zero(), one()]);
        let same = lex_solve(&[one(), one()], &[one(), one()], &cons).unwrap();
        assert_eq!(same.primary_value, same.solution.value);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(LinearProgram::new(vec![one()], vec![c(&[one(), one()], Relation::Le, one())]).is_err());
    }

    #[test]
    fn text_dump_is_aligned() {
        let lp = LinearProgram::new(vec![one(), rat(1, 2)], vec![c(&[one(), one()], Relation::Le, int(10))]).unwrap();
        let text = lp.to_string();
        assert!(text.starts_with("max"));
        assert!(text.contains("<="));
    }
}
