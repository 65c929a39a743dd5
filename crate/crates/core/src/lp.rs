//! Dense two-phase primal simplex for node relaxations.
//!
//! Variable bounds are shifted to zero and the upper bounds are lifted into
//! explicit rows, so every tableau variable is simply `>= 0`. Pivoting follows
//! Bland's rule throughout, which guarantees termination and makes the result a
//! pure function of the input bits.
//!
//! [`brute_force_lp`] enumerates basic points directly and exists only as an
//! independent oracle for tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility tolerance used when checking rows and bounds.
pub const FEAS_TOL: f64 = 1e-9;
/// Default integrality tolerance.
pub const INT_TOL: f64 = 1e-6;

const COST_EPS: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-9;
const MIN_PIVOT: f64 = 1e-12;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }

    fn flipped(self) -> Sense {
        match self {
            Sense::Le => Sense::Ge,
            Sense::Ge => Sense::Le,
            Sense::Eq => Sense::Eq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `max objective·x` subject to the rows and finite box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<LpRow>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: Option<f64>,
    pub solution: Option<Vec<f64>>,
}

impl LpResult {
    pub fn infeasible() -> Self {
        LpResult { status: LpStatus::Infeasible, objective: None, solution: None }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "objective has {} entries, expected {}",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.bounds.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "bounds have {} entries, expected {}",
                self.bounds.len(),
                self.num_vars
            )));
        }
        for (r, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != self.num_vars {
                return Err(Error::Dimension(format!(
                    "row {r} has {} coefficients, expected {}",
                    row.coeffs.len(),
                    self.num_vars
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidInput(format!("row {r} has non-finite data")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("objective has non-finite data".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidInput(format!("bad bounds [{lo}, {hi}] on x{j}")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.constraints {
            let lhs = dot(&row.coeffs, x);
            let v = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&xj, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xj).max(xj - hi);
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// True iff every masked coordinate of `x` lies within `tol` of an integer.
pub fn is_integral(x: &[f64], mask: &[bool], tol: f64) -> bool {
    x.iter().zip(mask).filter(|(_, &m)| m).all(|(v, _)| (v - v.round()).abs() <= tol)
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs; last entry holds minus the current objective.
    cost: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<()> {
        let p = self.rows[r][c];
        if p.abs() < MIN_PIVOT {
            return Err(Error::Numerical(format!("pivot {p:e} at row {r}, column {c}")));
        }
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(Error::Numerical("pivot limit exceeded".into()));
        }
        let inv = 1.0 / p;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rows[r][c] = 1.0;
        let prow = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, &pv) in self.cost.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.cost[c] = 0.0;
        }
        self.rows[r] = prow;
        self.basis[r] = c;
        Ok(())
    }

    /// Runs Bland-rule pivots until optimal; `allowed` filters entering columns.
    /// Returns false when the objective is unbounded.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        loop {
            let entering = (0..self.ncols).find(|&j| allowed(j) && self.cost[j] > COST_EPS);
            let Some(c) = entering else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio || (ratio == bratio && self.basis[r] < self.basis[br]) {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Ok(false) };
            self.pivot(r, c)?;
        }
    }
}

/// Solves `p` to optimality with a two-phase dense simplex.
pub fn solve_lp(p: &LpProblem) -> Result<LpResult> {
    p.validate()?;
    let n = p.num_vars;
    let lower: Vec<f64> = p.bounds.iter().map(|b| b.0).collect();

    // Shifted rows: a·x' (sense) rhs - a·l, plus x'_j <= u_j - l_j.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(p.constraints.len() + n);
    for row in &p.constraints {
        rows.push((row.coeffs.clone(), row.sense, row.rhs - dot(&row.coeffs, &lower)));
    }
    for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e, Sense::Le, hi - lo));
    }
    for (coeffs, sense, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            coeffs.iter_mut().for_each(|a| *a = -*a);
            *rhs = -*rhs;
            *sense = sense.flipped();
        }
    }

    // Columns: structural | one slack/surplus per inequality | artificials.
    let m = rows.len();
    let num_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let num_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let art_start = n + num_slack;
    let ncols = art_start + num_art;

    let mut tab_rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut s, mut a) = (n, art_start);
    for (coeffs, sense, rhs) in &rows {
        let mut t = vec![0.0; ncols + 1];
        t[..n].copy_from_slice(coeffs);
        t[ncols] = *rhs;
        match sense {
            Sense::Le => {
                t[s] = 1.0;
                basis.push(s);
                s += 1;
            }
            Sense::Ge => {
                t[s] = -1.0;
                s += 1;
                t[a] = 1.0;
                basis.push(a);
                a += 1;
            }
            Sense::Eq => {
                t[a] = 1.0;
                basis.push(a);
                a += 1;
            }
        }
        tab_rows.push(t);
    }

    let mut tab = Tableau { rows: tab_rows, cost: vec![0.0; ncols + 1], basis, ncols, pivots: 0 };

    if num_art > 0 {
        // Phase one: maximize -sum(artificials).
        for j in art_start..ncols {
            tab.cost[j] = -1.0;
        }
        for r in 0..m {
            if tab.basis[r] >= art_start {
                for (cv, &tv) in tab.cost.iter_mut().zip(&tab.rows[r]) {
                    *cv += tv;
                }
            }
        }
        tab.optimize(&|_| true)?;
        // cost[ncols] = -(phase one objective) = sum of artificials.
        if tab.cost[ncols] > FEAS_TOL {
            return Ok(LpResult::infeasible());
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                let col = (0..art_start).find(|&j| tab.rows[r][j].abs() > PIVOT_EPS);
                match col {
                    Some(c) => {
                        tab.pivot(r, c)?;
                        r += 1;
                    }
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    // Phase two on the original objective.
    tab.cost = vec![0.0; ncols + 1];
    tab.cost[..n].copy_from_slice(&p.objective);
    for r in 0..tab.rows.len() {
        let cb = if tab.basis[r] < n { p.objective[tab.basis[r]] } else { 0.0 };
        if cb != 0.0 {
            for (cv, &tv) in tab.cost.iter_mut().zip(&tab.rows[r]) {
                *cv -= cb * tv;
            }
        }
    }
    if !tab.optimize(&|j| j < art_start)? {
        return Ok(LpResult { status: LpStatus::Unbounded, objective: None, solution: None });
    }

    let mut x = lower;
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] += tab.rhs(r);
        }
    }
    let violation = p.max_violation(&x);
    if violation > FEAS_TOL {
        return Err(Error::Numerical(format!("optimal basis violates constraints by {violation:e}")));
    }
    let objective = dot(&p.objective, &x);
    Ok(LpResult { status: LpStatus::Optimal, objective: Some(objective), solution: Some(x) })
}

/// Enumerates every basic point of `p` and returns the best feasible one.
///
/// Exponential; restricted to at most 8 variables and 10 rows.
pub fn brute_force_lp(p: &LpProblem) -> Result<LpResult> {
    p.validate()?;
    let n = p.num_vars;
    if n > 8 || p.constraints.len() > 10 {
        return Err(Error::SizeGuard(format!(
            "brute_force_lp supports at most 8 vars and 10 rows, got {} and {}",
            n,
            p.constraints.len()
        )));
    }
    let mut planes: Vec<(Vec<f64>, f64)> = p.constraints.iter().map(|r| (r.coeffs.clone(), r.rhs)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), p.bounds[j].0));
        planes.push((e, p.bounds[j].1));
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut chosen = Vec::with_capacity(n);
    enumerate_subsets(planes.len(), n, 0, &mut chosen, &mut |subset| {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if p.max_violation(&x) <= 1e-8 {
                let obj = dot(&p.objective, &x);
                if best.as_ref().is_none_or(|(bo, _)| obj > *bo) {
                    best = Some((obj, x));
                }
            }
        }
    });
    Ok(match best {
        Some((obj, x)) => LpResult { status: LpStatus::Optimal, objective: Some(obj), solution: Some(x) },
        None => LpResult::infeasible(),
    })
}

fn enumerate_subsets(total: usize, k: usize, start: usize, chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for i in start..total {
        if total - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        enumerate_subsets(total, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                let (upper, lower) = a.split_at_mut(r);
                for (dst, src) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                    *dst -= f * src;
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], sense: Sense, rhs: f64) -> LpRow {
        LpRow { coeffs: coeffs.to_vec(), sense, rhs }
    }

    fn jeroslow_relaxation(n: usize) -> LpProblem {
        LpProblem {
            num_vars: n,
            objective: vec![1.0; n],
            constraints: vec![row(&vec![2.0; n], Sense::Eq, n as f64)],
            bounds: vec![(0.0, 1.0); n],
        }
    }

    #[test]
    fn single_variable_bound() {
        let p = LpProblem {
            num_vars: 1,
            objective: vec![1.0],
            constraints: vec![row(&[1.0], Sense::Le, 1.0)],
            bounds: vec![(0.0, 1.0)],
        };
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.objective, Some(1.0));
        assert_eq!(r.solution, Some(vec![1.0]));
    }

    #[test]
    fn empty_polytope() {
        let p = LpProblem {
            num_vars: 1,
            objective: vec![1.0],
            constraints: vec![row(&[1.0], Sense::Le, -1.0)],
            bounds: vec![(0.0, 1.0)],
        };
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
        assert_eq!(brute_force_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn jeroslow_relaxation_value() {
        let p = jeroslow_relaxation(5);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective.unwrap() - 2.5).abs() < 1e-12);
        let x = r.solution.unwrap();
        assert!(p.max_violation(&x) <= FEAS_TOL);
        // A vertex of {sum x = 2.5, 0 <= x <= 1} has exactly one fractional coordinate.
        let fractional = x.iter().filter(|v| (*v - v.round()).abs() > 1e-9).count();
        assert_eq!(fractional, 1);

        let r3 = brute_force_lp(&jeroslow_relaxation(3)).unwrap();
        assert!((r3.objective.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn brute_force_simple() {
        let p = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 1.0],
            constraints: vec![row(&[1.0, 1.0], Sense::Le, 1.0)],
            bounds: vec![(0.0, 1.0); 2],
        };
        assert!((brute_force_lp(&p).unwrap().objective.unwrap() - 1.0).abs() < 1e-12);
        assert!((solve_lp(&p).unwrap().objective.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_size_guard() {
        let p = jeroslow_relaxation(9);
        assert!(matches!(brute_force_lp(&p), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 1.0],
            constraints: vec![row(&[1.0], Sense::Le, 1.0)],
            bounds: vec![(0.0, 1.0); 2],
        };
        assert!(matches!(solve_lp(&p), Err(Error::Dimension(_))));
    }

    #[test]
    fn ge_and_eq_rows_and_shifted_bounds() {
        // max -x1 + x2 s.t. x1 + x2 >= 3, x1 - x2 = 0, x in [1,4]^2 -> x = (1.5, 1.5)
        let p = LpProblem {
            num_vars: 2,
            objective: vec![-1.0, 2.0],
            constraints: vec![row(&[1.0, 1.0], Sense::Ge, 3.0), row(&[1.0, -1.0], Sense::Eq, 0.0)],
            bounds: vec![(1.0, 4.0), (1.0, 4.0)],
        };
        let r = solve_lp(&p).unwrap();
        assert!((r.objective.unwrap() - 4.0).abs() < 1e-12);
        let b = brute_force_lp(&p).unwrap();
        assert!((b.objective.unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let p = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 0.0],
            constraints: vec![row(&[1.0, 1.0], Sense::Eq, 1.0), row(&[2.0, 2.0], Sense::Eq, 2.0)],
            bounds: vec![(0.0, 1.0); 2],
        };
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.objective, Some(1.0));
    }

    #[test]
    fn integrality_checks() {
        assert!(!is_integral(&[0.5, 1.0], &[true, true], INT_TOL));
        assert!(is_integral(&[1.0 - 1e-9, 0.0], &[true, true], INT_TOL));
        assert!(is_integral(&[0.3, 0.7], &[false, false], INT_TOL));
    }

    #[test]
    fn solve_is_bit_deterministic() {
        let p = jeroslow_relaxation(7);
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        let bits = |r: &LpResult| r.solution.as_ref().unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.objective.unwrap().to_bits(), b.objective.unwrap().to_bits());
    }
}
