//! Revised simplex on standard-form programs `min c·x, A x = b, x ≥ 0`.
//!
//! The basis inverse is kept as a dense matrix and updated by elementary row
//! operations after every pivot, with a full re-inversion every
//! [`REFACTOR_PERIOD`] pivots. Columns can be appended between calls to
//! [`Simplex::optimize`]; the current basis stays primal feasible, so column
//! generation resumes from where the previous solve stopped.
//!
//! Phase one starts from an all-artificial basis. Artificials never re-enter
//! once they leave. An artificial still basic at level zero when phase two
//! begins (a redundant row) is pivoted out with a zero step as soon as an
//! entering column touches its row.

use crate::LpError;

/// Pivots between two full re-inversions of the basis.
pub const REFACTOR_PERIOD: usize = 64;

const PIVOT_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-9;

/// Sparse column as `(row, value)` pairs.
pub type Column = Vec<(usize, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    Col(usize),
    Art(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    One,
    Two,
}

/// Result of one call to [`Simplex::optimize`] on the current column set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Optimal,
    /// Phase one stalled with positive artificial mass. Adding columns that
    /// price out against [`Simplex::duals`] may still restore feasibility.
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct Simplex {
    m: usize,
    rhs: Vec<f64>,
    row_sign: Vec<f64>,
    cols: Vec<Column>,
    costs: Vec<f64>,
    basis: Vec<Var>,
    basic_pos: Vec<Option<usize>>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    phase: Phase,
    iterations: usize,
    since_refactor: usize,
    bland: bool,
    max_iterations: Option<usize>,
}

impl Simplex {
    /// Creates a program with `rhs.len()` equality rows and no columns.
    pub fn new(rhs: &[f64]) -> Result<Self, LpError> {
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("right-hand side".into()));
        }
        let m = rhs.len();
        let row_sign: Vec<f64> = rhs.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let rhs: Vec<f64> = rhs.iter().zip(&row_sign).map(|(v, s)| v * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Ok(Self {
            m,
            xb: rhs.clone(),
            rhs,
            row_sign,
            cols: Vec::new(),
            costs: Vec::new(),
            basis: (0..m).map(Var::Art).collect(),
            basic_pos: Vec::new(),
            binv,
            phase: Phase::One,
            iterations: 0,
            since_refactor: 0,
            bland: false,
            max_iterations: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn columns(&self) -> usize {
        self.cols.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Overrides the default iteration cap of `50·(rows+cols) + 10⁴`.
    pub fn set_max_iterations(&mut self, cap: usize) {
        self.max_iterations = Some(cap);
    }

    /// Appends a nonbasic column and returns its index.
    pub fn add_column(&mut self, column: Column, cost: f64) -> Result<usize, LpError> {
        if !cost.is_finite() {
            return Err(LpError::NonFinite("column cost".into()));
        }
        let mut col = Vec::with_capacity(column.len());
        for (r, v) in column {
            if r >= self.m {
                return Err(LpError::Dimension(format!(
                    "row index {r} out of range for {} rows",
                    self.m
                )));
            }
            if !v.is_finite() {
                return Err(LpError::NonFinite("column entry".into()));
            }
            if v != 0.0 {
                col.push((r, v * self.row_sign[r]));
            }
        }
        self.cols.push(col);
        self.costs.push(cost);
        self.basic_pos.push(None);
        Ok(self.cols.len() - 1)
    }

    fn cost_of(&self, v: Var) -> f64 {
        match (self.phase, v) {
            (Phase::One, Var::Art(_)) => 1.0,
            (Phase::One, Var::Col(_)) => 0.0,
            (Phase::Two, Var::Art(_)) => 0.0,
            (Phase::Two, Var::Col(j)) => self.costs[j],
        }
    }

    /// Simplex multipliers `c_B B⁻¹` of the current phase, in the caller's row
    /// orientation.
    pub fn duals(&self) -> Vec<f64> {
        let mut y = self.internal_duals();
        for (yi, s) in y.iter_mut().zip(&self.row_sign) {
            *yi *= s;
        }
        y
    }

    fn internal_duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &v) in self.basis.iter().enumerate() {
            let c = self.cost_of(v);
            if c != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += c * b;
                }
            }
        }
        y
    }

    /// Primal value of every column.
    pub fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.cols.len()];
        for (k, &v) in self.basis.iter().enumerate() {
            if let Var::Col(j) = v {
                x[j] = self.xb[k].max(0.0);
            }
        }
        x
    }

    /// Objective value over the structural columns.
    pub fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter_map(|(&v, &x)| match v {
                Var::Col(j) => Some(self.costs[j] * x.max(0.0)),
                Var::Art(_) => None,
            })
            .sum()
    }

    /// Sum of artificial values still in the basis.
    pub fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(v, _)| matches!(v, Var::Art(_)))
            .map(|(_, x)| x.max(0.0))
            .sum()
    }

    fn feasibility_tol(&self) -> f64 {
        let scale = self.rhs.iter().fold(1.0_f64, |a, &b| a.max(b));
        FEASIBILITY_TOL * scale
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let c = match self.phase {
            Phase::One => 0.0,
            Phase::Two => self.costs[j],
        };
        c - self.cols[j].iter().map(|&(r, v)| y[r] * v).sum::<f64>()
    }

    fn select_entering(&self, y: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols.len() {
            if self.basic_pos[j].is_some() {
                continue;
            }
            let d = self.reduced_cost(j, y);
            if d < -OPTIMALITY_TOL {
                if self.bland {
                    return Some(j);
                }
                match best {
                    Some((_, bd)) if bd <= d => {}
                    _ => best = Some((j, d)),
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(r, v) in &self.cols[j] {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[i * m + r] * v;
            }
        }
        alpha
    }

    fn var_order(v: Var) -> (usize, usize) {
        match v {
            Var::Art(r) => (0, r),
            Var::Col(j) => (1, j),
        }
    }

    fn select_leaving(&self, alpha: &[f64]) -> Option<(usize, f64)> {
        if self.phase == Phase::Two {
            let mut pick: Option<(usize, f64)> = None;
            for (i, (&v, &a)) in self.basis.iter().zip(alpha).enumerate() {
                if matches!(v, Var::Art(_)) && a.abs() > PIVOT_TOL {
                    match pick {
                        Some((_, pa)) if pa >= a.abs() => {}
                        _ => pick = Some((i, a.abs())),
                    }
                }
            }
            if let Some((i, _)) = pick {
                return Some((i, 0.0));
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &a) in alpha.iter().enumerate() {
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.xb[i].max(0.0) / a;
            match best {
                None => best = Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    let better = if tie {
                        if self.bland {
                            Self::var_order(self.basis[i]) < Self::var_order(self.basis[bi])
                        } else {
                            a > alpha[bi]
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, j: usize, alpha: &[f64], theta: f64) {
        let m = self.m;
        for (i, x) in self.xb.iter_mut().enumerate() {
            if i != r {
                *x -= theta * alpha[i];
            }
        }
        self.xb[r] = theta;
        let piv = alpha[r];
        let (head, tail) = self.binv.split_at_mut(r * m);
        let (pivot_row, tail) = tail.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            *v /= piv;
        }
        for (i, row) in head.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(pivot_row.iter()) {
                    *a -= f * b;
                }
            }
        }
        for (k, row) in tail.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + k];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(pivot_row.iter()) {
                    *a -= f * b;
                }
            }
        }
        if let Var::Col(old) = self.basis[r] {
            self.basic_pos[old] = None;
        }
        self.basis[r] = Var::Col(j);
        self.basic_pos[j] = Some(r);
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (k, &v) in self.basis.iter().enumerate() {
            match v {
                Var::Art(r) => a[r * m + k] = 1.0,
                Var::Col(j) => {
                    for &(r, val) in &self.cols[j] {
                        a[r * m + k] = val;
                    }
                }
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let (p, pv) = (c..m)
                .map(|r| (r, a[r * m + c].abs()))
                .fold((c, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pv < 1e-12 {
                return Err(LpError::SingularBasis);
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        // The Gauss-Jordan above yields B⁻¹ with rows indexed by basis position.
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
            self.xb[i] = if v < 0.0 && v > -self.feasibility_tol() { 0.0 } else { v };
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn iteration_cap(&self) -> usize {
        self.max_iterations
            .unwrap_or(50 * (self.m + self.cols.len()) + 10_000)
    }

    /// Runs primal simplex on the current columns until optimality,
    /// infeasibility, or unboundedness.
    pub fn optimize(&mut self) -> Result<Outcome, LpError> {
        let bland_after = 10 * (self.m + self.cols.len());
        let mut local_iters = 0usize;
        loop {
            if self.phase == Phase::One && self.infeasibility() <= self.feasibility_tol() {
                for (v, x) in self.basis.iter().zip(self.xb.iter_mut()) {
                    if matches!(v, Var::Art(_)) {
                        *x = 0.0;
                    }
                }
                self.phase = Phase::Two;
                log::debug!("phase one complete after {} pivots", self.iterations);
            }
            let y = self.internal_duals();
            let Some(j) = self.select_entering(&y) else {
                return Ok(match self.phase {
                    Phase::One => Outcome::Infeasible,
                    Phase::Two => Outcome::Optimal,
                });
            };
            let alpha = self.ftran(j);
            let Some((r, theta)) = self.select_leaving(&alpha) else {
                if self.phase == Phase::One {
                    return Err(LpError::Numerical("unbounded ray in phase one".into()));
                }
                return Ok(Outcome::Unbounded);
            };
            self.pivot(r, j, &alpha, theta);
            self.iterations += 1;
            self.since_refactor += 1;
            local_iters += 1;
            if self.since_refactor >= REFACTOR_PERIOD {
                self.refactor()?;
            }
            if !self.bland && local_iters > bland_after {
                log::debug!("switching to Bland's rule after {local_iters} pivots");
                self.bland = true;
            }
            if self.iterations.is_multiple_of(1000) {
                log::debug!(
                    "iter {} phase {:?} obj {:.12} infeas {:.3e}",
                    self.iterations,
                    self.phase,
                    self.objective(),
                    self.infeasibility()
                );
            }
            if local_iters > self.iteration_cap() {
                return Err(LpError::IterationLimit(self.iterations));
            }
        }
    }

    /// Reduced cost of column `j` against the current multipliers.
    pub fn column_reduced_cost(&self, j: usize) -> f64 {
        let y = self.internal_duals();
        self.reduced_cost(j, &y)
    }

    /// Resets Bland mode so that a fresh optimize call starts with Dantzig
    /// pricing again.
    pub fn reset_pricing(&mut self) {
        self.bland = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_column_feasible() {
        // min x s.t. 2x = 4
        let mut s = Simplex::new(&[4.0]).unwrap();
        s.add_column(vec![(0, 2.0)], 1.0).unwrap();
        assert_eq!(s.optimize().unwrap(), Outcome::Optimal);
        assert!((s.primal()[0] - 2.0).abs() < 1e-12);
        assert!((s.objective() - 2.0).abs() < 1e-12);
        assert!((s.duals()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_then_repaired_by_new_column() {
        // x = 1 and x = 2 cannot both hold with one column.
        let mut s = Simplex::new(&[1.0, 2.0]).unwrap();
        s.add_column(vec![(0, 1.0), (1, 1.0)], 1.0).unwrap();
        assert_eq!(s.optimize().unwrap(), Outcome::Infeasible);
        s.add_column(vec![(1, 1.0)], 3.0).unwrap();
        assert_eq!(s.optimize().unwrap(), Outcome::Optimal);
        assert!((s.objective() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_rows_are_flipped_and_duals_restored() {
        // min x + y, x - y = -1 -> x = 0, y = 1
        let mut s = Simplex::new(&[-1.0]).unwrap();
        s.add_column(vec![(0, 1.0)], 1.0).unwrap();
        s.add_column(vec![(0, -1.0)], 1.0).unwrap();
        assert_eq!(s.optimize().unwrap(), Outcome::Optimal);
        assert!((s.objective() - 1.0).abs() < 1e-12);
        // d obj / d rhs = -1 along the y direction
        assert!((s.duals()[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_keep_zero_artificials() {
        // Two identical rows.
        let mut s = Simplex::new(&[1.0, 1.0]).unwrap();
        s.add_column(vec![(0, 1.0), (1, 1.0)], 2.0).unwrap();
        s.add_column(vec![(0, 1.0), (1, 1.0)], 1.0).unwrap();
        assert_eq!(s.optimize().unwrap(), Outcome::Optimal);
        assert!((s.objective() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        // min -x s.t. x - y = 0
        let mut s = Simplex::new(&[0.0]).unwrap();
        s.add_column(vec![(0, 1.0)], -1.0).unwrap();
        s.add_column(vec![(0, -1.0)], 0.0).unwrap();
        assert_eq!(s.optimize().unwrap(), Outcome::Unbounded);
    }

    #[test]
    fn rejects_out_of_range_rows() {
        let mut s = Simplex::new(&[1.0]).unwrap();
        assert!(s.add_column(vec![(3, 1.0)], 0.0).is_err());
    }
}
