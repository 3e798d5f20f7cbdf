use crate::simplex::{Outcome, Simplex};
use crate::LpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A general linear program over `n` variables.
///
/// Variables default to `0 ≤ x < ∞`; either bound may be infinite.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: Status,
    pub primal: Vec<f64>,
    /// Shadow price of every constraint: the derivative of the optimal
    /// objective with respect to its right-hand side.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpProblem {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.bounds[var] = (lower, upper);
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        if self.bounds.len() != n {
            return Err(LpError::Dimension(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Dimension(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("constraint {i}")));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Dimension(format!("variable {j} has invalid bounds")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound by `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    /// Largest complementary-slackness product for a primal/dual pair.
    pub fn complementary_slackness_residual(&self, x: &[f64], duals: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (c, &y) in self.constraints.iter().zip(duals) {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max((y * (c.rhs - lhs)).abs());
        }
        for (j, (&(lo, hi), &v)) in self.bounds.iter().zip(x).enumerate() {
            let reduced = self.objective[j]
                - self
                    .constraints
                    .iter()
                    .zip(duals)
                    .map(|(c, y)| c.coeffs[j] * y)
                    .sum::<f64>();
            let slack = (v - lo).abs().min((hi - v).abs());
            let slack = if slack.is_finite() { slack } else { 1.0 };
            worst = worst.max((reduced * slack).abs());
        }
        worst
    }
}

enum VarMap {
    /// x = lower + x'
    Shifted { col: usize, lower: f64 },
    /// x = upper - x'
    Mirrored { col: usize, upper: f64 },
    /// x = x⁺ - x⁻
    Split { pos: usize, neg: usize },
}

/// Solves a general linear program with the revised simplex method.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.check()?;
    let n = problem.num_vars();
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // Rows: original constraints followed by finite upper-bound rows.
    let mut rhs: Vec<f64> = problem.constraints.iter().map(|c| c.rhs).collect();
    let mut maps = Vec::with_capacity(n);
    let mut upper_rows = Vec::new();
    let mut next_col = 0usize;
    for &(lo, hi) in &problem.bounds {
        if lo > hi {
            return Ok(LpSolution {
                status: Status::Infeasible,
                primal: vec![],
                duals: vec![],
                objective: f64::NAN,
                iterations: 0,
            });
        }
        let map = if lo.is_finite() {
            let col = next_col;
            next_col += 1;
            if hi.is_finite() {
                upper_rows.push((col, hi - lo));
            }
            VarMap::Shifted { col, lower: lo }
        } else if hi.is_finite() {
            let col = next_col;
            next_col += 1;
            VarMap::Mirrored { col, upper: hi }
        } else {
            next_col += 2;
            VarMap::Split { pos: next_col - 2, neg: next_col - 1 }
        };
        maps.push(map);
    }
    let m_orig = problem.constraints.len();
    rhs.extend(upper_rows.iter().map(|&(_, w)| w));

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); next_col];
    let mut costs = vec![0.0; next_col];
    let mut offset = 0.0;
    for (j, map) in maps.iter().enumerate() {
        let c = sign * problem.objective[j];
        match *map {
            VarMap::Shifted { col, lower } => {
                costs[col] += c;
                offset += c * lower;
            }
            VarMap::Mirrored { col, upper } => {
                costs[col] -= c;
                offset += c * upper;
            }
            VarMap::Split { pos, neg } => {
                costs[pos] += c;
                costs[neg] -= c;
            }
        }
    }
    for (i, con) in problem.constraints.iter().enumerate() {
        for (j, &a) in con.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, lower } => {
                    columns[col].push((i, a));
                    rhs[i] -= a * lower;
                }
                VarMap::Mirrored { col, upper } => {
                    columns[col].push((i, -a));
                    rhs[i] -= a * upper;
                }
                VarMap::Split { pos, neg } => {
                    columns[pos].push((i, a));
                    columns[neg].push((i, -a));
                }
            }
        }
    }
    for (k, &(col, _)) in upper_rows.iter().enumerate() {
        columns[col].push((m_orig + k, 1.0));
    }

    let mut lp = Simplex::new(&rhs)?;
    for (col, cost) in columns.into_iter().zip(costs) {
        lp.add_column(col, cost)?;
    }
    for (i, con) in problem.constraints.iter().enumerate() {
        match con.relation {
            Relation::Le => {
                lp.add_column(vec![(i, 1.0)], 0.0)?;
            }
            Relation::Ge => {
                lp.add_column(vec![(i, -1.0)], 0.0)?;
            }
            Relation::Eq => {}
        }
    }
    for k in 0..upper_rows.len() {
        lp.add_column(vec![(m_orig + k, 1.0)], 0.0)?;
    }

    let outcome = lp.optimize()?;
    let status = match outcome {
        Outcome::Optimal => Status::Optimal,
        Outcome::Infeasible => Status::Infeasible,
        Outcome::Unbounded => Status::Unbounded,
    };
    if status != Status::Optimal {
        return Ok(LpSolution {
            status,
            primal: vec![],
            duals: vec![],
            objective: if status == Status::Unbounded {
                -sign * f64::INFINITY
            } else {
                f64::NAN
            },
            iterations: lp.iterations(),
        });
    }
    let xs = lp.primal();
    let primal: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, lower } => lower + xs[col],
            VarMap::Mirrored { col, upper } => upper - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();
    let y = lp.duals();
    let duals = y[..m_orig].iter().map(|v| sign * v).collect();
    let objective = problem
        .objective
        .iter()
        .zip(&primal)
        .map(|(c, x)| c * x)
        .sum();
    log::debug!(
        "solved {}x{} program in {} pivots (internal offset {offset})",
        m_orig,
        n,
        lp.iterations()
    );
    Ok(LpSolution {
        status,
        primal,
        duals,
        objective,
        iterations: lp.iterations(),
    })
}
