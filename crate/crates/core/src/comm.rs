//! Minimal average communication as a linear program over deterministic
//! strategies, its dual (the optimal Bell inequality), and the program that
//! searches no-signalling rewritings of a given inequality.
//!
//! All three programs share one shape: a column per deterministic strategy
//! `λ`, obtained by applying a fixed row map `R` to `d^λ`, with cost `c_λ`.
//! Pricing a strategy against duals `y` amounts to evaluating the
//! inequality `Rᵀy` on it, so the exact class maximizer from
//! [`class_max_all`] serves as the column oracle. In `Lazy` mode columns are
//! generated on demand; in `Enumerate` mode all affordable strategies are
//! added up front.

use std::collections::HashSet;

use bellcomm_lp::{Column, Outcome, Phase, Simplex};
use rayon::prelude::*;

use crate::decomposition::{Decomposition, Term, SUPPORT_EPS};
use crate::error::{Error, Result};
use crate::inequalities::BellInequality;
use crate::scenario::{ConstraintSystem, CorrelationVector, Scenario, PROB_EPS};
use crate::strategies::{class_max_all, enumerate, strategy_count, CommClass, CostModel, DeterministicStrategy, ENUMERATION_CAP};

/// Pricing tolerance: generation stops once no strategy beats its cost by
/// more than this.
pub const VIOLATION_TOL: f64 = 1e-9;

const MAX_ROUNDS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Enumerate,
    Lazy,
}

impl Mode {
    /// `Enumerate` when the strategy count is within [`ENUMERATION_CAP`].
    pub fn auto(s: &Scenario) -> Self {
        if strategy_count(s) <= ENUMERATION_CAP {
            Mode::Enumerate
        } else {
            Mode::Lazy
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumerate" => Ok(Mode::Enumerate),
            "lazy" => Ok(Mode::Lazy),
            _ => Err(Error::Parse(format!("unknown mode `{s}` (expected enumerate or lazy)"))),
        }
    }
}

/// Row map `R`, stored by entry: `by_entry[i]` lists `(row, R[row][i])`.
struct RowMap {
    rows: usize,
    by_entry: Vec<Vec<(usize, f64)>>,
}

impl RowMap {
    fn from_dense(rows: &[Vec<f64>], n: usize) -> Self {
        let mut by_entry = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    by_entry[i].push((r, v));
                }
            }
        }
        Self { rows: rows.len(), by_entry }
    }

    fn column(&self, entries: [usize; 4]) -> Column {
        let mut acc: Vec<(usize, f64)> = Vec::with_capacity(8);
        for i in entries {
            for &(r, v) in &self.by_entry[i] {
                match acc.iter_mut().find(|(rr, _)| *rr == r) {
                    Some(slot) => slot.1 += v,
                    None => acc.push((r, v)),
                }
            }
        }
        acc
    }

    /// `Rᵀ y`.
    fn pull_back(&self, y: &[f64]) -> Vec<f64> {
        self.by_entry.iter().map(|col| col.iter().map(|&(r, v)| v * y[r]).sum()).collect()
    }
}

struct Master {
    lp: Simplex,
    strategies: Vec<DeterministicStrategy>,
    /// Simplex column index of `strategies[0]`.
    offset: usize,
    rounds: usize,
}

/// Builds and solves one strategy-column program to optimality.
fn solve_master(
    s: &Scenario,
    map: &RowMap,
    rhs: &[f64],
    extra: Vec<(Column, f64)>,
    cost: &CostModel,
    mode: Mode,
    initial: &[DeterministicStrategy],
) -> Result<Master> {
    debug_assert_eq!(map.rows, rhs.len());
    let mut lp = Simplex::new(rhs)?;
    let offset = extra.len();
    for (col, c) in extra {
        lp.add_column(col, c)?;
    }
    let mut strategies = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |lp: &mut Simplex, st: DeterministicStrategy, strategies: &mut Vec<DeterministicStrategy>| -> Result<()> {
        if seen.insert(st) {
            lp.add_column(map.column(st.entry_indices(s)), cost.cost(st.class()))?;
            strategies.push(st);
        }
        Ok(())
    };
    match mode {
        Mode::Enumerate => {
            let allowed: Vec<CommClass> = CommClass::ALL.into_iter().filter(|c| cost.allows(*c)).collect();
            for st in enumerate(s, Some(&allowed))? {
                push(&mut lp, st, &mut strategies)?;
            }
            log::debug!("enumerated {} strategy columns", strategies.len());
        }
        Mode::Lazy => {
            for &st in initial.iter().filter(|st| cost.allows(st.class())) {
                push(&mut lp, st, &mut strategies)?;
            }
        }
    }
    let mut rounds = 0;
    loop {
        let outcome = lp.optimize()?;
        if outcome == Outcome::Unbounded {
            return Err(Error::Unbounded("strategy program has an unbounded ray".into()));
        }
        if mode == Mode::Enumerate {
            if outcome == Outcome::Infeasible {
                return Err(Error::Infeasible(format!(
                    "no mixture of affordable strategies reproduces the target (residual mass {:.3e})",
                    lp.infeasibility()
                )));
            }
            break;
        }
        let w = map.pull_back(&lp.duals());
        let maxima = class_max_all(&w, s)?;
        let mut added = 0;
        let mut worst = f64::NEG_INFINITY;
        for class in CommClass::ALL {
            if !cost.allows(class) {
                continue;
            }
            let price = if lp.phase() == Phase::One { 0.0 } else { cost.cost(class) };
            let m = maxima[class.index()];
            let violation = m.value - price;
            worst = worst.max(violation);
            if violation > VIOLATION_TOL {
                let before = strategies.len();
                push(&mut lp, m.witness, &mut strategies)?;
                added += strategies.len() - before;
            }
        }
        log::debug!(
            "round {rounds}: phase {:?}, objective {:.12}, max violation {worst:.3e}, {added} new columns",
            lp.phase(),
            lp.objective()
        );
        if added == 0 {
            if outcome == Outcome::Infeasible {
                return Err(Error::Infeasible(format!(
                    "no mixture of affordable strategies reproduces the target (residual mass {:.3e})",
                    lp.infeasibility()
                )));
            }
            if worst > VIOLATION_TOL {
                log::warn!("column generation stalled on an existing column (violation {worst:.3e})");
            }
            break;
        }
        rounds += 1;
        if rounds >= MAX_ROUNDS {
            return Err(Error::Lp(bellcomm_lp::LpError::IterationLimit(lp.iterations())));
        }
        lp.reset_pricing();
    }
    Ok(Master { lp, strategies, offset, rounds })
}

/// Strategies mixing to `p` block by block: for every threshold `u ∈ [0,1)`
/// each block picks the outcome pair where its cumulative distribution (in
/// canonical entry order) first exceeds `u`. The breakpoints of all blocks
/// cut `[0,1)` into at most `4·d_A·d_B` intervals, one strategy each.
pub fn quantile_coupling(p: &CorrelationVector) -> Vec<(DeterministicStrategy, f64)> {
    let s = p.scenario();
    let block = s.block_len();
    let db = s.outcomes_b();
    let mut cuts: Vec<Vec<f64>> = Vec::with_capacity(4);
    for k in 0..s.blocks() {
        let mut acc = 0.0;
        let c = p.entries()[k * block..(k + 1) * block]
            .iter()
            .map(|v| {
                acc += v.max(0.0);
                acc
            })
            .collect();
        cuts.push(c);
    }
    let mut points: Vec<f64> = cuts.iter().flatten().copied().filter(|&v| v > 0.0 && v < 1.0).collect();
    points.push(0.0);
    points.push(1.0);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut out = Vec::new();
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let mut alpha = [0u16; 4];
        let mut beta = [0u16; 4];
        for (k, c) in cuts.iter().enumerate() {
            let j = c.iter().position(|&v| v > mid).unwrap_or(block - 1);
            alpha[k] = (j / db) as u16;
            beta[k] = (j % db) as u16;
        }
        out.push((DeterministicStrategy::new(alpha, beta), hi - lo));
    }
    out
}

/// Optimal average communication for `p`.
#[derive(Clone, Debug)]
pub struct MinComm {
    /// `Σ q_λ c_λ` at the optimum.
    pub value: f64,
    pub decomposition: Decomposition,
    /// Optimal inequality `b*` read from the duals; `b* · p = value` and
    /// `b* · d^λ ≤ c_λ` for every affordable strategy.
    pub inequality: BellInequality,
    /// `|value − b* · p|`.
    pub duality_gap: f64,
    pub iterations: usize,
    pub columns: usize,
    pub rounds: usize,
}

fn check_normalized(p: &CorrelationVector) -> Result<()> {
    let s = p.scenario();
    let block = s.block_len();
    for k in 0..s.blocks() {
        let sum: f64 = p.entries()[k * block..(k + 1) * block].iter().sum();
        if (sum - 1.0).abs() > PROB_EPS {
            return Err(Error::Infeasible(format!(
                "block (x,y) = ({}, {}) sums to {sum}; only normalized vectors are mixtures of strategies",
                k / s.settings_b(),
                k % s.settings_b()
            )));
        }
    }
    if let Some(i) = p.entries().iter().position(|v| *v < -PROB_EPS) {
        let (x, y, a, b) = s.coords(i);
        return Err(Error::Infeasible(format!("entry p[{x}][{y}][{a}][{b}] is negative")));
    }
    Ok(())
}

/// Solves `min Σ c_λ q_λ` subject to `Σ q_λ d^λ = p`, `q ≥ 0`.
///
/// The last entry of every block but the first is implied by normalization
/// and dropped from the rows, which keeps the system full rank; its dual is
/// zero.
pub fn min_comm(p: &CorrelationVector, cost: &CostModel, mode: Mode) -> Result<MinComm> {
    check_normalized(p)?;
    let s = p.scenario();
    let n = s.len();
    let block = s.block_len();
    let kept: Vec<usize> = (0..n).filter(|&i| i < block || (i + 1) % block != 0).collect();
    let rows: Vec<Vec<f64>> = kept
        .iter()
        .map(|&i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    let map = RowMap::from_dense(&rows, n);
    let rhs: Vec<f64> = kept.iter().map(|&i| p.entries()[i]).collect();
    let initial: Vec<DeterministicStrategy> = quantile_coupling(p).into_iter().map(|(st, _)| st).collect();
    let master = solve_master(s, &map, &rhs, Vec::new(), cost, mode, &initial)?;

    let y = master.lp.duals();
    let b_star = BellInequality::new(*s, map.pull_back(&y))?;
    let x = master.lp.primal();
    let terms: Vec<Term> = master
        .strategies
        .iter()
        .enumerate()
        .filter_map(|(k, st)| {
            let q = x[master.offset + k];
            (q > SUPPORT_EPS).then_some(Term { strategy: *st, weight: q })
        })
        .collect();
    let value = master.lp.objective();
    let decomposition = Decomposition::new(*s, terms)?;
    let duality_gap = (value - b_star.evaluate(p)?).abs();
    log::info!(
        "min_comm: {value:.9} bits, {} columns, {} pivots, {} generation rounds",
        master.strategies.len(),
        master.lp.iterations(),
        master.rounds
    );
    Ok(MinComm {
        value,
        decomposition,
        inequality: b_star,
        duality_gap,
        iterations: master.lp.iterations(),
        columns: master.strategies.len(),
        rounds: master.rounds,
    })
}

/// The normalized inequality whose violation by `p` equals `C̄(p)`.
pub fn optimal_inequality(p: &CorrelationVector, cost: &CostModel) -> Result<BellInequality> {
    Ok(min_comm(p, cost, Mode::auto(p.scenario()))?.inequality)
}

/// Upper bound on the multiplier of the original inequality.
pub const MU0_CAP: f64 = 1e6;

/// Best bound from rewritings `μ₀ b + Σ_j μ_j (g^j − G^j)` of an inequality.
#[derive(Clone, Debug)]
pub struct RewriteBound {
    pub value: f64,
    pub mu0: f64,
    /// One multiplier per independent constraint row.
    pub mu: Vec<f64>,
    /// `μ₀ b + Σ_j μ_j g^j`, whose value on any strategy is at most its
    /// cost.
    pub rewritten: BellInequality,
}

/// Maximizes `μ₀ B(p) + Σ_j μ_j G^j` over `0 ≤ μ₀ ≤ 10⁶` and free `μ_j`
/// subject to `(μ₀ b + Σ_j μ_j g^j) · d^λ ≤ c_λ` for every strategy, using
/// the independent rows of `constraints`.
///
/// Solved through its dual: strategy weights `q_λ ≥ 0` with
/// `Σ q_λ b·d^λ ≥ B(p)` and `Σ q_λ g^j·d^λ = G^j`, plus a slack priced at
/// `10⁶` for the cap on `μ₀`. The multipliers are the dual values.
pub fn facet_rewrite_bound(
    b: &BellInequality,
    p: &CorrelationVector,
    cost: &CostModel,
    constraints: &ConstraintSystem,
    mode: Mode,
) -> Result<RewriteBound> {
    let s = b.scenario();
    if p.scenario() != s || constraints.scenario() != s {
        return Err(Error::Shape { path: "scenario".into(), message: "inequality, correlations and constraints disagree".into() });
    }
    let n = s.len();
    let mut rows = vec![b.coeffs().to_vec()];
    let mut rhs = vec![b.evaluate(p)?];
    for row in constraints.independent_rows() {
        rows.push(row.coeffs.clone());
        rhs.push(row.target);
    }
    let map = RowMap::from_dense(&rows, n);
    let extra = vec![(vec![(0, 1.0)], MU0_CAP), (vec![(0, -1.0)], 0.0)];
    let initial: Vec<DeterministicStrategy> = if check_normalized(p).is_ok() {
        quantile_coupling(p).into_iter().map(|(st, _)| st).collect()
    } else {
        Vec::new()
    };
    let master = solve_master(s, &map, &rhs, extra, cost, mode, &initial)?;
    let y = master.lp.duals();
    let rewritten = BellInequality::new(*s, map.pull_back(&y))?;
    Ok(RewriteBound { value: master.lp.objective(), mu0: y[0], mu: y[1..].to_vec(), rewritten })
}

/// [`facet_rewrite_bound`] for several inequalities in parallel.
pub fn facet_rewrite_bounds(
    inequalities: &[BellInequality],
    p: &CorrelationVector,
    cost: &CostModel,
    constraints: &ConstraintSystem,
    mode: Mode,
) -> Result<Vec<RewriteBound>> {
    inequalities.par_iter().map(|b| facet_rewrite_bound(b, p, cost, constraints, mode)).collect()
}
