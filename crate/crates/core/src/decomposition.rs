//! Mixtures of deterministic strategies as executable protocols: average
//! cost, the explicit CHSH protocol built from the sixteen strategies that
//! saturate the local and one-bit bounds, and Monte-Carlo simulation.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequalities::BellInequality;
use crate::scenario::{validate, CorrelationVector, Scenario};
use crate::strategies::{CommClass, CostModel, DeterministicStrategy};

/// Weights below this are dropped when reading off an LP solution.
pub const SUPPORT_EPS: f64 = 1e-10;

const WEIGHT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub strategy: DeterministicStrategy,
    pub weight: f64,
}

/// `p = Σ q_λ d^λ` as a list of weighted strategies.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    scenario: Scenario,
    terms: Vec<Term>,
}

impl Decomposition {
    pub fn new(scenario: Scenario, terms: Vec<Term>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.weight.is_nan() || t.weight < 0.0 || t.weight > 1.0 + WEIGHT_TOL {
                return Err(Error::Decomposition(format!("term {i} has weight {} outside [0, 1]", t.weight)));
            }
            if !t.strategy.fits(&scenario) {
                return Err(Error::Decomposition(format!("term {i} uses outcomes outside the scenario")));
            }
        }
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Decomposition(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { scenario, terms })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// `Σ q_λ d^λ`.
    pub fn correlation(&self) -> CorrelationVector {
        let mut p = vec![0.0; self.scenario.len()];
        for t in &self.terms {
            for i in t.strategy.entry_indices(&self.scenario) {
                p[i] += t.weight;
            }
        }
        CorrelationVector::from_entries(self.scenario, p).expect("scenario-shaped")
    }

    /// Largest entrywise deviation of `Σ q_λ d^λ` from `p`.
    pub fn residual(&self, p: &CorrelationVector) -> f64 {
        self.correlation().entries().iter().zip(p.entries()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `Σ q_λ c_{class(λ)}`; `+∞` if a term with positive weight belongs to a
    /// forbidden class.
    pub fn avg_cost(&self, cost: &CostModel) -> f64 {
        self.terms.iter().filter(|t| t.weight > 0.0).map(|t| t.weight * cost.cost(t.strategy.class())).sum()
    }

    /// Total weight per class.
    pub fn class_weights(&self) -> [f64; 4] {
        let mut w = [0.0; 4];
        for t in &self.terms {
            w[t.strategy.class().index()] += t.weight;
        }
        w
    }
}

/// The eight local strategies with CHSH value 2. Rows are the entries
/// `d_{ab|xy}` in the order `ab = 00, 10, 01, 11` within blocks
/// `xy = 00, 10, 01, 11`; columns are the strategies.
pub const TABLE_LOCAL: [[u8; 8]; 16] = [
    [1, 1, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 1, 1],
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 1, 1, 0, 0],
    [0, 0, 1, 1, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
    [1, 1, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 1, 1],
    [1, 0, 1, 1, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 1, 1, 0, 1],
];

/// The eight one-bit strategies with CHSH value 4, same layout as
/// [`TABLE_LOCAL`].
pub const TABLE_ONE_BIT: [[u8; 8]; 16] = [
    [1, 0, 1, 0, 1, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 1, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 1, 1, 0, 1, 0],
    [1, 1, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 1, 0, 0, 1, 1],
    [1, 1, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 1, 0, 0, 1, 1],
];

/// `(x, y, a, b)` of a table row.
pub fn table_row_coords(row: usize) -> (usize, usize, usize, usize) {
    let block = row / 4;
    let (x, y) = [(0, 0), (1, 0), (0, 1), (1, 1)][block];
    (x, y, row & 1, (row >> 1) & 1)
}

/// Reads column `col` of a table as a strategy. Panics if the column is not
/// one-hot per block (checked by tests).
pub fn table_strategy(table: &[[u8; 8]; 16], col: usize) -> DeterministicStrategy {
    let mut alpha = [0u16; 4];
    let mut beta = [0u16; 4];
    for (row, r) in table.iter().enumerate() {
        if r[col] == 1 {
            let (x, y, a, b) = table_row_coords(row);
            alpha[2 * x + y] = a as u16;
            beta[2 * x + y] = b as u16;
        }
    }
    DeterministicStrategy::new(alpha, beta)
}

/// Sixteen-term CHSH protocol: each local strategy gets the probability of
/// the unique minus-sign entry it covers, each one-bit strategy gets
/// `(B(p) − 2)/16`. Average cost `B(p)/2 − 1`.
pub fn prop4_protocol(p: &CorrelationVector) -> Result<Decomposition> {
    let s = Scenario::symmetric(2)?;
    if p.scenario() != &s {
        return Err(Error::Precondition("the CHSH protocol needs two outcomes per side".into()));
    }
    let report = validate(p);
    if !report.is_valid() {
        return Err(Error::Precondition(format!(
            "p must be a normalized no-signalling probability vector (normalization residual {:.3e}, no-signalling residual {:.3e})",
            report.max_normalization_residual(),
            report.max_no_signalling_residual()
        )));
    }
    let chsh = BellInequality::chsh(2)?;
    let value = chsh.evaluate(p)?;
    if value < 2.0 - WEIGHT_TOL {
        return Err(Error::Precondition(format!("CHSH value {value} is below the local bound 2")));
    }
    let q1 = ((value - 2.0) / 16.0).max(0.0);
    let mut terms = Vec::with_capacity(16);
    for col in 0..8 {
        let strategy = table_strategy(&TABLE_LOCAL, col);
        let minus = strategy
            .entry_indices(&s)
            .into_iter()
            .find(|&i| chsh.coeffs()[i] < 0.0)
            .expect("each local column covers one minus entry");
        terms.push(Term { strategy, weight: p.entries()[minus].max(0.0) });
    }
    for col in 0..8 {
        terms.push(Term { strategy: table_strategy(&TABLE_ONE_BIT, col), weight: q1 });
    }
    let dec = Decomposition::new(s, terms)?;
    let residual = dec.residual(p);
    if residual > WEIGHT_TOL {
        return Err(Error::Decomposition(format!("reconstruction residual {residual:.3e}")));
    }
    Ok(dec)
}

/// Bits sent when running `strategy` on inputs `(x, y)`.
///
/// Class 2 runs the two-round protocol: the party with exactly one
/// non-constant function (Alice if both qualify) sends its input, and the
/// other replies only when that input is the non-constant setting.
pub fn protocol_bits(strategy: &DeterministicStrategy, x: usize, y: usize) -> u32 {
    match strategy.class() {
        CommClass::Local => 0,
        CommClass::OneWay => 1,
        CommClass::TwoWay => 2,
        CommClass::TwoRound => {
            let (na, _) = strategy.nonconstant_counts();
            let a = strategy.alpha_table();
            let b = strategy.beta_table();
            if na == 1 {
                let xbar = if a[0] != a[1] { 0 } else { 1 };
                1 + (x == xbar) as u32
            } else {
                let ybar = if b[0] != b[2] { 0 } else { 1 };
                1 + (y == ybar) as u32
            }
        }
    }
}

/// Expected bits of `strategy` under input distribution `inputs` (indexed
/// `2x + y`).
pub fn expected_bits(strategy: &DeterministicStrategy, inputs: &[f64; 4]) -> f64 {
    (0..4).map(|k| inputs[k] * protocol_bits(strategy, k / 2, k % 2) as f64).sum()
}

pub const UNIFORM_INPUTS: [f64; 4] = [0.25; 4];

const CHUNK: u64 = 1 << 16;

#[derive(Clone, Debug)]
struct Tally {
    counts: Vec<u64>,
    input_counts: [u64; 4],
    bits: f64,
    bits_sq: f64,
    uniform: f64,
    uniform_sq: f64,
}

impl Tally {
    fn new(n: usize) -> Self {
        Self { counts: vec![0; n], input_counts: [0; 4], bits: 0.0, bits_sq: 0.0, uniform: 0.0, uniform_sq: 0.0 }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        for k in 0..4 {
            self.input_counts[k] += other.input_counts[k];
        }
        self.bits += other.bits;
        self.bits_sq += other.bits_sq;
        self.uniform += other.uniform;
        self.uniform_sq += other.uniform_sq;
        self
    }
}

/// Empirical statistics of a simulation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub runs: u64,
    /// Mean bits exchanged under the sampled inputs.
    pub empirical_cost: f64,
    pub stderr: f64,
    /// Mean over runs of the sampled strategy's expected bits under uniform
    /// inputs, which is what the cost model accounts.
    pub uniform_cost: f64,
    pub uniform_stderr: f64,
    /// Largest `|p̂ − Σ q d|` over entries whose input pair was sampled.
    pub entry_max_dev: f64,
    /// Conditional frequencies `p̂_{ab|xy}` in canonical order; `NaN` for
    /// input pairs never drawn.
    pub empirical_p: Vec<f64>,
    pub input_counts: [u64; 4],
}

/// Runs the protocol `runs` times: each run draws a strategy from the
/// weights (shared randomness) and an input pair from `inputs`, then
/// records outputs and transmitted bits. Work is split into fixed-size
/// chunks, each with its own ChaCha stream, so results do not depend on the
/// thread count.
pub fn simulate(dec: &Decomposition, inputs: &[f64; 4], runs: u64, seed: u64) -> Result<SimulationSummary> {
    if runs == 0 {
        return Err(Error::Precondition("runs must be at least 1".into()));
    }
    let total: f64 = inputs.iter().sum();
    if inputs.iter().any(|w| w.is_nan() || *w < 0.0) || (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Precondition("input distribution must be nonnegative and sum to 1".into()));
    }
    let s = dec.scenario();
    let terms = dec.terms();
    let pick = WeightedIndex::new(terms.iter().map(|t| t.weight))
        .map_err(|e| Error::Decomposition(format!("cannot sample strategies: {e}")))?;
    let input_pick = WeightedIndex::new(inputs).map_err(|e| Error::Precondition(e.to_string()))?;
    let uniform_bits: Vec<f64> = terms.iter().map(|t| expected_bits(&t.strategy, &UNIFORM_INPUTS)).collect();
    let indices: Vec<[usize; 4]> = terms.iter().map(|t| t.strategy.entry_indices(s)).collect();
    let chunks = runs.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(runs - c * CHUNK);
            let mut t = Tally::new(s.len());
            for _ in 0..n {
                let l = pick.sample(&mut rng);
                let k = input_pick.sample(&mut rng);
                let bits = protocol_bits(&terms[l].strategy, k / 2, k % 2) as f64;
                t.counts[indices[l][k]] += 1;
                t.input_counts[k] += 1;
                t.bits += bits;
                t.bits_sq += bits * bits;
                t.uniform += uniform_bits[l];
                t.uniform_sq += uniform_bits[l] * uniform_bits[l];
            }
            t
        })
        .reduce(|| Tally::new(s.len()), Tally::merge);

    let n = runs as f64;
    let mean_stderr = |sum: f64, sq: f64| {
        let mean = sum / n;
        let var = if runs > 1 { ((sq / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
        (mean, (var / n).sqrt())
    };
    let (empirical_cost, stderr) = mean_stderr(tally.bits, tally.bits_sq);
    let (uniform_cost, uniform_stderr) = mean_stderr(tally.uniform, tally.uniform_sq);
    let target = dec.correlation();
    let block = s.block_len();
    let mut empirical_p = vec![f64::NAN; s.len()];
    let mut entry_max_dev = 0.0_f64;
    for (i, v) in empirical_p.iter_mut().enumerate() {
        let k = i / block;
        if tally.input_counts[k] > 0 {
            *v = tally.counts[i] as f64 / tally.input_counts[k] as f64;
            entry_max_dev = entry_max_dev.max((*v - target.entries()[i]).abs());
        }
    }
    Ok(SimulationSummary {
        runs,
        empirical_cost,
        stderr,
        uniform_cost,
        uniform_stderr,
        entry_max_dev,
        empirical_p,
        input_counts: tally.input_counts,
    })
}
