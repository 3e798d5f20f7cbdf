//! Measurement scenarios, correlation vectors, and the linear constraint
//! system (normalization and no-signalling) shared by every other module.
//!
//! Entries are always flattened row-major over `[x][y][a][b]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating probabilities.
pub const PROB_EPS: f64 = 1e-9;

/// Pivot threshold for numerical rank reduction.
pub const PIVOT_EPS: f64 = 1e-10;

/// Keeps every table allocation modest (strategy tables use `u16`).
pub const MAX_OUTCOMES: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    settings_a: usize,
    settings_b: usize,
    outcomes_a: usize,
    outcomes_b: usize,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct RawScenario {
    settings_a: usize,
    settings_b: usize,
    outcomes_a: usize,
    outcomes_b: usize,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(r: RawScenario) -> Result<Self> {
        Scenario::new(r.settings_a, r.settings_b, r.outcomes_a, r.outcomes_b)
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario {
            settings_a: s.settings_a,
            settings_b: s.settings_b,
            outcomes_a: s.outcomes_a,
            outcomes_b: s.outcomes_b,
        }
    }
}

impl Scenario {
    /// Only two settings per side are supported; the fields stay general so
    /// that the file format does not change if that restriction is lifted.
    pub fn new(settings_a: usize, settings_b: usize, outcomes_a: usize, outcomes_b: usize) -> Result<Self> {
        if settings_a != 2 || settings_b != 2 {
            return Err(Error::Scenario(format!(
                "only two settings per side are supported, got ({settings_a}, {settings_b})"
            )));
        }
        if outcomes_a < 2 || outcomes_b < 2 {
            return Err(Error::Scenario(format!(
                "each measurement needs at least two outcomes, got ({outcomes_a}, {outcomes_b})"
            )));
        }
        if outcomes_a > MAX_OUTCOMES || outcomes_b > MAX_OUTCOMES {
            return Err(Error::Scenario(format!(
                "at most {MAX_OUTCOMES} outcomes per measurement are supported, got ({outcomes_a}, {outcomes_b})"
            )));
        }
        Ok(Self { settings_a, settings_b, outcomes_a, outcomes_b })
    }

    /// Two settings and `d` outcomes on both sides.
    pub fn symmetric(d: usize) -> Result<Self> {
        Self::new(2, 2, d, d)
    }

    pub fn settings_a(&self) -> usize {
        self.settings_a
    }

    pub fn settings_b(&self) -> usize {
        self.settings_b
    }

    pub fn outcomes_a(&self) -> usize {
        self.outcomes_a
    }

    pub fn outcomes_b(&self) -> usize {
        self.outcomes_b
    }

    /// Number of input pairs `(x, y)`.
    pub fn blocks(&self) -> usize {
        self.settings_a * self.settings_b
    }

    /// Number of entries per `(x, y)` block.
    pub fn block_len(&self) -> usize {
        self.outcomes_a * self.outcomes_b
    }

    /// Total number of entries `p_{ab|xy}`.
    pub fn len(&self) -> usize {
        self.blocks() * self.block_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.settings_b + y) * self.outcomes_a + a) * self.outcomes_b + b
    }

    /// Inverse of [`Scenario::index`].
    pub fn coords(&self, idx: usize) -> (usize, usize, usize, usize) {
        let b = idx % self.outcomes_b;
        let rest = idx / self.outcomes_b;
        let a = rest % self.outcomes_a;
        let rest = rest / self.outcomes_a;
        (rest / self.settings_b, rest % self.settings_b, a, b)
    }
}

/// The table `p_{ab|xy}` for a fixed scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationVector {
    scenario: Scenario,
    entries: Vec<f64>,
}

impl CorrelationVector {
    /// Wraps a flat entry vector. Only the length is checked here; use
    /// [`validate`] for the probabilistic constraints.
    pub fn from_entries(scenario: Scenario, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != scenario.len() {
            return Err(Error::Shape {
                path: "p".into(),
                message: format!("expected {} entries, found {}", scenario.len(), entries.len()),
            });
        }
        Ok(Self { scenario, entries })
    }

    /// Builds from a nested `[x][y][a][b]` array, reporting the first index
    /// whose length is wrong.
    pub fn from_nested(scenario: Scenario, nested: &[Vec<Vec<Vec<f64>>>]) -> Result<Self> {
        let entries = flatten_nested(&scenario, nested, "p")?;
        Ok(Self { scenario, entries })
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let v = 1.0 / scenario.block_len() as f64;
        Self { scenario, entries: vec![v; scenario.len()] }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.entries[self.scenario.index(x, y, a, b)]
    }

    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, value: f64) {
        let i = self.scenario.index(x, y, a, b);
        self.entries[i] = value;
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        nest(&self.scenario, &self.entries)
    }

    /// Convex combination `(1-t)·self + t·other`.
    pub fn mix(&self, other: &CorrelationVector, t: f64) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::Shape {
                path: "p".into(),
                message: "cannot mix correlations from different scenarios".into(),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Ok(Self { scenario: self.scenario, entries })
    }
}

pub(crate) fn flatten_nested(
    scenario: &Scenario,
    nested: &[Vec<Vec<Vec<f64>>>],
    name: &str,
) -> Result<Vec<f64>> {
    let mismatch = |path: String, expected: usize, found: usize| Error::Shape {
        path,
        message: format!("expected {expected} entries, found {found}"),
    };
    if nested.len() != scenario.settings_a() {
        return Err(mismatch(name.into(), scenario.settings_a(), nested.len()));
    }
    let mut out = Vec::with_capacity(scenario.len());
    for (x, by_y) in nested.iter().enumerate() {
        if by_y.len() != scenario.settings_b() {
            return Err(mismatch(format!("{name}[{x}]"), scenario.settings_b(), by_y.len()));
        }
        for (y, by_a) in by_y.iter().enumerate() {
            if by_a.len() != scenario.outcomes_a() {
                return Err(mismatch(format!("{name}[{x}][{y}]"), scenario.outcomes_a(), by_a.len()));
            }
            for (a, by_b) in by_a.iter().enumerate() {
                if by_b.len() != scenario.outcomes_b() {
                    return Err(mismatch(
                        format!("{name}[{x}][{y}][{a}]"),
                        scenario.outcomes_b(),
                        by_b.len(),
                    ));
                }
                for (b, &v) in by_b.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::Shape {
                            path: format!("{name}[{x}][{y}][{a}][{b}]"),
                            message: "entry is not a finite number".into(),
                        });
                    }
                    out.push(v);
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn nest(s: &Scenario, flat: &[f64]) -> Vec<Vec<Vec<Vec<f64>>>> {
    (0..s.settings_a())
        .map(|x| {
            (0..s.settings_b())
                .map(|y| {
                    (0..s.outcomes_a())
                        .map(|a| (0..s.outcomes_b()).map(|b| flat[s.index(x, y, a, b)]).collect())
                        .collect()
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    /// `Σ_{ab} p_{ab|xy} = 1`
    Normalization { x: usize, y: usize },
    /// `Σ_b p_{ab|x,0} − Σ_b p_{ab|x,y} = 0`
    NoSignallingA { x: usize, a: usize, y: usize },
    /// `Σ_a p_{ab|0,y} − Σ_a p_{ab|x,y} = 0`
    NoSignallingB { y: usize, b: usize, x: usize },
}

impl std::fmt::Display for RowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            RowKind::Normalization { x, y } => write!(f, "normalization(x={x},y={y})"),
            RowKind::NoSignallingA { x, a, y } => write!(f, "no-signalling-A(x={x},a={a},y=0 vs {y})"),
            RowKind::NoSignallingB { y, b, x } => write!(f, "no-signalling-B(y={y},b={b},x=0 vs {x})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintRow {
    pub coeffs: Vec<f64>,
    pub target: f64,
    pub kind: RowKind,
}

impl ConstraintRow {
    pub fn residual(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - self.target
    }
}

/// Normalization and no-signalling rows `g^j · p = G^j`.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    scenario: Scenario,
    rows: Vec<ConstraintRow>,
    independent: Vec<usize>,
}

impl ConstraintSystem {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Every raw row, normalization first.
    pub fn rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    /// Indices (into [`Self::rows`]) of a linearly independent subset
    /// spanning the same space.
    pub fn independent(&self) -> &[usize] {
        &self.independent
    }

    pub fn independent_rows(&self) -> impl Iterator<Item = &ConstraintRow> {
        self.independent.iter().map(move |&i| &self.rows[i])
    }

    pub fn rank(&self) -> usize {
        self.independent.len()
    }

    /// Dimension of the affine subspace cut out by the constraints.
    pub fn affine_hull_dim(&self) -> usize {
        self.scenario.len() - self.rank()
    }
}

pub fn build_constraints(s: &Scenario) -> ConstraintSystem {
    let n = s.len();
    let mut rows = Vec::new();
    for x in 0..s.settings_a() {
        for y in 0..s.settings_b() {
            let mut g = vec![0.0; n];
            for a in 0..s.outcomes_a() {
                for b in 0..s.outcomes_b() {
                    g[s.index(x, y, a, b)] = 1.0;
                }
            }
            rows.push(ConstraintRow { coeffs: g, target: 1.0, kind: RowKind::Normalization { x, y } });
        }
    }
    for x in 0..s.settings_a() {
        for y in 1..s.settings_b() {
            for a in 0..s.outcomes_a() {
                let mut g = vec![0.0; n];
                for b in 0..s.outcomes_b() {
                    g[s.index(x, 0, a, b)] += 1.0;
                    g[s.index(x, y, a, b)] -= 1.0;
                }
                rows.push(ConstraintRow { coeffs: g, target: 0.0, kind: RowKind::NoSignallingA { x, a, y } });
            }
        }
    }
    for y in 0..s.settings_b() {
        for x in 1..s.settings_a() {
            for b in 0..s.outcomes_b() {
                let mut g = vec![0.0; n];
                for a in 0..s.outcomes_a() {
                    g[s.index(0, y, a, b)] += 1.0;
                    g[s.index(x, y, a, b)] -= 1.0;
                }
                rows.push(ConstraintRow { coeffs: g, target: 0.0, kind: RowKind::NoSignallingB { y, b, x } });
            }
        }
    }
    let independent = independent_subset(rows.iter().map(|r| r.coeffs.as_slice()));
    ConstraintSystem { scenario: *s, rows, independent }
}

/// Greedy row selection by partial-pivot elimination: a row is kept when its
/// remainder against the rows kept so far has an entry above [`PIVOT_EPS`].
pub fn independent_subset<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut kept = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        let mut r = row.to_vec();
        for (pc, brow) in &basis {
            let f = r[*pc];
            if f != 0.0 {
                for (a, b) in r.iter_mut().zip(brow) {
                    *a -= f * b;
                }
            }
        }
        let (pc, pv) = r
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pv > PIVOT_EPS {
            let piv = r[pc];
            for v in r.iter_mut() {
                *v /= piv;
            }
            basis.push((pc, r));
            kept.push(i);
        }
    }
    kept
}

/// Numerical rank of a set of rows.
pub fn numerical_rank<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> usize {
    independent_subset(rows).len()
}

#[derive(Clone, Debug)]
pub struct Residual {
    pub kind: RowKind,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RangeViolation {
    pub index: (usize, usize, usize, usize),
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub normalization: Vec<Residual>,
    pub no_signalling: Vec<Residual>,
    pub out_of_range: Vec<RangeViolation>,
    pub normalized: bool,
    pub no_signalling_ok: bool,
    pub within_range: bool,
}

impl ValidationReport {
    /// Constraints whose residual exceeds the tolerance.
    pub fn violations(&self) -> Vec<&Residual> {
        self.normalization
            .iter()
            .chain(&self.no_signalling)
            .filter(|r| r.value.abs() > PROB_EPS)
            .collect()
    }

    pub fn max_normalization_residual(&self) -> f64 {
        self.normalization.iter().map(|r| r.value.abs()).fold(0.0, f64::max)
    }

    pub fn max_no_signalling_residual(&self) -> f64 {
        self.no_signalling.iter().map(|r| r.value.abs()).fold(0.0, f64::max)
    }

    pub fn is_valid(&self) -> bool {
        self.normalized && self.within_range
    }
}

pub fn validate(p: &CorrelationVector) -> ValidationReport {
    let s = p.scenario();
    let sys = build_constraints(s);
    let mut normalization = Vec::new();
    let mut no_signalling = Vec::new();
    for row in sys.rows() {
        let r = Residual { kind: row.kind, value: row.residual(p.entries()) };
        match row.kind {
            RowKind::Normalization { .. } => normalization.push(r),
            _ => no_signalling.push(r),
        }
    }
    let out_of_range: Vec<RangeViolation> = p
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, &v)| !(-PROB_EPS..=1.0 + PROB_EPS).contains(&v))
        .map(|(i, &v)| RangeViolation { index: s.coords(i), value: v })
        .collect();
    let normalized = normalization.iter().all(|r| r.value.abs() <= PROB_EPS);
    let no_signalling_ok = no_signalling.iter().all(|r| r.value.abs() <= PROB_EPS);
    ValidationReport {
        within_range: out_of_range.is_empty(),
        normalization,
        no_signalling,
        out_of_range,
        normalized,
        no_signalling_ok,
    }
}

/// Conditional marginals.
#[derive(Clone, Debug)]
pub struct Marginals {
    /// `alice[x][y][a] = Σ_b p_{ab|xy}`
    pub alice: Vec<Vec<Vec<f64>>>,
    /// `bob[x][y][b] = Σ_a p_{ab|xy}`
    pub bob: Vec<Vec<Vec<f64>>>,
}

impl Marginals {
    /// Largest spread of Alice's marginal across Bob's setting, and vice versa.
    pub fn signalling_spread(&self) -> (f64, f64) {
        let spread = |t: &Vec<Vec<Vec<f64>>>, outer_is_x: bool| {
            let mut worst = 0.0_f64;
            let nx = t.len();
            let ny = t[0].len();
            let k = t[0][0].len();
            if outer_is_x {
                for x in 0..nx {
                    for o in 0..k {
                        for y in 1..ny {
                            worst = worst.max((t[x][y][o] - t[x][0][o]).abs());
                        }
                    }
                }
            } else {
                for y in 0..ny {
                    for o in 0..k {
                        for x in 1..nx {
                            worst = worst.max((t[x][y][o] - t[0][y][o]).abs());
                        }
                    }
                }
            }
            worst
        };
        (spread(&self.alice, true), spread(&self.bob, false))
    }
}

pub fn marginals(p: &CorrelationVector) -> Marginals {
    let s = p.scenario();
    let mut alice = vec![vec![vec![0.0; s.outcomes_a()]; s.settings_b()]; s.settings_a()];
    let mut bob = vec![vec![vec![0.0; s.outcomes_b()]; s.settings_b()]; s.settings_a()];
    for x in 0..s.settings_a() {
        for y in 0..s.settings_b() {
            for a in 0..s.outcomes_a() {
                for b in 0..s.outcomes_b() {
                    let v = p.get(x, y, a, b);
                    alice[x][y][a] += v;
                    bob[x][y][b] += v;
                }
            }
        }
    }
    Marginals { alice, bob }
}
